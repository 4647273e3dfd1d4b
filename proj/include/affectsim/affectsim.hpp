#pragma once

#include "affect_core.hpp"
#include "agents.hpp"
#include "cli.hpp"
#include "corpus.hpp"
#include "experiments.hpp"
#include "report.hpp"
#include "sampling.hpp"
#include "scorer.hpp"
#include "stats.hpp"
