// Acceptance suite: one PASS/FAIL line per criterion, non-zero exit on any failure.

#include <chrono>
#include <cstdio>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <affectsim/affectsim.hpp>

#include "helpers.hpp"
#include "oracles.hpp"

using namespace affectsim;
using testing_support::TempDir;

namespace {

// Collects failure reasons for one criterion.
struct Check {
    std::vector<std::string> failures;
    void expect(bool ok, const std::string& what) {
        if (!ok) failures.push_back(what);
    }
    void near(double got, double want, double tol, const std::string& what) {
        if (!(std::abs(got - want) <= tol)) {
            std::ostringstream os;
            os.precision(17);
            os << what << ": got " << got << " want " << want;
            failures.push_back(os.str());
        }
    }
};

int failed_criteria = 0;

void criterion(const std::string& name, double budget_seconds, const std::function<void(Check&)>& body) {
    Check c;
    const auto t0 = std::chrono::steady_clock::now();
    try {
        body(c);
    } catch (const std::exception& e) {
        c.failures.push_back(std::string("exception: ") + e.what());
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (secs > budget_seconds) {
        char buf[96];
        std::snprintf(buf, sizeof buf, "runtime %.3fs exceeds %.0fs", secs, budget_seconds);
        c.failures.push_back(buf);
    }
    const bool ok = c.failures.empty();
    failed_criteria += ok ? 0 : 1;
    std::printf("%s  %-34s (%.3fs)\n", ok ? "PASS" : "FAIL", name.c_str(), secs);
    const std::size_t shown = std::min<std::size_t>(c.failures.size(), 10);
    for (std::size_t i = 0; i < shown; ++i) std::printf("        - %s\n", c.failures[i].c_str());
    if (c.failures.size() > shown) std::printf("        - ... %zu more\n", c.failures.size() - shown);
    std::fflush(stdout);
}

std::string csv_row(const std::string& csv, std::size_t index) {
    std::istringstream in(csv);
    std::string line;
    for (std::size_t i = 0; i <= index && std::getline(in, line); ++i) {
    }
    return line;
}

std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::string cur;
    for (char ch : s) {
        if (ch == sep) {
            out.push_back(cur);
            cur.clear();
        } else {
            cur.push_back(ch);
        }
    }
    out.push_back(cur);
    return out;
}

// Reply text carries the agent's prompted VA at full precision so a scorer can see it.
BackendFactory echo_prompted_factory() {
    return [](const AgentSpec& spec, const std::string&) {
        char buf[96];
        std::snprintf(buf, sizeof buf, "prompted %.17g %.17g", spec.state.va().valence(), spec.state.va().arousal());
        MockProfile p{spec.state.va()};
        p.reply_template = buf;
        return mock_backend(p);
    };
}

// Mock scorer returning prompted valence + 0.2 and prompted arousal - 0.2 (clamped).
class ShiftedScorer final : public ScoringBackend {
public:
    std::vector<VAPoint> score_batch(const std::vector<std::string>& texts) override {
        std::vector<VAPoint> out;
        for (const auto& t : texts) {
            double v = 0, a = 0;
            if (std::sscanf(t.c_str(), "prompted %lf %lf", &v, &a) != 2) throw ScoringError("unexpected text: " + t);
            out.push_back(VAPoint::clamped(v + 0.2, a - 0.2));
        }
        return out;
    }
    std::string identity() const override { return "shifted"; }
};

const std::array<std::string, 5> kValence{"Very negative (unpleasant)", "Negative (unsatisfied)", "Neutral",
                                          "Positive (pleased)", "Very positive (pleasant)"};
const std::array<std::string, 5> kArousal{"Very calm", "Calm (dull)", "Moderate (neutral)", "Excited (wide-awake)",
                                          "Very excited"};
const std::array<std::array<std::string, 5>, 5> kGreeting{{
    {"Oh... it's you again. Why bother?", "Hi. Whatever. Let's get this over with.",
     "What now? I hope this doesn't take long.", "Great. Just what I needed. More trouble.",
     "Oh, fantastic! Another disaster waiting to happen!"},
    {"Hello. This isn't quite what I expected.", "Hi. Not great, but let's move on.",
     "Well, this could've been better. Let's see.", "Oh, come on! This is disappointing!",
     "Really?! This is the best we can do?!"},
    {"Hello there. How are you?", "Hi. What's going on?", "Hey. What's up?", "Hello! What's happening?",
     "Hi! How's everything going?!"},
    {"Hello. It's nice to see you.", "Hi. Good to see you.", "Hey, nice! Let's get started.",
     "Hi there! This is going to be great!", "Hello! I'm so glad you're here!"},
    {"Hello. It's wonderful to have you here.", "Hi. Great to see you.", "Hey! This is awesome!",
     "Hi there! This is fantastic!", "Hello! Wow, I'm thrilled you're here!"},
}};

} // namespace

int main() {
    std::printf("affectsim acceptance suite\n");

    criterion("SAM table exactness", 1.0, [](Check& c) {
        for (int k = 1; k <= 5; ++k) {
            const auto lvl = SamLevel::of_index(k);
            c.expect(lvl.valence_desc == kValence[k - 1], "valence desc " + std::to_string(k));
            c.expect(lvl.arousal_desc == kArousal[k - 1], "arousal desc " + std::to_string(k));
        }
        // 3 probes per bin, lower edges included.
        const std::vector<std::pair<double, int>> probes{{0.0, 1}, {0.1, 1}, {0.199, 1}, {0.2, 2}, {0.3, 2},
                                                         {0.399, 2}, {0.4, 3}, {0.5, 3}, {0.599, 3}, {0.6, 4},
                                                         {0.7, 4}, {0.799, 4}, {0.8, 5}, {0.9, 5}, {1.0, 5}};
        for (auto [x, level] : probes) {
            c.expect(sam_level_of(x, Dimension::valence).index == level, "valence probe " + std::to_string(x));
            c.expect(sam_level_of(x, Dimension::arousal).index == level, "arousal probe " + std::to_string(x));
        }
    });

    criterion("Greeting exactness", 1.0, [](Check& c) {
        for (int v = 1; v <= 5; ++v) {
            for (int a = 1; a <= 5; ++a) {
                c.expect(greeting_for({v, a}) == kGreeting[v - 1][a - 1],
                         "greeting (" + std::to_string(v) + "," + std::to_string(a) + ")");
            }
        }
        c.expect(greeting_for({1, 1}) == "Oh... it's you again. Why bother?", "cell(1,1)");
    });

    criterion("Statistics oracle suite", 30.0, [](Check& c) {
        std::mt19937_64 rng(20250223);
        std::uniform_int_distribution<int> small(0, 4);
        auto sample = [&](std::size_t n) {
            std::vector<double> v(n);
            for (auto& x : v) x = small(rng);
            return v;
        };
        int spearman_checked = 0;
        for (int i = 0; spearman_checked < 25 && i < 500; ++i) {
            const std::size_t n = 3 + static_cast<std::size_t>(i % 10);
            const auto x = sample(n), y = sample(n);
            try {
                c.near(stats::spearman(x, y), oracle::spearman(x, y), 1e-9, "spearman");
                ++spearman_checked;
            } catch (const stats::UndefinedCorrelation&) {
            }
        }
        c.expect(spearman_checked >= 20, "spearman instances");
        for (int i = 0; i < 25; ++i) {
            const std::size_t n1 = 1 + static_cast<std::size_t>(i % 6), n2 = 1 + static_cast<std::size_t>((i * 7) % 6);
            const auto a = sample(n1), b = sample(n2);
            const auto mw = stats::mann_whitney_u(a, b);
            c.near(mw.u_a, oracle::u_pairs(a, b), 1e-9, "U");
            c.near(mw.variance, oracle::permutation_variance_u(a, b), 1e-9, "var U");
            if (mw.variance > 0) {
                const double dev = std::max(0.0, std::abs(mw.u_a - static_cast<double>(n1 * n2) / 2.0) - 0.5);
                c.near(mw.p, oracle::two_sided_p(dev / std::sqrt(mw.variance)), 1e-9, "MWU p");
            }
        }
        std::uniform_real_distribution<double> r(-0.95, 0.95);
        std::uniform_int_distribution<int> nn(4, 300);
        for (int i = 0; i < 25; ++i) {
            const double r1 = r(rng), r2 = r(rng);
            const int n1 = nn(rng), n2 = nn(rng);
            const auto t = stats::fisher_z_compare(r1, static_cast<std::size_t>(n1), r2, static_cast<std::size_t>(n2));
            const double z = oracle::fisher_compare_z(r1, n1, r2, n2);
            c.near(t.z, z, 1e-9, "fisher z");
            c.near(t.p, oracle::two_sided_p(z), 1e-9, "fisher p");
        }
        std::uniform_real_distribution<double> pu(0.0, 1.0);
        for (int i = 0; i < 25; ++i) {
            std::vector<double> ps(1 + static_cast<std::size_t>(i % 5));
            for (auto& p : ps) p = pu(rng);
            const std::size_t m = ps.size() + static_cast<std::size_t>(i);
            const auto got = stats::bonferroni(ps, m);
            const auto want = oracle::bonferroni(ps, static_cast<double>(m));
            for (std::size_t k = 0; k < ps.size(); ++k) c.near(got[k], want[k], 1e-9, "bonferroni");
        }
        // Identities.
        c.expect(stats::fisher_z_compare(0.4, 100, 0.4, 60).p == 1.0, "r1=r2 -> p=1");
        const std::vector<double> same{1, 2, 2, 5, 7};
        c.near(stats::mann_whitney_u(same, same).u_a, 12.5, 0.0, "identical samples U");
        c.near(stats::spearman(std::vector<double>{1, 2, 3, 4}, std::vector<double>{2, 4, 8, 16}), 1.0, 0.0, "rho=+1");
        c.near(stats::spearman(std::vector<double>{1, 2, 3, 4}, std::vector<double>{9, 7, 3, 1}), -1.0, 0.0, "rho=-1");
    });

    criterion("Preliminary count identity", 10.0, [](Check& c) {
        TempDir dir("acc-prelim");
        const auto before = http::request_counter().load();
        const auto r = testing_support::run_cli({"preliminary", "--mock", "--iterations", "50", "--models",
                                                 "mock-a,mock-b", "--seed", "7", "--out", dir.path().string()});
        c.expect(r.code == 0, "exit code " + std::to_string(r.code) + ": " + r.err);
        c.expect(http::request_counter().load() == before, "network calls made");
        const auto recs = load_records(dir / "preliminary_zero_shot-s7.jsonl");
        std::map<std::string, int> scored;
        std::map<std::string, std::vector<std::string>> personas;
        for (const auto& rec : recs) {
            if (rec.agent_id == "A" && rec.scored_va) ++scored[rec.model];
            if (rec.agent_id == "A" && rec.round == 1) personas[rec.model].push_back(rec.persona_name);
        }
        c.expect(scored["mock-a"] == 250, "mock-a scored " + std::to_string(scored["mock-a"]));
        c.expect(scored["mock-b"] == 250, "mock-b scored " + std::to_string(scored["mock-b"]));
        for (const auto& [model, names] : personas) {
            c.expect(names.size() == 50, model + " iterations");
            for (std::size_t start = 0; start + 5 <= names.size(); start += 5) {
                const std::set<std::string> window(names.begin() + static_cast<std::ptrdiff_t>(start),
                                                   names.begin() + static_cast<std::ptrdiff_t>(start + 5));
                c.expect(window.size() == 5, model + " rotation window " + std::to_string(start));
            }
        }
    });

    criterion("Chat count identity", 10.0, [](Check& c) {
        TempDir dir("acc-chat");
        const auto before = http::request_counter().load();
        const auto r = testing_support::run_cli({"chat", "--pairing", "hvha-lvha", "--mock", "--conversations", "10",
                                                 "--rounds", "20", "--seed", "7", "--out", dir.path().string()});
        c.expect(r.code == 0, "exit code " + std::to_string(r.code) + ": " + r.err);
        c.expect(http::request_counter().load() == before, "network calls made");
        const auto recs = load_records(dir / "chat_opposing-hvha-lvha-s7.jsonl");
        std::map<std::string, int> turns;
        for (const auto& rec : recs) {
            if (rec.agent_id == "A" || rec.agent_id == "B") ++turns[rec.conversation_id];
            if (rec.agent_id == "A" && rec.round == 1) {
                c.expect(rec.text == kGreeting[4][4], "greeting bytes in " + rec.conversation_id);
            }
        }
        c.expect(turns.size() == 10, "transcripts " + std::to_string(turns.size()));
        for (const auto& [id, n] : turns) c.expect(n == 40, id + " has " + std::to_string(n) + " agent turns");
    });

    criterion("Convergence fixture", 10.0, [](Check& c) {
        TempDir dir("acc-conv");
        auto cfg = ExperimentConfig::defaults_for(ExperimentKind::chat_opposing);
        cfg.models = {"mock"};
        cfg.seed = 1;
        RunContext ctx;
        MockOptions converge;
        converge.converge_valence = 0.5;  // level 3
        ctx.backends = mock_backend_factory(converge, cfg.rounds);
        ctx.scorer = std::make_shared<CachingScorer>(std::make_shared<PhrasebookScorer>());
        const auto path = persist(run_chat(cfg, Pairing::hvha_lvha, ctx), dir.path());
        report::Options opts;
        opts.out_dir = dir / "report";
        report::analyze({path}, opts);
        const auto csv = testing_support::slurp(opts.out_dir / "convergence.csv");
        const auto fields = split(csv_row(csv, 1), ',');
        c.expect(fields.size() == 5, "row shape: " + csv_row(csv, 1));
        if (fields.size() == 5) {
            c.expect(fields[2] == "4.0 -> 0.0", "valence cell '" + fields[2] + "'");
            c.expect(fields[3] == "0.0 -> 0.0", "arousal cell '" + fields[3] + "'");
        }
    });

    criterion("Offset fixture", 10.0, [](Check& c) {
        TempDir dir("acc-off");
        auto cfg = ExperimentConfig::defaults_for(ExperimentKind::preliminary_zero_shot);
        cfg.models = {"mock"};
        cfg.iterations = 200;
        cfg.seed = 3;
        RunContext ctx;
        ctx.backends = echo_prompted_factory();
        ctx.scorer = std::make_shared<CachingScorer>(std::make_shared<ShiftedScorer>());
        // Constructed prompted states: every cell midpoint with a narrow kernel, so no
        // draw is clamped onto the closed top edge (1.0 - 0.2 = 0.8 would stay in level 5).
        std::vector<VAPoint> mids;
        for (int v = 1; v <= 5; ++v) {
            for (int a = 1; a <= 5; ++a) mids.push_back(cell_midpoint({v, a}));
        }
        ctx.kde = KdeModel(mids, 0.01, 0.01);
        const auto path = persist(run_preliminary(cfg, ctx), dir.path());
        report::Options opts;
        opts.out_dir = dir / "report";
        report::analyze({path}, opts);
        const auto csv = testing_support::slurp(opts.out_dir / "offsets.csv");
        std::set<std::pair<std::string, int>> seen;
        std::istringstream in(csv);
        std::string line;
        std::getline(in, line);
        while (std::getline(in, line)) {
            const auto f = split(line, ',');
            const std::string dim = f[1];
            const int level = std::stoi(f[2]);
            const bool in_scope = dim == "valence" ? level <= 4 : level >= 2;
            if (!in_scope) continue;
            seen.insert({dim, level});
            c.expect(f[3] == (dim == "valence" ? "1.00" : "-1.00"), dim + " level " + f[2] + " offset " + f[3]);
        }
        for (int level = 1; level <= 4; ++level) c.expect(seen.contains({"valence", level}), "valence level missing");
        for (int level = 2; level <= 5; ++level) c.expect(seen.contains({"arousal", level}), "arousal level missing");
        // Exactness beyond the 2-decimal rendering.
        const auto recs = load_records(path);
        for (const auto& rec : recs) {
            if (rec.agent_id != "A") continue;
            const auto off = sam_offset(*rec.prompted_cell, *rec.scored_va);
            if (rec.prompted_cell->valence_level() <= 4) c.expect(off.dv == 1, "record valence offset");
            if (rec.prompted_cell->arousal_level() >= 2) c.expect(off.da == -1, "record arousal offset");
        }
    });

    criterion("Determinism", 20.0, [](Check& c) {
        auto run_all = [](const std::filesystem::path& dir) {
            std::vector<std::string> out;
            for (const auto& args : std::vector<std::vector<std::string>>{
                     {"preliminary", "--mock", "--setting", "few", "--iterations", "20", "--models", "a,b", "--seed", "11"},
                     {"chat", "--mock", "--pairing", "sampled", "--conversations", "5", "--rounds", "6", "--seed", "11",
                      "--parallelism", "4"}}) {
                auto full = args;
                full.insert(full.end(), {"--out", dir.string()});
                testing_support::run_cli(full);
            }
            const auto r = testing_support::run_cli({"analyze", "--in", (dir / "preliminary_few_shot-s11.jsonl").string(),
                                                     (dir / "chat_sampled-sampled-s11.jsonl").string(), "--out",
                                                     (dir / "report").string()});
            (void)r;
            for (const char* f : {"preliminary_few_shot-s11.jsonl", "chat_sampled-sampled-s11.jsonl",
                                  "report/correlations.csv", "report/comparisons.csv", "report/convergence.csv",
                                  "report/offsets.csv", "report/trajectories.csv", "report/summary.json"}) {
                out.push_back(testing_support::slurp(dir / f));
            }
            return out;
        };
        // Same output path both times: the path is part of the logged config.
        TempDir a("acc-det");
        const auto x = run_all(a.path() / "out");
        std::filesystem::remove_all(a.path() / "out");
        const auto y = run_all(a.path() / "out");
        for (std::size_t i = 0; i < x.size(); ++i) {
            c.expect(!x[i].empty(), "artifact " + std::to_string(i) + " empty");
            c.expect(x[i] == y[i], "artifact " + std::to_string(i) + " differs");
        }
    });

    criterion("Correlation-report arithmetic", 1.0, [](Check& c) {
        std::vector<TurnRecord> recs;
        std::mt19937_64 rng(8);
        std::uniform_real_distribution<double> u(0.0, 1.0);
        for (int i = 0; i < 50; ++i) {
            TurnRecord r;
            r.experiment = "preliminary_zero_shot";
            r.model = "m";
            r.conversation_id = "m/zero_shot/000";
            r.agent_id = "A";
            r.prompted_va = VAPoint{u(rng), u(rng)};
            r.prompted_cell = cell_of(*r.prompted_va);
            r.scored_va = r.prompted_va;
            recs.push_back(r);
        }
        const auto rep = stats::correlation_report(recs, "m", "zero_shot");
        c.expect(report::fixed(rep.corr_valence, 2) == "1.00", "corr_v");
        c.expect(report::fixed(rep.corr_arousal, 2) == "1.00", "corr_a");
        c.expect(report::fixed(rep.avg_corr, 2) == "1.00", "avg");
        c.expect(report::fixed(stats::average_correlation(0.75, 0.59), 2) == "0.67", "(0.75, 0.59) -> 0.67");
    });

    std::printf("%s: %d criteria failed\n", failed_criteria == 0 ? "OK" : "FAILED", failed_criteria);
    return failed_criteria == 0 ? 0 : 1;
}
