#pragma once

// Command-line front end. `run` is the whole program minus process exit so it
// can be driven in-process by tests.
//
// Exit codes: 0 success, 1 usage error, 2 runtime failure.

#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "corpus.hpp"
#include "experiments.hpp"
#include "report.hpp"
#include "sampling.hpp"
#include "scorer.hpp"

#ifndef AFFECTSIM_DEFAULT_DATA_DIR
#define AFFECTSIM_DEFAULT_DATA_DIR "data"
#endif

namespace affectsim::cli {

class ConfigError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

inline std::filesystem::path data_dir() {
    if (const char* d = std::getenv("AFFECTSIM_DATA_DIR")) return d;
    return AFFECTSIM_DEFAULT_DATA_DIR;
}

// Applies a key-value config document (JSON object) onto `cfg`.
// Returns true when the document carried a seed.
inline bool apply_config(const nlohmann::json& doc, ExperimentConfig& cfg) {
    if (!doc.is_object()) throw ConfigError("config: top level must be an object");
    static const std::set<std::string> known{"experiment", "models",   "iterations", "rounds",
                                             "seed",       "exemplar_k", "parallelism", "corpus",
                                             "lexicon",    "output_dir", "temperature", "max_tokens"};
    try {
        for (const auto& [key, value] : doc.items()) {
            if (!known.contains(key)) throw ConfigError("config: unknown key '" + key + "'");
        }
        if (doc.contains("experiment")) cfg.experiment = parse_experiment(doc["experiment"].get<std::string>());
        if (doc.contains("models")) cfg.models = doc["models"].get<std::vector<std::string>>();
        if (doc.contains("iterations")) cfg.iterations = doc["iterations"].get<int>();
        if (doc.contains("rounds")) cfg.rounds = doc["rounds"].get<int>();
        if (doc.contains("seed")) cfg.seed = doc["seed"].get<std::uint64_t>();
        if (doc.contains("exemplar_k")) cfg.exemplar_k = doc["exemplar_k"].get<int>();
        if (doc.contains("parallelism")) cfg.parallelism = doc["parallelism"].get<int>();
        if (doc.contains("corpus")) cfg.corpus = doc["corpus"].get<std::string>();
        if (doc.contains("lexicon")) cfg.lexicon = doc["lexicon"].get<std::string>();
        if (doc.contains("output_dir")) cfg.output_dir = doc["output_dir"].get<std::string>();
        if (doc.contains("temperature")) cfg.decoding.temperature = doc["temperature"].get<double>();
        if (doc.contains("max_tokens")) cfg.decoding.max_tokens = doc["max_tokens"].get<int>();
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("config: ") + e.what());
    }
    return doc.contains("seed");
}

inline nlohmann::json read_config_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file: " + path.string());
    try {
        return nlohmann::json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
        throw ConfigError(path.string() + ": " + e.what());
    }
}

struct RunFlags {
    std::string config_file;
    std::string setting = "zero";
    std::string pairing = "sampled";
    std::vector<std::string> models;
    int iterations = 0;
    int rounds = 0;
    std::uint64_t seed = 0;
    std::string corpus;
    std::string lexicon;
    std::string out;
    std::string scorer = "lexicon";
    std::string backend = "openai";
    double rps = 0.0;
    int parallelism = 0;
    int exemplar_k = 0;
    bool mock = false;
};

inline std::shared_ptr<ScoringBackend> make_scorer(const std::string& kind, const std::filesystem::path& lexicon) {
    auto lexicon_backend = [&]() -> std::shared_ptr<ScoringBackend> {
        if (lexicon.empty()) return std::make_shared<LexiconScorer>(demo_lexicon(), "lexicon:demo");
        return std::make_shared<LexiconScorer>(load_lexicon(lexicon), "lexicon:" + lexicon.filename().string());
    };
    if (kind == "lexicon") return lexicon_backend();
    if (kind == "remote") return std::make_shared<RemoteScorer>(RemoteScorer::url_from_env());
    if (kind == "phrasebook") return std::make_shared<PhrasebookScorer>(lexicon_backend());
    throw ConfigError("unknown scorer: " + kind);
}

struct Env {
    std::ostream& out;
    std::ostream& err;
};

// Builds the effective config: built-in default < config file < flags.
inline ExperimentConfig resolve_config(ExperimentKind kind, const RunFlags& f, const CLI::App& sub, Env env) {
    ExperimentConfig cfg = ExperimentConfig::defaults_for(kind);
    bool seeded = false;
    if (!f.config_file.empty()) {
        seeded = apply_config(read_config_file(f.config_file), cfg);
        if (is_preliminary(kind) != is_preliminary(cfg.experiment)) {
            throw ConfigError("config experiment '" + std::string(to_string(cfg.experiment)) +
                              "' does not match subcommand");
        }
        cfg.experiment = is_preliminary(kind) ? cfg.experiment : kind;
    }
    auto given = [&](const char* name) {
        const CLI::Option* opt = sub.get_option_no_throw(name);
        return opt != nullptr && opt->count() > 0;
    };
    if (is_preliminary(kind) && given("--setting")) cfg.experiment = kind;
    if (given("--models")) cfg.models = f.models;
    if (given("--iterations")) cfg.iterations = f.iterations;
    if (given("--conversations")) cfg.iterations = f.iterations;
    if (given("--rounds")) cfg.rounds = f.rounds;
    if (given("--corpus")) cfg.corpus = f.corpus;
    if (given("--lexicon")) cfg.lexicon = f.lexicon;
    if (given("--out")) cfg.output_dir = f.out;
    if (given("--parallelism")) cfg.parallelism = f.parallelism;
    if (given("--exemplar-k")) cfg.exemplar_k = f.exemplar_k;
    if (given("--seed")) {
        cfg.seed = f.seed;
        seeded = true;
    }
    if (!seeded) {
        if (!f.config_file.empty()) throw ConfigError("config file mode requires a seed");
        cfg.seed = (static_cast<std::uint64_t>(std::random_device{}()) << 32) | std::random_device{}();
        env.err << "seed: " << cfg.seed << " (auto-generated)\n";
    }
    if (cfg.corpus.empty()) cfg.corpus = data_dir() / "demo_corpus.csv";
    cfg.validate();
    return cfg;
}

inline RunContext make_context(const ExperimentConfig& cfg, const RunFlags& f, bool needs_kde, bool needs_corpus,
                               std::optional<Corpus>& corpus_storage) {
    RunContext ctx;
    if (f.mock) {
        ctx.backends = mock_backend_factory({}, cfg.rounds);
    } else {
        auto hcfg = HttpBackendConfig::from_env(f.backend == "local" ? ChatFlavor::local_runner : ChatFlavor::openai);
        hcfg.max_requests_per_second = f.rps;
        ctx.backends = shared_backend_factory(std::make_shared<HttpChatBackend>(hcfg));
    }
    ctx.scorer = std::make_shared<CachingScorer>(make_scorer(f.scorer, cfg.lexicon));
    if (needs_kde || needs_corpus) {
        corpus_storage = load_corpus(cfg.corpus);
        if (needs_kde) ctx.kde = fit_kde(empirical_va(*corpus_storage));
        if (needs_corpus) ctx.corpus = &*corpus_storage;
    }
    return ctx;
}

inline void report_run(const RunResult& run, const std::filesystem::path& path, Env env) {
    env.out << "wrote " << path.string() << '\n';
    for (const auto& model : run.config.models) {
        env.out << "  " << model << ": " << run.scored_agent_turns(model) << " scored agent turns\n";
    }
    std::size_t failed = 0;
    for (const auto& t : run.transcripts) {
        if (t.aborted) {
            ++failed;
            env.err << "  conversation " << t.conversation_id << " aborted: " << t.failure << '\n';
        }
    }
    env.out << "  conversations: " << run.transcripts.size() << " (" << failed << " failed)\n";
}

inline int run(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
    Env env{out, err};
    CLI::App app{"affectsim: affect-conditioned LLM dialogue harness", "affectsim"};
    app.require_subcommand(1);

    RunFlags f;
    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--config", f.config_file, "JSON config (keys mirror the experiment config)");
        sub->add_option("--models", f.models, "Model identifiers")->delimiter(',');
        sub->add_option("--seed", f.seed, "Run seed");
        sub->add_option("--corpus", f.corpus, "Annotated corpus CSV (text,valence,arousal,language)");
        sub->add_option("--lexicon", f.lexicon, "Lexicon CSV for the lexicon scorer");
        sub->add_option("--scorer", f.scorer, "lexicon|remote|phrasebook")
            ->check(CLI::IsMember({"lexicon", "remote", "phrasebook"}));
        sub->add_option("--backend", f.backend, "openai|local chat endpoint flavour")
            ->check(CLI::IsMember({"openai", "local"}));
        sub->add_option("--rps", f.rps, "Max requests per second to the chat backend (0 = unlimited)");
        sub->add_option("--out", f.out, "Output directory");
        sub->add_option("--parallelism", f.parallelism, "Concurrent conversations")->check(CLI::PositiveNumber);
        sub->add_flag("--mock", f.mock, "Use the deterministic offline mock backend");
    };

    auto* prelim = app.add_subcommand("preliminary", "Scripted dummy-partner protocol (zero/few-shot)");
    add_common(prelim);
    prelim->add_option("--setting", f.setting, "zero|few")->check(CLI::IsMember({"zero", "few"}));
    prelim->add_option("--iterations", f.iterations, "Iterations per model")->check(CLI::PositiveNumber);
    prelim->add_option("--exemplar-k", f.exemplar_k, "Few-shot exemplars per prompt")->check(CLI::PositiveNumber);

    auto* chat = app.add_subcommand("chat", "Agent-vs-agent protocol");
    add_common(chat);
    chat->add_option("--pairing", f.pairing, "sampled|hvha-lvha|lvha-nvla|hvha-nvla")
        ->check(CLI::IsMember({"sampled", "hvha-lvha", "lvha-nvla", "hvha-nvla"}));
    chat->add_option("--conversations", f.iterations, "Conversations per pairing")->check(CLI::PositiveNumber);
    chat->add_option("--rounds", f.rounds, "Utterances per agent")->check(CLI::PositiveNumber);

    std::vector<std::string> in_files;
    std::string report_out = "report", baseline;
    bool exclude_greeting = false;
    auto* analyze = app.add_subcommand("analyze", "Build tables and charts from transcript files");
    analyze->add_option("--in", in_files, "Transcript .jsonl files");
    analyze->add_option("--out", report_out, "Report directory");
    analyze->add_option("--baseline", baseline, "Preliminary-run transcript for the offset baseline");
    analyze->add_flag("--exclude-greeting", exclude_greeting, "Drop agent A's round-1 greeting from analysis");

    std::string text, text_file, score_kind = "lexicon", score_lexicon;
    auto* score = app.add_subcommand("score", "Score ad-hoc text");
    score->add_option("--text", text, "Text to score");
    score->add_option("--file", text_file, "File with one text per line");
    score->add_option("--scorer", score_kind, "lexicon|remote")->check(CLI::IsMember({"lexicon", "remote"}));
    score->add_option("--lexicon", score_lexicon, "Lexicon CSV");

    std::string validate_file;
    auto* validate = app.add_subcommand("validate-config", "Check a config file and print the effective config");
    validate->add_option("config", validate_file, "Config file")->required();

    auto* assets = app.add_subcommand("assets", "Print the SAM scale and greeting grid as JSON");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? 0 : 1;
    }

    try {
        if (prelim->parsed()) {
            const auto kind = f.setting == "few" ? ExperimentKind::preliminary_few_shot
                                                 : ExperimentKind::preliminary_zero_shot;
            auto cfg = resolve_config(kind, f, *prelim, env);
            std::optional<Corpus> corpus;
            const bool few = cfg.experiment == ExperimentKind::preliminary_few_shot;
            if (f.mock) cfg.retry.base_delay = std::chrono::milliseconds(0);
            const auto ctx = make_context(cfg, f, true, few, corpus);
            const auto result = run_preliminary(cfg, ctx);
            report_run(result, persist(result, cfg.output_dir), env);
            return 0;
        }
        if (chat->parsed()) {
            const auto pairing = parse_pairing(f.pairing);
            const auto kind = pairing == Pairing::sampled ? ExperimentKind::chat_sampled : ExperimentKind::chat_opposing;
            auto cfg = resolve_config(kind, f, *chat, env);
            if (f.mock) cfg.retry.base_delay = std::chrono::milliseconds(0);
            std::optional<Corpus> corpus;
            const auto ctx = make_context(cfg, f, pairing == Pairing::sampled, false, corpus);
            const auto result = run_chat(cfg, pairing, ctx);
            report_run(result, persist(result, cfg.output_dir), env);
            return 0;
        }
        if (analyze->parsed()) {
            if (in_files.empty()) throw report::UsageError("analyze: --in requires at least one file");
            report::Options opts;
            opts.out_dir = report_out;
            if (!baseline.empty()) opts.baseline = baseline;
            opts.analysis.exclude_greeting = exclude_greeting;
            std::vector<std::filesystem::path> paths(in_files.begin(), in_files.end());
            report::analyze(paths, opts);
            out << "report written to " << opts.out_dir.string() << '\n';
            return 0;
        }
        if (score->parsed()) {
            std::vector<std::string> texts;
            if (!text.empty()) texts.push_back(text);
            if (!text_file.empty()) {
                std::ifstream in(text_file);
                if (!in) throw IoError("cannot open " + text_file);
                for (std::string line; std::getline(in, line);) {
                    if (!csv::trim(line).empty()) texts.push_back(line);
                }
            }
            if (texts.empty()) throw report::UsageError("score: give --text or --file");
            CachingScorer scorer(make_scorer(score_kind, score_lexicon));
            const auto scores = scorer.score(texts);
            out << "valence,arousal,valence_level,arousal_level,text\n";
            for (std::size_t i = 0; i < texts.size(); ++i) {
                const SamCell c = cell_of(scores[i]);
                out << csv::join({report::fixed(scores[i].valence(), 4), report::fixed(scores[i].arousal(), 4),
                                  std::to_string(c.valence_level()), std::to_string(c.arousal_level()), texts[i]})
                    << '\n';
            }
            return 0;
        }
        if (assets->parsed()) {
            out << export_assets().dump(2) << '\n';
            return 0;
        }
        if (validate->parsed()) {
            ExperimentConfig cfg;
            const auto doc = read_config_file(validate_file);
            cfg.experiment = doc.contains("experiment") && doc["experiment"].is_string()
                                 ? parse_experiment(doc["experiment"].get<std::string>())
                                 : ExperimentKind::preliminary_zero_shot;
            cfg = ExperimentConfig::defaults_for(cfg.experiment);
            if (!apply_config(doc, cfg)) throw ConfigError("config file mode requires a seed");
            cfg.validate();
            out << to_json(cfg).dump(2) << '\n';
            return 0;
        }
    } catch (const report::UsageError& e) {
        err << "usage error: " << e.what() << '\n';
        return 1;
    } catch (const ConfigError& e) {
        err << "config error: " << e.what() << '\n';
        return 1;
    } catch (const std::invalid_argument& e) {
        err << "usage error: " << e.what() << '\n';
        return 1;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return 2;
    }
    return 1;
}

} // namespace affectsim::cli
