#pragma once

// Protocol runners: scripted preliminary runs (dummy partner, zero/few-shot)
// and agent-vs-agent chats (sampled states or opposing presets), plus the
// JSON-Lines transcript format.

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdint>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <memory>
#include <optional>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "affect_core.hpp"
#include "agents.hpp"
#include "corpus.hpp"
#include "sampling.hpp"
#include "scorer.hpp"

namespace affectsim {

enum class ExperimentKind { preliminary_zero_shot, preliminary_few_shot, chat_sampled, chat_opposing };

inline std::string_view to_string(ExperimentKind k) {
    switch (k) {
    case ExperimentKind::preliminary_zero_shot: return "preliminary_zero_shot";
    case ExperimentKind::preliminary_few_shot: return "preliminary_few_shot";
    case ExperimentKind::chat_sampled: return "chat_sampled";
    case ExperimentKind::chat_opposing: return "chat_opposing";
    }
    return "?";
}

inline ExperimentKind parse_experiment(std::string_view s) {
    for (auto k : {ExperimentKind::preliminary_zero_shot, ExperimentKind::preliminary_few_shot,
                   ExperimentKind::chat_sampled, ExperimentKind::chat_opposing}) {
        if (to_string(k) == s) return k;
    }
    throw std::invalid_argument("unknown experiment: " + std::string(s));
}

inline bool is_preliminary(ExperimentKind k) {
    return k == ExperimentKind::preliminary_zero_shot || k == ExperimentKind::preliminary_few_shot;
}

struct ExperimentConfig {
    ExperimentKind experiment = ExperimentKind::preliminary_zero_shot;
    std::vector<std::string> models{"llama3"};
    int iterations = 50;  // preliminary: iterations per model; chat: conversations per pairing
    int rounds = 20;      // chat only
    std::uint64_t seed = 0;
    int exemplar_k = 5;
    int parallelism = 1;
    std::filesystem::path corpus;
    std::filesystem::path lexicon;
    std::filesystem::path output_dir = "runs";
    Decoding decoding;
    RetryPolicy retry;

    static ExperimentConfig defaults_for(ExperimentKind kind) {
        ExperimentConfig cfg;
        cfg.experiment = kind;
        cfg.iterations = is_preliminary(kind) ? 50 : 10;
        return cfg;
    }

    void validate() const {
        if (models.empty()) throw std::invalid_argument("config: at least one model required");
        if (iterations <= 0) throw std::invalid_argument("config: iterations must be positive");
        if (rounds <= 0) throw std::invalid_argument("config: rounds must be positive");
        if (exemplar_k <= 0) throw std::invalid_argument("config: exemplar_k must be positive");
        if (parallelism <= 0) throw std::invalid_argument("config: parallelism must be positive");
    }
};

inline nlohmann::ordered_json to_json(const ExperimentConfig& c) {
    return {{"experiment", to_string(c.experiment)},
            {"models", c.models},
            {"iterations", c.iterations},
            {"rounds", c.rounds},
            {"seed", c.seed},
            {"exemplar_k", c.exemplar_k},
            {"parallelism", c.parallelism},
            {"corpus", c.corpus.string()},
            {"lexicon", c.lexicon.string()},
            {"output_dir", c.output_dir.string()},
            {"temperature", c.decoding.temperature},
            {"max_tokens", c.decoding.max_tokens}};
}

// ---------------------------------------------------------------------------
// Records

namespace flag {
inline constexpr std::string_view loop_suspected = "loop_suspected";
inline constexpr std::string_view unscored = "unscored";
inline constexpr std::string_view aborted = "aborted";
} // namespace flag

struct TurnRecord {
    std::string run_id;
    std::string experiment;
    std::string model;
    std::string conversation_id;
    int round = 1;
    std::string agent_id;  // "A", "B" or "dummy"
    std::string persona_name;
    std::optional<VAPoint> prompted_va;
    std::optional<SamCell> prompted_cell;
    std::string text;
    std::optional<VAPoint> scored_va;
    std::set<std::string> flags;

    bool has(std::string_view f) const { return flags.contains(std::string(f)); }
    bool is_agent() const { return agent_id == "A" || agent_id == "B"; }

    friend bool operator==(const TurnRecord&, const TurnRecord&) = default;
};

class SchemaError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

inline nlohmann::ordered_json va_json(const std::optional<VAPoint>& p) {
    if (!p) return nullptr;
    return {{"valence", p->valence()}, {"arousal", p->arousal()}};
}

inline nlohmann::ordered_json to_json(const TurnRecord& r) {
    nlohmann::ordered_json j;
    j["run_id"] = r.run_id;
    j["experiment"] = r.experiment;
    j["model"] = r.model;
    j["conversation_id"] = r.conversation_id;
    j["round"] = r.round;
    j["agent_id"] = r.agent_id;
    j["persona_name"] = r.persona_name;
    j["prompted_va"] = va_json(r.prompted_va);
    if (r.prompted_cell) {
        j["prompted_cell"] = {{"valence_level", r.prompted_cell->valence_level()},
                              {"arousal_level", r.prompted_cell->arousal_level()}};
    } else {
        j["prompted_cell"] = nullptr;
    }
    j["text"] = r.text;
    j["scored_va"] = va_json(r.scored_va);
    j["flags"] = r.flags;
    return j;
}

inline TurnRecord turn_record_from_json(const nlohmann::json& j) {
    auto opt_va = [](const nlohmann::json& v) -> std::optional<VAPoint> {
        if (v.is_null()) return std::nullopt;
        return VAPoint{v.at("valence").get<double>(), v.at("arousal").get<double>()};
    };
    TurnRecord r;
    r.run_id = j.at("run_id").get<std::string>();
    r.experiment = j.at("experiment").get<std::string>();
    r.model = j.at("model").get<std::string>();
    r.conversation_id = j.at("conversation_id").get<std::string>();
    r.round = j.at("round").get<int>();
    r.agent_id = j.at("agent_id").get<std::string>();
    r.persona_name = j.at("persona_name").get<std::string>();
    r.prompted_va = opt_va(j.at("prompted_va"));
    if (const auto& c = j.at("prompted_cell"); !c.is_null()) {
        r.prompted_cell = SamCell{c.at("valence_level").get<int>(), c.at("arousal_level").get<int>()};
    }
    r.text = j.at("text").get<std::string>();
    r.scored_va = opt_va(j.at("scored_va"));
    r.flags = j.at("flags").get<std::set<std::string>>();
    if (r.round < 1) throw SchemaError("round must be >= 1");
    if (r.agent_id != "A" && r.agent_id != "B" && r.agent_id != "dummy") throw SchemaError("bad agent_id " + r.agent_id);
    if (r.scored_va.has_value() == r.has(flag::unscored) && r.is_agent()) {
        throw SchemaError("scored_va must be present iff not flagged unscored");
    }
    return r;
}

struct AgentSummary {
    std::string agent_id;
    Persona persona;
    Persona counterpart;
    EmotionalState state;
    std::vector<std::string> exemplars;
    std::string model;
    std::string backend;
    Decoding decoding;
    bool exemplars_widened = false;
};

inline nlohmann::ordered_json to_json(const AgentSummary& a) {
    auto persona = [](const Persona& p) {
        return nlohmann::ordered_json{
            {"name", p.name}, {"age", p.age}, {"gender", p.gender}, {"nationality", p.nationality}};
    };
    return {{"agent_id", a.agent_id},
            {"persona", persona(a.persona)},
            {"counterpart", persona(a.counterpart)},
            {"prompted_va", va_json(a.state.va())},
            {"prompted_cell", {a.state.cell().valence_level(), a.state.cell().arousal_level()}},
            {"exemplars", a.exemplars},
            {"exemplars_widened", a.exemplars_widened},
            {"model", a.model},
            {"backend", a.backend},
            {"temperature", a.decoding.temperature},
            {"max_tokens", a.decoding.max_tokens}};
}

struct Transcript {
    std::string conversation_id;
    std::string model;
    std::string pairing;  // "zero_shot"/"few_shot" for preliminary runs
    std::vector<TurnRecord> records;
    std::vector<AgentSummary> agents;
    bool aborted = false;
    std::string failure;
};

struct RunResult {
    std::string run_id;
    ExperimentConfig config;
    std::vector<Transcript> transcripts;
    nlohmann::ordered_json metadata;

    std::size_t scored_agent_turns(std::string_view model = {}) const {
        std::size_t n = 0;
        for (const auto& t : transcripts) {
            for (const auto& r : t.records) {
                if (r.is_agent() && r.scored_va && (model.empty() || r.model == model)) ++n;
            }
        }
        return n;
    }
};

// ---------------------------------------------------------------------------
// Backends for a run

// Creates the chat backend for one agent of one conversation.
using BackendFactory = std::function<std::shared_ptr<ChatBackend>(const AgentSpec& spec, const std::string& agent_id)>;

struct MockOptions {
    // Added to the prompted state to form the mock's target.
    double bias_valence = 0.0;
    double bias_arousal = 0.0;
    // When set, the mock moves linearly from its target to this value, arriving at the last round.
    std::optional<double> converge_valence;
    std::optional<double> converge_arousal;
};

inline BackendFactory mock_backend_factory(MockOptions opts = {}, int rounds = 20) {
    return [opts, rounds](const AgentSpec& spec, const std::string&) {
        MockProfile profile;
        profile.target = VAPoint::clamped(spec.state.va().valence() + opts.bias_valence,
                                          spec.state.va().arousal() + opts.bias_arousal);
        const double steps = std::max(1, rounds - 1);
        if (opts.converge_valence) profile.drift_valence = (*opts.converge_valence - profile.target.valence()) / steps;
        if (opts.converge_arousal) profile.drift_arousal = (*opts.converge_arousal - profile.target.arousal()) / steps;
        return mock_backend(std::move(profile));
    };
}

inline BackendFactory shared_backend_factory(std::shared_ptr<ChatBackend> backend) {
    return [backend](const AgentSpec&, const std::string&) { return backend; };
}

enum class Pairing { sampled, hvha_lvha, lvha_nvla, hvha_nvla };

inline std::string_view to_string(Pairing p) {
    switch (p) {
    case Pairing::sampled: return "sampled";
    case Pairing::hvha_lvha: return "hvha-lvha";
    case Pairing::lvha_nvla: return "lvha-nvla";
    case Pairing::hvha_nvla: return "hvha-nvla";
    }
    return "?";
}

inline Pairing parse_pairing(std::string_view s) {
    for (auto p : {Pairing::sampled, Pairing::hvha_lvha, Pairing::lvha_nvla, Pairing::hvha_nvla}) {
        if (to_string(p) == s) return p;
    }
    throw std::invalid_argument("unknown pairing: " + std::string(s));
}

// (first-listed, second-listed) presets; the first goes to agent A.
inline std::pair<OpposingPreset, OpposingPreset> pairing_presets(Pairing p) {
    switch (p) {
    case Pairing::hvha_lvha: return {preset(PresetLabel::HV_HA), preset(PresetLabel::LV_HA)};
    case Pairing::lvha_nvla: return {preset(PresetLabel::LV_HA), preset(PresetLabel::NV_LA)};
    case Pairing::hvha_nvla: return {preset(PresetLabel::HV_HA), preset(PresetLabel::NV_LA)};
    case Pairing::sampled: break;
    }
    throw std::invalid_argument("pairing has no presets: sampled");
}

struct RunContext {
    BackendFactory backends;
    std::shared_ptr<CachingScorer> scorer;
    std::optional<KdeModel> kde;         // required for preliminary and sampled chat runs
    const Corpus* corpus = nullptr;      // required for few-shot runs
};

// ---------------------------------------------------------------------------

namespace detail {

inline std::string utc_now() {
    const auto now = std::chrono::system_clock::now();
    const std::time_t t = std::chrono::system_clock::to_time_t(now);
    std::tm tm{};
    gmtime_r(&t, &tm);
    std::ostringstream os;
    os << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
    return os.str();
}

inline std::string conversation_id(const std::string& model, std::string_view label, int index) {
    std::ostringstream os;
    os << model << '/' << label << '/' << std::setw(3) << std::setfill('0') << index;
    return os.str();
}

// Runs fn(i) for i in [0, n) on up to `workers` threads.
inline void parallel_for(std::size_t n, int workers, const std::function<void(std::size_t)>& fn) {
    const auto threads = static_cast<std::size_t>(std::max(1, workers));
    if (threads == 1 || n <= 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::exception_ptr> errors(n);
    {
        std::vector<std::jthread> pool;
        for (std::size_t w = 0; w < std::min(threads, n); ++w) {
            pool.emplace_back([&] {
                for (std::size_t i = next++; i < n; i = next++) {
                    try {
                        fn(i);
                    } catch (...) {
                        errors[i] = std::current_exception();
                    }
                }
            });
        }
    }
    for (auto& e : errors) {
        if (e) std::rethrow_exception(e);
    }
}

inline AgentSummary summarize(const AgentSpec& spec, const std::string& agent_id, bool widened = false) {
    return {agent_id,      spec.persona, spec.counterpart,
            spec.state,    spec.exemplars, spec.model,
            spec.backend ? spec.backend->identity() : "", spec.decoding, widened};
}

// Scores every successful agent turn of a conversation in one call.
inline void score_transcript(Transcript& t, CachingScorer& scorer) {
    std::vector<std::string> texts;
    std::vector<TurnRecord*> targets;
    for (auto& r : t.records) {
        if (r.is_agent() && !r.has(flag::aborted) && !r.text.empty()) {
            texts.push_back(r.text);
            targets.push_back(&r);
        } else if (r.is_agent()) {
            r.flags.insert(std::string(flag::unscored));
        }
    }
    if (texts.empty()) return;
    try {
        const auto scores = scorer.score(texts);
        for (std::size_t i = 0; i < targets.size(); ++i) targets[i]->scored_va = scores[i];
    } catch (const std::exception&) {
        for (auto* r : targets) r->flags.insert(std::string(flag::unscored));
    }
}

inline void mark_loops(std::vector<TurnRecord>& records, const std::string& agent_id) {
    std::vector<std::string> replies;
    for (auto& r : records) {
        if (r.agent_id != agent_id || r.has(flag::aborted)) continue;
        replies.push_back(r.text);
        if (loop_suspected(replies)) r.flags.insert(std::string(flag::loop_suspected));
    }
}

inline TurnRecord agent_record(const std::string& run_id, ExperimentKind kind, const AgentSpec& spec,
                               const std::string& conv_id, int round, const std::string& agent_id) {
    TurnRecord r;
    r.run_id = run_id;
    r.experiment = std::string(to_string(kind));
    r.model = spec.model;
    r.conversation_id = conv_id;
    r.round = round;
    r.agent_id = agent_id;
    r.persona_name = spec.persona.name;
    r.prompted_va = spec.state.va();
    r.prompted_cell = spec.state.cell();
    return r;
}

inline nlohmann::ordered_json run_metadata(const RunResult& run, const RunContext& ctx, const std::string& started) {
    nlohmann::ordered_json meta;
    meta["run_id"] = run.run_id;
    meta["config"] = to_json(run.config);
    meta["seed"] = run.config.seed;
    if (ctx.kde) {
        meta["kde"] = {{"support_points", ctx.kde->support().size()},
                       {"bandwidth_valence", ctx.kde->bandwidth(Dimension::valence)},
                       {"bandwidth_arousal", ctx.kde->bandwidth(Dimension::arousal)}};
    } else {
        meta["kde"] = nullptr;
    }
    meta["scorer"] = ctx.scorer ? ctx.scorer->identity() : "";
    auto& convs = meta["conversations"] = nlohmann::ordered_json::array();
    std::size_t failed = 0;
    for (const auto& t : run.transcripts) {
        nlohmann::ordered_json c{{"conversation_id", t.conversation_id},
                                 {"model", t.model},
                                 {"pairing", t.pairing},
                                 {"aborted", t.aborted},
                                 {"failure", t.failure},
                                 {"agents", nlohmann::ordered_json::array()}};
        for (const auto& a : t.agents) c["agents"].push_back(to_json(a));
        convs.push_back(std::move(c));
        failed += t.aborted ? 1 : 0;
    }
    meta["counts"] = {{"conversations", run.transcripts.size()},
                      {"failed_conversations", failed},
                      {"scored_agent_turns", run.scored_agent_turns()}};
    meta["started_at"] = started;
    meta["finished_at"] = utc_now();
    return meta;
}

} // namespace detail

// ---------------------------------------------------------------------------
// Preliminary protocol: the dummy partner reads its 5 lines, the model answers each.

inline RunResult run_preliminary(const ExperimentConfig& config, const RunContext& ctx) {
    config.validate();
    if (!is_preliminary(config.experiment)) throw std::invalid_argument("run_preliminary: not a preliminary config");
    if (!ctx.kde) throw std::invalid_argument("run_preliminary: KDE model required");
    if (!ctx.scorer || !ctx.backends) throw std::invalid_argument("run_preliminary: scorer and backends required");
    const bool few_shot = config.experiment == ExperimentKind::preliminary_few_shot;
    if (few_shot && (!ctx.corpus || ctx.corpus->empty())) throw std::invalid_argument("few-shot run needs a corpus");

    const std::string started = detail::utc_now();
    RunResult run;
    run.config = config;
    run.run_id = std::string(to_string(config.experiment)) + "-s" + std::to_string(config.seed);
    const std::string_view setting = few_shot ? "few_shot" : "zero_shot";

    const auto& roster = persona_roster();
    const auto n_iter = static_cast<std::size_t>(config.iterations);
    run.transcripts.resize(config.models.size() * n_iter);

    detail::parallel_for(run.transcripts.size(), config.parallelism, [&](std::size_t task) {
        const std::size_t m = task / n_iter;
        const int i = static_cast<int>(task % n_iter);
        Transcript& t = run.transcripts[task];
        t.model = config.models[m];
        t.pairing = std::string(setting);
        t.conversation_id = detail::conversation_id(t.model, setting, i);

        // Same stream index for every model: all models see the same targets.
        auto rng = substream(config.seed, static_cast<std::uint64_t>(i));
        AgentSpec spec;
        spec.persona = roster[static_cast<std::size_t>(i) % roster.size()];
        spec.counterpart = roster[static_cast<std::size_t>(i + 1) % roster.size()];
        spec.state = sample_state(*ctx.kde, rng);
        spec.model = t.model;
        spec.decoding = config.decoding;
        bool widened = false;
        try {
            if (few_shot) {
                auto draw = exemplars(*ctx.corpus, spec.state.cell(), static_cast<std::size_t>(config.exemplar_k), rng);
                widened = draw.widened;
                for (auto& u : draw.utterances) spec.exemplars.push_back(std::move(u.text));
            }
            spec.validate();
            spec.backend = ctx.backends(spec, "A");
        } catch (const std::exception& e) {
            t.aborted = true;
            t.failure = e.what();
            t.agents.push_back(detail::summarize(spec, "A", widened));
            return;
        }
        t.agents.push_back(detail::summarize(spec, "A", widened));

        std::vector<Message> history;
        const auto& script = dummy_script();
        for (std::size_t line = 0; line < script.size(); ++line) {
            const int round = static_cast<int>(line) + 1;
            TurnRecord dummy;
            dummy.run_id = run.run_id;
            dummy.experiment = std::string(to_string(config.experiment));
            dummy.model = t.model;
            dummy.conversation_id = t.conversation_id;
            dummy.round = round;
            dummy.agent_id = "dummy";
            dummy.persona_name = spec.counterpart.name;
            dummy.text = script[line];
            t.records.push_back(dummy);
            history.push_back({Role::other, script[line]});

            TurnRecord rec = detail::agent_record(run.run_id, config.experiment, spec, t.conversation_id, round, "A");
            try {
                rec.text = next_turn(spec, history, config.retry).text;
            } catch (const std::exception& e) {
                rec.flags = {std::string(flag::aborted)};
                t.records.push_back(std::move(rec));
                t.aborted = true;
                t.failure = e.what();
                break;
            }
            history.push_back({Role::self, rec.text});
            t.records.push_back(std::move(rec));
        }
        detail::mark_loops(t.records, "A");
        detail::score_transcript(t, *ctx.scorer);
    });

    run.metadata = detail::run_metadata(run, ctx, started);
    return run;
}

// ---------------------------------------------------------------------------
// Chat protocol: A greets with the table greeting for its cell, then B, A, B, ...
// until each agent has spoken `rounds` times.

inline RunResult run_chat(const ExperimentConfig& config, Pairing pairing, const RunContext& ctx) {
    config.validate();
    if (!ctx.scorer || !ctx.backends) throw std::invalid_argument("run_chat: scorer and backends required");
    if (pairing == Pairing::sampled && !ctx.kde) throw std::invalid_argument("run_chat: sampled pairing needs a KDE");

    const std::string started = detail::utc_now();
    RunResult run;
    run.config = config;
    run.config.experiment = pairing == Pairing::sampled ? ExperimentKind::chat_sampled : ExperimentKind::chat_opposing;
    const ExperimentKind kind = run.config.experiment;
    run.run_id = std::string(to_string(kind)) + "-" + std::string(to_string(pairing)) + "-s" + std::to_string(config.seed);
    const std::string_view label = to_string(pairing);

    const auto& roster = persona_roster();
    const auto n_iter = static_cast<std::size_t>(config.iterations);
    run.transcripts.resize(config.models.size() * n_iter);

    detail::parallel_for(run.transcripts.size(), config.parallelism, [&](std::size_t task) {
        const std::size_t m = task / n_iter;
        const int i = static_cast<int>(task % n_iter);
        Transcript& t = run.transcripts[task];
        t.model = config.models[m];
        t.pairing = std::string(label);
        t.conversation_id = detail::conversation_id(t.model, label, i);

        auto rng = substream(config.seed, static_cast<std::uint64_t>(i));
        AgentSpec a, b;
        a.persona = b.counterpart = roster[static_cast<std::size_t>(i) % roster.size()];
        b.persona = a.counterpart = roster[static_cast<std::size_t>(i + 1) % roster.size()];
        if (pairing == Pairing::sampled) {
            a.state = sample_state(*ctx.kde, rng);
            b.state = sample_state(*ctx.kde, rng);
        } else {
            const auto [first, second] = pairing_presets(pairing);
            a.state = first.state;
            b.state = second.state;
        }
        a.model = b.model = t.model;
        a.decoding = b.decoding = config.decoding;
        try {
            a.validate();
            b.validate();
            a.backend = ctx.backends(a, "A");
            b.backend = ctx.backends(b, "B");
        } catch (const std::exception& e) {
            t.aborted = true;
            t.failure = e.what();
            t.agents = {detail::summarize(a, "A"), detail::summarize(b, "B")};
            return;
        }
        t.agents = {detail::summarize(a, "A"), detail::summarize(b, "B")};

        // Each agent sees its own turns as self and the other's as other.
        std::vector<Message> hist_a, hist_b;
        auto speak = [&](AgentSpec& who, const std::string& id, int round, std::vector<Message>& own,
                         std::vector<Message>& theirs, const std::optional<std::string>& fixed) {
            TurnRecord rec = detail::agent_record(run.run_id, kind, who, t.conversation_id, round, id);
            try {
                rec.text = fixed ? *fixed : next_turn(who, own, config.retry).text;
            } catch (const std::exception& e) {
                rec.flags = {std::string(flag::aborted)};
                t.records.push_back(std::move(rec));
                t.aborted = true;
                t.failure = e.what();
                return false;
            }
            own.push_back({Role::self, rec.text});
            theirs.push_back({Role::other, rec.text});
            t.records.push_back(std::move(rec));
            return true;
        };

        bool ok = speak(a, "A", 1, hist_a, hist_b, std::string(greeting_for(a.state.cell())));
        ok = ok && speak(b, "B", 1, hist_b, hist_a, std::nullopt);
        for (int round = 2; ok && round <= config.rounds; ++round) {
            ok = speak(a, "A", round, hist_a, hist_b, std::nullopt) && speak(b, "B", round, hist_b, hist_a, std::nullopt);
        }
        detail::mark_loops(t.records, "A");
        detail::mark_loops(t.records, "B");
        detail::score_transcript(t, *ctx.scorer);
    });

    run.metadata = detail::run_metadata(run, ctx, started);
    return run;
}

// ---------------------------------------------------------------------------
// Persistence

class IoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

inline std::string records_jsonl(const std::vector<TurnRecord>& records) {
    std::string out;
    for (const auto& r : records) {
        out += to_json(r).dump();
        out.push_back('\n');
    }
    return out;
}

// Writes <dir>/<run_id>.jsonl and <dir>/<run_id>.meta.json; returns the .jsonl path.
inline std::filesystem::path persist(const RunResult& run, const std::filesystem::path& output_dir) {
    std::error_code ec;
    std::filesystem::create_directories(output_dir, ec);
    if (ec) throw IoError("cannot create output directory " + output_dir.string() + ": " + ec.message());

    const auto jsonl = output_dir / (run.run_id + ".jsonl");
    const auto meta = output_dir / (run.run_id + ".meta.json");
    {
        std::ofstream out(jsonl, std::ios::binary | std::ios::trunc);
        if (!out) throw IoError("cannot write " + jsonl.string());
        for (const auto& t : run.transcripts) out << records_jsonl(t.records);
        if (!out) throw IoError("write failed: " + jsonl.string());
    }
    {
        std::ofstream out(meta, std::ios::binary | std::ios::trunc);
        if (!out) throw IoError("cannot write " + meta.string());
        out << run.metadata.dump(2) << '\n';
        if (!out) throw IoError("write failed: " + meta.string());
    }
    return jsonl;
}

inline std::vector<TurnRecord> load_records(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open transcript file: " + path.string());
    std::vector<TurnRecord> out;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (csv::trim(line).empty()) continue;
        try {
            out.push_back(turn_record_from_json(nlohmann::json::parse(line)));
        } catch (const std::exception& e) {
            throw SchemaError(path.string() + ": line " + std::to_string(lineno) + ": not a transcript record (" +
                              e.what() + ")");
        }
    }
    return out;
}

} // namespace affectsim
