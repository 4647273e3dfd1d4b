#pragma once

// Turn-level VA scoring. Backends: remote regressor service, word lexicon,
// and a phrasebook oracle for mock runs. `CachingScorer` adds the batching
// and per-run memoization every caller goes through.

#include <cctype>
#include <filesystem>
#include <fstream>
#include <memory>
#include <mutex>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <json.hpp>

#include "affect_core.hpp"
#include "agents.hpp"
#include "csv.hpp"
#include "http.hpp"

namespace affectsim {

class ScoringError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class ScoringBackend {
public:
    virtual ~ScoringBackend() = default;
    virtual std::vector<VAPoint> score_batch(const std::vector<std::string>& texts) = 0;
    virtual std::string identity() const = 0;
    virtual std::size_t max_batch() const { return 64; }
};

// ---------------------------------------------------------------------------
// Lexicon

struct LexiconEntry {
    std::string token;
    VAPoint va;
};

class Lexicon {
public:
    Lexicon() = default;
    explicit Lexicon(const std::vector<LexiconEntry>& entries) {
        for (const auto& e : entries) add(e);
    }

    void add(const LexiconEntry& e) {
        const std::string key = lowercase(e.token);
        if (!entries_.emplace(key, e.va).second) throw std::invalid_argument("duplicate lexicon token: " + key);
    }

    const VAPoint* find(const std::string& token) const {
        auto it = entries_.find(token);
        return it == entries_.end() ? nullptr : &it->second;
    }

    std::size_t size() const { return entries_.size(); }

private:
    std::unordered_map<std::string, VAPoint> entries_;
};

// Reads `token,valence,arousal` rows (VA in [0,1]); a header row is optional.
inline Lexicon load_lexicon(std::istream& in, const std::string& source = "<stream>") {
    Lexicon lex;
    std::size_t row = 0;
    while (auto fields = csv::read_record(in)) {
        ++row;
        if (fields->size() == 1 && csv::trim((*fields)[0]).empty()) continue;
        if (fields->size() < 3) throw std::runtime_error(source + ": row " + std::to_string(row) + ": expected 3 fields");
        const std::string token(csv::trim((*fields)[0]));
        if (row == 1 && lowercase(token) == "token") continue;
        double v = 0.0, a = 0.0;
        try {
            v = std::stod(std::string(csv::trim((*fields)[1])));
            a = std::stod(std::string(csv::trim((*fields)[2])));
        } catch (const std::exception&) {
            throw std::runtime_error(source + ": row " + std::to_string(row) + ": unparsable number");
        }
        lex.add({token, VAPoint{v, a}});
    }
    return lex;
}

inline Lexicon load_lexicon(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open lexicon file: " + path.string());
    return load_lexicon(in, path.string());
}

// Small bundled lexicon; enough for offline demos and tests. Plug a full VAD
// lexicon through load_lexicon for anything serious.
inline const Lexicon& demo_lexicon() {
    static const Lexicon lex = [] {
        static constexpr std::string_view kRows =
#include "detail/demo_lexicon.inc"
            ;
        std::istringstream in{std::string(kRows)};
        return load_lexicon(in, "<demo lexicon>");
    }();
    return lex;
}

inline std::vector<std::string> tokenize(std::string_view text) {
    std::vector<std::string> tokens;
    std::string cur;
    auto flush = [&] {
        while (!cur.empty() && cur.back() == '\'') cur.pop_back();
        std::size_t lead = 0;
        while (lead < cur.size() && cur[lead] == '\'') ++lead;
        if (lead < cur.size()) tokens.push_back(cur.substr(lead));
        cur.clear();
    };
    for (char ch : text) {
        const auto c = static_cast<unsigned char>(ch);
        if (std::isalnum(c) || c == '\'' || c >= 0x80) cur.push_back(static_cast<char>(std::tolower(c)));
        else flush();
    }
    flush();
    return tokens;
}

// Mean VA over in-lexicon tokens; (0.5, 0.5) when nothing matches.
inline VAPoint lexicon_score(const Lexicon& lex, std::string_view text) {
    double v = 0.0, a = 0.0;
    std::size_t hits = 0;
    for (const auto& tok : tokenize(text)) {
        if (const VAPoint* p = lex.find(tok)) {
            v += p->valence();
            a += p->arousal();
            ++hits;
        }
    }
    if (hits == 0) return {0.5, 0.5};
    return VAPoint::clamped(v / static_cast<double>(hits), a / static_cast<double>(hits));
}

class LexiconScorer final : public ScoringBackend {
public:
    explicit LexiconScorer(Lexicon lex, std::string name = "lexicon") : lex_(std::move(lex)), name_(std::move(name)) {}

    std::vector<VAPoint> score_batch(const std::vector<std::string>& texts) override {
        std::vector<VAPoint> out;
        out.reserve(texts.size());
        for (const auto& t : texts) out.push_back(lexicon_score(lex_, t));
        return out;
    }
    std::string identity() const override { return name_; }

private:
    Lexicon lex_;
    std::string name_;
};

// ---------------------------------------------------------------------------
// Phrasebook oracle: exact mock phrases and greeting-table lines map to their
// cell midpoint.

inline std::optional<SamCell> greeting_cell(std::string_view text) {
    for (int v = 1; v <= kSamLevels; ++v) {
        for (int a = 1; a <= kSamLevels; ++a) {
            if (greeting_for({v, a}) == text) return SamCell{v, a};
        }
    }
    return std::nullopt;
}

class PhrasebookScorer final : public ScoringBackend {
public:
    explicit PhrasebookScorer(std::shared_ptr<ScoringBackend> fallback = nullptr) : fallback_(std::move(fallback)) {}

    std::vector<VAPoint> score_batch(const std::vector<std::string>& texts) override {
        std::vector<VAPoint> out;
        out.reserve(texts.size());
        for (const auto& t : texts) {
            if (auto cell = phrase_cell(t)) out.push_back(cell_midpoint(*cell));
            else if (auto g = greeting_cell(t)) out.push_back(cell_midpoint(*g));
            else if (fallback_) out.push_back(fallback_->score_batch({t}).front());
            else out.push_back({0.5, 0.5});
        }
        return out;
    }
    std::string identity() const override {
        return "phrasebook" + (fallback_ ? "+" + fallback_->identity() : std::string{});
    }

private:
    std::shared_ptr<ScoringBackend> fallback_;
};

// ---------------------------------------------------------------------------
// Remote regressor service

class RemoteScorer final : public ScoringBackend {
public:
    explicit RemoteScorer(std::string base_url, std::size_t max_batch = 64,
                          std::chrono::milliseconds timeout = std::chrono::seconds(60))
        : base_url_(std::move(base_url)), client_(base_url_, timeout), max_batch_(max_batch) {}

    // AFFECTSIM_SCORER_URL, default http://localhost:8080.
    static std::string url_from_env() {
        const char* url = std::getenv("AFFECTSIM_SCORER_URL");
        return url ? url : "http://localhost:8080";
    }

    std::vector<VAPoint> score_batch(const std::vector<std::string>& texts) override {
        nlohmann::json body;
        try {
            body = client_.post("/score", {{"texts", texts}});
        } catch (const http::TransportError& e) {
            throw ScoringError(std::string("remote scorer: ") + e.what());
        }
        return parse_scores(body, texts.size());
    }

    static std::vector<VAPoint> parse_scores(const nlohmann::json& body, std::size_t expected) {
        std::vector<VAPoint> out;
        try {
            const auto& scores = body.at("scores");
            if (scores.size() != expected) {
                throw ScoringError("remote scorer returned " + std::to_string(scores.size()) + " scores for " +
                                   std::to_string(expected) + " texts");
            }
            for (const auto& s : scores) out.emplace_back(s.at("valence").get<double>(), s.at("arousal").get<double>());
        } catch (const nlohmann::json::exception& e) {
            throw ScoringError(std::string("remote scorer: malformed response: ") + e.what());
        } catch (const DomainError& e) {
            throw ScoringError(std::string("remote scorer: score out of range: ") + e.what());
        }
        return out;
    }

    // Model name reported by GET /health.
    std::string health() const {
        try {
            const auto body = client_.get("/health");
            if (body.value("status", "") != "ok") throw ScoringError("remote scorer unhealthy: " + body.dump());
            return body.value("model", "");
        } catch (const http::TransportError& e) {
            throw ScoringError(std::string("remote scorer: ") + e.what());
        }
    }

    std::string identity() const override { return "remote:" + base_url_; }
    std::size_t max_batch() const override { return max_batch_; }

private:
    std::string base_url_;
    http::JsonClient client_;
    std::size_t max_batch_;
};

// ---------------------------------------------------------------------------

// Order-preserving batched scoring with memoization by exact text.
class CachingScorer {
public:
    explicit CachingScorer(std::shared_ptr<ScoringBackend> backend) : backend_(std::move(backend)) {
        if (!backend_) throw std::invalid_argument("CachingScorer: null backend");
    }

    std::vector<VAPoint> score(const std::vector<std::string>& texts) {
        if (texts.empty()) throw std::invalid_argument("score: empty text list");
        for (const auto& t : texts) {
            if (t.empty()) throw std::invalid_argument("score: empty text");
        }

        std::vector<std::string> missing;
        {
            std::lock_guard lock(mu_);
            for (const auto& t : texts) {
                if (!cache_.contains(t) && std::find(missing.begin(), missing.end(), t) == missing.end()) {
                    missing.push_back(t);
                }
            }
        }
        const std::size_t batch = std::max<std::size_t>(1, backend_->max_batch());
        for (std::size_t start = 0; start < missing.size(); start += batch) {
            std::vector<std::string> chunk(missing.begin() + static_cast<std::ptrdiff_t>(start),
                                           missing.begin() + static_cast<std::ptrdiff_t>(std::min(start + batch, missing.size())));
            auto scores = backend_->score_batch(chunk);
            ++backend_calls_;
            if (scores.size() != chunk.size()) throw ScoringError("scorer returned wrong number of scores");
            std::lock_guard lock(mu_);
            for (std::size_t i = 0; i < chunk.size(); ++i) cache_.emplace(chunk[i], scores[i]);
        }

        std::vector<VAPoint> out;
        out.reserve(texts.size());
        std::lock_guard lock(mu_);
        for (const auto& t : texts) out.push_back(cache_.at(t));
        return out;
    }

    VAPoint score_one(const std::string& text) { return score({text}).front(); }

    std::string identity() const { return backend_->identity(); }
    std::size_t backend_calls() const { return backend_calls_; }

private:
    std::shared_ptr<ScoringBackend> backend_;
    std::mutex mu_;
    std::unordered_map<std::string, VAPoint> cache_;
    std::atomic<std::size_t> backend_calls_{0};
};

} // namespace affectsim
