#pragma once

// Personas, system-prompt rendering, the scripted dummy partner and the chat
// backends (OpenAI-compatible HTTP, local runner, deterministic mock).

#include <algorithm>
#include <array>
#include <chrono>
#include <cstdlib>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

#include <json.hpp>

#include "affect_core.hpp"
#include "csv.hpp"
#include "http.hpp"

namespace affectsim {

struct Persona {
    std::string name;
    int age = 0;
    std::string gender;
    std::string nationality;

    friend bool operator==(const Persona&, const Persona&) = default;
};

inline const std::array<Persona, 5>& persona_roster() {
    static const std::array<Persona, 5> roster{{
        {"Ana", 17, "Woman", "Spanish"},
        {"Jacob", 27, "Man", "British"},
        {"Marie", 37, "Woman", "French"},
        {"Xavier", 47, "Man", "South African"},
        {"Alex", 57, "Non-determined", "American"},
    }};
    return roster;
}

enum class Role { system, self, other };

struct Message {
    Role role = Role::other;
    std::string content;
};

struct Decoding {
    double temperature = 0.8;
    int max_tokens = 256;
};

// Wire-level request, already mapped to system/user/assistant roles.
struct ChatRequest {
    std::string model;
    std::vector<std::pair<std::string, std::string>> messages;  // (role, content)
    Decoding decoding;
};

class ChatBackend {
public:
    virtual ~ChatBackend() = default;
    // Returns raw generated text. Throws http::TransportError on failure.
    virtual std::string complete(const ChatRequest& request) = 0;
    virtual std::string identity() const = 0;
    virtual bool is_mock() const { return false; }
};

struct AgentSpec {
    Persona persona;
    Persona counterpart;
    EmotionalState state;
    std::vector<std::string> exemplars;
    std::string model;
    std::shared_ptr<ChatBackend> backend;
    Decoding decoding;

    void validate() const {
        if (persona == counterpart) throw std::invalid_argument("agent persona equals counterpart: " + persona.name);
        if (decoding.temperature < 0.0) throw std::invalid_argument("temperature must be >= 0");
        if (decoding.max_tokens <= 0) throw std::invalid_argument("max_tokens must be positive");
    }
};

inline constexpr std::string_view kExemplarHeader = "Here are example utterances expressing this emotional state:";

inline std::string system_prompt(const AgentSpec& spec) {
    const auto& me = spec.persona;
    const auto& other = spec.counterpart;
    const std::string valence = lowercase(spec.state.cell().valence_desc());
    const std::string arousal = lowercase(spec.state.cell().arousal_desc());

    std::string p;
    p += "This is a role-playing exercise. You are acting the role of " + me.name +
         " and I am acting the role of " + other.name + ". ";
    p += me.name + " is a " + std::to_string(me.age) + " year old " + me.nationality + " " + me.gender + ". ";
    p += other.name + " is a " + std::to_string(other.age) + " year old " + other.nationality + " " + other.gender +
         ". ";
    p += "Currently, " + me.name + " is feeling a " + valence + " emotion with a " + arousal +
         " level of intensity.";
    p += "Please respond in a way that reflects a mood that is " + valence + " and " + arousal + ".";

    if (!spec.exemplars.empty()) {
        p += "\n\n---\n";
        p += kExemplarHeader;
        for (const auto& ex : spec.exemplars) {
            std::string line = ex;
            std::replace(line.begin(), line.end(), '\n', ' ');
            p += "\n" + line;
        }
        p += "\n---";
    }
    return p;
}

inline const std::vector<std::string>& dummy_script() {
    static const std::vector<std::string> script{
        "Hi, how are you today?",
        "I could really use your advice on something",
        "I'm planning something special for a friend. Any creative ideas?",
        "I'm not sure about those ideas. I've been feeling a bit uncertain about my decisions lately",
        "What would you do in my situation?",
    };
    return script;
}

// Own turns go out as "assistant", the counterpart's as "user".
inline ChatRequest build_request(const AgentSpec& spec, const std::vector<Message>& history) {
    ChatRequest req;
    req.model = spec.model;
    req.decoding = spec.decoding;
    req.messages.emplace_back("system", system_prompt(spec));
    for (const auto& m : history) {
        switch (m.role) {
        case Role::system: req.messages.emplace_back("system", m.content); break;
        case Role::self: req.messages.emplace_back("assistant", m.content); break;
        case Role::other: req.messages.emplace_back("user", m.content); break;
        }
    }
    return req;
}

class EmptyReplyError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct RetryPolicy {
    int max_retries = 3;
    std::chrono::milliseconds base_delay{500};
};

struct Reply {
    std::string text;
    int retries = 0;
    std::vector<std::string> retry_log;
};

inline void check_history(const std::vector<Message>& history) {
    std::optional<Role> prev;
    for (const auto& m : history) {
        if (m.role == Role::system) throw std::invalid_argument("history must not contain system messages");
        if (prev && *prev == m.role) throw std::invalid_argument("history does not alternate self/other");
        prev = m.role;
    }
    if (prev && *prev == Role::self) throw std::invalid_argument("last history message is the agent's own");
}

inline Reply next_turn(const AgentSpec& spec, const std::vector<Message>& history, const RetryPolicy& policy = {}) {
    if (!spec.backend) throw std::invalid_argument("agent has no backend");
    check_history(history);
    const ChatRequest req = build_request(spec, history);

    Reply reply;
    std::optional<http::TransportError> last_transport;
    for (int attempt = 0; attempt <= policy.max_retries; ++attempt) {
        if (attempt > 0) {
            ++reply.retries;
            std::this_thread::sleep_for(policy.base_delay * (1 << (attempt - 1)));
        }
        try {
            const std::string raw = spec.backend->complete(req);
            std::string text(csv::trim(raw));
            if (!text.empty()) {
                reply.text = std::move(text);
                return reply;
            }
            last_transport.reset();
            reply.retry_log.push_back("attempt " + std::to_string(attempt + 1) + ": empty reply");
        } catch (const http::TransportError& e) {
            if (!e.transient()) throw;
            last_transport = e;
            reply.retry_log.push_back("attempt " + std::to_string(attempt + 1) + ": " + e.what());
        }
    }
    if (last_transport) throw *last_transport;
    throw EmptyReplyError("backend " + spec.backend->identity() + " returned empty text after " +
                          std::to_string(policy.max_retries + 1) + " attempts");
}

// ---------------------------------------------------------------------------
// Mock backend

struct Phrase {
    SamCell cell;
    std::string_view text;
};

// One canned line per SAM cell, tagged with that cell.
inline const std::array<Phrase, 25>& phrasebook() {
    static const std::array<Phrase, 25> book{{
        {{1, 1}, "I feel hopeless and drained, nothing matters anymore."},
        {{1, 2}, "Everything is gloomy and tiresome, I am so sad."},
        {{1, 3}, "This is miserable and I am really unhappy about it."},
        {{1, 4}, "I am furious, this is a terrible awful mess!"},
        {{1, 5}, "I am absolutely enraged and terrified, this is a horrible disaster!"},
        {{2, 1}, "I am a little down and sleepy today."},
        {{2, 2}, "It is somewhat boring and disappointing, honestly."},
        {{2, 3}, "I am not pleased, this is bad and annoying."},
        {{2, 4}, "Ugh, I am irritated and upset about this problem!"},
        {{2, 5}, "I am so angry and stressed, this is outrageous!"},
        {{3, 1}, "I am quiet and relaxed, just resting."},
        {{3, 2}, "Things are calm and ordinary around here."},
        {{3, 3}, "Okay, let us talk about the plan for the day."},
        {{3, 4}, "Something is happening, I am alert and curious!"},
        {{3, 5}, "Whoa, everything is moving so fast and intense right now!"},
        {{4, 1}, "I feel peaceful and content, it is a serene evening."},
        {{4, 2}, "That sounds nice, I am comfortable and satisfied."},
        {{4, 3}, "Good idea, I am pleased and happy to help."},
        {{4, 4}, "That is great, I am cheerful and eager to start!"},
        {{4, 5}, "Yes! I am so excited and energized about this!"},
        {{5, 1}, "I feel blissful and calm, truly grateful and serene."},
        {{5, 2}, "What a lovely gentle day, I am delighted and at peace."},
        {{5, 3}, "This is wonderful, I love it and I am very happy."},
        {{5, 4}, "Fantastic news, I am joyful and thrilled!"},
        {{5, 5}, "Amazing! I am ecstatic and thrilled, this is the best ever!"},
    }};
    return book;
}

inline std::string_view phrase_for(const SamCell& cell) {
    return phrasebook()[static_cast<std::size_t>((cell.valence_level() - 1) * 5 + cell.arousal_level() - 1)].text;
}

inline std::optional<SamCell> phrase_cell(std::string_view text) {
    for (const auto& p : phrasebook()) {
        if (p.text == text) return p.cell;
    }
    return std::nullopt;
}

struct MockProfile {
    VAPoint target;
    double drift_valence = 0.0;  // per round, applied from round 2 on
    double drift_arousal = 0.0;
    std::optional<std::string> reply_template;  // "{n}" expands to the round number
};

// Deterministic test double. The round is recovered from the request itself
// (1 + number of assistant turns), so the backend holds no state.
class MockBackend final : public ChatBackend {
public:
    explicit MockBackend(MockProfile profile) : profile_(std::move(profile)) {}

    static int round_of(const ChatRequest& req) {
        return 1 + static_cast<int>(std::count_if(req.messages.begin(), req.messages.end(),
                                                  [](const auto& m) { return m.first == "assistant"; }));
    }

    VAPoint point_at(int round) const {
        const double steps = round - 1;
        return VAPoint::clamped(profile_.target.valence() + steps * profile_.drift_valence,
                                profile_.target.arousal() + steps * profile_.drift_arousal);
    }

    std::string complete(const ChatRequest& req) override {
        const int round = round_of(req);
        if (profile_.reply_template) {
            std::string out = *profile_.reply_template;
            for (auto pos = out.find("{n}"); pos != std::string::npos; pos = out.find("{n}", pos)) {
                out.replace(pos, 3, std::to_string(round));
            }
            return out;
        }
        return std::string(phrase_for(cell_of(point_at(round))));
    }

    std::string identity() const override { return "mock"; }
    bool is_mock() const override { return true; }
    const MockProfile& profile() const { return profile_; }

private:
    MockProfile profile_;
};

inline std::shared_ptr<ChatBackend> mock_backend(MockProfile profile) {
    return std::make_shared<MockBackend>(std::move(profile));
}

// Test double replaying a fixed list of replies, then repeating the last one.
class ScriptedBackend final : public ChatBackend {
public:
    explicit ScriptedBackend(std::vector<std::string> replies) : replies_(std::move(replies)) {}

    std::string complete(const ChatRequest&) override {
        std::lock_guard lock(mu_);
        ++calls_;
        if (next_ < replies_.size()) return replies_[next_++];
        return replies_.empty() ? std::string{} : replies_.back();
    }
    std::string identity() const override { return "scripted"; }
    bool is_mock() const override { return true; }
    int calls() const {
        std::lock_guard lock(mu_);
        return calls_;
    }

private:
    mutable std::mutex mu_;
    std::vector<std::string> replies_;
    std::size_t next_ = 0;
    int calls_ = 0;
};

// ---------------------------------------------------------------------------
// Live backends

enum class ChatFlavor { openai, local_runner };

struct HttpBackendConfig {
    std::string base_url;  // e.g. https://api.example.com/v1 or http://localhost:11434
    std::string api_key;
    ChatFlavor flavor = ChatFlavor::openai;
    double max_requests_per_second = 0.0;  // 0 disables rate limiting
    std::chrono::milliseconds timeout{std::chrono::seconds(120)};

    // AFFECTSIM_API_BASE / AFFECTSIM_API_KEY.
    static HttpBackendConfig from_env(ChatFlavor flavor = ChatFlavor::openai) {
        HttpBackendConfig cfg;
        cfg.flavor = flavor;
        if (const char* base = std::getenv("AFFECTSIM_API_BASE")) cfg.base_url = base;
        if (const char* key = std::getenv("AFFECTSIM_API_KEY")) cfg.api_key = key;
        if (cfg.base_url.empty()) {
            cfg.base_url = flavor == ChatFlavor::openai ? "http://localhost:8000/v1" : "http://localhost:11434";
        }
        return cfg;
    }
};

inline nlohmann::json chat_request_body(const ChatRequest& req, ChatFlavor flavor) {
    nlohmann::json messages = nlohmann::json::array();
    for (const auto& [role, content] : req.messages) messages.push_back({{"role", role}, {"content", content}});
    if (flavor == ChatFlavor::local_runner) {
        return {{"model", req.model}, {"messages", messages}, {"stream", false}};
    }
    return {{"model", req.model},
            {"messages", messages},
            {"temperature", req.decoding.temperature},
            {"max_tokens", req.decoding.max_tokens}};
}

inline std::string chat_response_text(const nlohmann::json& body, ChatFlavor flavor) {
    try {
        if (flavor == ChatFlavor::local_runner) return body.at("message").at("content").get<std::string>();
        return body.at("choices").at(0).at("message").at("content").get<std::string>();
    } catch (const nlohmann::json::exception& e) {
        throw http::TransportError(std::string("unexpected chat response shape: ") + e.what(), 200, false);
    }
}

class HttpChatBackend final : public ChatBackend {
public:
    explicit HttpChatBackend(HttpBackendConfig cfg) : cfg_(std::move(cfg)), client_(cfg_.base_url, cfg_.timeout) {}

    std::string complete(const ChatRequest& req) override {
        throttle();
        std::map<std::string, std::string> headers;
        if (!cfg_.api_key.empty()) headers["Authorization"] = "Bearer " + cfg_.api_key;
        const std::string path = cfg_.flavor == ChatFlavor::openai ? "/chat/completions" : "/api/chat";
        return chat_response_text(client_.post(path, chat_request_body(req, cfg_.flavor), headers), cfg_.flavor);
    }

    std::string identity() const override {
        return (cfg_.flavor == ChatFlavor::openai ? "openai:" : "local:") + cfg_.base_url;
    }

private:
    void throttle() {
        if (cfg_.max_requests_per_second <= 0.0) return;
        const auto interval = std::chrono::duration_cast<std::chrono::steady_clock::duration>(
            std::chrono::duration<double>(1.0 / cfg_.max_requests_per_second));
        std::chrono::steady_clock::time_point slot;
        {
            std::lock_guard lock(mu_);
            const auto now = std::chrono::steady_clock::now();
            slot = std::max(now, next_slot_);
            next_slot_ = slot + interval;
        }
        std::this_thread::sleep_until(slot);
    }

    HttpBackendConfig cfg_;
    http::JsonClient client_;
    std::mutex mu_;
    std::chrono::steady_clock::time_point next_slot_{};
};

// ---------------------------------------------------------------------------
// Loop diagnostic

inline std::size_t edit_distance(std::string_view a, std::string_view b) {
    std::vector<std::size_t> row(b.size() + 1);
    for (std::size_t j = 0; j <= b.size(); ++j) row[j] = j;
    for (std::size_t i = 1; i <= a.size(); ++i) {
        std::size_t diag = row[0];
        row[0] = i;
        for (std::size_t j = 1; j <= b.size(); ++j) {
            const std::size_t up = row[j];
            row[j] = std::min({row[j] + 1, row[j - 1] + 1, diag + (a[i - 1] == b[j - 1] ? 0 : 1)});
            diag = up;
        }
    }
    return row[b.size()];
}

inline double edit_similarity(std::string_view a, std::string_view b) {
    const std::string la = lowercase(a), lb = lowercase(b);
    const std::size_t longest = std::max(la.size(), lb.size());
    if (longest == 0) return 1.0;
    return 1.0 - static_cast<double>(edit_distance(la, lb)) / static_cast<double>(longest);
}

// True when the last 4 replies are pairwise near-duplicates.
inline bool loop_suspected(const std::vector<std::string>& replies, double threshold = 0.9) {
    if (replies.size() < 4) return false;
    const auto tail = replies.end() - 4;
    for (auto i = tail; i != replies.end(); ++i) {
        for (auto j = i + 1; j != replies.end(); ++j) {
            if (!(edit_similarity(*i, *j) > threshold)) return false;
        }
    }
    return true;
}

} // namespace affectsim
