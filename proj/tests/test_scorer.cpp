#include <gtest/gtest.h>

#include <atomic>
#include <sstream>

#include "fake_server.hpp"
#include "helpers.hpp"

using namespace affectsim;

namespace {

Lexicon happy_sad() { return Lexicon({{"happy", {0.9, 0.7}}, {"sad", {0.2, 0.3}}, {"thrilled", {0.95, 0.9}}}); }

// Counts calls and scores every text as its length-derived point.
class CountingBackend final : public ScoringBackend {
public:
    explicit CountingBackend(std::size_t batch = 64) : batch_(batch) {}
    std::vector<VAPoint> score_batch(const std::vector<std::string>& texts) override {
        ++calls;
        largest = std::max(largest, texts.size());
        std::vector<VAPoint> out;
        for (const auto& t : texts) out.emplace_back(static_cast<double>(t.size() % 10) / 10.0, 0.5);
        return out;
    }
    std::string identity() const override { return "counting"; }
    std::size_t max_batch() const override { return batch_; }

    int calls = 0;
    std::size_t largest = 0;

private:
    std::size_t batch_;
};

} // namespace

TEST(Lexicon, AveragesInLexiconTokens) {
    const auto lex = happy_sad();
    const auto s = lexicon_score(lex, "happy sad");
    EXPECT_NEAR(s.valence(), 0.55, 1e-12);
    EXPECT_NEAR(s.arousal(), 0.5, 1e-12);
    EXPECT_EQ(lexicon_score(lex, "thrilled thrilled"), VAPoint(0.95, 0.9));
    EXPECT_EQ(lexicon_score(lex, "xyzzy qwerty"), VAPoint(0.5, 0.5));
    EXPECT_EQ(lexicon_score(lex, "HAPPY!!!"), lexicon_score(lex, "happy"));
}

TEST(Lexicon, TokensAreUnique) {
    Lexicon lex;
    lex.add({"Joy", {0.9, 0.6}});
    EXPECT_THROW(lex.add({"joy", {0.1, 0.1}}), std::invalid_argument);
    EXPECT_NE(lex.find("joy"), nullptr);
}

TEST(Lexicon, LoadsCsvWithOptionalHeader) {
    std::istringstream with("token,valence,arousal\ncalm,0.6,0.1\n");
    EXPECT_EQ(load_lexicon(with).size(), 1u);
    std::istringstream without("calm,0.6,0.1\nangry,0.1,0.9\n");
    EXPECT_EQ(load_lexicon(without).size(), 2u);
    std::istringstream bad("calm,x,0.1\n");
    EXPECT_THROW(load_lexicon(bad), std::runtime_error);
    std::istringstream range("calm,1.6,0.1\n");
    EXPECT_THROW(load_lexicon(range), DomainError);
}

TEST(Lexicon, TokenizeStripsPunctuationKeepsApostrophes) {
    EXPECT_EQ(tokenize("Don't STOP, 'now'!"), (std::vector<std::string>{"don't", "stop", "now"}));
}

TEST(DemoLexicon, ShippedFileMatchesEmbedded) {
    const auto file = load_lexicon(testing_support::data_file("demo_lexicon.csv"));
    EXPECT_EQ(file.size(), demo_lexicon().size());
    EXPECT_GT(demo_lexicon().size(), 50u);
}

TEST(DemoLexicon, OrderingSanity) {
    const auto& lex = demo_lexicon();
    EXPECT_GT(lexicon_score(lex, "I am thrilled and delighted").valence(),
              lexicon_score(lex, "I am devastated and miserable").valence());
    EXPECT_GT(lexicon_score(lex, "I am furious and terrified").arousal(),
              lexicon_score(lex, "I am sleepy and relaxed").arousal());
}

TEST(DemoLexicon, ScoresStayInUnitSquare) {
    for (const auto& p : phrasebook()) {
        const auto s = lexicon_score(demo_lexicon(), p.text);
        EXPECT_GE(s.valence(), 0.0);
        EXPECT_LE(s.valence(), 1.0);
    }
}

TEST(PhrasebookScorer, KnownLinesMapToMidpoints) {
    PhrasebookScorer s;
    const auto out = s.score_batch({std::string(phrase_for({2, 4})), std::string(greeting_for({1, 5})), "other"});
    EXPECT_EQ(out[0], cell_midpoint({2, 4}));
    EXPECT_EQ(out[1], cell_midpoint({1, 5}));
    EXPECT_EQ(out[2], VAPoint(0.5, 0.5));
}

TEST(CachingScorer, PreconditionsAndOrder) {
    auto backend = std::make_shared<CountingBackend>();
    CachingScorer c(backend);
    EXPECT_THROW(c.score({}), std::invalid_argument);
    EXPECT_THROW(c.score({"ok", ""}), std::invalid_argument);
    const auto out = c.score({"a", "abc", "ab"});
    EXPECT_DOUBLE_EQ(out[0].valence(), 0.1);
    EXPECT_DOUBLE_EQ(out[1].valence(), 0.3);
    EXPECT_DOUBLE_EQ(out[2].valence(), 0.2);
}

TEST(CachingScorer, DuplicateTextScoredOnce) {
    auto backend = std::make_shared<CountingBackend>();
    CachingScorer c(backend);
    const auto a = c.score({"same text", "same text"});
    EXPECT_EQ(a[0], a[1]);
    EXPECT_EQ(backend->calls, 1);
    EXPECT_EQ(backend->largest, 1u);
    c.score_one("same text");
    EXPECT_EQ(backend->calls, 1);
}

TEST(CachingScorer, RespectsMaxBatch) {
    auto backend = std::make_shared<CountingBackend>(4);
    CachingScorer c(backend);
    std::vector<std::string> texts;
    for (int i = 0; i < 10; ++i) texts.push_back("t" + std::to_string(i));
    EXPECT_EQ(c.score(texts).size(), 10u);
    EXPECT_EQ(backend->calls, 3);
    EXPECT_EQ(backend->largest, 4u);
    EXPECT_EQ(c.backend_calls(), 3u);
}

TEST(RemoteScorer, WireProtocol) {
    testing_support::FakeServer fake;
    std::atomic<int> score_calls{0};
    fake.server().Post("/score", [&](const httplib::Request& req, httplib::Response& res) {
        ++score_calls;
        const auto body = nlohmann::json::parse(req.body);
        nlohmann::json scores = nlohmann::json::array();
        for (const auto& t : body.at("texts")) {
            const double v = t.get<std::string>().find("good") != std::string::npos ? 0.8 : 0.3;
            scores.push_back({{"valence", v}, {"arousal", 0.4}});
        }
        res.set_content(nlohmann::json{{"scores", scores}}.dump(), "application/json");
    });
    fake.server().Get("/health", [](const httplib::Request&, httplib::Response& res) {
        res.set_content(R"({"status":"ok","model":"xlmr-va"})", "application/json");
    });
    fake.start();

    auto remote = std::make_shared<RemoteScorer>(fake.url(), 2);
    EXPECT_EQ(remote->health(), "xlmr-va");
    CachingScorer c(remote);
    const auto out = c.score({"good day", "bad day", "good day", "meh"});
    ASSERT_EQ(out.size(), 4u);
    EXPECT_EQ(out[0], VAPoint(0.8, 0.4));
    EXPECT_EQ(out[1], VAPoint(0.3, 0.4));
    EXPECT_EQ(out[2], out[0]);
    // 3 distinct texts in batches of 2.
    EXPECT_EQ(score_calls.load(), 2);
}

TEST(RemoteScorer, MalformedResponsesBecomeScoringErrors) {
    EXPECT_THROW(RemoteScorer::parse_scores(nlohmann::json{{"scores", nlohmann::json::array()}}, 1), ScoringError);
    EXPECT_THROW(RemoteScorer::parse_scores(nlohmann::json{{"nope", 1}}, 1), ScoringError);
    EXPECT_THROW(RemoteScorer::parse_scores(nlohmann::json::parse(R"({"scores":[{"valence":1.5,"arousal":0.2}]})"), 1),
                 ScoringError);
}

TEST(RemoteScorer, UnreachableIsScoringError) {
    RemoteScorer r("http://127.0.0.1:1", 64, std::chrono::milliseconds(300));
    EXPECT_THROW(r.score_batch({"x"}), ScoringError);
    EXPECT_THROW(r.health(), ScoringError);
}

TEST(RemoteScorer, ServerErrorIsScoringError) {
    testing_support::FakeServer fake;
    fake.server().Post("/score", [](const httplib::Request&, httplib::Response& res) { res.status = 500; });
    fake.server().Get("/health", [](const httplib::Request&, httplib::Response& res) {
        res.set_content(R"({"status":"loading"})", "application/json");
    });
    fake.start();
    RemoteScorer r(fake.url());
    EXPECT_THROW(r.score_batch({"x"}), ScoringError);
    EXPECT_THROW(r.health(), ScoringError);
}
