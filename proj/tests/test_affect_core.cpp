#include <gtest/gtest.h>

#include <array>
#include <cmath>
#include <random>
#include <set>
#include <string>

#include "helpers.hpp"

using namespace affectsim;

namespace {

// Golden copy of the scale and the greeting grid, typed in independently of the library.
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

TEST(SamScale, DescriptionsMatchTable) {
    for (int k = 1; k <= 5; ++k) {
        const auto lvl = SamLevel::of_index(k);
        EXPECT_EQ(lvl.valence_desc, kValence[k - 1]);
        EXPECT_EQ(lvl.arousal_desc, kArousal[k - 1]);
        EXPECT_EQ(lvl.desc(Dimension::valence), kValence[k - 1]);
        EXPECT_EQ(lvl.desc(Dimension::arousal), kArousal[k - 1]);
    }
}

TEST(SamScale, BoundaryProbes) {
    const std::vector<std::pair<double, int>> probes{
        {0.0, 1},  {0.1, 1},  {0.19999, 1}, {0.2, 2}, {0.3, 2}, {0.39999, 2}, {0.4, 3}, {0.5, 3},
        {0.59999, 3}, {0.6, 4}, {0.7, 4}, {0.79999, 4}, {0.8, 5}, {0.9, 5}, {1.0, 5}};
    for (auto [value, level] : probes) {
        EXPECT_EQ(sam_level_of(value).index, level) << value;
        EXPECT_EQ(sam_level_of(value, Dimension::arousal).index, level) << value;
    }
}

TEST(SamScale, RejectsOutOfRange) {
    EXPECT_THROW(sam_level_of(-0.01), DomainError);
    EXPECT_THROW(sam_level_of(1.0001), DomainError);
    EXPECT_THROW(sam_level_of(std::nan("")), DomainError);
    EXPECT_THROW(SamLevel::of_index(0), DomainError);
    EXPECT_THROW(SamLevel::of_index(6), DomainError);
}

TEST(SamScale, LevelIsMonotone) {
    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int i = 0; i < 2000; ++i) {
        double a = u(rng), b = u(rng);
        if (a > b) std::swap(a, b);
        EXPECT_LE(sam_level_of(a).index, sam_level_of(b).index);
    }
}

TEST(SamScale, MidpointRoundTrips) {
    for (int v = 1; v <= 5; ++v) {
        for (int a = 1; a <= 5; ++a) {
            const SamCell c{v, a};
            const VAPoint m = cell_midpoint(c);
            EXPECT_DOUBLE_EQ(m.valence(), (2 * v - 1) / 10.0);
            EXPECT_EQ(cell_of(m), c);
        }
    }
}

TEST(VAPoint, ValidatesDomain) {
    EXPECT_NO_THROW(VAPoint(0.0, 1.0));
    EXPECT_THROW(VAPoint(-0.1, 0.5), DomainError);
    EXPECT_THROW(VAPoint(0.5, 1.1), DomainError);
    EXPECT_THROW(VAPoint(std::nan(""), 0.5), DomainError);
    const auto c = VAPoint::clamped(1.3, -0.2);
    EXPECT_EQ(c, VAPoint(1.0, 0.0));
    EXPECT_THROW(VAPoint::clamped(std::nan(""), 0.1), DomainError);
}

TEST(SamCell, ValidatesLevels) {
    EXPECT_THROW(SamCell(0, 3), DomainError);
    EXPECT_THROW(SamCell(3, 6), DomainError);
}

TEST(Greetings, AllTwentyFiveMatch) {
    std::set<std::string> seen;
    for (int v = 1; v <= 5; ++v) {
        for (int a = 1; a <= 5; ++a) {
            EXPECT_EQ(greeting_for({v, a}), kGreeting[v - 1][a - 1]) << v << "," << a;
            seen.insert(std::string(greeting_for({v, a})));
        }
    }
    EXPECT_EQ(seen.size(), 25u);
    EXPECT_EQ(greeting_for({1, 1}), "Oh... it's you again. Why bother?");
}

TEST(Greetings, KeyedByCellOfPoint) {
    EXPECT_EQ(greeting_for(cell_of({0.95, 0.95})), "Hello! Wow, I'm thrilled you're here!");
    EXPECT_EQ(greeting_for(cell_of({0.5, 0.1})), "Hello there. How are you?");
}

TEST(SamOffset, SignedLevelDifference) {
    EXPECT_EQ(sam_offset({3, 3}, {0.9, 0.1}), (SamOffset{2, -2}));
    EXPECT_EQ(sam_offset({1, 5}, {0.05, 0.95}), (SamOffset{0, 0}));
    EXPECT_EQ(sam_offset({1, 5}, {1.0, 0.0}).get(Dimension::valence), 4);
    EXPECT_EQ(sam_offset({1, 5}, {1.0, 0.0}).get(Dimension::arousal), -4);
}

TEST(EmotionalState, CellIsDerived) {
    const EmotionalState s{VAPoint{0.61, 0.2}};
    EXPECT_EQ(s.cell(), SamCell(4, 2));
    EXPECT_EQ(EmotionalState{}.cell(), SamCell(3, 3));
}

TEST(Assets, ExportMatchesShippedFile) {
    const auto shipped = nlohmann::ordered_json::parse(testing_support::slurp(testing_support::data_file("affect_assets.json")));
    EXPECT_EQ(shipped, export_assets());
    ASSERT_EQ(shipped["greetings"].size(), 25u);
    EXPECT_EQ(shipped["greetings"][0]["greeting"], kGreeting[0][0]);
    EXPECT_EQ(shipped["sam_levels"][4]["arousal"], kArousal[4]);
}
