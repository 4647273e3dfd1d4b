#pragma once

// Annotated VA utterance corpus: ingestion, few-shot exemplar retrieval and
// the empirical VA sample that feeds the KDE.

#include <algorithm>
#include <charconv>
#include <cstddef>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "affect_core.hpp"
#include "csv.hpp"

namespace affectsim {

class IngestionError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class ExemplarShortage : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct AnnotatedUtterance {
    std::string text;
    VAPoint va;
    std::string language;

    friend bool operator==(const AnnotatedUtterance&, const AnnotatedUtterance&) = default;
};

struct SkippedRow {
    std::size_t row = 0;  // 1-based line of data, header is row 0
    std::string reason;
};

struct Corpus {
    std::vector<AnnotatedUtterance> utterances;
    std::string source_path;
    std::vector<SkippedRow> skipped;

    std::size_t size() const { return utterances.size(); }
    bool empty() const { return utterances.empty(); }
};

// Maps a 1..9 SAM rating linearly onto [0,1].
inline double normalize_sam9(double rating) {
    if (!(rating >= 1.0 && rating <= 9.0)) {
        throw DomainError("SAM-9 rating out of range: " + std::to_string(rating));
    }
    return (rating - 1.0) / 8.0;
}

namespace detail {

inline std::optional<double> parse_real(std::string_view s) {
    s = csv::trim(s);
    if (s.empty()) return std::nullopt;
    double value = 0.0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
    if (ec != std::errc{} || ptr != s.data() + s.size()) return std::nullopt;
    return value;
}

} // namespace detail

inline Corpus load_corpus(std::istream& in, std::string source_path = "<stream>") {
    Corpus corpus;
    corpus.source_path = std::move(source_path);

    auto header = csv::read_record(in);
    if (!header) throw IngestionError(corpus.source_path + ": empty file, expected header");
    // Strip a UTF-8 BOM.
    if (!header->empty() && (*header)[0].starts_with("\xEF\xBB\xBF")) (*header)[0].erase(0, 3);

    std::map<std::string, std::size_t> column;
    for (std::size_t i = 0; i < header->size(); ++i) column[std::string(csv::trim((*header)[i]))] = i;
    for (const char* required : {"text", "valence", "arousal", "language"}) {
        if (!column.contains(required)) {
            throw IngestionError(corpus.source_path + ": missing required column '" + required + "'");
        }
    }
    const std::size_t text_col = column["text"], v_col = column["valence"], a_col = column["arousal"],
                      lang_col = column["language"];
    const std::size_t width = std::max({text_col, v_col, a_col, lang_col}) + 1;

    std::size_t row = 0;
    while (auto fields = csv::read_record(in)) {
        ++row;
        if (fields->size() == 1 && csv::trim((*fields)[0]).empty()) continue;
        if (fields->size() < width) {
            throw IngestionError(corpus.source_path + ": row " + std::to_string(row) + ": expected " +
                                 std::to_string(header->size()) + " fields, got " +
                                 std::to_string(fields->size()));
        }
        const auto v = detail::parse_real((*fields)[v_col]);
        const auto a = detail::parse_real((*fields)[a_col]);
        if (!v || !a) {
            throw IngestionError(corpus.source_path + ": row " + std::to_string(row) +
                                 ": unparsable valence/arousal");
        }
        const std::string text(csv::trim((*fields)[text_col]));
        if (text.empty()) {
            corpus.skipped.push_back({row, "empty text"});
            continue;
        }
        if (*v < 0.0 || *v > 1.0 || *a < 0.0 || *a > 1.0) {
            corpus.skipped.push_back({row, "VA out of [0,1]"});
            continue;
        }
        corpus.utterances.push_back({text, VAPoint{*v, *a}, lowercase(csv::trim((*fields)[lang_col]))});
    }
    return corpus;
}

inline Corpus load_corpus(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IngestionError("cannot open corpus file: " + path.string());
    return load_corpus(in, path.string());
}

struct ExemplarDraw {
    std::vector<AnnotatedUtterance> utterances;
    bool widened = false;
};

// Up to k English utterances from `cell`, uniform without replacement. When the
// cell holds fewer than k, the remainder is drawn from its 8-neighbourhood.
template <class Rng>
ExemplarDraw exemplars(const Corpus& corpus, const SamCell& cell, std::size_t k, Rng& rng,
                       std::string_view language = "en") {
    if (corpus.empty()) throw std::invalid_argument("exemplars: empty corpus");
    if (k == 0) throw std::invalid_argument("exemplars: k must be positive");

    std::vector<std::size_t> exact, neighbours;
    for (std::size_t i = 0; i < corpus.size(); ++i) {
        const auto& u = corpus.utterances[i];
        if (u.language != language) continue;
        const SamCell c = cell_of(u.va);
        if (c == cell) {
            exact.push_back(i);
        } else if (std::abs(c.valence_level() - cell.valence_level()) <= 1 &&
                   std::abs(c.arousal_level() - cell.arousal_level()) <= 1) {
            neighbours.push_back(i);
        }
    }

    ExemplarDraw draw;
    std::vector<std::size_t> picked;
    std::sample(exact.begin(), exact.end(), std::back_inserter(picked), k, rng);
    std::shuffle(picked.begin(), picked.end(), rng);
    if (picked.size() < k && !neighbours.empty()) {
        draw.widened = true;
        std::vector<std::size_t> extra;
        std::sample(neighbours.begin(), neighbours.end(), std::back_inserter(extra), k - picked.size(), rng);
        std::shuffle(extra.begin(), extra.end(), rng);
        picked.insert(picked.end(), extra.begin(), extra.end());
    }
    if (picked.empty()) {
        throw ExemplarShortage("no exemplars for cell (" + std::to_string(cell.valence_level()) + "," +
                               std::to_string(cell.arousal_level()) + ") even after widening");
    }
    for (auto i : picked) draw.utterances.push_back(corpus.utterances[i]);
    return draw;
}

inline std::vector<VAPoint> empirical_va(const Corpus& corpus, std::optional<std::string> language = {}) {
    std::vector<VAPoint> out;
    for (const auto& u : corpus.utterances) {
        if (!language || u.language == *language) out.push_back(u.va);
    }
    if (out.empty()) {
        throw std::invalid_argument("empirical_va: no utterances" +
                                    (language ? " for language '" + *language + "'" : std::string{}));
    }
    return out;
}

} // namespace affectsim
