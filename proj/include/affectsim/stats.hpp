#pragma once

// Rank correlation, correlation comparison, group tests and the per-turn
// aggregates behind the offset, convergence and trajectory reports.
//
// Units: correlations work on continuous VA; offsets, convergence and
// trajectories work on SAM levels (1..5).

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <map>
#include <numeric>
#include <optional>
#include <set>
#include <cstdio>
#include <span>
#include <stdexcept>
#include <string>
#include <tuple>
#include <vector>

#include "affect_core.hpp"
#include "experiments.hpp"

namespace affectsim::stats {

class UndefinedCorrelation : public DomainError {
public:
    using DomainError::DomainError;
};

// 1-based ranks; tied values share the mean of the ranks they span.
inline std::vector<double> average_ranks(std::span<const double> x) {
    std::vector<std::size_t> order(x.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return x[a] < x[b]; });
    std::vector<double> ranks(x.size());
    for (std::size_t i = 0; i < order.size();) {
        std::size_t j = i;
        while (j + 1 < order.size() && x[order[j + 1]] == x[order[i]]) ++j;
        const double mean_rank = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
        for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = mean_rank;
        i = j + 1;
    }
    return ranks;
}

inline double pearson(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size()) throw std::invalid_argument("pearson: length mismatch");
    const double n = static_cast<double>(x.size());
    const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
    const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
    double sxy = 0.0, sxx = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxy += (x[i] - mx) * (y[i] - my);
        sxx += (x[i] - mx) * (x[i] - mx);
        syy += (y[i] - my) * (y[i] - my);
    }
    if (sxx == 0.0 || syy == 0.0) throw UndefinedCorrelation("correlation undefined for constant input");
    return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

inline double spearman(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size()) throw std::invalid_argument("spearman: length mismatch");
    if (x.size() < 3) throw std::invalid_argument("spearman: need at least 3 pairs");
    const auto rx = average_ranks(x);
    const auto ry = average_ranks(y);
    return pearson(rx, ry);
}

// Two-sided tail probability of the standard normal.
inline double normal_two_sided_p(double z) { return std::erfc(std::abs(z) / std::sqrt(2.0)); }

struct ZTest {
    double z = 0.0;
    double p = 1.0;
};

// Fisher z comparison of two independent Spearman coefficients, using the
// 1.06/(n-3) variance for rank correlations.
inline ZTest fisher_z_compare(double r1, std::size_t n1, double r2, std::size_t n2) {
    if (!(std::abs(r1) < 1.0) || !(std::abs(r2) < 1.0)) throw DomainError("fisher_z_compare: |r| must be < 1");
    if (n1 <= 3 || n2 <= 3) throw DomainError("fisher_z_compare: n must exceed 3");
    const double se = std::sqrt(1.06 / static_cast<double>(n1 - 3) + 1.06 / static_cast<double>(n2 - 3));
    const double z = (std::atanh(r1) - std::atanh(r2)) / se;
    return {z, normal_two_sided_p(z)};
}

inline std::vector<double> bonferroni(std::span<const double> p_values, std::size_t m) {
    if (m == 0) throw std::invalid_argument("bonferroni: m must be positive");
    if (m < p_values.size()) throw std::invalid_argument("bonferroni: m smaller than number of tests");
    std::vector<double> out;
    out.reserve(p_values.size());
    for (double p : p_values) {
        if (!(p >= 0.0 && p <= 1.0)) throw DomainError("bonferroni: p outside [0,1]");
        out.push_back(std::min(1.0, p * static_cast<double>(m)));
    }
    return out;
}

inline std::size_t pairwise_family_size(std::size_t k) { return k * (k - 1) / 2; }

struct MannWhitney {
    double u_a = 0.0;  // pairs (a_i, b_j) with a_i > b_j, ties count 1/2
    double u_b = 0.0;
    double variance = 0.0;  // tie-corrected null variance of U
    double z = 0.0;
    double p = 1.0;  // two-sided, normal approximation with continuity correction
};

inline MannWhitney mann_whitney_u(std::span<const double> a, std::span<const double> b) {
    if (a.empty() || b.empty()) throw std::invalid_argument("mann_whitney_u: empty sample");
    std::vector<double> pooled(a.begin(), a.end());
    pooled.insert(pooled.end(), b.begin(), b.end());
    const auto ranks = average_ranks(pooled);
    const double n1 = static_cast<double>(a.size()), n2 = static_cast<double>(b.size());
    const double n = n1 + n2;
    const double rank_sum_a = std::accumulate(ranks.begin(), ranks.begin() + static_cast<std::ptrdiff_t>(a.size()), 0.0);

    MannWhitney out;
    out.u_a = rank_sum_a - n1 * (n1 + 1.0) / 2.0;
    out.u_b = n1 * n2 - out.u_a;

    std::vector<double> sorted = pooled;
    std::sort(sorted.begin(), sorted.end());
    double tie_term = 0.0;
    for (std::size_t i = 0; i < sorted.size();) {
        std::size_t j = i;
        while (j < sorted.size() && sorted[j] == sorted[i]) ++j;
        const double t = static_cast<double>(j - i);
        tie_term += t * t * t - t;
        i = j;
    }
    out.variance = n > 1.0 ? n1 * n2 / 12.0 * ((n + 1.0) - tie_term / (n * (n - 1.0))) : 0.0;
    if (out.variance <= 0.0) return out;  // all values tied: no evidence either way

    const double mean = n1 * n2 / 2.0;
    const double dev = std::max(0.0, std::abs(out.u_a - mean) - 0.5);
    out.z = std::copysign(dev / std::sqrt(out.variance), out.u_a - mean);
    out.p = std::min(1.0, normal_two_sided_p(out.z));
    return out;
}

// ---------------------------------------------------------------------------
// Record-level analyses

struct AnalysisOptions {
    bool exclude_greeting = false;
    double ci_level = 0.95;
};

// Parts of "<model>/<label>/<index>".
struct ConversationKey {
    std::string model;
    std::string label;
    std::string index;
};

inline ConversationKey parse_conversation_id(const std::string& id) {
    const auto last = id.rfind('/');
    if (last == std::string::npos || last == 0) return {"", "", id};
    const auto mid = id.rfind('/', last - 1);
    if (mid == std::string::npos) return {id.substr(0, last), "", id.substr(last + 1)};
    return {id.substr(0, mid), id.substr(mid + 1, last - mid - 1), id.substr(last + 1)};
}

inline bool is_greeting(const TurnRecord& r) {
    return r.agent_id == "A" && r.round == 1 && r.experiment.starts_with("chat");
}

// Agent turn with a usable score, after the greeting toggle.
inline bool analysable(const TurnRecord& r, const AnalysisOptions& opts) {
    if (!r.is_agent() || !r.scored_va || !r.prompted_va || !r.prompted_cell) return false;
    if (r.has(flag::aborted)) return false;
    if (opts.exclude_greeting && is_greeting(r)) return false;
    return true;
}

// "zero_shot", "few_shot" or the chat pairing label.
inline std::string setting_of(const TurnRecord& r) {
    if (r.experiment == "preliminary_zero_shot") return "zero_shot";
    if (r.experiment == "preliminary_few_shot") return "few_shot";
    const auto key = parse_conversation_id(r.conversation_id);
    return "chat:" + (key.label.empty() ? r.experiment : key.label);
}

struct CorrelationReport {
    std::string model;
    std::string setting;
    std::optional<double> corr_valence;
    std::optional<double> corr_arousal;
    std::optional<double> avg_corr;
    std::size_t n = 0;
    std::string note;
};

inline std::optional<double> average_correlation(std::optional<double> v, std::optional<double> a) {
    if (!v || !a) return std::nullopt;
    return (*v + *a) / 2.0;
}

// Spearman of prompted vs scored VA over one model-setting's records.
inline CorrelationReport correlation_report(const std::vector<TurnRecord>& records, const std::string& model,
                                            const std::string& setting) {
    CorrelationReport rep{model, setting, {}, {}, {}, records.size(), {}};
    if (records.size() < 3) {
        rep.note = "fewer than 3 scored records";
        return rep;
    }
    std::vector<double> pv, sv, pa, sa;
    for (const auto& r : records) {
        pv.push_back(r.prompted_va->valence());
        sv.push_back(r.scored_va->valence());
        pa.push_back(r.prompted_va->arousal());
        sa.push_back(r.scored_va->arousal());
    }
    auto guarded = [&](std::span<const double> x, std::span<const double> y, const char* dim) -> std::optional<double> {
        try {
            return spearman(x, y);
        } catch (const UndefinedCorrelation&) {
            rep.note += std::string(rep.note.empty() ? "" : "; ") + dim + " correlation undefined (constant input)";
            return std::nullopt;
        }
    };
    rep.corr_valence = guarded(pv, sv, "valence");
    rep.corr_arousal = guarded(pa, sa, "arousal");
    rep.avg_corr = average_correlation(rep.corr_valence, rep.corr_arousal);
    return rep;
}

inline std::vector<CorrelationReport> correlation_reports(const std::vector<TurnRecord>& records,
                                                          const AnalysisOptions& opts = {}) {
    std::map<std::pair<std::string, std::string>, std::vector<TurnRecord>> groups;
    for (const auto& r : records) {
        if (analysable(r, opts)) groups[{r.model, setting_of(r)}].push_back(r);
    }
    std::vector<CorrelationReport> out;
    for (const auto& [key, recs] : groups) out.push_back(correlation_report(recs, key.first, key.second));
    return out;
}

struct ModelComparison {
    std::string setting;
    Dimension dimension;
    std::string model_a;
    std::string model_b;
    ZTest test;
    double p_adjusted = 1.0;
};

// Pairwise Fisher z tests between models within each setting, Bonferroni over k(k-1)/2.
inline std::vector<ModelComparison> compare_models(const std::vector<CorrelationReport>& reports) {
    std::map<std::string, std::vector<const CorrelationReport*>> by_setting;
    for (const auto& r : reports) by_setting[r.setting].push_back(&r);
    std::vector<ModelComparison> out;
    for (const auto& [setting, reps] : by_setting) {
        const std::size_t m = pairwise_family_size(reps.size());
        for (auto dim : {Dimension::valence, Dimension::arousal}) {
            for (std::size_t i = 0; i < reps.size(); ++i) {
                for (std::size_t j = i + 1; j < reps.size(); ++j) {
                    const auto& ri = dim == Dimension::valence ? reps[i]->corr_valence : reps[i]->corr_arousal;
                    const auto& rj = dim == Dimension::valence ? reps[j]->corr_valence : reps[j]->corr_arousal;
                    if (!ri || !rj || std::abs(*ri) >= 1.0 || std::abs(*rj) >= 1.0 || reps[i]->n <= 3 || reps[j]->n <= 3) {
                        continue;
                    }
                    ModelComparison c{setting, dim, reps[i]->model, reps[j]->model,
                                      fisher_z_compare(*ri, reps[i]->n, *rj, reps[j]->n), 1.0};
                    const double p[] = {c.test.p};
                    c.p_adjusted = bonferroni(p, m).front();
                    out.push_back(c);
                }
            }
        }
    }
    return out;
}

struct OffsetRow {
    std::string model;
    Dimension dimension;
    int prompted_level = 3;
    double mean_offset = 0.0;
    std::size_t n = 0;
    std::optional<double> baseline;
};

struct OffsetSummary {
    std::vector<OffsetRow> rows;
    std::vector<std::string> notes;
};

namespace detail {

using OffsetKey = std::tuple<std::string, int, int>;  // model, dimension, level

inline std::map<OffsetKey, std::pair<double, std::size_t>> offset_groups(const std::vector<TurnRecord>& records,
                                                                         const AnalysisOptions& opts) {
    std::map<OffsetKey, std::pair<double, std::size_t>> groups;
    for (const auto& r : records) {
        if (!analysable(r, opts)) continue;
        const SamOffset off = sam_offset(*r.prompted_cell, *r.scored_va);
        for (auto dim : {Dimension::valence, Dimension::arousal}) {
            auto& g = groups[{r.model, static_cast<int>(dim), r.prompted_cell->level(dim)}];
            g.first += off.get(dim);
            ++g.second;
        }
    }
    return groups;
}

} // namespace detail

// Mean SAM offset per (model, prompted level, dimension); the optional baseline
// (e.g. a preliminary run) is attached per matching group.
inline OffsetSummary offset_summary(const std::vector<TurnRecord>& records, const AnalysisOptions& opts = {},
                                    const std::vector<TurnRecord>* baseline = nullptr) {
    OffsetSummary out;
    const auto groups = detail::offset_groups(records, opts);
    std::map<detail::OffsetKey, std::pair<double, std::size_t>> base;
    if (baseline) base = detail::offset_groups(*baseline, AnalysisOptions{});

    std::set<std::string> models;
    for (const auto& r : records) {
        if (r.is_agent()) models.insert(r.model);
    }
    for (const auto& model : models) {
        for (auto dim : {Dimension::valence, Dimension::arousal}) {
            for (int level = 1; level <= kSamLevels; ++level) {
                const detail::OffsetKey key{model, static_cast<int>(dim), level};
                const auto it = groups.find(key);
                if (it == groups.end()) {
                    out.notes.push_back(model + " " + std::string(to_string(dim)) + " level " + std::to_string(level) +
                                        ": no scored turns, group omitted");
                    continue;
                }
                OffsetRow row{model, dim, level, it->second.first / static_cast<double>(it->second.second),
                              it->second.second, std::nullopt};
                if (auto b = base.find(key); b != base.end()) {
                    row.baseline = b->second.first / static_cast<double>(b->second.second);
                }
                out.rows.push_back(row);
            }
        }
    }
    return out;
}

// ---------------------------------------------------------------------------

namespace detail {

struct ConversationView {
    std::string model;
    std::string pairing;
    std::string id;
    // [agent 0=A,1=B][round] -> scored cell
    std::map<int, SamCell> scored[2];
    std::map<int, SamCell> prompted[2];
    bool aborted = false;
};

inline std::vector<ConversationView> chat_conversations(const std::vector<TurnRecord>& records,
                                                        const AnalysisOptions& opts) {
    std::map<std::string, ConversationView> by_id;
    std::vector<std::string> order;
    for (const auto& r : records) {
        if (!r.experiment.starts_with("chat") || !r.is_agent()) continue;
        auto [it, inserted] = by_id.try_emplace(r.conversation_id);
        auto& v = it->second;
        if (inserted) {
            order.push_back(r.conversation_id);
            v.id = r.conversation_id;
            v.model = r.model;
            v.pairing = parse_conversation_id(r.conversation_id).label;
        }
        if (r.has(flag::aborted)) v.aborted = true;
        if (!analysable(r, opts)) continue;
        const int agent = r.agent_id == "A" ? 0 : 1;
        v.scored[agent][r.round] = cell_of(*r.scored_va);
        v.prompted[agent][r.round] = *r.prompted_cell;
    }
    std::vector<ConversationView> out;
    for (const auto& id : order) out.push_back(std::move(by_id[id]));
    return out;
}

} // namespace detail

struct ConvergenceCell {
    std::string model;
    std::string pairing;
    Dimension dimension;
    double first_diff = 0.0;
    double last_diff = 0.0;
    std::size_t conversations = 0;
};

struct ConvergenceResult {
    std::vector<ConvergenceCell> cells;
    std::vector<std::string> notes;
};

inline std::string format_convergence(double first, double last) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.1f -> %.1f", first, last);
    return buf;
}

// |mean over conversations of (A level - B level)| at the first and final round.
inline ConvergenceResult convergence_table(const std::vector<TurnRecord>& records, const AnalysisOptions& opts = {}) {
    ConvergenceResult out;
    const auto convs = detail::chat_conversations(records, opts);

    std::map<std::pair<std::string, std::string>, int> final_round;
    for (const auto& r : records) {
        if (r.experiment.starts_with("chat") && r.is_agent()) {
            auto& fr = final_round[{r.model, parse_conversation_id(r.conversation_id).label}];
            fr = std::max(fr, r.round);
        }
    }

    struct Acc {
        double first[2] = {0, 0};
        double last[2] = {0, 0};
        std::size_t n = 0;
    };
    std::map<std::pair<std::string, std::string>, Acc> acc;
    std::vector<std::pair<std::string, std::string>> order;
    const int first_round = opts.exclude_greeting ? 2 : 1;
    for (const auto& c : convs) {
        const std::pair key{c.model, c.pairing};
        const int last_round = final_round[key];
        if (c.aborted) {
            out.notes.push_back(c.id + ": aborted conversation excluded");
            continue;
        }
        if (last_round < first_round + 1) {
            out.notes.push_back(c.id + ": fewer than 2 analysable rounds, excluded");
            continue;
        }
        bool complete = true;
        for (int agent : {0, 1}) {
            complete = complete && c.scored[agent].contains(first_round) && c.scored[agent].contains(last_round);
        }
        if (!complete) {
            out.notes.push_back(c.id + ": missing scored turn at round " + std::to_string(first_round) + " or " +
                                std::to_string(last_round) + ", excluded");
            continue;
        }
        if (!acc.contains(key)) order.push_back(key);
        auto& a = acc[key];
        for (auto dim : {Dimension::valence, Dimension::arousal}) {
            const int d = static_cast<int>(dim);
            a.first[d] += c.scored[0].at(first_round).level(dim) - c.scored[1].at(first_round).level(dim);
            a.last[d] += c.scored[0].at(last_round).level(dim) - c.scored[1].at(last_round).level(dim);
        }
        ++a.n;
    }
    std::sort(order.begin(), order.end());
    for (const auto& key : order) {
        const auto& a = acc[key];
        for (auto dim : {Dimension::valence, Dimension::arousal}) {
            const int d = static_cast<int>(dim);
            const double n = static_cast<double>(a.n);
            out.cells.push_back({key.first, key.second, dim, std::abs(a.first[d] / n), std::abs(a.last[d] / n), a.n});
        }
    }
    return out;
}

// Two-sided normal critical value; 1.96 for the conventional 95% band.
inline double normal_critical_value(double level) {
    if (!(level > 0.0 && level < 1.0)) throw DomainError("confidence level must be in (0,1)");
    if (level == 0.95) return 1.96;
    double lo = 0.0, hi = 40.0;
    for (int i = 0; i < 200; ++i) {
        const double mid = (lo + hi) / 2.0;
        (normal_two_sided_p(mid) > 1.0 - level ? lo : hi) = mid;
    }
    return (lo + hi) / 2.0;
}

struct TrajectoryPoint {
    std::string model;
    std::string pairing;
    std::string agent;
    Dimension dimension;
    int round = 1;
    std::size_t n = 0;
    double mean = 0.0;
    std::optional<double> ci_low;
    std::optional<double> ci_high;
    double prompted = 0.0;  // mean prompted SAM level
};

struct TrajectoryResult {
    std::vector<TrajectoryPoint> points;
    std::vector<std::string> notes;
};

inline TrajectoryResult trajectory_bands(const std::vector<TurnRecord>& records, const AnalysisOptions& opts = {}) {
    TrajectoryResult out;
    const double crit = normal_critical_value(opts.ci_level);
    const auto convs = detail::chat_conversations(records, opts);

    using Key = std::tuple<std::string, std::string, int, int, int>;  // model, pairing, agent, dim, round
    std::map<Key, std::pair<std::vector<double>, std::vector<double>>> values;  // scored, prompted
    for (const auto& c : convs) {
        for (int agent : {0, 1}) {
            for (const auto& [round, cell] : c.scored[agent]) {
                for (auto dim : {Dimension::valence, Dimension::arousal}) {
                    auto& v = values[{c.model, c.pairing, agent, static_cast<int>(dim), round}];
                    v.first.push_back(cell.level(dim));
                    v.second.push_back(c.prompted[agent].at(round).level(dim));
                }
            }
        }
    }
    std::set<std::string> noted_single;
    for (const auto& [key, v] : values) {
        const auto& [model, pairing, agent, dim, round] = key;
        const auto& xs = v.first;
        const double n = static_cast<double>(xs.size());
        TrajectoryPoint p{model, pairing, agent == 0 ? "A" : "B", static_cast<Dimension>(dim), round, xs.size(),
                          std::accumulate(xs.begin(), xs.end(), 0.0) / n, std::nullopt, std::nullopt,
                          std::accumulate(v.second.begin(), v.second.end(), 0.0) / n};
        if (xs.size() >= 2) {
            double ss = 0.0;
            for (double x : xs) ss += (x - p.mean) * (x - p.mean);
            const double half = crit * std::sqrt(ss / (n - 1.0)) / std::sqrt(n);
            p.ci_low = p.mean - half;
            p.ci_high = p.mean + half;
        } else if (noted_single.insert(model + "/" + pairing).second) {
            out.notes.push_back(model + "/" + pairing + ": single conversation at some rounds, confidence bands omitted");
        }
        out.points.push_back(std::move(p));
    }
    return out;
}

} // namespace affectsim::stats
