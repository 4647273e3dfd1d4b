#pragma once

// Report bundle: delimited tables, SVG trajectory charts and a summary of
// counts and exclusions, computed from persisted transcript files.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "csv.hpp"
#include "experiments.hpp"
#include "stats.hpp"

namespace affectsim::report {

class UsageError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

struct Options {
    std::filesystem::path out_dir = "report";
    std::optional<std::filesystem::path> baseline;
    stats::AnalysisOptions analysis;
};

struct Bundle {
    std::filesystem::path dir;
    std::string correlations_csv;
    std::string comparisons_csv;
    std::string convergence_csv;
    std::string offsets_csv;
    std::string trajectories_csv;
    std::map<std::string, std::string> charts;  // file name -> svg
    nlohmann::ordered_json summary;
};

inline std::string fixed(double x, int decimals) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", decimals, x);
    std::string s = buf;
    // Avoid "-0.00".
    if (s.starts_with("-") && s.find_first_not_of("-0.") == std::string::npos) s.erase(0, 1);
    return s;
}

inline std::string fixed(const std::optional<double>& x, int decimals) { return x ? fixed(*x, decimals) : "NA"; }

inline std::string sanitize(std::string s) {
    for (char& c : s) {
        const auto u = static_cast<unsigned char>(c);
        if (!(std::isalnum(u) || c == '-' || c == '.' || c == '_')) c = '-';
    }
    return s;
}

// ---------------------------------------------------------------------------
// SVG line chart: mean line, shaded CI band, dashed prompted line per agent.

struct Series {
    std::string label;
    std::string colour;
    std::vector<std::pair<int, double>> mean;
    std::vector<std::tuple<int, double, double>> band;
    std::vector<std::pair<int, double>> prompted;
};

inline std::string svg_chart(const std::string& title, const std::string& y_label, const std::vector<Series>& series,
                             int max_round) {
    constexpr double W = 640, H = 400, L = 60, R = 20, T = 40, B = 50;
    const double rounds = std::max(2, max_round);
    auto x = [&](double round) { return L + (round - 1.0) / (rounds - 1.0) * (W - L - R); };
    auto y = [&](double level) { return T + (5.0 - level) / 4.0 * (H - T - B); };
    auto num = [](double v) { return fixed(v, 2); };

    std::ostringstream os;
    os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H << "\" viewBox=\"0 0 " << W
       << ' ' << H << "\">\n";
    os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    os << "<text x=\"" << W / 2 << "\" y=\"22\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"15\">"
       << title << "</text>\n";
    for (int level = 1; level <= 5; ++level) {
        os << "<line x1=\"" << L << "\" y1=\"" << num(y(level)) << "\" x2=\"" << W - R << "\" y2=\"" << num(y(level))
           << "\" stroke=\"#ddd\"/>\n";
        os << "<text x=\"" << L - 8 << "\" y=\"" << num(y(level) + 4) << "\" text-anchor=\"end\" font-family=\"sans-serif\" "
           << "font-size=\"11\">" << level << "</text>\n";
    }
    const int step = max_round > 10 ? 5 : 1;
    for (int r = 1; r <= max_round; r += (r == 1 && step > 1 ? step - 1 : step)) {
        os << "<text x=\"" << num(x(r)) << "\" y=\"" << H - B + 16 << "\" text-anchor=\"middle\" font-family=\"sans-serif\" "
           << "font-size=\"11\">" << r << "</text>\n";
    }
    os << "<line x1=\"" << L << "\" y1=\"" << H - B << "\" x2=\"" << W - R << "\" y2=\"" << H - B << "\" stroke=\"black\"/>\n";
    os << "<line x1=\"" << L << "\" y1=\"" << T << "\" x2=\"" << L << "\" y2=\"" << H - B << "\" stroke=\"black\"/>\n";
    os << "<text x=\"" << (L + W - R) / 2 << "\" y=\"" << H - 12
       << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\">round</text>\n";
    os << "<text x=\"16\" y=\"" << (T + H - B) / 2 << "\" transform=\"rotate(-90 16 " << (T + H - B) / 2
       << ")\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\">" << y_label << "</text>\n";

    for (std::size_t s = 0; s < series.size(); ++s) {
        const auto& ser = series[s];
        if (!ser.band.empty()) {
            os << "<polygon fill=\"" << ser.colour << "\" fill-opacity=\"0.2\" stroke=\"none\" points=\"";
            for (const auto& [r, lo, hi] : ser.band) os << num(x(r)) << ',' << num(y(std::clamp(hi, 0.5, 5.5))) << ' ';
            for (auto it = ser.band.rbegin(); it != ser.band.rend(); ++it) {
                os << num(x(std::get<0>(*it))) << ',' << num(y(std::clamp(std::get<1>(*it), 0.5, 5.5))) << ' ';
            }
            os << "\"/>\n";
        }
        auto polyline = [&](const std::vector<std::pair<int, double>>& pts, const char* extra) {
            if (pts.empty()) return;
            os << "<polyline fill=\"none\" stroke=\"" << ser.colour << "\" stroke-width=\"2\"" << extra << " points=\"";
            for (const auto& [r, v] : pts) os << num(x(r)) << ',' << num(y(v)) << ' ';
            os << "\"/>\n";
        };
        polyline(ser.mean, "");
        polyline(ser.prompted, " stroke-dasharray=\"6 4\"");
        os << "<text x=\"" << W - R - 90 << "\" y=\"" << T + 14 + 16 * static_cast<double>(s) << "\" fill=\"" << ser.colour
           << "\" font-family=\"sans-serif\" font-size=\"12\">" << ser.label << "</text>\n";
    }
    os << "</svg>\n";
    return os.str();
}

// ---------------------------------------------------------------------------

namespace detail {

struct LoadedInput {
    std::string file;
    std::vector<TurnRecord> records;
    nlohmann::json metadata;  // sibling .meta.json, timestamps stripped
};

inline LoadedInput load_input(const std::filesystem::path& path) {
    if (!std::filesystem::exists(path)) throw IoError("input file not found: " + path.string());
    LoadedInput in{path.filename().string(), load_records(path), nullptr};
    auto meta_path = path;
    meta_path.replace_extension(".meta.json");
    if (std::filesystem::exists(meta_path)) {
        std::ifstream f(meta_path);
        try {
            in.metadata = nlohmann::json::parse(f);
            in.metadata.erase("started_at");
            in.metadata.erase("finished_at");
        } catch (const nlohmann::json::exception&) {
            in.metadata = nullptr;
        }
    }
    return in;
}

inline std::string exclusion_reason(const TurnRecord& r, const stats::AnalysisOptions& opts) {
    if (r.agent_id == "dummy") return "dummy turn";
    if (r.has(flag::aborted)) return "aborted";
    if (!r.scored_va) return "unscored";
    if (!r.prompted_va || !r.prompted_cell) return "missing prompted state";
    if (opts.exclude_greeting && stats::is_greeting(r)) return "greeting excluded";
    return "";
}

} // namespace detail

// Pure function of the input files and options; writes nothing.
inline Bundle build(const std::vector<std::filesystem::path>& inputs, const Options& opts) {
    if (inputs.empty()) throw UsageError("analyze: no input files given");

    std::vector<detail::LoadedInput> loaded;
    std::vector<TurnRecord> records;
    for (const auto& p : inputs) {
        loaded.push_back(detail::load_input(p));
        records.insert(records.end(), loaded.back().records.begin(), loaded.back().records.end());
    }
    std::optional<std::vector<TurnRecord>> baseline;
    if (opts.baseline) baseline = detail::load_input(*opts.baseline).records;

    Bundle b;
    b.dir = opts.out_dir;
    const auto& aopts = opts.analysis;

    // correlations.csv
    const auto corr = stats::correlation_reports(records, aopts);
    {
        std::string s = "model,setting,corr_v,corr_a,avg_corr,n\n";
        for (const auto& r : corr) {
            s += csv::join({r.model, r.setting, fixed(r.corr_valence, 2), fixed(r.corr_arousal, 2), fixed(r.avg_corr, 2),
                            std::to_string(r.n)}) +
                 "\n";
        }
        b.correlations_csv = std::move(s);
    }
    // comparisons.csv
    {
        std::string s = "setting,dimension,model_a,model_b,z,p,p_bonferroni\n";
        for (const auto& c : stats::compare_models(corr)) {
            s += csv::join({c.setting, std::string(to_string(c.dimension)), c.model_a, c.model_b, fixed(c.test.z, 3),
                            fixed(c.test.p, 4), fixed(c.p_adjusted, 4)}) +
                 "\n";
        }
        b.comparisons_csv = std::move(s);
    }
    // offsets.csv
    const auto offsets = stats::offset_summary(records, aopts, baseline ? &*baseline : nullptr);
    {
        std::string s = "model,dimension,prompted_level,mean_offset,n,baseline\n";
        for (const auto& r : offsets.rows) {
            s += csv::join({r.model, std::string(to_string(r.dimension)), std::to_string(r.prompted_level),
                            fixed(r.mean_offset, 2), std::to_string(r.n), r.baseline ? fixed(*r.baseline, 2) : ""}) +
                 "\n";
        }
        b.offsets_csv = std::move(s);
    }
    // convergence.csv
    const auto conv = stats::convergence_table(records, aopts);
    {
        std::map<std::pair<std::string, std::string>, std::map<Dimension, std::string>> rows;
        std::map<std::pair<std::string, std::string>, std::size_t> counts;
        for (const auto& c : conv.cells) {
            rows[{c.model, c.pairing}][c.dimension] = stats::format_convergence(c.first_diff, c.last_diff);
            counts[{c.model, c.pairing}] = c.conversations;
        }
        std::string s = "model,pairing,valence,arousal,conversations\n";
        for (auto& [key, cells] : rows) {
            s += csv::join({key.first, key.second, cells[Dimension::valence], cells[Dimension::arousal],
                            std::to_string(counts[key])}) +
                 "\n";
        }
        b.convergence_csv = std::move(s);
    }
    // trajectories.csv + charts
    const auto traj = stats::trajectory_bands(records, aopts);
    {
        std::string s = "model,pairing,agent,dimension,round,n,mean,ci_low,ci_high,prompted\n";
        for (const auto& p : traj.points) {
            s += csv::join({p.model, p.pairing, p.agent, std::string(to_string(p.dimension)), std::to_string(p.round),
                            std::to_string(p.n), fixed(p.mean, 4), p.ci_low ? fixed(*p.ci_low, 4) : "",
                            p.ci_high ? fixed(*p.ci_high, 4) : "", fixed(p.prompted, 4)}) +
                 "\n";
        }
        b.trajectories_csv = std::move(s);

        std::map<std::tuple<std::string, std::string, Dimension>, std::map<std::string, Series>> groups;
        std::map<std::tuple<std::string, std::string, Dimension>, int> max_round;
        for (const auto& p : traj.points) {
            const auto key = std::make_tuple(p.model, p.pairing, p.dimension);
            auto& ser = groups[key][p.agent];
            ser.label = "Agent " + p.agent;
            ser.colour = p.agent == "A" ? "#1f77b4" : "#d62728";
            ser.mean.emplace_back(p.round, p.mean);
            ser.prompted.emplace_back(p.round, p.prompted);
            if (p.ci_low) ser.band.emplace_back(p.round, *p.ci_low, *p.ci_high);
            max_round[key] = std::max(max_round[key], p.round);
        }
        for (auto& [key, agents] : groups) {
            const auto& [model, pairing, dim] = key;
            std::vector<Series> series;
            for (auto& [id, ser] : agents) series.push_back(std::move(ser));
            const std::string name = sanitize(model + "-" + pairing) + "_" + std::string(to_string(dim)) + ".svg";
            b.charts[name] = svg_chart(model + " / " + pairing + " / " + std::string(to_string(dim)),
                                       std::string(to_string(dim)) + " (SAM level)", series, max_round[key]);
        }
    }

    // summary.json
    auto& sum = b.summary;
    sum["options"] = {{"exclude_greeting", aopts.exclude_greeting},
                      {"ci_level", aopts.ci_level},
                      {"baseline", opts.baseline ? opts.baseline->filename().string() : ""}};
    auto& ins = sum["inputs"] = nlohmann::ordered_json::array();
    for (const auto& in : loaded) {
        ins.push_back({{"file", in.file}, {"records", in.records.size()}, {"run_metadata", in.metadata}});
    }
    std::size_t analysed = 0;
    auto& excl = sum["exclusions"] = nlohmann::ordered_json::array();
    std::map<std::string, std::size_t> excl_counts;
    for (const auto& r : records) {
        const std::string reason = detail::exclusion_reason(r, aopts);
        if (reason.empty()) {
            ++analysed;
            continue;
        }
        ++excl_counts[reason];
        excl.push_back({{"conversation_id", r.conversation_id}, {"round", r.round}, {"agent_id", r.agent_id},
                        {"reason", reason}});
    }
    std::set<std::string> aborted;
    for (const auto& r : records) {
        if (r.has(flag::aborted)) aborted.insert(r.conversation_id);
    }
    std::size_t loops = 0;
    for (const auto& r : records) loops += r.has(flag::loop_suspected) ? 1 : 0;
    sum["counts"] = {{"records", records.size()},
                     {"analysed_agent_turns", analysed},
                     {"excluded", records.size() - analysed},
                     {"excluded_by_reason", excl_counts},
                     {"aborted_conversations", aborted},
                     {"loop_suspected_turns", loops}};

    // Zero-shot vs few-shot groups of per-model average correlations.
    std::vector<double> zero, few;
    for (const auto& r : corr) {
        if (!r.avg_corr) continue;
        if (r.setting == "zero_shot") zero.push_back(*r.avg_corr);
        if (r.setting == "few_shot") few.push_back(*r.avg_corr);
    }
    if (!zero.empty() && !few.empty()) {
        const auto mw = stats::mann_whitney_u(zero, few);
        sum["zero_vs_few_shot"] = {{"u_zero", mw.u_a}, {"u_few", mw.u_b}, {"z", mw.z}, {"p", mw.p},
                                   {"n_zero", zero.size()}, {"n_few", few.size()}};
    }
    auto& notes = sum["notes"] = nlohmann::ordered_json::array();
    for (const auto& n : offsets.notes) notes.push_back(n);
    for (const auto& n : conv.notes) notes.push_back(n);
    for (const auto& n : traj.notes) notes.push_back(n);
    for (const auto& r : corr) {
        if (!r.note.empty()) notes.push_back(r.model + "/" + r.setting + ": " + r.note);
    }
    return b;
}

inline void write_file(const std::filesystem::path& p, const std::string& content) {
    std::ofstream out(p, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + p.string());
    out << content;
    if (!out) throw IoError("write failed: " + p.string());
}

inline Bundle analyze(const std::vector<std::filesystem::path>& inputs, const Options& opts) {
    Bundle b = build(inputs, opts);
    std::error_code ec;
    std::filesystem::create_directories(opts.out_dir / "charts", ec);
    if (ec) throw IoError("cannot create report directory " + opts.out_dir.string() + ": " + ec.message());
    write_file(opts.out_dir / "correlations.csv", b.correlations_csv);
    write_file(opts.out_dir / "comparisons.csv", b.comparisons_csv);
    write_file(opts.out_dir / "convergence.csv", b.convergence_csv);
    write_file(opts.out_dir / "offsets.csv", b.offsets_csv);
    write_file(opts.out_dir / "trajectories.csv", b.trajectories_csv);
    for (const auto& [name, svg] : b.charts) write_file(opts.out_dir / "charts" / name, svg);
    write_file(opts.out_dir / "summary.json", b.summary.dump(2) + "\n");
    return b;
}

} // namespace affectsim::report
