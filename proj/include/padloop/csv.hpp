#pragma once

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "padloop/common.hpp"
#include "padloop/datasets.hpp"
#include "padloop/eeg.hpp"
#include "padloop/features.hpp"
#include "padloop/loop.hpp"

namespace padloop {

inline constexpr int kCsvVersion = 1;

namespace detail_io {

// shortest exact decimal round-trip for doubles
inline std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

inline void atomic_write(const std::filesystem::path& path, const std::string& content) {
    namespace fs = std::filesystem;
    const fs::path tmp = path.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw io_error("cannot open '" + tmp.string() + "' for writing");
        out << content;
        out.flush();
        if (!out) throw io_error("write failed for '" + tmp.string() + "'");
    }
    std::error_code ec;
    fs::rename(tmp, path, ec);
    if (ec) throw io_error("cannot rename '" + tmp.string() + "' to '" + path.string() + "': " + ec.message());
}

inline std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw io_error("cannot open '" + path.string() + "' for reading");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline std::vector<std::string> split(const std::string& line, char sep) {
    std::vector<std::string> out;
    std::string cur;
    for (char ch : line) {
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

inline double parse_double(const std::string& s, const std::string& where) {
    if (s.empty()) throw io_error(where + ": empty numeric field");
    char* end = nullptr;
    const double v = std::strtod(s.c_str(), &end);
    if (end != s.c_str() + s.size()) throw io_error(where + ": malformed number '" + s + "'");
    if (!std::isfinite(v)) throw io_error(where + ": non-finite number '" + s + "'");
    return v;
}

inline long parse_int(const std::string& s, const std::string& where) {
    if (s.empty()) throw io_error(where + ": empty integer field");
    char* end = nullptr;
    const long v = std::strtol(s.c_str(), &end, 10);
    if (end != s.c_str() + s.size()) throw io_error(where + ": malformed integer '" + s + "'");
    return v;
}

// Lines of a CSV document with 1-based line numbers preserved for
// diagnostics; trailing \r stripped so files survive CRLF round-trips.
struct CsvDoc {
    std::filesystem::path path;
    std::vector<std::pair<int, std::string>> lines;

    std::string where(int line_no) const { return path.string() + ":" + std::to_string(line_no); }
};

inline CsvDoc load_lines(const std::filesystem::path& path) {
    CsvDoc doc;
    doc.path = path;
    const std::string content = read_file(path);
    std::string cur;
    int line_no = 1;
    for (char ch : content) {
        if (ch == '\n') {
            if (!cur.empty() && cur.back() == '\r') cur.pop_back();
            doc.lines.emplace_back(line_no++, cur);
            cur.clear();
        } else {
            cur.push_back(ch);
        }
    }
    if (!cur.empty()) {
        if (cur.back() == '\r') cur.pop_back();
        doc.lines.emplace_back(line_no, cur);
    }
    return doc;
}

// "# padloop csv_version=1 kind=trace ..." -> key/value map
inline std::map<std::string, std::string> parse_meta_line(const CsvDoc& doc) {
    if (doc.lines.empty()) throw io_error(doc.path.string() + ": empty file");
    const auto& [line_no, line] = doc.lines.front();
    const std::string prefix = "# padloop ";
    if (line.rfind(prefix, 0) != 0)
        throw io_error(doc.where(line_no) + ": missing '# padloop' metadata line");
    std::map<std::string, std::string> meta;
    std::istringstream ss(line.substr(prefix.size()));
    std::string tok;
    while (ss >> tok) {
        const auto eq = tok.find('=');
        if (eq == std::string::npos)
            throw io_error(doc.where(line_no) + ": malformed metadata token '" + tok + "'");
        meta[tok.substr(0, eq)] = tok.substr(eq + 1);
    }
    const auto ver = meta.find("csv_version");
    if (ver == meta.end()) throw io_error(doc.where(line_no) + ": missing csv_version");
    const long v = parse_int(ver->second, doc.where(line_no));
    if (v != kCsvVersion)
        throw version_error("'" + doc.path.string() + "' has csv_version " + std::to_string(v) +
                            " but this build supports " + std::to_string(kCsvVersion));
    return meta;
}

inline void expect_kind(const std::map<std::string, std::string>& meta, const std::string& kind,
                        const std::filesystem::path& path) {
    const auto it = meta.find("kind");
    if (it == meta.end() || it->second != kind)
        throw io_error("'" + path.string() + "' is not a " + kind + " file (kind=" +
                       (it == meta.end() ? std::string("<missing>") : it->second) + ")");
}

inline FeatureMode meta_mode(const std::map<std::string, std::string>& meta,
                             const std::filesystem::path& path) {
    const auto it = meta.find("mode");
    if (it == meta.end()) throw io_error("'" + path.string() + "' is missing the mode field");
    return feature_mode_from_string(it->second);
}

} // namespace detail_io

// ---------------------------------------------------------------- windows

// One EEG window: header row of channel labels, then one row per time index.
inline void save_window_csv(const std::filesystem::path& path, const EegWindow& win) {
    win.validate();
    std::ostringstream out;
    const auto& labels = channel_labels();
    for (int c = 0; c < kNumChannels; ++c) out << (c ? "," : "") << labels[c];
    out << "\n";
    for (int t = 0; t < kWindowSamples; ++t) {
        for (int c = 0; c < kNumChannels; ++c)
            out << (c ? "," : "") << detail_io::fmt(win.samples(c, t));
        out << "\n";
    }
    detail_io::atomic_write(path, out.str());
}

inline EegWindow load_window_csv(const std::filesystem::path& path) {
    const auto doc = detail_io::load_lines(path);
    if (doc.lines.empty()) throw io_error(path.string() + ": empty file");

    const auto& [hdr_no, hdr] = doc.lines.front();
    const auto cols = detail_io::split(hdr, ',');
    const auto& labels = channel_labels();
    if (cols.size() != kNumChannels)
        throw io_error(doc.where(hdr_no) + ": expected " + std::to_string(kNumChannels) +
                       " channel columns, got " + std::to_string(cols.size()));
    for (int c = 0; c < kNumChannels; ++c)
        if (cols[c] != labels[c])
            throw io_error(doc.where(hdr_no) + ": column " + std::to_string(c + 1) + " is '" + cols[c] +
                           "', expected '" + labels[c] + "'");

    if (doc.lines.size() - 1 != kWindowSamples)
        throw io_error(path.string() + ": expected " + std::to_string(kWindowSamples) +
                       " sample rows, got " + std::to_string(doc.lines.size() - 1));

    EegWindow win;
    win.samples.resize(kNumChannels, kWindowSamples);
    for (std::size_t r = 1; r < doc.lines.size(); ++r) {
        const auto& [line_no, line] = doc.lines[r];
        const auto fields = detail_io::split(line, ',');
        if (fields.size() != kNumChannels)
            throw io_error(doc.where(line_no) + ": expected " + std::to_string(kNumChannels) +
                           " fields, got " + std::to_string(fields.size()));
        for (int c = 0; c < kNumChannels; ++c)
            win.samples(c, static_cast<Eigen::Index>(r - 1)) = detail_io::parse_double(
                fields[c], doc.where(line_no) + " field " + std::to_string(c + 1));
    }
    win.validate();
    return win;
}

// --------------------------------------------------------------- features

// One row per window: id, mode, then the feature values.
inline void save_features_csv(const std::filesystem::path& path,
                              const std::vector<std::string>& window_ids,
                              const Eigen::MatrixXd& features /* n x m */, FeatureMode mode) {
    require(static_cast<Eigen::Index>(window_ids.size()) == features.cols(),
            "save_features_csv: id/column count mismatch");
    require(features.rows() == feature_dim(mode), "save_features_csv: feature rows do not match mode");
    std::ostringstream out;
    out << "# padloop csv_version=" << kCsvVersion << " kind=features mode=" << to_string(mode) << "\n";
    out << "window_id,mode";
    for (Eigen::Index f = 0; f < features.rows(); ++f) out << ",f" << f;
    out << "\n";
    for (Eigen::Index i = 0; i < features.cols(); ++i) {
        require(window_ids[i].find(',') == std::string::npos, "save_features_csv: id contains a comma");
        out << window_ids[i] << "," << to_string(mode);
        for (Eigen::Index f = 0; f < features.rows(); ++f)
            out << "," << detail_io::fmt(features(f, i));
        out << "\n";
    }
    detail_io::atomic_write(path, out.str());
}

struct FeaturesFile {
    std::vector<std::string> window_ids;
    Eigen::MatrixXd features;  // n x m
    FeatureMode mode = FeatureMode::EEG;
};

inline FeaturesFile load_features_csv(const std::filesystem::path& path) {
    const auto doc = detail_io::load_lines(path);
    const auto meta = detail_io::parse_meta_line(doc);
    detail_io::expect_kind(meta, "features", path);
    FeaturesFile out;
    out.mode = detail_io::meta_mode(meta, path);
    const int n = feature_dim(out.mode);

    if (doc.lines.size() < 2) throw io_error(path.string() + ": missing header row");
    const auto& [hdr_no, hdr] = doc.lines[1];
    const auto cols = detail_io::split(hdr, ',');
    if (static_cast<int>(cols.size()) != n + 2 || cols[0] != "window_id" || cols[1] != "mode")
        throw io_error(doc.where(hdr_no) + ": malformed features header");

    const std::size_t rows = doc.lines.size() - 2;
    out.features.resize(n, static_cast<Eigen::Index>(rows));
    for (std::size_t r = 0; r < rows; ++r) {
        const auto& [line_no, line] = doc.lines[r + 2];
        const auto fields = detail_io::split(line, ',');
        if (static_cast<int>(fields.size()) != n + 2)
            throw io_error(doc.where(line_no) + ": expected " + std::to_string(n + 2) + " fields, got " +
                           std::to_string(fields.size()));
        if (feature_mode_from_string(fields[1]) != out.mode)
            throw io_error(doc.where(line_no) + ": row mode differs from file mode");
        out.window_ids.push_back(fields[0]);
        for (int f = 0; f < n; ++f)
            out.features(f, static_cast<Eigen::Index>(r)) =
                detail_io::parse_double(fields[f + 2], doc.where(line_no) + " field " + std::to_string(f + 3));
    }
    return out;
}

// --------------------------------------------------------------- datasets

inline void save_elicitation_csv(const std::filesystem::path& path, const ElicitationDataset& ds) {
    ds.validate();
    std::ostringstream out;
    out << "# padloop csv_version=" << kCsvVersion << " kind=elicitation mode=" << to_string(ds.mode)
        << "\n";
    out << "sample,valence,arousal,dominance";
    for (Eigen::Index f = 0; f < ds.features.rows(); ++f) out << ",f" << f;
    out << "\n";
    for (Eigen::Index i = 0; i < ds.features.cols(); ++i) {
        out << i;
        for (int d = 0; d < 3; ++d) out << "," << detail_io::fmt(ds.labels(d, i));
        for (Eigen::Index f = 0; f < ds.features.rows(); ++f)
            out << "," << detail_io::fmt(ds.features(f, i));
        out << "\n";
    }
    detail_io::atomic_write(path, out.str());
}

inline ElicitationDataset load_elicitation_csv(const std::filesystem::path& path) {
    const auto doc = detail_io::load_lines(path);
    const auto meta = detail_io::parse_meta_line(doc);
    detail_io::expect_kind(meta, "elicitation", path);
    ElicitationDataset ds;
    ds.mode = detail_io::meta_mode(meta, path);
    const int n = feature_dim(ds.mode);

    if (doc.lines.size() < 2) throw io_error(path.string() + ": missing header row");
    const std::size_t rows = doc.lines.size() - 2;
    ds.features.resize(n, static_cast<Eigen::Index>(rows));
    ds.labels.resize(3, static_cast<Eigen::Index>(rows));
    for (std::size_t r = 0; r < rows; ++r) {
        const auto& [line_no, line] = doc.lines[r + 2];
        const auto fields = detail_io::split(line, ',');
        if (static_cast<int>(fields.size()) != n + 4)
            throw io_error(doc.where(line_no) + ": expected " + std::to_string(n + 4) + " fields, got " +
                           std::to_string(fields.size()));
        for (int d = 0; d < 3; ++d)
            ds.labels(d, static_cast<Eigen::Index>(r)) =
                detail_io::parse_double(fields[d + 1], doc.where(line_no) + " field " + std::to_string(d + 2));
        for (int f = 0; f < n; ++f)
            ds.features(f, static_cast<Eigen::Index>(r)) =
                detail_io::parse_double(fields[f + 4], doc.where(line_no) + " field " + std::to_string(f + 5));
    }
    ds.validate();
    return ds;
}

inline void save_induction_csv(const std::filesystem::path& path, const InductionDataset& ds) {
    ds.validate();
    std::ostringstream out;
    out << "# padloop csv_version=" << kCsvVersion << " kind=induction mode=" << to_string(ds.mode)
        << "\n";
    out << "trial,q";
    for (Eigen::Index f = 0; f < ds.features.rows(); ++f) out << ",f" << f;
    out << "\n";
    for (Eigen::Index i = 0; i < ds.features.cols(); ++i) {
        out << i << "," << detail_io::fmt(ds.qot[i]);
        for (Eigen::Index f = 0; f < ds.features.rows(); ++f)
            out << "," << detail_io::fmt(ds.features(f, i));
        out << "\n";
    }
    detail_io::atomic_write(path, out.str());
}

inline InductionDataset load_induction_csv(const std::filesystem::path& path) {
    const auto doc = detail_io::load_lines(path);
    const auto meta = detail_io::parse_meta_line(doc);
    detail_io::expect_kind(meta, "induction", path);
    InductionDataset ds;
    ds.mode = detail_io::meta_mode(meta, path);
    const int n = feature_dim(ds.mode);

    if (doc.lines.size() < 2) throw io_error(path.string() + ": missing header row");
    const std::size_t rows = doc.lines.size() - 2;
    ds.features.resize(n, static_cast<Eigen::Index>(rows));
    ds.qot.resize(static_cast<Eigen::Index>(rows));
    for (std::size_t r = 0; r < rows; ++r) {
        const auto& [line_no, line] = doc.lines[r + 2];
        const auto fields = detail_io::split(line, ',');
        if (static_cast<int>(fields.size()) != n + 2)
            throw io_error(doc.where(line_no) + ": expected " + std::to_string(n + 2) + " fields, got " +
                           std::to_string(fields.size()));
        ds.qot[static_cast<Eigen::Index>(r)] =
            detail_io::parse_double(fields[1], doc.where(line_no) + " field 2");
        for (int f = 0; f < n; ++f)
            ds.features(f, static_cast<Eigen::Index>(r)) =
                detail_io::parse_double(fields[f + 2], doc.where(line_no) + " field " + std::to_string(f + 3));
    }
    ds.validate();
    return ds;
}

// ------------------------------------------------------------------ trace

inline const std::vector<std::string>& trace_fixed_columns() {
    static const std::vector<std::string> cols = {
        "k",         "true_p",   "true_a",    "true_d", "true_fatigue", "true_q",
        "pad_mean_p", "pad_mean_a", "pad_mean_d", "pad_var_p", "pad_var_a", "pad_var_d",
        "qot_mean",  "qot_var",  "prob",      "eps",    "delta_eps",    "gate",
        "action_id", "u_p",      "u_a",       "u_d"};
    return cols;
}

inline void save_trace_csv(const std::filesystem::path& path, const LoopTrace& trace) {
    const int n = feature_dim(trace.mode);
    std::ostringstream out;
    out << "# padloop csv_version=" << kCsvVersion << " kind=trace mode=" << to_string(trace.mode)
        << " control=" << (trace.control_enabled ? "on" : "off") << " seed=" << trace.seed
        << " q_r=" << detail_io::fmt(trace.q_r) << " aborted=" << (trace.aborted ? 1 : 0) << "\n";
    bool first = true;
    for (const auto& c : trace_fixed_columns()) {
        out << (first ? "" : ",") << c;
        first = false;
    }
    for (int f = 0; f < n; ++f) out << ",f" << f;
    out << "\n";
    for (const auto& s : trace.steps) {
        require(s.features.size() == n, "save_trace_csv: feature length mismatch");
        out << s.k;
        for (int d = 0; d < 3; ++d) out << "," << detail_io::fmt(s.true_pad[d]);
        out << "," << detail_io::fmt(s.true_fatigue) << "," << detail_io::fmt(s.true_q);
        for (int d = 0; d < 3; ++d) out << "," << detail_io::fmt(s.pad_post.mean[d]);
        for (int d = 0; d < 3; ++d) out << "," << detail_io::fmt(s.pad_post.var[d]);
        out << "," << detail_io::fmt(s.qot_post.mean) << "," << detail_io::fmt(s.qot_post.var);
        out << "," << detail_io::fmt(s.prob) << "," << detail_io::fmt(s.eps) << ","
            << detail_io::fmt(s.delta_eps) << "," << s.gate << "," << s.action_id;
        for (int d = 0; d < 3; ++d) out << "," << detail_io::fmt(s.u_hat[d]);
        for (int f = 0; f < n; ++f) out << "," << detail_io::fmt(s.features[f]);
        out << "\n";
    }
    detail_io::atomic_write(path, out.str());
}

inline LoopTrace load_trace_csv(const std::filesystem::path& path) {
    const auto doc = detail_io::load_lines(path);
    const auto meta = detail_io::parse_meta_line(doc);
    detail_io::expect_kind(meta, "trace", path);

    LoopTrace trace;
    trace.mode = detail_io::meta_mode(meta, path);
    const auto need = [&](const char* key) {
        const auto it = meta.find(key);
        if (it == meta.end()) throw io_error("'" + path.string() + "' is missing the " + key + " field");
        return it->second;
    };
    trace.control_enabled = need("control") == "on";
    {
        const std::string s = need("seed");
        char* end = nullptr;
        trace.seed = std::strtoull(s.c_str(), &end, 10);
        if (s.empty() || end != s.c_str() + s.size())
            throw io_error("'" + path.string() + "': malformed seed '" + s + "'");
    }
    trace.q_r = detail_io::parse_double(need("q_r"), path.string() + " metadata q_r");
    trace.aborted = need("aborted") == "1";

    const int n = feature_dim(trace.mode);
    const std::size_t n_fixed = trace_fixed_columns().size();
    if (doc.lines.size() < 2) throw io_error(path.string() + ": missing header row");
    for (std::size_t r = 2; r < doc.lines.size(); ++r) {
        const auto& [line_no, line] = doc.lines[r];
        const auto fields = detail_io::split(line, ',');
        if (fields.size() != n_fixed + static_cast<std::size_t>(n))
            throw io_error(doc.where(line_no) + ": expected " + std::to_string(n_fixed + n) +
                           " fields, got " + std::to_string(fields.size()));
        const auto num = [&](std::size_t i) {
            return detail_io::parse_double(fields[i], doc.where(line_no) + " field " + std::to_string(i + 1));
        };
        LoopStep s;
        s.k = static_cast<int>(detail_io::parse_int(fields[0], doc.where(line_no)));
        for (int d = 0; d < 3; ++d) s.true_pad[d] = num(1 + d);
        s.true_fatigue = num(4);
        s.true_q = num(5);
        for (int d = 0; d < 3; ++d) s.pad_post.mean[d] = num(6 + d);
        for (int d = 0; d < 3; ++d) s.pad_post.var[d] = num(9 + d);
        s.qot_post.mean = num(12);
        s.qot_post.var = num(13);
        s.prob = num(14);
        s.eps = num(15);
        s.delta_eps = num(16);
        s.gate = static_cast<int>(detail_io::parse_int(fields[17], doc.where(line_no)));
        s.action_id = static_cast<int>(detail_io::parse_int(fields[18], doc.where(line_no)));
        for (int d = 0; d < 3; ++d) s.u_hat[d] = num(19 + d);
        s.features.resize(n);
        for (int f = 0; f < n; ++f) s.features[f] = num(n_fixed + f);
        trace.steps.push_back(std::move(s));
    }
    for (std::size_t i = 0; i < trace.steps.size(); ++i)
        if (trace.steps[i].k != static_cast<int>(i))
            throw io_error(path.string() + ": step indices not contiguous from 0");
    return trace;
}

} // namespace padloop
