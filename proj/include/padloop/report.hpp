#pragma once

#include <filesystem>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "padloop/csv.hpp"
#include "padloop/loop.hpp"

namespace padloop {

// Per-trace roll-up used by the report command. mean_true_q is the plain
// arithmetic mean of the true_q column; p_true_ge_qr is the empirical
// fraction of steps meeting the reference.
struct TraceSummary {
    bool control_enabled = false;
    bool aborted = false;
    int steps = 0;
    double q_r = 0.0;
    double mean_true_q = 0.0;
    double mean_est_q = 0.0;
    double p_true_ge_qr = 0.0;
    double mean_prob = 0.0;
    int nonnull_actions = 0;
    std::map<int, int> stimulus_counts;
};

inline TraceSummary summarize_trace(const LoopTrace& trace) {
    require(!trace.steps.empty(), "summarize_trace: trace has no steps");
    TraceSummary s;
    s.control_enabled = trace.control_enabled;
    s.aborted = trace.aborted;
    s.steps = static_cast<int>(trace.steps.size());
    s.q_r = trace.q_r;
    for (const auto& step : trace.steps) {
        s.mean_true_q += step.true_q;
        s.mean_est_q += step.qot_post.mean;
        s.mean_prob += step.prob;
        if (step.true_q >= trace.q_r) s.p_true_ge_qr += 1.0;
        if (step.action_id != 0) ++s.nonnull_actions;
        ++s.stimulus_counts[step.action_id];
    }
    const double n = static_cast<double>(s.steps);
    s.mean_true_q /= n;
    s.mean_est_q /= n;
    s.mean_prob /= n;
    s.p_true_ge_qr /= n;
    return s;
}

namespace detail_report {

inline void summary_row(std::ostringstream& out, const std::string& label, const std::string& control,
                        double steps, double q_r, double mean_true_q, double mean_est_q,
                        double p_true, double mean_prob, double nonnull, double aborted) {
    using detail_io::fmt;
    out << label << "," << control << "," << fmt(steps) << "," << fmt(q_r) << "," << fmt(mean_true_q)
        << "," << fmt(mean_est_q) << "," << fmt(p_true) << "," << fmt(mean_prob) << "," << fmt(nonnull)
        << "," << fmt(aborted) << "\n";
}

} // namespace detail_report

// Writes summary.csv (one row per trace, plus a paired difference row when
// exactly two traces are given), stimulus_counts.csv, and steps.csv (long
// format, one row per trace step, ready for plotting).
inline void write_report(const std::filesystem::path& out_dir, const std::vector<LoopTrace>& traces) {
    require(!traces.empty(), "write_report: need at least one trace");
    std::filesystem::create_directories(out_dir);

    std::vector<TraceSummary> sums;
    sums.reserve(traces.size());
    for (const auto& t : traces) sums.push_back(summarize_trace(t));

    std::ostringstream summary;
    summary << "# padloop csv_version=" << kCsvVersion << " kind=report_summary\n";
    summary << "trace,control,steps,q_r,mean_true_q,mean_est_q,p_true_ge_qr,mean_prob,nonnull_actions,aborted\n";
    for (std::size_t i = 0; i < sums.size(); ++i) {
        const auto& s = sums[i];
        detail_report::summary_row(summary, std::to_string(i), s.control_enabled ? "on" : "off",
                                   s.steps, s.q_r, s.mean_true_q, s.mean_est_q, s.p_true_ge_qr,
                                   s.mean_prob, s.nonnull_actions, s.aborted ? 1.0 : 0.0);
    }
    if (sums.size() == 2) {
        const auto& a = sums[0];
        const auto& b = sums[1];
        detail_report::summary_row(summary, "diff", "paired", a.steps - b.steps, a.q_r - b.q_r,
                                   a.mean_true_q - b.mean_true_q, a.mean_est_q - b.mean_est_q,
                                   a.p_true_ge_qr - b.p_true_ge_qr, a.mean_prob - b.mean_prob,
                                   a.nonnull_actions - b.nonnull_actions,
                                   (a.aborted ? 1.0 : 0.0) - (b.aborted ? 1.0 : 0.0));
    }
    detail_io::atomic_write(out_dir / "summary.csv", summary.str());

    std::ostringstream counts;
    counts << "# padloop csv_version=" << kCsvVersion << " kind=report_stimulus_counts\n";
    counts << "trace,stimulus_id,count\n";
    for (std::size_t i = 0; i < sums.size(); ++i)
        for (const auto& [id, count] : sums[i].stimulus_counts)
            counts << i << "," << id << "," << count << "\n";
    detail_io::atomic_write(out_dir / "stimulus_counts.csv", counts.str());

    std::ostringstream steps;
    steps << "# padloop csv_version=" << kCsvVersion << " kind=report_steps\n";
    steps << "trace,k,true_q,est_q,est_sd,prob,eps,delta_eps,gate,action_id,"
             "true_p,true_a,true_d,est_p,est_a,est_d,true_fatigue\n";
    using detail_io::fmt;
    for (std::size_t i = 0; i < traces.size(); ++i) {
        for (const auto& s : traces[i].steps) {
            steps << i << "," << s.k << "," << fmt(s.true_q) << "," << fmt(s.qot_post.mean) << ","
                  << fmt(std::sqrt(std::max(0.0, s.qot_post.var))) << "," << fmt(s.prob) << ","
                  << fmt(s.eps) << "," << fmt(s.delta_eps) << "," << s.gate << "," << s.action_id;
            for (int d = 0; d < 3; ++d) steps << "," << fmt(s.true_pad[d]);
            for (int d = 0; d < 3; ++d) steps << "," << fmt(s.pad_post.mean[d]);
            steps << "," << fmt(s.true_fatigue) << "\n";
        }
    }
    detail_io::atomic_write(out_dir / "steps.csv", steps.str());
}

} // namespace padloop
