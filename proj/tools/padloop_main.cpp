// padloop command-line front end: dataset generation, staged training,
// prediction, closed-loop simulation, and trace reporting.
//
// Exit codes: 0 success, 2 usage or configuration error, 3 I/O or missing
// artifact, 4 numerical failure.
//
// PADLOOP_SEED, when set, overrides the seed for any command that takes one
// (and the seed field of a simulate config). Nothing else is overridable
// from the environment.

#include <cerrno>
#include <cstdlib>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include <padloop/padloop.hpp>

namespace {

using namespace padloop;

std::uint64_t apply_seed_env(std::uint64_t seed) {
    const char* env = std::getenv("PADLOOP_SEED");
    if (env == nullptr || *env == '\0') return seed;
    errno = 0;
    char* end = nullptr;
    const unsigned long long v = std::strtoull(env, &end, 10);
    if (errno != 0 || end == env || *end != '\0')
        throw invalid_input("PADLOOP_SEED must be a non-negative integer, got '" + std::string(env) + "'");
    return static_cast<std::uint64_t>(v);
}

FeatureMode parse_mode(const std::string& s) { return feature_mode_from_string(s); }

std::vector<int> default_architecture(FeatureMode mode) {
    if (mode == FeatureMode::EEG) return {14, 20, 20, 20, 20};
    return {56, 80, 80, 80, 80};
}

std::string architecture_string(const std::vector<int>& arch) {
    std::string s;
    for (std::size_t i = 0; i < arch.size(); ++i) {
        if (i) s += "-";
        s += std::to_string(arch[i]);
    }
    return s;
}

struct FeatureTable {
    Eigen::MatrixXd features;  // n x m
    FeatureMode mode = FeatureMode::EEG;
    std::vector<std::string> ids;  // window ids, or row indices for datasets
};

// Accepts any of the feature-bearing CSV kinds and returns just the columns.
FeatureTable load_feature_table(const std::filesystem::path& path) {
    const auto doc = detail_io::load_lines(path);
    const auto meta = detail_io::parse_meta_line(doc);
    const auto it = meta.find("kind");
    if (it == meta.end()) throw io_error(path.string() + ": missing kind in metadata line");
    FeatureTable t;
    if (it->second == "elicitation") {
        const ElicitationDataset ds = load_elicitation_csv(path);
        t.features = ds.features;
        t.mode = ds.mode;
    } else if (it->second == "induction") {
        const InductionDataset ds = load_induction_csv(path);
        t.features = ds.features;
        t.mode = ds.mode;
    } else if (it->second == "features") {
        const FeaturesFile f = load_features_csv(path);
        t.features = f.features;
        t.mode = f.mode;
        t.ids = f.window_ids;
    } else {
        throw io_error(path.string() + ": unsupported kind '" + it->second + "'");
    }
    if (t.ids.empty())
        for (Eigen::Index i = 0; i < t.features.cols(); ++i) t.ids.push_back(std::to_string(i));
    return t;
}

// ------------------------------------------------------------- gen-data

int cmd_gen_data(const std::string& kind, const std::string& out, std::uint64_t seed, int count,
                 const std::string& mode_str, const std::string& sim_path, int k_max) {
    const FeatureMode mode = parse_mode(mode_str);
    SimConfig sim = sim_path.empty() ? SimConfig::defaults() : load_sim_config(sim_path);
    seed = apply_seed_env(seed);

    if (kind == "elicitation") {
        if (count <= 0) count = 183;
        const ElicitationDataset ds = generate_elicitation(sim, mode, k_max, count, seed);
        save_elicitation_csv(out, ds);
        std::cout << "kind=elicitation\n";
    } else if (kind == "induction") {
        if (count <= 0) count = 60;
        const InductionDataset ds = generate_induction(sim, mode, k_max, count, seed);
        save_induction_csv(out, ds);
        std::cout << "kind=induction\n";
    } else {
        throw invalid_input("gen-data: --kind must be elicitation or induction");
    }
    std::cout << "rows=" << count << "\n";
    std::cout << "mode=" << to_string(mode) << "\n";
    std::cout << "seed=" << seed << "\n";
    std::cout << "out=" << out << "\n";
    return 0;
}

// ---------------------------------------------------------------- train

int cmd_train_dbn(const std::string& data_path, const std::string& valid_path, const std::string& out,
                  TrainConfig cfg, int k_max) {
    cfg.seed = apply_seed_env(cfg.seed);
    const FeatureTable table = load_feature_table(data_path);

    DbnBundle bundle;
    bundle.mode = table.mode;
    bundle.k_max = k_max;
    bundle.train_config = cfg;
    bundle.normalizer = Normalizer::fit(table.features);
    const Eigen::MatrixXd scaled = bundle.normalizer.transform_all(table.features);
    const std::vector<int> arch = default_architecture(table.mode);
    bundle.dbn = pretrain_dbn(scaled, arch, cfg);
    save_dbn_bundle(out, bundle);

    std::cout << "stage=dbn\n";
    std::cout << "architecture=" << architecture_string(arch) << "\n";
    std::cout << "samples=" << table.features.cols() << "\n";
    std::cout << "mode=" << to_string(table.mode) << "\n";
    std::cout << "seed=" << cfg.seed << "\n";
    if (!valid_path.empty()) {
        const FeatureTable valid = load_feature_table(valid_path);
        require(valid.mode == table.mode, "train: validation mode differs from training mode");
        const double ratio = free_energy_ratio(bundle.dbn, scaled, bundle.normalizer.transform_all(valid.features));
        std::cout << "free_energy_ratio=" << detail_io::fmt(ratio) << "\n";
    }
    std::cout << "out=" << out << "\n";
    return 0;
}

int cmd_train_pad_gp(const std::string& dbn_path, const std::string& data_path,
                     const std::string& valid_path, const std::string& out, int epochs, double alpha0,
                     double beta0, double noise, std::uint64_t seed, bool seed_given) {
    DbnBundle base = load_dbn_bundle(dbn_path);
    const ElicitationDataset ds = load_elicitation_csv(data_path);
    require(ds.mode == base.mode, "train: dataset mode differs from the DBN bundle mode");
    require(ds.features.rows() == base.dbn.input_dim(), "train: feature length does not match DBN input");

    TrainConfig cfg = base.train_config;
    if (epochs >= 0) cfg.epochs = epochs;
    if (seed_given) cfg.seed = seed;
    cfg.seed = apply_seed_env(cfg.seed);

    std::array<KernelParams, 3> kernels0;
    kernels0.fill(KernelParams{alpha0, beta0, noise});

    Eigen::MatrixXd ev, fv;
    if (!valid_path.empty()) {
        const ElicitationDataset vs = load_elicitation_csv(valid_path);
        require(vs.mode == ds.mode, "train: validation mode differs from training mode");
        ev = vs.features;
        fv = vs.labels;
    }

    const FineTuneResult res = fine_tune(base.dbn, kernels0, ds.features, ds.labels, cfg, ev, fv);
    const Normalizer norm = Normalizer::fit(ds.features);

    PadGpBundle bundle;
    bundle.mode = ds.mode;
    bundle.k_max = base.k_max;
    bundle.model = fit_pad_gp(res.dbn, norm, ds.features, ds.labels, res.kernels);
    save_pad_gp_bundle(out, bundle);

    std::cout << "stage=pad-gp\n";
    std::cout << "samples=" << ds.features.cols() << "\n";
    std::cout << "initial_loss=" << detail_io::fmt(res.initial_loss) << "\n";
    std::cout << "final_loss=" << detail_io::fmt(res.final_loss) << "\n";
    std::cout << "best_monitor=" << detail_io::fmt(res.best_monitor) << "\n";
    std::cout << "best_epoch=" << res.best_epoch << "\n";
    std::cout << "epochs_run=" << res.epochs_run << "\n";
    for (int l = 0; l < 3; ++l) {
        std::cout << "alpha_" << l << "=" << detail_io::fmt(res.kernels[l].alpha) << "\n";
        std::cout << "beta_" << l << "=" << detail_io::fmt(res.kernels[l].beta) << "\n";
    }
    if (!valid_path.empty()) {
        const double mse = detail_ft::validation_mse(res.dbn, norm, res.kernels, ds.features, ds.labels, ev, fv);
        std::cout << "validation_mse=" << detail_io::fmt(mse) << "\n";
    }
    std::cout << "out=" << out << "\n";
    return 0;
}

int cmd_train_perf_gp(const std::string& pad_gp_path, const std::string& data_path,
                      const std::string& out, CvConfig cv) {
    const PadGpBundle pad = load_pad_gp_bundle(pad_gp_path);
    const InductionDataset ds = load_induction_csv(data_path);
    require(ds.mode == pad.mode, "train: dataset mode differs from the PAD GP bundle mode");
    require(ds.features.rows() == pad.model.dbn.input_dim(), "train: feature length does not match model");
    cv.seed = apply_seed_env(cv.seed);

    const Eigen::Index m = ds.features.cols();
    Eigen::MatrixXd pad_means(3, m);
    for (Eigen::Index i = 0; i < m; ++i)
        pad_means.col(i) = pad_posterior(pad.model, ds.features.col(i)).mean;

    CvReport report;
    PerfGpBundle bundle;
    bundle.model = fit_perf_gp(pad_means, ds.qot, cv, &report);
    bundle.cv = report;
    save_perf_gp_bundle(out, bundle);

    std::cout << "stage=perf-gp\n";
    std::cout << "samples=" << m << "\n";
    std::cout << "alpha=" << detail_io::fmt(report.alpha) << "\n";
    std::cout << "beta=" << detail_io::fmt(report.beta) << "\n";
    std::cout << "cv_mse=" << detail_io::fmt(report.cv_mse) << "\n";
    std::cout << "grid_index=" << report.grid_index << "\n";
    std::cout << "out=" << out << "\n";
    return 0;
}

// -------------------------------------------------------------- predict

int cmd_predict(const std::string& model_dir, std::string pad_gp_path, std::string perf_gp_path,
                const std::string& features_path, const std::string& windows_dir,
                const std::string& features_out, const std::string& out, double q_r) {
    if (!model_dir.empty()) {
        if (pad_gp_path.empty()) pad_gp_path = (std::filesystem::path(model_dir) / "pad_gp.json").string();
        if (perf_gp_path.empty()) perf_gp_path = (std::filesystem::path(model_dir) / "perf_gp.json").string();
    }
    require(!pad_gp_path.empty() && !perf_gp_path.empty(),
            "predict: provide --model-dir or both --pad-gp and --perf-gp");
    require(features_path.empty() != windows_dir.empty(),
            "predict: provide exactly one of --features-file or --windows-dir");

    const PadGpBundle pad = load_pad_gp_bundle(pad_gp_path);
    const PerfGpBundle perf = load_perf_gp_bundle(perf_gp_path);

    std::vector<std::string> ids;
    Eigen::MatrixXd features;
    if (!features_path.empty()) {
        const FeatureTable f = load_feature_table(features_path);
        require(f.mode == pad.mode, "predict: features mode '" + to_string(f.mode) +
                                        "' does not match model mode '" + to_string(pad.mode) + "'");
        ids = f.ids;
        features = f.features;
    } else {
        std::vector<std::filesystem::path> paths;
        if (!std::filesystem::is_directory(windows_dir))
            throw io_error(windows_dir + ": not a directory");
        for (const auto& entry : std::filesystem::directory_iterator(windows_dir))
            if (entry.is_regular_file() && entry.path().extension() == ".csv")
                paths.push_back(entry.path());
        std::sort(paths.begin(), paths.end());
        features.resize(feature_dim(pad.mode), static_cast<Eigen::Index>(paths.size()));
        for (std::size_t i = 0; i < paths.size(); ++i) {
            const EegWindow win = load_window_csv(paths[i]);
            features.col(static_cast<Eigen::Index>(i)) =
                extract_features(win, pad.mode, pad.k_max).values;
            ids.push_back(paths[i].stem().string());
        }
        if (!features_out.empty()) save_features_csv(features_out, ids, features, pad.mode);
    }
    require(features.rows() == pad.model.dbn.input_dim(), "predict: feature length does not match model");

    std::ostringstream csv;
    csv << "# padloop csv_version=" << kCsvVersion << " kind=posteriors mode=" << to_string(pad.mode)
        << "\n";
    csv << "window_id,pad_mean_p,pad_mean_a,pad_mean_d,pad_var_p,pad_var_a,pad_var_d,"
           "qot_mean,qot_var,prob_ge_q_r\n";
    for (Eigen::Index i = 0; i < features.cols(); ++i) {
        const PadPosterior pp = pad_posterior(pad.model, features.col(i));
        const QotPosterior qp = qot_posterior(perf.model, pp);
        const double prob = prob_q_at_least(qp, q_r);
        csv << ids[static_cast<std::size_t>(i)];
        for (int d = 0; d < 3; ++d) csv << "," << detail_io::fmt(pp.mean[d]);
        for (int d = 0; d < 3; ++d) csv << "," << detail_io::fmt(pp.var[d]);
        csv << "," << detail_io::fmt(qp.mean) << "," << detail_io::fmt(qp.var) << ","
            << detail_io::fmt(prob) << "\n";
    }
    detail_io::atomic_write(out, csv.str());

    std::cout << "rows=" << features.cols() << "\n";
    std::cout << "out=" << out << "\n";
    return 0;
}

// ------------------------------------------------------------- simulate

int cmd_simulate(const std::string& config_path, const std::string& control_str, int horizon,
                 std::uint64_t seed, bool seed_given, const std::string& out) {
    RunConfig cfg = load_run_config(config_path);
    if (!control_str.empty()) {
        if (control_str == "on")
            cfg.control_enabled = true;
        else if (control_str == "off")
            cfg.control_enabled = false;
        else
            throw invalid_input("simulate: --control must be on or off");
    }
    if (horizon > 0) cfg.horizon = horizon;
    if (seed_given) cfg.seed = seed;
    cfg.seed = apply_seed_env(cfg.seed);
    cfg.validate();

    const PadGpBundle pad = load_pad_gp_bundle(cfg.pad_gp_bundle);
    const PerfGpBundle perf = load_perf_gp_bundle(cfg.perf_gp_bundle);

    const LoopTrace trace = run_closed_loop(pad.model, perf.model, cfg.controller, cfg.sim, pad.mode,
                                            pad.k_max, cfg.horizon, cfg.control_enabled, cfg.seed);
    save_trace_csv(out, trace);

    std::cout << "steps=" << trace.steps.size() << "\n";
    std::cout << "control=" << (trace.control_enabled ? "on" : "off") << "\n";
    std::cout << "seed=" << trace.seed << "\n";
    std::cout << "aborted=" << (trace.aborted ? 1 : 0) << "\n";
    if (trace.aborted) std::cout << "abort_reason=" << trace.abort_reason << "\n";
    if (!trace.steps.empty()) {
        const TraceSummary s = summarize_trace(trace);
        std::cout << "mean_true_q=" << detail_io::fmt(s.mean_true_q) << "\n";
        std::cout << "mean_est_q=" << detail_io::fmt(s.mean_est_q) << "\n";
        std::cout << "p_true_ge_qr=" << detail_io::fmt(s.p_true_ge_qr) << "\n";
        std::cout << "nonnull_actions=" << s.nonnull_actions << "\n";
    }
    std::cout << "out=" << out << "\n";
    return 0;
}

// --------------------------------------------------------------- report

int cmd_report(const std::vector<std::string>& trace_paths, const std::string& out_dir) {
    std::vector<LoopTrace> traces;
    traces.reserve(trace_paths.size());
    for (const auto& p : trace_paths) traces.push_back(load_trace_csv(p));
    write_report(out_dir, traces);

    for (std::size_t i = 0; i < traces.size(); ++i) {
        const TraceSummary s = summarize_trace(traces[i]);
        std::cout << "trace_" << i << "_steps=" << s.steps << "\n";
        std::cout << "trace_" << i << "_mean_true_q=" << detail_io::fmt(s.mean_true_q) << "\n";
        std::cout << "trace_" << i << "_mean_est_q=" << detail_io::fmt(s.mean_est_q) << "\n";
        std::cout << "trace_" << i << "_p_true_ge_qr=" << detail_io::fmt(s.p_true_ge_qr) << "\n";
        std::cout << "trace_" << i << "_nonnull_actions=" << s.nonnull_actions << "\n";
    }
    if (traces.size() == 2) {
        const TraceSummary a = summarize_trace(traces[0]);
        const TraceSummary b = summarize_trace(traces[1]);
        std::cout << "diff_mean_true_q=" << detail_io::fmt(a.mean_true_q - b.mean_true_q) << "\n";
        std::cout << "diff_p_true_ge_qr=" << detail_io::fmt(a.p_true_ge_qr - b.p_true_ge_qr) << "\n";
    }
    std::cout << "out_dir=" << out_dir << "\n";
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"padloop: affect-adaptive operator support pipeline"};
    app.require_subcommand(1);

    // gen-data
    auto* gen = app.add_subcommand("gen-data", "Generate a synthetic labeled dataset");
    std::string gen_kind, gen_out, gen_mode = "EEG", gen_sim;
    std::uint64_t gen_seed = 0;
    int gen_count = 0, gen_kmax = kDefaultKmax;
    gen->add_option("--kind", gen_kind, "elicitation or induction")->required();
    gen->add_option("--out", gen_out, "output CSV path")->required();
    gen->add_option("--seed", gen_seed, "random seed (default 0)");
    gen->add_option("--count", gen_count, "sample count (default 183 elicitation, 60 induction)");
    gen->add_option("--mode", gen_mode, "feature mode: EEG or BANDS (default EEG)");
    gen->add_option("--sim", gen_sim, "simulator config JSON (defaults used when omitted)");
    gen->add_option("--k-max", gen_kmax, "Higuchi k_max (default 8)");

    // train
    auto* train = app.add_subcommand("train", "Train one pipeline stage");
    std::string tr_stage, tr_data, tr_valid, tr_out, tr_dbn, tr_pad_gp;
    TrainConfig tr_cfg;
    int tr_kmax = kDefaultKmax, tr_ft_epochs = -1;
    double tr_alpha0 = 1.0, tr_beta0 = 1.0, tr_noise = 1e-3;
    CvConfig tr_cv;
    bool tr_seed_given = false;
    std::uint64_t tr_seed = 0;
    train->add_option("--stage", tr_stage, "dbn, pad-gp, or perf-gp")->required();
    train->add_option("--data", tr_data, "training dataset CSV")->required();
    train->add_option("--valid", tr_valid, "validation dataset CSV (optional)");
    train->add_option("--out", tr_out, "output bundle path")->required();
    train->add_option("--dbn", tr_dbn, "DBN bundle (pad-gp stage)");
    train->add_option("--pad-gp", tr_pad_gp, "PAD GP bundle (perf-gp stage)");
    train->add_option("--seed", tr_seed, "random seed")->each([&](const std::string&) { tr_seed_given = true; });
    train->add_option("--epochs", tr_cfg.epochs, "pretraining epochs (default 30)");
    train->add_option("--finetune-epochs", tr_ft_epochs, "fine-tune epochs (default: pretraining epochs)");
    train->add_option("--minibatch", tr_cfg.minibatch_size, "minibatch size (default 16)");
    train->add_option("--k-max", tr_kmax, "Higuchi k_max stored in the DBN bundle (default 8)");
    train->add_option("--alpha0", tr_alpha0, "initial kernel alpha for fine-tuning (default 1)");
    train->add_option("--beta0", tr_beta0, "initial kernel beta for fine-tuning (default 1)");
    train->add_option("--noise", tr_noise, "observation noise variance (default 1e-3)");
    train->add_option("--folds", tr_cv.folds, "CV folds (perf-gp, default 5)");
    train->add_option("--repeats", tr_cv.repeats, "CV repetitions (perf-gp, default 3)");

    // predict
    auto* pred = app.add_subcommand("predict", "Predict PAD and QoT posteriors for feature rows");
    std::string pr_model_dir, pr_pad, pr_perf, pr_features, pr_windows, pr_features_out, pr_out;
    double pr_qr = 1.0;
    pred->add_option("--model-dir", pr_model_dir, "directory holding pad_gp.json and perf_gp.json");
    pred->add_option("--pad-gp", pr_pad, "PAD GP bundle path");
    pred->add_option("--perf-gp", pr_perf, "performance GP bundle path");
    pred->add_option("--features-file", pr_features, "features CSV input");
    pred->add_option("--windows-dir", pr_windows, "directory of raw window CSVs");
    pred->add_option("--features-out", pr_features_out, "write extracted features CSV here (windows input only)");
    pred->add_option("--out", pr_out, "output posteriors CSV")->required();
    pred->add_option("--q-r", pr_qr, "performance reference for the probability column (default 1)");

    // simulate
    auto* sim = app.add_subcommand("simulate", "Run a closed-loop episode");
    std::string sm_config, sm_control, sm_out;
    int sm_horizon = 0;
    std::uint64_t sm_seed = 0;
    bool sm_seed_given = false;
    sim->add_option("--config", sm_config, "run config JSON")->required();
    sim->add_option("--control", sm_control, "on or off (overrides config)");
    sim->add_option("--horizon", sm_horizon, "step count (overrides config)");
    sim->add_option("--seed", sm_seed, "random seed (overrides config)")
        ->each([&](const std::string&) { sm_seed_given = true; });
    sim->add_option("--out", sm_out, "output trace CSV")->required();

    // report
    auto* rep = app.add_subcommand("report", "Summarize one or more traces");
    std::vector<std::string> rp_traces;
    std::string rp_out_dir;
    rep->add_option("--trace", rp_traces, "trace CSV (repeat for paired comparison)")->required();
    rep->add_option("--out-dir", rp_out_dir, "output directory")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (gen->parsed())
            return cmd_gen_data(gen_kind, gen_out, gen_seed, gen_count, gen_mode, gen_sim, gen_kmax);
        if (train->parsed()) {
            if (tr_seed_given) tr_cfg.seed = tr_seed;
            if (tr_stage == "dbn") return cmd_train_dbn(tr_data, tr_valid, tr_out, tr_cfg, tr_kmax);
            if (tr_stage == "pad-gp") {
                require(!tr_dbn.empty(), "train: --dbn is required for the pad-gp stage");
                return cmd_train_pad_gp(tr_dbn, tr_data, tr_valid, tr_out, tr_ft_epochs, tr_alpha0,
                                        tr_beta0, tr_noise, tr_seed, tr_seed_given);
            }
            if (tr_stage == "perf-gp") {
                require(!tr_pad_gp.empty(), "train: --pad-gp is required for the perf-gp stage");
                tr_cv.noise_var = tr_noise;
                if (tr_seed_given) tr_cv.seed = tr_seed;
                return cmd_train_perf_gp(tr_pad_gp, tr_data, tr_out, tr_cv);
            }
            throw invalid_input("train: --stage must be dbn, pad-gp, or perf-gp");
        }
        if (pred->parsed())
            return cmd_predict(pr_model_dir, pr_pad, pr_perf, pr_features, pr_windows, pr_features_out,
                               pr_out, pr_qr);
        if (sim->parsed())
            return cmd_simulate(sm_config, sm_control, sm_horizon, sm_seed, sm_seed_given, sm_out);
        if (rep->parsed()) return cmd_report(rp_traces, rp_out_dir);
        std::cerr << "error: no command given\n";
        return 2;
    } catch (const numerical_failure& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 4;
    } catch (const io_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    } catch (const version_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    } catch (const invalid_input& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "unexpected error: " << e.what() << "\n";
        return 1;
    }
}
