#include <catch2/catch_amalgamated.hpp>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <unistd.h>
#include <vector>

#include <padloop/padloop.hpp>

using namespace padloop;
namespace fs = std::filesystem;
using Catch::Matchers::ContainsSubstring;
using Catch::Matchers::MessageMatches;

namespace {

struct TempDir {
    fs::path path;
    TempDir() {
        static int counter = 0;
        path = fs::temp_directory_path() /
               ("padloop_io_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
        fs::create_directories(path);
    }
    ~TempDir() {
        std::error_code ec;
        fs::remove_all(path, ec);
    }
};

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    REQUIRE(in.good());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void spit(const fs::path& p, const std::string& content) {
    std::ofstream out(p, std::ios::binary | std::ios::trunc);
    out << content;
}

void replace_once(std::string& text, const std::string& from, const std::string& to) {
    const auto at = text.find(from);
    REQUIRE(at != std::string::npos);
    text.replace(at, from.size(), to);
}

EegWindow test_window(std::uint64_t seed) {
    Rng rng(seed);
    return synth_eeg(OperatorState{}, SimConfig::defaults().synth, rng);
}

LoopTrace hand_trace(bool control, std::uint64_t seed) {
    LoopTrace t;
    t.control_enabled = control;
    t.mode = FeatureMode::EEG;
    t.q_r = 1.0;
    t.seed = seed;
    Rng rng(seed);
    const std::vector<double> q_on = {0.5, 1.5, 2.0, 0.8};
    const std::vector<double> q_off = {0.4, 0.6, 1.2, 0.8};
    const std::vector<int> ids = {0, 2, 3, 0};
    for (int k = 0; k < 4; ++k) {
        LoopStep s;
        s.k = k;
        s.features = Eigen::VectorXd::Zero(14);
        for (int f = 0; f < 14; ++f) s.features[f] = 1.0 + rng.uniform();
        s.pad_post.mean = Eigen::Vector3d(5.0 + k, 4.0, 6.0);
        s.pad_post.var = Eigen::Vector3d(0.1, 0.2, 0.3);
        s.qot_post.mean = 0.9 + 0.1 * ((k + 1) % 3);
        s.qot_post.var = 0.05;
        s.prob = control ? std::vector<double>{0.2, 0.8, 0.5, 0.5}[k] : 0.3;
        s.eps = s.qot_post.mean - 0.9;
        s.delta_eps = k == 0 ? 0.0 : 0.25;
        s.gate = control && ids[k] != 0 ? 1 : 0;
        s.action_id = control ? ids[k] : 0;
        s.u_hat = control && ids[k] != 0 ? Eigen::Vector3d::Constant(1.0) : Eigen::Vector3d::Zero();
        s.true_pad = Eigen::Vector3d(6.0, 6.0 - 0.1 * k, 6.2);
        s.true_fatigue = k / 150.0;
        s.true_q = control ? q_on[k] : q_off[k];
        t.steps.push_back(std::move(s));
    }
    return t;
}

} // namespace

// ------------------------------------------------------------ atomic writes

TEST_CASE("atomic write leaves no temporary and replaces existing files") {
    TempDir dir;
    const fs::path p = dir.path / "file.txt";
    detail_io::atomic_write(p, "first\n");
    REQUIRE(slurp(p) == "first\n");
    detail_io::atomic_write(p, "second\n");
    REQUIRE(slurp(p) == "second\n");
    int entries = 0;
    for (auto it = fs::directory_iterator(dir.path); it != fs::directory_iterator(); ++it) ++entries;
    REQUIRE(entries == 1);  // no .tmp residue
    REQUIRE_THROWS_AS(detail_io::atomic_write(dir.path / "nodir" / "x.txt", "y"), io_error);
}

// ----------------------------------------------------------------- windows

TEST_CASE("window CSV round-trips bit for bit") {
    TempDir dir;
    const EegWindow win = test_window(4);
    const fs::path p = dir.path / "w.csv";
    save_window_csv(p, win);
    const EegWindow back = load_window_csv(p);
    REQUIRE((back.samples - win.samples).cwiseAbs().maxCoeff() == 0.0);
    const std::string text = slurp(p);
    REQUIRE(text.rfind("AF3,", 0) == 0);  // channel-label header row
}

TEST_CASE("window CSV rejects truncation instead of returning partial data") {
    TempDir dir;
    const fs::path p = dir.path / "w.csv";
    save_window_csv(p, test_window(4));
    std::string text = slurp(p);
    std::size_t pos = 0;
    for (int lines = 0; lines < 100; ++lines) pos = text.find('\n', pos) + 1;
    spit(p, text.substr(0, pos));
    REQUIRE_THROWS_MATCHES(load_window_csv(p), io_error, MessageMatches(ContainsSubstring("99")));
}

TEST_CASE("window CSV reports malformed numbers with their line number") {
    TempDir dir;
    const fs::path p = dir.path / "w.csv";
    save_window_csv(p, test_window(4));
    std::string text = slurp(p);
    std::vector<std::string> lines;
    std::istringstream ss(text);
    for (std::string l; std::getline(ss, l);) lines.push_back(l);
    lines[4] = "oops" + lines[4].substr(lines[4].find(','));  // data line 5
    std::ostringstream out;
    for (const auto& l : lines) out << l << "\n";
    spit(p, out.str());
    REQUIRE_THROWS_MATCHES(load_window_csv(p), io_error, MessageMatches(ContainsSubstring(":5")));
    REQUIRE_THROWS_MATCHES(load_window_csv(p), io_error, MessageMatches(ContainsSubstring("oops")));
}

TEST_CASE("window CSV rejects a wrong header") {
    TempDir dir;
    const fs::path p = dir.path / "w.csv";
    save_window_csv(p, test_window(4));
    std::string text = slurp(p);
    replace_once(text, "AF3", "XX1");
    spit(p, text);
    REQUIRE_THROWS_MATCHES(load_window_csv(p), io_error, MessageMatches(ContainsSubstring("AF3")));
}

// ---------------------------------------------------------------- features

TEST_CASE("features CSV round-trips ids, mode, and values") {
    TempDir dir;
    Rng rng(9);
    Eigen::MatrixXd f(14, 3);
    for (int i = 0; i < f.size(); ++i) f.data()[i] = 1.0 + rng.uniform();
    const fs::path p = dir.path / "f.csv";
    save_features_csv(p, {"w0", "w1", "w2"}, f, FeatureMode::EEG);
    const FeaturesFile back = load_features_csv(p);
    REQUIRE(back.mode == FeatureMode::EEG);
    REQUIRE(back.window_ids == std::vector<std::string>{"w0", "w1", "w2"});
    REQUIRE((back.features - f).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("features CSV enforces kind, version, and row mode") {
    TempDir dir;
    Eigen::MatrixXd f = Eigen::MatrixXd::Constant(14, 2, 1.5);
    const fs::path p = dir.path / "f.csv";
    save_features_csv(p, {"a", "b"}, f, FeatureMode::EEG);

    std::string version_bumped = slurp(p);
    replace_once(version_bumped, "csv_version=1", "csv_version=3");
    spit(dir.path / "v.csv", version_bumped);
    try {
        load_features_csv(dir.path / "v.csv");
        FAIL("expected version_error");
    } catch (const version_error& e) {
        // names both the file's version and the supported one
        REQUIRE_THAT(e.what(), ContainsSubstring("3"));
        REQUIRE_THAT(e.what(), ContainsSubstring("1"));
    }

    std::string wrong_row_mode = slurp(p);
    replace_once(wrong_row_mode, "b,EEG", "b,BANDS");
    spit(dir.path / "m.csv", wrong_row_mode);
    REQUIRE_THROWS_AS(load_features_csv(dir.path / "m.csv"), io_error);

    // a features file is not an elicitation file
    REQUIRE_THROWS_MATCHES(load_elicitation_csv(p), io_error, MessageMatches(ContainsSubstring("elicitation")));
}

// ---------------------------------------------------------------- datasets

TEST_CASE("elicitation CSV round-trips bit for bit") {
    TempDir dir;
    const ElicitationDataset ds = generate_elicitation(SimConfig::defaults(), FeatureMode::EEG, 8, 5, 3);
    const fs::path p = dir.path / "e.csv";
    save_elicitation_csv(p, ds);
    const ElicitationDataset back = load_elicitation_csv(p);
    REQUIRE(back.mode == ds.mode);
    REQUIRE((back.features - ds.features).cwiseAbs().maxCoeff() == 0.0);
    REQUIRE((back.labels - ds.labels).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("induction CSV round-trips bit for bit") {
    TempDir dir;
    const InductionDataset ds = generate_induction(SimConfig::defaults(), FeatureMode::BANDS, 8, 5, 3);
    const fs::path p = dir.path / "i.csv";
    save_induction_csv(p, ds);
    const InductionDataset back = load_induction_csv(p);
    REQUIRE(back.mode == FeatureMode::BANDS);
    REQUIRE((back.features - ds.features).cwiseAbs().maxCoeff() == 0.0);
    REQUIRE((back.qot - ds.qot).cwiseAbs().maxCoeff() == 0.0);
}

// ------------------------------------------------------------------- trace

TEST_CASE("trace CSV round-trips every column and the metadata") {
    TempDir dir;
    const LoopTrace t = hand_trace(true, 77);
    const fs::path p = dir.path / "t.csv";
    save_trace_csv(p, t);
    const LoopTrace back = load_trace_csv(p);
    REQUIRE(back.control_enabled == t.control_enabled);
    REQUIRE(back.seed == t.seed);
    REQUIRE(back.q_r == t.q_r);
    REQUIRE(back.mode == t.mode);
    REQUIRE_FALSE(back.aborted);
    REQUIRE(back.steps.size() == t.steps.size());
    for (std::size_t k = 0; k < t.steps.size(); ++k) {
        const LoopStep& a = t.steps[k];
        const LoopStep& b = back.steps[k];
        REQUIRE(b.k == a.k);
        REQUIRE((b.features - a.features).cwiseAbs().maxCoeff() == 0.0);
        REQUIRE((b.pad_post.mean - a.pad_post.mean).cwiseAbs().maxCoeff() == 0.0);
        REQUIRE((b.pad_post.var - a.pad_post.var).cwiseAbs().maxCoeff() == 0.0);
        REQUIRE(b.qot_post.mean == a.qot_post.mean);
        REQUIRE(b.qot_post.var == a.qot_post.var);
        REQUIRE(b.prob == a.prob);
        REQUIRE(b.eps == a.eps);
        REQUIRE(b.delta_eps == a.delta_eps);
        REQUIRE(b.gate == a.gate);
        REQUIRE(b.action_id == a.action_id);
        REQUIRE((b.u_hat - a.u_hat).cwiseAbs().maxCoeff() == 0.0);
        REQUIRE((b.true_pad - a.true_pad).cwiseAbs().maxCoeff() == 0.0);
        REQUIRE(b.true_fatigue == a.true_fatigue);
        REQUIRE(b.true_q == a.true_q);
    }
}

TEST_CASE("aborted traces keep their flag through the file") {
    TempDir dir;
    LoopTrace t = hand_trace(false, 3);
    t.aborted = true;
    t.abort_reason = "invalid input: something";
    const fs::path p = dir.path / "t.csv";
    save_trace_csv(p, t);
    REQUIRE_THAT(slurp(p), ContainsSubstring("aborted=1"));
    REQUIRE(load_trace_csv(p).aborted);
}

TEST_CASE("trace CSV rejects non-contiguous step indices") {
    TempDir dir;
    LoopTrace t = hand_trace(false, 3);
    t.steps[1].k = 2;
    const fs::path p = dir.path / "t.csv";
    save_trace_csv(p, t);
    REQUIRE_THROWS_MATCHES(load_trace_csv(p), io_error, MessageMatches(ContainsSubstring("contiguous")));
}

// ----------------------------------------------------------------- configs

TEST_CASE("controller config JSON round-trips and re-saves identically") {
    TempDir dir;
    ControllerConfig cfg = ControllerConfig::defaults();
    cfg.q_r = 1.25;
    cfg.beta_r = 0.85;
    const fs::path p = dir.path / "c.json";
    save_controller_config(p, cfg);
    const ControllerConfig back = load_controller_config(p);
    REQUIRE(back.q_r == cfg.q_r);
    REQUIRE(back.beta_r == cfg.beta_r);
    REQUIRE((back.f_r - cfg.f_r).cwiseAbs().maxCoeff() == 0.0);
    for (int i = 0; i < 5; ++i)
        for (int j = 0; j < 5; ++j) REQUIRE(back.table.cells[i][j] == cfg.table.cells[i][j]);
    for (int l = 0; l < kNumActionLabels; ++l)
        REQUIRE((back.centers[l] - cfg.centers[l]).cwiseAbs().maxCoeff() == 0.0);
    REQUIRE(back.library.entries.size() == cfg.library.entries.size());
    REQUIRE(back.error_partition.mf[1].peak == cfg.error_partition.mf[1].peak);
    const fs::path q = dir.path / "c2.json";
    save_controller_config(q, back);
    REQUIRE(slurp(p) == slurp(q));
}

TEST_CASE("sim config JSON round-trips and re-saves identically") {
    TempDir dir;
    SimConfig cfg = SimConfig::defaults();
    cfg.op.relax_rate = 0.2;
    cfg.trial.noise_std = 0.1;
    cfg.init_state.skill = 0.7;
    const fs::path p = dir.path / "s.json";
    save_sim_config(p, cfg);
    const SimConfig back = load_sim_config(p);
    REQUIRE(back.op.relax_rate == 0.2);
    REQUIRE(back.trial.noise_std == 0.1);
    REQUIRE(back.init_state.skill == 0.7);
    REQUIRE(back.synth.bands[3].f_hi == cfg.synth.bands[3].f_hi);
    REQUIRE(back.synth.bands[1].map.size() == cfg.synth.bands[1].map.size());
    for (std::size_t e = 0; e < cfg.synth.bands[1].map.size(); ++e) {
        const auto& want = cfg.synth.bands[1].map[e];
        const auto& got = back.synth.bands[1].map[e];
        REQUIRE((got.weights - want.weights).cwiseAbs().maxCoeff() == 0.0);
        for (int c = 0; c < kNumChannels; ++c) REQUIRE(got.mask[c] == want.mask[c]);
    }
    const fs::path q = dir.path / "s2.json";
    save_sim_config(q, back);
    REQUIRE(slurp(p) == slurp(q));
}

TEST_CASE("run config JSON round-trips") {
    TempDir dir;
    RunConfig cfg;
    cfg.pad_gp_bundle = "pad.json";
    cfg.perf_gp_bundle = "perf.json";
    cfg.horizon = 37;
    cfg.control_enabled = false;
    cfg.seed = 123456789012345ull;
    const fs::path p = dir.path / "run.json";
    save_run_config(p, cfg);
    const RunConfig back = load_run_config(p);
    REQUIRE(back.pad_gp_bundle == "pad.json");
    REQUIRE(back.perf_gp_bundle == "perf.json");
    REQUIRE(back.horizon == 37);
    REQUIRE_FALSE(back.control_enabled);
    REQUIRE(back.seed == 123456789012345ull);
}

TEST_CASE("configs reject unknown keys at every level") {
    TempDir dir;
    const fs::path p = dir.path / "c.json";
    save_controller_config(p, ControllerConfig::defaults());
    auto j = detail_io::load_json(p);
    j["mystery"] = 1;
    detail_io::atomic_write(p, j.dump(2) + "\n");
    REQUIRE_THROWS_MATCHES(load_controller_config(p), io_error, MessageMatches(ContainsSubstring("mystery")));

    const fs::path s = dir.path / "s.json";
    save_sim_config(s, SimConfig::defaults());
    j = detail_io::load_json(s);
    j["operator"]["typo"] = 2;  // nested section
    detail_io::atomic_write(s, j.dump(2) + "\n");
    REQUIRE_THROWS_MATCHES(load_sim_config(s), io_error, MessageMatches(ContainsSubstring("typo")));

    RunConfig rc;
    rc.pad_gp_bundle = "a";
    rc.perf_gp_bundle = "b";
    const fs::path r = dir.path / "r.json";
    save_run_config(r, rc);
    j = detail_io::load_json(r);
    j["extra"] = true;
    detail_io::atomic_write(r, j.dump(2) + "\n");
    REQUIRE_THROWS_MATCHES(load_run_config(r), io_error, MessageMatches(ContainsSubstring("extra")));
}

TEST_CASE("config version and kind mismatches are fatal") {
    TempDir dir;
    const fs::path p = dir.path / "c.json";
    save_controller_config(p, ControllerConfig::defaults());
    auto j = detail_io::load_json(p);
    j["format_version"] = 9;
    detail_io::atomic_write(p, j.dump(2) + "\n");
    try {
        load_controller_config(p);
        FAIL("expected version_error");
    } catch (const version_error& e) {
        REQUIRE_THAT(e.what(), ContainsSubstring("9"));
        REQUIRE_THAT(e.what(), ContainsSubstring("1"));
    }
    const fs::path s = dir.path / "s.json";
    save_sim_config(s, SimConfig::defaults());
    REQUIRE_THROWS_AS(load_controller_config(s), io_error);  // wrong kind
    spit(dir.path / "bad.json", "{not json");
    REQUIRE_THROWS_AS(load_sim_config(dir.path / "bad.json"), io_error);
    REQUIRE_THROWS_AS(load_sim_config(dir.path / "missing.json"), io_error);
}

// ------------------------------------------------------------------ bundles

TEST_CASE("DBN bundles survive a save/load cycle byte for byte") {
    TempDir dir;
    Rng rng(5);
    Eigen::MatrixXd data(14, 10);
    for (int i = 0; i < data.size(); ++i) data.data()[i] = rng.uniform();
    TrainConfig tc;
    tc.epochs = 2;
    tc.seed = 5;
    DbnBundle b;
    b.normalizer = Normalizer::fit(data);
    b.dbn = pretrain_dbn(b.normalizer.transform_all(data), {14, 6, 4}, tc);
    b.mode = FeatureMode::EEG;
    b.k_max = 6;
    b.train_config = tc;

    const fs::path p = dir.path / "dbn.json";
    save_dbn_bundle(p, b);
    const DbnBundle back = load_dbn_bundle(p);
    REQUIRE(back.mode == FeatureMode::EEG);
    REQUIRE(back.k_max == 6);
    REQUIRE(back.train_config.epochs == 2);
    REQUIRE(back.train_config.seed == 5);
    REQUIRE(back.dbn.layers.size() == b.dbn.layers.size());
    for (std::size_t l = 0; l < b.dbn.layers.size(); ++l) {
        REQUIRE((back.dbn.layers[l].weights - b.dbn.layers[l].weights).cwiseAbs().maxCoeff() == 0.0);
        REQUIRE((back.dbn.layers[l].hidden_bias - b.dbn.layers[l].hidden_bias).cwiseAbs().maxCoeff() == 0.0);
        REQUIRE((back.dbn.layers[l].visible_bias - b.dbn.layers[l].visible_bias).cwiseAbs().maxCoeff() == 0.0);
    }
    REQUIRE((back.normalizer.transform_all(data) - b.normalizer.transform_all(data))
                .cwiseAbs()
                .maxCoeff() == 0.0);
    const fs::path q = dir.path / "dbn2.json";
    save_dbn_bundle(q, back);
    REQUIRE(slurp(p) == slurp(q));
}

TEST_CASE("PAD GP bundles reproduce identical posteriors after reload") {
    TempDir dir;
    Rng rng(6);
    Eigen::MatrixXd feats(14, 8);
    for (int i = 0; i < feats.size(); ++i) feats.data()[i] = 1.0 + rng.uniform();
    const Eigen::MatrixXd labels = sample_pad_labels(8, 6);
    TrainConfig tc;
    tc.epochs = 2;
    tc.seed = 6;
    const Normalizer norm = Normalizer::fit(feats);
    const DbnParams dbn = pretrain_dbn(norm.transform_all(feats), {14, 6, 4}, tc);
    std::array<KernelParams, 3> kernels;
    kernels.fill(KernelParams{1.1, 0.9, 1e-3});

    PadGpBundle b;
    b.model = fit_pad_gp(dbn, norm, feats, labels, kernels);
    b.mode = FeatureMode::EEG;
    b.k_max = 8;
    const fs::path p = dir.path / "pad.json";
    save_pad_gp_bundle(p, b);
    const PadGpBundle back = load_pad_gp_bundle(p);

    Eigen::VectorXd probe(14);
    for (int i = 0; i < 14; ++i) probe[i] = 1.0 + rng.uniform();
    const PadPosterior a = pad_posterior(b.model, probe);
    const PadPosterior c = pad_posterior(back.model, probe);
    REQUIRE((a.mean - c.mean).cwiseAbs().maxCoeff() == 0.0);
    REQUIRE((a.var - c.var).cwiseAbs().maxCoeff() == 0.0);
    const fs::path q = dir.path / "pad2.json";
    save_pad_gp_bundle(q, back);
    REQUIRE(slurp(p) == slurp(q));
}

TEST_CASE("perf GP bundles keep the kernel, data, and search report") {
    TempDir dir;
    Eigen::MatrixXd pad(3, 4);
    pad << 2, 4, 6, 8, 2.5, 4.5, 6.5, 8.5, 3, 5, 7, 9;
    Eigen::VectorXd q(4);
    q << 0.5, 0.8, 1.4, 2.0;
    PerfGpBundle b;
    b.model = make_perf_gp(pad, q, KernelParams{0.05, 2.0, 1e-3});
    b.cv = CvReport{};
    b.cv.alpha = 0.05;
    b.cv.beta = 2.0;
    b.cv.cv_mse = 0.123;
    b.cv.grid_index = 42;
    const fs::path p = dir.path / "perf.json";
    save_perf_gp_bundle(p, b);
    const PerfGpBundle back = load_perf_gp_bundle(p);
    REQUIRE((back.model.pad_train - pad).cwiseAbs().maxCoeff() == 0.0);
    REQUIRE((back.model.q_train - q).cwiseAbs().maxCoeff() == 0.0);
    REQUIRE(back.model.kernel.alpha == 0.05);
    REQUIRE(back.cv.cv_mse == 0.123);
    REQUIRE(back.cv.grid_index == 42);
    PadPosterior at;
    at.mean = Eigen::Vector3d(5.0, 5.5, 6.0);
    at.var = Eigen::Vector3d::Zero();
    const QotPosterior qa = qot_posterior(b.model, at);
    const QotPosterior qb = qot_posterior(back.model, at);
    REQUIRE(qa.mean == qb.mean);
    REQUIRE(qa.var == qb.var);
    const fs::path r = dir.path / "perf2.json";
    save_perf_gp_bundle(r, back);
    REQUIRE(slurp(p) == slurp(r));
}

TEST_CASE("bundle headers are checked before any payload") {
    TempDir dir;
    Eigen::MatrixXd pad = Eigen::MatrixXd::Constant(3, 2, 5.0);
    Eigen::VectorXd q = Eigen::VectorXd::Constant(2, 1.0);
    PerfGpBundle b;
    b.model = make_perf_gp(pad, q, KernelParams{0.05, 2.0, 1e-3});
    const fs::path p = dir.path / "perf.json";
    save_perf_gp_bundle(p, b);
    REQUIRE_THROWS_AS(load_pad_gp_bundle(p), io_error);  // wrong kind
    auto j = detail_io::load_json(p);
    j["format_version"] = 2;
    detail_io::atomic_write(p, j.dump(2) + "\n");
    REQUIRE_THROWS_AS(load_perf_gp_bundle(p), version_error);
}

// ------------------------------------------------------------------ report

TEST_CASE("report summarizes traces with plain column means") {
    TempDir dir;
    const LoopTrace on = hand_trace(true, 1);
    const LoopTrace off = hand_trace(false, 2);

    const TraceSummary s = summarize_trace(on);
    REQUIRE(s.steps == 4);
    REQUIRE(s.mean_true_q == Catch::Approx((0.5 + 1.5 + 2.0 + 0.8) / 4.0).margin(1e-12));
    REQUIRE(s.p_true_ge_qr == Catch::Approx(0.5).margin(1e-15));
    REQUIRE(s.nonnull_actions == 2);
    REQUIRE(s.stimulus_counts.at(0) == 2);
    REQUIRE(s.stimulus_counts.at(2) == 1);
    REQUIRE(s.stimulus_counts.at(3) == 1);

    const fs::path out = dir.path / "report";
    write_report(out, {on, off});
    const std::string summary = slurp(out / "summary.csv");
    REQUIRE_THAT(summary, ContainsSubstring("kind=report_summary"));
    REQUIRE_THAT(summary, ContainsSubstring("\n0,on,4,"));
    REQUIRE_THAT(summary, ContainsSubstring("\n1,off,4,"));
    REQUIRE_THAT(summary, ContainsSubstring("\ndiff,paired,"));

    // the summary mean must equal the column mean of the trace exactly as printed
    const double col_mean = (0.5 + 1.5 + 2.0 + 0.8) / 4.0;
    REQUIRE_THAT(summary, ContainsSubstring("," + detail_io::fmt(col_mean) + ","));
    const double diff_mean = col_mean - (0.4 + 0.6 + 1.2 + 0.8) / 4.0;
    REQUIRE_THAT(summary, ContainsSubstring(detail_io::fmt(diff_mean)));

    const std::string counts = slurp(out / "stimulus_counts.csv");
    REQUIRE_THAT(counts, ContainsSubstring("\n0,2,1"));
    REQUIRE_THAT(counts, ContainsSubstring("\n1,0,4"));  // off-control: only null stimuli

    const std::string steps = slurp(out / "steps.csv");
    int lines = 0;
    for (char ch : steps) lines += ch == '\n' ? 1 : 0;
    REQUIRE(lines == 2 + 8);  // meta + header + one row per step per trace
    REQUIRE_THAT(steps, ContainsSubstring("kind=report_steps"));
}

TEST_CASE("single-trace reports omit the paired diff row") {
    TempDir dir;
    const fs::path out = dir.path / "report";
    write_report(out, {hand_trace(true, 1)});
    const std::string summary = slurp(out / "summary.csv");
    REQUIRE_THAT(summary, !ContainsSubstring("diff"));
    REQUIRE_THROWS_AS(write_report(dir.path / "empty", {}), invalid_input);
}
