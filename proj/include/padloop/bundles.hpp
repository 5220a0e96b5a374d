#pragma once

#include <filesystem>
#include <string>

#include <json.hpp>

#include "padloop/csv.hpp"
#include "padloop/cv.hpp"
#include "padloop/dbn.hpp"
#include "padloop/features.hpp"
#include "padloop/gp.hpp"
#include "padloop/rbm.hpp"

namespace padloop {

inline constexpr int kBundleVersion = 1;

namespace detail_io {

using json = nlohmann::json;

inline json load_json(const std::filesystem::path& path) {
    const std::string content = read_file(path);
    try {
        return json::parse(content);
    } catch (const json::parse_error& e) {
        throw io_error("'" + path.string() + "': " + e.what());
    }
}

inline void check_bundle_header(const json& j, const std::string& kind,
                                const std::filesystem::path& path) {
    if (!j.is_object()) throw io_error("'" + path.string() + "': bundle root must be an object");
    if (!j.contains("format_version") || !j["format_version"].is_number_integer())
        throw io_error("'" + path.string() + "': missing integer format_version");
    const int v = j["format_version"].get<int>();
    if (v != kBundleVersion)
        throw version_error("'" + path.string() + "' has format_version " + std::to_string(v) +
                            " but this build supports " + std::to_string(kBundleVersion));
    if (!j.contains("kind") || j["kind"] != kind)
        throw io_error("'" + path.string() + "' is not a " + kind + " bundle");
}

inline json matrix_to_json(const Eigen::MatrixXd& m) {
    json data = json::array();
    for (Eigen::Index r = 0; r < m.rows(); ++r)
        for (Eigen::Index c = 0; c < m.cols(); ++c) data.push_back(m(r, c));
    return json{{"rows", m.rows()}, {"cols", m.cols()}, {"data", std::move(data)}};
}

inline Eigen::MatrixXd matrix_from_json(const json& j, const std::string& where) {
    if (!j.is_object() || !j.contains("rows") || !j.contains("cols") || !j.contains("data"))
        throw io_error(where + ": malformed matrix object");
    const Eigen::Index rows = j["rows"].get<Eigen::Index>();
    const Eigen::Index cols = j["cols"].get<Eigen::Index>();
    const auto& data = j["data"];
    if (rows < 0 || cols < 0 || !data.is_array() ||
        static_cast<Eigen::Index>(data.size()) != rows * cols)
        throw io_error(where + ": matrix size mismatch");
    Eigen::MatrixXd m(rows, cols);
    Eigen::Index i = 0;
    for (Eigen::Index r = 0; r < rows; ++r)
        for (Eigen::Index c = 0; c < cols; ++c) {
            if (!data[i].is_number()) throw io_error(where + ": non-numeric matrix entry");
            m(r, c) = data[i++].get<double>();
        }
    return m;
}

inline json vector_to_json(const Eigen::VectorXd& v) {
    json a = json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v[i]);
    return a;
}

inline Eigen::VectorXd vector_from_json(const json& j, const std::string& where) {
    if (!j.is_array()) throw io_error(where + ": expected an array");
    Eigen::VectorXd v(static_cast<Eigen::Index>(j.size()));
    for (std::size_t i = 0; i < j.size(); ++i) {
        if (!j[i].is_number()) throw io_error(where + ": non-numeric entry");
        v[static_cast<Eigen::Index>(i)] = j[i].get<double>();
    }
    return v;
}

inline json kernel_to_json(const KernelParams& k) {
    return json{{"alpha", k.alpha}, {"beta", k.beta}, {"noise_var", k.noise_var}};
}

inline KernelParams kernel_from_json(const json& j, const std::string& where) {
    if (!j.is_object() || !j.contains("alpha") || !j.contains("beta") || !j.contains("noise_var"))
        throw io_error(where + ": malformed kernel object");
    KernelParams k{j["alpha"].get<double>(), j["beta"].get<double>(), j["noise_var"].get<double>()};
    k.validate();
    return k;
}

inline json train_config_to_json(const TrainConfig& c) {
    return json{{"lr_first_layer", c.lr_first_layer},
                {"lr_upper_layers", c.lr_upper_layers},
                {"weight_decay", c.weight_decay},
                {"momentum", c.momentum},
                {"epochs", c.epochs},
                {"minibatch_size", c.minibatch_size},
                {"seed", c.seed},
                {"finetune_lr_start", c.finetune_lr_start},
                {"finetune_lr_end", c.finetune_lr_end}};
}

inline TrainConfig train_config_from_json(const json& j, const std::string& where) {
    if (!j.is_object()) throw io_error(where + ": malformed train_config object");
    TrainConfig c;
    try {
        c.lr_first_layer = j.at("lr_first_layer").get<double>();
        c.lr_upper_layers = j.at("lr_upper_layers").get<double>();
        c.weight_decay = j.at("weight_decay").get<double>();
        c.momentum = j.at("momentum").get<double>();
        c.epochs = j.at("epochs").get<int>();
        c.minibatch_size = j.at("minibatch_size").get<int>();
        c.seed = j.at("seed").get<std::uint64_t>();
        c.finetune_lr_start = j.at("finetune_lr_start").get<double>();
        c.finetune_lr_end = j.at("finetune_lr_end").get<double>();
    } catch (const json::exception& e) {
        throw io_error(where + ": " + e.what());
    }
    c.validate();
    return c;
}

inline json dbn_to_json(const DbnParams& dbn, const Normalizer& norm) {
    json layers = json::array();
    for (const auto& l : dbn.layers) {
        layers.push_back(json{{"weights", matrix_to_json(l.weights)},
                              {"visible_bias", vector_to_json(l.visible_bias)},
                              {"hidden_bias", vector_to_json(l.hidden_bias)}});
    }
    return json{{"architecture", dbn.architecture()},
                {"layers", std::move(layers)},
                {"normalizer", json{{"lo", vector_to_json(norm.lo)}, {"hi", vector_to_json(norm.hi)}}}};
}

inline void dbn_from_json(const json& j, const std::string& where, DbnParams& dbn, Normalizer& norm) {
    if (!j.is_object() || !j.contains("layers") || !j.contains("normalizer"))
        throw io_error(where + ": malformed dbn object");
    dbn.layers.clear();
    for (const auto& lj : j["layers"]) {
        RbmLayer l;
        l.weights = matrix_from_json(lj.at("weights"), where + " layer weights");
        l.visible_bias = vector_from_json(lj.at("visible_bias"), where + " visible_bias");
        l.hidden_bias = vector_from_json(lj.at("hidden_bias"), where + " hidden_bias");
        dbn.layers.push_back(std::move(l));
    }
    dbn.validate();
    norm.lo = vector_from_json(j["normalizer"].at("lo"), where + " normalizer lo");
    norm.hi = vector_from_json(j["normalizer"].at("hi"), where + " normalizer hi");
    norm.validate();
}

} // namespace detail_io

// ------------------------------------------------------------- DBN bundle

struct DbnBundle {
    DbnParams dbn;
    Normalizer normalizer;
    FeatureMode mode = FeatureMode::EEG;
    int k_max = kDefaultKmax;
    TrainConfig train_config;
};

inline void save_dbn_bundle(const std::filesystem::path& path, const DbnBundle& b) {
    using detail_io::json;
    json j = detail_io::dbn_to_json(b.dbn, b.normalizer);
    j["format_version"] = kBundleVersion;
    j["kind"] = "dbn_bundle";
    j["mode"] = to_string(b.mode);
    j["k_max"] = b.k_max;
    j["train_config"] = detail_io::train_config_to_json(b.train_config);
    detail_io::atomic_write(path, j.dump(2) + "\n");
}

inline DbnBundle load_dbn_bundle(const std::filesystem::path& path) {
    const auto j = detail_io::load_json(path);
    detail_io::check_bundle_header(j, "dbn_bundle", path);
    DbnBundle b;
    detail_io::dbn_from_json(j, path.string(), b.dbn, b.normalizer);
    b.mode = feature_mode_from_string(j.at("mode").get<std::string>());
    b.k_max = j.at("k_max").get<int>();
    b.train_config = detail_io::train_config_from_json(j.at("train_config"), path.string() + " train_config");
    require(b.dbn.input_dim() == feature_dim(b.mode), "dbn bundle: architecture does not match mode");
    return b;
}

// ---------------------------------------------------------- PAD GP bundle

struct PadGpBundle {
    PadGpModel model;  // factorizations recomputed on load
    FeatureMode mode = FeatureMode::EEG;
    int k_max = kDefaultKmax;
};

inline void save_pad_gp_bundle(const std::filesystem::path& path, const PadGpBundle& b) {
    using detail_io::json;
    json j;
    j["format_version"] = kBundleVersion;
    j["kind"] = "pad_gp_bundle";
    j["mode"] = to_string(b.mode);
    j["k_max"] = b.k_max;
    j["dbn"] = detail_io::dbn_to_json(b.model.dbn, b.model.normalizer);
    j["features"] = detail_io::matrix_to_json(b.model.raw_features);
    j["labels"] = detail_io::matrix_to_json(b.model.labels);
    json kernels = json::array();
    for (const auto& k : b.model.kernels) kernels.push_back(detail_io::kernel_to_json(k));
    j["kernels"] = std::move(kernels);
    detail_io::atomic_write(path, j.dump(2) + "\n");
}

inline PadGpBundle load_pad_gp_bundle(const std::filesystem::path& path) {
    const auto j = detail_io::load_json(path);
    detail_io::check_bundle_header(j, "pad_gp_bundle", path);
    PadGpBundle b;
    b.mode = feature_mode_from_string(j.at("mode").get<std::string>());
    b.k_max = j.at("k_max").get<int>();

    DbnParams dbn;
    Normalizer norm;
    detail_io::dbn_from_json(j.at("dbn"), path.string(), dbn, norm);
    const Eigen::MatrixXd features = detail_io::matrix_from_json(j.at("features"), path.string() + " features");
    const Eigen::MatrixXd labels = detail_io::matrix_from_json(j.at("labels"), path.string() + " labels");
    const auto& kj = j.at("kernels");
    if (!kj.is_array() || kj.size() != 3) throw io_error("'" + path.string() + "': expected 3 kernels");
    std::array<KernelParams, 3> kernels;
    for (int l = 0; l < 3; ++l) kernels[l] = detail_io::kernel_from_json(kj[l], path.string() + " kernel");

    b.model = fit_pad_gp(dbn, norm, features, labels, kernels);
    require(b.model.dbn.input_dim() == feature_dim(b.mode), "pad gp bundle: architecture does not match mode");
    return b;
}

// --------------------------------------------------------- perf GP bundle

struct PerfGpBundle {
    PerfGpModel model;
    CvReport cv;
};

inline void save_perf_gp_bundle(const std::filesystem::path& path, const PerfGpBundle& b) {
    using detail_io::json;
    json j;
    j["format_version"] = kBundleVersion;
    j["kind"] = "perf_gp_bundle";
    j["pad_train"] = detail_io::matrix_to_json(b.model.pad_train);
    j["q_train"] = detail_io::vector_to_json(b.model.q_train);
    j["kernel"] = detail_io::kernel_to_json(b.model.kernel);
    j["cv"] = json{{"alpha", b.cv.alpha}, {"beta", b.cv.beta}, {"cv_mse", b.cv.cv_mse},
                   {"grid_index", b.cv.grid_index}};
    detail_io::atomic_write(path, j.dump(2) + "\n");
}

inline PerfGpBundle load_perf_gp_bundle(const std::filesystem::path& path) {
    const auto j = detail_io::load_json(path);
    detail_io::check_bundle_header(j, "perf_gp_bundle", path);
    PerfGpBundle b;
    const Eigen::MatrixXd pad_train = detail_io::matrix_from_json(j.at("pad_train"), path.string() + " pad_train");
    const Eigen::VectorXd q_train = detail_io::vector_from_json(j.at("q_train"), path.string() + " q_train");
    const KernelParams kernel = detail_io::kernel_from_json(j.at("kernel"), path.string() + " kernel");
    b.model = make_perf_gp(pad_train, q_train, kernel);
    const auto& cv = j.at("cv");
    b.cv.alpha = cv.at("alpha").get<double>();
    b.cv.beta = cv.at("beta").get<double>();
    b.cv.cv_mse = cv.at("cv_mse").get<double>();
    b.cv.grid_index = cv.at("grid_index").get<int>();
    return b;
}

} // namespace padloop
