#pragma once

#include <filesystem>
#include <initializer_list>
#include <string>

#include <json.hpp>

#include "padloop/bundles.hpp"
#include "padloop/controller.hpp"
#include "padloop/sim.hpp"

namespace padloop {

namespace detail_io {

inline void reject_unknown_keys(const json& j, std::initializer_list<const char*> allowed,
                                const std::string& where) {
    if (!j.is_object()) throw io_error(where + ": expected an object");
    for (const auto& [key, value] : j.items()) {
        bool known = false;
        for (const char* a : allowed)
            if (key == a) {
                known = true;
                break;
            }
        if (!known) throw io_error(where + ": unknown key '" + key + "'");
    }
}

inline Eigen::Vector3d vec3_from_json(const json& j, const std::string& where) {
    if (!j.is_array() || j.size() != 3) throw io_error(where + ": expected a 3-element array");
    Eigen::Vector3d v;
    for (int i = 0; i < 3; ++i) {
        if (!j[i].is_number()) throw io_error(where + ": non-numeric entry");
        v[i] = j[i].get<double>();
    }
    return v;
}

inline json vec3_to_json(const Eigen::Vector3d& v) { return json{v[0], v[1], v[2]}; }

} // namespace detail_io

// ----------------------------------------------------- controller config

inline detail_io::json controller_config_to_json(const ControllerConfig& cfg) {
    using detail_io::json;
    json j;
    j["format_version"] = kBundleVersion;
    j["kind"] = "controller_config";
    j["q_r"] = cfg.q_r;
    j["beta_r"] = cfg.beta_r;
    j["f_r"] = detail_io::vec3_to_json(cfg.f_r);
    auto part = [](const FuzzyPartition& p) {
        json t = json::array();
        for (const auto& m : p.mf) t.push_back(json{m.left, m.peak, m.right});
        return json{{"lo", p.lo}, {"hi", p.hi}, {"triangles", std::move(t)}};
    };
    j["error_partition"] = part(cfg.error_partition);
    j["delta_partition"] = part(cfg.delta_partition);
    json table = json::array();
    for (int i = 0; i < kNumInputLabels; ++i) {
        json row = json::array();
        for (int jj = 0; jj < kNumInputLabels; ++jj)
            row.push_back(action_label_names()[cfg.table.cells[i][jj]]);
        table.push_back(std::move(row));
    }
    j["rule_table"] = std::move(table);
    json centers = json::array();
    for (const auto& c : cfg.centers) centers.push_back(detail_io::vec3_to_json(c));
    j["centers"] = std::move(centers);
    json lib = json::array();
    for (const auto& s : cfg.library.entries)
        lib.push_back(json{{"id", s.id}, {"pad", detail_io::vec3_to_json(s.pad)}});
    j["stimulus_library"] = std::move(lib);
    return j;
}

inline ControllerConfig controller_config_from_json(const detail_io::json& j, const std::string& where) {
    using detail_io::json;
    detail_io::reject_unknown_keys(j, {"format_version", "kind", "q_r", "beta_r", "f_r",
                                       "error_partition", "delta_partition", "rule_table", "centers",
                                       "stimulus_library"},
                                   where);
    ControllerConfig cfg = ControllerConfig::defaults();
    try {
        if (j.contains("q_r")) cfg.q_r = j["q_r"].get<double>();
        if (j.contains("beta_r")) cfg.beta_r = j["beta_r"].get<double>();
        if (j.contains("f_r")) cfg.f_r = detail_io::vec3_from_json(j["f_r"], where + " f_r");
        auto part = [&](const json& pj, const std::string& name) {
            detail_io::reject_unknown_keys(pj, {"lo", "hi", "triangles"}, where + " " + name);
            FuzzyPartition p;
            p.lo = pj.at("lo").get<double>();
            p.hi = pj.at("hi").get<double>();
            const auto& t = pj.at("triangles");
            if (!t.is_array() || t.size() != kNumInputLabels)
                throw io_error(where + " " + name + ": expected 5 triangles");
            for (int i = 0; i < kNumInputLabels; ++i) {
                if (!t[i].is_array() || t[i].size() != 3)
                    throw io_error(where + " " + name + ": triangle must be [left, peak, right]");
                p.mf[i] = Triangle{t[i][0].get<double>(), t[i][1].get<double>(), t[i][2].get<double>()};
            }
            return p;
        };
        if (j.contains("error_partition")) cfg.error_partition = part(j["error_partition"], "error_partition");
        if (j.contains("delta_partition")) cfg.delta_partition = part(j["delta_partition"], "delta_partition");
        if (j.contains("rule_table")) {
            const auto& t = j["rule_table"];
            if (!t.is_array() || t.size() != kNumInputLabels)
                throw io_error(where + " rule_table: expected 5 rows");
            for (int i = 0; i < kNumInputLabels; ++i) {
                if (!t[i].is_array() || t[i].size() != kNumInputLabels)
                    throw io_error(where + " rule_table: expected 5 labels per row");
                for (int jj = 0; jj < kNumInputLabels; ++jj)
                    cfg.table.cells[i][jj] = action_label_index(t[i][jj].get<std::string>());
            }
        }
        if (j.contains("centers")) {
            const auto& c = j["centers"];
            if (!c.is_array() || c.size() != kNumActionLabels)
                throw io_error(where + " centers: expected 6 vectors");
            for (int l = 0; l < kNumActionLabels; ++l)
                cfg.centers[l] = detail_io::vec3_from_json(c[l], where + " centers");
        }
        if (j.contains("stimulus_library")) {
            cfg.library.entries.clear();
            for (const auto& sj : j["stimulus_library"]) {
                detail_io::reject_unknown_keys(sj, {"id", "pad"}, where + " stimulus");
                Stimulus s;
                s.id = sj.at("id").get<int>();
                s.pad = detail_io::vec3_from_json(sj.at("pad"), where + " stimulus pad");
                cfg.library.entries.push_back(s);
            }
        }
    } catch (const detail_io::json::exception& e) {
        throw io_error(where + ": " + e.what());
    }
    cfg.validate();
    return cfg;
}

inline void save_controller_config(const std::filesystem::path& path, const ControllerConfig& cfg) {
    cfg.validate();
    detail_io::atomic_write(path, controller_config_to_json(cfg).dump(2) + "\n");
}

inline ControllerConfig load_controller_config(const std::filesystem::path& path) {
    const auto j = detail_io::load_json(path);
    detail_io::check_bundle_header(j, "controller_config", path);
    return controller_config_from_json(j, path.string());
}

// ------------------------------------------------------------ sim config

inline detail_io::json sim_config_to_json(const SimConfig& cfg) {
    using detail_io::json;
    json j;
    j["format_version"] = kBundleVersion;
    j["kind"] = "sim_config";
    j["operator"] = json{{"relax_rate", cfg.op.relax_rate},
                         {"action_gain", detail_io::vec3_to_json(cfg.op.action_gain)},
                         {"baseline_fresh", cfg.op.baseline_fresh},
                         {"baseline_exhausted", cfg.op.baseline_exhausted},
                         {"fatigue_per_step", cfg.op.fatigue_per_step},
                         {"pad_noise_std", cfg.op.pad_noise_std}};
    j["trial"] = json{{"base_rate", cfg.trial.base_rate},
                      {"base_deviation", cfg.trial.base_deviation},
                      {"fatigue_weight", cfg.trial.fatigue_weight},
                      {"pad_weight", cfg.trial.pad_weight},
                      {"skill_weight", cfg.trial.skill_weight},
                      {"noise_std", cfg.trial.noise_std},
                      {"q_cap", cfg.trial.q_cap}};
    json bands = json::array();
    for (const auto& b : cfg.synth.bands) {
        json map = json::array();
        for (const auto& m : b.map) {
            json mask = json::array();
            for (int c = 0; c < kNumChannels; ++c)
                if (m.mask[c]) mask.push_back(c);
            map.push_back(json{{"weights", detail_io::vec3_to_json(m.weights)},
                               {"channels", std::move(mask)}});
        }
        bands.push_back(json{{"f_lo", b.f_lo},
                             {"f_hi", b.f_hi},
                             {"base_fd", b.base_fd},
                             {"map", std::move(map)},
                             {"gain", b.gain}});
    }
    j["synth"] = json{{"bands", std::move(bands)},
                      {"low_filler_gain", cfg.synth.low_filler_gain},
                      {"fd_jitter_std", cfg.synth.fd_jitter_std},
                      {"rms_scale", cfg.synth.rms_scale}};
    j["init_state"] = json{{"pad", detail_io::vec3_to_json(cfg.init_state.pad)},
                           {"fatigue", cfg.init_state.fatigue},
                           {"skill", cfg.init_state.skill}};
    return j;
}

inline SimConfig sim_config_from_json(const detail_io::json& j, const std::string& where) {
    using detail_io::json;
    detail_io::reject_unknown_keys(j, {"format_version", "kind", "operator", "trial", "synth", "init_state"},
                                   where);
    SimConfig cfg = SimConfig::defaults();
    try {
        if (j.contains("operator")) {
            const auto& oj = j["operator"];
            detail_io::reject_unknown_keys(oj, {"relax_rate", "action_gain", "baseline_fresh",
                                                "baseline_exhausted", "fatigue_per_step", "pad_noise_std"},
                                           where + " operator");
            if (oj.contains("relax_rate")) cfg.op.relax_rate = oj["relax_rate"].get<double>();
            if (oj.contains("action_gain"))
                cfg.op.action_gain = detail_io::vec3_from_json(oj["action_gain"], where + " action_gain");
            if (oj.contains("baseline_fresh")) cfg.op.baseline_fresh = oj["baseline_fresh"].get<double>();
            if (oj.contains("baseline_exhausted"))
                cfg.op.baseline_exhausted = oj["baseline_exhausted"].get<double>();
            if (oj.contains("fatigue_per_step")) cfg.op.fatigue_per_step = oj["fatigue_per_step"].get<double>();
            if (oj.contains("pad_noise_std")) cfg.op.pad_noise_std = oj["pad_noise_std"].get<double>();
        }
        if (j.contains("trial")) {
            const auto& tj = j["trial"];
            detail_io::reject_unknown_keys(tj, {"base_rate", "base_deviation", "fatigue_weight",
                                                "pad_weight", "skill_weight", "noise_std", "q_cap"},
                                           where + " trial");
            if (tj.contains("base_rate")) cfg.trial.base_rate = tj["base_rate"].get<double>();
            if (tj.contains("base_deviation")) cfg.trial.base_deviation = tj["base_deviation"].get<double>();
            if (tj.contains("fatigue_weight")) cfg.trial.fatigue_weight = tj["fatigue_weight"].get<double>();
            if (tj.contains("pad_weight")) cfg.trial.pad_weight = tj["pad_weight"].get<double>();
            if (tj.contains("skill_weight")) cfg.trial.skill_weight = tj["skill_weight"].get<double>();
            if (tj.contains("noise_std")) cfg.trial.noise_std = tj["noise_std"].get<double>();
            if (tj.contains("q_cap")) cfg.trial.q_cap = tj["q_cap"].get<double>();
        }
        if (j.contains("synth")) {
            const auto& sj = j["synth"];
            detail_io::reject_unknown_keys(sj, {"bands", "low_filler_gain", "fd_jitter_std", "rms_scale"},
                                           where + " synth");
            if (sj.contains("bands")) {
                const auto& bj = sj["bands"];
                if (!bj.is_array() || bj.size() != 4) throw io_error(where + " synth: expected 4 bands");
                for (int b = 0; b < 4; ++b) {
                    detail_io::reject_unknown_keys(bj[b], {"f_lo", "f_hi", "base_fd", "map", "gain"},
                                                   where + " band");
                    SynthBand& band = cfg.synth.bands[b];
                    band.f_lo = bj[b].at("f_lo").get<double>();
                    band.f_hi = bj[b].at("f_hi").get<double>();
                    band.base_fd = bj[b].at("base_fd").get<double>();
                    band.gain = bj[b].at("gain").get<double>();
                    band.map.clear();
                    for (const auto& mj : bj[b].at("map")) {
                        detail_io::reject_unknown_keys(mj, {"weights", "channels"}, where + " band map");
                        BandMapping m;
                        m.weights = detail_io::vec3_from_json(mj.at("weights"), where + " map weights");
                        for (const auto& cj : mj.at("channels")) {
                            const int c = cj.get<int>();
                            if (c < 0 || c >= kNumChannels)
                                throw io_error(where + " band: channel out of range");
                            m.mask[c] = true;
                        }
                        band.map.push_back(m);
                    }
                }
            }
            if (sj.contains("low_filler_gain")) cfg.synth.low_filler_gain = sj["low_filler_gain"].get<double>();
            if (sj.contains("fd_jitter_std")) cfg.synth.fd_jitter_std = sj["fd_jitter_std"].get<double>();
            if (sj.contains("rms_scale")) cfg.synth.rms_scale = sj["rms_scale"].get<double>();
        }
        if (j.contains("init_state")) {
            const auto& ij = j["init_state"];
            detail_io::reject_unknown_keys(ij, {"pad", "fatigue", "skill"}, where + " init_state");
            if (ij.contains("pad")) cfg.init_state.pad = detail_io::vec3_from_json(ij["pad"], where + " pad");
            if (ij.contains("fatigue")) cfg.init_state.fatigue = ij["fatigue"].get<double>();
            if (ij.contains("skill")) cfg.init_state.skill = ij["skill"].get<double>();
        }
    } catch (const detail_io::json::exception& e) {
        throw io_error(where + ": " + e.what());
    }
    cfg.validate();
    return cfg;
}

inline void save_sim_config(const std::filesystem::path& path, const SimConfig& cfg) {
    cfg.validate();
    detail_io::atomic_write(path, sim_config_to_json(cfg).dump(2) + "\n");
}

inline SimConfig load_sim_config(const std::filesystem::path& path) {
    const auto j = detail_io::load_json(path);
    detail_io::check_bundle_header(j, "sim_config", path);
    return sim_config_from_json(j, path.string());
}

// ------------------------------------------------------------ run config

// Everything the simulate command needs; command-line flags override the
// file's horizon/control/seed values.
struct RunConfig {
    std::string pad_gp_bundle;
    std::string perf_gp_bundle;
    ControllerConfig controller = ControllerConfig::defaults();
    SimConfig sim = SimConfig::defaults();
    int horizon = 200;
    bool control_enabled = true;
    std::uint64_t seed = 0;

    void validate() const {
        require(!pad_gp_bundle.empty(), "RunConfig: pad_gp_bundle path required");
        require(!perf_gp_bundle.empty(), "RunConfig: perf_gp_bundle path required");
        require(horizon >= 1, "RunConfig: horizon must be at least 1");
        controller.validate();
        sim.validate();
    }
};

inline RunConfig load_run_config(const std::filesystem::path& path) {
    const auto j = detail_io::load_json(path);
    detail_io::check_bundle_header(j, "run_config", path);
    detail_io::reject_unknown_keys(j, {"format_version", "kind", "pad_gp_bundle", "perf_gp_bundle",
                                       "controller", "sim", "horizon", "control", "seed"},
                                   path.string());
    RunConfig cfg;
    try {
        cfg.pad_gp_bundle = j.at("pad_gp_bundle").get<std::string>();
        cfg.perf_gp_bundle = j.at("perf_gp_bundle").get<std::string>();
        if (j.contains("controller"))
            cfg.controller = controller_config_from_json(j["controller"], path.string() + " controller");
        if (j.contains("sim")) cfg.sim = sim_config_from_json(j["sim"], path.string() + " sim");
        if (j.contains("horizon")) cfg.horizon = j["horizon"].get<int>();
        if (j.contains("control")) cfg.control_enabled = j["control"].get<bool>();
        if (j.contains("seed")) cfg.seed = j["seed"].get<std::uint64_t>();
    } catch (const detail_io::json::exception& e) {
        throw io_error(path.string() + ": " + e.what());
    }
    cfg.validate();
    return cfg;
}

inline void save_run_config(const std::filesystem::path& path, const RunConfig& cfg) {
    using detail_io::json;
    cfg.validate();
    json j;
    j["format_version"] = kBundleVersion;
    j["kind"] = "run_config";
    j["pad_gp_bundle"] = cfg.pad_gp_bundle;
    j["perf_gp_bundle"] = cfg.perf_gp_bundle;
    j["controller"] = controller_config_to_json(cfg.controller);
    j["sim"] = sim_config_to_json(cfg.sim);
    j["horizon"] = cfg.horizon;
    j["control"] = cfg.control_enabled;
    j["seed"] = cfg.seed;
    detail_io::atomic_write(path, j.dump(2) + "\n");
}

} // namespace padloop
