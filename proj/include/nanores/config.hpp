#pragma once

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "nanores/classify.hpp"
#include "nanores/dynamics.hpp"
#include "nanores/errors.hpp"
#include "nanores/io.hpp"
#include "nanores/reservoir.hpp"

namespace nanores {

struct ClassifierConfig {
    ClassifierKind kind = ClassifierKind::logistic;
    LogisticHyper logistic;
    LdaHyper lda;
    SvmHyper svm;
};

struct ProbeRef {
    std::string speaker;  ///< empty: first clip in the manifest
    int digit = 0;
    int trial = 0;
};

/// Which slice of the corpus a harness task runs on and how.
struct TaskParams {
    std::size_t subset_size = 32;
    double test_fraction = 0.1;
    int split_repeats = 1;
    std::vector<std::string> speakers;       ///< ten-class datasets; empty: all speakers
    std::string train_speaker;               ///< reduced-class / generalization; empty: first
    std::vector<std::string> test_speakers;  ///< generalization; empty: all but train
    int train_trials = 0;                    ///< 0: all available
    int test_trials = 0;                     ///< 0: all available
    std::vector<int> class_counts = {2, 3, 4, 5};
    int combinations = 33;
    std::vector<std::size_t> subset_sizes = {1, 2, 4, 8, 16, 32, 64, 128, 256, 512, 1024};
    std::string sweep_parameter = "kp";
    std::vector<double> sweep_grid;  ///< empty: default grid for the parameter
    ProbeRef probe;
    int time_repeats = 5;
};

struct ExperimentConfig {
    std::uint64_t master_seed = 1;
    ReservoirConfig reservoir;
    ClassifierConfig classifier;
    TaskParams task;
    std::string traces_dir;  ///< optional pre-simulated trace pack

    bool assembly_seed_from_config = false;

    /// Re-derives seeds that were not pinned explicitly in the config file.
    void apply_master_seed(std::uint64_t seed) {
        master_seed = seed;
        if (!assembly_seed_from_config)
            reservoir.assembly.seed = derive_seed(seed, "assembly");
    }
};

namespace config_detail {

inline void check_keys(const nlohmann::json& j, const std::set<std::string>& known,
                       const std::string& context) {
    if (!j.is_object()) throw ConfigError("config: " + context + " must be a JSON object");
    for (auto it = j.begin(); it != j.end(); ++it) {
        if (!known.count(it.key()))
            throw ConfigError("config: unknown key '" + it.key() + "' in " + context);
    }
}

template <typename T>
T get_or(const nlohmann::json& j, const char* key, T fallback) {
    if (!j.contains(key)) return fallback;
    try {
        return j.at(key).get<T>();
    } catch (const nlohmann::json::exception&) {
        throw ConfigError(std::string("config: bad value for '") + key + "'");
    }
}

inline bool is_power_of_two(std::size_t v) { return v != 0 && (v & (v - 1)) == 0; }

}  // namespace config_detail

inline VoltageMode voltage_mode_from_name(const std::string& name) {
    if (name == "magnitude") return VoltageMode::magnitude;
    if (name == "signed") return VoltageMode::signed_drop;
    throw ConfigError("config: voltage_mode must be 'magnitude' or 'signed', got '" + name + "'");
}

inline std::string voltage_mode_name(VoltageMode m) {
    return m == VoltageMode::magnitude ? "magnitude" : "signed";
}

/// Canonical sweep parameter slug; accepts kp/k_p etc.
inline std::string sweep_parameter_slug(const std::string& name) {
    if (name == "kp" || name == "k_p") return "kp";
    if (name == "kd" || name == "k_d") return "kd";
    if (name == "vp" || name == "v_p") return "vp";
    throw ConfigError("config: sweep parameter must be one of kp, kd, vp; got '" + name + "'");
}

inline std::vector<double> default_sweep_grid(const std::string& slug) {
    if (slug == "kp") return {0.0001, 0.001, 0.01, 0.1, 0.5};
    if (slug == "kd") return {0.3, 0.35, 0.4, 0.45, 0.5};
    return {0.5, 1.0, 2.0, 5.0};
}

inline ExperimentConfig parse_experiment_config(const nlohmann::json& doc) {
    using config_detail::check_keys;
    using config_detail::get_or;
    ExperimentConfig cfg;
    check_keys(doc, {"master_seed", "assembly", "dynamics", "solver", "reservoir", "classifier",
                     "task", "traces_dir"},
               "top level");
    cfg.master_seed = get_or<std::uint64_t>(doc, "master_seed", 1);
    cfg.traces_dir = get_or<std::string>(doc, "traces_dir", "");

    auto& asm_cfg = cfg.reservoir.assembly;
    asm_cfg.seed = derive_seed(cfg.master_seed, "assembly");
    if (doc.contains("assembly")) {
        const auto& a = doc.at("assembly");
        check_keys(a, {"wires", "mean_length", "std_length", "substrate_side", "seed",
                       "max_retries"},
                   "assembly");
        asm_cfg.n_wires = get_or<int>(a, "wires", asm_cfg.n_wires);
        asm_cfg.mean_length = get_or<double>(a, "mean_length", asm_cfg.mean_length);
        asm_cfg.std_length = get_or<double>(a, "std_length", asm_cfg.std_length);
        asm_cfg.substrate_side = get_or<double>(a, "substrate_side", asm_cfg.substrate_side);
        if (a.contains("seed")) {
            asm_cfg.seed = a.at("seed").get<std::uint64_t>();
            cfg.assembly_seed_from_config = true;
        }
        asm_cfg.max_retries = get_or<int>(a, "max_retries", asm_cfg.max_retries);
    }

    auto& dyn = cfg.reservoir.dynamics;
    if (doc.contains("dynamics")) {
        const auto& d = doc.at("dynamics");
        check_keys(d, {"k_p", "k_d", "eta_p", "eta_d", "g_min", "g_max", "dt", "voltage_mode"},
                   "dynamics");
        dyn.k_p = get_or<double>(d, "k_p", dyn.k_p);
        dyn.k_d = get_or<double>(d, "k_d", dyn.k_d);
        dyn.eta_p = get_or<double>(d, "eta_p", dyn.eta_p);
        dyn.eta_d = get_or<double>(d, "eta_d", dyn.eta_d);
        dyn.g_min = get_or<double>(d, "g_min", dyn.g_min);
        dyn.g_max = get_or<double>(d, "g_max", dyn.g_max);
        dyn.dt = get_or<double>(d, "dt", dyn.dt);
        if (d.contains("voltage_mode"))
            dyn.mode = voltage_mode_from_name(d.at("voltage_mode").get<std::string>());
    }

    if (doc.contains("solver")) {
        const auto& s = doc.at("solver");
        check_keys(s, {"rel_tol", "kcl_tol", "max_iter_factor"}, "solver");
        cfg.reservoir.solver.rel_tol = get_or<double>(s, "rel_tol", cfg.reservoir.solver.rel_tol);
        cfg.reservoir.solver.kcl_tol = get_or<double>(s, "kcl_tol", cfg.reservoir.solver.kcl_tol);
        cfg.reservoir.solver.max_iter_factor =
            get_or<int>(s, "max_iter_factor", cfg.reservoir.solver.max_iter_factor);
    }

    if (doc.contains("reservoir")) {
        const auto& r = doc.at("reservoir");
        check_keys(r, {"timesteps", "v_p", "fresh_topology_per_clip"}, "reservoir");
        cfg.reservoir.timesteps = get_or<std::size_t>(r, "timesteps", cfg.reservoir.timesteps);
        cfg.reservoir.v_p = get_or<double>(r, "v_p", cfg.reservoir.v_p);
        cfg.reservoir.fresh_topology_per_clip =
            get_or<bool>(r, "fresh_topology_per_clip", cfg.reservoir.fresh_topology_per_clip);
    }

    if (doc.contains("classifier")) {
        const auto& c = doc.at("classifier");
        check_keys(c, {"kind", "lambda", "max_iters", "tol", "c", "gamma", "svm_epochs",
                       "svm_tol"},
                   "classifier");
        if (c.contains("kind"))
            cfg.classifier.kind = classifier_kind_from_name(c.at("kind").get<std::string>());
        cfg.classifier.logistic.lambda =
            get_or<double>(c, "lambda", cfg.classifier.logistic.lambda);
        cfg.classifier.logistic.max_iters =
            get_or<int>(c, "max_iters", cfg.classifier.logistic.max_iters);
        cfg.classifier.logistic.tol = get_or<double>(c, "tol", cfg.classifier.logistic.tol);
        cfg.classifier.svm.c = get_or<double>(c, "c", cfg.classifier.svm.c);
        cfg.classifier.lda.gamma = get_or<double>(c, "gamma", cfg.classifier.lda.gamma);
        cfg.classifier.svm.max_epochs = get_or<int>(c, "svm_epochs", cfg.classifier.svm.max_epochs);
        cfg.classifier.svm.tol = get_or<double>(c, "svm_tol", cfg.classifier.svm.tol);
    }

    if (doc.contains("task")) {
        const auto& t = doc.at("task");
        check_keys(t,
                   {"subset_size", "test_fraction", "split_repeats", "speakers", "train_speaker",
                    "test_speakers", "train_trials", "test_trials", "class_counts",
                    "combinations", "subset_sizes", "sweep_parameter", "sweep_grid", "probe",
                    "time_repeats"},
                   "task");
        auto& task = cfg.task;
        task.subset_size = get_or<std::size_t>(t, "subset_size", task.subset_size);
        task.test_fraction = get_or<double>(t, "test_fraction", task.test_fraction);
        task.split_repeats = get_or<int>(t, "split_repeats", task.split_repeats);
        task.speakers = get_or<std::vector<std::string>>(t, "speakers", task.speakers);
        task.train_speaker = get_or<std::string>(t, "train_speaker", task.train_speaker);
        task.test_speakers =
            get_or<std::vector<std::string>>(t, "test_speakers", task.test_speakers);
        task.train_trials = get_or<int>(t, "train_trials", task.train_trials);
        task.test_trials = get_or<int>(t, "test_trials", task.test_trials);
        task.class_counts = get_or<std::vector<int>>(t, "class_counts", task.class_counts);
        task.combinations = get_or<int>(t, "combinations", task.combinations);
        task.subset_sizes =
            get_or<std::vector<std::size_t>>(t, "subset_sizes", task.subset_sizes);
        if (t.contains("sweep_parameter"))
            task.sweep_parameter = sweep_parameter_slug(t.at("sweep_parameter").get<std::string>());
        task.sweep_grid = get_or<std::vector<double>>(t, "sweep_grid", task.sweep_grid);
        if (t.contains("probe")) {
            const auto& p = t.at("probe");
            check_keys(p, {"speaker", "digit", "trial"}, "task.probe");
            task.probe.speaker = get_or<std::string>(p, "speaker", "");
            task.probe.digit = get_or<int>(p, "digit", 0);
            task.probe.trial = get_or<int>(p, "trial", 0);
        }
        task.time_repeats = get_or<int>(t, "time_repeats", task.time_repeats);
    }
    return cfg;
}

inline void validate_experiment_config(const ExperimentConfig& cfg) {
    cfg.reservoir.validate();
    if (!(cfg.task.test_fraction > 0.0 && cfg.task.test_fraction < 1.0))
        throw ConfigError("config: task.test_fraction must lie in (0, 1)");
    if (cfg.task.split_repeats < 1) throw ConfigError("config: task.split_repeats must be >= 1");
    if (cfg.task.time_repeats < 1) throw ConfigError("config: task.time_repeats must be >= 1");
    if (cfg.task.combinations < 1) throw ConfigError("config: task.combinations must be >= 1");
    auto check_subset = [&](std::size_t k) {
        if (!config_detail::is_power_of_two(k) || k > 1024)
            throw ConfigError("config: subset sizes must be powers of two in [1, 1024], got " +
                              std::to_string(k));
    };
    check_subset(cfg.task.subset_size);
    for (std::size_t k : cfg.task.subset_sizes) check_subset(k);
    if (cfg.task.subset_size > cfg.reservoir.timesteps)
        throw ConfigError("config: task.subset_size exceeds reservoir.timesteps");
    for (int c : cfg.task.class_counts)
        if (c < 2 || c > 10)
            throw ConfigError("config: task.class_counts entries must lie in [2, 10]");
    for (double v : cfg.task.sweep_grid)
        if (!(v > 0.0)) throw ConfigError("config: sweep grid values must be positive");

    // Explicit Euler with the default rates is stable (dt * (K_p + K_d) < 1
    // over the drive range); warn instead of failing when a configuration
    // leaves that region, since the state clamp still bounds the update and
    // rate sweeps deliberately visit it.
    const double margin = stability_margin(cfg.reservoir.dynamics, cfg.reservoir.v_p);
    if (margin >= 1.0)
        std::fprintf(stderr,
                     "warning: Euler stability margin %.3g >= 1 at v_p = %g; "
                     "updates will overshoot and rely on the [0, 1] state clamp\n",
                     margin, cfg.reservoir.v_p);
}

inline ExperimentConfig load_experiment_config(const std::filesystem::path& path) {
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(read_file(path));
    } catch (const nlohmann::json::parse_error& e) {
        throw ConfigError("config " + path.string() + ": " + e.what());
    }
    auto cfg = parse_experiment_config(doc);
    return cfg;
}

/// Canonical resolved-config echo, embedded in run summaries.
inline nlohmann::ordered_json experiment_config_to_json(const ExperimentConfig& cfg) {
    nlohmann::ordered_json doc;
    doc["master_seed"] = cfg.master_seed;
    const auto& a = cfg.reservoir.assembly;
    doc["assembly"] = {{"wires", a.n_wires},
                       {"mean_length", a.mean_length},
                       {"std_length", a.std_length},
                       {"substrate_side", a.side()},
                       {"seed", a.seed},
                       {"max_retries", a.max_retries}};
    const auto& d = cfg.reservoir.dynamics;
    doc["dynamics"] = {{"k_p", d.k_p},       {"k_d", d.k_d},
                       {"eta_p", d.eta_p},   {"eta_d", d.eta_d},
                       {"g_min", d.g_min},   {"g_max", d.g_max},
                       {"dt", d.dt},         {"voltage_mode", voltage_mode_name(d.mode)}};
    const auto& s = cfg.reservoir.solver;
    doc["solver"] = {{"rel_tol", s.rel_tol},
                     {"kcl_tol", s.kcl_tol},
                     {"max_iter_factor", s.max_iter_factor}};
    doc["reservoir"] = {{"timesteps", cfg.reservoir.timesteps},
                        {"v_p", cfg.reservoir.v_p},
                        {"fresh_topology_per_clip", cfg.reservoir.fresh_topology_per_clip}};
    doc["classifier"] = {{"kind", classifier_kind_name(cfg.classifier.kind)},
                         {"lambda", cfg.classifier.logistic.lambda},
                         {"max_iters", cfg.classifier.logistic.max_iters},
                         {"tol", cfg.classifier.logistic.tol},
                         {"c", cfg.classifier.svm.c},
                         {"gamma", cfg.classifier.lda.gamma},
                         {"svm_epochs", cfg.classifier.svm.max_epochs},
                         {"svm_tol", cfg.classifier.svm.tol}};
    doc["task"] = {{"subset_size", cfg.task.subset_size},
                   {"test_fraction", cfg.task.test_fraction},
                   {"split_repeats", cfg.task.split_repeats},
                   {"speakers", cfg.task.speakers},
                   {"train_speaker", cfg.task.train_speaker},
                   {"test_speakers", cfg.task.test_speakers},
                   {"train_trials", cfg.task.train_trials},
                   {"test_trials", cfg.task.test_trials},
                   {"class_counts", cfg.task.class_counts},
                   {"combinations", cfg.task.combinations},
                   {"subset_sizes", cfg.task.subset_sizes},
                   {"sweep_parameter", cfg.task.sweep_parameter},
                   {"sweep_grid", cfg.task.sweep_grid},
                   {"probe", {{"speaker", cfg.task.probe.speaker},
                              {"digit", cfg.task.probe.digit},
                              {"trial", cfg.task.probe.trial}}},
                   {"time_repeats", cfg.task.time_repeats}};
    return doc;
}

}  // namespace nanores
