#pragma once

#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "nanores/assembly.hpp"
#include "nanores/audio.hpp"
#include "nanores/dynamics.hpp"
#include "nanores/errors.hpp"
#include "nanores/io.hpp"
#include "nanores/manifest.hpp"
#include "nanores/rng.hpp"
#include "nanores/solver.hpp"
#include "nanores/threads.hpp"

namespace nanores {

struct ClipRef {
    std::string speaker;
    int digit = -1;
    int trial = -1;

    std::string str() const {
        return std::to_string(digit) + "_" + speaker + "_" + std::to_string(trial);
    }
};

struct ReservoirConfig {
    AssemblyConfig assembly;
    DynamicsParams dynamics;
    SolverOptions solver;
    std::size_t timesteps = 1024;
    double v_p = 1.0;
    /// false: one topology shared by every clip, junction states reset per
    /// clip. true: each clip gets its own topology from a clip-derived seed.
    bool fresh_topology_per_clip = false;

    void validate() const {
        assembly.validate();
        dynamics.validate();
        if (timesteps == 0) throw ConfigError("reservoir: timesteps must be >= 1");
        if (!(v_p > 0.0)) throw ConfigError("reservoir: v_p must be positive");
    }
};

/// Readout sequence of one clip: g_eff at every timestep, sampled before the
/// state update of that step.
struct ConductanceTrace {
    std::vector<double> values;
    ClipRef clip;
    std::uint64_t topology_seed = 0;
};

inline std::uint64_t clip_topology_seed(const AssemblyConfig& assembly, const ClipRef& ref) {
    std::uint64_t s = derive_seed(assembly.seed, "clip-topology");
    s = derive_seed(s, ref.speaker);
    s = mix64(s, static_cast<std::uint64_t>(ref.digit));
    s = mix64(s, static_cast<std::uint64_t>(ref.trial));
    return s;
}

/// Runs one drive sequence through the network. Per timestep: solve the
/// voltage field at the current conductances, record g_eff, then advance the
/// junction states by one Euler step using the junction drops.
/// `shared` supplies the topology when the config shares one across clips;
/// junction states always start at zero.
inline ConductanceTrace run_clip(const VoltageTrace& drive, const ClipRef& ref,
                                 const ReservoirConfig& cfg,
                                 const NetworkTopology* shared = nullptr) {
    cfg.validate();
    if (drive.values.empty()) throw InvalidArgument("run_clip: empty drive");

    ConductanceTrace trace;
    trace.clip = ref;
    try {
        std::optional<NetworkTopology> own;
        const NetworkTopology* topo = shared;
        if (cfg.fresh_topology_per_clip || topo == nullptr) {
            AssemblyConfig a = cfg.assembly;
            if (cfg.fresh_topology_per_clip) a.seed = clip_topology_seed(cfg.assembly, ref);
            own = assemble(a);
            topo = &*own;
        }
        trace.topology_seed = topo->seed;

        std::vector<double> states(topo->junctions.size(), 0.0);
        ConductanceMatrix matrix = build_matrix(*topo, states, cfg.dynamics);
        KirchhoffSolver solver(matrix, topo->source_wire, topo->ground_wire, cfg.solver);

        trace.values.resize(drive.values.size());
        std::vector<double> drops;
        for (std::size_t t = 0; t < drive.values.size(); ++t) {
            trace.values[t] = solver.solve_drops(drive.values[t], drops);
            for (std::size_t j = 0; j < states.size(); ++j)
                states[j] = step_state(states[j], drops[j], cfg.dynamics);
            update_matrix(matrix, states, cfg.dynamics);
        }
    } catch (const Error& e) {
        throw TaskError("clip " + ref.str() + ": " + e.what());
    }
    return trace;
}

struct DatasetRunResult {
    std::vector<ConductanceTrace> traces;  ///< manifest order; failed clips have empty values
    std::vector<std::string> errors;
};

/// Simulates every clip in the manifest (in manifest order, parallel across
/// clips). Per-clip failures are collected rather than aborting the batch.
inline DatasetRunResult run_dataset(const DatasetManifest& manifest, const ReservoirConfig& cfg) {
    cfg.validate();
    std::optional<NetworkTopology> shared;
    if (!cfg.fresh_topology_per_clip) shared = assemble(cfg.assembly);

    DatasetRunResult out;
    out.traces.resize(manifest.entries.size());
    std::vector<std::string> errors(manifest.entries.size());
    parallel_for(manifest.entries.size(), [&](std::size_t i) {
        const auto& e = manifest.entries[i];
        ClipRef ref{e.speaker, e.digit, e.trial};
        try {
            AudioClip clip = read_wav(e.path);
            VoltageTrace drive = standardize_trace(clip, cfg.timesteps, cfg.v_p);
            out.traces[i] = run_clip(drive, ref, cfg, shared ? &*shared : nullptr);
        } catch (const Error& ex) {
            out.traces[i].clip = ref;
            errors[i] = ex.what();
        }
    });
    for (auto& msg : errors)
        if (!msg.empty()) out.errors.push_back(std::move(msg));
    return out;
}

// --- trace pack: traces.bin (little-endian float64) + traces_index.json ---

inline void save_trace_pack(const std::vector<ConductanceTrace>& traces,
                            const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    nlohmann::ordered_json index;
    std::string blob;
    std::size_t offset = 0;
    index["entries"] = nlohmann::ordered_json::array();
    for (const auto& t : traces) {
        index["entries"].push_back({{"speaker", t.clip.speaker},
                                    {"digit", t.clip.digit},
                                    {"trial", t.clip.trial},
                                    {"topology_seed", t.topology_seed},
                                    {"offset", offset},
                                    {"length", t.values.size()}});
        const char* raw = reinterpret_cast<const char*>(t.values.data());
        blob.append(raw, t.values.size() * sizeof(double));
        offset += t.values.size();
    }
    write_file(dir / "traces.bin", blob);
    write_file(dir / "traces_index.json", index.dump(2) + "\n");
}

inline std::vector<ConductanceTrace> load_trace_pack(const std::filesystem::path& dir) {
    nlohmann::json index;
    try {
        index = nlohmann::json::parse(read_file(dir / "traces_index.json"));
    } catch (const nlohmann::json::parse_error& e) {
        throw ParseError("trace pack index: " + std::string(e.what()));
    }
    const std::string blob = read_file(dir / "traces.bin");
    std::vector<ConductanceTrace> traces;
    try {
        for (const auto& item : index.at("entries")) {
            ConductanceTrace t;
            t.clip.speaker = item.at("speaker").get<std::string>();
            t.clip.digit = item.at("digit").get<int>();
            t.clip.trial = item.at("trial").get<int>();
            t.topology_seed = item.at("topology_seed").get<std::uint64_t>();
            const std::size_t offset = item.at("offset").get<std::size_t>();
            const std::size_t length = item.at("length").get<std::size_t>();
            if ((offset + length) * sizeof(double) > blob.size())
                throw ParseError("trace pack: index overruns traces.bin");
            t.values.resize(length);
            std::memcpy(t.values.data(), blob.data() + offset * sizeof(double),
                        length * sizeof(double));
            traces.push_back(std::move(t));
        }
    } catch (const nlohmann::json::exception& e) {
        throw ParseError("trace pack index: " + std::string(e.what()));
    }
    return traces;
}

}  // namespace nanores
