#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <queue>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "nanores/errors.hpp"
#include "nanores/geometry.hpp"
#include "nanores/io.hpp"
#include "nanores/rng.hpp"

namespace nanores {

struct Nanowire {
    int id = 0;
    Vec2 p1, p2;

    Vec2 midpoint() const { return {(p1.x + p2.x) * 0.5, (p1.y + p2.y) * 0.5}; }
    double length() const { return distance(p1, p2); }
};

/// Crossing between two wires. wire_a < wire_b always.
struct Junction {
    int id = 0;
    int wire_a = 0;
    int wire_b = 0;
    Vec2 position;
};

struct NetworkTopology {
    std::vector<Nanowire> wires;
    std::vector<Junction> junctions;
    int source_wire = -1;
    int ground_wire = -1;
    double substrate_side = 0.0;
    std::uint64_t seed = 0;

    /// adjacency[w] lists (junction id, other wire id) pairs for wire w.
    std::vector<std::vector<std::pair<int, int>>> adjacency;
};

struct AssemblyConfig {
    int n_wires = 1500;
    double mean_length = 40.0;
    double std_length = 14.0;
    /// 0 means the default of 7 * mean_length.
    double substrate_side = 0.0;
    std::uint64_t seed = 1;
    int max_retries = 16;

    double side() const { return substrate_side > 0.0 ? substrate_side : 7.0 * mean_length; }

    void validate() const {
        if (n_wires < 2) throw ConfigError("assembly: need at least 2 wires");
        if (!(mean_length > 0.0)) throw ConfigError("assembly: mean_length must be positive");
        if (std_length < 0.0) throw ConfigError("assembly: std_length must be non-negative");
        if (substrate_side < 0.0) throw ConfigError("assembly: substrate_side must be non-negative");
        if (max_retries < 0) throw ConfigError("assembly: max_retries must be non-negative");
    }
};

/// Drops wires onto the substrate: centers uniform on the square, angles
/// uniform in [0, pi), lengths normal(mean, std) redrawn while below
/// mean/10. Segments poking outside the square are clipped to it.
inline std::vector<Nanowire> place_wires(const AssemblyConfig& cfg, std::uint64_t seed) {
    const double side = cfg.side();
    Rng rng(seed);
    std::vector<Nanowire> wires;
    wires.reserve(static_cast<std::size_t>(cfg.n_wires));
    for (int i = 0; i < cfg.n_wires; ++i) {
        const double cx = rng.uniform(0.0, side);
        const double cy = rng.uniform(0.0, side);
        const double theta = rng.uniform(0.0, std::numbers::pi);
        double len = rng.normal(cfg.mean_length, cfg.std_length);
        while (len < cfg.mean_length / 10.0) len = rng.normal(cfg.mean_length, cfg.std_length);
        const double hx = 0.5 * len * std::cos(theta);
        const double hy = 0.5 * len * std::sin(theta);
        Vec2 p1{cx - hx, cy - hy};
        Vec2 p2{cx + hx, cy + hy};
        auto clipped = clip_to_square(p1, p2, side);
        // the center is inside the square, so a clip always survives
        if (clipped) {
            p1 = clipped->first;
            p2 = clipped->second;
        }
        wires.push_back({i, p1, p2});
    }
    return wires;
}

/// All pairwise wire crossings, found with a uniform grid so only wires whose
/// bounding boxes share a cell are tested. Each unordered pair is tested in
/// the first cell both boxes cover, which keeps the result identical to the
/// quadratic scan. Output is sorted by (wire_a, wire_b) with ids assigned.
inline std::vector<Junction> find_junctions(const std::vector<Nanowire>& wires, double side) {
    const int n = static_cast<int>(wires.size());
    std::vector<Junction> out;
    if (n < 2) return out;

    double max_len = 0.0;
    for (const auto& w : wires) max_len = std::max(max_len, w.length());
    const double cell = std::max({max_len, side / 512.0, 1e-12});
    const int dim = std::max(1, static_cast<int>(side / cell));

    struct Box {
        int x0, x1, y0, y1;
    };
    auto cell_of = [&](double v) {
        int c = static_cast<int>(v / cell);
        return std::clamp(c, 0, dim - 1);
    };
    std::vector<Box> boxes(wires.size());
    for (std::size_t i = 0; i < wires.size(); ++i) {
        const auto& w = wires[i];
        boxes[i] = {cell_of(std::min(w.p1.x, w.p2.x)), cell_of(std::max(w.p1.x, w.p2.x)),
                    cell_of(std::min(w.p1.y, w.p2.y)), cell_of(std::max(w.p1.y, w.p2.y))};
    }

    std::vector<std::vector<int>> grid(static_cast<std::size_t>(dim) * dim);
    for (int i = 0; i < n; ++i) {
        const auto& b = boxes[i];
        for (int gx = b.x0; gx <= b.x1; ++gx)
            for (int gy = b.y0; gy <= b.y1; ++gy)
                grid[static_cast<std::size_t>(gx) * dim + gy].push_back(i);
    }

    for (int gx = 0; gx < dim; ++gx) {
        for (int gy = 0; gy < dim; ++gy) {
            const auto& bucket = grid[static_cast<std::size_t>(gx) * dim + gy];
            for (std::size_t a = 0; a + 1 < bucket.size(); ++a) {
                for (std::size_t b = a + 1; b < bucket.size(); ++b) {
                    int i = bucket[a], j = bucket[b];
                    if (i > j) std::swap(i, j);
                    const Box& bi = boxes[i];
                    const Box& bj = boxes[j];
                    // dedupe: handle the pair only in the first shared cell
                    if (gx != std::max(bi.x0, bj.x0) || gy != std::max(bi.y0, bj.y0)) continue;
                    auto hit = segment_intersection(wires[i].p1, wires[i].p2, wires[j].p1,
                                                    wires[j].p2);
                    if (hit) out.push_back({0, i, j, *hit});
                }
            }
        }
    }

    std::sort(out.begin(), out.end(), [](const Junction& a, const Junction& b) {
        return std::tie(a.wire_a, a.wire_b) < std::tie(b.wire_a, b.wire_b);
    });
    for (std::size_t k = 0; k < out.size(); ++k) out[k].id = static_cast<int>(k);
    return out;
}

/// Connected-component labels over the wire graph induced by junctions.
inline std::vector<int> wire_components(int n_wires, const std::vector<Junction>& junctions) {
    std::vector<std::vector<int>> adj(static_cast<std::size_t>(n_wires));
    for (const auto& j : junctions) {
        adj[static_cast<std::size_t>(j.wire_a)].push_back(j.wire_b);
        adj[static_cast<std::size_t>(j.wire_b)].push_back(j.wire_a);
    }
    std::vector<int> comp(static_cast<std::size_t>(n_wires), -1);
    int label = 0;
    for (int s = 0; s < n_wires; ++s) {
        if (comp[static_cast<std::size_t>(s)] != -1) continue;
        std::queue<int> q;
        q.push(s);
        comp[static_cast<std::size_t>(s)] = label;
        while (!q.empty()) {
            int u = q.front();
            q.pop();
            for (int v : adj[static_cast<std::size_t>(u)]) {
                if (comp[static_cast<std::size_t>(v)] == -1) {
                    comp[static_cast<std::size_t>(v)] = label;
                    q.push(v);
                }
            }
        }
        ++label;
    }
    return comp;
}

/// True when source and ground wires share a component.
inline bool percolates(int n_wires, const std::vector<Junction>& junctions, int source,
                       int ground) {
    auto comp = wire_components(n_wires, junctions);
    return comp[static_cast<std::size_t>(source)] == comp[static_cast<std::size_t>(ground)];
}

namespace assembly_detail {

inline int nearest_wire(const std::vector<Nanowire>& wires, Vec2 corner, int exclude = -1) {
    int best = -1;
    double best_d = 0.0;
    for (const auto& w : wires) {
        if (w.id == exclude) continue;
        double d = distance(w.midpoint(), corner);
        if (best == -1 || d < best_d) {
            best = w.id;
            best_d = d;
        }
    }
    return best;
}

}  // namespace assembly_detail

/// Builds the full topology from placed wires: junction detection, electrode
/// selection (source nearest (0,0), ground nearest (side, side), by midpoint)
/// and the percolation check. Throws PercolationFailure when source and
/// ground end up in different components.
inline NetworkTopology build_topology(std::vector<Nanowire> wires, double substrate_side,
                                      std::uint64_t seed) {
    if (wires.size() < 2) throw ConfigError("topology: need at least 2 wires");
    NetworkTopology topo;
    topo.substrate_side = substrate_side;
    topo.seed = seed;
    topo.wires = std::move(wires);
    topo.junctions = find_junctions(topo.wires, substrate_side);
    topo.source_wire = assembly_detail::nearest_wire(topo.wires, {0.0, 0.0});
    topo.ground_wire =
        assembly_detail::nearest_wire(topo.wires, {substrate_side, substrate_side},
                                      topo.source_wire);

    auto comp = wire_components(static_cast<int>(topo.wires.size()), topo.junctions);
    if (comp[static_cast<std::size_t>(topo.source_wire)] !=
        comp[static_cast<std::size_t>(topo.ground_wire)]) {
        int n_comp = *std::max_element(comp.begin(), comp.end()) + 1;
        std::vector<int> sizes(static_cast<std::size_t>(n_comp), 0);
        for (int c : comp) ++sizes[static_cast<std::size_t>(c)];
        std::string msg = "network does not percolate (seed " + std::to_string(seed) +
                          "): source in component of " +
                          std::to_string(sizes[static_cast<std::size_t>(
                              comp[static_cast<std::size_t>(topo.source_wire)])]) +
                          " wires, ground in component of " +
                          std::to_string(sizes[static_cast<std::size_t>(
                              comp[static_cast<std::size_t>(topo.ground_wire)])]) +
                          " wires, " + std::to_string(n_comp) + " components total";
        throw PercolationFailure(msg);
    }

    topo.adjacency.assign(topo.wires.size(), {});
    for (const auto& j : topo.junctions) {
        topo.adjacency[static_cast<std::size_t>(j.wire_a)].push_back({j.id, j.wire_b});
        topo.adjacency[static_cast<std::size_t>(j.wire_b)].push_back({j.id, j.wire_a});
    }
    return topo;
}

/// Monte Carlo self-assembly. Retries with seed+1, seed+2, ... when the
/// network fails to percolate; gives up after max_retries reseeds.
inline NetworkTopology assemble(const AssemblyConfig& cfg) {
    cfg.validate();
    std::string last_error;
    for (int attempt = 0; attempt <= cfg.max_retries; ++attempt) {
        const std::uint64_t seed = cfg.seed + static_cast<std::uint64_t>(attempt);
        auto wires = place_wires(cfg, seed);
        try {
            return build_topology(std::move(wires), cfg.side(), seed);
        } catch (const PercolationFailure& e) {
            last_error = e.what();
        }
    }
    throw PercolationFailure("giving up after " + std::to_string(cfg.max_retries + 1) +
                             " attempts; last: " + last_error);
}

inline nlohmann::ordered_json topology_to_json(const NetworkTopology& topo) {
    nlohmann::ordered_json doc;
    doc["seed"] = topo.seed;
    doc["substrate_side"] = topo.substrate_side;
    doc["source_wire"] = topo.source_wire;
    doc["ground_wire"] = topo.ground_wire;
    doc["wires"] = nlohmann::ordered_json::array();
    for (const auto& w : topo.wires) {
        doc["wires"].push_back(
            {{"id", w.id}, {"x1", w.p1.x}, {"y1", w.p1.y}, {"x2", w.p2.x}, {"y2", w.p2.y}});
    }
    doc["junctions"] = nlohmann::ordered_json::array();
    for (const auto& j : topo.junctions) {
        doc["junctions"].push_back({{"id", j.id},
                                    {"wire_a", j.wire_a},
                                    {"wire_b", j.wire_b},
                                    {"x", j.position.x},
                                    {"y", j.position.y}});
    }
    return doc;
}

inline NetworkTopology topology_from_json(const nlohmann::json& doc) {
    NetworkTopology topo;
    try {
        topo.seed = doc.at("seed").get<std::uint64_t>();
        topo.substrate_side = doc.at("substrate_side").get<double>();
        topo.source_wire = doc.at("source_wire").get<int>();
        topo.ground_wire = doc.at("ground_wire").get<int>();
        for (const auto& w : doc.at("wires")) {
            topo.wires.push_back({w.at("id").get<int>(),
                                  {w.at("x1").get<double>(), w.at("y1").get<double>()},
                                  {w.at("x2").get<double>(), w.at("y2").get<double>()}});
        }
        for (const auto& j : doc.at("junctions")) {
            topo.junctions.push_back({j.at("id").get<int>(),
                                      j.at("wire_a").get<int>(),
                                      j.at("wire_b").get<int>(),
                                      {j.at("x").get<double>(), j.at("y").get<double>()}});
        }
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("topology json: ") + e.what());
    }
    topo.adjacency.assign(topo.wires.size(), {});
    for (const auto& j : topo.junctions) {
        topo.adjacency[static_cast<std::size_t>(j.wire_a)].push_back({j.id, j.wire_b});
        topo.adjacency[static_cast<std::size_t>(j.wire_b)].push_back({j.id, j.wire_a});
    }
    return topo;
}

inline void save_topology(const NetworkTopology& topo, const std::filesystem::path& path) {
    write_file(path, topology_to_json(topo).dump(2) + "\n");
}

inline NetworkTopology load_topology(const std::filesystem::path& path) {
    try {
        return topology_from_json(nlohmann::json::parse(read_file(path)));
    } catch (const nlohmann::json::parse_error& e) {
        throw ParseError("topology " + path.string() + ": " + e.what());
    }
}

}  // namespace nanores
