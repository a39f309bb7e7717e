#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <queue>
#include <string>
#include <utility>
#include <vector>

#include "nanores/assembly.hpp"
#include "nanores/dynamics.hpp"
#include "nanores/errors.hpp"

namespace nanores {

/// Weighted graph Laplacian over wire nodes, CSR storage. The sparsity
/// pattern is fixed at construction; per-timestep weight updates only rewrite
/// the value array. Multiple edges between the same node pair accumulate.
struct ConductanceMatrix {
    int n = 0;
    std::vector<std::pair<int, int>> edges;
    std::vector<double> weights;

    std::vector<int> row_ptr, col_idx;
    std::vector<double> vals;
    std::vector<int> diag_pos;
    std::vector<std::array<int, 2>> edge_pos;

    static ConductanceMatrix from_edges(int n, std::vector<std::pair<int, int>> edges,
                                        std::vector<double> weights) {
        if (n < 2) throw ShapeError("conductance matrix: need at least 2 nodes");
        if (edges.size() != weights.size())
            throw ShapeError("conductance matrix: edges/weights size mismatch");
        ConductanceMatrix m;
        m.n = n;
        m.edges = std::move(edges);
        m.weights = std::move(weights);

        std::vector<std::vector<int>> nb(static_cast<std::size_t>(n));
        for (const auto& [a, b] : m.edges) {
            if (a < 0 || a >= n || b < 0 || b >= n)
                throw ShapeError("conductance matrix: edge endpoint out of range");
            if (a == b) throw InvalidArgument("conductance matrix: self loop");
            nb[static_cast<std::size_t>(a)].push_back(b);
            nb[static_cast<std::size_t>(b)].push_back(a);
        }
        for (double w : m.weights)
            if (!(w > 0.0)) throw InvalidArgument("conductance matrix: weights must be positive");

        m.row_ptr.resize(static_cast<std::size_t>(n) + 1, 0);
        for (int i = 0; i < n; ++i) {
            auto& cols = nb[static_cast<std::size_t>(i)];
            cols.push_back(i);
            std::sort(cols.begin(), cols.end());
            cols.erase(std::unique(cols.begin(), cols.end()), cols.end());
            m.row_ptr[static_cast<std::size_t>(i) + 1] =
                m.row_ptr[static_cast<std::size_t>(i)] + static_cast<int>(cols.size());
        }
        m.col_idx.resize(static_cast<std::size_t>(m.row_ptr.back()));
        for (int i = 0; i < n; ++i) {
            const auto& cols = nb[static_cast<std::size_t>(i)];
            std::copy(cols.begin(), cols.end(),
                      m.col_idx.begin() + m.row_ptr[static_cast<std::size_t>(i)]);
        }
        m.vals.assign(m.col_idx.size(), 0.0);

        auto locate = [&](int row, int col) {
            auto first = m.col_idx.begin() + m.row_ptr[static_cast<std::size_t>(row)];
            auto last = m.col_idx.begin() + m.row_ptr[static_cast<std::size_t>(row) + 1];
            auto it = std::lower_bound(first, last, col);
            return static_cast<int>(it - m.col_idx.begin());
        };
        m.diag_pos.resize(static_cast<std::size_t>(n));
        for (int i = 0; i < n; ++i) m.diag_pos[static_cast<std::size_t>(i)] = locate(i, i);
        m.edge_pos.resize(m.edges.size());
        for (std::size_t k = 0; k < m.edges.size(); ++k) {
            const auto& [a, b] = m.edges[k];
            m.edge_pos[k] = {locate(a, b), locate(b, a)};
        }
        m.refresh();
        return m;
    }

    /// Rebuilds the Laplacian values from the current edge weights.
    void refresh() {
        std::fill(vals.begin(), vals.end(), 0.0);
        for (std::size_t k = 0; k < edges.size(); ++k) {
            const double w = weights[k];
            const auto& [a, b] = edges[k];
            vals[static_cast<std::size_t>(diag_pos[static_cast<std::size_t>(a)])] += w;
            vals[static_cast<std::size_t>(diag_pos[static_cast<std::size_t>(b)])] += w;
            vals[static_cast<std::size_t>(edge_pos[k][0])] -= w;
            vals[static_cast<std::size_t>(edge_pos[k][1])] -= w;
        }
    }

    void set_weights(const std::vector<double>& w) {
        if (w.size() != weights.size())
            throw ShapeError("conductance matrix: weight count mismatch");
        for (double x : w)
            if (!(x > 0.0)) throw InvalidArgument("conductance matrix: weights must be positive");
        weights = w;
        refresh();
    }
};

/// Laplacian with one edge per junction, weighted by the junction
/// conductances implied by the states.
inline ConductanceMatrix build_matrix(const NetworkTopology& topo,
                                      const std::vector<double>& states,
                                      const DynamicsParams& params) {
    if (states.size() != topo.junctions.size())
        throw ShapeError("build_matrix: state count does not match junction count");
    std::vector<std::pair<int, int>> edges;
    std::vector<double> weights;
    edges.reserve(topo.junctions.size());
    weights.reserve(topo.junctions.size());
    for (const auto& j : topo.junctions) {
        edges.emplace_back(j.wire_a, j.wire_b);
        weights.push_back(junction_conductance(states[static_cast<std::size_t>(j.id)], params));
    }
    return ConductanceMatrix::from_edges(static_cast<int>(topo.wires.size()), std::move(edges),
                                         std::move(weights));
}

inline void update_matrix(ConductanceMatrix& m, const std::vector<double>& states,
                          const DynamicsParams& params) {
    if (states.size() != m.edges.size())
        throw ShapeError("update_matrix: state count does not match edge count");
    for (std::size_t k = 0; k < states.size(); ++k)
        m.weights[k] = junction_conductance(states[k], params);
    m.refresh();
}

struct SolverOptions {
    double rel_tol = 1e-11;  ///< CG stop: ||r||_2 <= rel_tol * ||b||_2
    double kcl_tol = 1e-9;   ///< net current at any free node <= kcl_tol * |I_source|
    int max_iter_factor = 20;
};

struct SolveResult {
    std::vector<double> node_voltages;
    std::vector<double> junction_drops;  ///< per edge, v[a] - v[b]
    double source_current = 0.0;
    double g_eff = 0.0;
    std::size_t iterations = 0;
    double residual_norm = 0.0;  ///< final ||r||_2 of the unit problem
    double kcl_residual = 0.0;   ///< worst net nodal current of the unit problem
};

/// Dirichlet-constrained Laplacian solve with Jacobi-preconditioned conjugate
/// gradients. The solver keeps the previous unit solution as the warm start
/// for the next call, which is what makes per-timestep re-solves cheap: the
/// conductance state, and hence the voltage field, moves slowly between
/// steps.
///
/// The drive enters linearly, so only the unit problem (source at 1 V) is
/// ever solved; results for any v_drive are scaled from it. That makes
/// g_eff bit-identical across drive values and keeps v_drive = 0 exact.
class KirchhoffSolver {
  public:
    KirchhoffSolver(const ConductanceMatrix& m, int source, int ground, SolverOptions opt = {})
        : m_(&m), source_(source), ground_(ground), opt_(opt) {
        const int n = m.n;
        if (source < 0 || source >= n || ground < 0 || ground >= n)
            throw ShapeError("solver: electrode index out of range");
        if (source == ground) throw InvalidArgument("solver: source and ground coincide");

        auto reach = [&](int start) {
            std::vector<char> seen(static_cast<std::size_t>(n), 0);
            std::queue<int> q;
            q.push(start);
            seen[static_cast<std::size_t>(start)] = 1;
            while (!q.empty()) {
                int u = q.front();
                q.pop();
                for (int p = m.row_ptr[static_cast<std::size_t>(u)];
                     p < m.row_ptr[static_cast<std::size_t>(u) + 1]; ++p) {
                    int v = m.col_idx[static_cast<std::size_t>(p)];
                    if (!seen[static_cast<std::size_t>(v)]) {
                        seen[static_cast<std::size_t>(v)] = 1;
                        q.push(v);
                    }
                }
            }
            return seen;
        };
        auto from_src = reach(source);
        if (!from_src[static_cast<std::size_t>(ground)])
            throw NotPercolating("solver: no conductive path between source and ground");
        auto from_gnd = reach(ground);

        free_.resize(static_cast<std::size_t>(n));
        in_system_.resize(static_cast<std::size_t>(n));
        for (int i = 0; i < n; ++i) {
            in_system_[static_cast<std::size_t>(i)] =
                from_src[static_cast<std::size_t>(i)] || from_gnd[static_cast<std::size_t>(i)];
            free_[static_cast<std::size_t>(i)] =
                in_system_[static_cast<std::size_t>(i)] && i != source && i != ground;
            if (free_[static_cast<std::size_t>(i)]) free_nodes_.push_back(i);
        }
        x_.assign(static_cast<std::size_t>(n), 0.0);
        r_.assign(static_cast<std::size_t>(n), 0.0);
        z_.assign(static_cast<std::size_t>(n), 0.0);
        p_.assign(static_cast<std::size_t>(n), 0.0);
        ap_.assign(static_cast<std::size_t>(n), 0.0);
    }

    /// Solves the unit problem against the matrix's current weights and
    /// returns the effective source-to-ground conductance.
    double solve_unit() {
        run_pcg();
        return g_eff_;
    }

    SolveResult solve(double v_drive) {
        run_pcg();
        SolveResult res;
        res.node_voltages.resize(x_.size());
        for (std::size_t i = 0; i < x_.size(); ++i) res.node_voltages[i] = v_drive * x_[i];
        res.junction_drops.resize(m_->edges.size());
        for (std::size_t k = 0; k < m_->edges.size(); ++k) {
            const auto& [a, b] = m_->edges[k];
            res.junction_drops[k] =
                v_drive * (x_[static_cast<std::size_t>(a)] - x_[static_cast<std::size_t>(b)]);
        }
        res.g_eff = g_eff_;
        res.source_current = v_drive * g_eff_;
        res.iterations = last_iterations_;
        res.residual_norm = last_residual_;
        res.kcl_residual = last_kcl_;
        return res;
    }

    /// Per-timestep fast path: writes v_drive-scaled drops into `drops` and
    /// returns g_eff without allocating a full result.
    double solve_drops(double v_drive, std::vector<double>& drops) {
        run_pcg();
        drops.resize(m_->edges.size());
        for (std::size_t k = 0; k < m_->edges.size(); ++k) {
            const auto& [a, b] = m_->edges[k];
            drops[k] =
                v_drive * (x_[static_cast<std::size_t>(a)] - x_[static_cast<std::size_t>(b)]);
        }
        return g_eff_;
    }

    std::size_t last_iterations() const { return last_iterations_; }
    const std::vector<double>& unit_voltages() const { return x_; }

  private:
    double source_current_unit() const {
        double acc = 0.0;
        for (std::size_t k = 0; k < m_->edges.size(); ++k) {
            const auto& [a, b] = m_->edges[k];
            if (a == source_) acc += m_->weights[k] * (1.0 - x_[static_cast<std::size_t>(b)]);
            else if (b == source_) acc += m_->weights[k] * (1.0 - x_[static_cast<std::size_t>(a)]);
        }
        return acc;
    }

    /// r = -(L x) on free nodes; returns ||r||_2. x holds the Dirichlet
    /// values, so this is the exact negative residual of the reduced system.
    double compute_residual() {
        double norm2 = 0.0;
        for (int i : free_nodes_) {
            double acc = 0.0;
            for (int p = m_->row_ptr[static_cast<std::size_t>(i)];
                 p < m_->row_ptr[static_cast<std::size_t>(i) + 1]; ++p) {
                acc += m_->vals[static_cast<std::size_t>(p)] *
                       x_[static_cast<std::size_t>(m_->col_idx[static_cast<std::size_t>(p)])];
            }
            r_[static_cast<std::size_t>(i)] = -acc;
            norm2 += acc * acc;
        }
        return std::sqrt(norm2);
    }

    void run_pcg() {
        x_[static_cast<std::size_t>(source_)] = 1.0;
        x_[static_cast<std::size_t>(ground_)] = 0.0;
        for (std::size_t i = 0; i < x_.size(); ++i)
            if (!in_system_[i]) x_[i] = 0.0;

        // ||b||: couplings of free nodes to the source electrode
        double bnorm2 = 0.0;
        {
            std::vector<double>& tmp = ap_;
            std::fill(tmp.begin(), tmp.end(), 0.0);
            for (std::size_t k = 0; k < m_->edges.size(); ++k) {
                const auto& [a, b] = m_->edges[k];
                if (a == source_ && free_[static_cast<std::size_t>(b)])
                    tmp[static_cast<std::size_t>(b)] += m_->weights[k];
                else if (b == source_ && free_[static_cast<std::size_t>(a)])
                    tmp[static_cast<std::size_t>(a)] += m_->weights[k];
            }
            for (int i : free_nodes_) {
                bnorm2 += tmp[static_cast<std::size_t>(i)] * tmp[static_cast<std::size_t>(i)];
                tmp[static_cast<std::size_t>(i)] = 0.0;
            }
        }
        const double bnorm = std::sqrt(bnorm2);

        const std::size_t max_iters =
            static_cast<std::size_t>(opt_.max_iter_factor) *
            std::max<std::size_t>(free_nodes_.size(), 1);
        std::size_t iters = 0;
        double rnorm = free_nodes_.empty() ? 0.0 : compute_residual();

        double target = opt_.rel_tol * bnorm;
        // KCL refinement: after meeting the CG target, require the worst
        // nodal current imbalance to sit below kcl_tol * |I_source|; if not,
        // keep iterating against the tighter target.
        for (int round = 0; round < 12; ++round) {
            if (!free_nodes_.empty() && rnorm > target) {
                rnorm = pcg_iterate(target, max_iters, iters);
            }
            const double i_src = source_current_unit();
            const double kcl_target = 0.5 * opt_.kcl_tol * std::abs(i_src);
            if (free_nodes_.empty() || rnorm <= kcl_target || kcl_target >= target) {
                g_eff_ = i_src;
                break;
            }
            target = kcl_target;
            if (round == 11) {
                throw SolverDiverged("solver: KCL refinement stalled at residual " +
                                     std::to_string(rnorm));
            }
        }

        last_iterations_ = iters;
        last_residual_ = rnorm;
        last_kcl_ = 0.0;
        for (int i : free_nodes_)
            last_kcl_ = std::max(last_kcl_, std::abs(r_[static_cast<std::size_t>(i)]));
        if (!free_nodes_.empty()) {
            const double allowed = std::max(opt_.kcl_tol * std::abs(g_eff_), 0.0);
            if (last_kcl_ > allowed && rnorm > opt_.rel_tol * bnorm)
                throw SolverDiverged("solver: residual " + std::to_string(rnorm) +
                                     " above target after " + std::to_string(iters) +
                                     " iterations");
        }
    }

    /// PCG until ||r||_2 <= target; returns the verified residual norm.
    double pcg_iterate(double target, std::size_t max_iters, std::size_t& iters) {
        double rnorm = compute_residual();
        if (rnorm <= target) return rnorm;

        auto precond = [&] {
            for (int i : free_nodes_)
                z_[static_cast<std::size_t>(i)] =
                    r_[static_cast<std::size_t>(i)] /
                    m_->vals[static_cast<std::size_t>(
                        m_->diag_pos[static_cast<std::size_t>(i)])];
        };
        precond();
        double rz = 0.0;
        for (int i : free_nodes_)
            rz += r_[static_cast<std::size_t>(i)] * z_[static_cast<std::size_t>(i)];
        for (int i : free_nodes_) p_[static_cast<std::size_t>(i)] = z_[static_cast<std::size_t>(i)];

        double best = rnorm;
        std::size_t best_iter = iters;

        while (true) {
            if (iters >= max_iters)
                throw SolverDiverged("solver: exceeded " + std::to_string(max_iters) +
                                     " iterations (residual " + std::to_string(rnorm) +
                                     ", target " + std::to_string(target) + ")");
            // Ap on free rows; p is zero elsewhere
            double pap = 0.0;
            for (int i : free_nodes_) {
                double acc = 0.0;
                for (int q = m_->row_ptr[static_cast<std::size_t>(i)];
                     q < m_->row_ptr[static_cast<std::size_t>(i) + 1]; ++q) {
                    const int c = m_->col_idx[static_cast<std::size_t>(q)];
                    if (free_[static_cast<std::size_t>(c)])
                        acc += m_->vals[static_cast<std::size_t>(q)] *
                               p_[static_cast<std::size_t>(c)];
                }
                ap_[static_cast<std::size_t>(i)] = acc;
                pap += p_[static_cast<std::size_t>(i)] * acc;
            }
            if (!(pap > 0.0))
                throw SolverDiverged("solver: lost positive definiteness (p'Ap = " +
                                     std::to_string(pap) + ")");
            const double alpha = rz / pap;
            double rnorm2 = 0.0;
            for (int i : free_nodes_) {
                x_[static_cast<std::size_t>(i)] += alpha * p_[static_cast<std::size_t>(i)];
                r_[static_cast<std::size_t>(i)] -= alpha * ap_[static_cast<std::size_t>(i)];
                rnorm2 += r_[static_cast<std::size_t>(i)] * r_[static_cast<std::size_t>(i)];
            }
            ++iters;
            rnorm = std::sqrt(rnorm2);
            if (rnorm <= target) {
                rnorm = compute_residual();  // recurrence drift check
                if (rnorm <= target) return rnorm;
            }
            if (rnorm < 0.9 * best) {
                best = rnorm;
                best_iter = iters;
            } else if (iters - best_iter > 400) {
                rnorm = compute_residual();
                if (rnorm <= target) return rnorm;
                throw SolverDiverged("solver: stagnated at residual " + std::to_string(rnorm) +
                                     " (target " + std::to_string(target) + ")");
            }
            precond();
            double rz_next = 0.0;
            for (int i : free_nodes_)
                rz_next += r_[static_cast<std::size_t>(i)] * z_[static_cast<std::size_t>(i)];
            const double beta = rz_next / rz;
            rz = rz_next;
            for (int i : free_nodes_)
                p_[static_cast<std::size_t>(i)] =
                    z_[static_cast<std::size_t>(i)] + beta * p_[static_cast<std::size_t>(i)];
        }
    }

    const ConductanceMatrix* m_;
    int source_, ground_;
    SolverOptions opt_;
    std::vector<char> free_, in_system_;
    std::vector<int> free_nodes_;
    std::vector<double> x_, r_, z_, p_, ap_;
    double g_eff_ = 0.0;
    std::size_t last_iterations_ = 0;
    double last_residual_ = 0.0;
    double last_kcl_ = 0.0;
};

inline SolveResult solve_network(const ConductanceMatrix& m, int source, int ground,
                                 double v_drive, SolverOptions opt = {}) {
    KirchhoffSolver solver(m, source, ground, opt);
    return solver.solve(v_drive);
}

inline double effective_conductance(const ConductanceMatrix& m, int source, int ground,
                                    SolverOptions opt = {}) {
    KirchhoffSolver solver(m, source, ground, opt);
    return solver.solve_unit();
}

}  // namespace nanores
