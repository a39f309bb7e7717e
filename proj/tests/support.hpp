#pragma once

// Shared test helpers: a scratch directory, hand-rolled WAV bytes and a dense
// reference solver. The oracles here deliberately avoid the library's own
// data structures and algorithms.

#include <atomic>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <unistd.h>

namespace testsupport {

class TempDir {
  public:
    explicit TempDir(const std::string& tag) {
        static std::atomic<unsigned> counter{0};
        path_ = std::filesystem::temp_directory_path() /
                ("nanores_test_" + tag + "_" + std::to_string(::getpid()) + "_" +
                 std::to_string(counter.fetch_add(1)));
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    const std::filesystem::path& path() const { return path_; }

  private:
    std::filesystem::path path_;
};

inline void write_bytes(const std::filesystem::path& p, const std::vector<unsigned char>& bytes) {
    std::ofstream out(p, std::ios::binary);
    out.write(reinterpret_cast<const char*>(bytes.data()),
              static_cast<std::streamsize>(bytes.size()));
}

/// Builds a minimal 44-byte-header PCM WAV by hand, independent of the
/// library's writer.
inline std::vector<unsigned char> wav_bytes(const std::vector<std::int16_t>& samples,
                                            std::uint32_t rate = 8000,
                                            std::uint16_t channels = 1) {
    std::vector<unsigned char> b;
    auto u32 = [&](std::uint32_t v) {
        for (int i = 0; i < 4; ++i) b.push_back((v >> (8 * i)) & 0xff);
    };
    auto u16 = [&](std::uint16_t v) {
        b.push_back(v & 0xff);
        b.push_back((v >> 8) & 0xff);
    };
    auto tag = [&](const char* t) { b.insert(b.end(), t, t + 4); };
    const std::uint32_t data_size = static_cast<std::uint32_t>(samples.size() * 2);
    tag("RIFF");
    u32(36 + data_size);
    tag("WAVE");
    tag("fmt ");
    u32(16);
    u16(1);
    u16(channels);
    u32(rate);
    u32(rate * 2u * channels);
    u16(static_cast<std::uint16_t>(2 * channels));
    u16(16);
    tag("data");
    u32(data_size);
    for (std::int16_t s : samples) u16(static_cast<std::uint16_t>(s));
    return b;
}

/// Dense reference solution for the grounded Laplacian problem:
/// build the full Laplacian from the edge list, pin source at v_drive and
/// ground at 0, pin nodes unreachable from both electrodes at 0, and solve by
/// Gaussian elimination with partial pivoting.
struct DenseEdge {
    int a, b;
    double w;
};

inline std::vector<double> dense_node_voltages(int n, const std::vector<DenseEdge>& edges,
                                               int source, int ground, double v_drive) {
    // reachability over an adjacency matrix (no shared code with the library)
    std::vector<std::vector<char>> adj(n, std::vector<char>(n, 0));
    for (const auto& e : edges) adj[e.a][e.b] = adj[e.b][e.a] = 1;
    auto reach = [&](int start) {
        std::vector<char> seen(n, 0);
        std::vector<int> stack{start};
        seen[start] = 1;
        while (!stack.empty()) {
            int u = stack.back();
            stack.pop_back();
            for (int v = 0; v < n; ++v)
                if (adj[u][v] && !seen[v]) {
                    seen[v] = 1;
                    stack.push_back(v);
                }
        }
        return seen;
    };
    auto rs = reach(source);
    auto rg = reach(ground);

    std::vector<std::vector<double>> m(n, std::vector<double>(n + 1, 0.0));
    for (const auto& e : edges) {
        m[e.a][e.a] += e.w;
        m[e.b][e.b] += e.w;
        m[e.a][e.b] -= e.w;
        m[e.b][e.a] -= e.w;
    }
    auto pin = [&](int node, double value) {
        for (int j = 0; j < n; ++j) m[node][j] = 0.0;
        m[node][node] = 1.0;
        m[node][n] = value;
    };
    pin(source, v_drive);
    pin(ground, 0.0);
    for (int i = 0; i < n; ++i)
        if (!rs[i] && !rg[i]) pin(i, 0.0);

    // gaussian elimination, partial pivoting
    for (int col = 0; col < n; ++col) {
        int pivot = col;
        for (int r = col + 1; r < n; ++r)
            if (std::abs(m[r][col]) > std::abs(m[pivot][col])) pivot = r;
        std::swap(m[col], m[pivot]);
        const double diag = m[col][col];
        for (int r = 0; r < n; ++r) {
            if (r == col || m[r][col] == 0.0) continue;
            const double f = m[r][col] / diag;
            for (int j = col; j <= n; ++j) m[r][j] -= f * m[col][j];
        }
    }
    std::vector<double> v(n);
    for (int i = 0; i < n; ++i) v[i] = m[i][n] / m[i][i];
    return v;
}

inline double dense_effective_conductance(int n, const std::vector<DenseEdge>& edges, int source,
                                          int ground) {
    const auto v = dense_node_voltages(n, edges, source, ground, 1.0);
    double i_src = 0.0;
    for (const auto& e : edges) {
        if (e.a == source) i_src += e.w * (v[e.a] - v[e.b]);
        else if (e.b == source) i_src += e.w * (v[e.b] - v[e.a]);
    }
    return i_src;
}

}  // namespace testsupport
