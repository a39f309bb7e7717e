#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "nanores/errors.hpp"

namespace nanores {

/// Formats a double with 17 significant digits (round-trip exact).
inline std::string fmt_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

inline void write_file(const std::filesystem::path& path, const std::string& content) {
    if (path.has_parent_path()) {
        std::error_code ec;
        std::filesystem::create_directories(path.parent_path(), ec);
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open for writing: " + path.string());
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out) throw IoError("write failed: " + path.string());
}

inline std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open: " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

/// Minimal CSV emitter. All numeric cells go through fmt_double so files are
/// byte-stable across runs.
class CsvWriter {
  public:
    void header(const std::vector<std::string>& names) { row_strings(names); }

    void row_strings(const std::vector<std::string>& cells) {
        for (std::size_t i = 0; i < cells.size(); ++i) {
            if (i) body_ += ',';
            body_ += cells[i];
        }
        body_ += '\n';
    }

    void cell(const std::string& s) {
        if (!line_empty_) body_ += ',';
        body_ += s;
        line_empty_ = false;
    }
    void cell(double v) { cell(fmt_double(v)); }
    void cell(long long v) { cell(std::to_string(v)); }
    void cell(int v) { cell(std::to_string(v)); }
    void cell(std::size_t v) { cell(std::to_string(v)); }
    void end_row() {
        body_ += '\n';
        line_empty_ = true;
    }

    const std::string& str() const { return body_; }
    void save(const std::filesystem::path& path) const { write_file(path, body_); }

  private:
    std::string body_;
    bool line_empty_ = true;
};

}  // namespace nanores
