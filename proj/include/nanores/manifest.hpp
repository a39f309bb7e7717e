#pragma once

#include <algorithm>
#include <filesystem>
#include <map>
#include <regex>
#include <string>
#include <tuple>
#include <vector>

#include <nlohmann/json.hpp>

#include "nanores/errors.hpp"
#include "nanores/io.hpp"

namespace nanores {

struct ManifestEntry {
    std::string path;
    std::string speaker;
    int digit = 0;
    int trial = 0;

    auto key() const { return std::tie(speaker, digit, trial); }
};

struct DatasetManifest {
    std::vector<ManifestEntry> entries;
};

namespace manifest_detail {

/// Compiles a filename pattern such as "{digit}_{speaker}_{trial}.wav" into a
/// regex. {digit} and {trial} match integers, {speaker} any run without the
/// separator characters. Capture order is recorded for extraction.
struct CompiledPattern {
    std::regex regex;
    int digit_group = 0, speaker_group = 0, trial_group = 0;
};

inline CompiledPattern compile_pattern(const std::string& pattern) {
    CompiledPattern out;
    std::string rx;
    int group = 0;
    bool saw_digit = false, saw_speaker = false, saw_trial = false;
    for (std::size_t i = 0; i < pattern.size();) {
        if (pattern[i] == '{') {
            auto close = pattern.find('}', i);
            if (close == std::string::npos)
                throw PatternError("unterminated placeholder in pattern: " + pattern);
            std::string name = pattern.substr(i + 1, close - i - 1);
            ++group;
            if (name == "digit") {
                rx += "([0-9]+)";
                out.digit_group = group;
                saw_digit = true;
            } else if (name == "speaker") {
                rx += "([^_/]+)";
                out.speaker_group = group;
                saw_speaker = true;
            } else if (name == "trial") {
                rx += "([0-9]+)";
                out.trial_group = group;
                saw_trial = true;
            } else {
                throw PatternError("unknown placeholder {" + name + "} in pattern: " + pattern);
            }
            i = close + 1;
        } else {
            char c = pattern[i];
            if (std::string("\\^$.|?*+()[]{}").find(c) != std::string::npos) rx += '\\';
            rx += c;
            ++i;
        }
    }
    if (!saw_digit || !saw_speaker || !saw_trial)
        throw PatternError("pattern must contain {digit}, {speaker} and {trial}: " + pattern);
    out.regex = std::regex("^" + rx + "$");
    return out;
}

}  // namespace manifest_detail

/// Scans a directory for audio files matching the filename pattern and builds
/// a manifest sorted by (speaker, digit, trial). Files that do not match the
/// pattern are ignored. Two files that parse to the same triple (for example
/// via leading zeros) raise DuplicateEntry naming both paths.
inline DatasetManifest build_manifest(const std::filesystem::path& root,
                                      const std::string& pattern = "{digit}_{speaker}_{trial}.wav") {
    if (!std::filesystem::is_directory(root))
        throw IoError("not a directory: " + root.string());
    auto compiled = manifest_detail::compile_pattern(pattern);

    std::vector<std::string> names;
    for (const auto& e : std::filesystem::directory_iterator(root)) {
        if (e.is_regular_file()) names.push_back(e.path().filename().string());
    }
    std::sort(names.begin(), names.end());

    DatasetManifest manifest;
    std::map<std::tuple<std::string, int, int>, std::string> seen;
    for (const auto& name : names) {
        std::smatch m;
        if (!std::regex_match(name, m, compiled.regex)) continue;
        ManifestEntry entry;
        entry.path = (root / name).generic_string();
        entry.speaker = m[compiled.speaker_group].str();
        entry.digit = std::stoi(m[compiled.digit_group].str());
        entry.trial = std::stoi(m[compiled.trial_group].str());
        auto key = std::make_tuple(entry.speaker, entry.digit, entry.trial);
        auto [it, inserted] = seen.emplace(key, entry.path);
        if (!inserted)
            throw DuplicateEntry("duplicate (speaker, digit, trial): " + it->second + " and " +
                                 entry.path);
        manifest.entries.push_back(std::move(entry));
    }
    if (manifest.entries.empty())
        throw EmptyDataset("no files matching pattern '" + pattern + "' in " + root.string());
    std::sort(manifest.entries.begin(), manifest.entries.end(),
              [](const ManifestEntry& a, const ManifestEntry& b) { return a.key() < b.key(); });
    return manifest;
}

inline nlohmann::ordered_json manifest_to_json(const DatasetManifest& manifest) {
    nlohmann::ordered_json arr = nlohmann::ordered_json::array();
    for (const auto& e : manifest.entries) {
        arr.push_back({{"path", e.path},
                       {"speaker", e.speaker},
                       {"digit", e.digit},
                       {"trial", e.trial}});
    }
    return arr;
}

inline void save_manifest(const DatasetManifest& manifest, const std::filesystem::path& path) {
    write_file(path, manifest_to_json(manifest).dump(2) + "\n");
}

inline DatasetManifest load_manifest(const std::filesystem::path& path) {
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(read_file(path));
    } catch (const nlohmann::json::parse_error& e) {
        throw ParseError("manifest " + path.string() + ": " + e.what());
    }
    if (!doc.is_array()) throw ParseError("manifest " + path.string() + ": expected JSON array");
    DatasetManifest manifest;
    std::map<std::tuple<std::string, int, int>, std::string> seen;
    for (const auto& item : doc) {
        ManifestEntry e;
        try {
            e.path = item.at("path").get<std::string>();
            e.speaker = item.at("speaker").get<std::string>();
            e.digit = item.at("digit").get<int>();
            e.trial = item.at("trial").get<int>();
        } catch (const nlohmann::json::exception& ex) {
            throw ParseError("manifest " + path.string() + ": bad entry: " + ex.what());
        }
        auto key = std::make_tuple(e.speaker, e.digit, e.trial);
        auto [it, inserted] = seen.emplace(key, e.path);
        if (!inserted)
            throw DuplicateEntry("duplicate (speaker, digit, trial): " + it->second + " and " +
                                 e.path);
        manifest.entries.push_back(std::move(e));
    }
    if (manifest.entries.empty()) throw EmptyDataset("manifest " + path.string() + " is empty");
    std::sort(manifest.entries.begin(), manifest.entries.end(),
              [](const ManifestEntry& a, const ManifestEntry& b) { return a.key() < b.key(); });
    return manifest;
}

}  // namespace nanores
