#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "nanores/audio.hpp"
#include "nanores/classify.hpp"
#include "nanores/config.hpp"
#include "nanores/errors.hpp"
#include "nanores/io.hpp"
#include "nanores/manifest.hpp"
#include "nanores/reservoir.hpp"
#include "nanores/rng.hpp"
#include "nanores/solver.hpp"
#include "nanores/threads.hpp"

namespace nanores {

/// Pairwise clip distance: L2 over equal-length traces.
inline double euclidean_distance(const std::vector<double>& a, const std::vector<double>& b) {
    if (a.size() != b.size()) throw ShapeError("euclidean_distance: length mismatch");
    double acc = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = a[i] - b[i];
        acc += d * d;
    }
    return std::sqrt(acc);
}

/// Per-clip feature inputs for a set of manifest entries: the standardized
/// drive ("raw") and the simulated conductance readout ("nanowire"). The
/// nanowire traces come from a pre-simulated trace pack when the config names
/// one, otherwise the store simulates the clips itself.
class TraceStore {
  public:
    TraceStore(std::vector<ManifestEntry> entries, const ExperimentConfig& cfg,
               bool need_nanowire = true)
        : entries_(std::move(entries)) {
        const auto& rc = cfg.reservoir;
        raw_.resize(entries_.size());
        parallel_for(entries_.size(), [&](std::size_t i) {
            AudioClip clip = read_wav(entries_[i].path);
            raw_[i] = standardize_trace(clip, rc.timesteps, rc.v_p).values;
        });
        if (!need_nanowire) return;

        if (!cfg.traces_dir.empty()) {
            auto pack = load_trace_pack(cfg.traces_dir);
            std::map<std::tuple<std::string, int, int>, std::size_t> index;
            for (std::size_t i = 0; i < pack.size(); ++i)
                index[{pack[i].clip.speaker, pack[i].clip.digit, pack[i].clip.trial}] = i;
            nanowire_.resize(entries_.size());
            for (std::size_t i = 0; i < entries_.size(); ++i) {
                const auto& e = entries_[i];
                auto it = index.find({e.speaker, e.digit, e.trial});
                if (it == index.end())
                    throw TaskError("trace pack " + cfg.traces_dir + " is missing clip " +
                                    e.speaker + "/" + std::to_string(e.digit) + "/" +
                                    std::to_string(e.trial));
                const auto& values = pack[it->second].values;
                if (values.size() != rc.timesteps)
                    throw TaskError("trace pack entry for " + e.speaker + "/" +
                                    std::to_string(e.digit) + "/" + std::to_string(e.trial) +
                                    " has " + std::to_string(values.size()) +
                                    " steps, config wants " + std::to_string(rc.timesteps));
                nanowire_[i] = values;
            }
        } else {
            DatasetManifest sub;
            sub.entries = entries_;
            auto result = run_dataset(sub, rc);
            if (!result.errors.empty()) {
                std::string msg = "simulation failed for " +
                                  std::to_string(result.errors.size()) + " clip(s): ";
                msg += result.errors.front();
                throw TaskError(msg);
            }
            nanowire_.resize(entries_.size());
            for (std::size_t i = 0; i < entries_.size(); ++i)
                nanowire_[i] = std::move(result.traces[i].values);
        }
    }

    const std::vector<ManifestEntry>& entries() const { return entries_; }
    const std::vector<double>& raw(std::size_t i) const { return raw_[i]; }
    const std::vector<double>& nanowire(std::size_t i) const { return nanowire_.at(i); }
    const std::vector<double>& trace(std::size_t i, const std::string& source) const {
        if (source == "raw") return raw(i);
        if (source == "nanowire") return nanowire(i);
        throw InvalidArgument("unknown feature source '" + source + "'");
    }

  private:
    std::vector<ManifestEntry> entries_;
    std::vector<std::vector<double>> raw_, nanowire_;
};

/// Subsampled features for the given rows of a store, labels = digit.
inline FeatureMatrix build_features(const TraceStore& store, const std::vector<std::size_t>& rows,
                                    std::size_t subset_size, const std::string& source) {
    FeatureMatrix fm;
    fm.subset_size = subset_size;
    fm.source = source;
    for (std::size_t r : rows)
        fm.add_row(subsample(store.trace(r, source), subset_size), store.entries()[r].digit);
    return fm;
}

inline std::vector<std::size_t> all_rows(const TraceStore& store) {
    std::vector<std::size_t> rows(store.entries().size());
    for (std::size_t i = 0; i < rows.size(); ++i) rows[i] = i;
    return rows;
}

inline std::vector<ManifestEntry> filter_entries(const DatasetManifest& manifest,
                                                 const std::set<std::string>& speakers = {},
                                                 const std::set<int>& digits = {}) {
    std::vector<ManifestEntry> out;
    for (const auto& e : manifest.entries) {
        if (!speakers.empty() && !speakers.count(e.speaker)) continue;
        if (!digits.empty() && !digits.count(e.digit)) continue;
        out.push_back(e);
    }
    return out;
}

inline std::vector<std::string> manifest_speakers(const DatasetManifest& manifest) {
    std::vector<std::string> out;
    for (const auto& e : manifest.entries)
        if (out.empty() || out.back() != e.speaker) out.push_back(e.speaker);
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

inline std::vector<int> manifest_digits(const std::vector<ManifestEntry>& entries) {
    std::set<int> s;
    for (const auto& e : entries) s.insert(e.digit);
    return {s.begin(), s.end()};
}

inline void write_run_summary(const std::filesystem::path& out_dir, const std::string& task,
                              const ExperimentConfig& cfg,
                              const std::vector<std::string>& outputs,
                              const nlohmann::ordered_json& metrics) {
    nlohmann::ordered_json doc;
    doc["task"] = task;
    doc["master_seed"] = cfg.master_seed;
    doc["config"] = experiment_config_to_json(cfg);
    doc["outputs"] = outputs;
    doc["metrics"] = metrics;
    write_file(out_dir / "run_summary.json", doc.dump(2) + "\n");
}

// ---------------------------------------------------------------------------
// pairwise distance analysis
// ---------------------------------------------------------------------------

struct DistanceReport {
    std::vector<int> digits;
    std::vector<std::vector<double>> pair_mean;  ///< [i][j] mean distance digit_i vs digit_j
    std::vector<double> intra_mean, intra_std, inter_mean, inter_std;
    std::vector<std::size_t> clip_counts;
    std::vector<char> intra_defined;  ///< 0 when a digit has fewer than 2 clips
};

/// Mean pairwise L2 distances between length-standardized clips, within and
/// across digit classes.
inline DistanceReport distance_analysis(const TraceStore& store) {
    const auto& entries = store.entries();
    if (entries.empty()) throw TaskError("distance analysis: no clips");
    DistanceReport rep;
    rep.digits = manifest_digits(entries);
    std::map<int, std::size_t> pos;
    for (std::size_t i = 0; i < rep.digits.size(); ++i) pos[rep.digits[i]] = i;
    const std::size_t c = rep.digits.size();

    // accumulate sums and squared sums per digit pair
    std::vector<std::vector<double>> sum(c, std::vector<double>(c, 0.0));
    std::vector<std::vector<double>> sum2(c, std::vector<double>(c, 0.0));
    std::vector<std::vector<std::size_t>> count(c, std::vector<std::size_t>(c, 0));
    for (std::size_t i = 0; i < entries.size(); ++i) {
        for (std::size_t j = i + 1; j < entries.size(); ++j) {
            const double d = euclidean_distance(store.raw(i), store.raw(j));
            std::size_t a = pos.at(entries[i].digit);
            std::size_t b = pos.at(entries[j].digit);
            if (a > b) std::swap(a, b);
            sum[a][b] += d;
            sum2[a][b] += d * d;
            ++count[a][b];
        }
    }

    rep.pair_mean.assign(c, std::vector<double>(c, 0.0));
    for (std::size_t a = 0; a < c; ++a)
        for (std::size_t b = a; b < c; ++b) {
            const double mean = count[a][b] ? sum[a][b] / static_cast<double>(count[a][b]) : 0.0;
            rep.pair_mean[a][b] = rep.pair_mean[b][a] = mean;
        }

    rep.clip_counts.assign(c, 0);
    for (const auto& e : entries) ++rep.clip_counts[pos.at(e.digit)];
    rep.intra_mean.assign(c, 0.0);
    rep.intra_std.assign(c, 0.0);
    rep.inter_mean.assign(c, 0.0);
    rep.inter_std.assign(c, 0.0);
    rep.intra_defined.assign(c, 0);
    auto sample_std = [](double s, double s2, std::size_t n) {
        if (n < 2) return 0.0;
        const double mean = s / static_cast<double>(n);
        const double var = (s2 - static_cast<double>(n) * mean * mean) /
                           static_cast<double>(n - 1);
        return var > 0.0 ? std::sqrt(var) : 0.0;
    };
    for (std::size_t a = 0; a < c; ++a) {
        if (count[a][a] > 0) {
            rep.intra_defined[a] = 1;
            rep.intra_mean[a] = sum[a][a] / static_cast<double>(count[a][a]);
            rep.intra_std[a] = sample_std(sum[a][a], sum2[a][a], count[a][a]);
        }
        double s = 0.0, s2 = 0.0;
        std::size_t n = 0;
        for (std::size_t b = 0; b < c; ++b) {
            if (a == b) continue;
            const std::size_t lo = std::min(a, b), hi = std::max(a, b);
            s += sum[lo][hi];
            s2 += sum2[lo][hi];
            n += count[lo][hi];
        }
        if (n > 0) {
            rep.inter_mean[a] = s / static_cast<double>(n);
            rep.inter_std[a] = sample_std(s, s2, n);
        }
    }
    return rep;
}

inline std::vector<std::string> write_distance_report(const DistanceReport& rep,
                                                      const std::filesystem::path& out_dir) {
    CsvWriter matrix;
    {
        std::vector<std::string> head{"digit"};
        for (int d : rep.digits) head.push_back(std::to_string(d));
        matrix.header(head);
    }
    for (std::size_t a = 0; a < rep.digits.size(); ++a) {
        matrix.cell(rep.digits[a]);
        for (std::size_t b = 0; b < rep.digits.size(); ++b) matrix.cell(rep.pair_mean[a][b]);
        matrix.end_row();
    }
    matrix.save(out_dir / "fig2_matrix.csv");

    CsvWriter summary;
    summary.header({"digit", "clips", "intra_mean", "intra_std", "inter_mean", "inter_std",
                    "intra_defined"});
    for (std::size_t a = 0; a < rep.digits.size(); ++a) {
        summary.cell(rep.digits[a]);
        summary.cell(rep.clip_counts[a]);
        summary.cell(rep.intra_mean[a]);
        summary.cell(rep.intra_std[a]);
        summary.cell(rep.inter_mean[a]);
        summary.cell(rep.inter_std[a]);
        summary.cell(static_cast<int>(rep.intra_defined[a]));
        summary.end_row();
    }
    summary.save(out_dir / "fig2_summary.csv");
    return {"fig2_matrix.csv", "fig2_summary.csv"};
}

// ---------------------------------------------------------------------------
// single-parameter sweep of the conductance response
// ---------------------------------------------------------------------------

struct SweepPoint {
    double value = 0.0;
    std::vector<double> trace;
    double saturation_fraction = 0.0;
    double final_g = 0.0;
    double mean_g = 0.0;
};

struct SweepReport {
    std::string parameter;
    ClipRef probe;
    std::vector<SweepPoint> points;
};

/// Fraction of timesteps the readout spends in the top 2% of its own range.
inline double saturation_fraction(const std::vector<double>& trace) {
    if (trace.empty()) throw InvalidArgument("saturation_fraction: empty trace");
    const auto [lo_it, hi_it] = std::minmax_element(trace.begin(), trace.end());
    const double lo = *lo_it, hi = *hi_it;
    if (hi <= lo) return 1.0;  // flat response counts as pinned
    const double threshold = lo + 0.98 * (hi - lo);
    std::size_t n = 0;
    for (double v : trace)
        if (v >= threshold) ++n;
    return static_cast<double>(n) / static_cast<double>(trace.size());
}

/// Runs the probe clip once per grid value of one dynamics parameter
/// (kp, kd) or of the drive amplitude (vp), on a fixed topology.
inline SweepReport parameter_sweep(const DatasetManifest& manifest, const ExperimentConfig& cfg) {
    const std::string slug = sweep_parameter_slug(cfg.task.sweep_parameter);
    std::vector<double> grid =
        cfg.task.sweep_grid.empty() ? default_sweep_grid(slug) : cfg.task.sweep_grid;

    const ManifestEntry* probe_entry = nullptr;
    if (cfg.task.probe.speaker.empty()) {
        probe_entry = &manifest.entries.front();
    } else {
        for (const auto& e : manifest.entries) {
            if (e.speaker == cfg.task.probe.speaker && e.digit == cfg.task.probe.digit &&
                e.trial == cfg.task.probe.trial) {
                probe_entry = &e;
                break;
            }
        }
        if (!probe_entry)
            throw TaskError("sweep probe clip not found: " + cfg.task.probe.speaker + "/" +
                            std::to_string(cfg.task.probe.digit) + "/" +
                            std::to_string(cfg.task.probe.trial));
    }

    const AudioClip clip = read_wav(probe_entry->path);
    const NetworkTopology topo = assemble(cfg.reservoir.assembly);

    SweepReport rep;
    rep.parameter = slug;
    rep.probe = {probe_entry->speaker, probe_entry->digit, probe_entry->trial};
    rep.points.resize(grid.size());
    parallel_for(grid.size(), [&](std::size_t i) {
        ReservoirConfig rc = cfg.reservoir;
        if (slug == "kp") rc.dynamics.k_p = grid[i];
        else if (slug == "kd") rc.dynamics.k_d = grid[i];
        else rc.v_p = grid[i];
        const VoltageTrace drive = standardize_trace(clip, rc.timesteps, rc.v_p);
        auto trace = run_clip(drive, rep.probe, rc, &topo);
        SweepPoint pt;
        pt.value = grid[i];
        pt.saturation_fraction = saturation_fraction(trace.values);
        pt.final_g = trace.values.back();
        double acc = 0.0;
        for (double v : trace.values) acc += v;
        pt.mean_g = acc / static_cast<double>(trace.values.size());
        pt.trace = std::move(trace.values);
        rep.points[i] = std::move(pt);
    });
    return rep;
}

inline std::vector<std::string> write_sweep_report(const SweepReport& rep,
                                                   const std::filesystem::path& out_dir) {
    char buf[40];
    CsvWriter curves;
    {
        std::vector<std::string> head{"t"};
        for (const auto& pt : rep.points) {
            std::snprintf(buf, sizeof(buf), "%s_%g", rep.parameter.c_str(), pt.value);
            head.push_back(buf);
        }
        curves.header(head);
    }
    const std::size_t steps = rep.points.empty() ? 0 : rep.points.front().trace.size();
    for (std::size_t t = 0; t < steps; ++t) {
        curves.cell(t);
        for (const auto& pt : rep.points) curves.cell(pt.trace[t]);
        curves.end_row();
    }
    const std::string curve_name = "fig3_sweep_" + rep.parameter + ".csv";
    curves.save(out_dir / curve_name);

    CsvWriter sat;
    sat.header({rep.parameter, "saturation_fraction", "final_g_eff", "mean_g_eff"});
    for (const auto& pt : rep.points) {
        sat.cell(pt.value);
        sat.cell(pt.saturation_fraction);
        sat.cell(pt.final_g);
        sat.cell(pt.mean_g);
        sat.end_row();
    }
    const std::string sat_name = "fig3_saturation_" + rep.parameter + ".csv";
    sat.save(out_dir / sat_name);
    return {curve_name, sat_name};
}

// ---------------------------------------------------------------------------
// ten-class comparison: datasets x classifiers x feature sources
// ---------------------------------------------------------------------------

struct TenClassCell {
    std::string dataset;
    std::string classifier;
    std::string source;
    std::vector<double> accuracies;  ///< one per split repeat
    EvalReport first_eval;

    double mean_accuracy() const {
        double acc = 0.0;
        for (double a : accuracies) acc += a;
        return accuracies.empty() ? 0.0 : acc / static_cast<double>(accuracies.size());
    }
};

struct TenClassReport {
    std::vector<TenClassCell> cells;

    const TenClassCell& cell(const std::string& dataset, const std::string& clf,
                             const std::string& source) const {
        for (const auto& c : cells)
            if (c.dataset == dataset && c.classifier == clf && c.source == source) return c;
        throw TaskError("ten-class cell not found: " + dataset + "/" + clf + "/" + source);
    }
};

inline ClassifierModel train_for_config(const FeatureMatrix& fm, const ClassifierConfig& cc,
                                        const std::string& kind_name) {
    return train_classifier(fm, classifier_kind_from_name(kind_name), cc.logistic, cc.lda,
                            cc.svm);
}

/// Per dataset (one per speaker, plus the pooled multispeaker set when
/// several speakers are present), trains all three classifiers on raw and
/// nanowire features over split_repeats stratified splits. Split seeds depend
/// only on (dataset, repeat), so paired sources see identical splits.
inline TenClassReport ten_class_comparison(const DatasetManifest& manifest,
                                           const ExperimentConfig& cfg) {
    std::vector<std::string> speakers =
        cfg.task.speakers.empty() ? manifest_speakers(manifest) : cfg.task.speakers;
    std::vector<std::pair<std::string, std::set<std::string>>> datasets;
    for (const auto& sp : speakers) datasets.push_back({sp, {sp}});
    if (speakers.size() > 1)
        datasets.push_back({"multispeaker", {speakers.begin(), speakers.end()}});

    TenClassReport rep;
    for (std::size_t di = 0; di < datasets.size(); ++di) {
        auto entries = filter_entries(manifest, datasets[di].second);
        if (entries.empty())
            throw TaskError("ten-class: no clips for dataset " + datasets[di].first);
        TraceStore store(std::move(entries), cfg);
        const auto rows = all_rows(store);
        for (const std::string& source : {std::string("raw"), std::string("nanowire")}) {
            FeatureMatrix features = build_features(store, rows, cfg.task.subset_size, source);
            for (const std::string& clf : {std::string("lr"), std::string("lda"),
                                          std::string("svm")}) {
                TenClassCell cell;
                cell.dataset = datasets[di].first;
                cell.classifier = clf;
                cell.source = source;
                for (int r = 0; r < cfg.task.split_repeats; ++r) {
                    const std::uint64_t seed =
                        derive_seed(cfg.master_seed, "tenclass-split",
                                    di * 1024 + static_cast<std::uint64_t>(r));
                    auto [train, test] = split(features, cfg.task.test_fraction, seed);
                    auto model = train_for_config(train, cfg.classifier, clf);
                    auto eval = evaluate(model, test);
                    cell.accuracies.push_back(eval.accuracy);
                    if (r == 0) cell.first_eval = std::move(eval);
                }
                rep.cells.push_back(std::move(cell));
            }
        }
    }
    return rep;
}

inline std::vector<std::string> write_ten_class_report(const TenClassReport& rep,
                                                       const std::filesystem::path& out_dir) {
    std::vector<std::string> outputs;
    CsvWriter acc;
    acc.header({"dataset", "classifier", "source", "repeats", "mean_accuracy", "min_accuracy",
                "max_accuracy"});
    for (const auto& c : rep.cells) {
        acc.cell(c.dataset);
        acc.cell(c.classifier);
        acc.cell(c.source);
        acc.cell(static_cast<long long>(c.accuracies.size()));
        acc.cell(c.mean_accuracy());
        acc.cell(*std::min_element(c.accuracies.begin(), c.accuracies.end()));
        acc.cell(*std::max_element(c.accuracies.begin(), c.accuracies.end()));
        acc.end_row();
    }
    acc.save(out_dir / "fig4_accuracy.csv");
    outputs.push_back("fig4_accuracy.csv");

    for (const auto& c : rep.cells) {
        CsvWriter confusion;
        std::vector<std::string> head{"true\\pred"};
        for (int cls : c.first_eval.classes) head.push_back(std::to_string(cls));
        confusion.header(head);
        for (std::size_t i = 0; i < c.first_eval.classes.size(); ++i) {
            confusion.cell(c.first_eval.classes[i]);
            for (std::size_t j = 0; j < c.first_eval.classes.size(); ++j)
                confusion.cell(static_cast<long long>(c.first_eval.confusion[i][j]));
            confusion.end_row();
        }
        std::string name = "fig4_confusion_" + c.dataset + "_" + c.classifier;
        if (c.source != "nanowire") name += "_" + c.source;
        name += ".csv";
        confusion.save(out_dir / name);
        outputs.push_back(name);
    }

    CsvWriter pr;
    pr.header({"dataset", "classifier", "source", "class", "precision", "recall",
               "precision_defined", "recall_defined"});
    for (const auto& c : rep.cells) {
        for (std::size_t k = 0; k < c.first_eval.classes.size(); ++k) {
            pr.cell(c.dataset);
            pr.cell(c.classifier);
            pr.cell(c.source);
            pr.cell(c.first_eval.classes[k]);
            pr.cell(c.first_eval.precision[k]);
            pr.cell(c.first_eval.recall[k]);
            pr.cell(static_cast<int>(c.first_eval.precision_defined[k]));
            pr.cell(static_cast<int>(c.first_eval.recall_defined[k]));
            pr.end_row();
        }
    }
    pr.save(out_dir / "fig4_prec_recall.csv");
    outputs.push_back("fig4_prec_recall.csv");
    return outputs;
}

// ---------------------------------------------------------------------------
// reduced-class study over seeded digit combinations
// ---------------------------------------------------------------------------

struct ReducedClassRow {
    int class_count = 0;
    std::vector<std::vector<int>> combos;
    std::vector<double> raw_acc, nanowire_acc;  ///< one per combo

    static double mean(const std::vector<double>& v) {
        double acc = 0.0;
        for (double x : v) acc += x;
        return v.empty() ? 0.0 : acc / static_cast<double>(v.size());
    }
    static double sample_std(const std::vector<double>& v) {
        if (v.size() < 2) return 0.0;
        const double m = mean(v);
        double acc = 0.0;
        for (double x : v) acc += (x - m) * (x - m);
        return std::sqrt(acc / static_cast<double>(v.size() - 1));
    }
};

struct ReducedClassReport {
    std::vector<ReducedClassRow> rows;
};

/// Seeded sampling of distinct digit subsets of size k, without replacement
/// across combinations. Falls back to full enumeration when fewer than
/// `wanted` subsets exist.
inline std::vector<std::vector<int>> sample_digit_combinations(const std::vector<int>& digits,
                                                               int k, int wanted,
                                                               std::uint64_t seed) {
    if (k < 1 || static_cast<std::size_t>(k) > digits.size())
        throw InvalidArgument("sample_digit_combinations: bad subset size");
    double total = 1.0;
    for (int i = 0; i < k; ++i)
        total = total * static_cast<double>(digits.size() - i) / static_cast<double>(i + 1);
    std::set<std::vector<int>> seen;
    std::vector<std::vector<int>> out;
    if (total <= static_cast<double>(wanted) && total <= 4096.0) {
        // enumerate everything
        std::vector<int> idx(static_cast<std::size_t>(k));
        std::vector<int> combo;
        auto rec = [&](auto&& self, std::size_t start, std::size_t depth) -> void {
            if (depth == static_cast<std::size_t>(k)) {
                out.push_back(combo);
                return;
            }
            for (std::size_t i = start; i < digits.size(); ++i) {
                combo.push_back(digits[i]);
                self(self, i + 1, depth + 1);
                combo.pop_back();
            }
        };
        rec(rec, 0, 0);
        return out;
    }
    Rng rng(seed);
    std::vector<int> pool = digits;
    while (out.size() < static_cast<std::size_t>(wanted)) {
        rng.shuffle(pool);
        std::vector<int> combo(pool.begin(), pool.begin() + k);
        std::sort(combo.begin(), combo.end());
        if (seen.insert(combo).second) out.push_back(std::move(combo));
    }
    return out;
}

/// Accuracy as a function of class count: for each requested count, train on
/// seeded digit subsets (raw vs nanowire features, identical splits) and
/// aggregate over the combinations.
inline ReducedClassReport reduced_class_study(const DatasetManifest& manifest,
                                              const ExperimentConfig& cfg) {
    const std::string speaker = cfg.task.train_speaker.empty()
                                    ? manifest_speakers(manifest).front()
                                    : cfg.task.train_speaker;
    auto entries = filter_entries(manifest, {speaker});
    if (entries.empty()) throw TaskError("reduced-class: no clips for speaker " + speaker);
    TraceStore store(std::move(entries), cfg);
    const auto digits = manifest_digits(store.entries());

    std::map<int, std::vector<std::size_t>> rows_by_digit;
    for (std::size_t i = 0; i < store.entries().size(); ++i)
        rows_by_digit[store.entries()[i].digit].push_back(i);

    ReducedClassReport rep;
    for (int k : cfg.task.class_counts) {
        if (static_cast<std::size_t>(k) > digits.size())
            throw TaskError("reduced-class: class count " + std::to_string(k) +
                            " exceeds available digits (" + std::to_string(digits.size()) + ")");
        ReducedClassRow row;
        row.class_count = k;
        row.combos = sample_digit_combinations(
            digits, k, cfg.task.combinations,
            derive_seed(cfg.master_seed, "reduced-combos", static_cast<std::uint64_t>(k)));
        for (std::size_t ci = 0; ci < row.combos.size(); ++ci) {
            std::vector<std::size_t> rows;
            for (int d : row.combos[ci])
                for (std::size_t r : rows_by_digit.at(d)) rows.push_back(r);
            std::sort(rows.begin(), rows.end());
            const std::uint64_t split_seed =
                derive_seed(cfg.master_seed, "reduced-split",
                            static_cast<std::uint64_t>(k) * 4096 + ci);
            for (const std::string& source : {std::string("raw"), std::string("nanowire")}) {
                FeatureMatrix fm = build_features(store, rows, cfg.task.subset_size, source);
                auto [train, test] = split(fm, cfg.task.test_fraction, split_seed);
                auto model = train_for_config(train, cfg.classifier,
                                              classifier_kind_name(cfg.classifier.kind));
                auto eval = evaluate(model, test);
                (source == "raw" ? row.raw_acc : row.nanowire_acc).push_back(eval.accuracy);
            }
        }
        rep.rows.push_back(std::move(row));
    }
    return rep;
}

inline std::vector<std::string> write_reduced_class_report(const ReducedClassReport& rep,
                                                           const std::filesystem::path& out_dir) {
    CsvWriter table;
    table.header({"class_count", "combinations", "raw_mean", "raw_std", "nanowire_mean",
                  "nanowire_std"});
    for (const auto& row : rep.rows) {
        table.cell(row.class_count);
        table.cell(static_cast<long long>(row.combos.size()));
        table.cell(ReducedClassRow::mean(row.raw_acc));
        table.cell(ReducedClassRow::sample_std(row.raw_acc));
        table.cell(ReducedClassRow::mean(row.nanowire_acc));
        table.cell(ReducedClassRow::sample_std(row.nanowire_acc));
        table.end_row();
    }
    table.save(out_dir / "table1.csv");
    return {"table1.csv"};
}

// ---------------------------------------------------------------------------
// subsample-size benchmark: accuracy and training cost vs feature count
// ---------------------------------------------------------------------------

struct BenchPoint {
    std::size_t subset_size = 0;
    double raw_accuracy = 0.0, nanowire_accuracy = 0.0;
    double raw_train_s = 0.0, nanowire_train_s = 0.0;  ///< median of time_repeats
};

struct BenchReport {
    std::vector<BenchPoint> points;

    const BenchPoint& at(std::size_t k) const {
        for (const auto& p : points)
            if (p.subset_size == k) return p;
        throw TaskError("bench point not found for subset size " + std::to_string(k));
    }
};

/// Trains the configured classifier at every subset size in the grid, on one
/// shared stratified split, and reports accuracy plus the median wall-clock
/// training time over time_repeats repetitions.
inline BenchReport subsample_bench(const DatasetManifest& manifest, const ExperimentConfig& cfg) {
    std::vector<std::string> speakers =
        cfg.task.speakers.empty() ? manifest_speakers(manifest) : cfg.task.speakers;
    auto entries = filter_entries(manifest, {speakers.begin(), speakers.end()});
    if (entries.empty()) throw TaskError("bench: no clips selected");
    TraceStore store(std::move(entries), cfg);
    const auto rows = all_rows(store);
    const std::uint64_t split_seed = derive_seed(cfg.master_seed, "bench-split");

    BenchReport rep;
    for (std::size_t k : cfg.task.subset_sizes) {
        if (k > cfg.reservoir.timesteps)
            throw TaskError("bench: subset size " + std::to_string(k) +
                            " exceeds trace length " + std::to_string(cfg.reservoir.timesteps));
        BenchPoint pt;
        pt.subset_size = k;
        for (const std::string& source : {std::string("raw"), std::string("nanowire")}) {
            FeatureMatrix fm = build_features(store, rows, k, source);
            auto [train, test] = split(fm, cfg.task.test_fraction, split_seed);
            std::vector<double> times;
            ClassifierModel model;
            for (int r = 0; r < cfg.task.time_repeats; ++r) {
                model = train_for_config(train, cfg.classifier,
                                         classifier_kind_name(cfg.classifier.kind));
                times.push_back(model.train_time_s);
            }
            std::sort(times.begin(), times.end());
            const double median = times[times.size() / 2];
            const auto eval = evaluate(model, test);
            if (source == "raw") {
                pt.raw_accuracy = eval.accuracy;
                pt.raw_train_s = median;
            } else {
                pt.nanowire_accuracy = eval.accuracy;
                pt.nanowire_train_s = median;
            }
        }
        rep.points.push_back(pt);
    }
    return rep;
}

inline std::vector<std::string> write_bench_report(const BenchReport& rep,
                                                   const std::filesystem::path& out_dir) {
    CsvWriter curve;
    curve.header({"subset_size", "raw_accuracy", "nanowire_accuracy", "raw_train_s",
                  "nanowire_train_s"});
    for (const auto& p : rep.points) {
        curve.cell(p.subset_size);
        curve.cell(p.raw_accuracy);
        curve.cell(p.nanowire_accuracy);
        curve.cell(p.raw_train_s);
        curve.cell(p.nanowire_train_s);
        curve.end_row();
    }
    curve.save(out_dir / "fig5_curve.csv");
    return {"fig5_curve.csv"};
}

// ---------------------------------------------------------------------------
// cross-speaker generalization over binary digit pairs
// ---------------------------------------------------------------------------

struct SpeakerGenPair {
    int digit_a = 0, digit_b = 0;
    std::map<std::string, double> raw_accuracy;       ///< per test speaker
    std::map<std::string, double> nanowire_accuracy;  ///< per test speaker
};

struct SpeakerGenReport {
    std::string train_speaker;
    std::vector<std::string> test_speakers;
    std::vector<SpeakerGenPair> pairs;

    double mean_accuracy(const std::string& source) const {
        double acc = 0.0;
        std::size_t n = 0;
        for (const auto& p : pairs) {
            const auto& m = source == "raw" ? p.raw_accuracy : p.nanowire_accuracy;
            for (const auto& [sp, a] : m) {
                acc += a;
                ++n;
            }
        }
        return n ? acc / static_cast<double>(n) : 0.0;
    }
};

/// Trains binary classifiers on every digit pair of the train speaker and
/// evaluates them on the other speakers' clips. Per-digit trial subsets are
/// seeded when train_trials/test_trials limit the pool.
inline SpeakerGenReport speaker_generalization(const DatasetManifest& manifest,
                                               const ExperimentConfig& cfg) {
    const auto speakers = manifest_speakers(manifest);
    const std::string train_speaker =
        cfg.task.train_speaker.empty() ? speakers.front() : cfg.task.train_speaker;
    std::vector<std::string> test_speakers = cfg.task.test_speakers;
    if (test_speakers.empty()) {
        for (const auto& sp : speakers)
            if (sp != train_speaker) test_speakers.push_back(sp);
    }
    if (test_speakers.empty())
        throw TaskError("speaker generalization: no test speakers besides " + train_speaker);

    std::set<std::string> wanted{train_speaker};
    wanted.insert(test_speakers.begin(), test_speakers.end());
    TraceStore store(filter_entries(manifest, wanted), cfg);

    // rows grouped by (speaker, digit), trials already sorted via manifest order
    std::map<std::pair<std::string, int>, std::vector<std::size_t>> groups;
    for (std::size_t i = 0; i < store.entries().size(); ++i) {
        const auto& e = store.entries()[i];
        groups[{e.speaker, e.digit}].push_back(i);
    }
    auto pick = [&](const std::string& speaker, int digit, int limit, std::uint64_t seed) {
        auto it = groups.find({speaker, digit});
        if (it == groups.end())
            throw TaskError("speaker generalization: no clips for " + speaker + " digit " +
                            std::to_string(digit));
        std::vector<std::size_t> rows = it->second;
        if (limit > 0) {
            if (rows.size() < static_cast<std::size_t>(limit))
                throw InsufficientData("speaker generalization: " + speaker + " digit " +
                                       std::to_string(digit) + " has " +
                                       std::to_string(rows.size()) + " clips, need " +
                                       std::to_string(limit));
            Rng rng(seed);
            rng.shuffle(rows);
            rows.resize(static_cast<std::size_t>(limit));
            std::sort(rows.begin(), rows.end());
        }
        return rows;
    };

    const auto digits = manifest_digits(filter_entries(manifest, {train_speaker}));
    SpeakerGenReport rep;
    rep.train_speaker = train_speaker;
    rep.test_speakers = test_speakers;
    std::uint64_t pair_index = 0;
    for (std::size_t a = 0; a < digits.size(); ++a) {
        for (std::size_t b = a + 1; b < digits.size(); ++b, ++pair_index) {
            SpeakerGenPair pair;
            pair.digit_a = digits[a];
            pair.digit_b = digits[b];
            std::vector<std::size_t> train_rows;
            for (int d : {digits[a], digits[b]}) {
                auto rows = pick(train_speaker, d, cfg.task.train_trials,
                                 derive_seed(cfg.master_seed, "gen-train",
                                             pair_index * 16 + static_cast<std::uint64_t>(d)));
                train_rows.insert(train_rows.end(), rows.begin(), rows.end());
            }
            std::sort(train_rows.begin(), train_rows.end());
            for (const std::string& source : {std::string("raw"), std::string("nanowire")}) {
                FeatureMatrix train_fm =
                    build_features(store, train_rows, cfg.task.subset_size, source);
                auto model = train_for_config(train_fm, cfg.classifier,
                                              classifier_kind_name(cfg.classifier.kind));
                for (const auto& sp : test_speakers) {
                    std::vector<std::size_t> test_rows;
                    for (int d : {digits[a], digits[b]}) {
                        auto rows = pick(sp, d, cfg.task.test_trials,
                                         derive_seed(cfg.master_seed, "gen-test",
                                                     pair_index * 16 +
                                                         static_cast<std::uint64_t>(d)));
                        test_rows.insert(test_rows.end(), rows.begin(), rows.end());
                    }
                    std::sort(test_rows.begin(), test_rows.end());
                    FeatureMatrix test_fm =
                        build_features(store, test_rows, cfg.task.subset_size, source);
                    const auto eval = evaluate(model, test_fm);
                    (source == "raw" ? pair.raw_accuracy
                                     : pair.nanowire_accuracy)[sp] = eval.accuracy;
                }
            }
            rep.pairs.push_back(std::move(pair));
        }
    }
    return rep;
}

inline std::vector<std::string> write_speaker_gen_report(const SpeakerGenReport& rep,
                                                         const std::filesystem::path& out_dir) {
    std::vector<std::string> outputs;
    for (const auto& sp : rep.test_speakers) {
        CsvWriter csv;
        csv.header({"digit_a", "digit_b", "raw_accuracy", "nanowire_accuracy"});
        for (const auto& p : rep.pairs) {
            csv.cell(p.digit_a);
            csv.cell(p.digit_b);
            csv.cell(p.raw_accuracy.at(sp));
            csv.cell(p.nanowire_accuracy.at(sp));
            csv.end_row();
        }
        const std::string name = "fig6_" + sp + ".csv";
        csv.save(out_dir / name);
        outputs.push_back(name);
    }
    return outputs;
}

}  // namespace nanores
