#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <map>
#include <set>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "nanores/config.hpp"
#include "nanores/experiments.hpp"
#include "nanores/synth.hpp"
#include "support.hpp"

using namespace nanores;
using Catch::Approx;
using Catch::Matchers::ContainsSubstring;
using testsupport::TempDir;
using testsupport::wav_bytes;
using testsupport::write_bytes;

namespace {

namespace fs = std::filesystem;

/// Shared corpus: 2 speakers x 3 digits x 4 trials of synthetic clips, a
/// small percolating network, and the simulated traces saved as a pack.
/// Built once per process; tasks below read the pack instead of re-simulating.
struct Corpus {
    TempDir dir{"experiments"};
    fs::path corpus_dir, pack_dir;
    DatasetManifest manifest;
    ExperimentConfig cfg_sim;  ///< simulates on demand
    ExperimentConfig cfg;      ///< reads the trace pack
    std::vector<ConductanceTrace> traces;  ///< manifest order

    Corpus() {
        SynthConfig synth;
        synth.speakers = {"ann", "bob"};
        synth.digits = 3;
        synth.trials = 4;
        synth.base_duration = 0.25;
        synth.seed = 11;
        corpus_dir = dir.path() / "corpus";
        generate_corpus(synth, corpus_dir);
        manifest = build_manifest(corpus_dir);

        cfg_sim.apply_master_seed(5);
        auto& rc = cfg_sim.reservoir;
        rc.assembly.n_wires = 60;
        rc.assembly.substrate_side = 40.0 * std::sqrt(60.0 / 8.0);
        rc.timesteps = 32;
        cfg_sim.task.subset_size = 8;
        cfg_sim.task.test_fraction = 0.25;
        cfg_sim.task.split_repeats = 2;
        cfg_sim.task.time_repeats = 1;
        cfg_sim.task.combinations = 3;
        cfg_sim.task.class_counts = {2, 3};
        cfg_sim.task.subset_sizes = {1, 2, 4, 8};
        validate_experiment_config(cfg_sim);

        auto result = run_dataset(manifest, rc);
        if (!result.errors.empty())
            throw std::runtime_error("corpus simulation failed: " + result.errors.front());
        traces = std::move(result.traces);
        pack_dir = dir.path() / "pack";
        save_trace_pack(traces, pack_dir);
        cfg = cfg_sim;
        cfg.traces_dir = pack_dir.string();
    }
};

const Corpus& corpus() {
    static Corpus c;
    return c;
}

/// Five clips whose standardized traces are exact dyadic vectors; peak sample
/// 16384 maps to 0.5 and normalization doubles it to exactly 1.0.
struct HandClips {
    TempDir dir{"handclips"};
    std::vector<ManifestEntry> entries;
    ExperimentConfig cfg;

    HandClips() {
        const std::vector<std::pair<std::vector<std::int16_t>, std::pair<int, int>>> clips = {
            {{16384, 0, 0, 0}, {1, 0}},      // {1,0,0,0}
            {{0, 16384, 0, 0}, {1, 1}},      // {0,1,0,0}
            {{0, 0, 16384, 0}, {2, 0}},      // {0,0,1,0}
            {{16384, 16384, 16384, 16384}, {2, 1}},  // {1,1,1,1}
            {{0, 0, 0, 16384}, {3, 0}},      // {0,0,0,1}
        };
        int i = 0;
        for (const auto& [samples, ref] : clips) {
            const fs::path p = dir.path() / ("clip" + std::to_string(i++) + ".wav");
            write_bytes(p, wav_bytes(samples));
            ManifestEntry e;
            e.path = p.string();
            e.speaker = "h";
            e.digit = ref.first;
            e.trial = ref.second;
            entries.push_back(e);
        }
        cfg.reservoir.timesteps = 4;
    }
};

const HandClips& hand_clips() {
    static HandClips h;
    return h;
}

const std::vector<std::vector<double>> kHandTraces = {
    {1.0, 0.0, 0.0, 0.0}, {0.0, 1.0, 0.0, 0.0}, {0.0, 0.0, 1.0, 0.0},
    {1.0, 1.0, 1.0, 1.0}, {0.0, 0.0, 0.0, 1.0},
};

double mean_of(const std::vector<double>& v) {
    double acc = 0.0;
    for (double x : v) acc += x;
    return v.empty() ? 0.0 : acc / static_cast<double>(v.size());
}

double sample_std_of(const std::vector<double>& v) {
    if (v.size() < 2) return 0.0;
    const double m = mean_of(v);
    double acc = 0.0;
    for (double x : v) acc += (x - m) * (x - m);
    return std::sqrt(acc / static_cast<double>(v.size() - 1));
}

}  // namespace

TEST_CASE("euclidean distance over traces") {
    REQUIRE(euclidean_distance({0.0, 0.0}, {3.0, 4.0}) == 5.0);
    REQUIRE(euclidean_distance({1.0, 2.0, 3.0}, {1.0, 2.0, 3.0}) == 0.0);
    REQUIRE(euclidean_distance({}, {}) == 0.0);
    REQUIRE_THROWS_AS(euclidean_distance({1.0}, {1.0, 2.0}), ShapeError);
}

TEST_CASE("saturation fraction counts samples in the top 2% of the range") {
    // range [0, 1], threshold 0.98: two of five samples qualify
    REQUIRE(saturation_fraction({0.0, 1.0, 0.99, 0.97, 0.5}) == Approx(0.4).margin(1e-15));
    // invariant under affine rescaling of the trace
    REQUIRE(saturation_fraction({0.0, 10.0, 9.9, 9.7, 5.0}) == Approx(0.4).margin(1e-15));

    // ramp 0..99: threshold 97.02, hit by {98, 99}
    std::vector<double> ramp(100);
    for (int i = 0; i < 100; ++i) ramp[i] = i;
    REQUIRE(saturation_fraction(ramp) == Approx(0.02).margin(1e-15));

    // a flat trace counts as fully pinned
    REQUIRE(saturation_fraction({0.5, 0.5, 0.5}) == 1.0);
    REQUIRE(saturation_fraction({2.0}) == 1.0);

    REQUIRE_THROWS_AS(saturation_fraction({}), InvalidArgument);
}

TEST_CASE("digit combination sampling") {
    SECTION("full enumeration when few subsets exist") {
        const auto combos = sample_digit_combinations({1, 2, 3, 4}, 2, 10, 99);
        const std::vector<std::vector<int>> expected = {{1, 2}, {1, 3}, {1, 4},
                                                        {2, 3}, {2, 4}, {3, 4}};
        REQUIRE(combos == expected);
    }
    SECTION("enumeration at the exact boundary") {
        std::vector<int> digits(10);
        for (int i = 0; i < 10; ++i) digits[i] = i;
        const auto combos = sample_digit_combinations(digits, 2, 45, 1);
        REQUIRE(combos.size() == 45);
        REQUIRE(combos.front() == std::vector<int>{0, 1});
        REQUIRE(combos.back() == std::vector<int>{8, 9});
    }
    SECTION("seeded sampling without repeats") {
        std::vector<int> digits(10);
        for (int i = 0; i < 10; ++i) digits[i] = i;
        const auto combos = sample_digit_combinations(digits, 2, 33, 7);
        REQUIRE(combos.size() == 33);
        std::set<std::vector<int>> unique(combos.begin(), combos.end());
        REQUIRE(unique.size() == 33);
        for (const auto& c : combos) {
            REQUIRE(c.size() == 2);
            REQUIRE(c[0] < c[1]);
            REQUIRE(c[0] >= 0);
            REQUIRE(c[1] <= 9);
        }
        REQUIRE(sample_digit_combinations(digits, 2, 33, 7) == combos);
        REQUIRE(sample_digit_combinations(digits, 2, 33, 8) != combos);

        const auto triples = sample_digit_combinations(digits, 3, 20, 7);
        REQUIRE(triples.size() == 20);
        REQUIRE(std::set<std::vector<int>>(triples.begin(), triples.end()).size() == 20);
    }
    SECTION("whole set") {
        const auto combos = sample_digit_combinations({4, 2, 7}, 3, 1, 1);
        REQUIRE(combos == std::vector<std::vector<int>>{{4, 2, 7}});
    }
    SECTION("bad subset size") {
        REQUIRE_THROWS_AS(sample_digit_combinations({1, 2}, 0, 1, 1), InvalidArgument);
        REQUIRE_THROWS_AS(sample_digit_combinations({1, 2}, 3, 1, 1), InvalidArgument);
    }
}

TEST_CASE("trace store standardizes raw drives exactly") {
    const auto& h = hand_clips();
    TraceStore store(h.entries, h.cfg, false);
    REQUIRE(store.entries().size() == 5);
    for (std::size_t i = 0; i < 5; ++i) {
        REQUIRE(store.raw(i) == kHandTraces[i]);
        REQUIRE(store.trace(i, "raw") == kHandTraces[i]);
    }
    REQUIRE_THROWS_AS(store.trace(0, "spectral"), InvalidArgument);
    // nanowire traces were not requested
    REQUIRE_THROWS_AS(store.nanowire(0), std::out_of_range);

    REQUIRE(all_rows(store) == std::vector<std::size_t>{0, 1, 2, 3, 4});
}

TEST_CASE("feature matrices subsample the stored traces") {
    const auto& h = hand_clips();
    TraceStore store(h.entries, h.cfg, false);
    FeatureMatrix fm = build_features(store, {0, 3}, 2, "raw");
    REQUIRE(fm.n == 2);
    REQUIRE(fm.d == 2);
    REQUIRE(fm.subset_size == 2);
    REQUIRE(fm.source == "raw");
    // subsample keeps indices {0, 2} of each length-4 trace
    REQUIRE(fm.data == std::vector<double>{1.0, 0.0, 1.0, 1.0});
    REQUIRE(fm.labels == std::vector<int>{1, 2});

    REQUIRE_THROWS_AS(build_features(store, {0}, 8, "raw"), InvalidArgument);
}

TEST_CASE("distance analysis matches a hand-computed pair table") {
    const auto& h = hand_clips();
    TraceStore store(h.entries, h.cfg, false);
    const DistanceReport rep = distance_analysis(store);

    REQUIRE(rep.digits == std::vector<int>{1, 2, 3});
    REQUIRE(rep.clip_counts == std::vector<std::size_t>{2, 2, 1});

    // all ten pairwise distances, worked out from the dyadic traces
    const double r2 = std::sqrt(2.0), r3 = std::sqrt(3.0);
    struct Pair {
        int da, db;
        double dist;
    };
    const std::vector<Pair> pairs = {
        {1, 1, r2}, {1, 2, r2}, {1, 2, r3}, {1, 3, r2}, {1, 2, r2},
        {1, 2, r3}, {1, 3, r2}, {2, 2, r3}, {2, 3, r2}, {2, 3, r3},
    };

    std::map<std::pair<int, int>, std::vector<double>> by_cell;
    for (const auto& p : pairs)
        by_cell[{std::min(p.da, p.db), std::max(p.da, p.db)}].push_back(p.dist);
    const std::vector<int> digits = {1, 2, 3};
    for (std::size_t a = 0; a < 3; ++a) {
        for (std::size_t b = a; b < 3; ++b) {
            const auto it = by_cell.find({digits[a], digits[b]});
            const double expected = it == by_cell.end() ? 0.0 : mean_of(it->second);
            REQUIRE(rep.pair_mean[a][b] == Approx(expected).margin(1e-12));
            REQUIRE(rep.pair_mean[a][b] == rep.pair_mean[b][a]);
        }
    }

    for (std::size_t a = 0; a < 3; ++a) {
        std::vector<double> intra, inter;
        for (const auto& p : pairs) {
            if (p.da == digits[a] && p.db == digits[a]) intra.push_back(p.dist);
            else if (p.da == digits[a] || p.db == digits[a]) inter.push_back(p.dist);
        }
        REQUIRE(rep.intra_defined[a] == (intra.empty() ? 0 : 1));
        REQUIRE(rep.intra_mean[a] == Approx(mean_of(intra)).margin(1e-12));
        REQUIRE(rep.intra_std[a] == Approx(sample_std_of(intra)).margin(1e-12));
        REQUIRE(rep.inter_mean[a] == Approx(mean_of(inter)).margin(1e-12));
        REQUIRE(rep.inter_std[a] == Approx(sample_std_of(inter)).margin(1e-12));
    }

    TempDir out("distreport");
    const auto names = write_distance_report(rep, out.path() / "a");
    REQUIRE(names == std::vector<std::string>{"fig2_matrix.csv", "fig2_summary.csv"});
    const std::string matrix = read_file(out.path() / "a" / "fig2_matrix.csv");
    REQUIRE(matrix.substr(0, matrix.find('\n')) == "digit,1,2,3");
    const std::string summary = read_file(out.path() / "a" / "fig2_summary.csv");
    REQUIRE(std::count(summary.begin(), summary.end(), '\n') == 4);

    write_distance_report(rep, out.path() / "b");
    REQUIRE(read_file(out.path() / "b" / "fig2_matrix.csv") == matrix);
    REQUIRE(read_file(out.path() / "b" / "fig2_summary.csv") == summary);
}

TEST_CASE("distance analysis rejects an empty store") {
    ExperimentConfig cfg;
    TraceStore store({}, cfg, false);
    REQUIRE_THROWS_AS(distance_analysis(store), TaskError);
}

TEST_CASE("trace store reads packs back bit-identically") {
    const auto& c = corpus();
    TraceStore store(c.manifest.entries, c.cfg);
    REQUIRE(store.entries().size() == c.traces.size());
    for (std::size_t i = 0; i < c.traces.size(); ++i) {
        REQUIRE(store.nanowire(i) == c.traces[i].values);
        REQUIRE(store.trace(i, "nanowire") == c.traces[i].values);
        REQUIRE(store.raw(i) ==
                standardize_trace(read_wav(c.manifest.entries[i].path), 32, 1.0).values);
    }
}

TEST_CASE("trace store validates packs against the requested clips") {
    const auto& c = corpus();

    auto truncated = c.traces;
    truncated.pop_back();
    const fs::path short_pack = c.dir.path() / "pack_short";
    save_trace_pack(truncated, short_pack);
    ExperimentConfig cfg = c.cfg;
    cfg.traces_dir = short_pack.string();
    REQUIRE_THROWS_MATCHES(TraceStore(c.manifest.entries, cfg), TaskError,
                           Catch::Matchers::MessageMatches(ContainsSubstring("missing clip")));

    ExperimentConfig wrong_len = c.cfg;
    wrong_len.reservoir.timesteps = 16;
    REQUIRE_THROWS_MATCHES(TraceStore(c.manifest.entries, wrong_len), TaskError,
                           Catch::Matchers::MessageMatches(ContainsSubstring("config wants 16")));
}

TEST_CASE("manifest slicing helpers") {
    const auto& c = corpus();
    REQUIRE(manifest_speakers(c.manifest) == std::vector<std::string>{"ann", "bob"});
    REQUIRE(manifest_digits(c.manifest.entries) == std::vector<int>{0, 1, 2});
    REQUIRE(filter_entries(c.manifest, {"ann"}).size() == 12);
    REQUIRE(filter_entries(c.manifest, {}, {1}).size() == 8);
    REQUIRE(filter_entries(c.manifest, {"bob"}, {0, 2}).size() == 8);
    REQUIRE(filter_entries(c.manifest).size() == 24);
}

TEST_CASE("parameter sweep reproduces direct clip runs") {
    const auto& c = corpus();
    ExperimentConfig cfg = c.cfg;
    cfg.task.sweep_parameter = "k_p";  // accepts the underscored alias
    cfg.task.sweep_grid = {0.001, 0.1};
    const SweepReport rep = parameter_sweep(c.manifest, cfg);

    REQUIRE(rep.parameter == "kp");
    // default probe: first manifest entry
    const auto& first = c.manifest.entries.front();
    REQUIRE(rep.probe.speaker == first.speaker);
    REQUIRE(rep.probe.digit == first.digit);
    REQUIRE(rep.probe.trial == first.trial);
    REQUIRE(rep.points.size() == 2);

    const AudioClip clip = read_wav(first.path);
    const NetworkTopology topo = assemble(cfg.reservoir.assembly);
    for (std::size_t i = 0; i < rep.points.size(); ++i) {
        const auto& pt = rep.points[i];
        REQUIRE(pt.value == cfg.task.sweep_grid[i]);
        ReservoirConfig rc = cfg.reservoir;
        rc.dynamics.k_p = pt.value;
        const VoltageTrace drive = standardize_trace(clip, rc.timesteps, rc.v_p);
        const auto direct = run_clip(drive, rep.probe, rc, &topo);
        REQUIRE(pt.trace == direct.values);
        REQUIRE(pt.final_g == direct.values.back());
        REQUIRE(pt.saturation_fraction == saturation_fraction(direct.values));
        double acc = 0.0;
        for (double v : direct.values) acc += v;
        REQUIRE(pt.mean_g == acc / static_cast<double>(direct.values.size()));
    }
    // the two rate settings produce genuinely different responses
    REQUIRE(rep.points[0].trace != rep.points[1].trace);

    TempDir out("sweepreport");
    const auto names = write_sweep_report(rep, out.path() / "a");
    REQUIRE(names == std::vector<std::string>{"fig3_sweep_kp.csv", "fig3_saturation_kp.csv"});
    const std::string curves = read_file(out.path() / "a" / "fig3_sweep_kp.csv");
    REQUIRE(curves.substr(0, curves.find('\n')) == "t,kp_0.001,kp_0.1");
    REQUIRE(std::count(curves.begin(), curves.end(), '\n') == 33);  // header + 32 steps
    write_sweep_report(rep, out.path() / "b");
    REQUIRE(read_file(out.path() / "b" / "fig3_sweep_kp.csv") == curves);
    REQUIRE(read_file(out.path() / "b" / "fig3_saturation_kp.csv") ==
            read_file(out.path() / "a" / "fig3_saturation_kp.csv"));
}

TEST_CASE("parameter sweep drives the amplitude grid through standardization") {
    const auto& c = corpus();
    ExperimentConfig cfg = c.cfg;
    cfg.task.sweep_parameter = "vp";
    cfg.task.sweep_grid = {0.5, 2.0};
    const SweepReport rep = parameter_sweep(c.manifest, cfg);
    REQUIRE(rep.parameter == "vp");
    REQUIRE(rep.points.size() == 2);

    const AudioClip clip = read_wav(c.manifest.entries.front().path);
    const NetworkTopology topo = assemble(cfg.reservoir.assembly);
    for (const auto& pt : rep.points) {
        ReservoirConfig rc = cfg.reservoir;
        rc.v_p = pt.value;
        const VoltageTrace drive = standardize_trace(clip, rc.timesteps, rc.v_p);
        const auto direct = run_clip(drive, rep.probe, rc, &topo);
        REQUIRE(pt.trace == direct.values);
    }
    REQUIRE(rep.points[0].trace != rep.points[1].trace);
}

TEST_CASE("parameter sweep probe selection") {
    const auto& c = corpus();
    ExperimentConfig cfg = c.cfg;
    cfg.task.sweep_grid = {0.001};
    cfg.task.probe = {"bob", 2, 3};
    const SweepReport rep = parameter_sweep(c.manifest, cfg);
    REQUIRE(rep.probe.speaker == "bob");
    REQUIRE(rep.probe.digit == 2);
    REQUIRE(rep.probe.trial == 3);

    const ManifestEntry* entry = nullptr;
    for (const auto& e : c.manifest.entries)
        if (e.speaker == "bob" && e.digit == 2 && e.trial == 3) entry = &e;
    REQUIRE(entry != nullptr);
    ReservoirConfig rc = cfg.reservoir;
    rc.dynamics.k_p = 0.001;
    const NetworkTopology topo = assemble(cfg.reservoir.assembly);
    const VoltageTrace drive = standardize_trace(read_wav(entry->path), rc.timesteps, rc.v_p);
    REQUIRE(rep.points.front().trace == run_clip(drive, rep.probe, rc, &topo).values);

    cfg.task.probe = {"bob", 7, 0};
    REQUIRE_THROWS_MATCHES(parameter_sweep(c.manifest, cfg), TaskError,
                           Catch::Matchers::MessageMatches(ContainsSubstring("not found")));
}

TEST_CASE("parameter sweep falls back to the default grid") {
    const auto& c = corpus();
    ExperimentConfig cfg = c.cfg;
    cfg.task.sweep_parameter = "kd";
    cfg.task.sweep_grid.clear();
    const SweepReport rep = parameter_sweep(c.manifest, cfg);
    REQUIRE(rep.points.size() == 5);
    const std::vector<double> expected = {0.3, 0.35, 0.4, 0.45, 0.5};
    for (std::size_t i = 0; i < 5; ++i) REQUIRE(rep.points[i].value == expected[i]);
}

TEST_CASE("ten-class comparison covers every dataset, source and classifier") {
    const auto& c = corpus();
    const TenClassReport rep = ten_class_comparison(c.manifest, c.cfg);

    const std::vector<std::string> datasets = {"ann", "bob", "multispeaker"};
    const std::vector<std::string> sources = {"raw", "nanowire"};
    const std::vector<std::string> classifiers = {"lr", "lda", "svm"};

    // 2 speakers + pooled set, 2 sources, 3 classifiers
    REQUIRE(rep.cells.size() == 18);
    for (const std::string& ds : datasets) {
        for (const std::string& src : sources) {
            for (const std::string& clf : classifiers) {
                const auto& cell = rep.cell(ds, clf, src);
                REQUIRE(cell.accuracies.size() == 2);  // split_repeats
                for (double a : cell.accuracies) {
                    REQUIRE(a >= 0.0);
                    REQUIRE(a <= 1.0);
                }
                REQUIRE(cell.mean_accuracy() ==
                        Approx(mean_of(cell.accuracies)).margin(1e-15));
                REQUIRE(cell.first_eval.classes == std::vector<int>{0, 1, 2});
            }
        }
    }
    REQUIRE_THROWS_AS(rep.cell("carol", "lr", "raw"), TaskError);

    // split seeds depend only on (dataset, repeat): every cell of a dataset
    // sees the same test rows, so the confusion row sums agree
    for (const std::string& ds : datasets) {
        std::vector<std::size_t> reference;
        for (const std::string& src : sources) {
            for (const std::string& clf : classifiers) {
                const auto& ev = rep.cell(ds, clf, src).first_eval;
                std::vector<std::size_t> row_sums;
                for (const auto& row : ev.confusion) {
                    std::size_t s = 0;
                    for (std::size_t v : row) s += v;
                    row_sums.push_back(s);
                }
                if (reference.empty()) reference = row_sums;
                REQUIRE(row_sums == reference);
            }
        }
    }

    // bit-identical on a second run
    const TenClassReport again = ten_class_comparison(c.manifest, c.cfg);
    REQUIRE(again.cells.size() == rep.cells.size());
    for (std::size_t i = 0; i < rep.cells.size(); ++i) {
        REQUIRE(again.cells[i].dataset == rep.cells[i].dataset);
        REQUIRE(again.cells[i].classifier == rep.cells[i].classifier);
        REQUIRE(again.cells[i].source == rep.cells[i].source);
        REQUIRE(again.cells[i].accuracies == rep.cells[i].accuracies);
    }

    TempDir out("tenclass");
    const auto names = write_ten_class_report(rep, out.path() / "a");
    REQUIRE(names.size() == 1 + 18 + 1);  // accuracy + per-cell confusions + prec/recall
    REQUIRE(names.front() == "fig4_accuracy.csv");
    REQUIRE(names.back() == "fig4_prec_recall.csv");
    for (const auto& n : names) REQUIRE(fs::exists(out.path() / "a" / n));
    write_ten_class_report(rep, out.path() / "b");
    for (const auto& n : names)
        REQUIRE(read_file(out.path() / "a" / n) == read_file(out.path() / "b" / n));
}

TEST_CASE("ten-class comparison from a pack equals direct simulation") {
    const auto& c = corpus();
    ExperimentConfig pack = c.cfg, sim = c.cfg_sim;
    pack.task.speakers = {"ann"};
    sim.task.speakers = {"ann"};
    const TenClassReport a = ten_class_comparison(c.manifest, pack);
    const TenClassReport b = ten_class_comparison(c.manifest, sim);
    REQUIRE(a.cells.size() == 6);
    REQUIRE(b.cells.size() == a.cells.size());
    for (std::size_t i = 0; i < a.cells.size(); ++i) {
        REQUIRE(a.cells[i].dataset == b.cells[i].dataset);
        REQUIRE(a.cells[i].classifier == b.cells[i].classifier);
        REQUIRE(a.cells[i].source == b.cells[i].source);
        REQUIRE(a.cells[i].accuracies == b.cells[i].accuracies);
    }
}

TEST_CASE("reduced-class study enumerates small digit subsets") {
    const auto& c = corpus();
    const ReducedClassReport rep = reduced_class_study(c.manifest, c.cfg);
    REQUIRE(rep.rows.size() == 2);

    const auto& two = rep.rows[0];
    REQUIRE(two.class_count == 2);
    // C(3,2) = 3 <= combinations, so the subsets are enumerated in order
    REQUIRE(two.combos == std::vector<std::vector<int>>{{0, 1}, {0, 2}, {1, 2}});
    REQUIRE(two.raw_acc.size() == 3);
    REQUIRE(two.nanowire_acc.size() == 3);

    const auto& three = rep.rows[1];
    REQUIRE(three.class_count == 3);
    REQUIRE(three.combos == std::vector<std::vector<int>>{{0, 1, 2}});
    REQUIRE(three.raw_acc.size() == 1);

    for (const auto& row : rep.rows)
        for (const auto& accs : {row.raw_acc, row.nanowire_acc})
            for (double a : accs) {
                REQUIRE(a >= 0.0);
                REQUIRE(a <= 1.0);
            }

    const ReducedClassReport again = reduced_class_study(c.manifest, c.cfg);
    for (std::size_t i = 0; i < rep.rows.size(); ++i) {
        REQUIRE(again.rows[i].combos == rep.rows[i].combos);
        REQUIRE(again.rows[i].raw_acc == rep.rows[i].raw_acc);
        REQUIRE(again.rows[i].nanowire_acc == rep.rows[i].nanowire_acc);
    }

    ExperimentConfig bad = c.cfg;
    bad.task.class_counts = {4};  // only 3 digits exist
    REQUIRE_THROWS_AS(reduced_class_study(c.manifest, bad), TaskError);

    TempDir out("reduced");
    const auto names = write_reduced_class_report(rep, out.path() / "a");
    REQUIRE(names == std::vector<std::string>{"table1.csv"});
    const std::string table = read_file(out.path() / "a" / "table1.csv");
    REQUIRE(std::count(table.begin(), table.end(), '\n') == 3);
    write_reduced_class_report(rep, out.path() / "b");
    REQUIRE(read_file(out.path() / "b" / "table1.csv") == table);
}

TEST_CASE("reduced-class row statistics") {
    REQUIRE(ReducedClassRow::mean({0.5, 1.0}) == 0.75);
    REQUIRE(ReducedClassRow::mean({}) == 0.0);
    REQUIRE(ReducedClassRow::sample_std({0.5, 1.0}) ==
            Approx(std::sqrt(0.125)).margin(1e-15));
    REQUIRE(ReducedClassRow::sample_std({0.7}) == 0.0);
}

TEST_CASE("subsample benchmark sweeps feature counts") {
    const auto& c = corpus();
    const BenchReport rep = subsample_bench(c.manifest, c.cfg);
    REQUIRE(rep.points.size() == 4);
    for (std::size_t i = 0; i < 4; ++i)
        REQUIRE(rep.points[i].subset_size == c.cfg.task.subset_sizes[i]);
    REQUIRE(rep.at(4).subset_size == 4);
    REQUIRE_THROWS_AS(rep.at(64), TaskError);
    for (const auto& p : rep.points) {
        for (double a : {p.raw_accuracy, p.nanowire_accuracy}) {
            REQUIRE(a >= 0.0);
            REQUIRE(a <= 1.0);
        }
        REQUIRE(p.raw_train_s >= 0.0);
        REQUIRE(p.nanowire_train_s >= 0.0);
    }

    // accuracies (not timings) are reproducible
    const BenchReport again = subsample_bench(c.manifest, c.cfg);
    for (std::size_t i = 0; i < rep.points.size(); ++i) {
        REQUIRE(again.points[i].raw_accuracy == rep.points[i].raw_accuracy);
        REQUIRE(again.points[i].nanowire_accuracy == rep.points[i].nanowire_accuracy);
    }

    ExperimentConfig bad = c.cfg;
    bad.task.subset_sizes = {64};  // trace length is 32
    REQUIRE_THROWS_MATCHES(subsample_bench(c.manifest, bad), TaskError,
                           Catch::Matchers::MessageMatches(
                               ContainsSubstring("exceeds trace length")));

    TempDir out("bench");
    const auto names = write_bench_report(rep, out.path());
    REQUIRE(names == std::vector<std::string>{"fig5_curve.csv"});
    const std::string table = read_file(out.path() / "fig5_curve.csv");
    REQUIRE(table.substr(0, table.find('\n')) ==
            "subset_size,raw_accuracy,nanowire_accuracy,raw_train_s,nanowire_train_s");
    REQUIRE(std::count(table.begin(), table.end(), '\n') == 5);
}

TEST_CASE("speaker generalization trains on one speaker and tests on the rest") {
    const auto& c = corpus();
    const SpeakerGenReport rep = speaker_generalization(c.manifest, c.cfg);
    REQUIRE(rep.train_speaker == "ann");
    REQUIRE(rep.test_speakers == std::vector<std::string>{"bob"});
    REQUIRE(rep.pairs.size() == 3);  // digit pairs of {0,1,2}
    const std::vector<std::pair<int, int>> expected = {{0, 1}, {0, 2}, {1, 2}};
    std::vector<double> raw_accs, nano_accs;
    for (std::size_t i = 0; i < 3; ++i) {
        REQUIRE(rep.pairs[i].digit_a == expected[i].first);
        REQUIRE(rep.pairs[i].digit_b == expected[i].second);
        REQUIRE(rep.pairs[i].raw_accuracy.count("bob") == 1);
        REQUIRE(rep.pairs[i].nanowire_accuracy.count("bob") == 1);
        raw_accs.push_back(rep.pairs[i].raw_accuracy.at("bob"));
        nano_accs.push_back(rep.pairs[i].nanowire_accuracy.at("bob"));
    }
    for (double a : raw_accs) {
        REQUIRE(a >= 0.0);
        REQUIRE(a <= 1.0);
    }
    REQUIRE(rep.mean_accuracy("raw") == Approx(mean_of(raw_accs)).margin(1e-15));
    REQUIRE(rep.mean_accuracy("nanowire") == Approx(mean_of(nano_accs)).margin(1e-15));

    const SpeakerGenReport again = speaker_generalization(c.manifest, c.cfg);
    for (std::size_t i = 0; i < 3; ++i) {
        REQUIRE(again.pairs[i].raw_accuracy == rep.pairs[i].raw_accuracy);
        REQUIRE(again.pairs[i].nanowire_accuracy == rep.pairs[i].nanowire_accuracy);
    }

    TempDir out("gen");
    const auto names = write_speaker_gen_report(rep, out.path() / "a");
    REQUIRE(names == std::vector<std::string>{"fig6_bob.csv"});
    const std::string table = read_file(out.path() / "a" / "fig6_bob.csv");
    REQUIRE(std::count(table.begin(), table.end(), '\n') == 4);
    write_speaker_gen_report(rep, out.path() / "b");
    REQUIRE(read_file(out.path() / "b" / "fig6_bob.csv") == table);
}

TEST_CASE("speaker generalization trial limits and failure modes") {
    const auto& c = corpus();

    ExperimentConfig limited = c.cfg;
    limited.task.train_trials = 2;
    limited.task.test_trials = 2;
    const SpeakerGenReport rep = speaker_generalization(c.manifest, limited);
    REQUIRE(rep.pairs.size() == 3);
    const SpeakerGenReport again = speaker_generalization(c.manifest, limited);
    for (std::size_t i = 0; i < 3; ++i)
        REQUIRE(again.pairs[i].raw_accuracy == rep.pairs[i].raw_accuracy);

    ExperimentConfig starving = c.cfg;
    starving.task.train_trials = 10;  // only 4 trials per digit exist
    REQUIRE_THROWS_AS(speaker_generalization(c.manifest, starving), InsufficientData);

    ExperimentConfig ghost = c.cfg;
    ghost.task.test_speakers = {"zed"};
    REQUIRE_THROWS_AS(speaker_generalization(c.manifest, ghost), TaskError);

    DatasetManifest solo;
    solo.entries = filter_entries(c.manifest, {"ann"});
    REQUIRE_THROWS_MATCHES(speaker_generalization(solo, c.cfg), TaskError,
                           Catch::Matchers::MessageMatches(
                               ContainsSubstring("no test speakers")));
}

TEST_CASE("experiment config parsing applies defaults") {
    const ExperimentConfig cfg = parse_experiment_config(nlohmann::json::object());
    REQUIRE(cfg.master_seed == 1);
    REQUIRE(cfg.traces_dir.empty());
    REQUIRE_FALSE(cfg.assembly_seed_from_config);
    REQUIRE(cfg.reservoir.assembly.n_wires == 1500);
    REQUIRE(cfg.reservoir.assembly.mean_length == 40.0);
    REQUIRE(cfg.reservoir.assembly.std_length == 14.0);
    REQUIRE(cfg.reservoir.assembly.side() == 280.0);
    REQUIRE(cfg.reservoir.assembly.max_retries == 16);
    REQUIRE(cfg.reservoir.assembly.seed == derive_seed(1, "assembly"));
    REQUIRE(cfg.reservoir.dynamics.k_p == 0.001);
    REQUIRE(cfg.reservoir.dynamics.k_d == 0.5);
    REQUIRE(cfg.reservoir.dynamics.eta_p == 1.0);
    REQUIRE(cfg.reservoir.dynamics.eta_d == 1.0);
    REQUIRE(cfg.reservoir.dynamics.g_min == 0.001);
    REQUIRE(cfg.reservoir.dynamics.g_max == 1.0);
    REQUIRE(cfg.reservoir.dynamics.dt == 1.0);
    REQUIRE(cfg.reservoir.dynamics.mode == VoltageMode::magnitude);
    REQUIRE(cfg.reservoir.solver.rel_tol == 1e-11);
    REQUIRE(cfg.reservoir.solver.kcl_tol == 1e-9);
    REQUIRE(cfg.reservoir.solver.max_iter_factor == 20);
    REQUIRE(cfg.reservoir.timesteps == 1024);
    REQUIRE(cfg.reservoir.v_p == 1.0);
    REQUIRE_FALSE(cfg.reservoir.fresh_topology_per_clip);
    REQUIRE(cfg.classifier.kind == ClassifierKind::logistic);
    REQUIRE(cfg.classifier.logistic.lambda == 1e-4);
    REQUIRE(cfg.classifier.logistic.max_iters == 10000);
    REQUIRE(cfg.classifier.svm.c == 1.0);
    REQUIRE(cfg.classifier.lda.gamma == 0.1);
    REQUIRE(cfg.task.subset_size == 32);
    REQUIRE(cfg.task.test_fraction == 0.1);
    REQUIRE(cfg.task.split_repeats == 1);
    REQUIRE(cfg.task.class_counts == std::vector<int>{2, 3, 4, 5});
    REQUIRE(cfg.task.combinations == 33);
    REQUIRE(cfg.task.subset_sizes ==
            std::vector<std::size_t>{1, 2, 4, 8, 16, 32, 64, 128, 256, 512, 1024});
    REQUIRE(cfg.task.sweep_parameter == "kp");
    REQUIRE(cfg.task.sweep_grid.empty());
    REQUIRE(cfg.task.time_repeats == 5);
    REQUIRE_NOTHROW(validate_experiment_config(cfg));
}

TEST_CASE("experiment config rejects unknown keys by name and context") {
    auto expect_reject = [](const std::string& json, const std::string& fragment) {
        REQUIRE_THROWS_MATCHES(parse_experiment_config(nlohmann::json::parse(json)), ConfigError,
                               Catch::Matchers::MessageMatches(ContainsSubstring(fragment)));
    };
    expect_reject(R"({"wires": 100})", "unknown key 'wires' in top level");
    expect_reject(R"({"assembly": {"wire": 3}})", "unknown key 'wire' in assembly");
    expect_reject(R"({"dynamics": {"kp": 0.1}})", "unknown key 'kp' in dynamics");
    expect_reject(R"({"solver": {"tol": 1e-9}})", "unknown key 'tol' in solver");
    expect_reject(R"({"reservoir": {"steps": 8}})", "unknown key 'steps' in reservoir");
    expect_reject(R"({"classifier": {"kernel": "rbf"}})", "unknown key 'kernel' in classifier");
    expect_reject(R"({"task": {"folds": 5}})", "unknown key 'folds' in task");
    expect_reject(R"({"task": {"probe": {"clip": 1}}})", "unknown key 'clip' in task.probe");

    REQUIRE_THROWS_AS(parse_experiment_config(nlohmann::json::array()), ConfigError);
    REQUIRE_THROWS_MATCHES(
        parse_experiment_config(nlohmann::json::parse(R"({"task": {"subset_size": "big"}})")),
        ConfigError, Catch::Matchers::MessageMatches(ContainsSubstring("bad value")));
}

TEST_CASE("experiment config seed derivation and pinning") {
    const auto derived = parse_experiment_config(nlohmann::json::parse(R"({"master_seed": 42})"));
    REQUIRE(derived.master_seed == 42);
    REQUIRE(derived.reservoir.assembly.seed == derive_seed(42, "assembly"));
    REQUIRE_FALSE(derived.assembly_seed_from_config);

    auto pinned =
        parse_experiment_config(nlohmann::json::parse(R"({"assembly": {"seed": 77}})"));
    REQUIRE(pinned.reservoir.assembly.seed == 77);
    REQUIRE(pinned.assembly_seed_from_config);
    pinned.apply_master_seed(9);
    REQUIRE(pinned.master_seed == 9);
    REQUIRE(pinned.reservoir.assembly.seed == 77);  // pin survives reseeding

    auto loose = parse_experiment_config(nlohmann::json::object());
    loose.apply_master_seed(9);
    REQUIRE(loose.reservoir.assembly.seed == derive_seed(9, "assembly"));
}

TEST_CASE("experiment config parses nested sections") {
    const auto cfg = parse_experiment_config(nlohmann::json::parse(R"({
        "assembly": {"wires": 80, "substrate_side": 120.0},
        "dynamics": {"k_p": 0.01, "voltage_mode": "signed"},
        "solver": {"rel_tol": 1e-9},
        "reservoir": {"timesteps": 64, "v_p": 2.0, "fresh_topology_per_clip": true},
        "classifier": {"kind": "svm", "c": 4.0, "gamma": 0.2},
        "task": {"subset_size": 16, "sweep_parameter": "v_p",
                 "probe": {"speaker": "ann", "digit": 2, "trial": 1}}
    })"));
    REQUIRE(cfg.reservoir.assembly.n_wires == 80);
    REQUIRE(cfg.reservoir.assembly.side() == 120.0);
    REQUIRE(cfg.reservoir.dynamics.k_p == 0.01);
    REQUIRE(cfg.reservoir.dynamics.mode == VoltageMode::signed_drop);
    REQUIRE(cfg.reservoir.solver.rel_tol == 1e-9);
    REQUIRE(cfg.reservoir.timesteps == 64);
    REQUIRE(cfg.reservoir.v_p == 2.0);
    REQUIRE(cfg.reservoir.fresh_topology_per_clip);
    REQUIRE(cfg.classifier.kind == ClassifierKind::svm);
    REQUIRE(cfg.classifier.svm.c == 4.0);
    REQUIRE(cfg.classifier.lda.gamma == 0.2);
    REQUIRE(cfg.task.subset_size == 16);
    REQUIRE(cfg.task.sweep_parameter == "vp");  // alias normalized at parse time
    REQUIRE(cfg.task.probe.speaker == "ann");
    REQUIRE(cfg.task.probe.digit == 2);
    REQUIRE(cfg.task.probe.trial == 1);

    REQUIRE_THROWS_AS(
        parse_experiment_config(
            nlohmann::json::parse(R"({"dynamics": {"voltage_mode": "weird"}})")),
        ConfigError);
    REQUIRE_THROWS_AS(
        parse_experiment_config(
            nlohmann::json::parse(R"({"task": {"sweep_parameter": "bogus"}})")),
        ConfigError);
}

TEST_CASE("voltage mode and sweep slug names") {
    REQUIRE(voltage_mode_from_name("magnitude") == VoltageMode::magnitude);
    REQUIRE(voltage_mode_from_name("signed") == VoltageMode::signed_drop);
    REQUIRE(voltage_mode_name(VoltageMode::magnitude) == "magnitude");
    REQUIRE(voltage_mode_name(VoltageMode::signed_drop) == "signed");
    REQUIRE_THROWS_AS(voltage_mode_from_name("absolute"), ConfigError);

    REQUIRE(sweep_parameter_slug("kp") == "kp");
    REQUIRE(sweep_parameter_slug("k_p") == "kp");
    REQUIRE(sweep_parameter_slug("k_d") == "kd");
    REQUIRE(sweep_parameter_slug("v_p") == "vp");
    REQUIRE_THROWS_AS(sweep_parameter_slug("eta"), ConfigError);

    REQUIRE(default_sweep_grid("kp") == std::vector<double>{0.0001, 0.001, 0.01, 0.1, 0.5});
    REQUIRE(default_sweep_grid("kd") == std::vector<double>{0.3, 0.35, 0.4, 0.45, 0.5});
    REQUIRE(default_sweep_grid("vp") == std::vector<double>{0.5, 1.0, 2.0, 5.0});
}

TEST_CASE("experiment config validation bounds") {
    auto broken = [](auto&& mutate) {
        ExperimentConfig cfg;
        cfg.reservoir.timesteps = 32;
        cfg.task.subset_size = 32;
        cfg.task.subset_sizes = {1, 32};
        mutate(cfg);
        return cfg;
    };
    REQUIRE_NOTHROW(validate_experiment_config(broken([](ExperimentConfig&) {})));
    REQUIRE_THROWS_AS(validate_experiment_config(
                          broken([](ExperimentConfig& c) { c.task.test_fraction = 0.0; })),
                      ConfigError);
    REQUIRE_THROWS_AS(validate_experiment_config(
                          broken([](ExperimentConfig& c) { c.task.test_fraction = 1.0; })),
                      ConfigError);
    REQUIRE_THROWS_AS(validate_experiment_config(
                          broken([](ExperimentConfig& c) { c.task.split_repeats = 0; })),
                      ConfigError);
    REQUIRE_THROWS_AS(validate_experiment_config(
                          broken([](ExperimentConfig& c) { c.task.time_repeats = 0; })),
                      ConfigError);
    REQUIRE_THROWS_AS(validate_experiment_config(
                          broken([](ExperimentConfig& c) { c.task.combinations = 0; })),
                      ConfigError);
    REQUIRE_THROWS_AS(validate_experiment_config(
                          broken([](ExperimentConfig& c) { c.task.subset_size = 3; })),
                      ConfigError);
    REQUIRE_THROWS_AS(validate_experiment_config(
                          broken([](ExperimentConfig& c) { c.task.subset_sizes = {2048}; })),
                      ConfigError);
    REQUIRE_THROWS_AS(validate_experiment_config(
                          broken([](ExperimentConfig& c) { c.task.subset_sizes = {0}; })),
                      ConfigError);
    REQUIRE_THROWS_AS(validate_experiment_config(
                          broken([](ExperimentConfig& c) { c.task.subset_size = 64; })),
                      ConfigError);  // exceeds 32 timesteps
    REQUIRE_THROWS_AS(validate_experiment_config(
                          broken([](ExperimentConfig& c) { c.task.class_counts = {1}; })),
                      ConfigError);
    REQUIRE_THROWS_AS(validate_experiment_config(
                          broken([](ExperimentConfig& c) { c.task.class_counts = {11}; })),
                      ConfigError);
    REQUIRE_THROWS_AS(validate_experiment_config(
                          broken([](ExperimentConfig& c) { c.task.sweep_grid = {0.0}; })),
                      ConfigError);
    REQUIRE_THROWS_AS(validate_experiment_config(
                          broken([](ExperimentConfig& c) { c.task.sweep_grid = {-0.5}; })),
                      ConfigError);
    // an unstable rate setting only warns; the state clamp keeps updates bounded
    REQUIRE_NOTHROW(validate_experiment_config(
        broken([](ExperimentConfig& c) { c.reservoir.dynamics.k_p = 0.5; })));
}

TEST_CASE("experiment config files round-trip through the canonical echo") {
    const ExperimentConfig cfg = parse_experiment_config(nlohmann::json::object());
    const auto echo = experiment_config_to_json(cfg);
    REQUIRE(echo.at("assembly").at("substrate_side") == 280.0);
    REQUIRE(echo.at("dynamics").at("voltage_mode") == "magnitude");
    REQUIRE(echo.at("classifier").at("kind") == "lr");
    REQUIRE(echo.at("task").at("subset_sizes").size() == 11);

    // re-parsing the echo reproduces it byte for byte
    const auto cfg2 = parse_experiment_config(nlohmann::json::parse(echo.dump()));
    REQUIRE(experiment_config_to_json(cfg2).dump(2) == echo.dump(2));

    TempDir tmp("config");
    write_file(tmp.path() / "run.json", R"({"master_seed": 3, "assembly": {"wires": 10}})");
    const auto loaded = load_experiment_config(tmp.path() / "run.json");
    REQUIRE(loaded.master_seed == 3);
    REQUIRE(loaded.reservoir.assembly.n_wires == 10);
    REQUIRE(loaded.reservoir.assembly.seed == derive_seed(3, "assembly"));

    write_file(tmp.path() / "broken.json", "{oops");
    REQUIRE_THROWS_MATCHES(load_experiment_config(tmp.path() / "broken.json"), ConfigError,
                           Catch::Matchers::MessageMatches(ContainsSubstring("broken.json")));
    REQUIRE_THROWS_AS(load_experiment_config(tmp.path() / "absent.json"), IoError);
}

TEST_CASE("run summaries embed the resolved config and are byte-stable") {
    const auto& c = corpus();
    nlohmann::ordered_json metrics;
    metrics["best_accuracy"] = 0.75;
    TempDir out("summary");
    write_run_summary(out.path() / "a", "sweep", c.cfg, {"x.csv", "y.csv"}, metrics);
    const std::string text = read_file(out.path() / "a" / "run_summary.json");
    REQUIRE(text.back() == '\n');
    const auto doc = nlohmann::json::parse(text);
    REQUIRE(doc.at("task") == "sweep");
    REQUIRE(doc.at("master_seed") == 5);
    REQUIRE(doc.at("outputs") == nlohmann::json::array({"x.csv", "y.csv"}));
    REQUIRE(doc.at("metrics").at("best_accuracy") == 0.75);
    REQUIRE(doc.at("config") ==
            nlohmann::json::parse(experiment_config_to_json(c.cfg).dump()));

    write_run_summary(out.path() / "b", "sweep", c.cfg, {"x.csv", "y.csv"}, metrics);
    REQUIRE(read_file(out.path() / "b" / "run_summary.json") == text);
}
