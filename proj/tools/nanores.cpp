// nanores command line: network generation, simulation and the experiment
// harness, one subcommand per task.

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "nanores/nanores.hpp"

namespace {

using namespace nanores;

struct CommonOpts {
    std::string config_path;
    std::string manifest_path;
    std::string out;
    std::string traces_dir;
    std::optional<std::uint64_t> seed;
};

void add_common(CLI::App* cmd, CommonOpts& opts, bool needs_manifest = true) {
    cmd->add_option("--config", opts.config_path, "JSON experiment config");
    if (needs_manifest)
        cmd->add_option("--manifest", opts.manifest_path, "dataset manifest JSON")->required();
    cmd->add_option("--out", opts.out, "output directory")->required();
    cmd->add_option("--seed", opts.seed, "master seed override");
    cmd->add_option("--traces", opts.traces_dir, "pre-simulated trace pack directory");
}

ExperimentConfig resolve_config(const CommonOpts& opts) {
    ExperimentConfig cfg;
    if (!opts.config_path.empty()) {
        cfg = load_experiment_config(opts.config_path);
        if (!cfg.assembly_seed_from_config) cfg.apply_master_seed(cfg.master_seed);
    } else {
        cfg.apply_master_seed(cfg.master_seed);
    }
    if (opts.seed) cfg.apply_master_seed(*opts.seed);
    if (!opts.traces_dir.empty()) cfg.traces_dir = opts.traces_dir;
    validate_experiment_config(cfg);
    return cfg;
}

nlohmann::ordered_json eval_summary(const EvalReport& rep) {
    nlohmann::ordered_json m;
    m["accuracy"] = rep.accuracy;
    m["n_test"] = rep.n_test;
    m["classes"] = rep.classes;
    return m;
}

int cmd_netgen(int wires, double mean_len, double std_len, double side, std::uint64_t seed,
               int max_retries, const std::string& out) {
    AssemblyConfig cfg;
    cfg.n_wires = wires;
    cfg.mean_length = mean_len;
    cfg.std_length = std_len;
    cfg.substrate_side = side;
    cfg.seed = seed;
    cfg.max_retries = max_retries;
    const auto topo = assemble(cfg);
    save_topology(topo, out);
    std::printf("netgen: %zu wires, %zu junctions, seed %llu -> %s\n", topo.wires.size(),
                topo.junctions.size(), static_cast<unsigned long long>(topo.seed), out.c_str());
    return 0;
}

int cmd_manifest(const std::string& root, const std::string& pattern, const std::string& out) {
    const auto manifest = build_manifest(root, pattern);
    save_manifest(manifest, out);
    std::printf("manifest: %zu clips -> %s\n", manifest.entries.size(), out.c_str());
    return 0;
}

int cmd_synth(const std::string& out, const std::vector<std::string>& speakers, int digits,
              int trials, std::uint64_t seed, std::uint32_t rate, double duration) {
    SynthConfig cfg;
    if (!speakers.empty()) cfg.speakers = speakers;
    cfg.digits = digits;
    cfg.trials = trials;
    cfg.seed = seed;
    cfg.sample_rate = rate;
    cfg.base_duration = duration;
    generate_corpus(cfg, out);
    std::printf("synth: %zu speakers x %d digits x %d trials -> %s\n", cfg.speakers.size(),
                cfg.digits, cfg.trials, out.c_str());
    return 0;
}

int cmd_simulate(const CommonOpts& opts, bool csv, int dump_solve_step) {
    const auto cfg = resolve_config(opts);
    const auto manifest = load_manifest(opts.manifest_path);
    const std::filesystem::path out_dir(opts.out);
    std::filesystem::create_directories(out_dir);

    const auto result = run_dataset(manifest, cfg.reservoir);
    save_trace_pack(result.traces, out_dir);
    std::vector<std::string> outputs{"traces.bin", "traces_index.json"};

    if (csv) {
        CsvWriter wide;
        std::vector<std::string> head{"speaker", "digit", "trial"};
        for (std::size_t t = 0; t < cfg.reservoir.timesteps; ++t)
            head.push_back("g" + std::to_string(t));
        wide.header(head);
        for (const auto& tr : result.traces) {
            wide.cell(tr.clip.speaker);
            wide.cell(tr.clip.digit);
            wide.cell(tr.clip.trial);
            for (double v : tr.values) wide.cell(v);
            wide.end_row();
        }
        wide.save(out_dir / "traces.csv");
        outputs.push_back("traces.csv");
    }

    if (dump_solve_step >= 0) {
        const auto& e = manifest.entries.front();
        AudioClip clip = read_wav(e.path);
        VoltageTrace drive = standardize_trace(clip, cfg.reservoir.timesteps, cfg.reservoir.v_p);
        if (static_cast<std::size_t>(dump_solve_step) >= drive.values.size())
            throw InvalidArgument("--dump-solve step out of range");
        const auto topo = assemble(cfg.reservoir.assembly);
        std::vector<double> states(topo.junctions.size(), 0.0);
        auto matrix = build_matrix(topo, states, cfg.reservoir.dynamics);
        KirchhoffSolver solver(matrix, topo.source_wire, topo.ground_wire, cfg.reservoir.solver);
        SolveResult solve;
        for (int t = 0; t <= dump_solve_step; ++t) {
            solve = solver.solve(drive.values[static_cast<std::size_t>(t)]);
            for (std::size_t j = 0; j < states.size(); ++j)
                states[j] = step_state(states[j], solve.junction_drops[j], cfg.reservoir.dynamics);
            update_matrix(matrix, states, cfg.reservoir.dynamics);
        }
        nlohmann::ordered_json dump;
        dump["clip"] = e.speaker + "/" + std::to_string(e.digit) + "/" + std::to_string(e.trial);
        dump["timestep"] = dump_solve_step;
        dump["v_drive"] = drive.values[static_cast<std::size_t>(dump_solve_step)];
        dump["g_eff"] = solve.g_eff;
        dump["source_current"] = solve.source_current;
        dump["iterations"] = solve.iterations;
        dump["residual_norm"] = solve.residual_norm;
        dump["kcl_residual"] = solve.kcl_residual;
        dump["node_voltages"] = solve.node_voltages;
        dump["junction_drops"] = solve.junction_drops;
        write_file(out_dir / "solve_dump.json", dump.dump(2) + "\n");
        outputs.push_back("solve_dump.json");
    }

    double mean_final = 0.0;
    std::size_t ok = 0;
    for (const auto& tr : result.traces) {
        if (!tr.values.empty()) {
            mean_final += tr.values.back();
            ++ok;
        }
    }
    if (ok) mean_final /= static_cast<double>(ok);
    nlohmann::ordered_json metrics;
    metrics["clips"] = manifest.entries.size();
    metrics["failed"] = result.errors.size();
    metrics["timesteps"] = cfg.reservoir.timesteps;
    metrics["mean_final_g_eff"] = mean_final;
    write_run_summary(out_dir, "simulate", cfg, outputs, metrics);

    for (const auto& err : result.errors) std::fprintf(stderr, "error: %s\n", err.c_str());
    std::printf("simulate: %zu clips (%zu failed) -> %s\n", manifest.entries.size(),
                result.errors.size(), opts.out.c_str());
    return result.errors.empty() ? 0 : 1;
}

int cmd_distance(const CommonOpts& opts) {
    const auto cfg = resolve_config(opts);
    const auto manifest = load_manifest(opts.manifest_path);
    const std::filesystem::path out_dir(opts.out);
    std::filesystem::create_directories(out_dir);

    std::set<std::string> speakers(cfg.task.speakers.begin(), cfg.task.speakers.end());
    TraceStore store(filter_entries(manifest, speakers), cfg, /*need_nanowire=*/false);
    const auto rep = distance_analysis(store);
    const auto outputs = write_distance_report(rep, out_dir);

    nlohmann::ordered_json metrics;
    metrics["digits"] = rep.digits;
    metrics["intra_mean"] = rep.intra_mean;
    metrics["inter_mean"] = rep.inter_mean;
    write_run_summary(out_dir, "distance", cfg, outputs, metrics);
    std::printf("distance: %zu digits -> %s\n", rep.digits.size(), opts.out.c_str());
    return 0;
}

int cmd_sweep(const CommonOpts& opts, const std::string& param,
              const std::vector<double>& grid) {
    auto cfg = resolve_config(opts);
    if (!param.empty()) cfg.task.sweep_parameter = sweep_parameter_slug(param);
    if (!grid.empty()) cfg.task.sweep_grid = grid;
    const auto manifest = load_manifest(opts.manifest_path);
    const std::filesystem::path out_dir(opts.out);
    std::filesystem::create_directories(out_dir);

    const auto rep = parameter_sweep(manifest, cfg);
    const auto outputs = write_sweep_report(rep, out_dir);

    nlohmann::ordered_json metrics;
    metrics["parameter"] = rep.parameter;
    nlohmann::ordered_json points = nlohmann::ordered_json::array();
    for (const auto& pt : rep.points) {
        points.push_back({{"value", pt.value},
                          {"saturation_fraction", pt.saturation_fraction},
                          {"final_g_eff", pt.final_g},
                          {"mean_g_eff", pt.mean_g}});
    }
    metrics["points"] = points;
    write_run_summary(out_dir, "sweep", cfg, outputs, metrics);
    std::printf("sweep: %s over %zu values -> %s\n", rep.parameter.c_str(), rep.points.size(),
                opts.out.c_str());
    return 0;
}

int cmd_tenclass(const CommonOpts& opts) {
    const auto cfg = resolve_config(opts);
    const auto manifest = load_manifest(opts.manifest_path);
    const std::filesystem::path out_dir(opts.out);
    std::filesystem::create_directories(out_dir);

    const auto rep = ten_class_comparison(manifest, cfg);
    const auto outputs = write_ten_class_report(rep, out_dir);

    nlohmann::ordered_json cells = nlohmann::ordered_json::array();
    for (const auto& c : rep.cells) {
        cells.push_back({{"dataset", c.dataset},
                         {"classifier", c.classifier},
                         {"source", c.source},
                         {"repeats", c.accuracies.size()},
                         {"mean_accuracy", c.mean_accuracy()}});
    }
    nlohmann::ordered_json metrics;
    metrics["cells"] = cells;
    write_run_summary(out_dir, "tenclass", cfg, outputs, metrics);
    std::printf("tenclass: %zu cells -> %s\n", rep.cells.size(), opts.out.c_str());
    return 0;
}

int cmd_reduced(const CommonOpts& opts) {
    const auto cfg = resolve_config(opts);
    const auto manifest = load_manifest(opts.manifest_path);
    const std::filesystem::path out_dir(opts.out);
    std::filesystem::create_directories(out_dir);

    const auto rep = reduced_class_study(manifest, cfg);
    const auto outputs = write_reduced_class_report(rep, out_dir);

    nlohmann::ordered_json rows = nlohmann::ordered_json::array();
    for (const auto& row : rep.rows) {
        rows.push_back({{"class_count", row.class_count},
                        {"combinations", row.combos.size()},
                        {"raw_mean", ReducedClassRow::mean(row.raw_acc)},
                        {"nanowire_mean", ReducedClassRow::mean(row.nanowire_acc)}});
    }
    nlohmann::ordered_json metrics;
    metrics["rows"] = rows;
    write_run_summary(out_dir, "reduced", cfg, outputs, metrics);
    std::printf("reduced: %zu class counts -> %s\n", rep.rows.size(), opts.out.c_str());
    return 0;
}

int cmd_bench(const CommonOpts& opts) {
    const auto cfg = resolve_config(opts);
    const auto manifest = load_manifest(opts.manifest_path);
    const std::filesystem::path out_dir(opts.out);
    std::filesystem::create_directories(out_dir);

    const auto rep = subsample_bench(manifest, cfg);
    const auto outputs = write_bench_report(rep, out_dir);

    // wall times stay out of the summary so its bytes are seed-reproducible
    nlohmann::ordered_json points = nlohmann::ordered_json::array();
    for (const auto& p : rep.points) {
        points.push_back({{"subset_size", p.subset_size},
                          {"raw_accuracy", p.raw_accuracy},
                          {"nanowire_accuracy", p.nanowire_accuracy}});
    }
    nlohmann::ordered_json metrics;
    metrics["points"] = points;
    write_run_summary(out_dir, "bench", cfg, outputs, metrics);
    std::printf("bench: %zu subset sizes -> %s\n", rep.points.size(), opts.out.c_str());
    return 0;
}

int cmd_genspeaker(const CommonOpts& opts) {
    const auto cfg = resolve_config(opts);
    const auto manifest = load_manifest(opts.manifest_path);
    const std::filesystem::path out_dir(opts.out);
    std::filesystem::create_directories(out_dir);

    const auto rep = speaker_generalization(manifest, cfg);
    const auto outputs = write_speaker_gen_report(rep, out_dir);

    nlohmann::ordered_json metrics;
    metrics["train_speaker"] = rep.train_speaker;
    metrics["test_speakers"] = rep.test_speakers;
    metrics["pairs"] = rep.pairs.size();
    metrics["mean_raw_accuracy"] = rep.mean_accuracy("raw");
    metrics["mean_nanowire_accuracy"] = rep.mean_accuracy("nanowire");
    write_run_summary(out_dir, "genspeaker", cfg, outputs, metrics);
    std::printf("genspeaker: %zu pairs, raw %.3f vs nanowire %.3f -> %s\n", rep.pairs.size(),
                rep.mean_accuracy("raw"), rep.mean_accuracy("nanowire"), opts.out.c_str());
    return 0;
}

FeatureMatrix cli_features(const DatasetManifest& manifest, const ExperimentConfig& cfg,
                           const std::string& source) {
    std::set<std::string> speakers(cfg.task.speakers.begin(), cfg.task.speakers.end());
    TraceStore store(filter_entries(manifest, speakers), cfg, source == "nanowire");
    return build_features(store, all_rows(store), cfg.task.subset_size, source);
}

int cmd_train(const CommonOpts& opts, const std::string& source, const std::string& clf,
              std::size_t subset) {
    auto cfg = resolve_config(opts);
    if (subset) cfg.task.subset_size = subset;
    if (!clf.empty()) cfg.classifier.kind = classifier_kind_from_name(clf);
    const auto manifest = load_manifest(opts.manifest_path);
    const std::filesystem::path out_dir(opts.out);
    std::filesystem::create_directories(out_dir);

    FeatureMatrix features = cli_features(manifest, cfg, source);
    auto [train, test] = split(features, cfg.task.test_fraction,
                               derive_seed(cfg.master_seed, "cli-split"));
    const auto model = train_for_config(train, cfg.classifier,
                                        classifier_kind_name(cfg.classifier.kind));
    save_model(model, out_dir / "model.json");

    nlohmann::ordered_json metrics;
    metrics["classifier"] = classifier_kind_name(model.kind);
    metrics["source"] = source;
    metrics["subset_size"] = cfg.task.subset_size;
    metrics["n_train"] = train.n;
    metrics["n_holdout"] = test.n;
    metrics["classes"] = model.classes;
    write_run_summary(out_dir, "train", cfg, {"model.json"}, metrics);
    std::printf("train: %s on %zu clips (%zu held out) -> %s/model.json\n",
                classifier_kind_name(model.kind).c_str(), train.n, test.n, opts.out.c_str());
    return 0;
}

int cmd_eval(const CommonOpts& opts, const std::string& model_path, const std::string& source,
             bool holdout) {
    const auto cfg = resolve_config(opts);
    const auto manifest = load_manifest(opts.manifest_path);
    const auto model = load_model(model_path);
    const std::filesystem::path out_dir(opts.out);
    std::filesystem::create_directories(out_dir);

    FeatureMatrix features = cli_features(manifest, cfg, source);
    EvalReport rep;
    if (holdout) {
        auto [train, test] = split(features, cfg.task.test_fraction,
                                   derive_seed(cfg.master_seed, "cli-split"));
        rep = evaluate(model, test);
    } else {
        rep = evaluate(model, features);
    }
    write_file(out_dir / "eval.json", eval_report_to_json(rep).dump(2) + "\n");

    CsvWriter confusion;
    std::vector<std::string> head{"true\\pred"};
    for (int cls : rep.classes) head.push_back(std::to_string(cls));
    confusion.header(head);
    for (std::size_t i = 0; i < rep.classes.size(); ++i) {
        confusion.cell(rep.classes[i]);
        for (std::size_t j = 0; j < rep.classes.size(); ++j)
            confusion.cell(static_cast<long long>(rep.confusion[i][j]));
        confusion.end_row();
    }
    confusion.save(out_dir / "confusion.csv");

    write_run_summary(out_dir, "eval", cfg, {"eval.json", "confusion.csv"}, eval_summary(rep));
    std::printf("eval: accuracy %.4f on %zu clips -> %s\n", rep.accuracy, rep.n_test,
                opts.out.c_str());
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"memristive nanowire network reservoir: simulation and classification harness"};
    app.set_version_flag("--version", std::string("nanores ") + NANORES_VERSION);
    app.require_subcommand(1);

    // netgen
    auto* netgen = app.add_subcommand("netgen", "generate a percolating network topology");
    int ng_wires = 1500, ng_retries = 16;
    double ng_mean = 40.0, ng_std = 14.0, ng_side = 0.0;
    std::uint64_t ng_seed = 1;
    std::string ng_out;
    netgen->add_option("--wires", ng_wires, "wire count");
    netgen->add_option("--mean-len", ng_mean, "mean wire length");
    netgen->add_option("--std-len", ng_std, "wire length standard deviation");
    netgen->add_option("--side", ng_side, "substrate side (0 = 7 x mean length)");
    netgen->add_option("--seed", ng_seed, "assembly seed");
    netgen->add_option("--max-retries", ng_retries, "reseed attempts on percolation failure");
    netgen->add_option("--out", ng_out, "topology JSON path")->required();

    // manifest
    auto* manifest_cmd = app.add_subcommand("manifest", "scan a corpus directory into a manifest");
    std::string mf_root, mf_pattern = "{digit}_{speaker}_{trial}.wav", mf_out;
    manifest_cmd->add_option("--root", mf_root, "corpus directory")->required();
    manifest_cmd->add_option("--pattern", mf_pattern, "filename pattern");
    manifest_cmd->add_option("--out", mf_out, "manifest JSON path")->required();

    // synth
    auto* synth_cmd = app.add_subcommand("synth", "generate the synthetic benchmark corpus");
    std::string sy_out;
    std::vector<std::string> sy_speakers;
    int sy_digits = 10, sy_trials = 10;
    std::uint64_t sy_seed = 7;
    std::uint32_t sy_rate = 8000;
    double sy_duration = 0.5;
    synth_cmd->add_option("--out", sy_out, "output directory")->required();
    synth_cmd->add_option("--speakers", sy_speakers, "speaker names")->delimiter(',');
    synth_cmd->add_option("--digits", sy_digits, "digit classes");
    synth_cmd->add_option("--trials", sy_trials, "trials per speaker and digit");
    synth_cmd->add_option("--seed", sy_seed, "corpus seed");
    synth_cmd->add_option("--rate", sy_rate, "sample rate");
    synth_cmd->add_option("--duration", sy_duration, "base clip duration in seconds");

    // simulate
    CommonOpts sim_opts;
    bool sim_csv = false;
    int sim_dump = -1;
    auto* simulate_cmd = app.add_subcommand("simulate", "run every clip through the network");
    add_common(simulate_cmd, sim_opts);
    simulate_cmd->add_flag("--csv", sim_csv, "also write traces.csv");
    simulate_cmd->add_option("--dump-solve", sim_dump,
                             "dump the full solve of the first clip at this timestep");

    CommonOpts dist_opts, sweep_opts, ten_opts, red_opts, bench_opts, gen_opts, train_opts,
        eval_opts;
    auto* distance_cmd = app.add_subcommand("distance", "pairwise clip distance analysis");
    add_common(distance_cmd, dist_opts);

    auto* sweep_cmd = app.add_subcommand("sweep", "single-parameter response sweep");
    add_common(sweep_cmd, sweep_opts);
    std::string sw_param;
    std::vector<double> sw_grid;
    sweep_cmd->add_option("--param", sw_param, "kp, kd or vp");
    sweep_cmd->add_option("--grid", sw_grid, "explicit grid values")->delimiter(',');

    auto* tenclass_cmd = app.add_subcommand("tenclass", "ten-class classifier comparison");
    add_common(tenclass_cmd, ten_opts);

    auto* reduced_cmd = app.add_subcommand("reduced", "reduced class-count study");
    add_common(reduced_cmd, red_opts);

    auto* bench_cmd = app.add_subcommand("bench", "subsample size benchmark");
    add_common(bench_cmd, bench_opts);

    auto* gen_cmd = app.add_subcommand("genspeaker", "cross-speaker generalization");
    add_common(gen_cmd, gen_opts);

    auto* train_cmd = app.add_subcommand("train", "train one classifier");
    add_common(train_cmd, train_opts);
    std::string tr_source = "nanowire", tr_clf;
    std::size_t tr_subset = 0;
    train_cmd->add_option("--source", tr_source, "raw or nanowire features")
        ->check(CLI::IsMember({"raw", "nanowire"}));
    train_cmd->add_option("--clf", tr_clf, "lr, lda or svm");
    train_cmd->add_option("--subset", tr_subset, "subset size override");

    auto* eval_cmd = app.add_subcommand("eval", "evaluate a trained model");
    add_common(eval_cmd, eval_opts);
    std::string ev_model, ev_source = "nanowire";
    bool ev_all = false;
    eval_cmd->add_option("--model", ev_model, "model JSON path")->required();
    eval_cmd->add_option("--source", ev_source, "raw or nanowire features")
        ->check(CLI::IsMember({"raw", "nanowire"}));
    eval_cmd->add_flag("--all", ev_all, "evaluate on all clips instead of the held-out split");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    }

    try {
        if (*netgen)
            return cmd_netgen(ng_wires, ng_mean, ng_std, ng_side, ng_seed, ng_retries, ng_out);
        if (*manifest_cmd) return cmd_manifest(mf_root, mf_pattern, mf_out);
        if (*synth_cmd)
            return cmd_synth(sy_out, sy_speakers, sy_digits, sy_trials, sy_seed, sy_rate,
                             sy_duration);
        if (*simulate_cmd) return cmd_simulate(sim_opts, sim_csv, sim_dump);
        if (*distance_cmd) return cmd_distance(dist_opts);
        if (*sweep_cmd) return cmd_sweep(sweep_opts, sw_param, sw_grid);
        if (*tenclass_cmd) return cmd_tenclass(ten_opts);
        if (*reduced_cmd) return cmd_reduced(red_opts);
        if (*bench_cmd) return cmd_bench(bench_opts);
        if (*gen_cmd) return cmd_genspeaker(gen_opts);
        if (*train_cmd) return cmd_train(train_opts, tr_source, tr_clf, tr_subset);
        if (*eval_cmd) return cmd_eval(eval_opts, ev_model, ev_source, !ev_all);
    } catch (const ConfigError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    } catch (const Error& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 0;
}
