#include "cegncde/commands.hpp"

#include "cegncde/errors.hpp"
#include "cegncde/version.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

namespace fs = std::filesystem;

namespace cegncde {

namespace {

std::string join_path(const std::string& dir, const std::string& name) { return (fs::path(dir) / name).string(); }

void ensure_dir(const std::string& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw DataError("cannot create directory '" + dir + "': " + ec.message());
}

struct PreparedData {
    RawDataset raw;  // after aggregation, before filling
    std::array<SeriesSegment, 3> segments;
};

PreparedData prepare_data(const RunConfig& rc, const std::string& dataset_path) {
    if (dataset_path.empty()) throw ConfigError("no dataset given (set \"dataset\" or pass --dataset)");
    PreparedData p;
    p.raw = load_dataset(dataset_path);
    if (rc.aggregate_minutes > 0 && rc.aggregate_minutes != p.raw.interval_minutes) {
        p.raw = aggregate(p.raw, rc.aggregate_minutes);
    }
    const Tensor3 missing = missing_mask(p.raw.values);
    const RawDataset filled = fill_missing(p.raw);
    p.segments = split(filled.values, missing, rc.split_ratios, rc.window, rc.horizon);
    return p;
}

json mask_summary(const MaskMatrix& m) {
    return {{"edges", static_cast<long long>(m.values.sum())}, {"all_ones", (m.values.array() == 1.0).all()}};
}

json effective_record(const Model& m, const std::string& geo_source, const std::string& sem_source,
                      const PreparedData& data) {
    json branches = json::array();
    if (!m.ablation.no_gvf) branches.push_back("geographic");
    if (!m.ablation.no_svf) branches.push_back("semantic");
    json splits = json::array();
    for (const auto& s : data.segments) {
        splits.push_back({{"offset", s.offset},
                          {"steps", s.values.steps()},
                          {"samples", window_count(s.values.steps(), m.dims.window, m.dims.horizon)}});
    }
    return {{"ablation", m.ablation.name()},
            {"branches", branches},
            {"static_adjacency", !m.ablation.no_static},
            {"beta", m.beta},
            {"geo_mask", {{"source", geo_source}, {"summary", mask_summary(m.geo_mask)}}},
            {"sem_mask", {{"source", sem_source}, {"summary", mask_summary(m.sem_mask)}}},
            {"data",
             {{"nodes", m.dims.nodes},
              {"channels", m.dims.channels},
              {"steps", data.raw.steps()},
              {"interval_minutes", data.raw.interval_minutes},
              {"splits", splits}}}};
}

Tensor3 read_filled_window(const std::string& path, const Model& model) {
    const Tensor3 w = read_window_csv(path, model.dims.nodes, model.dims.channels);
    if (w.steps() != model.dims.window) {
        throw ShapeError(path + ": window has " + std::to_string(w.steps()) + " steps, expected T = " +
                         std::to_string(model.dims.window));
    }
    return w;
}

}  // namespace

TrainOutputs cmd_train(const std::string& config_path, const std::vector<std::pair<std::string, std::string>>& overrides,
                       std::ostream& log) {
    json cfg = resolve_config(config_path, overrides);
    const RunConfig rc = RunConfig::from_json(cfg);
    const PreparedData data = prepare_data(rc, rc.dataset);
    const Tensor3& train_values = data.segments[0].values;
    const int nodes = train_values.nodes();

    Model model;
    model.dims = rc.dims(nodes, train_values.channels());
    model.dims.validate();
    model.ablation = rc.train.ablation;
    model.beta = model.ablation.no_static ? 0.0 : rc.train.beta;
    model.solver = rc.train.solver;
    model.scaler = ZScore::fit(train_values);

    std::string geo_source;
    std::string sem_source;
    if (model.ablation.no_mask) {
        model.geo_mask = MaskMatrix::all_ones(nodes, MaskKind::geographic);
        model.sem_mask = MaskMatrix::all_ones(nodes, MaskKind::semantic);
        geo_source = "all-ones (no-mask ablation)";
        sem_source = "all-ones (no-mask ablation)";
    } else {
        if (rc.distance_file.empty()) {
            log << "warning: no distance_file given; geographic mask is all-ones\n";
            model.geo_mask = MaskMatrix::all_ones(nodes, MaskKind::geographic);
            geo_source = "all-ones (no distance file)";
        } else {
            model.geo_mask = geographic_mask(read_distance_table(rc.distance_file), rc.geo_threshold, nodes);
            geo_source = "distance threshold " + format_double(rc.geo_threshold) + " on " + rc.distance_file;
        }
        model.sem_mask = semantic_mask(train_values, rc.semantic_k, static_cast<std::size_t>(rc.dtw_max_points),
                                       rc.train.threads);
        sem_source = "dtw top-" + std::to_string(rc.semantic_k) + " on training split";
    }
    model.params = ModelParams::init(model.dims, model.ablation, rc.train.seed);
    model.check();

    json resolved{{"version", kVersion}, {"config", cfg}, {"effective", effective_record(model, geo_source, sem_source, data)}};

    ensure_dir(rc.output_dir);
    TrainOutputs out;
    out.resolved = resolved;
    out.resolved_config = join_path(rc.output_dir, "config.resolved.json");
    write_json_file(out.resolved_config, resolved);
    write_mask_csv(model.geo_mask, join_path(rc.output_dir, "geo_mask.csv"));
    write_mask_csv(model.sem_mask, join_path(rc.output_dir, "semantic_mask.csv"));

    const WindowSet train_set(data.segments[0], rc.window, rc.horizon);
    const WindowSet val_set(data.segments[1], rc.window, rc.horizon);
    const WindowSet test_set(data.segments[2], rc.window, rc.horizon);
    log << "training on " << train_set.size() << " windows, validating on " << val_set.size() << '\n';

    TrainHooks hooks;
    hooks.on_epoch = [&](const HistoryRow& row) {
        log << "epoch " << row.epoch << " train_loss " << format_double(row.train_loss) << " val_mae "
            << format_double(row.val_mae) << '\n';
    };
    const TrainResult result = train(model, train_set, val_set, rc.train, hooks);
    model.params = result.params;

    out.history = join_path(rc.output_dir, "history.csv");
    write_history_csv(out.history, result.history);

    const json metrics{{"best_epoch", result.best_epoch},
                       {"stopped_early", result.stopped_early},
                       {"val", metrics_to_json(evaluate(model, val_set))},
                       {"test", metrics_to_json(evaluate(model, test_set))}};
    out.metrics = join_path(rc.output_dir, "metrics.json");
    write_json_file(out.metrics, json{{"version", kVersion}, {"config", resolved}, {"metrics", metrics}});

    Checkpoint ck;
    ck.config = resolved;
    ck.metrics = metrics;
    ck.model = model;
    out.checkpoint = join_path(rc.output_dir, "checkpoint.json");
    save_checkpoint(out.checkpoint, ck);
    return out;
}

json cmd_evaluate(const std::string& checkpoint_path, const std::string& dataset_path, const std::string& split_name) {
    const Checkpoint ck = load_checkpoint(checkpoint_path);
    const RunConfig rc = RunConfig::from_json(ck.config.at("config"));
    const std::string path = dataset_path.empty() ? rc.dataset : dataset_path;
    const PreparedData data = prepare_data(rc, path);
    const Model& model = ck.model;
    const Tensor3& any = data.segments[0].values;
    if (any.nodes() != model.dims.nodes || any.channels() != model.dims.channels) {
        throw ShapeError("dataset has N = " + std::to_string(any.nodes()) + ", C = " + std::to_string(any.channels()) +
                         " but the checkpoint expects N = " + std::to_string(model.dims.nodes) +
                         ", C = " + std::to_string(model.dims.channels));
    }
    int index = -1;
    if (split_name == "train") index = 0;
    if (split_name == "val") index = 1;
    if (split_name == "test") index = 2;
    MetricsReport report;
    if (index >= 0) {
        report = evaluate(model, WindowSet(data.segments[index], model.dims.window, model.dims.horizon));
    } else if (split_name == "all") {
        MetricsAccumulator acc(model.dims.horizon);
        for (const auto& seg : data.segments) {
            const WindowSet set(seg, model.dims.window, model.dims.horizon);
            for (std::size_t i = 0; i < set.size(); ++i) {
                const WindowedSample s = set[i];
                acc.add(predict(model, s.input), s.target, s.target_missing);
            }
        }
        report = acc.report();
    } else {
        throw ConfigError("unknown split '" + split_name + "' (expected train, val, test or all)");
    }
    return {{"version", kVersion},
            {"config", ck.config},
            {"checkpoint", checkpoint_path},
            {"dataset", path},
            {"split", split_name},
            {"metrics", metrics_to_json(report)}};
}

Tensor3 cmd_forecast(const std::string& checkpoint_path, const std::string& window_csv, const std::string& out_csv) {
    const Checkpoint ck = load_checkpoint(checkpoint_path);
    const Tensor3 window = read_filled_window(window_csv, ck.model);
    const Tensor3 forecast = predict(ck.model, window);
    if (!out_csv.empty()) write_horizon_csv(out_csv, forecast, {});
    return forecast;
}

std::vector<std::string> cmd_export_adjacency(const std::string& checkpoint_path, const std::string& window_csv,
                                              const std::vector<double>& times, const std::string& out_dir) {
    if (times.empty()) throw ConfigError("export-adjacency: no times given");
    const Checkpoint ck = load_checkpoint(checkpoint_path);
    const Model& model = ck.model;
    const Tensor3 window = read_filled_window(window_csv, model);
    const double t_end = model.dims.window - 1;
    for (double t : times) {
        if (!(t >= 0.0 && t <= t_end)) {
            throw ConfigError("export-adjacency: time " + format_double(t) + " is outside the window [0, " +
                              format_double(t_end) + "]");
        }
    }
    ensure_dir(out_dir);
    std::vector<std::string> header{"node"};
    std::vector<std::string> labels;
    for (int n = 0; n < model.dims.nodes; ++n) {
        header.push_back("node_" + std::to_string(n));
        labels.push_back("node_" + std::to_string(n));
    }
    std::vector<std::string> written;
    json files = json::array();
    for (double t : times) {
        const Mat a = semantic_adjacency_at(model, window, t);
        std::vector<std::vector<double>> rows(static_cast<std::size_t>(a.rows()));
        for (Eigen::Index i = 0; i < a.rows(); ++i)
            for (Eigen::Index j = 0; j < a.cols(); ++j) rows[i].push_back(a(i, j));
        const std::string path = join_path(out_dir, "adjacency_t" + format_double(t) + ".csv");
        write_csv_table(path, header, labels, rows);
        written.push_back(path);
        files.push_back({{"time", t}, {"file", fs::path(path).filename().string()}});
    }
    write_json_file(join_path(out_dir, "adjacency.json"),
                    json{{"version", kVersion}, {"config", ck.config}, {"window", window_csv}, {"files", files}});
    return written;
}

std::string cmd_gen_synthetic(const SyntheticSpec& spec, const std::string& out_dir, bool with_distances) {
    const RawDataset data = generate_synthetic(spec);
    ensure_dir(out_dir);
    const std::string sidecar = write_dataset(data, out_dir);
    if (with_distances) write_distance_table(synthetic_distances(spec.nodes), join_path(out_dir, "distances.csv"));
    write_json_file(join_path(out_dir, "synthetic.json"), json{{"version", kVersion}, {"spec", spec.to_json()}});
    return sidecar;
}

GradCheckReport cmd_gradcheck(const MicroSpec& spec, const GradCheckOptions& options, std::ostream& out) {
    const MicroProblem problem = make_micro_problem(spec);
    const GradCheckReport report = gradient_check(problem.model, problem.batch, options);
    out << "ablation " << spec.ablation.name() << ", solver " << to_string(spec.solver.method) << ", h "
        << format_double(options.step) << ", tolerance " << format_double(options.tolerance) << '\n';
    for (const auto& t : report.tensors) {
        out << (t.relative_error <= options.tolerance ? "ok   " : "FAIL ") << t.name << " rel_err "
            << format_double(t.relative_error) << " |analytic| " << format_double(t.analytic_norm) << " |numeric| "
            << format_double(t.numeric_norm) << '\n';
    }
    out << (report.passed ? "PASS" : "FAIL") << " max relative error " << format_double(report.max_relative_error)
        << '\n';
    return report;
}

namespace {

std::vector<double> parse_times(const std::string& text) {
    std::vector<double> times;
    std::stringstream ss(text);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
        try {
            std::size_t used = 0;
            times.push_back(std::stod(cell, &used));
            if (used != cell.size()) throw std::invalid_argument(cell);
        } catch (const std::logic_error&) {
            throw ConfigError("--times: cannot parse '" + cell + "'");
        }
    }
    return times;
}

int dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Continuously evolving graph neural CDE traffic forecaster", "cegncde"};
    app.set_version_flag("--version", std::string(kVersion));
    app.require_subcommand(1);

    std::string config_path;
    auto* train_cmd = app.add_subcommand("train", "Train a model; other --key value flags override config keys");
    train_cmd->add_option("--config", config_path, "JSON config file");
    train_cmd->allow_extras();

    std::string checkpoint, dataset, split_name = "test", metrics_out;
    auto* eval_cmd = app.add_subcommand("evaluate", "Compute MAE/RMSE/MAPE of a checkpoint");
    eval_cmd->add_option("--checkpoint", checkpoint)->required();
    eval_cmd->add_option("--dataset", dataset, "dataset sidecar (default: the one in the checkpoint config)");
    eval_cmd->add_option("--split", split_name, "train, val, test or all")->capture_default_str();
    eval_cmd->add_option("--out", metrics_out, "also write the report here");

    std::string input, forecast_out;
    auto* fc_cmd = app.add_subcommand("forecast", "Forecast T' steps from one input window CSV");
    fc_cmd->add_option("--checkpoint", checkpoint)->required();
    fc_cmd->add_option("--input", input)->required();
    fc_cmd->add_option("--out", forecast_out)->required();

    std::string times_text, adj_dir;
    auto* adj_cmd = app.add_subcommand("export-adjacency", "Write the semantic-masked adjacency at given solver times");
    adj_cmd->add_option("--checkpoint", checkpoint)->required();
    adj_cmd->add_option("--input", input)->required();
    adj_cmd->add_option("--times", times_text, "comma-separated times in [0, T-1]")->required();
    adj_cmd->add_option("--out-dir", adj_dir)->required();

    SyntheticSpec syn;
    std::string syn_spec_path, syn_dir;
    bool with_distances = false;
    auto* syn_cmd = app.add_subcommand("gen-synthetic", "Generate a synthetic dataset");
    syn_cmd->add_option("--out-dir", syn_dir)->required();
    syn_cmd->add_option("--spec", syn_spec_path, "JSON spec; flags given alongside override it");
    syn_cmd->add_option("--nodes", syn.nodes);
    syn_cmd->add_option("--steps", syn.steps);
    syn_cmd->add_option("--channels", syn.channels);
    syn_cmd->add_option("--phase-groups", syn.phase_groups);
    syn_cmd->add_option("--interval-minutes", syn.interval_minutes);
    syn_cmd->add_option("--period", syn.period);
    syn_cmd->add_option("--amplitude", syn.amplitude);
    syn_cmd->add_option("--level", syn.level);
    syn_cmd->add_option("--level-step", syn.level_step);
    syn_cmd->add_option("--noise-std", syn.noise_std);
    syn_cmd->add_option("--missing-rate", syn.missing_rate);
    syn_cmd->add_option("--seed", syn.seed);
    syn_cmd->add_flag("--distances", with_distances, "also write distances.csv (nodes on a line)");

    MicroSpec micro;
    GradCheckOptions gc;
    std::string micro_ablation = "none", micro_solver = "rk4";
    auto* gc_cmd = app.add_subcommand("gradcheck", "Finite-difference check of every parameter gradient");
    gc_cmd->add_option("--nodes", micro.nodes)->capture_default_str();
    gc_cmd->add_option("--channels", micro.channels)->capture_default_str();
    gc_cmd->add_option("--window", micro.window)->capture_default_str();
    gc_cmd->add_option("--horizon", micro.horizon)->capture_default_str();
    gc_cmd->add_option("--hidden", micro.hidden)->capture_default_str();
    gc_cmd->add_option("--qk-dim", micro.qk_dim)->capture_default_str();
    gc_cmd->add_option("--embed-dim", micro.embed_dim)->capture_default_str();
    gc_cmd->add_option("--layers", micro.layers)->capture_default_str();
    gc_cmd->add_option("--batch", micro.batch)->capture_default_str();
    gc_cmd->add_option("--beta", micro.beta)->capture_default_str();
    gc_cmd->add_option("--seed", micro.seed)->capture_default_str();
    gc_cmd->add_option("--solver", micro_solver)->capture_default_str();
    gc_cmd->add_option("--steps-per-interval", micro.solver.steps_per_interval)->capture_default_str();
    gc_cmd->add_option("--ablation", micro_ablation)->capture_default_str();
    gc_cmd->add_option("--step", gc.step, "finite-difference step")->capture_default_str();
    gc_cmd->add_option("--tolerance", gc.tolerance)->capture_default_str();
    gc_cmd->add_flag("--corrupt-gradient", gc.corrupt_gradient, "perturb one analytic gradient entry");

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? 0 : 2;
    }

    if (train_cmd->parsed()) {
        const auto overrides = parse_override_args(train_cmd->remaining());
        const TrainOutputs o = cmd_train(config_path, overrides, err);
        out << "checkpoint " << o.checkpoint << '\n' << "history " << o.history << '\n';
        return 0;
    }
    if (eval_cmd->parsed()) {
        const json report = cmd_evaluate(checkpoint, dataset, split_name);
        if (!metrics_out.empty()) write_json_file(metrics_out, report);
        out << report.at("metrics").dump(2) << '\n';
        return 0;
    }
    if (fc_cmd->parsed()) {
        cmd_forecast(checkpoint, input, forecast_out);
        out << "forecast " << forecast_out << '\n';
        return 0;
    }
    if (adj_cmd->parsed()) {
        for (const auto& p : cmd_export_adjacency(checkpoint, input, parse_times(times_text), adj_dir)) out << p << '\n';
        return 0;
    }
    if (syn_cmd->parsed()) {
        SyntheticSpec spec = syn;
        if (!syn_spec_path.empty()) {
            std::ifstream in(syn_spec_path);
            if (!in) throw ConfigError("cannot open spec '" + syn_spec_path + "'");
            json j;
            try {
                in >> j;
            } catch (const json::exception& e) {
                throw ConfigError(syn_spec_path + ": invalid JSON (" + e.what() + ")");
            }
            spec = SyntheticSpec::from_json(j);
            // flags given explicitly win over the file
            auto take = [&](const char* flag, auto& dst, const auto& src) {
                if (syn_cmd->count(flag) > 0) dst = src;
            };
            take("--nodes", spec.nodes, syn.nodes);
            take("--steps", spec.steps, syn.steps);
            take("--channels", spec.channels, syn.channels);
            take("--phase-groups", spec.phase_groups, syn.phase_groups);
            take("--interval-minutes", spec.interval_minutes, syn.interval_minutes);
            take("--period", spec.period, syn.period);
            take("--amplitude", spec.amplitude, syn.amplitude);
            take("--level", spec.level, syn.level);
            take("--level-step", spec.level_step, syn.level_step);
            take("--noise-std", spec.noise_std, syn.noise_std);
            take("--missing-rate", spec.missing_rate, syn.missing_rate);
            take("--seed", spec.seed, syn.seed);
        }
        out << cmd_gen_synthetic(spec, syn_dir, with_distances) << '\n';
        return 0;
    }
    if (gc_cmd->parsed()) {
        micro.ablation = Ablation::parse(micro_ablation);
        micro.solver.method = parse_solver_method(micro_solver);
        const GradCheckReport report = cmd_gradcheck(micro, gc, out);
        return report.passed ? 0 : 4;
    }
    return 2;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    try {
        return dispatch(args, out, err);
    } catch (const ConfigError& e) {
        err << "config error: " << e.what() << '\n';
        return 2;
    } catch (const DataError& e) {
        err << "data error: " << e.what() << '\n';
        return 3;
    } catch (const NumericalError& e) {
        err << "numerical error: " << e.what() << '\n';
        return 4;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return 1;
    }
}

}  // namespace cegncde
