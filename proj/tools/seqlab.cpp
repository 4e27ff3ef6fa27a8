// seqlab command-line interface.
//
// Subcommands: stats, train, evaluate, run, sweep, aggregate-review, report.
// Set SEQLAB_FP64=1 to run every model-side computation in 64-bit floats
// (useful for verifying that results are not an artifact of 32-bit noise).

#include <iostream>

#include <CLI11.hpp>

#include "seqlab/experiment.hpp"
#include "seqlab/review.hpp"
#include "seqlab/synthetic.hpp"

namespace {

using namespace seqlab;

DataFormat parse_format(const std::string& s) {
    if (s == "pairs") return DataFormat::pair_per_line;
    if (s == "csv") return DataFormat::csv_timestamp;
    throw ConfigError("unknown data format: " + s + " (expected pairs|csv)");
}

std::vector<double> parse_multipliers(const std::string& s) {
    std::vector<double> out;
    std::istringstream in(s);
    std::string tok;
    while (std::getline(in, tok, ',')) out.push_back(std::stod(tok));
    if (out.empty()) throw ConfigError("empty multiplier list");
    return out;
}

template <class S>
int do_train(const ExperimentConfig& cfg, const std::string& out_dir) {
    auto data = prepare_data(cfg);
    Model<S> model = build_model<S>(cfg.model, (int)data.split.train.size(),
                                    data.split.num_items, cfg.seed);
    TrainLog log = train_model(model, data.split, cfg.training);

    namespace fs = std::filesystem;
    fs::create_directories(out_dir);
    const fs::path dir(out_dir);
    write_text_file((dir / "config.txt").string(), emit_experiment_config(cfg));
    write_text_file((dir / "trainlog.csv").string(), log.csv());
    save_checkpoint((dir / "checkpoint.bin").string(), checkpoint_from_params(model.parameters()));
    std::cout << "trained " << to_string(cfg.model.kind) << ": " << log.total_steps << " steps, "
              << log.total_seconds << " s, stop reason " << log.stop_reason << '\n';
    return 0;
}

template <class S>
int do_evaluate(const ExperimentConfig& cfg, const std::string& checkpoint_path,
                const std::string& out_dir) {
    auto data = prepare_data(cfg);
    Model<S> model = build_model<S>(cfg.model, (int)data.split.train.size(),
                                    data.split.num_items, cfg.seed);
    params_from_checkpoint(load_checkpoint(checkpoint_path), model.parameters());
    EvalReport report = evaluate_model(make_score_fn(model, data.split), data.split,
                                       data.popularity, cfg.evaluation);
    if (!out_dir.empty()) {
        std::filesystem::create_directories(out_dir);
        const std::filesystem::path dir(out_dir);
        write_text_file((dir / "eval_report.json").string(), eval_report_json(report));
        write_text_file((dir / "eval_report.csv").string(), eval_report_csv(report, 0.0));
    }
    for (const auto& [key, value] : report.means) std::cout << key << ' ' << value << '\n';
    return 0;
}

template <class S>
int do_run(const ExperimentConfig& cfg, const std::string& out_dir) {
    auto data = prepare_data(cfg);
    RunResult res = run_experiment<S>(cfg, data, out_dir);
    for (const auto& [key, value] : res.eval.means) std::cout << key << ' ' << value << '\n';
    for (const auto& [key, v] : res.replication)
        std::cout << "replication " << key << ": observed " << v.observed << " reported "
                  << v.reported << " rel_diff " << v.relative_diff << ' '
                  << (v.replicated ? "REPLICATED" : "NOT REPLICATED") << '\n';
    return 0;
}

template <class S>
int do_sweep(const ExperimentConfig& cfg, const std::vector<double>& multipliers,
             const std::string& out_dir) {
    auto data = prepare_data(cfg);
    auto rows = sweep_training_budget<S>(cfg, data, multipliers, out_dir);
    for (const auto& r : rows) {
        std::cout << "x" << r.multiplier << " steps " << r.steps << " train_s " << r.train_seconds;
        for (const auto& [k, v] : r.means)
            if (k == "sampled_ndcg@10" || k == "unsampled_ndcg@10") std::cout << ' ' << k << ' ' << v;
        std::cout << '\n';
    }
    return 0;
}

int do_report(const std::vector<std::string>& run_dirs) {
    std::vector<std::pair<std::string, EvalReport>> runs;
    for (const auto& dir : run_dirs) {
        std::ifstream in(std::filesystem::path(dir) / "eval_report.json");
        if (!in) throw std::runtime_error("no eval_report.json in " + dir);
        std::ostringstream buf;
        buf << in.rdbuf();
        runs.emplace_back(std::filesystem::path(dir).filename().string(),
                          eval_report_from_json(buf.str()));
    }
    std::cout << comparison_report_text(compare_runs(runs));
    return 0;
}

template <class Fn>
int dispatch_precision(Fn&& fn) {
    return fp64_enabled() ? fn.template operator()<double>() : fn.template operator()<float>();
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"seqlab: a sequential-recommendation laboratory"};
    app.require_subcommand(1);

    // stats
    auto* stats = app.add_subcommand("stats", "dataset statistics after preprocessing");
    std::string stats_input, stats_format = "pairs";
    int stats_min_len = 5;
    stats->add_option("--input", stats_input, "interaction file")->required();
    stats->add_option("--format", stats_format, "pairs|csv");
    stats->add_option("--min-len", stats_min_len, "minimum sequence length kept");

    // shared config/out options
    std::string config_path, out_dir, checkpoint_path, multipliers = "0.5,1,2,4,8,16,32";

    auto* train = app.add_subcommand("train", "train a model and save a checkpoint");
    train->add_option("--config", config_path, "experiment config file")->required();
    train->add_option("--out", out_dir, "output directory")->required();

    auto* evaluate = app.add_subcommand("evaluate", "evaluate a saved checkpoint");
    evaluate->add_option("--config", config_path, "experiment config file")->required();
    evaluate->add_option("--checkpoint", checkpoint_path, "checkpoint file")->required();
    evaluate->add_option("--out", out_dir, "output directory (optional)");

    auto* run = app.add_subcommand("run", "train then evaluate, writing all artifacts");
    run->add_option("--config", config_path, "experiment config file")->required();
    run->add_option("--out", out_dir, "output directory")->required();

    auto* sweep = app.add_subcommand("sweep", "training-budget sweep over step multipliers");
    sweep->add_option("--config", config_path, "experiment config file")->required();
    sweep->add_option("--out", out_dir, "output directory")->required();
    sweep->add_option("--multipliers", multipliers, "comma-separated step multipliers");

    auto* review = app.add_subcommand("aggregate-review", "aggregate comparison outcome records");
    std::string review_input, review_json_out;
    int min_papers = 5;
    review->add_option("--input", review_input, "comparison records csv")->required();
    review->add_option("--min-papers", min_papers, "minimum records for a per-dataset row");
    review->add_option("--json-out", review_json_out, "also write the table as json");

    auto* report = app.add_subcommand("report", "compare several finished runs");
    std::vector<std::string> run_dirs;
    report->add_option("dirs", run_dirs, "run output directories")->required()->expected(-2);

    CLI11_PARSE(app, argc, argv);

    try {
        if (stats->parsed()) {
            auto ds = seqlab::preprocess_min_length(
                seqlab::load_interactions(stats_input, parse_format(stats_format)), stats_min_len);
            std::cout << seqlab::stats_csv(seqlab::compute_stats(ds));
            return 0;
        }
        if (review->parsed()) {
            auto table =
                seqlab::aggregate_outcomes(seqlab::load_comparisons(review_input), min_papers);
            std::cout << seqlab::outcome_table_csv(table);
            if (!review_json_out.empty())
                seqlab::write_text_file(review_json_out, seqlab::outcome_table_json(table));
            return 0;
        }
        if (report->parsed()) return do_report(run_dirs);

        const auto cfg = seqlab::load_experiment_config(config_path);
        if (train->parsed())
            return dispatch_precision([&]<class S>() { return do_train<S>(cfg, out_dir); });
        if (evaluate->parsed())
            return dispatch_precision(
                [&]<class S>() { return do_evaluate<S>(cfg, checkpoint_path, out_dir); });
        if (run->parsed())
            return dispatch_precision([&]<class S>() { return do_run<S>(cfg, out_dir); });
        if (sweep->parsed())
            return dispatch_precision([&]<class S>() {
                return do_sweep<S>(cfg, parse_multipliers(multipliers), out_dir);
            });
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
