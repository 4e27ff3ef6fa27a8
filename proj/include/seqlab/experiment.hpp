#pragma once

// End-to-end experiment orchestration: dataset -> split -> train -> evaluate,
// artifact writing, training-budget sweeps and multi-run comparison reports.
// Everything is templated on the scalar type; the CLI dispatches on the
// SEQLAB_FP64 environment variable.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "seqlab/checkpoint.hpp"
#include "seqlab/config.hpp"
#include "seqlab/corpus.hpp"
#include "seqlab/evaluation.hpp"
#include "seqlab/models.hpp"
#include "seqlab/stats_test.hpp"
#include "seqlab/training.hpp"

namespace seqlab {

// SEQLAB_FP64=1 switches every model-side computation to 64-bit floats
inline bool fp64_enabled() {
    const char* v = std::getenv("SEQLAB_FP64");
    return v && *v && std::string(v) != "0";
}

struct PreparedData {
    InteractionDataset dataset;
    SplitDataset split;
    PopularityTable popularity;
};

inline PreparedData prepare_data(const ExperimentConfig& cfg) {
    PreparedData d;
    auto raw = load_interactions(cfg.dataset_path, cfg.dataset_format);
    d.dataset = preprocess_min_length(raw, cfg.min_len);
    d.split = leave_one_out_split(d.dataset, cfg.num_val_users, cfg.split_seed);
    d.popularity = cfg.popularity_full_counts ? build_popularity_table(d.dataset)
                                              : build_popularity_table(d.split);
    return d;
}

// score function for leave-one-out evaluation: the model sees the user's
// full history except the held-out test item. History exclusion is applied
// inside evaluate_model (it must keep the positive as a candidate), so no
// exclusion list is passed here.
template <class S>
ScoreFn make_score_fn(const Model<S>& model, const SplitDataset& split) {
    return [&model, &split](int user) {
        std::vector<int> seq = split.train[user];
        if (auto it = split.validation.find(user); it != split.validation.end())
            seq.push_back(it->second);
        if (model.is_encoder()) return predict_next_item(model.encoder(), seq, {});
        return predict_next_item(model.mf(), user, {});
    };
}

struct RunResult {
    TrainLog train_log;
    EvalReport eval;
    std::vector<std::pair<std::string, ReplicationVerdict>> replication;
};

inline void write_text_file(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write file: " + path);
    out << text;
}

inline std::string replication_csv(
    const std::vector<std::pair<std::string, ReplicationVerdict>>& rows) {
    std::ostringstream out;
    out.precision(17);
    out << "metric,observed,reported,relative_diff,replicated\n";
    for (const auto& [key, v] : rows)
        out << key << ',' << v.observed << ',' << v.reported << ',' << v.relative_diff << ','
            << (v.replicated ? 1 : 0) << '\n';
    return out.str();
}

template <class S>
RunResult run_experiment(const ExperimentConfig& cfg, const PreparedData& data,
                         const std::string& output_dir = "") {
    Model<S> model = build_model<S>(cfg.model, (int)data.split.train.size(),
                                    data.split.num_items, cfg.seed);
    RunResult res;
    res.train_log = train_model(model, data.split, cfg.training);
    res.eval = evaluate_model(make_score_fn(model, data.split), data.split, data.popularity,
                              cfg.evaluation);

    for (const auto& [key, reported] : cfg.reported) {
        const auto it = res.eval.means.find(key);
        if (it == res.eval.means.end())
            throw ConfigError("reported metric not produced by evaluation: " + key);
        res.replication.emplace_back(key, replication_check(it->second, reported));
    }

    if (!output_dir.empty()) {
        namespace fs = std::filesystem;
        fs::create_directories(output_dir);
        const fs::path dir(output_dir);
        write_text_file((dir / "config.txt").string(), emit_experiment_config(cfg));
        write_text_file((dir / "trainlog.csv").string(), res.train_log.csv());
        write_text_file((dir / "eval_report.json").string(), eval_report_json(res.eval));
        write_text_file((dir / "eval_report.csv").string(),
                        eval_report_csv(res.eval, res.train_log.total_seconds));
        if (!res.replication.empty())
            write_text_file((dir / "replication.csv").string(), replication_csv(res.replication));
        save_checkpoint((dir / "checkpoint.bin").string(),
                        checkpoint_from_params(model.parameters()));
    }
    return res;
}

struct SweepRow {
    double multiplier = 0;
    long long steps = 0;
    double train_seconds = 0;
    std::map<std::string, double> means;
};

inline std::string sweep_tsv(const std::vector<SweepRow>& rows,
                             const std::vector<std::string>& metric_keys) {
    std::ostringstream out;
    out.precision(17);
    out << "multiplier\tsteps\ttrain_seconds";
    for (const auto& k : metric_keys) out << '\t' << k;
    out << '\n';
    for (const auto& r : rows) {
        out << r.multiplier << '\t' << r.steps << '\t' << r.train_seconds;
        for (const auto& k : metric_keys) out << '\t' << r.means.at(k);
        out << '\n';
    }
    return out.str();
}

// retrain from scratch at each step budget base_steps * multiplier
template <class S>
std::vector<SweepRow> sweep_training_budget(const ExperimentConfig& cfg, const PreparedData& data,
                                            const std::vector<double>& multipliers,
                                            const std::string& output_dir = "") {
    std::vector<SweepRow> rows;
    for (double m : multipliers) {
        ExperimentConfig c = cfg;
        c.training.steps = std::max<long long>(1, (long long)std::llround(cfg.base_steps * m));
        auto res = run_experiment<S>(c, data);
        rows.push_back({m, c.training.steps, res.train_log.total_seconds, res.eval.means});
    }
    if (!output_dir.empty()) {
        std::vector<std::string> keys;
        for (const auto& [k, v] : rows.front().means) keys.push_back(k);
        std::filesystem::create_directories(output_dir);
        write_text_file((std::filesystem::path(output_dir) / "frontier.tsv").string(),
                        sweep_tsv(rows, keys));
    }
    return rows;
}

// comparison report over named evaluation reports: per-metric means, the best
// run, and Bonferroni-corrected paired t-tests of every other run against it
struct ComparisonReport {
    struct Cell {
        double mean = 0;
        SignificanceResult vs_best; // num_tests = (runs - 1) * metrics
        bool is_best = false;
    };
    std::vector<std::string> run_names;
    std::vector<std::string> metric_keys;
    std::map<std::string, std::map<std::string, Cell>> cells; // metric -> run -> cell
};

inline ComparisonReport compare_runs(
    const std::vector<std::pair<std::string, EvalReport>>& runs) {
    if (runs.size() < 2) throw ContractError("compare_runs: need at least two runs");
    ComparisonReport rep;
    for (const auto& [name, r] : runs) rep.run_names.push_back(name);
    for (const auto& [key, vals] : runs.front().second.per_user) rep.metric_keys.push_back(key);

    const int num_tests = (int)((runs.size() - 1) * rep.metric_keys.size());
    for (const auto& key : rep.metric_keys) {
        std::size_t best = 0;
        for (std::size_t i = 1; i < runs.size(); ++i)
            if (runs[i].second.means.at(key) > runs[best].second.means.at(key)) best = i;
        const auto& best_vals = runs[best].second.per_user.at(key);
        for (std::size_t i = 0; i < runs.size(); ++i) {
            ComparisonReport::Cell cell;
            cell.mean = runs[i].second.means.at(key);
            cell.is_best = (i == best);
            if (i != best)
                cell.vs_best =
                    paired_ttest_bonferroni(runs[i].second.per_user.at(key), best_vals, num_tests);
            rep.cells[key][runs[i].first] = cell;
        }
    }
    return rep;
}

inline std::string comparison_report_text(const ComparisonReport& rep) {
    std::ostringstream out;
    out << std::fixed << std::setprecision(4);
    out << "metric";
    for (const auto& name : rep.run_names) out << '\t' << name;
    out << '\n';
    for (const auto& key : rep.metric_keys) {
        out << key;
        for (const auto& name : rep.run_names) {
            const auto& cell = rep.cells.at(key).at(name);
            out << '\t' << cell.mean;
            if (cell.is_best) out << '*';
            else if (cell.vs_best.significant) out << " (p=" << std::setprecision(4)
                                                   << cell.vs_best.corrected_p << ")"
                                                   << std::setprecision(4);
        }
        out << '\n';
    }
    out << "* best per metric; (p=...) Bonferroni-corrected paired t-test vs best, alpha 0.05\n";
    return out.str();
}

} // namespace seqlab
