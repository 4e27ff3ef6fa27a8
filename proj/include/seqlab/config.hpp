#pragma once

// Experiment configuration: flat "key = value" text with section prefixes
// (dataset.*, split.*, model.*, training.*, evaluation.*, reported.*).
// Unknown keys are rejected before any work starts; the effective config
// (defaults filled in) can be emitted back out and re-parsed to reproduce
// a run.

#include <map>
#include <string>

#include "seqlab/corpus.hpp"
#include "seqlab/evaluation.hpp"
#include "seqlab/models.hpp"
#include "seqlab/training.hpp"

namespace seqlab {

struct ExperimentConfig {
    std::uint64_t seed = 42;
    std::string output_dir = "run_out";

    std::string dataset_path;
    DataFormat dataset_format = DataFormat::pair_per_line;
    int min_len = 5;

    int num_val_users = 2048;
    std::uint64_t split_seed = 1; // fixed validation-user set by default

    bool popularity_full_counts = false; // train-only counts by default

    ModelConfig model;
    TrainConfig training;
    EvalConfig evaluation;

    long long base_steps = 400000; // sweep base step budget

    std::map<std::string, double> reported; // metric key -> reported baseline value
};

ExperimentConfig parse_experiment_config(const std::string& text, const std::string& name);
ExperimentConfig load_experiment_config(const std::string& path);

// effective config with all defaults filled in
std::string emit_experiment_config(const ExperimentConfig& cfg);

} // namespace seqlab
