#pragma once

// Sampled and unsampled ranking metrics under the leave-one-out protocol.
// Per-user evaluation is embarrassingly parallel; each user's negative
// sampler is seeded by (global seed, user) so results do not depend on
// scheduling order.

#include <cstdint>
#include <functional>
#include <map>
#include <random>
#include <string>
#include <vector>

#include "seqlab/corpus.hpp"

namespace seqlab {

enum class EvalMode { sampled, unsampled, both };

inline std::string to_string(EvalMode m) {
    switch (m) {
        case EvalMode::sampled: return "sampled";
        case EvalMode::unsampled: return "unsampled";
        case EvalMode::both: return "both";
    }
    return "?";
}

struct EvalConfig {
    EvalMode mode = EvalMode::both;
    std::vector<int> cutoffs{1, 5, 10};
    int num_negatives = 100;
    bool exclude_history = true;
    std::uint64_t seed = 0;
};

struct EvalReport {
    std::map<std::string, std::vector<double>> per_user; // metric key -> per-user values
    std::map<std::string, double> means;
    double wall_seconds = 0;
    int users = 0;
};

struct PointwiseMetrics {
    double recall = 0;
    double ndcg = 0;
    double mrr = 0;
};

struct SamplingError : std::runtime_error {
    explicit SamplingError(const std::string& msg) : std::runtime_error(msg) {}
};

// n distinct items drawn proportional to popularity, excluding the positive
// and the given exclusion set
std::vector<int> sample_popularity_negatives(const PopularityTable& pop, int positive,
                                             const std::vector<char>& excluded, int n,
                                             std::mt19937_64& rng);

// 1-based rank of the positive among candidates; ties broken by ascending
// item id
int rank_of_positive(const std::vector<double>& scores, const std::vector<int>& candidates,
                     int positive);

PointwiseMetrics pointwise_metrics(int rank, int K);

// full score vector indexed by item id (size V+2); entries for
// non-recommendable pseudo-items must already be -inf
using ScoreFn = std::function<std::vector<double>(int user)>;

EvalReport evaluate_model(const ScoreFn& score, const SplitDataset& split,
                          const PopularityTable& pop, const EvalConfig& cfg);

std::string eval_report_json(const EvalReport& report, bool include_per_user = true);
EvalReport eval_report_from_json(const std::string& json_text);

// Table-3-style row: sampled Recall@10, sampled NDCG@10, unsampled
// Recall@10, unsampled NDCG@10, training seconds
std::string eval_report_csv(const EvalReport& report, double training_seconds);

} // namespace seqlab
