#pragma once

// Interaction data ingestion, min-length preprocessing, leave-one-out
// splitting, dataset statistics and item popularity.
//
// Internal item ids are contiguous in 1..V; id 0 is padding and V+1 the
// mask token, so embedding tables have V+2 rows. Datasets are immutable
// after construction.

#include <cstdint>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

namespace seqlab {

struct DataError : std::runtime_error {
    explicit DataError(const std::string& msg) : std::runtime_error(msg) {}
};

enum class DataFormat { pair_per_line, csv_timestamp };

struct InteractionDataset {
    std::vector<std::string> user_ids;                 // user index -> external id
    std::vector<std::vector<int>> sequences;           // per user, internal item ids
    std::vector<std::string> item_ids;                 // internal id - 1 -> external id
    std::unordered_map<std::string, int> item_index;   // external id -> internal id

    int num_users() const { return (int)sequences.size(); }
    int num_items() const { return (int)item_ids.size(); }
    long long num_interactions() const;
    int pad_id() const { return 0; }
    int mask_id() const { return num_items() + 1; }
};

struct SplitDataset {
    std::vector<std::vector<int>> train;             // per user, held-out positions removed
    std::vector<int> test;                           // per user, the last item
    std::unordered_map<int, int> validation;         // user index -> second-last item
    std::uint64_t val_user_seed = 0;
    int num_items = 0;
    std::vector<std::string> user_ids;
};

struct DatasetStats {
    long long users = 0;
    long long items = 0;
    long long interactions = 0;
    double avg_len = 0;
    double sparsity = 0;
};

struct PopularityTable {
    std::vector<long long> counts; // indexed by item id, size V + 1 ([0] unused)
    std::vector<double> cdf;       // cumulative probability over items 1..V
    long long total = 0;

    double probability(int item) const { return total ? (double)counts[item] / total : 0.0; }
    // item id whose cdf bucket contains u in [0,1)
    int pick(double u) const;
};

InteractionDataset load_interactions(const std::string& path, DataFormat format);

InteractionDataset preprocess_min_length(const InteractionDataset& ds, int min_len = 5);

SplitDataset leave_one_out_split(const InteractionDataset& ds, int num_val_users = 2048,
                                 std::uint64_t seed = 0);

DatasetStats compute_stats(const InteractionDataset& ds);

std::string stats_csv(const DatasetStats& s);

// counts over all users' full sequences
PopularityTable build_popularity_table(const InteractionDataset& ds);
// counts over training interactions only (default for experiments)
PopularityTable build_popularity_table(const SplitDataset& split);

} // namespace seqlab
