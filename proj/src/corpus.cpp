#include "seqlab/corpus.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <random>
#include <sstream>

namespace seqlab {

long long InteractionDataset::num_interactions() const {
    long long n = 0;
    for (auto& s : sequences) n += (long long)s.size();
    return n;
}

int PopularityTable::pick(double u) const {
    auto it = std::upper_bound(cdf.begin(), cdf.end(), u);
    int idx = (int)(it - cdf.begin());
    if (idx >= (int)cdf.size()) idx = (int)cdf.size() - 1;
    return idx + 1;
}

namespace {

struct Builder {
    InteractionDataset ds;
    std::unordered_map<std::string, int> user_index;

    void add(const std::string& user, const std::string& item) {
        auto [uit, unew] = user_index.try_emplace(user, (int)ds.sequences.size());
        if (unew) {
            ds.user_ids.push_back(user);
            ds.sequences.emplace_back();
        }
        auto [iit, inew] = ds.item_index.try_emplace(item, (int)ds.item_ids.size() + 1);
        if (inew) ds.item_ids.push_back(item);
        ds.sequences[uit->second].push_back(iit->second);
    }
};

std::string trim(const std::string& s) {
    auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

} // namespace

InteractionDataset load_interactions(const std::string& path, DataFormat format) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open interaction file: " + path);

    Builder builder;
    std::string line;
    long long line_no = 0;

    if (format == DataFormat::pair_per_line) {
        while (std::getline(in, line)) {
            ++line_no;
            if (trim(line).empty()) continue;
            std::istringstream row(line);
            std::string user, item, extra;
            if (!(row >> user >> item) || (row >> extra))
                throw DataError(path + ":" + std::to_string(line_no) +
                                ": expected \"user item\"");
            builder.add(user, item);
        }
    } else {
        // csv with header user,item,timestamp; rows sorted by (user, timestamp,
        // input order) before sequencing
        if (!std::getline(in, line)) throw DataError(path + ": empty file");
        if (trim(line) != "user,item,timestamp")
            throw DataError(path + ":1: expected header \"user,item,timestamp\"");
        struct Row {
            std::string user, item;
            long long ts;
            long long order;
        };
        std::vector<Row> rows;
        line_no = 1;
        while (std::getline(in, line)) {
            ++line_no;
            if (trim(line).empty()) continue;
            std::istringstream row(line);
            std::string user, item, ts_str;
            if (!std::getline(row, user, ',') || !std::getline(row, item, ',') ||
                !std::getline(row, ts_str))
                throw DataError(path + ":" + std::to_string(line_no) + ": malformed csv row");
            ts_str = trim(ts_str);
            long long ts = 0;
            auto [p, ec] = std::from_chars(ts_str.data(), ts_str.data() + ts_str.size(), ts);
            if (ec != std::errc() || p != ts_str.data() + ts_str.size())
                throw DataError(path + ":" + std::to_string(line_no) + ": bad timestamp \"" +
                                ts_str + "\"");
            rows.push_back({trim(user), trim(item), ts, line_no});
        }
        std::stable_sort(rows.begin(), rows.end(), [](const Row& a, const Row& b) {
            if (a.user != b.user) return a.user < b.user;
            if (a.ts != b.ts) return a.ts < b.ts;
            return a.order < b.order;
        });
        for (auto& r : rows) builder.add(r.user, r.item);
    }

    if (builder.ds.sequences.empty()) throw DataError(path + ": no interactions found");
    return std::move(builder.ds);
}

InteractionDataset preprocess_min_length(const InteractionDataset& ds, int min_len) {
    if (min_len < 1) throw DataError("preprocess_min_length: min_len must be >= 1");
    Builder builder;
    for (int u = 0; u < ds.num_users(); ++u) {
        if ((int)ds.sequences[u].size() < min_len) continue;
        for (int item : ds.sequences[u]) builder.add(ds.user_ids[u], ds.item_ids[item - 1]);
    }
    if (builder.ds.sequences.empty())
        throw DataError("preprocess_min_length: no sequences of length >= " +
                        std::to_string(min_len));
    return std::move(builder.ds);
}

SplitDataset leave_one_out_split(const InteractionDataset& ds, int num_val_users,
                                 std::uint64_t seed) {
    const int U = ds.num_users();
    for (int u = 0; u < U; ++u)
        if ((int)ds.sequences[u].size() < 3)
            throw DataError("leave_one_out_split: sequence of user \"" + ds.user_ids[u] +
                            "\" is too short (need >= 3 interactions)");

    // uniform sample of validation users without replacement: partial
    // Fisher-Yates with hand-rolled bounded draws for cross-run determinism
    const int n_val = std::min(num_val_users, U);
    std::vector<int> order(U);
    for (int i = 0; i < U; ++i) order[i] = i;
    std::mt19937_64 rng(seed);
    for (int i = 0; i < n_val; ++i) {
        const int j = i + (int)(rng() % (std::uint64_t)(U - i));
        std::swap(order[i], order[j]);
    }

    SplitDataset split;
    split.val_user_seed = seed;
    split.num_items = ds.num_items();
    split.user_ids = ds.user_ids;
    split.train.resize(U);
    split.test.resize(U);
    for (int i = 0; i < n_val; ++i) {
        const int u = order[i];
        const auto& s = ds.sequences[u];
        split.validation[u] = s[s.size() - 2];
    }
    for (int u = 0; u < U; ++u) {
        const auto& s = ds.sequences[u];
        split.test[u] = s.back();
        const std::size_t drop = split.validation.count(u) ? 2 : 1;
        split.train[u].assign(s.begin(), s.end() - drop);
    }
    return split;
}

DatasetStats compute_stats(const InteractionDataset& ds) {
    if (ds.sequences.empty()) throw DataError("compute_stats: empty dataset");
    DatasetStats s;
    s.users = ds.num_users();
    s.items = ds.num_items();
    s.interactions = ds.num_interactions();
    s.avg_len = (double)s.interactions / (double)s.users;
    s.sparsity = 1.0 - (double)s.interactions / ((double)s.users * (double)s.items);
    return s;
}

std::string stats_csv(const DatasetStats& s) {
    std::ostringstream out;
    out << "users,items,interactions,avg_len,sparsity\n";
    out.precision(17);
    out << s.users << ',' << s.items << ',' << s.interactions << ',' << s.avg_len << ','
        << s.sparsity << '\n';
    return out.str();
}

namespace {

PopularityTable finish_table(std::vector<long long> counts) {
    PopularityTable t;
    t.counts = std::move(counts);
    t.total = 0;
    for (long long c : t.counts) t.total += c;
    t.cdf.resize(t.counts.size() - 1);
    double acc = 0;
    for (std::size_t i = 1; i < t.counts.size(); ++i) {
        acc += (double)t.counts[i] / (double)t.total;
        t.cdf[i - 1] = acc;
    }
    if (!t.cdf.empty()) t.cdf.back() = 1.0;
    return t;
}

} // namespace

PopularityTable build_popularity_table(const InteractionDataset& ds) {
    std::vector<long long> counts(ds.num_items() + 1, 0);
    for (auto& s : ds.sequences)
        for (int item : s) ++counts[item];
    return finish_table(std::move(counts));
}

PopularityTable build_popularity_table(const SplitDataset& split) {
    std::vector<long long> counts(split.num_items + 1, 0);
    for (auto& s : split.train)
        for (int item : s) ++counts[item];
    return finish_table(std::move(counts));
}

} // namespace seqlab
