#include "seqlab/evaluation.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <sstream>

#include <json.hpp>

#include "seqlab/errors.hpp"

namespace seqlab {

namespace {

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t user) {
    std::uint64_t z = seed + 0x9E3779B97F4A7C15ull * (user + 1);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
}

} // namespace

std::vector<int> sample_popularity_negatives(const PopularityTable& pop, int positive,
                                             const std::vector<char>& excluded, int n,
                                             std::mt19937_64& rng) {
    const int V = (int)pop.cdf.size();
    int eligible = 0;
    for (int i = 1; i <= V; ++i)
        if (pop.counts[i] > 0 && i != positive && !(i < (int)excluded.size() && excluded[i]))
            ++eligible;
    if (eligible < n)
        throw SamplingError("sample_popularity_negatives: only " + std::to_string(eligible) +
                            " eligible items, need " + std::to_string(n));

    std::vector<char> taken((std::size_t)V + 1, 0);
    std::vector<int> out;
    out.reserve(n);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    while ((int)out.size() < n) {
        const int item = pop.pick(u(rng));
        if (item == positive || taken[item] || (item < (int)excluded.size() && excluded[item]))
            continue;
        taken[item] = 1;
        out.push_back(item);
    }
    return out;
}

int rank_of_positive(const std::vector<double>& scores, const std::vector<int>& candidates,
                     int positive) {
    const double ps = scores[positive];
    int rank = 1;
    bool found = false;
    for (int c : candidates) {
        if (c == positive) {
            found = true;
            continue;
        }
        const double s = scores[c];
        if (s > ps || (s == ps && c < positive)) ++rank;
    }
    if (!found) throw ContractError("rank_of_positive: positive not among candidates");
    return rank;
}

PointwiseMetrics pointwise_metrics(int rank, int K) {
    if (rank < 1) throw ContractError("pointwise_metrics: rank must be >= 1");
    PointwiseMetrics m;
    m.mrr = 1.0 / rank;
    if (rank <= K) {
        m.recall = 1.0;
        m.ndcg = 1.0 / std::log2((double)rank + 1.0);
    }
    return m;
}

EvalReport evaluate_model(const ScoreFn& score, const SplitDataset& split,
                          const PopularityTable& pop, const EvalConfig& cfg) {
    const auto t0 = std::chrono::steady_clock::now();
    const int U = (int)split.test.size();
    const int V = split.num_items;
    if (U == 0) throw ContractError("evaluate_model: empty test set");
    const bool do_sampled = cfg.mode != EvalMode::unsampled;
    const bool do_unsampled = cfg.mode != EvalMode::sampled;

    EvalReport report;
    report.users = U;
    std::vector<std::string> keys;
    auto add_key = [&](const std::string& k) {
        keys.push_back(k);
        report.per_user[k].assign(U, 0.0);
    };
    for (const char* mode : {"sampled", "unsampled"}) {
        if ((mode == std::string("sampled") && !do_sampled) ||
            (mode == std::string("unsampled") && !do_unsampled))
            continue;
        for (int K : cfg.cutoffs) {
            add_key(std::string(mode) + "_recall@" + std::to_string(K));
            add_key(std::string(mode) + "_ndcg@" + std::to_string(K));
        }
        add_key(std::string(mode) + "_mrr");
    }

    std::vector<int> all_items(V);
    for (int i = 0; i < V; ++i) all_items[i] = i + 1;

    std::exception_ptr failure;
#pragma omp parallel for schedule(dynamic, 16)
    for (int u = 0; u < U; ++u) {
        if (failure) continue;
        try {
            const int positive = split.test[u];
            std::vector<double> scores = score(u);

            std::vector<char> history((std::size_t)V + 2, 0);
            if (cfg.exclude_history) {
                for (int item : split.train[u]) history[item] = 1;
                auto it = split.validation.find(u);
                if (it != split.validation.end()) history[it->second] = 1;
                history[positive] = 0; // the positive stays a candidate
                for (int i = 1; i <= V; ++i)
                    if (history[i]) scores[i] = -std::numeric_limits<double>::infinity();
            }

            auto record = [&](const std::string& mode, int rank) {
                for (int K : cfg.cutoffs) {
                    const auto m = pointwise_metrics(rank, K);
                    report.per_user.at(mode + "_recall@" + std::to_string(K))[u] = m.recall;
                    report.per_user.at(mode + "_ndcg@" + std::to_string(K))[u] = m.ndcg;
                }
                report.per_user.at(mode + "_mrr")[u] = pointwise_metrics(rank, 1).mrr;
            };

            if (do_unsampled) record("unsampled", rank_of_positive(scores, all_items, positive));
            if (do_sampled) {
                std::mt19937_64 rng(mix_seed(cfg.seed, (std::uint64_t)u));
                auto negatives = sample_popularity_negatives(
                    pop, positive, cfg.exclude_history ? history : std::vector<char>{},
                    cfg.num_negatives, rng);
                negatives.push_back(positive);
                record("sampled", rank_of_positive(scores, negatives, positive));
            }
        } catch (...) {
#pragma omp critical
            {
                if (!failure) failure = std::current_exception();
            }
        }
    }
    if (failure) std::rethrow_exception(failure);

    for (auto& k : keys) {
        double sum = 0;
        for (double v : report.per_user[k]) sum += v;
        report.means[k] = sum / U;
    }
    report.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return report;
}

std::string eval_report_json(const EvalReport& report, bool include_per_user) {
    nlohmann::json j;
    j["users"] = report.users;
    j["wall_seconds"] = report.wall_seconds;
    j["means"] = report.means;
    if (include_per_user) j["per_user"] = report.per_user;
    return j.dump(2);
}

EvalReport eval_report_from_json(const std::string& json_text) {
    auto j = nlohmann::json::parse(json_text);
    EvalReport r;
    r.users = j.at("users").get<int>();
    r.wall_seconds = j.at("wall_seconds").get<double>();
    r.means = j.at("means").get<std::map<std::string, double>>();
    if (j.contains("per_user"))
        r.per_user = j.at("per_user").get<std::map<std::string, std::vector<double>>>();
    return r;
}

std::string eval_report_csv(const EvalReport& report, double training_seconds) {
    std::ostringstream out;
    out << "sampled_recall@10,sampled_ndcg@10,unsampled_recall@10,unsampled_ndcg@10,"
           "training_seconds\n";
    out.precision(17);
    auto mean = [&](const std::string& k) {
        auto it = report.means.find(k);
        return it == report.means.end() ? std::numeric_limits<double>::quiet_NaN() : it->second;
    };
    out << mean("sampled_recall@10") << ',' << mean("sampled_ndcg@10") << ','
        << mean("unsampled_recall@10") << ',' << mean("unsampled_ndcg@10") << ','
        << training_seconds << '\n';
    return out.str();
}

} // namespace seqlab
