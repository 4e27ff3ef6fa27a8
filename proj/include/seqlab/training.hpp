#pragma once

// Training objectives (masked item, shifted sequence, BPR), batching and
// the training loop with step budgets or early stopping. One epoch is one
// pass over all users' training sequences; one step is one batch of users.

#include <chrono>
#include <cmath>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "seqlab/corpus.hpp"
#include "seqlab/models.hpp"

namespace seqlab {

enum class Objective { masked_item, shifted_sequence, bpr };
enum class NegativeStrategy { one_uniform_negative, full_softmax };

inline std::string to_string(Objective o) {
    switch (o) {
        case Objective::masked_item: return "masked_item";
        case Objective::shifted_sequence: return "shifted_sequence";
        case Objective::bpr: return "bpr";
    }
    return "?";
}

inline Objective parse_objective(const std::string& s) {
    if (s == "masked_item") return Objective::masked_item;
    if (s == "shifted_sequence") return Objective::shifted_sequence;
    if (s == "bpr") return Objective::bpr;
    throw ConfigError("unknown objective: " + s);
}

inline Objective default_objective(ModelKind kind) {
    switch (kind) {
        case ModelKind::sasrec: return Objective::shifted_sequence;
        case ModelKind::mf_bpr: return Objective::bpr;
        default: return Objective::masked_item;
    }
}

struct TrainConfig {
    Objective objective = Objective::masked_item;
    int batch_size = 128;
    // stopping: steps > 0 selects a fixed step budget, otherwise early
    // stopping with the given patience (in epochs)
    long long steps = 0;
    int patience = 200;
    int max_epochs = 100000;
    double mask_prob = 0.2;
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double adam_eps = 1e-8;
    std::uint64_t seed = 0;
    NegativeStrategy negative_strategy = NegativeStrategy::one_uniform_negative;
    bool last_item_only_mask = false; // optional train/inference alignment augmentation
};

struct TrainLogRow {
    int epoch = 0;
    double val_loss = 0;
    double cum_seconds = 0;
    long long steps = 0;
};

struct TrainLog {
    std::vector<TrainLogRow> rows;
    long long total_steps = 0;
    double total_seconds = 0;
    int best_epoch = 0;
    std::string stop_reason;

    std::string csv() const {
        std::ostringstream out;
        out << "epoch,val_loss,cum_seconds,steps\n";
        out.precision(17);
        for (auto& r : rows)
            out << r.epoch << ',' << r.val_loss << ',' << r.cum_seconds << ',' << r.steps << '\n';
        return out.str();
    }
};

struct DivergenceError : std::runtime_error {
    long long step;
    DivergenceError(long long step_idx, const std::string& msg)
        : std::runtime_error(msg), step(step_idx) {}
};

struct MaskedRow {
    std::vector<int> input;   // ids with masked positions replaced by mask id
    std::vector<int> labels;  // original ids at masked positions, 0 elsewhere
    std::vector<char> active; // 1 at masked positions
};

// each position independently masked with probability p; if no position was
// chosen, one uniformly picked position is forcibly masked
inline MaskedRow mask_sequence(const std::vector<int>& seq, double p, int mask_id,
                               std::mt19937_64& rng) {
    if (seq.empty()) throw ContractError("mask_sequence: empty sequence");
    if (p <= 0.0 || p >= 1.0) throw ContractError("mask_sequence: p must be in (0,1)");
    MaskedRow row{seq, std::vector<int>(seq.size(), 0), std::vector<char>(seq.size(), 0)};
    std::uniform_real_distribution<double> u(0.0, 1.0);
    int n_masked = 0;
    for (std::size_t i = 0; i < seq.size(); ++i) {
        if (u(rng) < p) {
            row.input[i] = mask_id;
            row.labels[i] = seq[i];
            row.active[i] = 1;
            ++n_masked;
        }
    }
    if (n_masked == 0) {
        const std::size_t i = rng() % seq.size();
        row.input[i] = mask_id;
        row.labels[i] = seq[i];
        row.active[i] = 1;
    }
    return row;
}

// [a,b,c] -> inputs [a,b], targets [b,c]
inline std::pair<std::vector<int>, std::vector<int>> shift_targets(const std::vector<int>& seq) {
    if (seq.size() < 2) throw ContractError("shift_targets: sequence length must be >= 2");
    return {{seq.begin(), seq.end() - 1}, {seq.begin() + 1, seq.end()}};
}

// -ln sigmoid(pos - neg)
inline double bpr_loss(double pos_score, double neg_score) {
    const double x = neg_score - pos_score;
    return x > 0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
}

namespace detail {

inline std::vector<int> tail(const std::vector<int>& seq, int n) {
    if ((int)seq.size() <= n) return seq;
    return {seq.end() - n, seq.end()};
}

// one training step over a batch of users for an encoder model; returns loss
template <class S>
S encoder_step(Tape<S>& tape, const EncoderModel<S>& model, const SplitDataset& split,
               const std::vector<int>& users, const TrainConfig& cfg, std::mt19937_64& rng) {
    const int L = model.cfg.max_seq_len;
    std::vector<std::vector<int>> batch;
    std::vector<int> act_idx, targets;
    batch.reserve(users.size());

    for (std::size_t b = 0; b < users.size(); ++b) {
        const auto& seq = split.train[users[b]];
        if (cfg.objective == Objective::masked_item) {
            std::vector<int> s = tail(seq, L);
            MaskedRow row;
            if (cfg.last_item_only_mask && (rng() & 1)) {
                row = MaskedRow{s, std::vector<int>(s.size(), 0), std::vector<char>(s.size(), 0)};
                row.labels.back() = s.back();
                row.input.back() = model.mask_id();
                row.active.back() = 1;
            } else {
                row = mask_sequence(s, cfg.mask_prob, model.mask_id(), rng);
            }
            const int off = L - (int)s.size();
            batch.push_back(pad_left(row.input, L));
            for (std::size_t i = 0; i < s.size(); ++i)
                if (row.active[i]) {
                    act_idx.push_back((int)b * L + off + (int)i);
                    targets.push_back(row.labels[i]);
                }
        } else { // shifted_sequence
            std::vector<int> s = tail(seq, L + 1);
            auto [inputs, tgts] = shift_targets(s);
            const int off = L - (int)inputs.size();
            batch.push_back(pad_left(inputs, L));
            for (std::size_t i = 0; i < tgts.size(); ++i) {
                act_idx.push_back((int)b * L + off + (int)i);
                targets.push_back(tgts[i]);
            }
        }
    }

    auto hidden = model.encode(tape, batch, /*training=*/true, rng);
    auto h_act = tape.gather_rows(hidden, act_idx);

    TensorPtr<S> loss;
    if (cfg.objective == Objective::shifted_sequence &&
        cfg.negative_strategy == NegativeStrategy::one_uniform_negative) {
        std::vector<int> negatives(targets.size());
        for (std::size_t i = 0; i < targets.size(); ++i) {
            int neg;
            do {
                neg = 1 + (int)(rng() % (std::uint64_t)model.vocab_size);
            } while (neg == targets[i]);
            negatives[i] = neg;
        }
        TensorPtr<S> h = h_act;
        if (model.emb_proj) h = tape.matmul_nt(h, model.emb_proj);
        auto pos_scores = tape.add(tape.rowwise_dot(h, tape.gather_rows(model.item_emb, targets)),
                                   tape.gather_rows(model.out_bias, targets));
        auto neg_scores = tape.add(tape.rowwise_dot(h, tape.gather_rows(model.item_emb, negatives)),
                                   tape.gather_rows(model.out_bias, negatives));
        loss = tape.sampled_bce(pos_scores, neg_scores);
    } else {
        auto logits = model.score_all_items(tape, h_act);
        loss = tape.masked_cross_entropy(logits, targets, std::vector<char>(targets.size(), 1));
    }
    tape.backward(loss);
    return loss->data[0];
}

// one training step for MF-BPR: every positive of every user in the batch,
// one uniform negative per positive
template <class S>
S mf_step(Tape<S>& tape, const MFModel<S>& model, const SplitDataset& split,
          const std::vector<int>& users, std::mt19937_64& rng) {
    std::vector<int> u_idx, pos, neg;
    for (int u : users)
        for (int item : split.train[u]) {
            u_idx.push_back(u);
            pos.push_back(item);
            int n;
            do {
                n = 1 + (int)(rng() % (std::uint64_t)model.vocab_size);
            } while (n == item);
            neg.push_back(n);
        }
    auto uf = tape.gather_rows(model.user_factors, u_idx);
    auto pos_scores = tape.add(tape.rowwise_dot(uf, tape.gather_rows(model.item_factors, pos)),
                               tape.gather_rows(model.item_bias, pos));
    auto neg_scores = tape.add(tape.rowwise_dot(uf, tape.gather_rows(model.item_factors, neg)),
                               tape.gather_rows(model.item_bias, neg));
    auto loss = tape.bpr(pos_scores, neg_scores);
    tape.backward(loss);
    return loss->data[0];
}

} // namespace detail

// deterministic validation loss under a fixed seed, dropout off
template <class S>
double validation_loss(const Model<S>& model, const SplitDataset& split, Objective objective,
                       std::uint64_t seed = 1) {
    if (split.validation.empty()) throw ContractError("validation_loss: empty validation set");
    std::vector<std::pair<int, int>> pairs(split.validation.begin(), split.validation.end());
    std::sort(pairs.begin(), pairs.end());

    if (objective == Objective::bpr) {
        const auto& mf = model.mf();
        std::mt19937_64 rng(seed);
        double total = 0;
        for (auto [u, item] : pairs) {
            int neg;
            do {
                neg = 1 + (int)(rng() % (std::uint64_t)mf.vocab_size);
            } while (neg == item);
            total += bpr_loss(mf.score(u, item), mf.score(u, neg));
        }
        return total / pairs.size();
    }

    const auto& enc = model.encoder();
    const int L = enc.cfg.max_seq_len;
    std::mt19937_64 rng(seed);
    double total = 0;
    long long count = 0;
    const int chunk = 256;
    for (std::size_t start = 0; start < pairs.size(); start += chunk) {
        const std::size_t end = std::min(pairs.size(), start + chunk);
        std::vector<std::vector<int>> batch;
        std::vector<int> act_idx, targets;
        for (std::size_t i = start; i < end; ++i) {
            auto [u, item] = pairs[i];
            // sequence truncated just after the validation item
            std::vector<int> seq = split.train[u];
            seq.push_back(item);
            seq = detail::tail(seq, L);
            if (objective == Objective::masked_item) seq.back() = enc.mask_id();
            else seq.pop_back(); // predict the held-out item from the last input
            const int row = (int)batch.size();
            batch.push_back(pad_left(seq, L));
            act_idx.push_back(row * L + (objective == Objective::masked_item ? L - 1
                                                                             : L - 1));
            targets.push_back(item);
        }
        // shifted mode scores the last real input position
        if (objective == Objective::shifted_sequence) {
            // after pad_left the last input sits at position L-1 already
        }
        Tape<S> tape;
        tape.grad_enabled = false;
        auto hidden = enc.encode(tape, batch, /*training=*/false, rng);
        auto h = tape.gather_rows(hidden, act_idx);
        auto logits = enc.score_all_items(tape, h);
        std::vector<S> probs(logits->size());
        kernels::softmax_rows(logits->data.data(), (const S*)nullptr, probs.data(), logits->rows,
                              logits->cols);
        for (int i = 0; i < logits->rows; ++i) {
            const double p = (double)probs[(std::size_t)i * logits->cols + targets[i]];
            total += -std::log(std::max(p, 1e-300));
            ++count;
        }
    }
    return total / count;
}

template <class S>
TrainLog train_model(Model<S>& model, const SplitDataset& split, const TrainConfig& cfg) {
    using clock = std::chrono::steady_clock;
    const int U = (int)split.train.size();
    if (U == 0) throw ContractError("train_model: empty split");
    const bool step_budget = cfg.steps > 0;
    const Objective obj = cfg.objective;

    Adam<S> adam(AdamConfig<S>{(S)cfg.lr, (S)cfg.beta1, (S)cfg.beta2, (S)cfg.adam_eps});
    auto params = model.parameters();

    std::mt19937_64 rng(cfg.seed);
    std::vector<int> order(U);
    for (int i = 0; i < U; ++i) order[i] = i;

    TrainLog log;
    double best_val = std::numeric_limits<double>::infinity();
    std::vector<std::vector<S>> best_params;
    long long steps_done = 0;
    const auto t0 = clock::now();

    for (int epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
        // per-epoch user shuffle under the training seed
        for (int i = U - 1; i > 0; --i)
            std::swap(order[i], order[rng() % (std::uint64_t)(i + 1)]);

        bool budget_hit = false;
        for (int start = 0; start < U; start += cfg.batch_size) {
            if (step_budget && steps_done >= cfg.steps) {
                budget_hit = true;
                break;
            }
            std::vector<int> users(order.begin() + start,
                                   order.begin() + std::min(U, start + cfg.batch_size));
            Tape<S> tape;
            for (auto& p : params) p->zero_grad();
            S loss;
            if (obj == Objective::bpr)
                loss = detail::mf_step(tape, model.mf(), split, users, rng);
            else
                loss = detail::encoder_step(tape, model.encoder(), split, users, cfg, rng);
            if (!std::isfinite((double)loss))
                throw DivergenceError(steps_done, "train_model: non-finite loss at step " +
                                                      std::to_string(steps_done));
            adam.step(params);
            ++steps_done;
        }

        const double val = split.validation.empty()
                               ? std::numeric_limits<double>::quiet_NaN()
                               : validation_loss(model, split, obj, cfg.seed + 1);
        const double secs = std::chrono::duration<double>(clock::now() - t0).count();
        log.rows.push_back({epoch, val, secs, steps_done});

        if (!step_budget) {
            if (val < best_val) {
                best_val = val;
                log.best_epoch = epoch;
                best_params.clear();
                for (auto& p : params) best_params.push_back(p->data);
            }
            if (epoch - log.best_epoch >= cfg.patience) {
                log.stop_reason = "early_stopping";
                break;
            }
        } else {
            log.best_epoch = epoch;
            if (budget_hit || steps_done >= cfg.steps) {
                log.stop_reason = "step_budget";
                break;
            }
        }
        if (epoch == cfg.max_epochs) log.stop_reason = "max_epochs";
    }

    if (!step_budget && !best_params.empty())
        for (std::size_t i = 0; i < params.size(); ++i) params[i]->data = best_params[i];

    log.total_steps = steps_done;
    log.total_seconds = std::chrono::duration<double>(clock::now() - t0).count();
    return log;
}

} // namespace seqlab
