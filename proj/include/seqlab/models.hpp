#pragma once

// Transformer encoder with bidirectional/causal attention and the
// architecture variants used in the experiments (BERT4Rec, SASRec,
// ALBERT4Rec, DeBERTa4Rec), plus the MF-BPR baseline. Output scores are
// tied to the input item embedding table.

#include <cmath>
#include <limits>
#include <optional>
#include <random>
#include <string>
#include <variant>
#include <vector>

#include "seqlab/errors.hpp"
#include "seqlab/tensor.hpp"

namespace seqlab {

enum class ModelKind { bert4rec, sasrec, albert4rec, deberta4rec, mf_bpr };

inline std::string to_string(ModelKind k) {
    switch (k) {
        case ModelKind::bert4rec: return "bert4rec";
        case ModelKind::sasrec: return "sasrec";
        case ModelKind::albert4rec: return "albert4rec";
        case ModelKind::deberta4rec: return "deberta4rec";
        case ModelKind::mf_bpr: return "mf_bpr";
    }
    return "?";
}

inline ModelKind parse_model_kind(const std::string& s) {
    if (s == "bert4rec") return ModelKind::bert4rec;
    if (s == "sasrec") return ModelKind::sasrec;
    if (s == "albert4rec") return ModelKind::albert4rec;
    if (s == "deberta4rec") return ModelKind::deberta4rec;
    if (s == "mf_bpr") return ModelKind::mf_bpr;
    throw ConfigError("unknown model kind: " + s);
}

struct ModelConfig {
    ModelKind kind = ModelKind::bert4rec;
    int max_seq_len = 50;
    int hidden_size = 64;
    int embedding_size = 64; // != hidden_size only with factorized embeddings
    int num_blocks = 2;
    int num_heads = 2;
    double mask_prob = 0.2;
    double dropout = 0.1;
    bool share_layers = false; // forced on for albert4rec
    int latent_dim = 128;      // mf_bpr only
    int rel_clamp = 0;         // deberta relative-distance clamp; 0 -> max_seq_len

    bool causal() const { return kind == ModelKind::sasrec; }
    bool uses_mask_token() const { return !causal() && kind != ModelKind::mf_bpr; }
    int effective_rel_clamp() const { return rel_clamp > 0 ? rel_clamp : max_seq_len; }

    void validate() const {
        if (kind == ModelKind::mf_bpr) {
            if (latent_dim < 1) throw ConfigError("latent_dim must be >= 1");
            return;
        }
        if (hidden_size % num_heads != 0)
            throw ConfigError("hidden_size must be divisible by num_heads");
        if (mask_prob <= 0.0 || mask_prob >= 1.0)
            throw ConfigError("mask_prob must be in (0,1)");
        if (max_seq_len < 2) throw ConfigError("max_seq_len must be >= 2");
        if (kind != ModelKind::albert4rec && embedding_size != hidden_size)
            throw ConfigError("embedding_size must equal hidden_size except for albert4rec");
    }

    static ModelConfig defaults(ModelKind kind) {
        ModelConfig c;
        c.kind = kind;
        switch (kind) {
            case ModelKind::albert4rec:
                c.share_layers = true;
                c.embedding_size = 16;
                c.max_seq_len = 200;
                break;
            case ModelKind::deberta4rec:
                c.max_seq_len = 200;
                break;
            default: break;
        }
        return c;
    }
};

namespace detail {

template <class S>
S truncated_normal(std::mt19937_64& rng, S sigma) {
    std::normal_distribution<double> n(0.0, (double)sigma);
    for (;;) {
        const double v = n(rng);
        if (std::abs(v) <= 2.0 * (double)sigma) return (S)v;
    }
}

template <class S>
void init_normal(Tensor<S>& t, std::mt19937_64& rng, S sigma = S(0.02)) {
    for (auto& v : t.data) v = truncated_normal(rng, sigma);
}

} // namespace detail

template <class S>
struct TransformerBlock {
    TensorPtr<S> wq, bq, wk, bk, wv, bv, wo, bo;
    TensorPtr<S> ln1_gain, ln1_bias, ln2_gain, ln2_bias;
    TensorPtr<S> ff1_w, ff1_b, ff2_w, ff2_b;

    void collect(std::vector<TensorPtr<S>>& out) const {
        for (auto& t : {wq, bq, wk, bk, wv, bv, wo, bo, ln1_gain, ln1_bias, ln2_gain, ln2_bias,
                        ff1_w, ff1_b, ff2_w, ff2_b})
            out.push_back(t);
    }
};

template <class S>
struct EncoderModel {
    ModelConfig cfg;
    int vocab_size = 0; // V; table rows = V + 2

    TensorPtr<S> item_emb;               // (V+2) x E
    TensorPtr<S> emb_proj;               // E x H when factorized, else null
    TensorPtr<S> pos_emb;                // L x H, absolute kinds only
    TensorPtr<S> rel_emb;                // (2K+1) x H, deberta only, shared across blocks
    std::vector<TransformerBlock<S>> blocks; // size 1 when share_layers
    TensorPtr<S> final_gain, final_bias; // closing layer norm
    TensorPtr<S> out_bias;               // (V+2) x 1

    int pad_id() const { return 0; }
    int mask_id() const { return vocab_size + 1; }

    std::vector<TensorPtr<S>> parameters() const {
        std::vector<TensorPtr<S>> out{item_emb};
        if (emb_proj) out.push_back(emb_proj);
        if (pos_emb) out.push_back(pos_emb);
        if (rel_emb) out.push_back(rel_emb);
        for (auto& b : blocks) b.collect(out);
        out.push_back(final_gain);
        out.push_back(final_bias);
        out.push_back(out_bias);
        return out;
    }

    const TransformerBlock<S>& block(int i) const {
        return blocks[cfg.share_layers ? 0 : i];
    }

    // batch: B sequences of exactly max_seq_len internal ids (0 = padding,
    // left-padded). Returns hidden states [B*L x H].
    TensorPtr<S> encode(Tape<S>& tape, const std::vector<std::vector<int>>& batch,
                        bool training, std::mt19937_64& rng) const;

    // logits [rows x (V+2)] for the given hidden-state rows
    TensorPtr<S> score_all_items(Tape<S>& tape, const TensorPtr<S>& hidden_rows) const {
        TensorPtr<S> h = hidden_rows;
        if (emb_proj) h = tape.matmul_nt(h, emb_proj); // back to embedding size
        auto logits = tape.matmul_nt(h, item_emb);
        return tape.add_rowwise(logits, out_bias);
    }
};

template <class S>
TensorPtr<S> EncoderModel<S>::encode(Tape<S>& tape, const std::vector<std::vector<int>>& batch,
                                     bool training, std::mt19937_64& rng) const {
    const int B = (int)batch.size();
    const int L = cfg.max_seq_len;
    const int H = cfg.hidden_size;
    const int heads = cfg.num_heads;
    const int hd = H / heads;
    const int P = B * L;
    const bool deberta = cfg.kind == ModelKind::deberta4rec;

    std::vector<int> flat_ids(P), pos_idx(P);
    for (int b = 0; b < B; ++b) {
        if ((int)batch[b].size() != L)
            throw ShapeError("encode: every batch row must have max_seq_len ids");
        for (int l = 0; l < L; ++l) {
            flat_ids[b * L + l] = batch[b][l];
            pos_idx[b * L + l] = l;
        }
    }

    auto x = tape.gather_rows(item_emb, flat_ids);
    if (emb_proj) x = tape.matmul(x, emb_proj);
    if (pos_emb) x = tape.add(x, tape.gather_rows(pos_emb, pos_idx));
    x = tape.dropout(x, cfg.dropout, rng, training);

    // additive attention masks per batch row: padding keys always hidden,
    // causal mode additionally hides future keys. The diagonal stays open so
    // that a padding query attends to itself with weight exactly one instead
    // of taking a softmax over uniformly masked logits (which would make
    // padding rows depend on every position in the sequence).
    const S neg = S(-1e9);
    std::vector<std::vector<S>> masks(B, std::vector<S>((std::size_t)L * L, S(0)));
    for (int b = 0; b < B; ++b)
        for (int i = 0; i < L; ++i)
            for (int j = 0; j < L; ++j)
                if (j != i && (batch[b][j] == pad_id() || (cfg.causal() && j > i)))
                    masks[b][(std::size_t)i * L + j] = neg;

    // relative-position bucket indices, shared by all batch rows and heads
    std::vector<int> c2p_rows, c2p_cols, p2c_rows, p2c_cols;
    const int K = cfg.effective_rel_clamp();
    if (deberta) {
        c2p_rows.resize((std::size_t)L * L);
        c2p_cols.resize((std::size_t)L * L);
        p2c_rows.resize((std::size_t)L * L);
        p2c_cols.resize((std::size_t)L * L);
        auto bucket = [K](int delta) { return std::clamp(delta, -K, K) + K; };
        for (int i = 0; i < L; ++i)
            for (int j = 0; j < L; ++j) {
                const std::size_t k = (std::size_t)i * L + j;
                c2p_rows[k] = i;
                c2p_cols[k] = bucket(i - j);
                p2c_rows[k] = j;
                p2c_cols[k] = bucket(j - i);
            }
    }

    const S scale = deberta ? S(1.0 / std::sqrt(3.0 * hd)) : S(1.0 / std::sqrt((double)hd));

    for (int bi = 0; bi < cfg.num_blocks; ++bi) {
        const auto& blk = block(bi);
        auto h = tape.layer_norm(x, blk.ln1_gain, blk.ln1_bias);
        auto q = tape.add_rowwise(tape.matmul(h, blk.wq), blk.bq);
        auto k = tape.add_rowwise(tape.matmul(h, blk.wk), blk.bk);
        auto v = tape.add_rowwise(tape.matmul(h, blk.wv), blk.bv);

        TensorPtr<S> relq, relk;
        if (deberta) {
            relq = tape.matmul(rel_emb, blk.wq);
            relk = tape.matmul(rel_emb, blk.wk);
        }

        std::vector<typename Tape<S>::Placed> ctx;
        ctx.reserve((std::size_t)B * heads);
        for (int b = 0; b < B; ++b) {
            for (int hh = 0; hh < heads; ++hh) {
                auto qh = tape.slice(q, b * L, L, hh * hd, hd);
                auto kh = tape.slice(k, b * L, L, hh * hd, hd);
                auto vh = tape.slice(v, b * L, L, hh * hd, hd);
                auto logits = tape.matmul_nt(qh, kh);
                if (deberta) {
                    auto relk_h = tape.slice(relk, 0, relk->rows, hh * hd, hd);
                    auto relq_h = tape.slice(relq, 0, relq->rows, hh * hd, hd);
                    auto c2p = tape.gather_pairs(tape.matmul_nt(qh, relk_h), c2p_rows, c2p_cols, L, L);
                    auto p2c = tape.gather_pairs(tape.matmul_nt(kh, relq_h), p2c_rows, p2c_cols, L, L);
                    logits = tape.add(tape.add(logits, c2p), p2c);
                }
                auto att = tape.softmax_rows(tape.scale(logits, scale), &masks[b]);
                ctx.push_back({tape.matmul(att, vh), b * L, hh * hd});
            }
        }
        auto attn = tape.assemble(ctx, P, H);
        attn = tape.add_rowwise(tape.matmul(attn, blk.wo), blk.bo);
        attn = tape.dropout(attn, cfg.dropout, rng, training);
        x = tape.add(x, attn);

        auto h2 = tape.layer_norm(x, blk.ln2_gain, blk.ln2_bias);
        auto f = tape.gelu(tape.add_rowwise(tape.matmul(h2, blk.ff1_w), blk.ff1_b));
        f = tape.add_rowwise(tape.matmul(f, blk.ff2_w), blk.ff2_b);
        f = tape.dropout(f, cfg.dropout, rng, training);
        x = tape.add(x, f);
    }

    return tape.layer_norm(x, final_gain, final_bias);
}

template <class S>
struct MFModel {
    ModelConfig cfg;
    int num_users = 0;
    int vocab_size = 0;

    TensorPtr<S> user_factors; // U x d
    TensorPtr<S> item_factors; // (V+1) x d, row 0 unused
    TensorPtr<S> item_bias;    // (V+1) x 1

    std::vector<TensorPtr<S>> parameters() const { return {user_factors, item_factors, item_bias}; }

    double score(int user, int item) const {
        double s = item_bias->data[item];
        if (user >= 0 && user < num_users) {
            const S* u = user_factors->data.data() + (std::size_t)user * cfg.latent_dim;
            const S* it = item_factors->data.data() + (std::size_t)item * cfg.latent_dim;
            for (int j = 0; j < cfg.latent_dim; ++j) s += (double)u[j] * (double)it[j];
        }
        return s;
    }
};

template <class S>
EncoderModel<S> build_encoder(ModelConfig cfg, int vocab_size, std::uint64_t seed) {
    if (cfg.kind == ModelKind::albert4rec) cfg.share_layers = true;
    cfg.validate();
    if (vocab_size < 1) throw ConfigError("vocab_size must be >= 1");
    if (cfg.kind == ModelKind::mf_bpr) throw ConfigError("build_encoder: not an encoder kind");

    std::mt19937_64 rng(seed);
    EncoderModel<S> m;
    m.cfg = cfg;
    m.vocab_size = vocab_size;
    const int E = cfg.embedding_size;
    const int H = cfg.hidden_size;
    const int L = cfg.max_seq_len;
    Tape<S> tape; // only used as tensor factory here

    auto param = [&](int r, int c, bool normal) {
        auto t = tape.tensor(r, c, true);
        if (normal) detail::init_normal(*t, rng);
        return t;
    };
    auto ones = [&](int n) {
        auto t = tape.tensor(1, n, true);
        std::fill(t->data.begin(), t->data.end(), S(1));
        return t;
    };
    auto zeros = [&](int r, int c) { return tape.tensor(r, c, true); };

    m.item_emb = param(vocab_size + 2, E, true);
    if (E != H) m.emb_proj = param(E, H, true);
    if (cfg.kind == ModelKind::deberta4rec)
        m.rel_emb = param(2 * cfg.effective_rel_clamp() + 1, H, true);
    else
        m.pos_emb = param(L, H, true);

    const int n_stored = cfg.share_layers ? 1 : cfg.num_blocks;
    for (int i = 0; i < n_stored; ++i) {
        TransformerBlock<S> b;
        b.wq = param(H, H, true);
        b.bq = zeros(1, H);
        b.wk = param(H, H, true);
        b.bk = zeros(1, H);
        b.wv = param(H, H, true);
        b.bv = zeros(1, H);
        b.wo = param(H, H, true);
        b.bo = zeros(1, H);
        b.ln1_gain = ones(H);
        b.ln1_bias = zeros(1, H);
        b.ln2_gain = ones(H);
        b.ln2_bias = zeros(1, H);
        b.ff1_w = param(H, 4 * H, true);
        b.ff1_b = zeros(1, 4 * H);
        b.ff2_w = param(4 * H, H, true);
        b.ff2_b = zeros(1, H);
        m.blocks.push_back(std::move(b));
    }
    m.final_gain = ones(H);
    m.final_bias = zeros(1, H);
    m.out_bias = zeros(vocab_size + 2, 1);
    return m;
}

template <class S>
MFModel<S> build_mf(ModelConfig cfg, int num_users, int vocab_size, std::uint64_t seed) {
    cfg.validate();
    std::mt19937_64 rng(seed);
    MFModel<S> m;
    m.cfg = cfg;
    m.num_users = num_users;
    m.vocab_size = vocab_size;
    Tape<S> tape;
    m.user_factors = tape.tensor(num_users, cfg.latent_dim, true);
    m.item_factors = tape.tensor(vocab_size + 1, cfg.latent_dim, true);
    m.item_bias = tape.tensor(vocab_size + 1, 1, true);
    detail::init_normal(*m.user_factors, rng);
    detail::init_normal(*m.item_factors, rng);
    return m;
}

template <class S>
struct Model {
    std::variant<EncoderModel<S>, MFModel<S>> impl;

    const ModelConfig& config() const {
        return std::visit([](auto& m) -> const ModelConfig& { return m.cfg; }, impl);
    }
    int vocab_size() const {
        return std::visit([](auto& m) { return m.vocab_size; }, impl);
    }
    std::vector<TensorPtr<S>> parameters() const {
        return std::visit([](auto& m) { return m.parameters(); }, impl);
    }
    bool is_encoder() const { return std::holds_alternative<EncoderModel<S>>(impl); }
    EncoderModel<S>& encoder() { return std::get<EncoderModel<S>>(impl); }
    const EncoderModel<S>& encoder() const { return std::get<EncoderModel<S>>(impl); }
    MFModel<S>& mf() { return std::get<MFModel<S>>(impl); }
    const MFModel<S>& mf() const { return std::get<MFModel<S>>(impl); }
};

template <class S>
Model<S> build_model(const ModelConfig& cfg, int num_users, int vocab_size, std::uint64_t seed) {
    Model<S> m;
    if (cfg.kind == ModelKind::mf_bpr)
        m.impl = build_mf<S>(cfg, num_users, vocab_size, seed);
    else
        m.impl = build_encoder<S>(cfg, vocab_size, seed);
    return m;
}

// left-pad or truncate to the most recent `len` ids
inline std::vector<int> pad_left(const std::vector<int>& seq, int len) {
    std::vector<int> out(len, 0);
    const int n = std::min<int>(len, (int)seq.size());
    for (int i = 0; i < n; ++i) out[len - n + i] = seq[seq.size() - n + i];
    return out;
}

// full score vector indexed by item id (size V+2); padding, mask token and
// excluded items are -inf
template <class S>
std::vector<double> predict_next_item(const EncoderModel<S>& model,
                                      const std::vector<int>& user_sequence,
                                      const std::vector<int>& exclude = {}) {
    if (user_sequence.empty()) throw ContractError("predict_next_item: empty sequence");
    const int L = model.cfg.max_seq_len;
    std::vector<int> ids;
    if (model.cfg.uses_mask_token()) {
        // most recent L-1 items plus the mask token at the end
        ids = user_sequence;
        ids.push_back(model.mask_id());
    } else {
        ids = user_sequence;
    }
    std::vector<std::vector<int>> batch{pad_left(ids, L)};

    Tape<S> tape;
    tape.grad_enabled = false;
    std::mt19937_64 rng(0);
    auto hidden = model.encode(tape, batch, /*training=*/false, rng);
    auto last = tape.slice(hidden, L - 1, 1, 0, model.cfg.hidden_size);
    auto logits = model.score_all_items(tape, last);

    const double ninf = -std::numeric_limits<double>::infinity();
    std::vector<double> scores(model.vocab_size + 2);
    for (int i = 0; i < model.vocab_size + 2; ++i) scores[i] = (double)logits->data[i];
    scores[model.pad_id()] = ninf;
    scores[model.mask_id()] = ninf;
    for (int e : exclude)
        if (e >= 0 && e < (int)scores.size()) scores[e] = ninf;
    return scores;
}

template <class S>
std::vector<double> predict_next_item(const MFModel<S>& model, int user,
                                      const std::vector<int>& exclude = {}) {
    const double ninf = -std::numeric_limits<double>::infinity();
    std::vector<double> scores(model.vocab_size + 2, ninf);
    for (int i = 1; i <= model.vocab_size; ++i) scores[i] = model.score(user, i);
    for (int e : exclude)
        if (e >= 0 && e < (int)scores.size()) scores[e] = ninf;
    return scores;
}

} // namespace seqlab
