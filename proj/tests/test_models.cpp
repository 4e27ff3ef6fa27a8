#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <random>

#include "seqlab/checkpoint.hpp"
#include "seqlab/models.hpp"

using namespace seqlab;

namespace {

ModelConfig tiny(ModelKind kind) {
    ModelConfig cfg = ModelConfig::defaults(kind);
    cfg.max_seq_len = 8;
    cfg.hidden_size = 16;
    if (kind != ModelKind::albert4rec) cfg.embedding_size = 16;
    cfg.num_blocks = 2;
    cfg.num_heads = 2;
    cfg.dropout = 0.0;
    return cfg;
}

template <class S>
std::vector<S> encode_one(const EncoderModel<S>& m, const std::vector<int>& padded) {
    Tape<S> tape;
    tape.grad_enabled = false;
    std::mt19937_64 rng(0);
    auto h = m.encode(tape, {padded}, /*training=*/false, rng);
    return h->data;
}

} // namespace

TEST_CASE("model construction is deterministic in the seed") {
    for (ModelKind kind : {ModelKind::bert4rec, ModelKind::sasrec, ModelKind::albert4rec,
                           ModelKind::deberta4rec}) {
        auto a = build_encoder<float>(tiny(kind), 10, 42);
        auto b = build_encoder<float>(tiny(kind), 10, 42);
        auto c = build_encoder<float>(tiny(kind), 10, 43);
        auto pa = a.parameters(), pb = b.parameters(), pc = c.parameters();
        REQUIRE(pa.size() == pb.size());
        bool all_equal = true, any_diff_seed = false;
        for (std::size_t i = 0; i < pa.size(); ++i) {
            all_equal = all_equal && pa[i]->data == pb[i]->data;
            any_diff_seed = any_diff_seed || pa[i]->data != pc[i]->data;
        }
        CHECK(all_equal);
        CHECK(any_diff_seed);
    }
}

TEST_CASE("causal attention: perturbing position j never changes outputs before j") {
    auto m = build_encoder<float>(tiny(ModelKind::sasrec), 10, 1);
    const int L = m.cfg.max_seq_len;
    std::vector<int> base = {0, 0, 1, 2, 3, 4, 5, 6}; // left-padded to L=8
    auto h0 = encode_one(m, base);
    for (int j = 2; j < L; ++j) {
        auto mod = base;
        mod[j] = (mod[j] % 10) + 1; // different valid item
        REQUIRE(mod[j] != base[j]);
        auto h1 = encode_one(m, mod);
        for (int i = 0; i < j; ++i)
            CHECK(std::memcmp(h0.data() + (std::size_t)i * m.cfg.hidden_size,
                              h1.data() + (std::size_t)i * m.cfg.hidden_size,
                              sizeof(float) * m.cfg.hidden_size) == 0);
        // and it does change the perturbed position itself
        CHECK(std::memcmp(h0.data() + (std::size_t)j * m.cfg.hidden_size,
                          h1.data() + (std::size_t)j * m.cfg.hidden_size,
                          sizeof(float) * m.cfg.hidden_size) != 0);
    }
}

TEST_CASE("bidirectional attention: the last position influences earlier outputs") {
    for (ModelKind kind : {ModelKind::bert4rec, ModelKind::albert4rec, ModelKind::deberta4rec}) {
        auto m = build_encoder<float>(tiny(kind), 10, 2);
        std::vector<int> base = {0, 0, 1, 2, 3, 4, 5, 6};
        auto mod = base;
        mod.back() = 9;
        auto h0 = encode_one(m, base);
        auto h1 = encode_one(m, mod);
        bool earlier_changed = false;
        for (int i = 2; i < 7 && !earlier_changed; ++i)
            earlier_changed = std::memcmp(h0.data() + (std::size_t)i * m.cfg.hidden_size,
                                          h1.data() + (std::size_t)i * m.cfg.hidden_size,
                                          sizeof(float) * m.cfg.hidden_size) != 0;
        CHECK(earlier_changed);
    }
}

TEST_CASE("batch independence: a row's output does not depend on its batch neighbours") {
    auto m = build_encoder<float>(tiny(ModelKind::bert4rec), 10, 3);
    std::vector<int> row = {0, 0, 1, 2, 3, 4, 5, 6};
    std::vector<int> other = {0, 0, 7, 8, 9, 1, 2, 3};
    auto solo = encode_one(m, row);
    Tape<float> tape;
    tape.grad_enabled = false;
    std::mt19937_64 rng(0);
    auto both = m.encode(tape, {other, row}, false, rng);
    CHECK(std::memcmp(solo.data(), both->data.data() + solo.size(), sizeof(float) * solo.size()) ==
          0);
}

TEST_CASE("tied output projection: logits are hidden * item_emb^T + bias") {
    auto m = build_encoder<double>(tiny(ModelKind::bert4rec), 6, 4);
    Tape<double> tape;
    tape.grad_enabled = false;
    auto h = tape.tensor(2, m.cfg.hidden_size, false);
    std::mt19937_64 rng(9);
    std::uniform_real_distribution<double> u(-1, 1);
    for (auto& v : h->data) v = u(rng);
    auto logits = m.score_all_items(tape, h);
    REQUIRE(logits->rows == 2);
    REQUIRE(logits->cols == 6 + 2);
    for (int r = 0; r < 2; ++r)
        for (int j = 0; j < logits->cols; ++j) {
            double ref = m.out_bias->data[j];
            for (int k = 0; k < m.cfg.hidden_size; ++k)
                ref += h->at(r, k) * m.item_emb->at(j, k);
            CHECK(logits->at(r, j) == doctest::Approx(ref).epsilon(1e-12));
        }
}

TEST_CASE("ALBERT: cross-layer sharing keeps the parameter count independent of depth") {
    auto cfg1 = tiny(ModelKind::albert4rec);
    cfg1.num_blocks = 1;
    auto cfg3 = tiny(ModelKind::albert4rec);
    cfg3.num_blocks = 3;
    auto m1 = build_encoder<float>(cfg1, 20, 5);
    auto m3 = build_encoder<float>(cfg3, 20, 5);
    CHECK(m1.parameters().size() == m3.parameters().size());
    // every block reference resolves to the same stored block
    CHECK(&m3.block(0) == &m3.block(1));
    CHECK(&m3.block(0) == &m3.block(2));
    // factorized embedding: E=16 by default, projected into the hidden size
    CHECK(ModelConfig::defaults(ModelKind::albert4rec).embedding_size == 16);

    // an unshared bert with 3 blocks has strictly more parameters
    auto cfgb = tiny(ModelKind::bert4rec);
    cfgb.num_blocks = 3;
    auto mb = build_encoder<float>(cfgb, 20, 5);
    CHECK(mb.parameters().size() > m1.parameters().size());
    CHECK(&mb.block(0) != &mb.block(2));
}

TEST_CASE("DeBERTa: relative embeddings replace absolute positions and affect the output") {
    auto cfg = tiny(ModelKind::deberta4rec);
    cfg.rel_clamp = 3; // max_seq_len 8 > 2*3+1 buckets exercises clamping
    auto m = build_encoder<float>(cfg, 10, 6);
    CHECK(m.rel_emb != nullptr);
    CHECK(m.pos_emb == nullptr);
    CHECK(m.rel_emb->rows == 2 * 3 + 1);

    std::vector<int> seq = {1, 2, 3, 4, 5, 6, 7, 8};
    auto h0 = encode_one(m, seq);
    for (float v : h0) CHECK(std::isfinite(v));
    for (auto& v : m.rel_emb->data) v += 0.1f;
    auto h1 = encode_one(m, seq);
    CHECK(h0 != h1);

    // absolute-position kinds are the opposite
    auto mb = build_encoder<float>(tiny(ModelKind::bert4rec), 10, 6);
    CHECK(mb.rel_emb == nullptr);
    CHECK(mb.pos_emb != nullptr);
}

TEST_CASE("predict_next_item: pseudo-items and exclusions are -inf, rest finite") {
    const double ninf = -std::numeric_limits<double>::infinity();
    for (ModelKind kind :
         {ModelKind::bert4rec, ModelKind::sasrec, ModelKind::albert4rec, ModelKind::deberta4rec}) {
        auto m = build_encoder<float>(tiny(kind), 10, 7);
        auto scores = predict_next_item(m, std::vector<int>{1, 2, 3}, std::vector<int>{4, 7});
        REQUIRE(scores.size() == 12);
        CHECK(scores[0] == ninf);  // padding
        CHECK(scores[11] == ninf); // mask token
        CHECK(scores[4] == ninf);
        CHECK(scores[7] == ninf);
        for (int i : {1, 2, 3, 5, 6, 8, 9, 10}) CHECK(std::isfinite(scores[i]));
        // deterministic
        CHECK(predict_next_item(m, std::vector<int>{1, 2, 3}, std::vector<int>{4, 7}) == scores);
        // sequences longer than the context window still work
        std::vector<int> long_seq(40);
        for (int i = 0; i < 40; ++i) long_seq[i] = 1 + i % 10;
        CHECK(predict_next_item(m, long_seq, {}).size() == 12);
    }
}

TEST_CASE("MF model: score is a dot product plus item bias; cold users fall back to bias") {
    ModelConfig cfg = ModelConfig::defaults(ModelKind::mf_bpr);
    cfg.latent_dim = 3;
    auto m = build_mf<double>(cfg, 2, 4, 8);
    // overwrite with known values
    m.user_factors->data = {1, 0, 2, /*u1*/ 0, 1, 0};
    for (auto& v : m.item_factors->data) v = 0;
    m.item_factors->at(2, 0) = 3;
    m.item_factors->at(2, 2) = 1;
    for (auto& v : m.item_bias->data) v = 0;
    m.item_bias->data[2] = 0.5;
    CHECK(m.score(0, 2) == doctest::Approx(1 * 3 + 2 * 1 + 0.5));
    CHECK(m.score(1, 2) == doctest::Approx(0.5));
    // out-of-range user id = cold user: bias only
    CHECK(m.score(99, 2) == doctest::Approx(0.5));

    auto scores = predict_next_item(m, 0, std::vector<int>{1});
    REQUIRE(scores.size() == 6);
    CHECK(scores[0] == -std::numeric_limits<double>::infinity());
    CHECK(scores[5] == -std::numeric_limits<double>::infinity());
    CHECK(scores[1] == -std::numeric_limits<double>::infinity());
    CHECK(scores[2] == doctest::Approx(5.5));
}

TEST_CASE("config validation rejects inconsistent settings") {
    auto cfg = tiny(ModelKind::bert4rec);
    cfg.num_heads = 3; // does not divide hidden 16
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
    cfg = tiny(ModelKind::bert4rec);
    cfg.mask_prob = 1.5;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
    cfg = tiny(ModelKind::bert4rec);
    cfg.max_seq_len = 0;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
    CHECK_THROWS_AS(build_encoder<float>(ModelConfig::defaults(ModelKind::mf_bpr), 5, 0),
                    ConfigError);
}

TEST_CASE("checkpoint: bit-exact roundtrip and shape verification") {
    const auto path = (std::filesystem::temp_directory_path() / "model_ckpt.bin").string();
    auto m = build_encoder<float>(tiny(ModelKind::bert4rec), 10, 11);
    save_checkpoint(path, checkpoint_from_params(m.parameters()));

    auto m2 = build_encoder<float>(tiny(ModelKind::bert4rec), 10, 999);
    params_from_checkpoint(load_checkpoint(path), m2.parameters());
    auto p1 = m.parameters(), p2 = m2.parameters();
    for (std::size_t i = 0; i < p1.size(); ++i)
        CHECK(std::memcmp(p1[i]->data.data(), p2[i]->data.data(),
                          p1[i]->data.size() * sizeof(float)) == 0);

    // scalar width mismatch
    auto md = build_encoder<double>(tiny(ModelKind::bert4rec), 10, 11);
    CHECK_THROWS_AS(params_from_checkpoint(load_checkpoint(path), md.parameters()),
                    CheckpointError);
    // shape mismatch
    auto small = build_encoder<float>(tiny(ModelKind::bert4rec), 5, 11);
    CHECK_THROWS_AS(params_from_checkpoint(load_checkpoint(path), small.parameters()),
                    CheckpointError);
    // record-count mismatch (fewer blocks -> fewer parameter tensors)
    auto shallow_cfg = tiny(ModelKind::bert4rec);
    shallow_cfg.num_blocks = 1;
    auto shallow = build_encoder<float>(shallow_cfg, 10, 11);
    CHECK_THROWS_AS(params_from_checkpoint(load_checkpoint(path), shallow.parameters()),
                    CheckpointError);
    // corrupt magic
    {
        std::ofstream out(path, std::ios::binary);
        out << "NOTMAGIC";
    }
    CHECK_THROWS_AS(load_checkpoint(path), CheckpointError);
    std::remove(path.c_str());
}
