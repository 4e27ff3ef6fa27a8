#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "seqlab/config.hpp"

using namespace seqlab;

TEST_CASE("minimal config inherits the documented defaults") {
    auto cfg = parse_experiment_config("dataset.path = data.txt\n", "inline");
    CHECK(cfg.seed == 42);
    CHECK(cfg.dataset_path == "data.txt");
    CHECK(cfg.dataset_format == DataFormat::pair_per_line);
    CHECK(cfg.min_len == 5);
    CHECK(cfg.num_val_users == 2048);
    CHECK(cfg.model.kind == ModelKind::bert4rec);
    CHECK(cfg.model.max_seq_len == 50);
    CHECK(cfg.model.hidden_size == 64);
    CHECK(cfg.model.num_blocks == 2);
    CHECK(cfg.model.num_heads == 2);
    CHECK(cfg.model.mask_prob == 0.2);
    CHECK(cfg.training.objective == Objective::masked_item);
    CHECK(cfg.training.batch_size == 128);
    CHECK(cfg.training.lr == 1e-3);
    CHECK(cfg.training.patience == 200);
    CHECK(cfg.training.seed == 42);       // inherits the global seed
    CHECK(cfg.training.mask_prob == 0.2); // inherits model.mask_prob
    CHECK(cfg.base_steps == 400000);
    CHECK(cfg.evaluation.mode == EvalMode::both);
    CHECK(cfg.evaluation.num_negatives == 100);
    CHECK(cfg.evaluation.cutoffs == std::vector<int>{1, 5, 10});
    CHECK(cfg.evaluation.exclude_history);
    CHECK(cfg.evaluation.seed == 42);
    CHECK(cfg.reported.empty());
}

TEST_CASE("kind-specific defaults") {
    auto sas = parse_experiment_config("model.kind = sasrec\n", "inline");
    CHECK(sas.training.objective == Objective::shifted_sequence);

    auto albert = parse_experiment_config("model.kind = albert4rec\n", "inline");
    CHECK(albert.model.share_layers);
    CHECK(albert.model.embedding_size == 16);
    CHECK(albert.training.objective == Objective::masked_item);

    auto deberta = parse_experiment_config("model.kind = deberta4rec\n", "inline");
    CHECK(deberta.training.objective == Objective::masked_item);

    auto mf = parse_experiment_config("model.kind = mf_bpr\n", "inline");
    CHECK(mf.training.objective == Objective::bpr);
    CHECK(mf.model.latent_dim == 128);
}

TEST_CASE("overrides, sections and comments") {
    const char* text =
        "# experiment\n"
        "seed = 9\n"
        "dataset.path = x.csv\n"
        "dataset.format = csv\n"
        "model.kind = sasrec\n"
        "model.hidden_size = 32  # inline comment\n"
        "training.steps = 1000\n"
        "training.seed = 77\n"
        "evaluation.cutoffs = 5,20\n"
        "evaluation.mode = sampled\n"
        "reported.sampled_recall@10 = 0.697\n";
    auto cfg = parse_experiment_config(text, "inline");
    CHECK(cfg.seed == 9);
    CHECK(cfg.dataset_format == DataFormat::csv_timestamp);
    CHECK(cfg.model.hidden_size == 32);
    CHECK(cfg.training.steps == 1000);
    CHECK(cfg.training.seed == 77); // explicit beats inherited
    CHECK(cfg.evaluation.seed == 9);
    CHECK(cfg.evaluation.cutoffs == std::vector<int>{5, 20});
    CHECK(cfg.evaluation.mode == EvalMode::sampled);
    REQUIRE(cfg.reported.size() == 1);
    CHECK(cfg.reported.at("sampled_recall@10") == 0.697);
}

TEST_CASE("unknown and malformed keys are rejected before any work") {
    CHECK_THROWS_WITH_AS(parse_experiment_config("model.hiden_size = 64\n", "inline"),
                         doctest::Contains("unknown keys"), ConfigError);
    CHECK_THROWS_AS(parse_experiment_config("seed\n", "inline"), ConfigError);
    CHECK_THROWS_AS(parse_experiment_config("seed = \n", "inline"), ConfigError);
    CHECK_THROWS_AS(parse_experiment_config("seed = 1\nseed = 2\n", "inline"), ConfigError);
    CHECK_THROWS_AS(parse_experiment_config("model.kind = gpt\n", "inline"), ConfigError);
    CHECK_THROWS_AS(parse_experiment_config("training.batch_size = frog\n", "inline"),
                    ConfigError);
    CHECK_THROWS_AS(parse_experiment_config("evaluation.mode = fancy\n", "inline"), ConfigError);
    CHECK_THROWS_AS(parse_experiment_config("evaluation.cutoffs = 5,-1\n", "inline"), ConfigError);
    CHECK_THROWS_AS(parse_experiment_config("evaluation.num_negatives = 0\n", "inline"),
                    ConfigError);
    CHECK_THROWS_AS(parse_experiment_config("model.num_heads = 3\n", "inline"),
                    ConfigError); // 3 does not divide hidden 64
    CHECK_THROWS_AS(parse_experiment_config("reported.sampled_mrr = high\n", "inline"),
                    ConfigError);
    CHECK_THROWS_AS(load_experiment_config("/nonexistent.cfg"), ConfigError);
}

TEST_CASE("emit/parse roundtrip is a fixed point") {
    const char* text =
        "seed = 3\n"
        "dataset.path = corpus.txt\n"
        "model.kind = deberta4rec\n"
        "model.rel_clamp = 16\n"
        "training.steps = 250\n"
        "training.last_item_only_mask = true\n"
        "evaluation.num_negatives = 50\n"
        "reported.sampled_ndcg@10 = 0.4818\n";
    auto cfg = parse_experiment_config(text, "inline");
    const auto emitted = emit_experiment_config(cfg);
    auto cfg2 = parse_experiment_config(emitted, "emitted");
    // emitting again must produce the identical text
    CHECK(emit_experiment_config(cfg2) == emitted);
    CHECK(cfg2.model.kind == ModelKind::deberta4rec);
    CHECK(cfg2.model.rel_clamp == 16);
    CHECK(cfg2.training.last_item_only_mask);
    CHECK(cfg2.reported.at("sampled_ndcg@10") == 0.4818);
}
