#include "seqlab/config.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

namespace seqlab {

namespace {

std::string trim(const std::string& s) {
    auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

class KeyValues {
public:
    KeyValues(const std::string& text, const std::string& name) : name_(name) {
        std::istringstream in(text);
        std::string line;
        long long line_no = 0;
        while (std::getline(in, line)) {
            ++line_no;
            const auto hash = line.find('#');
            if (hash != std::string::npos) line = line.substr(0, hash);
            line = trim(line);
            if (line.empty()) continue;
            const auto eq = line.find('=');
            if (eq == std::string::npos)
                throw ConfigError(name + ":" + std::to_string(line_no) +
                                  ": expected \"key = value\"");
            const std::string key = trim(line.substr(0, eq));
            const std::string value = trim(line.substr(eq + 1));
            if (key.empty() || value.empty())
                throw ConfigError(name + ":" + std::to_string(line_no) + ": empty key or value");
            if (!kv_.emplace(key, value).second)
                throw ConfigError(name + ": duplicate key \"" + key + "\"");
        }
    }

    bool has(const std::string& key) const { return kv_.count(key) > 0; }

    std::string take_str(const std::string& key, const std::string& dflt) {
        auto it = kv_.find(key);
        if (it == kv_.end()) return dflt;
        std::string v = it->second;
        kv_.erase(it);
        return v;
    }

    template <class T>
    T take_num(const std::string& key, T dflt) {
        auto it = kv_.find(key);
        if (it == kv_.end()) return dflt;
        std::istringstream parse(it->second);
        T v{};
        if (!(parse >> v) || !(parse >> std::ws).eof())
            throw ConfigError(name_ + ": bad numeric value for \"" + key + "\": " + it->second);
        kv_.erase(it);
        return v;
    }

    bool take_bool(const std::string& key, bool dflt) {
        auto it = kv_.find(key);
        if (it == kv_.end()) return dflt;
        const std::string v = it->second;
        kv_.erase(it);
        if (v == "true" || v == "1" || v == "yes") return true;
        if (v == "false" || v == "0" || v == "no") return false;
        throw ConfigError(name_ + ": bad boolean value for \"" + key + "\": " + v);
    }

    // all remaining keys with the given prefix
    std::map<std::string, std::string> take_prefix(const std::string& prefix) {
        std::map<std::string, std::string> out;
        for (auto it = kv_.begin(); it != kv_.end();) {
            if (it->first.rfind(prefix, 0) == 0) {
                out.emplace(it->first.substr(prefix.size()), it->second);
                it = kv_.erase(it);
            } else {
                ++it;
            }
        }
        return out;
    }

    void reject_leftovers() const {
        if (kv_.empty()) return;
        std::string keys;
        for (auto& [k, v] : kv_) keys += (keys.empty() ? "" : ", ") + k;
        throw ConfigError(name_ + ": unknown keys: " + keys);
    }

private:
    std::string name_;
    std::map<std::string, std::string> kv_;
};

std::vector<int> parse_cutoffs(const std::string& s, const std::string& name) {
    std::vector<int> out;
    std::istringstream in(s);
    std::string tok;
    while (std::getline(in, tok, ',')) {
        tok = trim(tok);
        int v = 0;
        auto [p, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
        if (ec != std::errc() || p != tok.data() + tok.size() || v < 1)
            throw ConfigError(name + ": bad cutoff \"" + tok + "\"");
        out.push_back(v);
    }
    if (out.empty()) throw ConfigError(name + ": empty cutoff list");
    return out;
}

} // namespace

ExperimentConfig parse_experiment_config(const std::string& text, const std::string& name) {
    KeyValues kv(text, name);
    ExperimentConfig cfg;

    cfg.seed = kv.take_num<std::uint64_t>("seed", cfg.seed);
    cfg.output_dir = kv.take_str("output_dir", cfg.output_dir);

    cfg.dataset_path = kv.take_str("dataset.path", "");
    const std::string fmt = kv.take_str("dataset.format", "pair_per_line");
    if (fmt == "pair_per_line") cfg.dataset_format = DataFormat::pair_per_line;
    else if (fmt == "csv") cfg.dataset_format = DataFormat::csv_timestamp;
    else throw ConfigError(name + ": unknown dataset.format \"" + fmt + "\"");
    cfg.min_len = kv.take_num<int>("dataset.min_len", cfg.min_len);

    cfg.num_val_users = kv.take_num<int>("split.num_val_users", cfg.num_val_users);
    cfg.split_seed = kv.take_num<std::uint64_t>("split.seed", cfg.split_seed);
    cfg.popularity_full_counts = kv.take_bool("popularity.full_counts", false);

    const ModelKind kind = parse_model_kind(kv.take_str("model.kind", "bert4rec"));
    cfg.model = ModelConfig::defaults(kind);
    cfg.model.max_seq_len = kv.take_num<int>("model.max_seq_len", cfg.model.max_seq_len);
    cfg.model.hidden_size = kv.take_num<int>("model.hidden_size", cfg.model.hidden_size);
    // unless the kind factorizes the embedding (albert4rec), the embedding
    // size follows an overridden hidden size rather than the stale default
    const int emb_default = cfg.model.kind == ModelKind::albert4rec
                                ? cfg.model.embedding_size
                                : cfg.model.hidden_size;
    cfg.model.embedding_size = kv.take_num<int>("model.embedding_size", emb_default);
    cfg.model.num_blocks = kv.take_num<int>("model.num_blocks", cfg.model.num_blocks);
    cfg.model.num_heads = kv.take_num<int>("model.num_heads", cfg.model.num_heads);
    cfg.model.mask_prob = kv.take_num<double>("model.mask_prob", cfg.model.mask_prob);
    cfg.model.dropout = kv.take_num<double>("model.dropout", cfg.model.dropout);
    cfg.model.share_layers = kv.take_bool("model.share_layers", cfg.model.share_layers);
    cfg.model.latent_dim = kv.take_num<int>("model.latent_dim", cfg.model.latent_dim);
    cfg.model.rel_clamp = kv.take_num<int>("model.rel_clamp", cfg.model.rel_clamp);
    cfg.model.validate();

    cfg.training.objective =
        parse_objective(kv.take_str("training.objective", to_string(default_objective(kind))));
    cfg.training.batch_size = kv.take_num<int>("training.batch_size", cfg.training.batch_size);
    cfg.training.steps = kv.take_num<long long>("training.steps", cfg.training.steps);
    cfg.training.patience = kv.take_num<int>("training.patience", cfg.training.patience);
    cfg.training.max_epochs = kv.take_num<int>("training.max_epochs", cfg.training.max_epochs);
    cfg.training.mask_prob = kv.take_num<double>("training.mask_prob", cfg.model.mask_prob);
    cfg.training.lr = kv.take_num<double>("training.lr", cfg.training.lr);
    cfg.training.beta1 = kv.take_num<double>("training.beta1", cfg.training.beta1);
    cfg.training.beta2 = kv.take_num<double>("training.beta2", cfg.training.beta2);
    cfg.training.adam_eps = kv.take_num<double>("training.adam_eps", cfg.training.adam_eps);
    cfg.training.seed = kv.take_num<std::uint64_t>("training.seed", cfg.seed);
    const std::string strat =
        kv.take_str("training.negative_strategy", "one_uniform_negative");
    if (strat == "one_uniform_negative")
        cfg.training.negative_strategy = NegativeStrategy::one_uniform_negative;
    else if (strat == "full_softmax")
        cfg.training.negative_strategy = NegativeStrategy::full_softmax;
    else
        throw ConfigError(name + ": unknown training.negative_strategy \"" + strat + "\"");
    cfg.training.last_item_only_mask = kv.take_bool("training.last_item_only_mask", false);
    if (cfg.training.patience < 1) throw ConfigError(name + ": training.patience must be >= 1");
    if (cfg.training.batch_size < 1) throw ConfigError(name + ": training.batch_size must be >= 1");

    const std::string mode = kv.take_str("evaluation.mode", "both");
    if (mode == "sampled") cfg.evaluation.mode = EvalMode::sampled;
    else if (mode == "unsampled") cfg.evaluation.mode = EvalMode::unsampled;
    else if (mode == "both") cfg.evaluation.mode = EvalMode::both;
    else throw ConfigError(name + ": unknown evaluation.mode \"" + mode + "\"");
    cfg.evaluation.cutoffs = parse_cutoffs(kv.take_str("evaluation.cutoffs", "1,5,10"), name);
    cfg.evaluation.num_negatives =
        kv.take_num<int>("evaluation.num_negatives", cfg.evaluation.num_negatives);
    if (cfg.evaluation.num_negatives < 1)
        throw ConfigError(name + ": evaluation.num_negatives must be >= 1");
    cfg.evaluation.exclude_history = kv.take_bool("evaluation.exclude_history", true);
    cfg.evaluation.seed = kv.take_num<std::uint64_t>("evaluation.seed", cfg.seed);

    cfg.base_steps = kv.take_num<long long>("training.base_steps", cfg.base_steps);

    for (auto& [metric, value] : kv.take_prefix("reported.")) {
        std::istringstream parse(value);
        double v = 0;
        if (!(parse >> v) || !(parse >> std::ws).eof())
            throw ConfigError(name + ": bad reported value for \"" + metric + "\"");
        cfg.reported[metric] = v;
    }

    kv.reject_leftovers();
    return cfg;
}

ExperimentConfig load_experiment_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_experiment_config(buf.str(), path);
}

std::string emit_experiment_config(const ExperimentConfig& cfg) {
    std::ostringstream out;
    out.precision(17);
    out << "seed = " << cfg.seed << '\n';
    out << "output_dir = " << cfg.output_dir << '\n';
    out << "dataset.path = " << cfg.dataset_path << '\n';
    out << "dataset.format = "
        << (cfg.dataset_format == DataFormat::pair_per_line ? "pair_per_line" : "csv") << '\n';
    out << "dataset.min_len = " << cfg.min_len << '\n';
    out << "split.num_val_users = " << cfg.num_val_users << '\n';
    out << "split.seed = " << cfg.split_seed << '\n';
    out << "popularity.full_counts = " << (cfg.popularity_full_counts ? "true" : "false") << '\n';
    out << "model.kind = " << to_string(cfg.model.kind) << '\n';
    out << "model.max_seq_len = " << cfg.model.max_seq_len << '\n';
    out << "model.hidden_size = " << cfg.model.hidden_size << '\n';
    out << "model.embedding_size = " << cfg.model.embedding_size << '\n';
    out << "model.num_blocks = " << cfg.model.num_blocks << '\n';
    out << "model.num_heads = " << cfg.model.num_heads << '\n';
    out << "model.mask_prob = " << cfg.model.mask_prob << '\n';
    out << "model.dropout = " << cfg.model.dropout << '\n';
    out << "model.share_layers = " << (cfg.model.share_layers ? "true" : "false") << '\n';
    out << "model.latent_dim = " << cfg.model.latent_dim << '\n';
    out << "model.rel_clamp = " << cfg.model.rel_clamp << '\n';
    out << "training.objective = " << to_string(cfg.training.objective) << '\n';
    out << "training.batch_size = " << cfg.training.batch_size << '\n';
    out << "training.steps = " << cfg.training.steps << '\n';
    out << "training.patience = " << cfg.training.patience << '\n';
    out << "training.max_epochs = " << cfg.training.max_epochs << '\n';
    out << "training.mask_prob = " << cfg.training.mask_prob << '\n';
    out << "training.lr = " << cfg.training.lr << '\n';
    out << "training.beta1 = " << cfg.training.beta1 << '\n';
    out << "training.beta2 = " << cfg.training.beta2 << '\n';
    out << "training.adam_eps = " << cfg.training.adam_eps << '\n';
    out << "training.seed = " << cfg.training.seed << '\n';
    out << "training.negative_strategy = "
        << (cfg.training.negative_strategy == NegativeStrategy::one_uniform_negative
                ? "one_uniform_negative"
                : "full_softmax")
        << '\n';
    out << "training.last_item_only_mask = " << (cfg.training.last_item_only_mask ? "true" : "false")
        << '\n';
    out << "training.base_steps = " << cfg.base_steps << '\n';
    out << "evaluation.mode = " << to_string(cfg.evaluation.mode) << '\n';
    out << "evaluation.cutoffs = ";
    for (std::size_t i = 0; i < cfg.evaluation.cutoffs.size(); ++i)
        out << (i ? "," : "") << cfg.evaluation.cutoffs[i];
    out << '\n';
    out << "evaluation.num_negatives = " << cfg.evaluation.num_negatives << '\n';
    out << "evaluation.exclude_history = " << (cfg.evaluation.exclude_history ? "true" : "false")
        << '\n';
    out << "evaluation.seed = " << cfg.evaluation.seed << '\n';
    for (auto& [metric, value] : cfg.reported)
        out << "reported." << metric << " = " << value << '\n';
    return out.str();
}

} // namespace seqlab
