#include "redforge/config.hpp"

#include <cmath>
#include <sstream>

#include <toml.hpp>

namespace redforge {
namespace {

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p) {
    std::filesystem::path path(p);
    if (path.is_absolute() || base.empty()) return path;
    return base / path;
}

template <class T>
void read_int(const toml::table& t, const char* key, T& out) {
    if (auto node = t.get(key)) {
        auto v = node->value<std::int64_t>();
        if (!v) throw Error(std::string("config key '") + key + "' must be an integer");
        if (*v < 0) throw Error(std::string("config key '") + key + "' must be non-negative");
        out = static_cast<T>(*v);
    }
}

void read_real(const toml::table& t, const char* key, double& out) {
    if (auto node = t.get(key)) {
        auto v = node->value<double>();
        if (!v) throw Error(std::string("config key '") + key + "' must be a number");
        out = *v;
    }
}

void read_bool(const toml::table& t, const char* key, bool& out) {
    if (auto node = t.get(key)) {
        auto v = node->value<bool>();
        if (!v) throw Error(std::string("config key '") + key + "' must be a boolean");
        out = *v;
    }
}

std::optional<std::string> read_string(const toml::table& t, const char* key) {
    if (auto node = t.get(key)) {
        auto v = node->value<std::string>();
        if (!v) throw Error(std::string("config key '") + key + "' must be a string");
        return v;
    }
    return std::nullopt;
}

void read_path(const toml::table& t, const char* key, const std::filesystem::path& base,
               std::optional<std::filesystem::path>& out) {
    if (auto s = read_string(t, key)) out = resolve(base, *s);
}

const toml::table* section(const toml::table& root, const char* name) {
    if (auto node = root.get(name)) {
        if (auto tbl = node->as_table()) return tbl;
        throw Error(std::string("config section [") + name + "] must be a table");
    }
    return nullptr;
}

}  // namespace

MixRatio parse_ratio(std::string_view text) {
    const auto colon = text.find(':');
    if (colon == std::string_view::npos) throw Error("ratio must look like 'a:b', got '" + std::string(text) + "'");
    auto num = [&](std::string_view part) {
        std::string s(part);
        std::size_t used = 0;
        double v = 0;
        try {
            v = std::stod(s, &used);
        } catch (...) {
            used = 0;
        }
        if (used == 0 || used != s.size() || !std::isfinite(v) || v < 0)
            throw Error("bad ratio component '" + s + "'");
        return v;
    };
    MixRatio r{num(text.substr(0, colon)), num(text.substr(colon + 1))};
    if (r.sns <= 0) throw Error("ratio sns part must be positive");
    return r;
}

std::string format_ratio(const MixRatio& r) {
    std::ostringstream ss;
    ss << r.sns << ':' << r.general;
    return ss.str();
}

void validate_filter(const FilterConfig& f) {
    if (f.min_tokens == 0 || f.max_tokens == 0) throw Error("filter token bounds must be positive");
    if (f.min_tokens > f.max_tokens) throw Error("filter min_tokens exceeds max_tokens");
    if (!(f.repetition_threshold > 0 && f.repetition_threshold <= 1))
        throw Error("filter repetition_threshold must be in (0, 1]");
    if (!(f.retention_target > 0 && f.retention_target <= 1))
        throw Error("filter retention_target must be in (0, 1]");
    if (f.ngram_order < 1) throw Error("filter ngram_order must be >= 1");
    if (!(f.smoothing_k > 0)) throw Error("filter smoothing_k must be positive");
}

void validate_pack(const PackConfig& p) {
    if (p.threshold == 0) throw Error("pack threshold must be positive");
}

void validate_mixture(const MixtureConfig& m) {
    if (!(m.alpha > 0)) throw Error("mixture alpha must be positive");
    if (m.top_k == 0 || m.search < m.top_k) throw Error("mixture requires search >= top_k >= 1");
    if (m.samples == 0) throw Error("mixture samples must be positive");
    if (!(m.prune_epsilon >= 0 && m.prune_epsilon < 1)) throw Error("mixture prune_epsilon must be in [0, 1)");
    if (!(m.heldout_fraction > 0 && m.heldout_fraction < 1)) throw Error("mixture heldout_fraction must be in (0, 1)");
}

void validate_sft(const SftConfig& s) {
    if (!(s.r2.sns_share() > s.r1.sns_share()))
        throw Error("sft r2 must have a strictly higher sns share than r1");
    if (s.max_len == 0) throw Error("sft max_len must be positive");
    if (s.style != "default" && s.style != "minimal") throw Error("sft style must be 'default' or 'minimal'");
}

void validate_pref(const PrefConfig& p) {
    if (!(p.tau >= 0 && p.tau <= 1)) throw Error("pref tau must be in [0, 1]");
    if (!(p.beta > 0)) throw Error("pref beta must be positive");
    if (!(p.sft_loss_coef >= 0)) throw Error("pref sft_loss_coef must be non-negative");
}

void validate_recipe(const RecipeConfig& r) {
    if (r.cpt_seq_len == 0 || r.sft_seq_len == 0 || r.po_seq_len == 0)
        throw Error("recipe sequence lengths must be positive");
}

void validate(const PipelineConfig& cfg) {
    validate_filter(cfg.filter);
    validate_pack(cfg.pack);
    validate_mixture(cfg.mixture);
    validate_sft(cfg.sft);
    validate_pref(cfg.pref);
    validate_recipe(cfg.recipe);
}

PipelineConfig parse_config(std::string_view toml_text, const std::filesystem::path& base_dir, bool check) {
    toml::table root;
    try {
        root = toml::parse(toml_text);
    } catch (const toml::parse_error& e) {
        std::ostringstream ss;
        ss << "config parse error: " << e.description() << " at line " << e.source().begin.line;
        throw Error(ss.str());
    }
    PipelineConfig cfg;
    read_int(root, "seed", cfg.seed);

    if (auto t = section(root, "filter")) {
        read_int(*t, "min_tokens", cfg.filter.min_tokens);
        read_int(*t, "max_tokens", cfg.filter.max_tokens);
        read_real(*t, "repetition_threshold", cfg.filter.repetition_threshold);
        read_real(*t, "retention_target", cfg.filter.retention_target);
        read_int(*t, "ngram_order", cfg.filter.ngram_order);
        read_real(*t, "smoothing_k", cfg.filter.smoothing_k);
        read_path(*t, "corpus", base_dir, cfg.filter.corpus);
        read_path(*t, "reference", base_dir, cfg.filter.reference);
    }
    if (auto t = section(root, "pack")) read_int(*t, "threshold", cfg.pack.threshold);
    if (auto t = section(root, "mixture")) {
        read_int(*t, "samples", cfg.mixture.samples);
        read_int(*t, "search", cfg.mixture.search);
        read_int(*t, "top_k", cfg.mixture.top_k);
        read_real(*t, "alpha", cfg.mixture.alpha);
        read_real(*t, "prune_epsilon", cfg.mixture.prune_epsilon);
        read_real(*t, "heldout_fraction", cfg.mixture.heldout_fraction);
        read_int(*t, "max_heldout_chars", cfg.mixture.max_heldout_chars);
    }
    if (auto t = section(root, "sft")) {
        if (auto s = read_string(*t, "r1")) cfg.sft.r1 = parse_ratio(*s);
        if (auto s = read_string(*t, "r2")) cfg.sft.r2 = parse_ratio(*s);
        read_int(*t, "max_len", cfg.sft.max_len);
        read_bool(*t, "allow_replacement", cfg.sft.allow_replacement);
        if (auto s = read_string(*t, "style")) cfg.sft.style = *s;
        read_path(*t, "sns", base_dir, cfg.sft.sns);
        read_path(*t, "general", base_dir, cfg.sft.general);
        if (auto tasks = section(*t, "tasks")) {
            for (const auto& [key, node] : *tasks) {
                auto cap = node.value<std::string>();
                if (!cap) throw Error("sft.tasks values must be capability strings");
                cfg.sft.extra_tasks[std::string(key.str())] = parse_capability(*cap);
            }
        }
    }
    if (auto t = section(root, "pref")) {
        read_real(*t, "tau", cfg.pref.tau);
        read_real(*t, "beta", cfg.pref.beta);
        read_real(*t, "sft_loss_coef", cfg.pref.sft_loss_coef);
        read_path(*t, "mc", base_dir, cfg.pref.mc);
        read_path(*t, "pred_log", base_dir, cfg.pref.pred_log);
        read_path(*t, "judged", base_dir, cfg.pref.judged);
        read_path(*t, "calibration", base_dir, cfg.pref.calibration);
    }
    if (auto t = section(root, "eval")) {
        if (auto node = t->get("tasks")) {
            auto arr = node->as_array();
            if (!arr) throw Error("eval.tasks must be an array of tables");
            for (const auto& item : *arr) {
                auto tbl = item.as_table();
                if (!tbl) throw Error("eval.tasks entries must be tables");
                EvalTaskSpec spec;
                auto name = read_string(*tbl, "name");
                auto metric = read_string(*tbl, "metric");
                auto pred = read_string(*tbl, "pred");
                auto gold = read_string(*tbl, "gold");
                if (!name || !metric || !pred || !gold)
                    throw Error("eval.tasks entries need name, metric, pred and gold");
                spec.task = *name;
                spec.metric = *metric;
                spec.pred = resolve(base_dir, *pred);
                spec.gold = resolve(base_dir, *gold);
                cfg.eval.tasks.push_back(std::move(spec));
            }
        }
    }
    if (auto t = section(root, "recipe")) {
        auto& r = cfg.recipe;
        read_int(*t, "cpt_seq_len", r.cpt_seq_len);
        read_int(*t, "sft_seq_len", r.sft_seq_len);
        read_int(*t, "po_seq_len", r.po_seq_len);
        read_int(*t, "cpt_epochs", r.cpt_epochs);
        read_int(*t, "sft_step1_epochs", r.sft_step1_epochs);
        read_int(*t, "sft_step2_epochs", r.sft_step2_epochs);
        read_int(*t, "po_epochs", r.po_epochs);
        read_int(*t, "sft_batch_size", r.sft_batch_size);
        read_int(*t, "po_batch_size", r.po_batch_size);
        read_real(*t, "warmup_ratio", r.warmup_ratio);
        read_real(*t, "cpt_lr", r.cpt_lr);
        read_real(*t, "sft_lr", r.sft_lr);
        read_real(*t, "po_lr", r.po_lr);
        read_real(*t, "adam_beta1", r.adam_beta1);
        read_real(*t, "adam_beta2", r.adam_beta2);
        read_real(*t, "adam_epsilon", r.adam_epsilon);
    }
    if (check) validate(cfg);
    return cfg;
}

PipelineConfig load_config(const std::filesystem::path& path, bool check) {
    return parse_config(read_file(path), path.parent_path(), check);
}

ordered_json recipe_manifest(const PipelineConfig& cfg) {
    const auto& r = cfg.recipe;
    ordered_json adam = {{"beta1", r.adam_beta1}, {"beta2", r.adam_beta2}, {"epsilon", r.adam_epsilon}};
    ordered_json j;
    j["cpt"] = {{"seq_len", r.cpt_seq_len}, {"epochs", r.cpt_epochs}, {"lr", r.cpt_lr}};
    j["sft"] = {{"seq_len", r.sft_seq_len},
                {"epochs_step1", r.sft_step1_epochs},
                {"epochs_step2", r.sft_step2_epochs},
                {"batch_size", r.sft_batch_size},
                {"warmup_ratio", r.warmup_ratio},
                {"lr", r.sft_lr},
                {"optimizer", "adamw"},
                {"adam", adam}};
    j["po"] = {{"seq_len", r.po_seq_len},
               {"epochs", r.po_epochs},
               {"batch_size", r.po_batch_size},
               {"lr", r.po_lr},
               {"dpo_beta", cfg.pref.beta},
               {"sft_loss_coef", cfg.pref.sft_loss_coef}};
    return j;
}

}  // namespace redforge
