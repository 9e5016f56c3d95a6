#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "redforge/jsonl.hpp"
#include "redforge/types.hpp"

namespace redforge {

/// sns:general proportion, e.g. "1:3".
struct MixRatio {
    double sns = 1.0;
    double general = 1.0;

    double sns_share() const { return sns / (sns + general); }
    bool operator==(const MixRatio&) const = default;
};

MixRatio parse_ratio(std::string_view text);
std::string format_ratio(const MixRatio& r);

struct FilterConfig {
    std::size_t min_tokens = 10;
    std::size_t max_tokens = 65536;
    double repetition_threshold = 0.3;
    double retention_target = 0.20;  // 20B kept out of 100B collected
    int ngram_order = 2;
    double smoothing_k = 1.0;
    std::optional<std::filesystem::path> corpus;
    std::optional<std::filesystem::path> reference;  // scorer seed corpus
};

struct PackConfig {
    std::size_t threshold = 4096;
};

struct MixtureConfig {
    std::size_t samples = 512;
    std::size_t search = 100000;
    std::size_t top_k = 32;
    double alpha = 1.0;
    double prune_epsilon = 1e-3;
    double heldout_fraction = 0.2;
    std::size_t max_heldout_chars = 20000;
};

struct SftConfig {
    MixRatio r1{1.0, 3.0};
    MixRatio r2{4.0, 1.0};
    std::size_t max_len = 16384;
    bool allow_replacement = false;
    std::string style = "default";
    std::map<std::string, Capability> extra_tasks;
    std::optional<std::filesystem::path> sns;
    std::optional<std::filesystem::path> general;
};

struct PrefConfig {
    double tau = 0.8;
    double beta = 0.1;
    double sft_loss_coef = 0.3;
    std::optional<std::filesystem::path> mc;
    std::optional<std::filesystem::path> pred_log;
    std::optional<std::filesystem::path> judged;
    std::optional<std::filesystem::path> calibration;
};

struct EvalTaskSpec {
    std::string task;
    std::string metric;
    std::filesystem::path pred;
    std::filesystem::path gold;
};

struct EvalConfig {
    std::vector<EvalTaskSpec> tasks;
};

/// Training hyperparameters emitted for downstream trainers.
struct RecipeConfig {
    std::size_t cpt_seq_len = 4096;
    std::size_t sft_seq_len = 16384;
    std::size_t po_seq_len = 4096;
    int cpt_epochs = 1;
    int sft_step1_epochs = 3;
    int sft_step2_epochs = 2;
    int po_epochs = 2;
    int sft_batch_size = 128;
    int po_batch_size = 64;
    double warmup_ratio = 0.1;
    double cpt_lr = 1e-5;
    double sft_lr = 3e-6;
    double po_lr = 1e-7;
    double adam_beta1 = 0.9;
    double adam_beta2 = 0.95;
    double adam_epsilon = 1e-8;
};

struct PipelineConfig {
    std::uint64_t seed = 7;
    FilterConfig filter;
    PackConfig pack;
    MixtureConfig mixture;
    SftConfig sft;
    PrefConfig pref;
    EvalConfig eval;
    RecipeConfig recipe;
};

// Each throws Error when a value is out of range.
void validate_filter(const FilterConfig& f);
void validate_pack(const PackConfig& p);
void validate_mixture(const MixtureConfig& m);
void validate_sft(const SftConfig& s);
void validate_pref(const PrefConfig& p);
void validate_recipe(const RecipeConfig& r);
void validate(const PipelineConfig& cfg);

/// Parses TOML text. Relative paths are resolved against `base_dir`. With
/// `check` unset only syntax and types are enforced, leaving range checks to
/// the stage that owns each section.
PipelineConfig parse_config(std::string_view toml_text, const std::filesystem::path& base_dir = {},
                            bool check = true);
PipelineConfig load_config(const std::filesystem::path& path, bool check = true);

ordered_json recipe_manifest(const PipelineConfig& cfg);

}  // namespace redforge
