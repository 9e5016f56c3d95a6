#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "redforge/config.hpp"
#include "redforge/jsonl.hpp"
#include "redforge/types.hpp"

namespace redforge::sft {

/// Task name -> capability. Starts from the twelve built-in SNS tasks.
class TaskRegistry {
public:
    TaskRegistry();
    explicit TaskRegistry(const std::map<std::string, Capability>& extra);

    void add(std::string task, Capability cap);
    std::optional<Capability> capability_of(std::string_view task) const;
    const std::map<std::string, Capability, std::less<>>& tasks() const { return tasks_; }

private:
    std::map<std::string, Capability, std::less<>> tasks_;
};

enum class IssueCode {
    unknown_task,
    capability_mismatch,
    missing_options,
    too_few_options,
    answer_not_in_options,
    unexpected_options,
    empty_answer,
};

std::string_view to_string(IssueCode c);

struct ValidationIssue {
    IssueCode code;
    std::string message;
};

/// Empty result means the sample is valid.
std::vector<ValidationIssue> validate_task_sample(const TaskSample& s, const TaskRegistry& registry = {});

/// {instruction, input, output} record fed to trainers.
struct InstructionRecord {
    std::string instruction;
    std::string input;
    std::string output;

    bool operator==(const InstructionRecord&) const = default;
};

/// Known template ids: "default" and "minimal".
InstructionRecord render_sample(const TaskSample& s, std::string_view style = "default");

/// Inverse of render_sample for the answer: maps an output back to the
/// answer string (MC letters resolve through the options).
std::string recover_answer(const TaskSample& s, const InstructionRecord& r);

std::string option_label(std::size_t index);

/// One rendered training example with a stable id and its source pool.
struct SftExample {
    std::string id;
    Source source = Source::sns;
    InstructionRecord record;
};

struct DatasetManifest {
    std::vector<std::string> ids;  // SNS ids first, then sampled general ids
    std::size_t sns_count = 0;
    std::size_t general_count = 0;
};

struct TwoStepPlan {
    DatasetManifest step1;
    DatasetManifest step2;
    MixRatio r1;
    MixRatio r2;
};

/// Both steps contain every SNS id. Step one adds floor(|SNS| * g1 / s1)
/// general ids, step two floor(|SNS| * g2 / s2); each step samples the
/// general pool independently and without replacement unless allowed.
TwoStepPlan plan_two_step_mix(std::span<const std::string> sns_ids, std::span<const std::string> general_ids,
                              const MixRatio& r1, const MixRatio& r2, std::uint64_t seed,
                              bool allow_replacement = false);

ordered_json to_json(const TwoStepPlan& plan);

struct LabeledLength {
    std::size_t tokens = 0;
    std::string task;  // "general" for non-SNS records
    std::optional<Capability> capability;
    std::optional<std::string> primary_label;
    std::optional<std::string> secondary_label;
};

struct CorpusStats {
    std::size_t n_samples = 0;
    std::size_t median = 0;
    std::size_t p95 = 0;
    std::size_t max = 0;
    std::size_t max_len = 0;
    std::size_t clipped = 0;  // lengths above max_len
    std::map<std::string, std::size_t> per_capability;
    std::map<std::string, std::size_t> per_task;
    std::map<std::string, std::size_t> primary_labels;
    std::map<std::string, std::size_t> secondary_labels;
    std::vector<std::pair<std::size_t, std::size_t>> histogram;  // (bucket upper bound, count), powers of two

    ordered_json to_json() const;
};

/// Nearest-rank percentile: sorted[ceil(q * N) - 1]. Throws on empty input.
std::size_t nearest_rank(std::span<const std::size_t> sorted, double q);

CorpusStats corpus_stats(std::span<const LabeledLength> samples, std::size_t max_len = 16384);

/// Token length of a rendered record (instruction, input, output).
std::size_t rendered_length(const InstructionRecord& r);

/// Plain-text log-scale histogram of token lengths.
std::string render_histogram(const CorpusStats& stats, std::size_t width = 50);

}  // namespace redforge::sft

namespace redforge {

template <>
struct JsonCodec<sft::InstructionRecord> {
    static sft::InstructionRecord decode(const json& j);
    static ordered_json encode(const sft::InstructionRecord& r);
};

template <>
struct JsonCodec<sft::SftExample> {
    static sft::SftExample decode(const json& j);
    static ordered_json encode(const sft::SftExample& e);
};

}  // namespace redforge
