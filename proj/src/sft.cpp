#include "redforge/sft.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "redforge/rng.hpp"
#include "redforge/tokenizer.hpp"

namespace redforge::sft {

TaskRegistry::TaskRegistry() {
    using C = Capability;
    tasks_ = {
        {"Note Taxonomy", C::content_understanding},
        {"Query Classification", C::content_understanding},
        {"Query Intent Recognition", C::content_understanding},
        {"Hashtag Prediction", C::information_extraction},
        {"Machine Reading Comprehension", C::information_extraction},
        {"Highlight Word Detection", C::information_extraction},
        {"Query-Note Relevance", C::semantic_matching},
        {"Query-Note Retrieval", C::semantic_matching},
        {"Post-View Search", C::user_behavior_modeling},
        {"Emotional Companion Dialogue", C::dialogue},
        {"Role-playing Dialogue", C::dialogue},
        {"SNS Domain Translation", C::translation},
    };
}

TaskRegistry::TaskRegistry(const std::map<std::string, Capability>& extra) : TaskRegistry() {
    for (const auto& [task, cap] : extra) add(task, cap);
}

void TaskRegistry::add(std::string task, Capability cap) { tasks_[std::move(task)] = cap; }

std::optional<Capability> TaskRegistry::capability_of(std::string_view task) const {
    auto it = tasks_.find(task);
    if (it == tasks_.end()) return std::nullopt;
    return it->second;
}

std::string_view to_string(IssueCode c) {
    switch (c) {
        case IssueCode::unknown_task: return "unknown_task";
        case IssueCode::capability_mismatch: return "capability_mismatch";
        case IssueCode::missing_options: return "missing_options";
        case IssueCode::too_few_options: return "too_few_options";
        case IssueCode::answer_not_in_options: return "answer_not_in_options";
        case IssueCode::unexpected_options: return "unexpected_options";
        case IssueCode::empty_answer: return "empty_answer";
    }
    return "";
}

std::vector<ValidationIssue> validate_task_sample(const TaskSample& s, const TaskRegistry& registry) {
    std::vector<ValidationIssue> issues;
    if (auto cap = registry.capability_of(s.task)) {
        if (*cap != s.capability)
            issues.push_back({IssueCode::capability_mismatch, "task '" + s.task + "' belongs to " +
                                                                  std::string(to_string(*cap)) + ", not " +
                                                                  std::string(to_string(s.capability))});
    } else {
        issues.push_back({IssueCode::unknown_task, "unknown task '" + s.task + "'"});
    }
    if (s.format == TaskFormat::multiple_choice) {
        if (!s.options) {
            issues.push_back({IssueCode::missing_options, "multiple_choice sample has no options"});
        } else {
            if (s.options->size() < 2)
                issues.push_back({IssueCode::too_few_options, "multiple_choice needs at least 2 options"});
            if (std::find(s.options->begin(), s.options->end(), s.answer) == s.options->end())
                issues.push_back({IssueCode::answer_not_in_options, "answer is not one of the options"});
        }
    } else if (s.options) {
        issues.push_back({IssueCode::unexpected_options, "options are only allowed for multiple_choice"});
    }
    if (s.answer.empty()) issues.push_back({IssueCode::empty_answer, "answer is empty"});
    return issues;
}

std::string option_label(std::size_t index) {
    if (index >= 26) throw Error("more than 26 options cannot be labeled");
    return std::string(1, static_cast<char>('A' + index));
}

InstructionRecord render_sample(const TaskSample& s, std::string_view style) {
    const bool minimal = style == "minimal";
    if (!minimal && style != "default") throw Error("unknown template style '" + std::string(style) + "'");
    if (s.answer.empty()) throw Error("cannot render a sample with an empty answer");

    InstructionRecord r;
    switch (s.format) {
        case TaskFormat::multiple_choice: {
            if (!s.options || s.options->size() < 2) throw Error("multiple_choice sample needs options");
            if (s.options->size() > 26) throw Error("more than 26 options cannot be labeled");
            const auto it = std::find(s.options->begin(), s.options->end(), s.answer);
            if (it == s.options->end()) throw Error("answer is not one of the options");
            r.instruction = minimal ? s.task
                                    : "[" + s.task + "] Choose the correct option and reply with its letter only.";
            r.input = s.prompt + "\n";
            for (std::size_t i = 0; i < s.options->size(); ++i)
                r.input += "\n" + option_label(i) + ". " + (*s.options)[i];
            r.output = option_label(static_cast<std::size_t>(it - s.options->begin()));
            break;
        }
        case TaskFormat::extraction:
            r.instruction = minimal ? s.task : "[" + s.task + "] Extract the answer from the input and reply with the exact span.";
            r.input = s.prompt;
            r.output = s.answer;
            break;
        case TaskFormat::generation:
            r.instruction = minimal ? s.task : "[" + s.task + "] Write a response to the input.";
            r.input = s.prompt;
            r.output = s.answer;
            break;
    }
    return r;
}

std::string recover_answer(const TaskSample& s, const InstructionRecord& r) {
    if (s.format != TaskFormat::multiple_choice) return r.output;
    if (r.output.size() != 1 || r.output[0] < 'A' || r.output[0] > 'Z') throw Error("output is not an option letter");
    const auto idx = static_cast<std::size_t>(r.output[0] - 'A');
    if (!s.options || idx >= s.options->size()) throw Error("option letter out of range");
    return (*s.options)[idx];
}

namespace {

std::vector<std::string> sample_general(std::span<const std::string> pool, std::size_t count, std::uint64_t seed,
                                        bool allow_replacement) {
    std::vector<std::string> out;
    if (count == 0) return out;
    Rng rng(seed);
    if (count > pool.size()) {
        if (!allow_replacement || pool.empty())
            throw Error("general pool has " + std::to_string(pool.size()) + " samples but the plan needs " +
                        std::to_string(count));
        std::vector<std::size_t> picks(count);
        for (auto& p : picks) p = static_cast<std::size_t>(uniform_below(rng, pool.size()));
        std::sort(picks.begin(), picks.end());
        for (auto p : picks) out.push_back(pool[p]);
        return out;
    }
    std::vector<std::size_t> idx(pool.size());
    std::iota(idx.begin(), idx.end(), 0);
    for (std::size_t i = 0; i < count; ++i) {
        const auto j = i + static_cast<std::size_t>(uniform_below(rng, idx.size() - i));
        std::swap(idx[i], idx[j]);
    }
    idx.resize(count);
    std::sort(idx.begin(), idx.end());
    for (auto p : idx) out.push_back(pool[p]);
    return out;
}

DatasetManifest build_step(std::span<const std::string> sns_ids, std::span<const std::string> general_ids,
                           const MixRatio& r, std::uint64_t seed, bool allow_replacement) {
    DatasetManifest m;
    m.ids.assign(sns_ids.begin(), sns_ids.end());
    m.sns_count = sns_ids.size();
    const auto want = static_cast<std::size_t>(
        std::floor(static_cast<double>(sns_ids.size()) * r.general / r.sns + 1e-9));
    auto general = sample_general(general_ids, want, seed, allow_replacement);
    m.general_count = general.size();
    m.ids.insert(m.ids.end(), general.begin(), general.end());
    return m;
}

}  // namespace

TwoStepPlan plan_two_step_mix(std::span<const std::string> sns_ids, std::span<const std::string> general_ids,
                              const MixRatio& r1, const MixRatio& r2, std::uint64_t seed, bool allow_replacement) {
    for (const auto* r : {&r1, &r2}) {
        if (!(r->sns > 0) || !(r->general >= 0) || !std::isfinite(r->sns) || !std::isfinite(r->general))
            throw Error("mix ratios need a positive sns part and a non-negative general part");
    }
    if (!(r2.sns_share() > r1.sns_share()))
        throw Error("step two must use a strictly higher sns share than step one (" + format_ratio(r1) + " vs " +
                    format_ratio(r2) + ")");
    TwoStepPlan plan;
    plan.r1 = r1;
    plan.r2 = r2;
    plan.step1 = build_step(sns_ids, general_ids, r1, stage_seed(seed, "sft.step1"), allow_replacement);
    plan.step2 = build_step(sns_ids, general_ids, r2, stage_seed(seed, "sft.step2"), allow_replacement);
    return plan;
}

ordered_json to_json(const TwoStepPlan& plan) {
    auto step = [](const DatasetManifest& m, const MixRatio& r) {
        ordered_json j;
        j["ratio"] = format_ratio(r);
        j["sns_count"] = m.sns_count;
        j["general_count"] = m.general_count;
        j["ids"] = m.ids;
        return j;
    };
    ordered_json j;
    j["step1"] = step(plan.step1, plan.r1);
    j["step2"] = step(plan.step2, plan.r2);
    return j;
}

std::size_t nearest_rank(std::span<const std::size_t> sorted, double q) {
    if (sorted.empty()) throw Error("percentile of an empty sample");
    if (!(q > 0 && q <= 1)) throw Error("percentile must be in (0, 1]");
    // Guard against q * N landing a hair above an integer (0.95 * 100).
    auto rank = static_cast<std::size_t>(std::ceil(q * static_cast<double>(sorted.size()) - 1e-9));
    rank = std::clamp<std::size_t>(rank, 1, sorted.size());
    return sorted[rank - 1];
}

std::size_t rendered_length(const InstructionRecord& r) {
    return count_tokens(r.instruction) + count_tokens(r.input) + count_tokens(r.output);
}

CorpusStats corpus_stats(std::span<const LabeledLength> samples, std::size_t max_len) {
    if (samples.empty()) throw Error("cannot compute statistics of an empty sample set");
    CorpusStats st;
    st.n_samples = samples.size();
    st.max_len = max_len;
    std::vector<std::size_t> lengths;
    lengths.reserve(samples.size());
    for (const auto& s : samples) {
        lengths.push_back(s.tokens);
        if (s.tokens > max_len) ++st.clipped;
        ++st.per_task[s.task];
        ++st.per_capability[s.capability ? std::string(to_string(*s.capability)) : "general"];
        if (s.primary_label) ++st.primary_labels[*s.primary_label];
        if (s.secondary_label) ++st.secondary_labels[*s.secondary_label];
    }
    std::sort(lengths.begin(), lengths.end());
    st.median = nearest_rank(lengths, 0.5);
    st.p95 = nearest_rank(lengths, 0.95);
    st.max = lengths.back();

    std::size_t bound = 1;
    std::size_t i = 0;
    while (i < lengths.size()) {
        std::size_t count = 0;
        while (i < lengths.size() && lengths[i] <= bound) {
            ++count;
            ++i;
        }
        st.histogram.emplace_back(bound, count);
        bound *= 2;
    }
    return st;
}

ordered_json CorpusStats::to_json() const {
    ordered_json j;
    j["n_samples"] = n_samples;
    j["median"] = median;
    j["p95"] = p95;
    j["max"] = max;
    j["max_len"] = max_len;
    j["clipped"] = clipped;
    j["per_capability"] = per_capability;
    j["per_task"] = per_task;
    j["primary_labels"] = primary_labels;
    j["secondary_labels"] = secondary_labels;
    ordered_json hist = ordered_json::array();
    for (const auto& [b, c] : histogram) hist.push_back({{"le", b}, {"count", c}});
    j["histogram"] = std::move(hist);
    return j;
}

std::string render_histogram(const CorpusStats& stats, std::size_t width) {
    std::ostringstream out;
    double max_log = 0;
    for (const auto& [b, c] : stats.histogram) max_log = std::max(max_log, std::log10(1.0 + static_cast<double>(c)));
    std::size_t lower = 0;
    for (const auto& [b, c] : stats.histogram) {
        const auto bar = max_log <= 0 ? 0
                                      : static_cast<std::size_t>(std::round(
                                            std::log10(1.0 + static_cast<double>(c)) / max_log * static_cast<double>(width)));
        std::ostringstream label;
        label << lower << '-' << b;
        out << label.str() << std::string(label.str().size() < 14 ? 14 - label.str().size() : 1, ' ') << '|'
            << std::string(bar, '#') << ' ' << c << '\n';
        lower = b + 1;
    }
    out << "median " << stats.median << " tokens, p95 " << stats.p95 << " tokens, max " << stats.max << " tokens\n";
    return out.str();
}

}  // namespace redforge::sft

namespace redforge {

sft::InstructionRecord JsonCodec<sft::InstructionRecord>::decode(const json& j) {
    sft::InstructionRecord r;
    r.instruction = jsonf::string_field(j, "instruction");
    r.input = j.contains("input") && !j["input"].is_null() ? jsonf::string_field(j, "input") : std::string();
    r.output = jsonf::string_field(j, "output");
    return r;
}

ordered_json JsonCodec<sft::InstructionRecord>::encode(const sft::InstructionRecord& r) {
    ordered_json j;
    j["instruction"] = r.instruction;
    j["input"] = r.input;
    j["output"] = r.output;
    return j;
}

sft::SftExample JsonCodec<sft::SftExample>::decode(const json& j) {
    sft::SftExample e;
    e.id = jsonf::string_field(j, "id");
    e.source = parse_source(jsonf::string_field(j, "source"));
    e.record = JsonCodec<sft::InstructionRecord>::decode(j);
    return e;
}

ordered_json JsonCodec<sft::SftExample>::encode(const sft::SftExample& e) {
    ordered_json j;
    j["id"] = e.id;
    j["source"] = to_string(e.source);
    j["instruction"] = e.record.instruction;
    j["input"] = e.record.input;
    j["output"] = e.record.output;
    return j;
}

}  // namespace redforge
