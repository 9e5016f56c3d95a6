#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace redforge {

/// Raised for contract violations and unrecoverable input problems.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

enum class Source { general, sns };

struct InteractionMeta {
    std::optional<std::string> parent_id;
    std::int64_t likes = 0;

    bool operator==(const InteractionMeta&) const = default;
};

struct Document {
    std::string id;
    Source source = Source::general;
    std::string domain;
    std::string text;
    std::optional<InteractionMeta> interactions;
    std::size_t token_count = 0;  // derived from text on construction/parse

    bool operator==(const Document&) const = default;
};

/// Builds a Document with token_count filled in.
Document make_document(std::string id, Source source, std::string domain, std::string text,
                       std::optional<InteractionMeta> interactions = std::nullopt);

enum class Capability {
    content_understanding,
    information_extraction,
    semantic_matching,
    user_behavior_modeling,
    dialogue,
    translation,
};

enum class TaskFormat { multiple_choice, extraction, generation };

struct TaskSample {
    std::string task;
    Capability capability = Capability::content_understanding;
    TaskFormat format = TaskFormat::generation;
    std::string prompt;
    std::optional<std::vector<std::string>> options;
    std::string answer;
    // Category labels from an external labeling model, when present.
    std::optional<std::string> primary_label;
    std::optional<std::string> secondary_label;

    bool operator==(const TaskSample&) const = default;
};

enum class PairStrategy { judge, ordinal, error };

struct PreferencePair {
    std::string prompt;
    std::string chosen;
    std::string rejected;
    PairStrategy strategy = PairStrategy::ordinal;
    std::string source_id;

    bool operator==(const PreferencePair&) const = default;
};

std::string_view to_string(Source s);
std::string_view to_string(Capability c);
std::string_view to_string(TaskFormat f);
std::string_view to_string(PairStrategy s);

// Parsers throw Error on unknown values.
Source parse_source(std::string_view s);
Capability parse_capability(std::string_view s);
TaskFormat parse_format(std::string_view s);
PairStrategy parse_strategy(std::string_view s);

inline constexpr Capability kAllCapabilities[] = {
    Capability::content_understanding, Capability::information_extraction,
    Capability::semantic_matching,     Capability::user_behavior_modeling,
    Capability::dialogue,              Capability::translation,
};

}  // namespace redforge
