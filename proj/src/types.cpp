#include "redforge/types.hpp"

#include "redforge/tokenizer.hpp"

namespace redforge {

Document make_document(std::string id, Source source, std::string domain, std::string text,
                       std::optional<InteractionMeta> interactions) {
    Document d;
    d.id = std::move(id);
    d.source = source;
    d.domain = std::move(domain);
    d.text = std::move(text);
    d.interactions = std::move(interactions);
    d.token_count = count_tokens(d.text);
    return d;
}

std::string_view to_string(Source s) {
    return s == Source::sns ? "sns" : "general";
}

std::string_view to_string(Capability c) {
    switch (c) {
        case Capability::content_understanding: return "content_understanding";
        case Capability::information_extraction: return "information_extraction";
        case Capability::semantic_matching: return "semantic_matching";
        case Capability::user_behavior_modeling: return "user_behavior_modeling";
        case Capability::dialogue: return "dialogue";
        case Capability::translation: return "translation";
    }
    return "";
}

std::string_view to_string(TaskFormat f) {
    switch (f) {
        case TaskFormat::multiple_choice: return "multiple_choice";
        case TaskFormat::extraction: return "extraction";
        case TaskFormat::generation: return "generation";
    }
    return "";
}

std::string_view to_string(PairStrategy s) {
    switch (s) {
        case PairStrategy::judge: return "judge";
        case PairStrategy::ordinal: return "ordinal";
        case PairStrategy::error: return "error";
    }
    return "";
}

Source parse_source(std::string_view s) {
    if (s == "general") return Source::general;
    if (s == "sns") return Source::sns;
    throw Error("unknown source '" + std::string(s) + "'");
}

Capability parse_capability(std::string_view s) {
    for (auto c : kAllCapabilities)
        if (to_string(c) == s) return c;
    throw Error("unknown capability '" + std::string(s) + "'");
}

TaskFormat parse_format(std::string_view s) {
    if (s == "multiple_choice") return TaskFormat::multiple_choice;
    if (s == "extraction") return TaskFormat::extraction;
    if (s == "generation") return TaskFormat::generation;
    throw Error("unknown format '" + std::string(s) + "'");
}

PairStrategy parse_strategy(std::string_view s) {
    if (s == "judge") return PairStrategy::judge;
    if (s == "ordinal") return PairStrategy::ordinal;
    if (s == "error") return PairStrategy::error;
    throw Error("unknown strategy '" + std::string(s) + "'");
}

}  // namespace redforge
