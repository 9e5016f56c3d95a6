#pragma once

#include <span>
#include <string>
#include <vector>

#include "redforge/jsonl.hpp"
#include "redforge/types.hpp"

namespace redforge::pack {

struct InteractionGroup {
    std::string context_id;
    std::vector<std::string> members;  // context first, then comments
    std::string combined_text;         // member texts joined by "\n"
};

struct GroupingResult {
    std::vector<InteractionGroup> groups;
    std::vector<Document> orphans;
};

/// Attaches every comment to the root context it (transitively) replies to.
/// Comments are ordered by likes descending, then id ascending. A comment
/// whose parent chain dangles or loops goes to the orphan bucket. Groups are
/// emitted in order of their context's position in the input.
GroupingResult group_by_interaction(std::span<const Document> docs);

/// A byte range [start, end) of one source text.
struct Segment {
    std::string doc_id;
    std::size_t start = 0;
    std::size_t end = 0;
    std::size_t tokens = 0;

    bool operator==(const Segment&) const = default;
};

/// Splits text into consecutive ranges of at most `threshold` tokens. A cut
/// goes after the last sentence-ending token that still fits; without one the
/// range is cut hard after `threshold` tokens. Whitespace between tokens
/// stays with the preceding range, so the ranges tile the text exactly.
std::vector<Segment> segment_text(const std::string& id, std::string_view text, std::size_t threshold);

std::vector<Segment> segment_document(const Document& doc, std::size_t threshold);

struct PackedSequence {
    std::vector<Segment> segments;
    std::size_t token_count = 0;
};

/// First-fit-decreasing bin packing. Ties in size keep input order.
/// Throws Error when a segment exceeds the threshold.
std::vector<PackedSequence> pack_segments(std::span<const Segment> segments, std::size_t threshold);

ordered_json to_json(const PackedSequence& seq);
ordered_json to_json(const InteractionGroup& g);

struct PackReport {
    std::size_t input_docs = 0;
    std::size_t groups = 0;
    std::size_t orphans = 0;
    std::size_t segments = 0;
    std::size_t sequences = 0;
    std::size_t tokens = 0;
    std::size_t threshold = 0;
    double fill_ratio = 0.0;  // tokens / (sequences * threshold)

    ordered_json to_json() const;
};

struct PackResult {
    GroupingResult grouping;
    std::vector<PackedSequence> sequences;
    PackReport report;
};

/// Group, segment each group's combined text, then pack. Orphans are
/// segmented as standalone documents.
PackResult pack_corpus(std::span<const Document> docs, std::size_t threshold);

}  // namespace redforge::pack
