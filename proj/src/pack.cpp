#include "redforge/pack.hpp"

#include <algorithm>
#include <unordered_map>

#include "redforge/tokenizer.hpp"

namespace redforge::pack {

GroupingResult group_by_interaction(std::span<const Document> docs) {
    std::unordered_map<std::string_view, std::size_t> index;
    index.reserve(docs.size());
    for (std::size_t i = 0; i < docs.size(); ++i) index.emplace(docs[i].id, i);

    constexpr std::size_t kUnresolved = static_cast<std::size_t>(-1);
    constexpr std::size_t kOrphan = static_cast<std::size_t>(-2);
    constexpr std::size_t kVisiting = static_cast<std::size_t>(-3);
    std::vector<std::size_t> root(docs.size(), kUnresolved);

    auto parent_of = [&](std::size_t i) -> std::optional<std::string_view> {
        const auto& meta = docs[i].interactions;
        if (meta && meta->parent_id) return std::string_view(*meta->parent_id);
        return std::nullopt;
    };

    for (std::size_t i = 0; i < docs.size(); ++i) {
        std::vector<std::size_t> path;
        std::size_t cur = i;
        std::size_t resolved = kUnresolved;
        while (resolved == kUnresolved) {
            if (root[cur] == kVisiting) {
                resolved = kOrphan;  // cycle
                break;
            }
            if (root[cur] != kUnresolved) {
                resolved = root[cur];
                break;
            }
            const auto parent = parent_of(cur);
            if (!parent) {
                root[cur] = cur;
                resolved = cur;
                break;
            }
            root[cur] = kVisiting;
            path.push_back(cur);
            auto it = index.find(*parent);
            if (it == index.end()) {
                resolved = kOrphan;
                break;
            }
            cur = it->second;
        }
        for (auto p : path) root[p] = resolved;
    }

    GroupingResult out;
    std::unordered_map<std::size_t, std::size_t> group_of_root;
    std::vector<std::vector<std::size_t>> comments;
    for (std::size_t i = 0; i < docs.size(); ++i) {
        if (root[i] == i) {
            group_of_root.emplace(i, out.groups.size());
            out.groups.push_back({docs[i].id, {docs[i].id}, {}});
            comments.emplace_back();
        }
    }
    for (std::size_t i = 0; i < docs.size(); ++i) {
        if (root[i] == kOrphan) {
            out.orphans.push_back(docs[i]);
        } else if (root[i] != i) {
            comments[group_of_root.at(root[i])].push_back(i);
        }
    }
    for (std::size_t g = 0; g < out.groups.size(); ++g) {
        auto& members = comments[g];
        std::sort(members.begin(), members.end(), [&](std::size_t a, std::size_t b) {
            const auto la = docs[a].interactions->likes;
            const auto lb = docs[b].interactions->likes;
            if (la != lb) return la > lb;
            return docs[a].id < docs[b].id;
        });
        auto& group = out.groups[g];
        group.combined_text = docs[index.at(group.context_id)].text;
        for (auto m : members) {
            group.members.push_back(docs[m].id);
            group.combined_text += '\n';
            group.combined_text += docs[m].text;
        }
    }
    return out;
}

namespace {

bool is_terminator(char32_t cp) {
    return cp == U'.' || cp == U'!' || cp == U'?' || cp == 0x3002 || cp == 0xFF01 || cp == 0xFF1F;
}

char32_t last_codepoint(std::string_view text, std::size_t begin, std::size_t end) {
    std::size_t pos = end - 1;
    while (pos > begin && (static_cast<unsigned char>(text[pos]) & 0xC0) == 0x80) --pos;
    return decode_utf8(text, pos);
}

}  // namespace

std::vector<Segment> segment_text(const std::string& id, std::string_view text, std::size_t threshold) {
    if (threshold == 0) throw Error("segment threshold must be >= 1");
    std::vector<Segment> out;
    if (text.empty()) return out;
    const auto spans = token_spans(text);
    const std::size_t n = spans.size();

    // ends_sentence[j]: a sentence boundary follows token j.
    std::vector<char> ends_sentence(n, 0);
    for (std::size_t j = 0; j < n; ++j) {
        if (is_terminator(last_codepoint(text, spans[j].begin, spans[j].end))) {
            ends_sentence[j] = 1;
        } else if (j + 1 < n) {
            const auto gap = text.substr(spans[j].end, spans[j + 1].begin - spans[j].end);
            ends_sentence[j] = gap.find('\n') != std::string_view::npos;
        }
    }

    std::size_t cur = 0;
    std::size_t start_byte = 0;
    while (n - cur > threshold) {
        const std::size_t limit = cur + threshold;
        std::size_t cut = limit;
        for (std::size_t j = limit; j-- > cur;) {
            if (ends_sentence[j]) {
                cut = j + 1;
                break;
            }
        }
        const std::size_t cut_byte = spans[cut].begin;
        out.push_back({id, start_byte, cut_byte, cut - cur});
        start_byte = cut_byte;
        cur = cut;
    }
    out.push_back({id, start_byte, text.size(), n - cur});
    return out;
}

std::vector<Segment> segment_document(const Document& doc, std::size_t threshold) {
    return segment_text(doc.id, doc.text, threshold);
}

std::vector<PackedSequence> pack_segments(std::span<const Segment> segments, std::size_t threshold) {
    for (const auto& s : segments) {
        if (s.tokens > threshold)
            throw Error("segment of '" + s.doc_id + "' has " + std::to_string(s.tokens) +
                        " tokens, above the threshold " + std::to_string(threshold));
    }
    std::vector<std::size_t> order(segments.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return segments[a].tokens > segments[b].tokens; });

    // Max-tree over remaining capacity; unopened bins sit at full capacity, so
    // the leftmost fitting leaf is exactly the first-fit choice.
    std::size_t leaves = 1;
    while (leaves < std::max<std::size_t>(segments.size(), 1)) leaves <<= 1;
    std::vector<std::size_t> tree(2 * leaves, threshold);

    std::vector<PackedSequence> bins;
    for (auto idx : order) {
        const auto& seg = segments[idx];
        std::size_t node = 1;
        while (node < leaves) node = tree[2 * node] >= seg.tokens ? 2 * node : 2 * node + 1;
        const std::size_t bin = node - leaves;
        if (bin >= bins.size()) bins.resize(bin + 1);
        bins[bin].segments.push_back(seg);
        bins[bin].token_count += seg.tokens;
        tree[node] -= seg.tokens;
        for (node >>= 1; node >= 1; node >>= 1) tree[node] = std::max(tree[2 * node], tree[2 * node + 1]);
    }
    return bins;
}

ordered_json to_json(const PackedSequence& seq) {
    ordered_json segs = ordered_json::array();
    for (const auto& s : seq.segments) {
        ordered_json j;
        j["doc_id"] = s.doc_id;
        j["start"] = s.start;
        j["end"] = s.end;
        segs.push_back(std::move(j));
    }
    ordered_json j;
    j["segments"] = std::move(segs);
    j["token_count"] = seq.token_count;
    return j;
}

ordered_json to_json(const InteractionGroup& g) {
    ordered_json j;
    j["context_id"] = g.context_id;
    j["members"] = g.members;
    j["combined_text"] = g.combined_text;
    return j;
}

ordered_json PackReport::to_json() const {
    ordered_json j;
    j["input_docs"] = input_docs;
    j["groups"] = groups;
    j["orphans"] = orphans;
    j["segments"] = segments;
    j["sequences"] = sequences;
    j["tokens"] = tokens;
    j["threshold"] = threshold;
    j["fill_ratio"] = fill_ratio;
    return j;
}

PackResult pack_corpus(std::span<const Document> docs, std::size_t threshold) {
    PackResult out;
    out.grouping = group_by_interaction(docs);
    std::vector<Segment> segments;
    for (const auto& g : out.grouping.groups) {
        auto segs = segment_text(g.context_id, g.combined_text, threshold);
        segments.insert(segments.end(), segs.begin(), segs.end());
    }
    for (const auto& d : out.grouping.orphans) {
        auto segs = segment_document(d, threshold);
        segments.insert(segments.end(), segs.begin(), segs.end());
    }
    out.sequences = pack_segments(segments, threshold);

    auto& r = out.report;
    r.input_docs = docs.size();
    r.groups = out.grouping.groups.size();
    r.orphans = out.grouping.orphans.size();
    r.segments = segments.size();
    r.sequences = out.sequences.size();
    r.threshold = threshold;
    for (const auto& s : out.sequences) r.tokens += s.token_count;
    r.fill_ratio = r.sequences == 0 ? 0.0
                                    : static_cast<double>(r.tokens) /
                                          (static_cast<double>(r.sequences) * static_cast<double>(threshold));
    return out;
}

}  // namespace redforge::pack
