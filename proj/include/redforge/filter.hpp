#pragma once

#include <map>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "redforge/config.hpp"
#include "redforge/types.hpp"

namespace redforge::filter {

enum class RuleHit { html, repetition, too_short, too_long };
std::string_view to_string(RuleHit h);

enum class Decision { keep, reject };

struct FilterVerdict {
    std::string doc_id;
    Decision decision = Decision::keep;
    std::vector<RuleHit> rule_hits;
    std::optional<double> quality_score;
    std::string reason;
};

/// 1 - unique/total over whitespace-normalized sentences. Sentences end at
/// any of . ! ? 。 ！ ？ or newline; empty sentences are ignored.
double repetition_ratio(std::string_view text);

/// True when the text contains something shaped like `<[a-zA-Z!/][^>]*>`.
bool contains_html_tag(std::string_view text);

/// Every rule that fires, in enum order. Verdict is reject iff any fired.
FilterVerdict apply_rule_filters(const Document& doc, const FilterConfig& cfg);

/// Anything that can rank documents by quality; higher is better.
class DocumentScorer {
public:
    virtual ~DocumentScorer() = default;
    virtual double score(const Document& doc) const = 0;
};

/// Character n-gram language model with add-k smoothing.
///
/// Histories are padded with order-1 begin markers, and every codepoint not
/// seen in training maps to a single unknown symbol that is part of the
/// vocabulary. That keeps every conditional probability strictly inside
/// (0, 1), so per-character perplexity is finite and greater than one.
class QualityScorer : public DocumentScorer {
public:
    QualityScorer(int order, double smoothing_k);

    int order() const { return order_; }
    double smoothing_k() const { return k_; }
    std::size_t vocab_size() const { return vocab_.size() + 1; }

    void add_text(std::string_view text);

    /// P(next | history) where history holds the previous order-1 symbols
    /// (already mapped, begin markers included).
    double probability(std::u32string_view history, char32_t next) const;

    /// Maps text to symbols; unseen codepoints collapse to kUnknown.
    std::u32string encode(std::string_view text) const;

    /// ln P(c_i | history) for every character of the text.
    std::vector<double> log_probs(std::string_view text) const;

    /// Mean natural-log cross-entropy per character. Throws on empty text.
    double cross_entropy(std::string_view text) const;
    double perplexity(std::string_view text) const;

    /// Negative per-character cross-entropy.
    double score(const Document& doc) const override;

    // Sentinels outside the Unicode range.
    static constexpr char32_t kBegin = 0x110000;
    static constexpr char32_t kUnknown = 0x110001;

private:
    int order_;
    double k_;
    std::unordered_set<char32_t> vocab_;
    std::unordered_map<std::u32string, std::uint64_t> ngram_counts_;    // history + next
    std::unordered_map<std::u32string, std::uint64_t> history_counts_;  // history only
};

/// Builds a scorer from the seed corpus. Counts are sums, so the result does
/// not depend on document order.
QualityScorer train_quality_scorer(std::span<const Document> seed_corpus, int order, double smoothing_k);

double quality_score(const DocumentScorer& scorer, const Document& doc);

struct FilterReport {
    std::size_t input_docs = 0;
    std::size_t input_tokens = 0;
    std::size_t kept_docs = 0;
    std::size_t kept_tokens = 0;
    double retention = 0.0;
    double retention_target = 0.0;
    std::optional<double> quality_cut;
    std::map<RuleHit, std::size_t> rule_hits;

    ordered_json to_json() const;
};

struct FilterResult {
    std::vector<Document> kept;
    std::vector<Document> rejected;
    std::vector<FilterVerdict> verdicts;  // input order
    FilterReport report;
};

/// Rule filters first; among survivors keep the best-scoring documents so
/// the kept-token total is as close as possible to retention_target times
/// the input-token total. Output streams preserve input order.
FilterResult run_filter(std::span<const Document> corpus, const FilterConfig& cfg, const DocumentScorer& scorer);

}  // namespace redforge::filter
