#include "redforge/filter.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <unordered_set>

#include "redforge/parallel.hpp"
#include "redforge/tokenizer.hpp"

namespace redforge::filter {

std::string_view to_string(RuleHit h) {
    switch (h) {
        case RuleHit::html: return "html";
        case RuleHit::repetition: return "repetition";
        case RuleHit::too_short: return "too_short";
        case RuleHit::too_long: return "too_long";
    }
    return "";
}

namespace {

bool is_sentence_end(char32_t cp) {
    return cp == U'.' || cp == U'!' || cp == U'?' || cp == U'\n' || cp == 0x3002 || cp == 0xFF01 || cp == 0xFF1F;
}

bool is_ascii_alpha(char c) { return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z'); }

}  // namespace

double repetition_ratio(std::string_view text) {
    std::unordered_set<std::string> unique;
    std::size_t total = 0;
    std::size_t pos = 0;
    std::size_t sentence_begin = 0;
    auto flush = [&](std::size_t end) {
        std::string s = normalize_whitespace(text.substr(sentence_begin, end - sentence_begin));
        if (!s.empty()) {
            ++total;
            unique.insert(std::move(s));
        }
    };
    while (pos < text.size()) {
        const std::size_t start = pos;
        if (is_sentence_end(decode_utf8(text, pos))) {
            flush(start);
            sentence_begin = pos;
        }
    }
    flush(text.size());
    if (total == 0) return 0.0;
    return 1.0 - static_cast<double>(unique.size()) / static_cast<double>(total);
}

bool contains_html_tag(std::string_view text) {
    for (std::size_t i = 0; i + 2 < text.size(); ++i) {
        if (text[i] != '<') continue;
        const char c = text[i + 1];
        if (!(is_ascii_alpha(c) || c == '!' || c == '/')) continue;
        // [^>]* always matches, so a closing '>' anywhere later completes a tag.
        if (text.find('>', i + 2) != std::string_view::npos) return true;
        return false;
    }
    return false;
}

FilterVerdict apply_rule_filters(const Document& doc, const FilterConfig& cfg) {
    FilterVerdict v;
    v.doc_id = doc.id;
    if (contains_html_tag(doc.text)) v.rule_hits.push_back(RuleHit::html);
    if (repetition_ratio(doc.text) > cfg.repetition_threshold) v.rule_hits.push_back(RuleHit::repetition);
    if (doc.token_count < cfg.min_tokens) v.rule_hits.push_back(RuleHit::too_short);
    if (doc.token_count > cfg.max_tokens) v.rule_hits.push_back(RuleHit::too_long);
    if (v.rule_hits.empty()) {
        v.decision = Decision::keep;
    } else {
        v.decision = Decision::reject;
        v.reason = "rule:";
        for (std::size_t i = 0; i < v.rule_hits.size(); ++i) {
            if (i) v.reason += ',';
            v.reason += to_string(v.rule_hits[i]);
        }
    }
    return v;
}

QualityScorer::QualityScorer(int order, double smoothing_k) : order_(order), k_(smoothing_k) {
    if (order < 1) throw Error("n-gram order must be >= 1");
    if (!(smoothing_k > 0) || !std::isfinite(smoothing_k)) throw Error("smoothing_k must be positive");
}

void QualityScorer::add_text(std::string_view text) {
    const auto cps = to_codepoints(text);
    vocab_.insert(cps.begin(), cps.end());
    const std::size_t h = static_cast<std::size_t>(order_ - 1);
    std::u32string padded(h, kBegin);
    padded.append(cps.begin(), cps.end());
    for (std::size_t i = h; i < padded.size(); ++i) {
        std::u32string gram = padded.substr(i - h, h + 1);
        ++ngram_counts_[gram];
        gram.pop_back();
        ++history_counts_[gram];
    }
}

std::u32string QualityScorer::encode(std::string_view text) const {
    std::u32string out;
    std::size_t pos = 0;
    while (pos < text.size()) {
        const char32_t cp = decode_utf8(text, pos);
        out.push_back(vocab_.count(cp) ? cp : kUnknown);
    }
    return out;
}

double QualityScorer::probability(std::u32string_view history, char32_t next) const {
    std::u32string key(history);
    const auto hit = history_counts_.find(key);
    const double h_count = hit == history_counts_.end() ? 0.0 : static_cast<double>(hit->second);
    key.push_back(next);
    const auto nit = ngram_counts_.find(key);
    const double n_count = nit == ngram_counts_.end() ? 0.0 : static_cast<double>(nit->second);
    return (n_count + k_) / (h_count + k_ * static_cast<double>(vocab_size()));
}

std::vector<double> QualityScorer::log_probs(std::string_view text) const {
    const std::size_t h = static_cast<std::size_t>(order_ - 1);
    std::u32string padded(h, kBegin);
    padded += encode(text);
    std::vector<double> out;
    out.reserve(padded.size() - h);
    const std::u32string_view view(padded);
    for (std::size_t i = h; i < padded.size(); ++i)
        out.push_back(std::log(probability(view.substr(i - h, h), padded[i])));
    return out;
}

double QualityScorer::cross_entropy(std::string_view text) const {
    if (text.empty()) throw Error("cannot score empty text");
    const auto lp = log_probs(text);
    const double sum = std::accumulate(lp.begin(), lp.end(), 0.0);
    return -sum / static_cast<double>(lp.size());
}

double QualityScorer::perplexity(std::string_view text) const { return std::exp(cross_entropy(text)); }

double QualityScorer::score(const Document& doc) const { return -cross_entropy(doc.text); }

QualityScorer train_quality_scorer(std::span<const Document> seed_corpus, int order, double smoothing_k) {
    if (seed_corpus.empty()) throw Error("quality scorer needs a non-empty seed corpus");
    QualityScorer scorer(order, smoothing_k);
    for (const auto& d : seed_corpus) scorer.add_text(d.text);
    return scorer;
}

double quality_score(const DocumentScorer& scorer, const Document& doc) {
    if (doc.text.empty()) throw Error("cannot score document '" + doc.id + "' with empty text");
    return scorer.score(doc);
}

ordered_json FilterReport::to_json() const {
    ordered_json j;
    j["input_docs"] = input_docs;
    j["input_tokens"] = input_tokens;
    j["kept_docs"] = kept_docs;
    j["kept_tokens"] = kept_tokens;
    j["retention"] = retention;
    ordered_json hits;
    for (auto h : {RuleHit::html, RuleHit::repetition, RuleHit::too_short, RuleHit::too_long}) {
        auto it = rule_hits.find(h);
        hits[std::string(to_string(h))] = it == rule_hits.end() ? 0 : it->second;
    }
    j["rule_hits"] = std::move(hits);
    j["retention_target"] = retention_target;
    j["quality_cut"] = quality_cut ? ordered_json(*quality_cut) : ordered_json(nullptr);
    return j;
}

FilterResult run_filter(std::span<const Document> corpus, const FilterConfig& cfg, const DocumentScorer& scorer) {
    if (!(cfg.retention_target > 0 && cfg.retention_target <= 1))
        throw Error("retention_target must be in (0, 1]");
    if (cfg.min_tokens == 0) throw Error("min_tokens must be positive");

    FilterResult out;
    auto& report = out.report;
    report.retention_target = cfg.retention_target;
    for (auto h : {RuleHit::html, RuleHit::repetition, RuleHit::too_short, RuleHit::too_long}) report.rule_hits[h] = 0;

    out.verdicts = parallel_map<FilterVerdict>(corpus.size(),
                                               [&](std::size_t i) { return apply_rule_filters(corpus[i], cfg); });

    std::vector<std::size_t> survivors;
    for (std::size_t i = 0; i < corpus.size(); ++i) {
        report.input_tokens += corpus[i].token_count;
        for (auto h : out.verdicts[i].rule_hits) ++report.rule_hits[h];
        if (out.verdicts[i].decision == Decision::keep) survivors.push_back(i);
    }
    report.input_docs = corpus.size();

    const auto scores = parallel_map<double>(survivors.size(), [&](std::size_t s) {
        return quality_score(scorer, corpus[survivors[s]]);
    });
    for (std::size_t s = 0; s < survivors.size(); ++s) out.verdicts[survivors[s]].quality_score = scores[s];

    std::vector<std::size_t> ranked(survivors.size());
    std::iota(ranked.begin(), ranked.end(), 0);
    std::stable_sort(ranked.begin(), ranked.end(),
                     [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });

    // Choose the ranked prefix whose token total lands nearest the target.
    const double target = cfg.retention_target * static_cast<double>(report.input_tokens);
    std::size_t best_len = 0;
    double best_gap = target;
    double prefix = 0;
    for (std::size_t m = 1; m <= ranked.size(); ++m) {
        prefix += static_cast<double>(corpus[survivors[ranked[m - 1]]].token_count);
        const double gap = std::abs(prefix - target);
        if (gap <= best_gap) {
            best_gap = gap;
            best_len = m;
        }
        if (prefix > target && gap > best_gap) break;
    }
    if (best_len > 0 && best_len < ranked.size()) report.quality_cut = scores[ranked[best_len - 1]];

    std::vector<bool> keep(corpus.size(), false);
    for (std::size_t m = 0; m < best_len; ++m) keep[survivors[ranked[m]]] = true;
    for (std::size_t m = best_len; m < ranked.size(); ++m) {
        auto& v = out.verdicts[survivors[ranked[m]]];
        v.decision = Decision::reject;
        v.reason = "quality below cut";
    }

    for (std::size_t i = 0; i < corpus.size(); ++i) {
        if (keep[i]) {
            out.kept.push_back(corpus[i]);
            ++report.kept_docs;
            report.kept_tokens += corpus[i].token_count;
        } else {
            out.rejected.push_back(corpus[i]);
        }
    }
    report.retention = report.input_tokens == 0
                           ? 0.0
                           : static_cast<double>(report.kept_tokens) / static_cast<double>(report.input_tokens);
    return out;
}

}  // namespace redforge::filter
