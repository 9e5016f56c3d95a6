#include "redforge/eval.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <map>
#include <set>
#include <sstream>

#include "redforge/tokenizer.hpp"

namespace redforge::eval {

std::string_view to_string(Metric m) {
    switch (m) {
        case Metric::accuracy: return "accuracy";
        case Metric::span_f1: return "span_f1";
        case Metric::bleu: return "bleu";
        case Metric::chrf_pp: return "chrf_pp";
    }
    return "";
}

Metric parse_metric(std::string_view s) {
    for (auto m : {Metric::accuracy, Metric::span_f1, Metric::bleu, Metric::chrf_pp})
        if (to_string(m) == s) return m;
    throw Error("unknown metric '" + std::string(s) + "'");
}

double mc_accuracy(std::span<const std::string> preds, std::span<const std::string> golds) {
    if (preds.size() != golds.size()) throw Error("prediction and gold lists differ in length");
    if (preds.empty()) throw Error("accuracy of an empty list");
    std::size_t hit = 0;
    for (std::size_t i = 0; i < preds.size(); ++i) hit += normalize_whitespace(preds[i]) == normalize_whitespace(golds[i]);
    return 100.0 * static_cast<double>(hit) / static_cast<double>(preds.size());
}

double span_f1(std::string_view pred, std::string_view gold) {
    const auto p = tokenize(pred);
    const auto g = tokenize(gold);
    if (p.empty() && g.empty()) return 100.0;
    if (p.empty() || g.empty()) return 0.0;
    std::map<std::string, std::size_t> gold_counts;
    for (const auto& t : g) ++gold_counts[t];
    std::size_t overlap = 0;
    for (const auto& t : p) {
        auto it = gold_counts.find(t);
        if (it != gold_counts.end() && it->second > 0) {
            --it->second;
            ++overlap;
        }
    }
    // 2PR/(P+R) reduces to this form, which is exactly symmetric.
    return 200.0 * static_cast<double>(overlap) / static_cast<double>(p.size() + g.size());
}

namespace {

template <class Seq>
std::map<Seq, std::size_t> ngram_counts(const std::vector<typename Seq::value_type>& items, std::size_t n) {
    std::map<Seq, std::size_t> out;
    if (items.size() < n) return out;
    for (std::size_t i = 0; i + n <= items.size(); ++i) ++out[Seq(items.begin() + static_cast<std::ptrdiff_t>(i),
                                                                  items.begin() + static_cast<std::ptrdiff_t>(i + n))];
    return out;
}

template <class Seq>
std::size_t total(const std::map<Seq, std::size_t>& m) {
    std::size_t t = 0;
    for (const auto& [k, v] : m) t += v;
    return t;
}

template <class Seq>
std::size_t clipped_matches(const std::map<Seq, std::size_t>& hyp, const std::map<Seq, std::size_t>& ref) {
    std::size_t m = 0;
    for (const auto& [k, v] : hyp) {
        auto it = ref.find(k);
        if (it != ref.end()) m += std::min(v, it->second);
    }
    return m;
}

}  // namespace

double bleu(std::span<const std::string> hyps, std::span<const std::string> refs) {
    if (hyps.size() != refs.size()) throw Error("hypothesis and reference lists differ in length");
    if (hyps.empty()) throw Error("BLEU of an empty corpus");
    constexpr std::size_t kMaxOrder = 4;
    std::size_t match[kMaxOrder] = {};
    std::size_t hyp_total[kMaxOrder] = {};
    std::size_t ref_total[kMaxOrder] = {};
    std::size_t hyp_len = 0;
    std::size_t ref_len = 0;
    using Gram = std::vector<std::string>;
    for (std::size_t i = 0; i < hyps.size(); ++i) {
        const auto h = tokenize(hyps[i]);
        const auto r = tokenize(refs[i]);
        hyp_len += h.size();
        ref_len += r.size();
        for (std::size_t n = 1; n <= kMaxOrder; ++n) {
            const auto hc = ngram_counts<Gram>(h, n);
            const auto rc = ngram_counts<Gram>(r, n);
            match[n - 1] += clipped_matches(hc, rc);
            hyp_total[n - 1] += total(hc);
            ref_total[n - 1] += total(rc);
        }
    }
    if (hyp_len == 0) return ref_len == 0 ? 100.0 : 0.0;
    double log_sum = 0;
    std::size_t orders = 0;
    for (std::size_t n = 0; n < kMaxOrder; ++n) {
        if (hyp_total[n] == 0 && ref_total[n] == 0) continue;
        const double num = match[n] > 0 ? static_cast<double>(match[n]) : kBleuFloor;
        const double den = static_cast<double>(std::max<std::size_t>(hyp_total[n], 1));
        log_sum += std::log(num / den);
        ++orders;
    }
    const double precision = orders == 0 ? 1.0 : std::exp(log_sum / static_cast<double>(orders));
    const double bp = hyp_len < ref_len ? std::exp(1.0 - static_cast<double>(ref_len) / static_cast<double>(hyp_len)) : 1.0;
    return std::clamp(100.0 * bp * precision, 0.0, 100.0);
}

double chrf_pp(std::string_view hyp, std::string_view ref) {
    constexpr double kBeta2 = 4.0;  // beta = 2
    auto strip = [](std::string_view s) {
        std::vector<char32_t> out;
        for (char32_t c : to_codepoints(s))
            if (!is_space(c)) out.push_back(c);
        return out;
    };
    const auto hc = strip(hyp);
    const auto rc = strip(ref);
    // word n-grams split on whitespace only, as in the usual chrF++ definition
    const auto hw = split_words(hyp);
    const auto rw = split_words(ref);

    double f_sum = 0;
    std::size_t orders = 0;
    auto add_order = [&](std::size_t matches, std::size_t h_total, std::size_t r_total) {
        if (h_total == 0 && r_total == 0) return;
        ++orders;
        if (h_total == 0 || r_total == 0 || matches == 0) return;
        const double p = static_cast<double>(matches) / static_cast<double>(h_total);
        const double r = static_cast<double>(matches) / static_cast<double>(r_total);
        f_sum += (1 + kBeta2) * p * r / (kBeta2 * p + r);
    };
    for (std::size_t n = 1; n <= 6; ++n) {
        const auto h = ngram_counts<std::u32string>(hc, n);
        const auto r = ngram_counts<std::u32string>(rc, n);
        add_order(clipped_matches(h, r), total(h), total(r));
    }
    for (std::size_t n = 1; n <= 2; ++n) {
        const auto h = ngram_counts<std::vector<std::string>>(hw, n);
        const auto r = ngram_counts<std::vector<std::string>>(rw, n);
        add_order(clipped_matches(h, r), total(h), total(r));
    }
    if (orders == 0) return 100.0;
    return 100.0 * f_sum / static_cast<double>(orders);
}

double round2(double x) {
    const double scaled = x * 100.0;
    const double nudge = std::abs(scaled) * 1e-12;
    return std::round(scaled + (scaled >= 0 ? nudge : -nudge)) / 100.0;
}

namespace {
bool is_translation(Metric m) { return m == Metric::bleu || m == Metric::chrf_pp; }
}  // namespace

BenchmarkReport aggregate_report(std::span<const EvalScore> scores) {
    BenchmarkReport r;
    std::set<std::pair<std::string, Metric>> seen;
    double sns_sum = 0, trans_sum = 0;
    std::size_t sns_n = 0, trans_n = 0;
    for (const auto& s : scores) {
        if (!std::isfinite(s.value) || s.value < 0 || s.value > 100)
            throw Error("score for '" + s.task + "' is outside [0, 100]");
        if (!seen.emplace(s.task, s.metric).second)
            throw Error("duplicate score for task '" + s.task + "' (" + std::string(to_string(s.metric)) + ")");
        if (is_translation(s.metric)) {
            trans_sum += s.value;
            ++trans_n;
        } else {
            sns_sum += s.value;
            ++sns_n;
        }
        r.scores.push_back(s);
    }
    if (sns_n) r.sns_avg = sns_sum / static_cast<double>(sns_n);
    if (trans_n) r.trans_avg = trans_sum / static_cast<double>(trans_n);
    return r;
}

ordered_json to_json(const EvalScore& s) {
    ordered_json j;
    j["task"] = s.task;
    j["metric"] = to_string(s.metric);
    j["value"] = s.value;
    return j;
}

EvalScore score_from_json(const json& j) {
    EvalScore s;
    s.task = jsonf::string_field(j, "task");
    s.metric = parse_metric(jsonf::string_field(j, "metric"));
    s.value = jsonf::number_field(j, "value");
    return s;
}

ordered_json BenchmarkReport::to_json() const {
    auto group = [&](bool trans, const std::optional<double>& avg) {
        ordered_json cols = ordered_json::array();
        for (const auto& s : scores) {
            if (is_translation(s.metric) != trans) continue;
            ordered_json c;
            c["task"] = s.task;
            c["metric"] = to_string(s.metric);
            c["value"] = s.value;
            c["display"] = round2(s.value);
            cols.push_back(std::move(c));
        }
        ordered_json g;
        g["columns"] = std::move(cols);
        g["avg"] = avg ? ordered_json(*avg) : ordered_json(nullptr);
        g["avg_display"] = avg ? ordered_json(round2(*avg)) : ordered_json(nullptr);
        return g;
    };
    ordered_json j;
    j["sns"] = group(false, sns_avg);
    j["trans"] = group(true, trans_avg);
    return j;
}

std::string BenchmarkReport::to_text() const {
    std::ostringstream head, row;
    head << std::fixed << std::setprecision(2);
    row << std::fixed << std::setprecision(2);
    auto cell = [&](const std::string& name, double v) {
        const std::size_t w = std::max<std::size_t>(name.size(), 6) + 2;
        head << std::setw(static_cast<int>(w)) << name;
        row << std::setw(static_cast<int>(w)) << round2(v);
    };
    for (bool trans : {false, true}) {
        bool any = false;
        for (const auto& s : scores) {
            if (is_translation(s.metric) != trans) continue;
            any = true;
            cell(trans ? s.task + " " + std::string(to_string(s.metric)) : s.task, s.value);
        }
        const auto& avg = trans ? trans_avg : sns_avg;
        if (any && avg) cell(trans ? "Trans Avg." : "SNS Avg.", *avg);
        if (any) {
            head << " |";
            row << " |";
        }
    }
    return head.str() + "\n" + row.str() + "\n";
}

namespace {

std::vector<std::pair<std::optional<std::string>, std::string>> load_texts(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open " + path.string());
    std::vector<std::pair<std::optional<std::string>, std::string>> out;
    std::string line;
    std::size_t n = 0;
    while (std::getline(in, line)) {
        ++n;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        try {
            const auto j = json::parse(line);
            out.emplace_back(jsonf::optional_string(j, "id"), jsonf::string_field(j, "text"));
        } catch (const std::exception& e) {
            throw Error(path.string() + ":" + std::to_string(n) + ": " + e.what());
        }
    }
    return out;
}

}  // namespace

EvalScore evaluate_files(const std::string& task, Metric metric, const std::filesystem::path& pred,
                         const std::filesystem::path& gold) {
    const auto p = load_texts(pred);
    const auto g = load_texts(gold);
    if (p.size() != g.size())
        throw Error("prediction file has " + std::to_string(p.size()) + " records, gold has " + std::to_string(g.size()));
    if (p.empty()) throw Error("no records to evaluate");
    std::vector<std::string> hyps, refs;
    for (std::size_t i = 0; i < p.size(); ++i) {
        if (p[i].first && g[i].first && *p[i].first != *g[i].first)
            throw Error("record " + std::to_string(i + 1) + " ids differ: " + *p[i].first + " vs " + *g[i].first);
        hyps.push_back(p[i].second);
        refs.push_back(g[i].second);
    }
    EvalScore s{task, metric, 0.0};
    switch (metric) {
        case Metric::accuracy: s.value = mc_accuracy(hyps, refs); break;
        case Metric::bleu: s.value = bleu(hyps, refs); break;
        case Metric::span_f1:
        case Metric::chrf_pp: {
            double sum = 0;
            for (std::size_t i = 0; i < hyps.size(); ++i)
                sum += metric == Metric::span_f1 ? span_f1(hyps[i], refs[i]) : chrf_pp(hyps[i], refs[i]);
            s.value = sum / static_cast<double>(hyps.size());
            break;
        }
    }
    return s;
}

}  // namespace redforge::eval
