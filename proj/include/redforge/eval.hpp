#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "redforge/jsonl.hpp"

namespace redforge::eval {

enum class Metric { accuracy, span_f1, bleu, chrf_pp };

std::string_view to_string(Metric m);
Metric parse_metric(std::string_view s);

/// Scores are on the 0-100 scale used by the benchmark tables.
struct EvalScore {
    std::string task;
    Metric metric = Metric::accuracy;
    double value = 0.0;
};

/// 100 * matches / total, comparing trimmed labels. Throws on empty or
/// mismatched inputs.
double mc_accuracy(std::span<const std::string> preds, std::span<const std::string> golds);

/// Token-multiset F1 (x100). Both empty scores 100; exactly one empty scores 0.
double span_f1(std::string_view pred, std::string_view gold);

inline constexpr double kBleuFloor = 0.1;

/// Corpus BLEU (x100), n-grams 1..4 with a 0.1 floor on zero match counts.
/// An order with no n-grams on either side is left out of the geometric
/// mean; an order where only the hypothesis lacks n-grams contributes the
/// floor. Brevity penalty exp(1 - ref/hyp) when the hypothesis is shorter.
double bleu(std::span<const std::string> hyps, std::span<const std::string> refs);

/// chrF++ (x100): mean F-beta (beta = 2) over character 1..6-grams
/// (whitespace removed) and word 1..2-grams, skipping orders where both
/// sides are empty. Both strings empty scores 100.
double chrf_pp(std::string_view hyp, std::string_view ref);

struct BenchmarkReport {
    std::vector<EvalScore> scores;
    std::optional<double> sns_avg;    // accuracy / span_f1 scores
    std::optional<double> trans_avg;  // bleu / chrf_pp scores

    ordered_json to_json() const;
    std::string to_text() const;
};

/// Unweighted means of each group. Throws on a repeated (task, metric).
BenchmarkReport aggregate_report(std::span<const EvalScore> scores);

/// Rounds half away from zero to two decimals, tolerating the binary
/// representation error of decimal inputs (48.545 -> 48.55).
double round2(double x);

ordered_json to_json(const EvalScore& s);
EvalScore score_from_json(const json& j);

/// Scores a prediction file against a gold file (one {"text": ...} object
/// per line, aligned by position; "id" fields must agree when both present).
EvalScore evaluate_files(const std::string& task, Metric metric, const std::filesystem::path& pred,
                         const std::filesystem::path& gold);

}  // namespace redforge::eval
