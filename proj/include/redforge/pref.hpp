#pragma once

#include <map>
#include <span>
#include <string>
#include <vector>

#include "redforge/jsonl.hpp"
#include "redforge/types.hpp"

namespace redforge::pref {

struct PredictionLogEntry {
    std::string source_id;
    std::string prompt;
    std::string gold;
    std::string predicted;
};

enum class Choice { A, B };

struct CalibrationItem {
    Choice judge = Choice::A;
    Choice human = Choice::A;
};

struct JudgeCalibration {
    std::vector<CalibrationItem> items;

    /// matching / total. Throws on an empty calibration set.
    double agreement() const;
};

/// A response pair scored by an external judge model.
struct JudgedCandidate {
    std::string source_id;
    std::string prompt;
    std::string response_a;
    std::string response_b;
    Choice preferred = Choice::A;
};

struct DpoParams {
    double beta = 0.1;
    double sft_loss_coef = 0.3;
};

/// One pair ranked against a distractor for every distinct wrong option, in
/// option order. Throws for non-multiple-choice samples.
std::vector<PreferencePair> ordinal_pairs(const TaskSample& s, const std::string& source_id);

/// (gold > predicted) for every entry whose prediction differs from gold
/// after whitespace normalization.
std::vector<PreferencePair> error_pairs(std::span<const PredictionLogEntry> log);

/// Admits the judge iff agreement >= tau.
bool judge_gate(const JudgeCalibration& cal, double tau);

std::vector<PreferencePair> judge_pairs(std::span<const JudgedCandidate> judged);

/// -log sigmoid(beta * ((pc - pr) - (rc - rr))), computed without overflow.
double dpo_loss(double policy_chosen, double policy_rejected, double ref_chosen, double ref_rejected, double beta);

/// dpo + coef * sft_nll.
double combined_objective(double dpo, double sft_nll, double coef);

struct PrefConfig {
    double tau = 0.8;
};

struct PrefReport {
    std::map<PairStrategy, std::size_t> generated;  // before dedup
    std::map<PairStrategy, std::size_t> emitted;    // after dedup
    std::size_t duplicates = 0;
    std::size_t total = 0;
    bool judge_admitted = false;
    std::optional<double> judge_agreement;
    std::size_t judge_candidates_dropped = 0;

    ordered_json to_json() const;
};

struct PrefDataset {
    std::vector<PreferencePair> pairs;
    PrefReport report;
};

/// Ordinal pairs from MC samples, then error pairs from the log, then judge
/// pairs when the judge passes its gate; deduplicated on
/// (prompt, chosen, rejected), keeping the first occurrence. Judge candidates
/// without a calibration set are dropped.
PrefDataset build_pref_dataset(std::span<const TaskSample> mc, std::span<const PredictionLogEntry> log,
                               std::span<const JudgedCandidate> judged, const JudgeCalibration& cal,
                               const PrefConfig& cfg);

/// Per-pair log-probabilities supplied by an external trainer.
struct LogProbRecord {
    double policy_chosen = 0;
    double policy_rejected = 0;
    double ref_chosen = 0;
    double ref_rejected = 0;
    double sft_nll = 0;
};

struct DpoBatchResult {
    std::size_t n = 0;
    double mean_dpo = 0;
    double mean_objective = 0;

    ordered_json to_json() const;
};

DpoBatchResult evaluate_dpo_batch(std::span<const LogProbRecord> records, const DpoParams& params);

}  // namespace redforge::pref

namespace redforge {

template <>
struct JsonCodec<pref::PredictionLogEntry> {
    static pref::PredictionLogEntry decode(const json& j);
    static ordered_json encode(const pref::PredictionLogEntry& e);
};

template <>
struct JsonCodec<pref::CalibrationItem> {
    static pref::CalibrationItem decode(const json& j);
    static ordered_json encode(const pref::CalibrationItem& c);
};

template <>
struct JsonCodec<pref::JudgedCandidate> {
    static pref::JudgedCandidate decode(const json& j);
    static ordered_json encode(const pref::JudgedCandidate& c);
};

template <>
struct JsonCodec<pref::LogProbRecord> {
    static pref::LogProbRecord decode(const json& j);
    static ordered_json encode(const pref::LogProbRecord& r);
};

}  // namespace redforge
