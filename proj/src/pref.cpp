#include "redforge/pref.hpp"

#include <cmath>
#include <set>
#include <tuple>
#include <unordered_set>

#include "redforge/tokenizer.hpp"

namespace redforge::pref {

double JudgeCalibration::agreement() const {
    if (items.empty()) throw Error("judge calibration set is empty");
    std::size_t match = 0;
    for (const auto& it : items) match += it.judge == it.human;
    return static_cast<double>(match) / static_cast<double>(items.size());
}

std::vector<PreferencePair> ordinal_pairs(const TaskSample& s, const std::string& source_id) {
    if (s.format != TaskFormat::multiple_choice || !s.options)
        throw Error("ordinal pairs need a multiple_choice sample");
    std::vector<PreferencePair> out;
    std::unordered_set<std::string> seen{s.answer};
    for (const auto& opt : *s.options) {
        if (!seen.insert(opt).second) continue;
        out.push_back({s.prompt, s.answer, opt, PairStrategy::ordinal, source_id});
    }
    return out;
}

std::vector<PreferencePair> error_pairs(std::span<const PredictionLogEntry> log) {
    std::vector<PreferencePair> out;
    for (const auto& e : log) {
        if (normalize_whitespace(e.predicted) == normalize_whitespace(e.gold)) continue;
        out.push_back({e.prompt, e.gold, e.predicted, PairStrategy::error, e.source_id});
    }
    return out;
}

bool judge_gate(const JudgeCalibration& cal, double tau) { return cal.agreement() >= tau; }

std::vector<PreferencePair> judge_pairs(std::span<const JudgedCandidate> judged) {
    std::vector<PreferencePair> out;
    for (const auto& c : judged) {
        if (c.response_a == c.response_b) continue;
        const bool a_wins = c.preferred == Choice::A;
        out.push_back({c.prompt, a_wins ? c.response_a : c.response_b, a_wins ? c.response_b : c.response_a,
                       PairStrategy::judge, c.source_id});
    }
    return out;
}

double dpo_loss(double policy_chosen, double policy_rejected, double ref_chosen, double ref_rejected, double beta) {
    if (!std::isfinite(policy_chosen) || !std::isfinite(policy_rejected) || !std::isfinite(ref_chosen) ||
        !std::isfinite(ref_rejected) || !std::isfinite(beta))
        throw Error("dpo_loss inputs must be finite");
    if (!(beta > 0)) throw Error("dpo beta must be positive");
    const double z = beta * ((policy_chosen - policy_rejected) - (ref_chosen - ref_rejected));
    // -log sigmoid(z) = softplus(-z)
    return z > 0 ? std::log1p(std::exp(-z)) : -z + std::log1p(std::exp(z));
}

double combined_objective(double dpo, double sft_nll, double coef) {
    if (!(sft_nll >= 0)) throw Error("sft_nll must be non-negative");
    if (!(coef >= 0)) throw Error("sft loss coefficient must be non-negative");
    return dpo + coef * sft_nll;
}

ordered_json PrefReport::to_json() const {
    auto counts = [](const std::map<PairStrategy, std::size_t>& m) {
        ordered_json j;
        for (auto s : {PairStrategy::ordinal, PairStrategy::error, PairStrategy::judge}) {
            auto it = m.find(s);
            j[std::string(to_string(s))] = it == m.end() ? 0 : it->second;
        }
        return j;
    };
    ordered_json j;
    j["total"] = total;
    j["generated"] = counts(generated);
    j["emitted"] = counts(emitted);
    j["duplicates"] = duplicates;
    j["judge_admitted"] = judge_admitted;
    j["judge_agreement"] = judge_agreement ? ordered_json(*judge_agreement) : ordered_json(nullptr);
    j["judge_candidates_dropped"] = judge_candidates_dropped;
    return j;
}

PrefDataset build_pref_dataset(std::span<const TaskSample> mc, std::span<const PredictionLogEntry> log,
                               std::span<const JudgedCandidate> judged, const JudgeCalibration& cal,
                               const PrefConfig& cfg) {
    PrefDataset out;
    auto& report = out.report;
    std::vector<PreferencePair> candidates;

    for (std::size_t i = 0; i < mc.size(); ++i) {
        auto pairs = ordinal_pairs(mc[i], "mc-" + std::to_string(i));
        candidates.insert(candidates.end(), pairs.begin(), pairs.end());
    }
    auto errs = error_pairs(log);
    candidates.insert(candidates.end(), errs.begin(), errs.end());

    if (!cal.items.empty()) {
        report.judge_agreement = cal.agreement();
        report.judge_admitted = judge_gate(cal, cfg.tau);
    }
    if (report.judge_admitted) {
        auto jp = judge_pairs(judged);
        candidates.insert(candidates.end(), jp.begin(), jp.end());
    } else {
        report.judge_candidates_dropped = judged.size();
    }

    std::set<std::tuple<std::string, std::string, std::string>> seen;
    for (auto& p : candidates) {
        ++report.generated[p.strategy];
        if (!seen.emplace(p.prompt, p.chosen, p.rejected).second) {
            ++report.duplicates;
            continue;
        }
        ++report.emitted[p.strategy];
        out.pairs.push_back(std::move(p));
    }
    report.total = out.pairs.size();
    return out;
}

ordered_json DpoBatchResult::to_json() const {
    ordered_json j;
    j["n"] = n;
    j["mean_dpo"] = mean_dpo;
    j["mean_objective"] = mean_objective;
    return j;
}

DpoBatchResult evaluate_dpo_batch(std::span<const LogProbRecord> records, const DpoParams& params) {
    if (records.empty()) throw Error("no log-probability records to evaluate");
    DpoBatchResult r;
    r.n = records.size();
    double dpo_sum = 0;
    double obj_sum = 0;
    for (const auto& rec : records) {
        const double d = dpo_loss(rec.policy_chosen, rec.policy_rejected, rec.ref_chosen, rec.ref_rejected, params.beta);
        dpo_sum += d;
        obj_sum += combined_objective(d, rec.sft_nll, params.sft_loss_coef);
    }
    r.mean_dpo = dpo_sum / static_cast<double>(r.n);
    r.mean_objective = obj_sum / static_cast<double>(r.n);
    return r;
}

}  // namespace redforge::pref

namespace redforge {

namespace {
pref::Choice parse_choice(const std::string& s) {
    if (s == "A") return pref::Choice::A;
    if (s == "B") return pref::Choice::B;
    throw Error("preference must be \"A\" or \"B\", got \"" + s + "\"");
}
const char* choice_name(pref::Choice c) { return c == pref::Choice::A ? "A" : "B"; }
}  // namespace

pref::PredictionLogEntry JsonCodec<pref::PredictionLogEntry>::decode(const json& j) {
    pref::PredictionLogEntry e;
    e.source_id = jsonf::string_field(j, "source_id");
    e.prompt = jsonf::string_field(j, "prompt");
    e.gold = jsonf::string_field(j, "gold");
    e.predicted = jsonf::string_field(j, "predicted");
    if (e.gold.empty()) throw Error("field \"gold\" must be non-empty");
    return e;
}

ordered_json JsonCodec<pref::PredictionLogEntry>::encode(const pref::PredictionLogEntry& e) {
    ordered_json j;
    j["source_id"] = e.source_id;
    j["prompt"] = e.prompt;
    j["gold"] = e.gold;
    j["predicted"] = e.predicted;
    return j;
}

pref::CalibrationItem JsonCodec<pref::CalibrationItem>::decode(const json& j) {
    return {parse_choice(jsonf::string_field(j, "judge_preference")),
            parse_choice(jsonf::string_field(j, "human_preference"))};
}

ordered_json JsonCodec<pref::CalibrationItem>::encode(const pref::CalibrationItem& c) {
    ordered_json j;
    j["judge_preference"] = choice_name(c.judge);
    j["human_preference"] = choice_name(c.human);
    return j;
}

pref::JudgedCandidate JsonCodec<pref::JudgedCandidate>::decode(const json& j) {
    pref::JudgedCandidate c;
    c.source_id = jsonf::string_field(j, "source_id");
    c.prompt = jsonf::string_field(j, "prompt");
    c.response_a = jsonf::string_field(j, "response_a");
    c.response_b = jsonf::string_field(j, "response_b");
    c.preferred = parse_choice(jsonf::string_field(j, "judge_preference"));
    return c;
}

ordered_json JsonCodec<pref::JudgedCandidate>::encode(const pref::JudgedCandidate& c) {
    ordered_json j;
    j["source_id"] = c.source_id;
    j["prompt"] = c.prompt;
    j["response_a"] = c.response_a;
    j["response_b"] = c.response_b;
    j["judge_preference"] = choice_name(c.preferred);
    return j;
}

pref::LogProbRecord JsonCodec<pref::LogProbRecord>::decode(const json& j) {
    pref::LogProbRecord r;
    r.policy_chosen = jsonf::number_field(j, "policy_chosen");
    r.policy_rejected = jsonf::number_field(j, "policy_rejected");
    r.ref_chosen = jsonf::number_field(j, "ref_chosen");
    r.ref_rejected = jsonf::number_field(j, "ref_rejected");
    r.sft_nll = j.contains("sft_nll") ? jsonf::number_field(j, "sft_nll") : 0.0;
    return r;
}

ordered_json JsonCodec<pref::LogProbRecord>::encode(const pref::LogProbRecord& r) {
    ordered_json j;
    j["policy_chosen"] = r.policy_chosen;
    j["policy_rejected"] = r.policy_rejected;
    j["ref_chosen"] = r.ref_chosen;
    j["ref_rejected"] = r.ref_rejected;
    j["sft_nll"] = r.sft_nll;
    return j;
}

}  // namespace redforge
