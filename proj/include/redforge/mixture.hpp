#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "redforge/filter.hpp"
#include "redforge/jsonl.hpp"
#include "redforge/types.hpp"

namespace redforge::mix {

/// A point on the probability simplex over named domains.
struct MixtureWeights {
    std::vector<std::string> domains;
    std::vector<double> weights;

    /// Throws Error unless weights are non-negative, finite, aligned with
    /// domains, and sum to 1 within 1e-9.
    void validate() const;
};

struct ProxyEvaluation {
    MixtureWeights weights;
    double loss = 0.0;
};

/// Scales non-negative values to sum to one. An all-zero input (possible
/// when tiny Gamma draws underflow) puts all mass on `fallback_index`.
std::vector<double> normalize_to_simplex(std::span<const double> values, std::size_t fallback_index = 0);

/// Symmetric Dirichlet(alpha) draw for stream index `index`.
std::vector<double> dirichlet_draw(std::size_t k, double alpha, std::uint64_t seed, std::uint64_t index);

/// n independent Dirichlet draws; draw i depends only on (seed, i).
std::vector<MixtureWeights> sample_mixtures(std::size_t n, std::span<const std::string> domains, double alpha,
                                            std::uint64_t seed);
std::vector<MixtureWeights> sample_mixtures(std::size_t n, std::size_t k_domains, double alpha, std::uint64_t seed);

/// Quadratic ridge surrogate over [w, w*w, w_i*w_j (i<j)] plus an
/// unpenalized intercept. The penalty is applied to the mean squared error,
/// so repeating the whole evaluation set leaves the fit unchanged.
class LossModel {
public:
    std::size_t k_domains() const { return k_; }
    const std::vector<std::string>& domains() const { return domains_; }
    double predict(std::span<const double> w) const;

    static std::vector<double> features(std::span<const double> w);

private:
    friend LossModel fit_loss_model(std::span<const ProxyEvaluation>, double);
    std::size_t k_ = 0;
    std::vector<std::string> domains_;
    std::vector<double> coef_;
    double intercept_ = 0.0;
};

inline constexpr double kDefaultRidge = 1e-10;

LossModel fit_loss_model(std::span<const ProxyEvaluation> evals, double ridge = kDefaultRidge);

struct SearchResult {
    MixtureWeights weights;
    double predicted_loss = 0.0;
};

/// Draws n_search Dirichlet candidates and predicts each. Walking the
/// candidates in draw order, every change to the running top_k set yields a
/// renormalized top_k mean; the mean with the lowest predicted loss wins.
/// Since a longer search only adds contenders, the result never gets worse
/// as n_search grows under the same seed.
SearchResult optimize_mixture(const LossModel& model, std::size_t n_search, std::size_t top_k, std::uint64_t seed,
                              double alpha = 1.0);

struct PruneResult {
    MixtureWeights pruned;
    std::vector<std::string> dropped;
};

PruneResult prune_domains(const MixtureWeights& w, double epsilon = 1e-3);

using ProxyLoss = std::function<double(const MixtureWeights&)>;

/// Default proxy: a per-domain character n-gram model is trained on each
/// domain's training split; a mixture is scored by the cross-entropy of the
/// weight-mixed model on every domain's held-out split, averaged with equal
/// weight per domain.
class NgramProxy {
public:
    NgramProxy(const std::vector<std::pair<std::string, std::vector<Document>>>& shards, int order,
               double smoothing_k, double heldout_fraction, std::size_t max_heldout_chars);

    const std::vector<std::string>& domains() const { return domains_; }
    double operator()(const MixtureWeights& w) const;

private:
    std::vector<std::string> domains_;
    // Per held-out domain: row-major [position][model domain] probabilities.
    std::vector<std::vector<double>> probs_;
    std::vector<std::size_t> positions_;
};

struct MixtureRun {
    std::vector<ProxyEvaluation> evaluations;
    SearchResult search;
    PruneResult pruned;
    double predicted_loss = 0.0;  // surrogate at the pruned mixture

    ordered_json to_json() const;
};

/// sample -> evaluate -> fit -> search -> prune.
MixtureRun run_mixture_search(std::span<const std::string> domains, const ProxyLoss& proxy, std::size_t samples,
                              std::size_t search, std::size_t top_k, double alpha, double prune_epsilon,
                              std::uint64_t seed);

}  // namespace redforge::mix
