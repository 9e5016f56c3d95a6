#include "redforge/mixture.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include <Eigen/Dense>

#include "redforge/parallel.hpp"
#include "redforge/rng.hpp"
#include "redforge/tokenizer.hpp"

namespace redforge::mix {

void MixtureWeights::validate() const {
    if (weights.size() != domains.size()) throw Error("mixture weights and domains differ in length");
    if (weights.empty()) throw Error("mixture has no domains");
    double sum = 0;
    for (double w : weights) {
        if (!std::isfinite(w) || w < 0) throw Error("mixture weights must be finite and non-negative");
        sum += w;
    }
    if (std::abs(sum - 1.0) > 1e-9) throw Error("mixture weights do not sum to 1");
}

std::vector<double> normalize_to_simplex(std::span<const double> values, std::size_t fallback_index) {
    if (values.empty()) throw Error("cannot normalize an empty weight vector");
    double sum = 0;
    for (double v : values) {
        if (!std::isfinite(v) || v < 0) throw Error("weights must be finite and non-negative");
        sum += v;
    }
    std::vector<double> out(values.size(), 0.0);
    if (sum <= 0) {
        out[fallback_index % values.size()] = 1.0;
        return out;
    }
    for (std::size_t i = 0; i < values.size(); ++i) out[i] = values[i] / sum;
    return out;
}

std::vector<double> dirichlet_draw(std::size_t k, double alpha, std::uint64_t seed, std::uint64_t index) {
    if (!(alpha > 0) || !std::isfinite(alpha)) throw Error("Dirichlet alpha must be positive");
    if (k == 0) throw Error("need at least one domain");
    Rng rng(stream_seed(seed, index));
    std::gamma_distribution<double> gamma(alpha, 1.0);
    std::vector<double> g(k);
    for (auto& v : g) v = gamma(rng);
    return normalize_to_simplex(g, static_cast<std::size_t>(uniform_below(rng, k)));
}

std::vector<MixtureWeights> sample_mixtures(std::size_t n, std::span<const std::string> domains, double alpha,
                                            std::uint64_t seed) {
    if (!(alpha > 0)) throw Error("Dirichlet alpha must be positive");
    if (domains.empty()) throw Error("need at least one domain");
    std::vector<std::string> names(domains.begin(), domains.end());
    return parallel_map<MixtureWeights>(n, [&](std::size_t i) {
        return MixtureWeights{names, dirichlet_draw(names.size(), alpha, seed, i)};
    });
}

std::vector<MixtureWeights> sample_mixtures(std::size_t n, std::size_t k_domains, double alpha, std::uint64_t seed) {
    std::vector<std::string> names;
    for (std::size_t i = 0; i < k_domains; ++i) names.push_back("d" + std::to_string(i + 1));
    return sample_mixtures(n, names, alpha, seed);
}

std::vector<double> LossModel::features(std::span<const double> w) {
    const std::size_t k = w.size();
    std::vector<double> f;
    f.reserve(2 * k + k * (k - 1) / 2);
    for (double x : w) f.push_back(x);
    for (double x : w) f.push_back(x * x);
    for (std::size_t i = 0; i < k; ++i)
        for (std::size_t j = i + 1; j < k; ++j) f.push_back(w[i] * w[j]);
    return f;
}

double LossModel::predict(std::span<const double> w) const {
    if (w.size() != k_) throw Error("mixture dimension does not match the loss model");
    const auto f = features(w);
    double y = intercept_;
    for (std::size_t i = 0; i < f.size(); ++i) y += coef_[i] * f[i];
    return y;
}

LossModel fit_loss_model(std::span<const ProxyEvaluation> evals, double ridge) {
    if (evals.empty()) throw Error("cannot fit a loss model without evaluations");
    if (!(ridge > 0)) throw Error("ridge penalty must be positive");
    LossModel model;
    model.domains_ = evals.front().weights.domains;
    model.k_ = model.domains_.size();
    for (const auto& e : evals) {
        if (e.weights.domains != model.domains_) throw Error("evaluations disagree on the domain list");
        if (!std::isfinite(e.loss)) throw Error("proxy loss must be finite");
    }

    const auto n = static_cast<Eigen::Index>(evals.size());
    const auto p = static_cast<Eigen::Index>(LossModel::features(evals.front().weights.weights).size());
    Eigen::MatrixXd x(n, p);
    Eigen::VectorXd y(n);
    for (Eigen::Index r = 0; r < n; ++r) {
        const auto f = LossModel::features(evals[static_cast<std::size_t>(r)].weights.weights);
        for (Eigen::Index c = 0; c < p; ++c) x(r, c) = f[static_cast<std::size_t>(c)];
        y(r) = evals[static_cast<std::size_t>(r)].loss;
    }
    const Eigen::RowVectorXd x_mean = x.colwise().mean();
    const double y_mean = y.mean();
    x.rowwise() -= x_mean;
    y.array() -= y_mean;

    const double inv_n = 1.0 / static_cast<double>(n);
    Eigen::MatrixXd gram = (x.transpose() * x) * inv_n;
    gram.diagonal().array() += ridge;
    const Eigen::VectorXd rhs = (x.transpose() * y) * inv_n;
    const Eigen::VectorXd beta = gram.ldlt().solve(rhs);

    model.coef_.assign(beta.data(), beta.data() + beta.size());
    model.intercept_ = y_mean - x_mean.dot(beta);
    return model;
}

SearchResult optimize_mixture(const LossModel& model, std::size_t n_search, std::size_t top_k, std::uint64_t seed,
                              double alpha) {
    if (top_k == 0 || n_search < top_k) throw Error("optimize_mixture requires n_search >= top_k >= 1");
    const std::size_t k = model.k_domains();
    SearchResult out;
    out.weights.domains = model.domains();
    if (k == 1) {
        out.weights.weights = {1.0};
        out.predicted_loss = model.predict(out.weights.weights);
        return out;
    }
    struct Candidate {
        double loss;
        std::size_t index;
        std::vector<double> w;
    };
    auto candidates = parallel_map<Candidate>(n_search, [&](std::size_t i) {
        auto w = dirichlet_draw(k, alpha, seed, i);
        const double loss = model.predict(w);
        return Candidate{loss, i, std::move(w)};
    });
    // Max-heap on (loss, index) holding the current top_k of the prefix.
    auto worse = [&](std::size_t a, std::size_t b) {
        const auto& ca = candidates[a];
        const auto& cb = candidates[b];
        return ca.loss < cb.loss || (ca.loss == cb.loss && ca.index < cb.index);
    };
    std::vector<std::size_t> heap;
    heap.reserve(top_k);
    bool have_best = false;
    double best_loss = 0.0;
    std::vector<double> best;
    auto consider = [&] {
        std::vector<double> mean(k, 0.0);
        for (auto i : heap)
            for (std::size_t d = 0; d < k; ++d) mean[d] += candidates[i].w[d];
        mean = normalize_to_simplex(mean);
        const double loss = model.predict(mean);
        if (!have_best || loss < best_loss) {
            have_best = true;
            best_loss = loss;
            best = std::move(mean);
        }
    };
    for (std::size_t i = 0; i < n_search; ++i) {
        if (heap.size() < top_k) {
            heap.push_back(i);
            std::push_heap(heap.begin(), heap.end(), worse);
            if (heap.size() == top_k) consider();
        } else if (worse(i, heap.front())) {
            std::pop_heap(heap.begin(), heap.end(), worse);
            heap.back() = i;
            std::push_heap(heap.begin(), heap.end(), worse);
            consider();
        }
    }
    out.weights.weights = std::move(best);
    out.predicted_loss = model.predict(out.weights.weights);
    return out;
}

PruneResult prune_domains(const MixtureWeights& w, double epsilon) {
    if (!(epsilon >= 0 && epsilon < 1)) throw Error("prune epsilon must be in [0, 1)");
    w.validate();
    PruneResult out;
    std::vector<double> kept;
    for (std::size_t i = 0; i < w.weights.size(); ++i) {
        if (w.weights[i] < epsilon) {
            out.dropped.push_back(w.domains[i]);
        } else {
            out.pruned.domains.push_back(w.domains[i]);
            kept.push_back(w.weights[i]);
        }
    }
    if (kept.empty()) throw Error("every domain falls below the prune threshold");
    out.pruned.weights = normalize_to_simplex(kept);
    return out;
}

NgramProxy::NgramProxy(const std::vector<std::pair<std::string, std::vector<Document>>>& shards, int order,
                       double smoothing_k, double heldout_fraction, std::size_t max_heldout_chars) {
    if (shards.empty()) throw Error("proxy needs at least one domain shard");
    if (!(heldout_fraction > 0 && heldout_fraction < 1)) throw Error("heldout_fraction must be in (0, 1)");
    std::vector<filter::QualityScorer> models;
    std::vector<std::string> heldout;
    for (const auto& [name, docs] : shards) {
        if (docs.empty()) throw Error("domain '" + name + "' has no documents");
        domains_.push_back(name);
        // Split by a stable hash of the id so the split ignores file order.
        std::vector<Document> train;
        std::string held;
        for (const auto& d : docs) {
            const double u = static_cast<double>(splitmix64(fnv1a(d.id)) >> 11) * 0x1.0p-53;
            if (u < heldout_fraction) {
                if (held.size() < max_heldout_chars) {
                    if (!held.empty()) held += '\n';
                    held += d.text;
                }
            } else {
                train.push_back(d);
            }
        }
        if (train.empty()) train.push_back(docs.front());
        if (held.empty()) held = docs.back().text;
        std::size_t cut = std::min(held.size(), max_heldout_chars);
        while (cut < held.size() && (static_cast<unsigned char>(held[cut]) & 0xC0) == 0x80) ++cut;
        held.resize(cut);
        models.push_back(filter::train_quality_scorer(train, order, smoothing_k));
        heldout.push_back(std::move(held));
    }
    const std::size_t k = domains_.size();
    for (const auto& text : heldout) {
        std::vector<std::vector<double>> per_model;
        for (const auto& m : models) per_model.push_back(m.log_probs(text));
        const std::size_t len = per_model.front().size();
        std::vector<double> table(len * k);
        for (std::size_t pos = 0; pos < len; ++pos)
            for (std::size_t d = 0; d < k; ++d) table[pos * k + d] = std::exp(per_model[d][pos]);
        positions_.push_back(len);
        probs_.push_back(std::move(table));
    }
}

double NgramProxy::operator()(const MixtureWeights& w) const {
    if (w.domains != domains_) throw Error("mixture domains do not match the proxy");
    const std::size_t k = domains_.size();
    double total = 0;
    for (std::size_t h = 0; h < probs_.size(); ++h) {
        double ce = 0;
        for (std::size_t pos = 0; pos < positions_[h]; ++pos) {
            double p = 0;
            for (std::size_t d = 0; d < k; ++d) p += w.weights[d] * probs_[h][pos * k + d];
            ce -= std::log(p);
        }
        total += positions_[h] == 0 ? 0.0 : ce / static_cast<double>(positions_[h]);
    }
    return total / static_cast<double>(probs_.size());
}

ordered_json MixtureRun::to_json() const {
    ordered_json j;
    j["domains"] = pruned.pruned.domains;
    j["weights"] = pruned.pruned.weights;
    j["dropped"] = pruned.dropped;
    j["predicted_loss"] = predicted_loss;
    j["search_domains"] = search.weights.domains;
    j["search_weights"] = search.weights.weights;
    j["proxy_evaluations"] = evaluations.size();
    return j;
}

MixtureRun run_mixture_search(std::span<const std::string> domains, const ProxyLoss& proxy, std::size_t samples,
                              std::size_t search, std::size_t top_k, double alpha, double prune_epsilon,
                              std::uint64_t seed) {
    MixtureRun run;
    const auto draws = sample_mixtures(samples, domains, alpha, stage_seed(seed, "mixture.sample"));
    run.evaluations = parallel_map<ProxyEvaluation>(draws.size(), [&](std::size_t i) {
        return ProxyEvaluation{draws[i], proxy(draws[i])};
    });
    const auto model = fit_loss_model(run.evaluations);
    run.search = optimize_mixture(model, search, top_k, stage_seed(seed, "mixture.search"), alpha);
    run.pruned = prune_domains(run.search.weights, prune_epsilon);

    std::vector<double> embedded(domains.size(), 0.0);
    for (std::size_t i = 0, j = 0; i < domains.size(); ++i) {
        if (j < run.pruned.pruned.domains.size() && run.pruned.pruned.domains[j] == domains[i])
            embedded[i] = run.pruned.pruned.weights[j++];
    }
    run.predicted_loss = model.predict(embedded);
    return run;
}

}  // namespace redforge::mix
