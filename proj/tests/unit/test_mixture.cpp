#include <doctest.h>

#include <cmath>
#include <numeric>
#include <random>

#include "redforge/mixture.hpp"
#include "redforge/parallel.hpp"

using namespace redforge;
using namespace redforge::mix;

namespace {

std::vector<std::string> names(std::size_t k) {
    std::vector<std::string> out;
    for (std::size_t i = 0; i < k; ++i) out.push_back("d" + std::to_string(i));
    return out;
}

void check_simplex(const MixtureWeights& w) {
    CHECK_NOTHROW(w.validate());
    double s = 0;
    for (double x : w.weights) {
        CHECK(x >= 0.0);
        s += x;
    }
    CHECK(std::abs(s - 1.0) <= 1e-12);
}

std::vector<ProxyEvaluation> evaluate(const std::vector<MixtureWeights>& ws, const ProxyLoss& f) {
    std::vector<ProxyEvaluation> out;
    for (const auto& w : ws) out.push_back({w, f(w)});
    return out;
}

double bowl(const MixtureWeights& w) {
    const double a = w.weights[0] - 0.6, b = w.weights[1] - 0.3, c = w.weights[2] - 0.1;
    return a * a + b * b + c * c;
}

Document doc(const std::string& id, const std::string& text) { return make_document(id, Source::general, "x", text); }

}  // namespace

TEST_CASE("sample_mixtures basics") {
    CHECK(sample_mixtures(0, 3, 1.0, 7).empty());
    CHECK_THROWS_AS(sample_mixtures(3, 3, 0.0, 7), Error);
    CHECK_THROWS_AS(sample_mixtures(3, 3, -1.0, 7), Error);
    CHECK_THROWS_AS(sample_mixtures(3, 0, 1.0, 7), Error);
    for (double alpha : {0.01, 0.3, 1.0, 5.0}) {
        for (const auto& w : sample_mixtures(200, 5, alpha, 11)) check_simplex(w);
    }
}

TEST_CASE("normalizing stubbed gamma draws") {
    const std::vector<double> g{1.0, 3.0};
    const auto w = normalize_to_simplex(g);
    CHECK(w[0] == 0.25);
    CHECK(w[1] == 0.75);
    const std::vector<double> zeros{0.0, 0.0, 0.0};
    CHECK(normalize_to_simplex(zeros, 2) == std::vector<double>{0.0, 0.0, 1.0});
    const std::vector<double> bad{1.0, -1.0};
    CHECK_THROWS_AS(normalize_to_simplex(bad), Error);
}

TEST_CASE("sample_mixtures is deterministic and order independent") {
    const auto a = sample_mixtures(100, 4, 1.0, 42);
    const auto b = sample_mixtures(100, 4, 1.0, 42);
    const auto c = sample_mixtures(100, 4, 1.0, 43);
    const auto prefix = sample_mixtures(10, 4, 1.0, 42);
    for (std::size_t i = 0; i < 100; ++i) CHECK(a[i].weights == b[i].weights);
    for (std::size_t i = 0; i < 10; ++i) CHECK(prefix[i].weights == a[i].weights);
    CHECK(a[0].weights != c[0].weights);
    for (std::size_t i = 0; i < 100; ++i) CHECK(dirichlet_draw(4, 1.0, 42, i) == a[i].weights);
    set_thread_limit(1);
    const auto serial = sample_mixtures(100, 4, 1.0, 42);
    set_thread_limit(0);
    for (std::size_t i = 0; i < 100; ++i) CHECK(serial[i].weights == a[i].weights);
}

TEST_CASE("MixtureWeights validation") {
    CHECK_THROWS_AS((MixtureWeights{{"a", "b"}, {0.5}}).validate(), Error);
    CHECK_THROWS_AS((MixtureWeights{{"a", "b"}, {0.5, 0.6}}).validate(), Error);
    CHECK_THROWS_AS((MixtureWeights{{"a", "b"}, {1.5, -0.5}}).validate(), Error);
    CHECK_THROWS_AS((MixtureWeights{{}, {}}).validate(), Error);
    CHECK_NOTHROW((MixtureWeights{{"a", "b"}, {0.5, 0.5}}).validate());
}

TEST_CASE("fit_loss_model recovers a linear loss") {
    const auto d = names(2);
    const auto train = sample_mixtures(64, d, 1.0, 1);
    const auto model = fit_loss_model(evaluate(train, [](const MixtureWeights& w) {
        return 2 * w.weights[0] + 3 * w.weights[1];
    }));
    for (const auto& w : sample_mixtures(200, d, 1.0, 999)) {
        CHECK(std::abs(model.predict(w.weights) - (2 * w.weights[0] + 3 * w.weights[1])) <= 1e-6);
    }
}

TEST_CASE("fit_loss_model is exact on quadratic losses at the evaluation points") {
    std::mt19937 rng(3);
    std::uniform_real_distribution<double> u(-2, 2);
    for (std::size_t k : {2u, 3u, 4u, 6u}) {
        for (int trial = 0; trial < 10; ++trial) {
            const auto d = names(k);
            const auto feats = LossModel::features(std::vector<double>(k, 1.0 / static_cast<double>(k))).size();
            std::vector<double> coef(feats);
            for (auto& c : coef) c = u(rng);
            const double c0 = u(rng);
            auto f = [&](const MixtureWeights& w) {
                const auto x = LossModel::features(w.weights);
                return c0 + std::inner_product(x.begin(), x.end(), coef.begin(), 0.0);
            };
            const auto evals = evaluate(sample_mixtures(4 * feats + 8, d, 1.0, 100 + trial), f);
            const auto model = fit_loss_model(evals);
            for (const auto& e : evals) CHECK(std::abs(model.predict(e.weights.weights) - e.loss) <= 1e-6);
        }
    }
}

TEST_CASE("fit_loss_model duplicate invariance") {
    const auto d = names(3);
    std::mt19937 rng(5);
    std::normal_distribution<double> noise(0, 0.05);
    auto evals = evaluate(sample_mixtures(40, d, 1.0, 9), [&](const MixtureWeights& w) { return bowl(w) + noise(rng); });
    auto doubled = evals;
    doubled.insert(doubled.end(), evals.begin(), evals.end());
    const auto a = fit_loss_model(evals);
    const auto b = fit_loss_model(doubled);
    for (const auto& w : sample_mixtures(300, d, 1.0, 77)) CHECK(std::abs(a.predict(w.weights) - b.predict(w.weights)) <= 1e-9);
}

TEST_CASE("fit_loss_model single domain predicts the mean") {
    const auto d = names(1);
    std::vector<ProxyEvaluation> evals{{{d, {1.0}}, 2.0}, {{d, {1.0}}, 4.0}, {{d, {1.0}}, 9.0}};
    const auto model = fit_loss_model(evals);
    CHECK(model.predict(std::vector<double>{1.0}) == doctest::Approx(5.0).epsilon(1e-9));
}

TEST_CASE("fit_loss_model errors") {
    CHECK_THROWS_AS(fit_loss_model(std::vector<ProxyEvaluation>{}), Error);
    std::vector<ProxyEvaluation> nan{{{names(2), {0.5, 0.5}}, std::nan("")}};
    CHECK_THROWS_AS(fit_loss_model(nan), Error);
    std::vector<ProxyEvaluation> mixed{{{names(2), {0.5, 0.5}}, 1.0}, {{{"x", "y"}, {0.5, 0.5}}, 1.0}};
    CHECK_THROWS_AS(fit_loss_model(mixed), Error);
    // fewer evaluations than features still solves
    std::vector<ProxyEvaluation> few{{{names(4), {0.25, 0.25, 0.25, 0.25}}, 1.0}, {{names(4), {1, 0, 0, 0}}, 2.0}};
    const auto m = fit_loss_model(few);
    CHECK(std::isfinite(m.predict(std::vector<double>{0.1, 0.2, 0.3, 0.4})));
}

TEST_CASE("optimize_mixture finds the known simplex minimizer") {
    const auto d = names(3);
    const auto model = fit_loss_model(evaluate(sample_mixtures(256, d, 1.0, 21), bowl));
    const auto r = optimize_mixture(model, 100000, 32, 5);
    check_simplex(r.weights);
    const double l1 = std::abs(r.weights.weights[0] - 0.6) + std::abs(r.weights.weights[1] - 0.3) +
                      std::abs(r.weights.weights[2] - 0.1);
    CHECK(l1 <= 0.05);
    const auto again = optimize_mixture(model, 100000, 32, 5);
    CHECK(again.weights.weights == r.weights.weights);
}

TEST_CASE("optimize_mixture single domain and preconditions") {
    const auto d = names(1);
    const auto model = fit_loss_model(std::vector<ProxyEvaluation>{{{d, {1.0}}, 3.0}});
    CHECK(optimize_mixture(model, 10, 2, 1).weights.weights == std::vector<double>{1.0});
    const auto m3 = fit_loss_model(evaluate(sample_mixtures(30, names(3), 1.0, 2), bowl));
    CHECK_THROWS_AS(optimize_mixture(m3, 5, 6, 1), Error);
    CHECK_THROWS_AS(optimize_mixture(m3, 5, 0, 1), Error);
}

TEST_CASE("argmin search is monotone in n_search") {
    const auto model = fit_loss_model(evaluate(sample_mixtures(100, names(3), 1.0, 8), bowl));
    double prev = INFINITY;
    for (std::size_t n = 1; n <= 4096; n *= 2) {
        const auto r = optimize_mixture(model, n, 1, 99);
        CHECK(r.predicted_loss <= prev);
        prev = r.predicted_loss;
    }
}

TEST_CASE("top-k search does not get worse as n_search grows") {
    for (std::uint64_t seed : {1u, 2u, 3u, 4u, 5u}) {
        const auto model = fit_loss_model(evaluate(sample_mixtures(100, names(4), 1.0, seed), [](const MixtureWeights& w) {
            double s = 0;
            for (std::size_t i = 0; i < 4; ++i) s += (w.weights[i] - 0.1 * static_cast<double>(i + 1)) * (w.weights[i] - 0.1 * static_cast<double>(i + 1));
            return s;
        }));
        double prev = INFINITY;
        for (std::size_t n : {32u, 64u, 256u, 1024u, 4096u, 16384u, 65536u}) {
            const auto r = optimize_mixture(model, n, 32, seed * 31);
            CHECK(r.predicted_loss <= prev + 1e-12);
            prev = r.predicted_loss;
        }
    }
}

TEST_CASE("prune_domains examples") {
    const MixtureWeights w{{"d1", "d2", "d3"}, {0.7, 0.2995, 0.0005}};
    const auto r = prune_domains(w, 1e-3);
    CHECK(r.pruned.domains == std::vector<std::string>{"d1", "d2"});
    CHECK(r.pruned.weights[0] == doctest::Approx(0.7003501750875438).epsilon(1e-15));
    CHECK(r.pruned.weights[1] == doctest::Approx(0.29964982491245623).epsilon(1e-15));
    CHECK(std::round(r.pruned.weights[0] * 1e4) / 1e4 == doctest::Approx(0.7004));
    CHECK(std::round(r.pruned.weights[1] * 1e4) / 1e4 == doctest::Approx(0.2996));
    CHECK(r.dropped == std::vector<std::string>{"d3"});
    check_simplex(r.pruned);

    const MixtureWeights even{{"a", "b"}, {0.5, 0.5}};
    const auto same = prune_domains(even, 1e-3);
    CHECK(same.pruned.weights == even.weights);
    CHECK(same.dropped.empty());

    const MixtureWeights one{{"only"}, {1.0}};
    const auto single = prune_domains(one, 0.5);
    CHECK(single.pruned.weights == std::vector<double>{1.0});
    CHECK(single.dropped.empty());

    CHECK_THROWS_AS(prune_domains(even, 0.6), Error);
    CHECK_THROWS_AS(prune_domains(even, 1.0), Error);
    CHECK_THROWS_AS(prune_domains(even, -0.1), Error);
}

TEST_CASE("NgramProxy prefers mixtures weighted toward matching domains") {
    std::vector<std::pair<std::string, std::vector<Document>>> shards(2);
    shards[0].first = "latin";
    shards[1].first = "digits";
    for (int i = 0; i < 40; ++i) {
        shards[0].second.push_back(doc("l" + std::to_string(i), "the quick brown fox jumps over the lazy dog again"));
        shards[1].second.push_back(doc("n" + std::to_string(i), "0123 4567 8901 2345 6789 0123 4567"));
    }
    const NgramProxy proxy(shards, 3, 0.5, 0.25, 2000);
    CHECK(proxy.domains() == std::vector<std::string>{"latin", "digits"});
    const double balanced = proxy({{"latin", "digits"}, {0.5, 0.5}});
    const double skewed = proxy({{"latin", "digits"}, {0.99, 0.01}});
    CHECK(std::isfinite(balanced));
    CHECK(balanced < skewed);
    CHECK(proxy({{"latin", "digits"}, {0.5, 0.5}}) == balanced);
    CHECK_THROWS_AS(proxy({{"a", "b"}, {0.5, 0.5}}), Error);
}

TEST_CASE("run_mixture_search end to end") {
    const auto d = names(3);
    auto run = [&](std::uint64_t seed) { return run_mixture_search(d, bowl, 64, 20000, 16, 1.0, 1e-3, seed); };
    const auto a = run(7);
    const auto b = run(7);
    CHECK(a.to_json() == b.to_json());
    check_simplex(a.search.weights);
    check_simplex(a.pruned.pruned);
    CHECK(a.evaluations.size() == 64);
    const auto j = a.to_json();
    for (const char* k : {"domains", "weights", "dropped", "predicted_loss"}) CHECK(j.contains(k));
}
