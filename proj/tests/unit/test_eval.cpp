#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>

#include "redforge/eval.hpp"

using namespace redforge;
using namespace redforge::eval;

namespace {

std::vector<EvalScore> row(const std::vector<double>& values, Metric m, const std::string& prefix) {
    std::vector<EvalScore> out;
    for (std::size_t i = 0; i < values.size(); ++i) out.push_back({prefix + std::to_string(i), m, values[i]});
    return out;
}

// Mean in hundredths, compared exactly against a published two-decimal value.
bool within_half_hundredth(const std::vector<double>& values, double published) {
    long long sum = 0;
    for (double v : values) sum += std::llround(v * 100);
    const long long n = static_cast<long long>(values.size());
    const long long target = std::llround(published * 100);
    return std::llabs(2 * sum - 2 * target * n) <= n;
}

std::string random_sentence(std::mt19937& rng, int n) {
    static const char* w[] = {"the", "cat", "dog", "sat", "on", "mat", "今天", "好", "a", "park"};
    std::string s;
    for (int i = 0; i < n; ++i) {
        if (i) s += ' ';
        s += w[rng() % 10];
    }
    return s;
}

}  // namespace

TEST_CASE("metric names round trip") {
    for (auto m : {Metric::accuracy, Metric::span_f1, Metric::bleu, Metric::chrf_pp}) CHECK(parse_metric(to_string(m)) == m);
    CHECK_THROWS_AS(parse_metric("rouge"), Error);
}

TEST_CASE("mc_accuracy examples") {
    const std::vector<std::string> gold{"A", "B", "C", "D"};
    CHECK(mc_accuracy(gold, gold) == 100.0);
    CHECK(mc_accuracy(std::vector<std::string>{"B", "C", "D", "A"}, gold) == 0.0);
    CHECK(mc_accuracy(std::vector<std::string>{"A", "B", "C", "A"}, gold) == 75.0);
    CHECK(mc_accuracy(std::vector<std::string>{" A", "B ", "C", "D"}, gold) == 100.0);
    CHECK_THROWS_AS(mc_accuracy(std::vector<std::string>{"A"}, gold), Error);
    CHECK_THROWS_AS(mc_accuracy(std::vector<std::string>{}, std::vector<std::string>{}), Error);
}

TEST_CASE("span_f1 examples") {
    CHECK(span_f1("a b c", "a b c") == 100.0);
    CHECK(span_f1("a b c", "b c d") == doctest::Approx(66.666666666666671).epsilon(1e-14));
    CHECK(span_f1("", "x") == 0.0);
    CHECK(span_f1("x", "") == 0.0);
    CHECK(span_f1("", "") == 100.0);
    CHECK(span_f1("a a b", "a b b") == doctest::Approx(200.0 / 3.0));
    CHECK(span_f1("高亮词", "高亮") == doctest::Approx(80.0));
}

TEST_CASE("span_f1 is symmetric and bounded") {
    std::mt19937 rng(3);
    for (int i = 0; i < 1000; ++i) {
        const auto a = random_sentence(rng, static_cast<int>(rng() % 6));
        const auto b = random_sentence(rng, static_cast<int>(rng() % 6));
        CHECK(span_f1(a, b) == span_f1(b, a));
        CHECK(span_f1(a, b) >= 0.0);
        CHECK(span_f1(a, b) <= 100.0);
    }
}

TEST_CASE("bleu examples") {
    const std::vector<std::string> ref{"the cat sat on the mat"};
    CHECK(bleu(ref, ref) == doctest::Approx(100.0).epsilon(1e-14));
    CHECK(bleu(std::vector<std::string>{"the cat sat on"}, std::vector<std::string>{"the cat sat on mat"}) ==
          doctest::Approx(77.880078307140494).epsilon(1e-13));
    CHECK(std::abs(bleu(std::vector<std::string>{"the cat sat on"}, std::vector<std::string>{"the cat sat on mat"}) -
                   77.88) <= 0.01);
    const std::vector<std::string> hyps{"the cat sat on the mat", "a dog ran in the park today"};
    const std::vector<std::string> refs{"the cat is on the mat", "a dog ran in a park today"};
    CHECK(bleu(hyps, refs) == doctest::Approx(40.016016019224992).epsilon(1e-13));
    CHECK_THROWS_AS(bleu(hyps, ref), Error);
    CHECK_THROWS_AS(bleu(std::vector<std::string>{}, std::vector<std::string>{}), Error);
}

TEST_CASE("bleu with zero overlap collapses toward zero") {
    std::string hyp, refs;
    for (int i = 0; i < 400; ++i) {
        hyp += "x" + std::to_string(i) + " ";
        refs += "y" + std::to_string(i) + " ";
    }
    const double b = bleu(std::vector<std::string>{hyp}, std::vector<std::string>{refs});
    CHECK(b > 0.0);
    CHECK(b < 0.05);
    CHECK(bleu(std::vector<std::string>{"p q r s"}, std::vector<std::string>{"w x y z"}) < 5.0);
}

TEST_CASE("bleu ignores whitespace layout") {
    std::mt19937 rng(5);
    for (int i = 0; i < 200; ++i) {
        const auto h = random_sentence(rng, 1 + static_cast<int>(rng() % 12));
        const auto r = random_sentence(rng, 1 + static_cast<int>(rng() % 12));
        std::string h2 = "  " + h;
        std::replace(h2.begin(), h2.end(), ' ', '\t');
        std::string r2 = r + "\n ";
        CHECK(bleu(std::vector<std::string>{h}, std::vector<std::string>{r}) ==
              bleu(std::vector<std::string>{h2}, std::vector<std::string>{r2}));
    }
}

TEST_CASE("chrf_pp matches the frozen oracle fixture") {
    CHECK(std::abs(chrf_pp("abc", "abd") - 29.166666666666668) <= 1e-6);
    CHECK(std::abs(chrf_pp("the cat sat on the mat", "the cat is on the mat") - 66.349562968430618) <= 1e-6);
    CHECK(std::abs(chrf_pp("a quick brown fox jumps", "the quick brown dog jumps over") - 44.059891535033366) <= 1e-6);
    CHECK(std::abs(chrf_pp("今天 天气 很好", "今天 天气 不错") - 40.833333333333336) <= 1e-6);
}

TEST_CASE("chrf_pp boundaries") {
    CHECK(chrf_pp("same text here", "same text here") == doctest::Approx(100.0).epsilon(1e-14));
    CHECK(chrf_pp("", "") == 100.0);
    CHECK(chrf_pp("abc", "xyz") == 0.0);
    CHECK(chrf_pp("", "xyz") == 0.0);
    CHECK(chrf_pp("a", "a") == doctest::Approx(100.0));
}

TEST_CASE("metrics stay in range on random inputs") {
    std::mt19937 rng(77);
    for (int i = 0; i < 500; ++i) {
        const auto h = random_sentence(rng, static_cast<int>(rng() % 10));
        const auto r = random_sentence(rng, 1 + static_cast<int>(rng() % 10));
        for (double v : {span_f1(h, r), chrf_pp(h, r), bleu(std::vector<std::string>{h}, std::vector<std::string>{r})}) {
            CHECK(v >= 0.0);
            CHECK(v <= 100.0 + 1e-9);
        }
        CHECK(chrf_pp(r, r) == doctest::Approx(100.0));
        CHECK(span_f1(r, r) == 100.0);
    }
}

TEST_CASE("table averages reproduce published rows") {
    const std::vector<double> qwen_sns{49.50, 73.80, 42.37, 45.32, 45.41, 88.08, 33.76, 44.65};
    const std::vector<double> qwen_trans{31.43, 55.91, 38.36, 36.48};
    const std::vector<double> domain_row{72.18, 88.02, 65.09, 63.98, 51.86, 70.47, 74.73, 48.69};
    const std::vector<double> glm{56.03, 77.67, 38.03, 45.29, 47.01, 51.30, 27.51, 45.52};

    auto scores = row(qwen_sns, Metric::accuracy, "sns");
    auto trans = row(qwen_trans, Metric::bleu, "trans");
    scores.insert(scores.end(), trans.begin(), trans.end());
    const auto r = aggregate_report(scores);
    REQUIRE(r.sns_avg);
    REQUIRE(r.trans_avg);
    CHECK(round2(*r.sns_avg) == 52.86);
    CHECK(round2(*r.trans_avg) == 40.55);
    CHECK(*r.sns_avg == doctest::Approx(52.86125));
    CHECK(*r.trans_avg == doctest::Approx(40.545));
    CHECK(within_half_hundredth(qwen_sns, 52.86));
    CHECK(within_half_hundredth(qwen_trans, 40.55));

    const auto red = aggregate_report(row(domain_row, Metric::span_f1, "t"));
    CHECK(round2(*red.sns_avg) == 66.88);
    CHECK(within_half_hundredth(domain_row, 66.88));
    CHECK_FALSE(red.trans_avg);

    const auto g = aggregate_report(row(glm, Metric::accuracy, "t"));
    CHECK(round2(*g.sns_avg) == 48.55);
    CHECK(within_half_hundredth(glm, 48.55));
    CHECK_FALSE(within_half_hundredth(glm, 48.56));
}

TEST_CASE("aggregate_report rules") {
    const auto single = aggregate_report(std::vector<EvalScore>{{"x", Metric::accuracy, 37.25}});
    CHECK(*single.sns_avg == 37.25);
    const std::vector<EvalScore> dup{{"x", Metric::accuracy, 1}, {"x", Metric::accuracy, 2}};
    CHECK_THROWS_AS(aggregate_report(dup), Error);
    const std::vector<EvalScore> same_task{{"x", Metric::bleu, 1}, {"x", Metric::chrf_pp, 2}};
    CHECK(*aggregate_report(same_task).trans_avg == 1.5);
    CHECK_THROWS_AS(aggregate_report(std::vector<EvalScore>{{"x", Metric::accuracy, 100.5}}), Error);
    CHECK_THROWS_AS(aggregate_report(std::vector<EvalScore>{{"x", Metric::accuracy, -1}}), Error);
    CHECK_THROWS_AS(aggregate_report(std::vector<EvalScore>{{"x", Metric::accuracy, NAN}}), Error);
    const auto empty = aggregate_report(std::vector<EvalScore>{});
    CHECK_FALSE(empty.sns_avg);
    CHECK_FALSE(empty.trans_avg);
}

TEST_CASE("aggregate averages are permutation invariant") {
    std::mt19937 rng(1);
    std::uniform_real_distribution<double> u(0, 100);
    for (int trial = 0; trial < 200; ++trial) {
        std::vector<EvalScore> s;
        for (int i = 0; i < 12; ++i)
            s.push_back({"t" + std::to_string(i), i % 3 == 0 ? Metric::bleu : Metric::accuracy, u(rng)});
        const auto a = aggregate_report(s);
        std::shuffle(s.begin(), s.end(), rng);
        const auto b = aggregate_report(s);
        CHECK(*a.sns_avg == doctest::Approx(*b.sns_avg).epsilon(1e-13));
        CHECK(*a.trans_avg == doctest::Approx(*b.trans_avg).epsilon(1e-13));
        CHECK(round2(*a.sns_avg) == round2(*b.sns_avg));
    }
}

TEST_CASE("round2") {
    CHECK(round2(48.545) == 48.55);
    CHECK(round2(40.545) == 40.55);
    CHECK(round2(52.86125) == 52.86);
    CHECK(round2(66.8775) == 66.88);
    CHECK(round2(0.0) == 0.0);
    CHECK(round2(100.0) == 100.0);
    CHECK(round2(1.005) == 1.01);
    CHECK(round2(1.0049) == 1.0);
    CHECK(round2(-2.345) == -2.35);
}

TEST_CASE("report json and text layout") {
    std::vector<EvalScore> s{{"Note Taxonomy", Metric::accuracy, 75.0}, {"ZH-EN", Metric::bleu, 40.0},
                             {"ZH-EN", Metric::chrf_pp, 60.0}};
    const auto r = aggregate_report(s);
    const auto j = r.to_json();
    CHECK(j["sns"]["avg"] == 75.0);
    CHECK(j["trans"]["avg"] == 50.0);
    CHECK(j["trans"]["columns"].size() == 2);
    CHECK(j["sns"]["columns"][0]["task"] == "Note Taxonomy");
    const auto text = r.to_text();
    CHECK(text.find("Note Taxonomy") != std::string::npos);
    CHECK(text.find("SNS Avg.") != std::string::npos);
    CHECK(text.find("Trans Avg.") != std::string::npos);
    CHECK(text.find("50.00") != std::string::npos);

    const auto back = score_from_json(json::parse(to_json(s[1]).dump()));
    CHECK(back.task == "ZH-EN");
    CHECK(back.metric == Metric::bleu);
    CHECK(back.value == 40.0);
}

TEST_CASE("evaluate_files") {
    namespace fs = std::filesystem;
    const auto dir = fs::temp_directory_path() / "redforge_eval_test";
    fs::create_directories(dir);
    auto write = [&](const std::string& name, const std::string& body) {
        std::ofstream(dir / name) << body;
        return dir / name;
    };
    const auto gold = write("gold.jsonl", "{\"id\":\"1\",\"text\":\"A\"}\n{\"id\":\"2\",\"text\":\"B\"}\n");
    const auto pred = write("pred.jsonl", "{\"id\":\"1\",\"text\":\"A\"}\n{\"id\":\"2\",\"text\":\"C\"}\n");
    const auto bad_ids = write("bad.jsonl", "{\"id\":\"9\",\"text\":\"A\"}\n{\"id\":\"2\",\"text\":\"B\"}\n");
    const auto short_file = write("short.jsonl", "{\"text\":\"A\"}\n");
    const auto s = evaluate_files("Note Taxonomy", Metric::accuracy, pred, gold);
    CHECK(s.value == 50.0);
    CHECK(s.task == "Note Taxonomy");
    CHECK(evaluate_files("t", Metric::span_f1, gold, gold).value == 100.0);
    CHECK(evaluate_files("t", Metric::bleu, gold, gold).value == doctest::Approx(100.0));
    CHECK(evaluate_files("t", Metric::chrf_pp, pred, gold).value == doctest::Approx(50.0));
    CHECK_THROWS_AS(evaluate_files("t", Metric::accuracy, bad_ids, gold), Error);
    CHECK_THROWS_AS(evaluate_files("t", Metric::accuracy, short_file, gold), Error);
    fs::remove_all(dir);
}
