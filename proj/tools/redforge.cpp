#include <CLI11.hpp>

#include <cstdlib>
#include <functional>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "redforge/config.hpp"
#include "redforge/pipeline.hpp"
#include "redforge/pref.hpp"

using namespace redforge;
namespace fs = std::filesystem;
namespace rp = redforge::pipeline;

namespace {

struct Common {
    std::string config;
    std::size_t threads = 0;

    PipelineConfig load() const {
        if (config.empty()) return {};
        return load_config(config, false);
    }
};

std::optional<fs::path> opt_path(const std::string& s) {
    if (s.empty()) return std::nullopt;
    return fs::path(s);
}

template <class Fn>
int guarded(int code, Fn&& fn) {
    try {
        fn();
        return 0;
    } catch (const std::exception& e) {
        std::cerr << "redforge: " << e.what() << '\n';
        return code;
    }
}

rp::Shards parse_domains(const std::string& spec) {
    rp::Shards shards;
    std::size_t pos = 0;
    while (pos <= spec.size()) {
        const auto comma = spec.find(',', pos);
        const auto item = spec.substr(pos, comma == std::string::npos ? std::string::npos : comma - pos);
        const auto eq = item.find('=');
        if (eq == std::string::npos || eq == 0 || eq + 1 == item.size())
            throw Error("--domains entries must look like name=path, got '" + item + "'");
        shards.emplace_back(item.substr(0, eq), load_jsonl_strict<Document>(item.substr(eq + 1)));
        if (comma == std::string::npos) break;
        pos = comma + 1;
    }
    return shards;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"redforge: corpus, SFT and preference data pipeline"};
    app.require_subcommand(1);
    Common common;
    app.add_option("--threads", common.threads, "Worker cap (default: REDFORGE_THREADS or all cores)");
    int status = 0;
    std::vector<std::pair<CLI::App*, std::function<void()>>> handlers;

    // filter
    auto* filter_cmd = app.add_subcommand("filter", "Rule and quality filtering");
    struct {
        std::string in, out, rejects, report, verdicts, reference;
        std::optional<double> retention;
    } fa;
    filter_cmd->add_option("--config", common.config);
    filter_cmd->add_option("--in", fa.in, "Document JSONL (default: [filter] corpus)");
    filter_cmd->add_option("--out", fa.out, "Kept documents")->required();
    filter_cmd->add_option("--rejects", fa.rejects);
    filter_cmd->add_option("--report", fa.report);
    filter_cmd->add_option("--verdicts", fa.verdicts);
    filter_cmd->add_option("--reference", fa.reference, "Seed corpus for the quality scorer");
    filter_cmd->add_option("--retention-target", fa.retention);
    handlers.emplace_back(filter_cmd, [&] {
        status = guarded(rp::exit_code(rp::Stage::filter), [&] {
            auto cfg = common.load();
            if (fa.retention) cfg.filter.retention_target = *fa.retention;
            rp::FilterPaths p;
            if (!fa.in.empty()) p.in = fa.in;
            else if (cfg.filter.corpus) p.in = *cfg.filter.corpus;
            else throw Error("no input corpus: pass --in or set [filter] corpus");
            p.reference = fa.reference.empty() ? cfg.filter.reference : opt_path(fa.reference);
            p.out = fa.out;
            p.rejects = opt_path(fa.rejects);
            p.report = opt_path(fa.report);
            p.verdicts = opt_path(fa.verdicts);
            rp::filter_stage(cfg.filter, p);
        });
    });

    // pack
    auto* pack_cmd = app.add_subcommand("pack", "Group, segment and pack documents");
    struct {
        std::string in, out, groups, orphans, report;
        std::optional<std::size_t> threshold;
    } pa;
    pack_cmd->add_option("--config", common.config);
    pack_cmd->add_option("--threshold", pa.threshold);
    pack_cmd->add_option("--in", pa.in)->required();
    pack_cmd->add_option("--out", pa.out)->required();
    pack_cmd->add_option("--groups", pa.groups);
    pack_cmd->add_option("--orphans", pa.orphans);
    pack_cmd->add_option("--report", pa.report);
    handlers.emplace_back(pack_cmd, [&] {
        status = guarded(rp::exit_code(rp::Stage::pack), [&] {
            auto cfg = common.load();
            if (pa.threshold) cfg.pack.threshold = *pa.threshold;
            rp::pack_stage(cfg.pack, {pa.in, pa.out, opt_path(pa.groups), opt_path(pa.orphans), opt_path(pa.report)});
        });
    });

    // mix
    auto* mix_cmd = app.add_subcommand("mix", "Search domain mixture weights");
    struct {
        std::string domains, in, out;
        std::optional<std::size_t> samples, search, top_k;
        std::optional<std::uint64_t> seed;
    } ma;
    mix_cmd->add_option("--config", common.config);
    auto* dom_opt = mix_cmd->add_option("--domains", ma.domains, "name=path,name=path,...");
    mix_cmd->add_option("--in", ma.in, "Single corpus split by its domain field")->excludes(dom_opt);
    mix_cmd->add_option("--samples", ma.samples);
    mix_cmd->add_option("--search", ma.search);
    mix_cmd->add_option("--top-k", ma.top_k);
    mix_cmd->add_option("--seed", ma.seed);
    mix_cmd->add_option("--out", ma.out)->required();
    handlers.emplace_back(mix_cmd, [&] {
        status = guarded(rp::exit_code(rp::Stage::mix), [&] {
            auto cfg = common.load();
            if (ma.samples) cfg.mixture.samples = *ma.samples;
            if (ma.search) cfg.mixture.search = *ma.search;
            if (ma.top_k) cfg.mixture.top_k = *ma.top_k;
            if (ma.seed) cfg.seed = *ma.seed;
            rp::Shards shards;
            if (!ma.domains.empty()) shards = parse_domains(ma.domains);
            else if (!ma.in.empty()) shards = rp::shards_by_domain(load_jsonl_strict<Document>(ma.in));
            else throw Error("pass --domains or --in");
            rp::mix_stage(cfg.mixture, cfg.filter, shards, cfg.seed, ma.out);
        });
    });

    // build-sft
    auto* sft_cmd = app.add_subcommand("build-sft", "Two-step SFT dataset");
    struct {
        std::string sns, general, r1, r2, out1, out2, stats, plan, recipe, histogram, style;
        std::optional<std::uint64_t> seed;
        std::optional<std::size_t> max_len;
        bool allow_replacement = false;
    } sa;
    sft_cmd->add_option("--config", common.config);
    sft_cmd->add_option("--sns", sa.sns, "TaskSample JSONL (default: [sft] sns)");
    sft_cmd->add_option("--general", sa.general, "General instruction JSONL (default: [sft] general)");
    sft_cmd->add_option("--r1", sa.r1, "Step-one sns:general ratio");
    sft_cmd->add_option("--r2", sa.r2, "Step-two sns:general ratio");
    sft_cmd->add_option("--seed", sa.seed);
    sft_cmd->add_option("--style", sa.style);
    sft_cmd->add_option("--max-len", sa.max_len);
    sft_cmd->add_flag("--allow-replacement", sa.allow_replacement);
    sft_cmd->add_option("--out-step1", sa.out1)->required();
    sft_cmd->add_option("--out-step2", sa.out2)->required();
    sft_cmd->add_option("--stats", sa.stats)->required();
    sft_cmd->add_option("--plan", sa.plan);
    sft_cmd->add_option("--recipe", sa.recipe, "Training hyperparameters (default: recipe.json next to --stats)");
    sft_cmd->add_option("--histogram", sa.histogram);
    handlers.emplace_back(sft_cmd, [&] {
        status = guarded(rp::exit_code(rp::Stage::sft), [&] {
            auto cfg = common.load();
            if (!sa.r1.empty()) cfg.sft.r1 = parse_ratio(sa.r1);
            if (!sa.r2.empty()) cfg.sft.r2 = parse_ratio(sa.r2);
            if (!sa.style.empty()) cfg.sft.style = sa.style;
            if (sa.max_len) cfg.sft.max_len = *sa.max_len;
            if (sa.allow_replacement) cfg.sft.allow_replacement = true;
            if (sa.seed) cfg.seed = *sa.seed;
            rp::SftPaths p;
            if (!sa.sns.empty()) p.sns = sa.sns;
            else if (cfg.sft.sns) p.sns = *cfg.sft.sns;
            else throw Error("pass --sns or set [sft] sns");
            if (!sa.general.empty()) p.general = sa.general;
            else if (cfg.sft.general) p.general = *cfg.sft.general;
            else throw Error("pass --general or set [sft] general");
            p.out_step1 = sa.out1;
            p.out_step2 = sa.out2;
            p.stats = sa.stats;
            p.plan = opt_path(sa.plan);
            p.recipe = sa.recipe.empty() ? fs::path(sa.stats).parent_path() / "recipe.json" : fs::path(sa.recipe);
            p.histogram = opt_path(sa.histogram);
            rp::sft_stage(cfg, p, cfg.seed);
        });
    });

    // build-pref
    auto* pref_cmd = app.add_subcommand("build-pref", "Preference pairs");
    struct {
        std::string mc, log, judged, cal, out, report;
        std::optional<double> tau;
    } ra;
    pref_cmd->add_option("--config", common.config);
    pref_cmd->add_option("--mc", ra.mc);
    pref_cmd->add_option("--pred-log", ra.log);
    pref_cmd->add_option("--judged", ra.judged);
    pref_cmd->add_option("--calibration", ra.cal);
    pref_cmd->add_option("--tau", ra.tau);
    pref_cmd->add_option("--out", ra.out)->required();
    pref_cmd->add_option("--report", ra.report);
    handlers.emplace_back(pref_cmd, [&] {
        status = guarded(rp::exit_code(rp::Stage::pref), [&] {
            auto cfg = common.load();
            if (ra.tau) cfg.pref.tau = *ra.tau;
            auto pick = [](const std::string& flag, const std::optional<fs::path>& fallback) {
                return flag.empty() ? fallback : opt_path(flag);
            };
            rp::pref_stage(cfg.pref, {pick(ra.mc, cfg.pref.mc), pick(ra.log, cfg.pref.pred_log),
                                      pick(ra.judged, cfg.pref.judged), pick(ra.cal, cfg.pref.calibration), ra.out,
                                      opt_path(ra.report)});
        });
    });

    // dpo-eval
    auto* dpo_cmd = app.add_subcommand("dpo-eval", "Mean DPO objective over trainer log-probabilities");
    struct {
        std::string pairs, out;
        double beta = 0.1;
        double coef = 0.3;
    } da;
    dpo_cmd->add_option("--pairs", da.pairs, "JSONL of policy/ref chosen/rejected log-probs")->required();
    dpo_cmd->add_option("--beta", da.beta);
    dpo_cmd->add_option("--coef", da.coef);
    dpo_cmd->add_option("--out", da.out);
    handlers.emplace_back(dpo_cmd, [&] {
        status = guarded(rp::exit_code(rp::Stage::pref), [&] {
            const auto records = load_jsonl_strict<pref::LogProbRecord>(da.pairs);
            const auto r = pref::evaluate_dpo_batch(records, {da.beta, da.coef});
            if (da.out.empty()) std::cout << r.to_json().dump(2) << '\n';
            else write_json(da.out, r.to_json());
        });
    });

    // eval
    auto* eval_cmd = app.add_subcommand("eval", "Score one benchmark task");
    struct {
        std::string task, metric, pred, gold, out;
    } ea;
    eval_cmd->add_option("--task", ea.task)->required();
    eval_cmd->add_option("--metric", ea.metric, "accuracy | span_f1 | bleu | chrf_pp")->required();
    eval_cmd->add_option("--pred", ea.pred)->required();
    eval_cmd->add_option("--gold", ea.gold)->required();
    eval_cmd->add_option("--out", ea.out)->required();
    handlers.emplace_back(eval_cmd, [&] {
        status = guarded(rp::exit_code(rp::Stage::eval), [&] {
            const auto s = eval::evaluate_files(ea.task, eval::parse_metric(ea.metric), ea.pred, ea.gold);
            write_json(ea.out, eval::to_json(s));
        });
    });

    // report
    auto* report_cmd = app.add_subcommand("report", "Benchmark table or run summary");
    struct {
        std::string scores, out, text, stats, run_dir, csv;
    } pa2;
    auto* scores_opt = report_cmd->add_option("--scores", pa2.scores, "Directory of score JSON files");
    auto* run_opt = report_cmd->add_option("--run-dir", pa2.run_dir, "Summarize a pipeline run directory");
    scores_opt->excludes(run_opt);
    report_cmd->add_option("--out", pa2.out);
    report_cmd->add_option("--text", pa2.text, "Plain-text table");
    report_cmd->add_option("--stats", pa2.stats, "SFT stats JSON whose length histogram is printed");
    report_cmd->add_option("--csv", pa2.csv, "CSV summary (with --run-dir)");
    handlers.emplace_back(report_cmd, [&] {
        status = guarded(1, [&] {
            if (!pa2.run_dir.empty()) {
                const auto s = rp::report_stats(pa2.run_dir);
                if (pa2.out.empty()) std::cout << s.text;
                else write_file(pa2.out, s.text);
                if (!pa2.csv.empty()) write_file(pa2.csv, s.csv);
                return;
            }
            if (pa2.scores.empty()) throw Error("pass --scores or --run-dir");
            const auto scores = rp::load_scores(pa2.scores);
            const auto report = eval::aggregate_report(scores);
            if (!pa2.out.empty()) write_json(pa2.out, report.to_json());
            std::string text = report.to_text();
            if (!pa2.stats.empty()) {
                const auto j = json::parse(read_file(pa2.stats));
                sft::CorpusStats st;
                st.n_samples = j.value("n_samples", std::size_t{0});
                st.median = j.value("median", std::size_t{0});
                st.p95 = j.value("p95", std::size_t{0});
                st.max = j.value("max", std::size_t{0});
                for (const auto& b : j.value("histogram", json::array()))
                    st.histogram.emplace_back(b.at("le").get<std::size_t>(), b.at("count").get<std::size_t>());
                text += "\n" + sft::render_histogram(st);
            }
            if (!pa2.text.empty()) write_file(pa2.text, text);
            else std::cout << text;
        });
    });

    // run
    auto* run_cmd = app.add_subcommand("run", "Run every stage from one config");
    struct {
        std::string config, out = "run";
        std::optional<std::uint64_t> seed;
    } ua;
    run_cmd->add_option("--config", ua.config)->required();
    run_cmd->add_option("--out", ua.out, "Run directory");
    run_cmd->add_option("--seed", ua.seed);
    handlers.emplace_back(run_cmd, [&] {
        int code = 0;
        status = guarded(2, [&] {
            rp::RunOptions o;
            o.config = ua.config;
            o.out_dir = ua.out;
            o.seed = ua.seed;
            o.command_line.assign(argv, argv + argc);
            const auto m = rp::run_pipeline(o, std::cerr);
            code = m.exit_code;
            if (m.exit_code == 0) std::cout << read_file(fs::path(ua.out) / "summary.txt");
        });
        if (status == 0) status = code;
    });

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    }
    if (common.threads) set_thread_limit(common.threads);
    for (auto& [cmd, fn] : handlers)
        if (cmd->parsed()) fn();
    return status;
}
