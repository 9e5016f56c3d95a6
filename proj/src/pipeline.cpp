#include "redforge/pipeline.hpp"

#include <algorithm>
#include <iomanip>
#include <map>
#include <sstream>

#include "redforge/digest.hpp"
#include "redforge/rng.hpp"

#ifndef REDFORGE_VERSION
#define REDFORGE_VERSION "0.0.0"
#endif

namespace redforge::pipeline {

std::string_view to_string(Stage s) {
    switch (s) {
        case Stage::filter: return "filter";
        case Stage::pack: return "pack";
        case Stage::mix: return "mix";
        case Stage::sft: return "build-sft";
        case Stage::pref: return "build-pref";
        case Stage::eval: return "eval";
    }
    return "";
}

int exit_code(Stage s) { return 10 * (static_cast<int>(s) + 1); }

FileDigest digest_of(const fs::path& file, const std::string& label) { return {label, sha256_file(file)}; }

namespace {

void write_if(const std::optional<fs::path>& p, const ordered_json& j) {
    if (p) write_json(*p, j);
}

}  // namespace

// ---- filter -------------------------------------------------------------

std::vector<fs::path> filter_stage(const FilterConfig& cfg, const FilterPaths& p) {
    validate_filter(cfg);
    std::vector<fs::path> inputs{p.in};
    const auto corpus = load_jsonl_strict<Document>(p.in);

    std::vector<Document> seed_corpus;
    if (p.reference) {
        seed_corpus = load_jsonl_strict<Document>(*p.reference);
        inputs.push_back(*p.reference);
    } else {
        for (const auto& d : corpus)
            if (filter::apply_rule_filters(d, cfg).decision == filter::Decision::keep) seed_corpus.push_back(d);
    }
    if (seed_corpus.empty()) throw Error("no documents available to train the quality scorer");
    const auto scorer = filter::train_quality_scorer(seed_corpus, cfg.ngram_order, cfg.smoothing_k);
    const auto result = filter::run_filter(corpus, cfg, scorer);

    write_jsonl(p.out, result.kept);
    if (p.rejects) write_jsonl(*p.rejects, result.rejected);
    if (p.verdicts) {
        auto out = open_output(*p.verdicts);
        for (const auto& v : result.verdicts) {
            ordered_json j;
            j["id"] = v.doc_id;
            j["decision"] = v.decision == filter::Decision::keep ? "keep" : "reject";
            ordered_json hits = ordered_json::array();
            for (auto h : v.rule_hits) hits.push_back(filter::to_string(h));
            j["rule_hits"] = std::move(hits);
            j["quality_score"] = v.quality_score ? ordered_json(*v.quality_score) : ordered_json(nullptr);
            j["reason"] = v.reason;
            out << j.dump() << '\n';
        }
    }
    write_if(p.report, result.report.to_json());
    return inputs;
}

// ---- pack ---------------------------------------------------------------

std::vector<fs::path> pack_stage(const PackConfig& cfg, const PackPaths& p) {
    validate_pack(cfg);
    const auto docs = load_jsonl_strict<Document>(p.in);
    const auto result = pack::pack_corpus(docs, cfg.threshold);
    {
        auto out = open_output(p.out);
        for (const auto& s : result.sequences) out << pack::to_json(s).dump() << '\n';
    }
    if (p.groups) {
        auto out = open_output(*p.groups);
        for (const auto& g : result.grouping.groups) out << pack::to_json(g).dump() << '\n';
    }
    if (p.orphans) write_jsonl(*p.orphans, result.grouping.orphans);
    write_if(p.report, result.report.to_json());
    return {p.in};
}

// ---- mix ----------------------------------------------------------------

Shards shards_by_domain(std::vector<Document> docs) {
    std::map<std::string, std::vector<Document>> by;
    for (auto& d : docs) by[d.domain].push_back(std::move(d));
    Shards out;
    for (auto& [k, v] : by) out.emplace_back(k, std::move(v));
    return out;
}

mix::MixtureRun mix_stage(const MixtureConfig& cfg, const FilterConfig& lm, const Shards& shards, std::uint64_t seed,
                          const fs::path& out) {
    validate_mixture(cfg);
    if (shards.empty()) throw Error("mixture search needs at least one domain");
    for (const auto& [name, docs] : shards)
        if (docs.empty()) throw Error("domain '" + name + "' has no documents");
    const mix::NgramProxy proxy(shards, lm.ngram_order, lm.smoothing_k, cfg.heldout_fraction, cfg.max_heldout_chars);
    auto run = mix::run_mixture_search(proxy.domains(), std::cref(proxy), cfg.samples, cfg.search, cfg.top_k,
                                       cfg.alpha, cfg.prune_epsilon, seed);
    write_json(out, run.to_json());
    return run;
}

// ---- build-sft ----------------------------------------------------------

std::vector<fs::path> sft_stage(const PipelineConfig& cfg, const SftPaths& p, std::uint64_t seed) {
    validate_sft(cfg.sft);
    const auto samples = load_jsonl_strict<TaskSample>(p.sns);
    const auto general = load_jsonl_strict<sft::InstructionRecord>(p.general);
    if (samples.empty()) throw Error("no SNS task samples in " + p.sns.string());

    const sft::TaskRegistry registry(cfg.sft.extra_tasks);
    for (std::size_t i = 0; i < samples.size(); ++i) {
        const auto issues = sft::validate_task_sample(samples[i], registry);
        if (!issues.empty())
            throw Error(p.sns.string() + ": sample " + std::to_string(i + 1) + ": " +
                        std::string(sft::to_string(issues.front().code)) + ": " + issues.front().message);
    }

    const auto rendered = parallel_map<sft::InstructionRecord>(
        samples.size(), [&](std::size_t i) { return sft::render_sample(samples[i], cfg.sft.style); });

    std::map<std::string, sft::SftExample> by_id;
    std::vector<std::string> sns_ids, general_ids;
    for (std::size_t i = 0; i < rendered.size(); ++i) {
        auto id = "sns-" + std::to_string(i);
        sns_ids.push_back(id);
        by_id.emplace(id, sft::SftExample{id, Source::sns, rendered[i]});
    }
    for (std::size_t i = 0; i < general.size(); ++i) {
        auto id = "gen-" + std::to_string(i);
        general_ids.push_back(id);
        by_id.emplace(id, sft::SftExample{id, Source::general, general[i]});
    }

    const auto plan =
        sft::plan_two_step_mix(sns_ids, general_ids, cfg.sft.r1, cfg.sft.r2, seed, cfg.sft.allow_replacement);
    auto write_step = [&](const sft::DatasetManifest& m, const fs::path& path) {
        std::vector<sft::SftExample> rows;
        rows.reserve(m.ids.size());
        for (const auto& id : m.ids) rows.push_back(by_id.at(id));
        write_jsonl(path, rows);
    };
    write_step(plan.step1, p.out_step1);
    write_step(plan.step2, p.out_step2);

    std::vector<sft::LabeledLength> lengths(rendered.size() + general.size());
    parallel_for(lengths.size(), [&](std::size_t i) {
        auto& l = lengths[i];
        if (i < rendered.size()) {
            l.tokens = sft::rendered_length(rendered[i]);
            l.task = samples[i].task;
            l.capability = samples[i].capability;
            l.primary_label = samples[i].primary_label;
            l.secondary_label = samples[i].secondary_label;
        } else {
            l.tokens = sft::rendered_length(general[i - rendered.size()]);
            l.task = "general";
        }
    });
    const auto stats = sft::corpus_stats(lengths, cfg.sft.max_len);
    write_json(p.stats, stats.to_json());
    write_if(p.plan, sft::to_json(plan));
    write_if(p.recipe, recipe_manifest(cfg));
    if (p.histogram) write_file(*p.histogram, sft::render_histogram(stats));
    return {p.sns, p.general};
}

// ---- build-pref ---------------------------------------------------------

std::vector<fs::path> pref_stage(const PrefConfig& cfg, const PrefPaths& p) {
    validate_pref(cfg);
    std::vector<fs::path> inputs;
    auto load = [&]<class T>(const std::optional<fs::path>& path, std::vector<T>& into) {
        if (!path) return;
        into = load_jsonl_strict<T>(*path);
        inputs.push_back(*path);
    };
    std::vector<TaskSample> mc;
    std::vector<pref::PredictionLogEntry> log;
    std::vector<pref::JudgedCandidate> judged;
    pref::JudgeCalibration cal;
    load(p.mc, mc);
    load(p.pred_log, log);
    load(p.judged, judged);
    load(p.calibration, cal.items);

    const auto data = pref::build_pref_dataset(mc, log, judged, cal, pref::PrefConfig{cfg.tau});
    write_jsonl(p.out, data.pairs);
    write_if(p.report, data.report.to_json());
    return inputs;
}

// ---- eval ---------------------------------------------------------------

std::vector<eval::EvalScore> load_scores(const fs::path& dir) {
    if (!fs::is_directory(dir)) throw Error("score directory " + dir.string() + " does not exist");
    std::vector<fs::path> files;
    for (const auto& e : fs::directory_iterator(dir))
        if (e.is_regular_file() && e.path().extension() == ".json") files.push_back(e.path());
    std::sort(files.begin(), files.end());
    std::vector<eval::EvalScore> out;
    for (const auto& f : files) {
        try {
            out.push_back(eval::score_from_json(json::parse(read_file(f))));
        } catch (const std::exception& e) {
            throw Error(f.string() + ": " + e.what());
        }
    }
    return out;
}

std::vector<fs::path> eval_stage(const EvalConfig& cfg, const fs::path& scores_dir, const fs::path& report_json,
                                 const std::optional<fs::path>& report_text) {
    fs::create_directories(scores_dir);
    std::vector<fs::path> inputs;
    std::vector<eval::EvalScore> scores;
    for (std::size_t i = 0; i < cfg.tasks.size(); ++i) {
        const auto& t = cfg.tasks[i];
        auto s = eval::evaluate_files(t.task, eval::parse_metric(t.metric), t.pred, t.gold);
        inputs.push_back(t.pred);
        inputs.push_back(t.gold);
        std::ostringstream name;
        name << std::setw(2) << std::setfill('0') << i << '_' << t.metric << ".json";
        write_json(scores_dir / name.str(), eval::to_json(s));
        scores.push_back(std::move(s));
    }
    const auto report = eval::aggregate_report(scores);
    write_json(report_json, report.to_json());
    if (report_text) write_file(*report_text, report.to_text());
    return inputs;
}

// ---- staging ------------------------------------------------------------

StagingDir::StagingDir(fs::path final_dir) : final_(std::move(final_dir)) {
    tmp_ = final_.parent_path() / ("." + final_.filename().string() + ".tmp");
    fs::remove_all(tmp_);
    fs::create_directories(tmp_);
}

StagingDir::~StagingDir() {
    if (!committed_) {
        std::error_code ec;
        fs::remove_all(tmp_, ec);
    }
}

void StagingDir::commit() {
    const auto old = final_.parent_path() / ("." + final_.filename().string() + ".old");
    fs::remove_all(old);
    if (fs::exists(final_)) fs::rename(final_, old);
    fs::rename(tmp_, final_);
    fs::remove_all(old);
    committed_ = true;
}

// ---- run ----------------------------------------------------------------

namespace {

ordered_json digests_json(const std::vector<FileDigest>& ds) {
    ordered_json a = ordered_json::array();
    for (const auto& d : ds) a.push_back({{"path", d.path}, {"sha256", d.sha256}});
    return a;
}

std::vector<fs::path> sorted_files(const fs::path& dir) {
    std::vector<fs::path> out;
    for (const auto& e : fs::recursive_directory_iterator(dir))
        if (e.is_regular_file()) out.push_back(e.path());
    std::sort(out.begin(), out.end());
    return out;
}

std::string generic(const fs::path& p) { return p.generic_string(); }

}  // namespace

ordered_json RunManifest::to_json() const {
    ordered_json j;
    j["command_line"] = command_line;
    j["config"] = {{"path", config_path}, {"sha256", config_sha256}};
    j["seed"] = seed;
    j["version"] = version;
    j["inputs"] = digests_json(inputs);
    j["outputs"] = digests_json(outputs);
    ordered_json st = ordered_json::array();
    for (const auto& s : stages) {
        ordered_json e;
        e["stage"] = to_string(s.stage);
        e["status"] = s.ok ? "ok" : "failed";
        e["seconds"] = s.seconds;
        if (!s.ok) {
            e["exit_code"] = pipeline::exit_code(s.stage);
            e["error"] = s.error;
        }
        st.push_back(std::move(e));
    }
    j["stages"] = std::move(st);
    j["duration_seconds"] = duration_seconds;
    j["exit_code"] = exit_code;
    return j;
}

RunManifest run_pipeline(const RunOptions& opts, std::ostream& log) {
    using clock = std::chrono::steady_clock;
    const auto t0 = clock::now();
    RunManifest m;
    m.command_line = opts.command_line;
    m.version = REDFORGE_VERSION;
    m.config_path = generic(opts.config);

    PipelineConfig cfg = load_config(opts.config, false);
    m.config_sha256 = sha256_file(opts.config);
    if (opts.seed) cfg.seed = *opts.seed;
    m.seed = cfg.seed;

    const fs::path& out = opts.out_dir;
    fs::create_directories(out);
    for (const char* f : {"summary.txt", "summary.csv"}) fs::remove(out / f);
    std::map<std::string, std::string> input_digests;

    auto dir_of = [&](Stage s) {
        switch (s) {
            case Stage::filter: return out / "filter";
            case Stage::pack: return out / "pack";
            case Stage::mix: return out / "mix";
            case Stage::sft: return out / "sft";
            case Stage::pref: return out / "pref";
            case Stage::eval: return out / "eval";
        }
        return out;
    };
    auto require = [](const std::optional<fs::path>& p, const char* what) -> const fs::path& {
        if (!p) throw Error(std::string("config does not name ") + what);
        return *p;
    };

    auto body = [&](Stage s, const fs::path& tmp) -> std::vector<fs::path> {
        switch (s) {
            case Stage::filter:
                return filter_stage(cfg.filter, {require(cfg.filter.corpus, "[filter] corpus"), cfg.filter.reference,
                                                 tmp / "kept.jsonl", tmp / "rejected.jsonl", tmp / "report.json",
                                                 tmp / "verdicts.jsonl"});
            case Stage::pack:
                return pack_stage(cfg.pack, {dir_of(Stage::filter) / "kept.jsonl", tmp / "packed.jsonl",
                                             tmp / "groups.jsonl", tmp / "orphans.jsonl", tmp / "report.json"});
            case Stage::mix: {
                const auto kept = dir_of(Stage::filter) / "kept.jsonl";
                mix_stage(cfg.mixture, cfg.filter, shards_by_domain(load_jsonl_strict<Document>(kept)), cfg.seed,
                          tmp / "mixture.json");
                return {kept};
            }
            case Stage::sft:
                return sft_stage(cfg,
                                 {require(cfg.sft.sns, "[sft] sns"), require(cfg.sft.general, "[sft] general"),
                                  tmp / "step1.jsonl", tmp / "step2.jsonl", tmp / "stats.json", tmp / "plan.json",
                                  tmp / "recipe.json", tmp / "histogram.txt"},
                                 cfg.seed);
            case Stage::pref:
                return pref_stage(cfg.pref, {cfg.pref.mc, cfg.pref.pred_log, cfg.pref.judged, cfg.pref.calibration,
                                             tmp / "pairs.jsonl", tmp / "pref_report.json"});
            case Stage::eval:
                return eval_stage(cfg.eval, tmp / "scores", tmp / "report.json", tmp / "report.txt");
        }
        return {};
    };

    for (Stage s : kStages) {
        const auto ts = clock::now();
        StageRecord rec;
        rec.stage = s;
        try {
            StagingDir staging(dir_of(s));
            const auto inputs = body(s, staging.path());
            // Per-stage manifest: deterministic, so it takes part in rerun comparisons.
            ordered_json sm;
            sm["stage"] = to_string(s);
            sm["seed"] = cfg.seed;
            std::vector<FileDigest> ins, outs;
            for (const auto& in : inputs) {
                auto d = digest_of(in, generic(in.lexically_proximate(out)));
                ins.push_back(d);
                input_digests.emplace(d.path, d.sha256);
            }
            for (const auto& f : sorted_files(staging.path()))
                outs.push_back(digest_of(f, generic(f.lexically_relative(staging.path()))));
            sm["inputs"] = digests_json(ins);
            sm["outputs"] = digests_json(outs);
            write_json(staging.path() / "manifest.json", sm);
            staging.commit();
            rec.ok = true;
        } catch (const std::exception& e) {
            rec.error = e.what();
            log << "redforge: " << to_string(s) << " failed: " << e.what() << '\n';
        }
        rec.seconds = std::chrono::duration<double>(clock::now() - ts).count();
        m.stages.push_back(rec);
        if (!rec.ok) {
            m.exit_code = exit_code(s);
            break;
        }
    }
    // Outputs left over from an earlier run must not pass for this run's.
    if (m.exit_code != 0)
        for (Stage s : kStages)
            if (static_cast<int>(s) >= static_cast<int>(m.stages.back().stage)) fs::remove_all(dir_of(s));

    if (m.exit_code == 0) {
        const auto summary = report_stats(out);
        write_file(out / "summary.txt", summary.text);
        write_file(out / "summary.csv", summary.csv);
    }

    for (const auto& [path, sha] : input_digests) m.inputs.push_back({path, sha});
    for (Stage s : kStages) {
        const auto dir = dir_of(s);
        if (!fs::is_directory(dir)) continue;
        for (const auto& f : sorted_files(dir)) m.outputs.push_back(digest_of(f, generic(f.lexically_relative(out))));
    }
    for (const char* f : {"summary.txt", "summary.csv"})
        if (fs::exists(out / f)) m.outputs.push_back(digest_of(out / f, f));
    m.duration_seconds = std::chrono::duration<double>(clock::now() - t0).count();
    write_json(out / "run_manifest.json", m.to_json());
    return m;
}

// ---- summary ------------------------------------------------------------

Summary report_stats(const fs::path& run_dir) {
    std::vector<std::string> missing;
    for (const char* f : kSummaryFiles)
        if (!fs::is_regular_file(run_dir / f)) missing.push_back((run_dir / f).generic_string());
    if (!missing.empty()) {
        std::string msg = std::to_string(missing.size()) + " missing file(s):";
        for (const auto& f : missing) msg += "\n  " + f;
        throw Error(msg);
    }
    auto load = [&](const char* f) {
        try {
            return json::parse(read_file(run_dir / f));
        } catch (const json::exception& e) {
            throw Error((run_dir / f).generic_string() + ": " + e.what());
        }
    };
    const auto filter = load(kSummaryFiles[0]);
    const auto pack = load(kSummaryFiles[1]);
    const auto mixture = load(kSummaryFiles[2]);
    const auto stats = load(kSummaryFiles[3]);
    const auto pref = load(kSummaryFiles[4]);
    const auto bench = load(kSummaryFiles[5]);

    std::ostringstream t, c;
    t << std::fixed;
    c << std::setprecision(10);
    c << "section,key,value\n";

    t << "[filter]\n" << std::setprecision(4);
    t << "  input docs/tokens   " << filter.value("input_docs", 0) << " / " << filter.value("input_tokens", 0) << '\n';
    t << "  kept docs/tokens    " << filter.value("kept_docs", 0) << " / " << filter.value("kept_tokens", 0) << '\n';
    t << "  retention           " << filter.value("retention", 0.0) << " (target "
      << filter.value("retention_target", 0.0) << ")\n";
    c << "filter,retention," << filter.value("retention", 0.0) << '\n';
    if (filter.contains("rule_hits"))
        for (const auto& [k, v] : filter["rule_hits"].items()) {
            t << "  rule " << std::left << std::setw(15) << k << std::right << v.get<std::size_t>() << '\n';
            c << "filter,rule_" << k << ',' << v.get<std::size_t>() << '\n';
        }

    t << "[pack]\n";
    t << "  sequences           " << pack.value("sequences", 0) << " (threshold " << pack.value("threshold", 0)
      << ")\n";
    t << "  tokens              " << pack.value("tokens", 0) << '\n';
    t << "  fill ratio          " << pack.value("fill_ratio", 0.0) << '\n';
    c << "pack,sequences," << pack.value("sequences", 0) << '\n';
    c << "pack,fill_ratio," << pack.value("fill_ratio", 0.0) << '\n';

    t << "[mixture]\n";
    const auto& domains = mixture.at("domains");
    const auto& weights = mixture.at("weights");
    for (std::size_t i = 0; i < domains.size() && i < weights.size(); ++i) {
        const auto name = domains[i].get<std::string>();
        t << "  " << std::left << std::setw(20) << name << std::right << weights[i].get<double>() << '\n';
        c << "mixture," << name << ',' << weights[i].get<double>() << '\n';
    }
    if (mixture.contains("dropped") && !mixture["dropped"].empty()) {
        t << "  dropped            ";
        for (const auto& d : mixture["dropped"]) t << ' ' << d.get<std::string>();
        t << '\n';
    }
    t << "  predicted loss      " << mixture.value("predicted_loss", 0.0) << '\n';

    t << "[sft]\n";
    t << "  samples             " << stats.value("n_samples", 0) << '\n';
    t << "  median tokens       " << stats.value("median", 0) << '\n';
    t << "  p95 tokens          " << stats.value("p95", 0) << '\n';
    t << "  max tokens          " << stats.value("max", 0) << '\n';
    c << "sft,median," << stats.value("median", 0) << '\n';
    c << "sft,p95," << stats.value("p95", 0) << '\n';

    t << "[pref]\n";
    if (pref.contains("emitted"))
        for (const auto& [k, v] : pref["emitted"].items()) {
            t << "  " << std::left << std::setw(20) << k << std::right << v.get<std::size_t>() << '\n';
            c << "pref," << k << ',' << v.get<std::size_t>() << '\n';
        }
    t << "  total               " << pref.value("total", 0) << '\n';
    t << "  judge admitted      " << (pref.value("judge_admitted", false) ? "yes" : "no") << '\n';

    t << "[benchmark]\n" << std::setprecision(2);
    for (const char* group : {"sns", "trans"}) {
        if (!bench.contains(group)) continue;
        const auto& g = bench[group];
        for (const auto& col : g.value("columns", json::array()))
            t << "  " << std::left << std::setw(40)
              << (col.value("task", std::string()) + " (" + col.value("metric", std::string()) + ")") << std::right
              << eval::round2(col.value("value", 0.0)) << '\n';
        if (g.contains("avg") && !g["avg"].is_null()) {
            const double avg = g["avg"].get<double>();
            t << "  " << std::left << std::setw(40) << (std::string(group) + " avg.") << std::right
              << eval::round2(avg) << '\n';
            c << "benchmark," << group << "_avg," << avg << '\n';
        }
    }
    return {t.str(), c.str()};
}

}  // namespace redforge::pipeline
