#pragma once

#include <chrono>
#include <filesystem>
#include <optional>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

#include "redforge/config.hpp"
#include "redforge/eval.hpp"
#include "redforge/filter.hpp"
#include "redforge/mixture.hpp"
#include "redforge/pack.hpp"
#include "redforge/pref.hpp"
#include "redforge/sft.hpp"

namespace redforge::pipeline {

namespace fs = std::filesystem;

enum class Stage { filter, pack, mix, sft, pref, eval };

inline constexpr Stage kStages[] = {Stage::filter, Stage::pack, Stage::mix, Stage::sft, Stage::pref, Stage::eval};

std::string_view to_string(Stage s);
int exit_code(Stage s);  // 10, 20, ..., 60

struct FileDigest {
    std::string path;
    std::string sha256;
};

FileDigest digest_of(const fs::path& file, const std::string& label);

// Stage bodies. Each reads its inputs, writes the named outputs, and returns
// the input files it consumed.

struct FilterPaths {
    fs::path in;
    std::optional<fs::path> reference;
    fs::path out;
    std::optional<fs::path> rejects;
    std::optional<fs::path> report;
    std::optional<fs::path> verdicts;
};
std::vector<fs::path> filter_stage(const FilterConfig& cfg, const FilterPaths& p);

struct PackPaths {
    fs::path in;
    fs::path out;
    std::optional<fs::path> groups;
    std::optional<fs::path> orphans;
    std::optional<fs::path> report;
};
std::vector<fs::path> pack_stage(const PackConfig& cfg, const PackPaths& p);

/// Shards are (domain, documents) in a fixed order.
using Shards = std::vector<std::pair<std::string, std::vector<Document>>>;

/// Splits a corpus into shards by its `domain` field, sorted by domain name.
Shards shards_by_domain(std::vector<Document> docs);

mix::MixtureRun mix_stage(const MixtureConfig& cfg, const FilterConfig& lm, const Shards& shards, std::uint64_t seed,
                          const fs::path& out);

struct SftPaths {
    fs::path sns;
    fs::path general;
    fs::path out_step1;
    fs::path out_step2;
    fs::path stats;
    std::optional<fs::path> plan;
    std::optional<fs::path> recipe;
    std::optional<fs::path> histogram;
};
std::vector<fs::path> sft_stage(const PipelineConfig& cfg, const SftPaths& p, std::uint64_t seed);

struct PrefPaths {
    std::optional<fs::path> mc;
    std::optional<fs::path> pred_log;
    std::optional<fs::path> judged;
    std::optional<fs::path> calibration;
    fs::path out;
    std::optional<fs::path> report;
};
std::vector<fs::path> pref_stage(const PrefConfig& cfg, const PrefPaths& p);

/// Scores every configured task into `scores_dir`, then aggregates.
std::vector<fs::path> eval_stage(const EvalConfig& cfg, const fs::path& scores_dir, const fs::path& report_json,
                                 const std::optional<fs::path>& report_text);

/// Reads every *.json score file of a directory in name order.
std::vector<eval::EvalScore> load_scores(const fs::path& dir);

/// Stage output directory that becomes visible only on commit(). The
/// destructor discards anything not committed.
class StagingDir {
public:
    StagingDir(fs::path final_dir);
    ~StagingDir();
    StagingDir(const StagingDir&) = delete;
    StagingDir& operator=(const StagingDir&) = delete;

    const fs::path& path() const { return tmp_; }
    const fs::path& final_path() const { return final_; }
    void commit();

private:
    fs::path final_;
    fs::path tmp_;
    bool committed_ = false;
};

struct StageRecord {
    Stage stage;
    bool ok = false;
    double seconds = 0;
    std::string error;
};

struct RunManifest {
    std::vector<std::string> command_line;
    std::string config_path;
    std::string config_sha256;
    std::uint64_t seed = 0;
    std::string version;
    std::vector<FileDigest> inputs;
    std::vector<FileDigest> outputs;  // relative to the run directory
    std::vector<StageRecord> stages;
    double duration_seconds = 0;
    int exit_code = 0;

    ordered_json to_json() const;
};

struct RunOptions {
    fs::path config;
    fs::path out_dir;
    std::optional<std::uint64_t> seed;
    std::vector<std::string> command_line;
};

/// filter -> pack -> mix -> build-sft -> build-pref -> eval, then the run
/// summary. Stops at the first failing stage; the manifest records its exit
/// code. Errors are reported on `log`.
RunManifest run_pipeline(const RunOptions& opts, std::ostream& log);

/// Files read by report_stats, relative to a run directory.
inline constexpr const char* kSummaryFiles[] = {
    "filter/report.json", "pack/report.json", "mix/mixture.json",
    "sft/stats.json",     "pref/pref_report.json", "eval/report.json",
};

struct Summary {
    std::string text;
    std::string csv;
};

/// Human-readable summary of a run directory. Throws Error naming every
/// missing file.
Summary report_stats(const fs::path& run_dir);

}  // namespace redforge::pipeline
