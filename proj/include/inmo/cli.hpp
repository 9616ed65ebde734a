#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "inmo/dataset.hpp"
#include "inmo/svd.hpp"
#include "inmo/templates.hpp"
#include "inmo/training.hpp"
#include "json.hpp"

namespace inmo::cli {

/// Every knob of a run. Keys are `section.name`; see `config_keys()`.
struct RunConfig {
    std::string data_path;
    FileFormat data_format = FileFormat::Tsv;
    PreprocessOptions preprocess;

    std::uint64_t split_seed = 0;
    SplitRatios ratios;

    Indicator indicator = Indicator::ErrorSortSimplified;
    double user_frac = 1.0;
    double item_frac = 1.0;
    std::size_t svd_dim = 64;

    TrainConfig train;

    ScenarioKind scenario = ScenarioKind::Transductive;
    double hold_frac = 0.2;
    double entity_frac = 0.2;
    std::uint64_t scenario_seed = 0;

    std::size_t eval_k = 20;

    std::size_t theory_instances = 50;
    std::size_t theory_rows = 60;
    std::size_t theory_cols = 40;
    double theory_density = 0.2;
    std::size_t theory_d = 8;
    std::uint64_t theory_seed = 0;

    std::size_t curve_d = 64;
    std::vector<Indicator> curve_indicators{Indicator::ErrorSortExact, Indicator::ErrorSortSimplified,
                                            Indicator::Degree, Indicator::PageRank};
    std::vector<double> curve_fractions{0.0, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0};

    std::size_t dense_cap = kDefaultDenseCap;

    /// Throws ConfigError on unknown keys or unparsable values.
    void set(const std::string& key, const std::string& value);
    /// Throws ConfigError on values outside the valid domain.
    void validate() const;
    /// Notes for values that are legal but outside the usual tuning grids.
    std::vector<std::string> warnings() const;
};

std::vector<std::string> config_keys();

/// `key = value` lines; `#` starts a comment; blank lines are skipped.
void apply_config_text(RunConfig& cfg, std::istream& in, const std::string& source = "config");
void apply_config_file(RunConfig& cfg, const std::filesystem::path& path);
/// Parses one `key=value` override.
void apply_override(RunConfig& cfg, const std::string& assignment);

nlohmann::json to_json(const RunConfig& cfg);

/// Collects output files under one directory and records their hashes.
class OutputDir {
public:
    explicit OutputDir(std::filesystem::path root);

    void write(const std::string& name, const std::string& contents);
    void write_json(const std::string& name, const nlohmann::json& j);

    /// Writes manifest.json (file -> SHA-256 of every written file) and metadata.json
    /// (not listed in the manifest, so timestamps never affect it).
    void finish(const std::string& command, nlohmann::json metadata);

    const std::filesystem::path& root() const { return root_; }
    const std::map<std::string, std::string>& hashes() const { return hashes_; }

private:
    std::filesystem::path root_;
    std::map<std::string, std::string> hashes_;
};

std::string sha256_hex(const std::string& data);

/// load -> preprocess -> split with the configured knobs.
struct Prepared {
    std::size_t raw_records = 0;
    InteractionDataset dataset;
    DatasetSplit split;
};

Prepared prepare(const RunConfig& cfg);
InductiveScenario build_scenario(const RunConfig& cfg, const DatasetSplit& split);

/// Command bodies. Each writes into `out`, prints progress to `log` and returns its
/// run-specific metadata. Errors propagate as exceptions.
nlohmann::json cmd_prepare(const RunConfig& cfg, OutputDir& out, std::ostream& log);
nlohmann::json cmd_select_templates(const RunConfig& cfg, OutputDir& out, std::ostream& log);
nlohmann::json cmd_train(const RunConfig& cfg, OutputDir& out, std::ostream& log);
nlohmann::json cmd_eval(const RunConfig& cfg, const std::filesystem::path& model, OutputDir& out,
                        std::ostream& log);
/// Returns metadata with "all_pass"; the caller maps a failed check to exit code 1.
nlohmann::json cmd_theory_check(const RunConfig& cfg, OutputDir& out, std::ostream& log);
nlohmann::json cmd_error_curve(const RunConfig& cfg, OutputDir& out, std::ostream& log);

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitUsage = 2;

/// Full command-line entry point: argument parsing, config loading, dispatch and exit codes.
int run(int argc, char** argv, std::ostream& out, std::ostream& err);

}  // namespace inmo::cli
