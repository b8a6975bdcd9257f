#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "stresslab/crosswalk.hpp"
#include "stresslab/go_explore.hpp"
#include "stresslab/mcts.hpp"
#include "stresslab/policy_opt.hpp"
#include "stresslab/search_log.hpp"

namespace stresslab {

// Everything needed to reproduce one run: scenario, solver choice, seed,
// budget tier, and any explicit overrides. Serialized verbatim into the run
// manifest so the manifest alone can regenerate every emitted number.
struct ExperimentSpec {
    std::string scenario = "easy";  // preset name or path to a scenario json file
    std::string solver = "ge";      // ge | mcts | drl
    bool robustify = false;
    std::uint64_t seed = 0;
    std::string budget = "desk";  // desk: 30x100 phase 1, 20x500 robustification
                                  // paper: 100x500 phase 1, 100x5000 robustification
    std::optional<int> iterations;
    std::optional<int> batch_size;
    std::optional<int> ba_iterations;
    std::optional<int> ba_batch_size;
    std::optional<int> ba_epochs_per_step;
    std::optional<double> ge_granularity;  // uniform bin width for all components
    std::optional<double> mcts_c;
    std::optional<double> mcts_k;
    std::optional<double> mcts_alpha;
    std::optional<double> learning_rate;
    std::optional<double> clip_range;
    std::optional<double> kl_coef;
    std::string output_dir;         // empty: no artifacts written
    bool save_solver_state = false; // also dump the explorer pool / policy weights

    void validate() const;
    nlohmann::json to_json() const;
    static ExperimentSpec from_json(const nlohmann::json& j);
};

// Concrete per-solver parameters after applying budget defaults and overrides.
struct ResolvedParams {
    GEParams ge;
    MCTSParams mcts;
    DRLParams drl;
    BAConfig ba;
};

ResolvedParams resolve_params(const ExperimentSpec& spec);

// Preset name, or a path to a scenario config json.
ScenarioConfig resolve_scenario(const std::string& scenario);

struct RunRecord {
    ExperimentSpec spec;
    ScenarioConfig scenario_config;
    std::vector<IterationRecord> series;
    std::vector<IterationRecord> ba_series;
    std::optional<Trajectory> best_failure;
    std::optional<Trajectory> robustified;
    std::optional<double> robustified_reward;
    bool ba_skipped = false;  // robustify requested but phase 1 found nothing
    std::uint64_t rollouts = 0;
    std::vector<std::string> artifacts;  // file names relative to output_dir

    std::string label() const;
};

// iteration,best_reward,found_failure,wall_ms with best_reward empty until the
// first failure (the cropping convention used by the result figures).
std::string series_csv(const std::vector<IterationRecord>& series);
std::vector<IterationRecord> parse_series_csv(const std::string& text);

// Byte-comparable form of a series: the wall-clock column is dropped because
// it legitimately differs between reruns of the same seed.
std::string series_csv_without_wall(const std::string& csv_text);

nlohmann::json run_manifest(const RunRecord& record);

RunRecord run_experiment(const ExperimentSpec& spec);
RunRecord run_experiment(const ExperimentSpec& spec, const ScenarioConfig& config);

// Re-executes the run a manifest describes, using the embedded scenario
// config; the basis of the reproducibility checks.
RunRecord run_from_manifest(const nlohmann::json& manifest);

// Loads a previously written run directory (manifest + series) for reporting.
RunRecord load_run(const std::string& dir);

// Combined per-iteration table (one best-reward column per run, empty cells
// where no failure was known yet) plus an SVG of the curves with robustified
// rewards drawn as dashed horizontal reference lines.
std::string report_csv(const std::vector<RunRecord>& records);
std::string report_svg(const std::vector<RunRecord>& records);
void write_report(const std::vector<RunRecord>& records, const std::string& out_dir);

}  // namespace stresslab
