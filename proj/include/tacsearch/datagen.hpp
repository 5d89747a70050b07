#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "tacsearch/critic.hpp"
#include "tacsearch/records.hpp"
#include "tacsearch/search.hpp"

namespace tacsearch {

struct SolvedEntry {
    Trajectory trajectory;
    int solved_at_iteration = 0;
};

// Progress of the expert-iteration loop. iteration_t counts completed search
// passes; a pass tags its new solves with the pass index (0-based), so
// solved_at_iteration < iteration_t always holds. solved and unsolved
// partition the pool, and solved never shrinks.
struct IterationState {
    int iteration_t = 0;
    std::vector<Statement> pool;
    std::map<std::string, SolvedEntry> solved;
    std::set<std::string> unsolved;
    std::string policy_version = "init";
    std::string critic_version = "pc";

    static IterationState init(std::vector<Statement> pool);
    void check_consistent() const;
    std::vector<const Statement*> unsolved_statements() const;
};

// One search pass over the unsolved statements. Newly proved statements move
// to solved (tagged with the pass index) and iteration_t increments. The
// input state is untouched; per-pass search trees are handed back through
// out_results when the caller needs them for labeling or diversity.
IterationState run_iteration(const IterationState& state, const Environment& env,
                             const Policy& policy, const Critic& critic,
                             const SearchConfig& config, int parallelism,
                             std::vector<SearchResult>* out_results = nullptr);

// One PolicyStep record per (state, tactic) step of each retained proved
// trajectory, wrapped in the policy prompt template.
std::vector<TrainingRecord> emit_policy_records(const IterationState& state,
                                                const FilterConfig& filter);

// One DistanceLabel per trajectory step with target
// serialize_distance_tokens(encode(remaining)).
std::vector<TrainingRecord> emit_distance_records(const IterationState& state,
                                                  const FilterConfig& filter,
                                                  int levels = kDefaultDistanceLevels);

std::vector<TrainingRecord> prm_label_records(const std::vector<PRMLabel>& labels);

struct DiversityConfig {
    int per_tree = 1;
};

// Mints new statements from the deepest Open frontier nodes of unproved
// trees; duplicates (same state text) across the batch collapse to one.
std::vector<Statement> synthesize_diversity_statements(
    const std::vector<const SearchTree*>& trees, const DiversityConfig& rules);

struct StatsRow {
    int iteration = 0;
    double solve_rate = 0.0;
    int new_solved = 0;
    long cumulative_records = 0;  // policy-step records available from all solves
    std::map<int, int> length_histogram;  // shortest proof length -> statement count
};

// Snapshot of the latest completed pass.
StatsRow iteration_report(const IterationState& state);

std::string stats_csv_header();
std::string stats_csv_row(const StatsRow& row);

void save_checkpoint(const IterationState& state, const std::filesystem::path& path);
IterationState load_checkpoint(const std::filesystem::path& path);

// --- Campaign driver ---------------------------------------------------------

// Full expert-iteration campaign: one cold-start pass with the initial policy
// under policy confidence, then `refit_passes` passes that refit the tabular
// policy (and the configured critic) on the accumulated data. Used by the CLI
// iterate command.
struct CampaignConfig {
    SearchConfig search;
    FilterConfig filter;
    double policy_smoothing = 0.25;
    std::string critic_kind = "pc";  // pc | prm | distance
    bool diversity_enabled = false;
    DiversityConfig diversity;
    int parallelism = 1;
    int levels = kDefaultDistanceLevels;
};

struct CampaignOutput {
    IterationState state;
    std::vector<StatsRow> rows;
    std::string stats_csv;
    std::vector<TrainingRecord> policy_records;
    std::vector<TrainingRecord> distance_records;
    std::vector<PRMLabel> prm_labels;
};

// When out_dir is set, writes stats.csv, checkpoint.json, prm_labels.tsv,
// policy_records.jsonl and distance_records.jsonl after every pass. With
// resume = true the campaign continues from out_dir's checkpoint; the result
// equals an uninterrupted run with the same seeds.
CampaignOutput run_campaign(const ScriptedEnvironment& env, const CampaignConfig& config,
                            int refit_passes,
                            const std::optional<std::filesystem::path>& out_dir = {},
                            bool resume = false);

}  // namespace tacsearch
