#pragma once

#include <filesystem>
#include <memory>
#include <optional>
#include <string>

#include "tacsearch/critic.hpp"
#include "tacsearch/datagen.hpp"
#include "tacsearch/env.hpp"
#include "tacsearch/policy.hpp"
#include "tacsearch/search.hpp"

namespace tacsearch {

// One configuration document for the CLI. Exactly one environment source,
// one policy spec and one critic spec. Unset fields take the standard
// defaults (K=8 over temperatures 0.7/0.8/1.0/1.1, 800 steps, 3600s/60s
// timeouts).
struct RunConfig {
    unsigned long long seed = 0;
    int parallelism = 1;
    int levels = kDefaultDistanceLevels;
    std::filesystem::path out_dir = "out";

    SearchConfig search;
    FilterConfig filter;

    // environment: exactly one of
    std::optional<std::filesystem::path> scripted_path;
    std::optional<PuzzleFamilyConfig> puzzles;

    // policy: tabular (optionally warm-started from a records file),
    // exhaustive, or an external endpoint
    std::string policy_kind = "tabular";
    double policy_smoothing = 0.25;
    std::optional<std::filesystem::path> policy_records_path;
    std::string policy_endpoint;
    double policy_call_timeout_seconds = 10.0;

    // critic: pc | constant | prm | distance
    std::string critic_kind = "pc";
    double critic_constant = 0.0;
    std::optional<std::filesystem::path> prm_labels_path;
    std::optional<std::filesystem::path> distance_table_path;

    bool diversity_enabled = false;
    DiversityConfig diversity;

    void validate() const;

    static RunConfig from_json_text(const std::string& text);
    static RunConfig load(const std::filesystem::path& path);

    ScriptedEnvironment make_environment() const;
    std::unique_ptr<Policy> make_policy(const ScriptedEnvironment& env) const;
    std::unique_ptr<Critic> make_critic() const;
    CampaignConfig make_campaign_config() const;
};

}  // namespace tacsearch
