#include "tacsearch/run_config.hpp"

#include <fstream>
#include <sstream>

#include "json.hpp"
#include "tacsearch/errors.hpp"
#include "tacsearch/wire.hpp"

namespace tacsearch {

namespace {
using nlohmann::json;

template <typename T>
void read_if(const json& j, const char* key, T& out) {
    if (j.contains(key)) out = j.at(key).get<T>();
}
}  // namespace

void RunConfig::validate() const {
    if (parallelism < 1) throw ConfigError("parallelism must be at least 1");
    int env_sources = (scripted_path ? 1 : 0) + (puzzles ? 1 : 0);
    if (env_sources != 1)
        throw ConfigError("config needs exactly one environment source");
    if (policy_kind != "tabular" && policy_kind != "exhaustive" &&
        policy_kind != "external")
        throw ConfigError("unknown policy kind: " + policy_kind);
    if (policy_kind == "external" && policy_endpoint.empty())
        throw ConfigError("external policy needs an endpoint");
    if (critic_kind != "pc" && critic_kind != "constant" && critic_kind != "prm" &&
        critic_kind != "distance")
        throw ConfigError("unknown critic kind: " + critic_kind);
    search.validate();
    if (puzzles) puzzles->validate();
}

RunConfig RunConfig::from_json_text(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("bad config JSON: ") + e.what());
    }
    RunConfig cfg;
    try {
        read_if(j, "seed", cfg.seed);
        read_if(j, "parallelism", cfg.parallelism);
        read_if(j, "levels", cfg.levels);
        if (j.contains("out_dir"))
            cfg.out_dir = j.at("out_dir").get<std::string>();

        if (j.contains("search")) {
            const auto& s = j.at("search");
            if (s.contains("algorithm"))
                cfg.search.algorithm =
                    search_algorithm_from_string(s.at("algorithm").get<std::string>());
            read_if(s, "max_steps", cfg.search.max_steps);
            read_if(s, "ucb_alpha", cfg.search.ucb_alpha);
            read_if(s, "budget_alpha", cfg.search.budget_alpha);
            read_if(s, "budget_min", cfg.search.budget_min);
            read_if(s, "budget_max", cfg.search.budget_max);
        }
        if (j.contains("sampling")) {
            const auto& s = j.at("sampling");
            read_if(s, "total_k", cfg.search.sampling_plan.total_k);
            if (s.contains("temperature_groups")) {
                cfg.search.sampling_plan.temperature_groups.clear();
                for (const auto& g : s.at("temperature_groups")) {
                    cfg.search.sampling_plan.temperature_groups.push_back(
                        {g.at(0).get<double>(), g.at(1).get<int>()});
                }
            }
        }
        if (j.contains("timeout")) {
            const auto& t = j.at("timeout");
            read_if(t, "whole_search_seconds", cfg.search.timeout.whole_search_seconds);
            read_if(t, "per_step_seconds", cfg.search.timeout.per_step_seconds);
        }
        if (j.contains("filter")) {
            const auto& f = j.at("filter");
            read_if(f, "easy_cutoff_iteration", cfg.filter.easy_cutoff_iteration);
            if (f.contains("max_records_per_statement") &&
                !f.at("max_records_per_statement").is_null())
                cfg.filter.max_records_per_statement =
                    f.at("max_records_per_statement").get<int>();
        }
        if (j.contains("environment")) {
            const auto& e = j.at("environment");
            if (e.contains("scripted_path"))
                cfg.scripted_path = e.at("scripted_path").get<std::string>();
            if (e.contains("puzzles")) {
                const auto& p = e.at("puzzles");
                PuzzleFamilyConfig pz;
                read_if(p, "seed", pz.seed);
                read_if(p, "num_statements", pz.num_statements);
                read_if(p, "state_space_size", pz.state_space_size);
                read_if(p, "branching", pz.branching);
                read_if(p, "solvable_fraction", pz.solvable_fraction);
                read_if(p, "max_depth", pz.max_depth);
                cfg.puzzles = pz;
            }
        }
        if (j.contains("policy")) {
            const auto& p = j.at("policy");
            read_if(p, "kind", cfg.policy_kind);
            read_if(p, "smoothing", cfg.policy_smoothing);
            if (p.contains("records_path") && !p.at("records_path").is_null())
                cfg.policy_records_path = p.at("records_path").get<std::string>();
            read_if(p, "endpoint", cfg.policy_endpoint);
            read_if(p, "call_timeout_seconds", cfg.policy_call_timeout_seconds);
        }
        if (j.contains("critic")) {
            const auto& c = j.at("critic");
            read_if(c, "kind", cfg.critic_kind);
            read_if(c, "value", cfg.critic_constant);
            if (c.contains("labels_path") && !c.at("labels_path").is_null())
                cfg.prm_labels_path = c.at("labels_path").get<std::string>();
            if (c.contains("table_path") && !c.at("table_path").is_null())
                cfg.distance_table_path = c.at("table_path").get<std::string>();
        }
        if (j.contains("diversity")) {
            const auto& d = j.at("diversity");
            read_if(d, "enabled", cfg.diversity_enabled);
            read_if(d, "per_tree", cfg.diversity.per_tree);
        }
    } catch (const json::exception& e) {
        throw ConfigError(std::string("bad config fields: ") + e.what());
    }
    cfg.search.seed = cfg.seed;
    cfg.validate();
    return cfg;
}

RunConfig RunConfig::load(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot open config file: " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return from_json_text(buf.str());
}

ScriptedEnvironment RunConfig::make_environment() const {
    if (scripted_path) return ScriptedEnvironment::load(*scripted_path);
    return generate_puzzles(*puzzles);
}

std::unique_ptr<Policy> RunConfig::make_policy(const ScriptedEnvironment& env) const {
    if (policy_kind == "exhaustive")
        return std::make_unique<ExhaustivePolicy>(env.vocabulary());
    if (policy_kind == "external")
        return std::make_unique<ExternalPolicy>(policy_endpoint,
                                                policy_call_timeout_seconds);
    std::vector<TrainingRecord> records;
    if (policy_records_path) records = load_records(*policy_records_path);
    return std::make_unique<TabularSoftmaxPolicy>(
        fit_tabular_policy(records, policy_smoothing, env.vocabulary()));
}

std::unique_ptr<Critic> RunConfig::make_critic() const {
    if (critic_kind == "pc") return std::make_unique<PolicyConfidenceCritic>();
    if (critic_kind == "constant") return std::make_unique<ConstantCritic>(critic_constant);
    if (critic_kind == "prm") {
        if (!prm_labels_path) throw ConfigError("prm critic needs labels_path");
        return std::make_unique<PRMCritic>(fit_prm(load_prm_labels(*prm_labels_path)));
    }
    if (!distance_table_path) throw ConfigError("distance critic needs table_path");
    return std::make_unique<DistanceCritic>(
        load_distance_table(*distance_table_path, levels));
}

CampaignConfig RunConfig::make_campaign_config() const {
    CampaignConfig campaign;
    campaign.search = search;
    campaign.filter = filter;
    campaign.policy_smoothing = policy_smoothing;
    campaign.critic_kind = critic_kind == "constant" ? "pc" : critic_kind;
    campaign.diversity_enabled = diversity_enabled;
    campaign.diversity = diversity;
    campaign.parallelism = parallelism;
    campaign.levels = levels;
    return campaign;
}

}  // namespace tacsearch
