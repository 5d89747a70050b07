#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "tacsearch/critic.hpp"
#include "tacsearch/env.hpp"
#include "tacsearch/policy.hpp"
#include "tacsearch/tree.hpp"

namespace tacsearch {

enum class SearchAlgorithm { BFS, EtaMCTS };

std::string to_string(SearchAlgorithm algorithm);
SearchAlgorithm search_algorithm_from_string(const std::string& s);

struct SearchConfig {
    SearchAlgorithm algorithm = SearchAlgorithm::BFS;
    int max_steps = 800;
    SamplingPlan sampling_plan;
    TimeoutPolicy timeout;
    double ucb_alpha = 1.0;
    double budget_alpha = 4.0;
    int budget_min = 1;
    int budget_max = 8;
    unsigned long long seed = 0;

    void validate() const;
};

enum class Termination { Proved, StepBudget, Timeout, Exhausted, Error };

std::string to_string(Termination termination);

struct SearchEvent {
    int step = 0;
    std::string event;  // select | expand | insert | dedup | prove
    NodeId node_id = 0;
    nlohmann::json payload;
};

std::string serialize_events(const std::vector<SearchEvent>& events);

struct SearchResult {
    bool proved = false;
    std::optional<Trajectory> trajectory;
    int steps_used = 0;
    int nodes_created = 0;
    double wall_seconds = 0.0;
    Termination termination = Termination::Exhausted;
    std::shared_ptr<SearchTree> tree;
    std::vector<SearchEvent> events;
    std::string error;  // set only with Termination::Error
};

// UCB selection value: critic + alpha * sqrt(2 * ln(cnt_parent / cnt_node)).
// An unvisited node scores +infinity when alpha > 0 and plain critic
// otherwise, so alpha = 0 degrades to greedy-on-critic selection.
double ucb_value(double critic_score, int cnt_node, int cnt_parent, double alpha);

// Dynamic expansion budget: max(B_min, min(B_max, floor(alpha * I) + 1)).
int expansion_budget(double importance, const SearchConfig& config);

// Per-node importance I(n) = max over descendants of |Critic(desc) -
// Critic(n)|, maintained incrementally: inserting a node can only raise the
// max along its ancestor chain.
class ImportanceMap {
public:
    double at(NodeId id) const;
    // The update_importance step: folds a just-inserted node into every
    // ancestor's importance.
    void update_on_insert(const SearchTree& tree, NodeId new_node);

private:
    std::vector<double> values_;
};

SearchResult bfs_search(const Statement& statement, const Environment& env,
                        const Policy& policy, const Critic& critic,
                        const SearchConfig& config);

SearchResult eta_mcts_search(const Statement& statement, const Environment& env,
                             const Policy& policy, const Critic& critic,
                             const SearchConfig& config);

// Dispatch on config.algorithm.
SearchResult run_search(const Statement& statement, const Environment& env,
                        const Policy& policy, const Critic& critic,
                        const SearchConfig& config);

// One search per statement with per-statement seeds config.seed XOR index.
// Results come back in input order and are identical for any parallelism.
// Per-statement failures are captured as Termination::Error results.
std::vector<SearchResult> run_batch(const std::vector<Statement>& statements,
                                    const Environment& env, const Policy& policy,
                                    const Critic& critic, const SearchConfig& config,
                                    int parallelism);

// statement_id, proved, steps_used, nodes_created, proof_length, termination,
// wall_seconds.
std::string results_csv(const std::vector<Statement>& statements,
                        const std::vector<SearchResult>& results);

}  // namespace tacsearch
