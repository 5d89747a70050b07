#include "tacsearch/search.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <limits>
#include <set>
#include <thread>

#include "tacsearch/errors.hpp"
#include "tacsearch/text_util.hpp"

namespace tacsearch {

namespace {
using Clock = std::chrono::steady_clock;

constexpr double kInf = std::numeric_limits<double>::infinity();

// Frontier ordering shared by both engines: distance tuples coarse-to-fine
// when present, otherwise the scalar score; ties go to higher policy
// confidence, then lower node id.
struct FrontierEntry {
    NodeId id = 0;
    double scalar = 0.0;
    double confidence = 0.0;
    std::optional<DistancePath> path;
};

bool frontier_before(const FrontierEntry& a, const FrontierEntry& b) {
    if (a.path && b.path) {
        int cmp = compare_distance(*a.path, *b.path);
        if (cmp != 0) return cmp < 0;
    } else if (a.scalar != b.scalar) {
        return a.scalar > b.scalar;
    }
    if (a.confidence != b.confidence) return a.confidence > b.confidence;
    return a.id < b.id;
}

nlohmann::json path_json(const std::optional<DistancePath>& path) {
    nlohmann::json j = nlohmann::json::array();
    if (path)
        for (int e : path->entries) j.push_back(e);
    return j;
}

// Engine-shared bookkeeping for one running search.
class SearchRun {
public:
    SearchRun(const Statement& statement, const Environment& env, const Policy& policy,
              const Critic& critic, const SearchConfig& config)
        : env_(env), policy_(policy), critic_(critic), config_(config),
          rng_(config.seed), start_(Clock::now()) {
        CriticScore root_score = critic_.score_root(statement, statement.goal_state);
        tree_ = std::make_shared<SearchTree>(statement, root_score.selection_scalar());
        root_path_ = root_score.path;
        result_.tree = tree_;
    }

    bool timed_out() const {
        std::chrono::duration<double> elapsed = Clock::now() - start_;
        return elapsed.count() > config_.timeout.whole_search_seconds;
    }

    std::vector<Tactic> sample_at(NodeId id) {
        try {
            return sample_tactics(policy_, tree_->statement(), tree_->node(id).state,
                                  config_.sampling_plan, rng_);
        } catch (const PolicyBackendError&) {
            return {};  // backend failure degrades to an empty expansion
        }
    }

    struct ExecOutcome {
        bool proved = false;
        std::optional<NodeId> new_node;
        bool invalid = false;
        bool step_timeout = false;
    };

    // Runs one tactic against the environment and folds the outcome into the
    // tree. Returns the proved flag / created node for the engine loop.
    ExecOutcome execute(NodeId parent, const Tactic& tactic, int step) {
        ExecOutcome outcome;
        ApplyResult applied =
            apply_tactic(env_, tree_->node(parent).state, tactic, config_.timeout);
        switch (applied.kind) {
            case ApplyResult::Kind::Invalid:
                outcome.invalid = true;
                return outcome;
            case ApplyResult::Kind::StepTimeout:
                outcome.step_timeout = true;
                return outcome;
            case ApplyResult::Kind::Proved: {
                auto inserted = tree_->insert_node(parent, tactic,
                                                   ProofState{std::string(kQedStateText)},
                                                   proved_node_score(tactic));
                // First proof wins; the QED sentinel can only be inserted once.
                NodeId id = inserted.id;
                tree_->node_mut(id).status = NodeStatus::Proved;
                if (inserted.inserted) {
                    ++result_.nodes_created;
                    importance_.update_on_insert(*tree_, id);
                }
                events_.push_back({step, "prove", id, {}});
                outcome.proved = true;
                outcome.new_node = id;
                return outcome;
            }
            case ApplyResult::Kind::NewState: {
                CriticScore score =
                    critic_.score_child(tree_->statement(), *applied.next, tactic);
                auto inserted = tree_->insert_node(parent, tactic, *applied.next,
                                                   score.selection_scalar());
                if (!inserted.inserted) {
                    events_.push_back(
                        {step, "dedup", parent,
                         nlohmann::json{{"existing", inserted.id},
                                        {"tactic", tactic.text}}});
                    return outcome;
                }
                ++result_.nodes_created;
                importance_.update_on_insert(*tree_, inserted.id);
                paths_.resize(tree_->size());
                paths_[inserted.id] = score.path;
                events_.push_back(
                    {step, "insert", inserted.id,
                     nlohmann::json{{"parent", parent},
                                    {"score", tree_->node(inserted.id).critic_score},
                                    {"pc", tree_->node(inserted.id).policy_confidence()},
                                    {"path", path_json(score.path)},
                                    {"tactic", tactic.text}}});
                outcome.new_node = inserted.id;
                return outcome;
            }
        }
        return outcome;
    }

    FrontierEntry entry_for(NodeId id) const {
        const auto& node = tree_->node(id);
        FrontierEntry e;
        e.id = id;
        e.scalar = node.critic_score;
        e.confidence = node.policy_confidence();
        if (id == 0) {
            e.path = root_path_;
        } else if (static_cast<size_t>(id) < paths_.size()) {
            e.path = paths_[id];
        }
        return e;
    }

    SearchResult finish(Termination termination, std::optional<NodeId> proved_node) {
        result_.termination = termination;
        result_.proved = termination == Termination::Proved;
        if (result_.proved) result_.trajectory = tree_->extract_trajectory(*proved_node);
        std::chrono::duration<double> elapsed = Clock::now() - start_;
        result_.wall_seconds = elapsed.count();
        result_.events = std::move(events_);
        return std::move(result_);
    }

    SearchTree& tree() { return *tree_; }
    ImportanceMap& importance() { return importance_; }
    std::vector<SearchEvent>& events() { return events_; }
    SearchResult& result() { return result_; }
    const SearchConfig& config() const { return config_; }

private:
    double proved_node_score(const Tactic& tactic) const {
        // Never used for selection (the search stops); keep the incoming
        // tactic's confidence so dumps stay informative.
        return mean_logprob(tactic);
    }

    const Environment& env_;
    const Policy& policy_;
    const Critic& critic_;
    SearchConfig config_;
    std::mt19937_64 rng_;
    Clock::time_point start_;
    std::shared_ptr<SearchTree> tree_;
    std::optional<DistancePath> root_path_;
    std::vector<std::optional<DistancePath>> paths_;  // per-node distance tuples
    ImportanceMap importance_;
    std::vector<SearchEvent> events_;
    SearchResult result_;
};

}  // namespace

std::string to_string(SearchAlgorithm algorithm) {
    return algorithm == SearchAlgorithm::BFS ? "bfs" : "eta_mcts";
}

SearchAlgorithm search_algorithm_from_string(const std::string& s) {
    if (s == "bfs") return SearchAlgorithm::BFS;
    if (s == "eta_mcts" || s == "mcts") return SearchAlgorithm::EtaMCTS;
    throw ConfigError("unknown search algorithm: " + s);
}

std::string to_string(Termination termination) {
    switch (termination) {
        case Termination::Proved: return "proved";
        case Termination::StepBudget: return "step_budget";
        case Termination::Timeout: return "timeout";
        case Termination::Exhausted: return "exhausted";
        case Termination::Error: return "error";
    }
    return "unknown";
}

void SearchConfig::validate() const {
    if (max_steps <= 0) throw ConfigError("max_steps must be positive");
    if (ucb_alpha < 0.0) throw ConfigError("ucb_alpha must be nonnegative");
    if (budget_alpha < 0.0) throw ConfigError("budget_alpha must be nonnegative");
    if (budget_min < 1) throw ConfigError("budget_min must be at least 1");
    if (budget_min > budget_max) throw ConfigError("budget_min exceeds budget_max");
    sampling_plan.validate();
    timeout.validate();
}

std::string serialize_events(const std::vector<SearchEvent>& events) {
    std::string out;
    for (const auto& e : events) {
        nlohmann::json j;
        j["step"] = e.step;
        j["event"] = e.event;
        j["node_id"] = e.node_id;
        j["payload"] = e.payload;
        out += j.dump();
        out += '\n';
    }
    return out;
}

double ucb_value(double critic_score, int cnt_node, int cnt_parent, double alpha) {
    if (cnt_node <= 0) return alpha > 0.0 ? kInf : critic_score;
    double ratio = static_cast<double>(cnt_parent) / static_cast<double>(cnt_node);
    return critic_score + alpha * std::sqrt(2.0 * std::log(ratio));
}

int expansion_budget(double importance, const SearchConfig& config) {
    double raw = std::floor(config.budget_alpha * importance) + 1.0;
    raw = std::min(raw, static_cast<double>(config.budget_max));
    raw = std::max(raw, static_cast<double>(config.budget_min));
    return static_cast<int>(raw);
}

double ImportanceMap::at(NodeId id) const {
    if (id < 0 || static_cast<size_t>(id) >= values_.size()) return 0.0;
    return values_[id];
}

void ImportanceMap::update_on_insert(const SearchTree& tree, NodeId new_node) {
    if (values_.size() < tree.size()) values_.resize(tree.size(), 0.0);
    const double score = tree.node(new_node).critic_score;
    auto parent = tree.node(new_node).parent;
    while (parent) {
        const auto& ancestor = tree.node(*parent);
        values_[*parent] =
            std::max(values_[*parent], std::abs(score - ancestor.critic_score));
        parent = ancestor.parent;
    }
}

SearchResult bfs_search(const Statement& statement, const Environment& env,
                        const Policy& policy, const Critic& critic,
                        const SearchConfig& config) {
    config.validate();
    SearchRun run(statement, env, policy, critic, config);
    auto& tree = run.tree();
    auto& result = run.result();

    std::vector<FrontierEntry> active{run.entry_for(0)};
    run.events().push_back({0, "insert", 0,
                            nlohmann::json{{"parent", -1},
                                           {"score", tree.node(0).critic_score},
                                           {"pc", 0.0},
                                           {"path", path_json(run.entry_for(0).path)},
                                           {"tactic", ""}}});

    while (true) {
        if (run.timed_out()) return run.finish(Termination::Timeout, {});
        if (result.steps_used >= config.max_steps)
            return run.finish(Termination::StepBudget, {});
        if (active.empty()) return run.finish(Termination::Exhausted, {});

        auto best = std::min_element(active.begin(), active.end(),
                                     [](const FrontierEntry& a, const FrontierEntry& b) {
                                         return frontier_before(a, b);
                                     });
        FrontierEntry selected = *best;
        active.erase(best);

        const int step = ++result.steps_used;
        auto& node = tree.node_mut(selected.id);
        node.visit_count = 1;  // selected exactly once in best-first search
        if (node.status == NodeStatus::Open) node.status = NodeStatus::Expanded;
        run.events().push_back({step, "select", selected.id,
                                nlohmann::json{{"score", node.critic_score}}});

        auto tactics = run.sample_at(selected.id);
        run.events().push_back(
            {step, "expand", selected.id,
             nlohmann::json{{"sampled", tactics.size()}}});
        for (const auto& tactic : tactics) {
            auto outcome = run.execute(selected.id, tactic, step);
            if (outcome.proved) return run.finish(Termination::Proved, outcome.new_node);
            if (outcome.new_node) active.push_back(run.entry_for(*outcome.new_node));
        }
    }
}

SearchResult eta_mcts_search(const Statement& statement, const Environment& env,
                             const Policy& policy, const Critic& critic,
                             const SearchConfig& config) {
    config.validate();
    SearchRun run(statement, env, policy, critic, config);
    auto& tree = run.tree();
    auto& result = run.result();

    std::vector<std::set<std::string>> executed(1);
    std::vector<char> sample_exhausted(1, 0);
    auto ensure_slots = [&]() {
        executed.resize(tree.size());
        sample_exhausted.resize(tree.size(), 0);
    };
    auto has_budget = [&](NodeId id) {
        if (sample_exhausted[id]) return false;
        int budget = expansion_budget(run.importance().at(id), config);
        return static_cast<int>(executed[id].size()) < budget;
    };

    while (true) {
        if (run.timed_out()) return run.finish(Termination::Timeout, {});
        if (result.steps_used >= config.max_steps)
            return run.finish(Termination::StepBudget, {});

        // Selection: walk down by UCB until a node with unexecuted budget.
        // Subtrees that can neither expand nor descend are marked Dead and
        // excluded from later walks.
        std::vector<NodeId> path{0};
        bool exhausted = false;
        while (true) {
            NodeId cur = path.back();
            if (tree.node(cur).status != NodeStatus::Dead && has_budget(cur)) break;
            NodeId best = -1;
            double best_ucb = -kInf;
            const int parent_cnt = std::max(tree.node(cur).visit_count, 1);
            for (NodeId kid : tree.children(cur)) {
                const auto& child = tree.node(kid);
                if (child.status == NodeStatus::Dead) continue;
                double u = ucb_value(child.critic_score, child.visit_count, parent_cnt,
                                     config.ucb_alpha);
                if (best == -1 || u > best_ucb) {  // ties keep the lower node id
                    best = kid;
                    best_ucb = u;
                }
            }
            if (best == -1) {
                tree.node_mut(cur).status = NodeStatus::Dead;
                if (cur == 0) {
                    exhausted = true;
                    break;
                }
                path.pop_back();
                continue;
            }
            path.push_back(best);
        }
        if (exhausted) return run.finish(Termination::Exhausted, {});

        const NodeId target = path.back();
        const int step = ++result.steps_used;
        run.events().push_back({step, "select", target,
                                nlohmann::json{{"path", path},
                                               {"score", tree.node(target).critic_score}}});

        // Expansion: execute fresh tactics up to the remaining dynamic budget.
        const int budget = expansion_budget(run.importance().at(target), config);
        const int remaining = budget - static_cast<int>(executed[target].size());
        auto tactics = run.sample_at(target);
        std::vector<Tactic> fresh;
        for (auto& t : tactics)
            if (!executed[target].count(t.text)) fresh.push_back(std::move(t));
        const int to_execute = std::min<int>(remaining, static_cast<int>(fresh.size()));
        run.events().push_back({step, "expand", target,
                                nlohmann::json{{"sampled", tactics.size()},
                                               {"fresh", fresh.size()},
                                               {"budget", budget},
                                               {"executing", to_execute}}});

        if (tree.node(target).status == NodeStatus::Open)
            tree.node_mut(target).status = NodeStatus::Expanded;

        std::optional<NodeId> proved_node;
        for (int i = 0; i < to_execute; ++i) {
            executed[target].insert(fresh[i].text);
            auto outcome = run.execute(target, fresh[i], step);
            ensure_slots();
            if (outcome.proved) {
                proved_node = outcome.new_node;
                break;
            }
        }
        if (to_execute == 0) sample_exhausted[target] = 1;  // dry expansion

        // Back-propagation: visit counts along the selection path. Importance
        // already folds in at insert time.
        for (NodeId id : path) tree.node_mut(id).visit_count += 1;

        if (proved_node) return run.finish(Termination::Proved, proved_node);
    }
}

SearchResult run_search(const Statement& statement, const Environment& env,
                        const Policy& policy, const Critic& critic,
                        const SearchConfig& config) {
    return config.algorithm == SearchAlgorithm::BFS
               ? bfs_search(statement, env, policy, critic, config)
               : eta_mcts_search(statement, env, policy, critic, config);
}

std::vector<SearchResult> run_batch(const std::vector<Statement>& statements,
                                    const Environment& env, const Policy& policy,
                                    const Critic& critic, const SearchConfig& config,
                                    int parallelism) {
    if (parallelism < 1) throw ConfigError("parallelism must be at least 1");
    std::vector<SearchResult> results(statements.size());
    std::atomic<size_t> next{0};

    auto worker = [&]() {
        while (true) {
            size_t i = next.fetch_add(1);
            if (i >= statements.size()) break;
            SearchConfig local = config;
            local.seed = config.seed ^ static_cast<unsigned long long>(i);
            try {
                results[i] = run_search(statements[i], env, policy, critic, local);
            } catch (const std::exception& e) {
                SearchResult failed;
                failed.termination = Termination::Error;
                failed.error = e.what();
                results[i] = std::move(failed);
            }
        }
    };

    const int workers =
        std::min<int>(parallelism, static_cast<int>(std::max<size_t>(statements.size(), 1)));
    if (workers <= 1) {
        worker();
    } else {
        std::vector<std::thread> threads;
        threads.reserve(workers);
        for (int w = 0; w < workers; ++w) threads.emplace_back(worker);
        for (auto& t : threads) t.join();
    }
    return results;
}

std::string results_csv(const std::vector<Statement>& statements,
                        const std::vector<SearchResult>& results) {
    std::string out =
        "statement_id,proved,steps_used,nodes_created,proof_length,termination,"
        "wall_seconds\n";
    for (size_t i = 0; i < results.size(); ++i) {
        const auto& r = results[i];
        out += i < statements.size() ? statements[i].id : "?";
        out += ',';
        out += r.proved ? "true" : "false";
        out += ',';
        out += std::to_string(r.steps_used);
        out += ',';
        out += std::to_string(r.nodes_created);
        out += ',';
        out += r.trajectory ? std::to_string(proof_length(*r.trajectory)) : "";
        out += ',';
        out += to_string(r.termination);
        out += ',';
        char buf[32];
        std::snprintf(buf, sizeof(buf), "%.3f", r.wall_seconds);
        out += buf;
        out += '\n';
    }
    return out;
}

}  // namespace tacsearch
