#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <chrono>
#include <cmath>
#include <set>
#include <thread>

#include "doctest.h"
#include "json.hpp"
#include "tacsearch/errors.hpp"
#include "tacsearch/search.hpp"
#include "tacsearch/text_util.hpp"

using namespace tacsearch;

namespace {
SearchConfig base_config(SearchAlgorithm algorithm) {
    SearchConfig config;
    config.algorithm = algorithm;
    config.max_steps = 200;
    config.seed = 42;
    return config;
}

ScriptedEnvironment direct_env() {
    ScriptedEnvironment env;
    env.add_statement(Statement{"easy", ProofState{"goal"}, "test"});
    env.add_row("goal", "finish", "QED");
    return env;
}

ScriptedEnvironment dead_env() {
    ScriptedEnvironment env;
    env.add_statement(Statement{"stuck", ProofState{"goal"}, "test"});
    env.add_row("goal", "step", "cul-de-sac");
    return env;
}

// Endless chain that sleeps on every application.
class SleepyChain : public Environment {
public:
    explicit SleepyChain(double delay_seconds) : delay_(delay_seconds) {}
    ApplyResult apply(const ProofState& state, const Tactic&,
                      const TimeoutPolicy&) const override {
        std::this_thread::sleep_for(std::chrono::duration<double>(delay_));
        return ApplyResult::new_state(ProofState{state.text + "."});
    }

private:
    double delay_;
};

// A policy proposing one fixed tactic, for stub environments.
class FixedPolicy : public Policy {
public:
    explicit FixedPolicy(std::string text) : text_(std::move(text)) {}
    std::vector<Tactic> sample(const Statement&, const ProofState&, const SamplingPlan&,
                               std::mt19937_64&) const override {
        return {Tactic{text_, {-0.5}}};
    }

private:
    std::string text_;
};
}  // namespace

TEST_CASE("expansion budget formula on frozen tuples") {
    auto eval = [](double I, double alpha, int bmin, int bmax) {
        SearchConfig c;
        c.budget_alpha = alpha;
        c.budget_min = bmin;
        c.budget_max = bmax;
        return expansion_budget(I, c);
    };
    CHECK(eval(0.0, 4.0, 1, 8) == 1);
    CHECK(eval(0.3, 2.0, 1, 4) == 1);
    CHECK(eval(0.5, 4.0, 1, 8) == 3);
    CHECK(eval(1.0, 4.0, 1, 8) == 5);
    CHECK(eval(2.5, 4.0, 1, 8) == 8);   // clamps at B_max
    CHECK(eval(10.0, 4.0, 1, 8) == 8);
    CHECK(eval(0.9999, 1.0, 1, 8) == 1);
    CHECK(eval(0.25, 4.0, 2, 8) == 2);  // clamps at B_min
    CHECK(eval(0.0, 0.0, 1, 1) == 1);
    CHECK(eval(1.75, 4.0, 1, 4) == 4);

    // Nondecreasing in I and always inside [B_min, B_max].
    int prev = 0;
    for (double I = 0.0; I <= 4.0; I += 0.05) {
        int e = eval(I, 4.0, 1, 8);
        CHECK(e >= prev);
        CHECK(e >= 1);
        CHECK(e <= 8);
        prev = e;
    }
}

TEST_CASE("UCB formula on frozen tuples") {
    CHECK(ucb_value(0.5, 1, 2, 1.0) == doctest::Approx(1.6774100225154747).epsilon(1e-12));
    CHECK(ucb_value(0.5, 1, 1, 1.0) == doctest::Approx(0.5));  // zero exploration
    CHECK(ucb_value(0.0, 3, 10, 1.0) == doctest::Approx(1.5517556536555206).epsilon(1e-12));
    CHECK(ucb_value(-0.25, 2, 5, 0.5) ==
          doctest::Approx(0.42686436302783559).epsilon(1e-12));
    CHECK(ucb_value(0.9, 1, 100, 1.0) == doctest::Approx(3.9348542587702928).epsilon(1e-12));
    CHECK(ucb_value(0.1, 7, 7, 2.0) == doctest::Approx(0.1));
    CHECK(ucb_value(0.75, 2, 3, 1.5) == doctest::Approx(2.1007749577508239).epsilon(1e-12));
    CHECK(ucb_value(-1.0, 8, 64, 1.0) == doctest::Approx(1.0393339803376178).epsilon(1e-12));
    CHECK(ucb_value(0.33, 4, 9, 0.25) == doctest::Approx(0.64838071082752657).epsilon(1e-12));
    CHECK(ucb_value(1.0, 2, 2, 5.0) == doctest::Approx(1.0));
    CHECK(ucb_value(0.6, 999, 1000, 1.0) ==
          doctest::Approx(0.64473254594998186).epsilon(1e-12));
    CHECK(ucb_value(0.42, 5, 17, 0.7) == doctest::Approx(1.5151255284165706).epsilon(1e-12));

    // Unvisited nodes: +infinity under exploration, plain critic when greedy.
    CHECK(std::isinf(ucb_value(0.2, 0, 3, 1.0)));
    CHECK(ucb_value(0.2, 0, 3, 0.0) == doctest::Approx(0.2));
}

TEST_CASE("importance updates match the hand-evaluated chain") {
    SearchTree tree(Statement{"s", ProofState{"root"}, "test"}, 0.5);
    ImportanceMap importance;
    auto a = tree.insert_node(0, Tactic{"t", {-0.1}}, ProofState{"a"}, 0.2);
    importance.update_on_insert(tree, a.id);
    CHECK(importance.at(0) == doctest::Approx(0.3));
    CHECK(importance.at(a.id) == 0.0);  // leaves have zero importance

    auto b = tree.insert_node(a.id, Tactic{"t", {-0.1}}, ProofState{"b"}, 0.9);
    importance.update_on_insert(tree, b.id);
    CHECK(importance.at(0) == doctest::Approx(0.4));      // max(0.3, |0.9-0.5|)
    CHECK(importance.at(a.id) == doctest::Approx(0.7));   // |0.9-0.2|
    CHECK(importance.at(b.id) == 0.0);

    // Single child under a 0.5 root with critic 0.8.
    SearchTree tree2(Statement{"s2", ProofState{"r"}, "test"}, 0.5);
    ImportanceMap imp2;
    auto c = tree2.insert_node(0, Tactic{"t", {-0.1}}, ProofState{"c"}, 0.8);
    imp2.update_on_insert(tree2, c.id);
    CHECK(imp2.at(0) == doctest::Approx(0.3));
}

TEST_CASE("BFS proves a direct statement in one step") {
    auto env = direct_env();
    TabularSoftmaxPolicy policy(env.vocabulary());
    PolicyConfidenceCritic critic;
    auto result = bfs_search(env.statements()[0], env, policy, critic,
                             base_config(SearchAlgorithm::BFS));
    CHECK(result.proved);
    CHECK(result.termination == Termination::Proved);
    CHECK(result.steps_used == 1);
    REQUIRE(result.trajectory.has_value());
    CHECK(proof_length(*result.trajectory) == 1);
    result.tree->check_invariants();
}

TEST_CASE("BFS exhausts finite unsolvable spaces") {
    auto env = dead_env();
    TabularSoftmaxPolicy policy(env.vocabulary());
    PolicyConfidenceCritic critic;
    auto result = bfs_search(env.statements()[0], env, policy, critic,
                             base_config(SearchAlgorithm::BFS));
    CHECK_FALSE(result.proved);
    CHECK(result.termination == Termination::Exhausted);
    CHECK_FALSE(result.trajectory.has_value());
    CHECK(result.steps_used == 2);  // goal and the cul-de-sac
}

TEST_CASE("BFS hits the step budget") {
    ScriptedEnvironment env;
    env.add_statement(Statement{"chain", ProofState{"c0"}, "test"});
    for (int i = 0; i < 20; ++i)
        env.add_row("c" + std::to_string(i), "next", "c" + std::to_string(i + 1));
    TabularSoftmaxPolicy policy(env.vocabulary());
    PolicyConfidenceCritic critic;
    auto config = base_config(SearchAlgorithm::BFS);
    config.max_steps = 3;
    auto result = bfs_search(env.statements()[0], env, policy, critic, config);
    CHECK_FALSE(result.proved);
    CHECK(result.termination == Termination::StepBudget);
    CHECK(result.steps_used == 3);
    CHECK(result.nodes_created == 3);
}

TEST_CASE("whole-search timeout fires") {
    SleepyChain env(0.005);
    Statement statement{"slow", ProofState{"x"}, "test"};
    FixedPolicy policy("go");
    PolicyConfidenceCritic critic;
    auto config = base_config(SearchAlgorithm::BFS);
    config.sampling_plan = SamplingPlan::uniform(1);
    config.timeout.whole_search_seconds = 0.001;
    config.timeout.per_step_seconds = 0.001;
    auto result = bfs_search(statement, env, policy, critic, config);
    CHECK(result.termination == Termination::Timeout);
    CHECK_FALSE(result.proved);
}

TEST_CASE("exhaustive BFS matches the oracle on puzzles") {
    PuzzleFamilyConfig pf;
    pf.seed = 11;
    pf.num_statements = 10;
    pf.state_space_size = 40;
    pf.branching = 3;
    pf.solvable_fraction = 0.6;
    pf.max_depth = 5;
    auto env = generate_puzzles(pf);
    ExhaustivePolicy policy(env.vocabulary());
    ConstantCritic critic;
    auto config = base_config(SearchAlgorithm::BFS);
    config.max_steps = 500;

    for (const auto& statement : env.statements()) {
        auto oracle = oracle_solve(env, statement);
        auto result = bfs_search(statement, env, policy, critic, config);
        CHECK(result.proved == oracle.has_value());
        if (oracle) CHECK(proof_length(*result.trajectory) == *oracle);
        result.tree->check_invariants();
    }
}

TEST_CASE("proved trajectories replay against the environment") {
    PuzzleFamilyConfig pf;
    pf.seed = 19;
    pf.num_statements = 6;
    pf.state_space_size = 25;
    pf.branching = 3;
    pf.solvable_fraction = 1.0;
    pf.max_depth = 4;
    auto env = generate_puzzles(pf);
    ExhaustivePolicy policy(env.vocabulary());
    ConstantCritic critic;
    auto config = base_config(SearchAlgorithm::BFS);
    config.max_steps = 300;

    for (const auto& statement : env.statements()) {
        auto result = bfs_search(statement, env, policy, critic, config);
        REQUIRE(result.proved);
        const auto& steps = result.trajectory->steps;
        for (size_t i = 0; i < steps.size(); ++i) {
            auto applied = apply_tactic(env, steps[i].first, steps[i].second, config.timeout);
            if (i + 1 == steps.size()) {
                CHECK(applied.kind == ApplyResult::Kind::Proved);
            } else {
                REQUIRE(applied.kind == ApplyResult::Kind::NewState);
                CHECK(applied.next->text == steps[i + 1].first.text);
            }
        }
    }
}

TEST_CASE("BFS event log obeys the priority-queue discipline") {
    PuzzleFamilyConfig pf;
    pf.seed = 23;
    pf.num_statements = 5;
    pf.state_space_size = 35;
    pf.branching = 3;
    pf.solvable_fraction = 0.4;
    pf.max_depth = 5;
    auto env = generate_puzzles(pf);
    TabularSoftmaxPolicy policy(env.vocabulary());
    PolicyConfidenceCritic critic;
    auto config = base_config(SearchAlgorithm::BFS);
    config.max_steps = 60;

    for (const auto& statement : env.statements()) {
        auto result = bfs_search(statement, env, policy, critic, config);
        // Replay: active set from insert events; each select must pop the
        // best (score desc, pc desc, id asc) and never repeat.
        struct Entry {
            double score, pc;
        };
        std::map<int, Entry> active;
        std::set<int> selected;
        for (const auto& line : split_lines(serialize_events(result.events))) {
            auto j = nlohmann::json::parse(line);
            int node = j.at("node_id").get<int>();
            std::string event = j.at("event").get<std::string>();
            if (event == "insert") {
                active[node] = Entry{j.at("payload").at("score").get<double>(),
                                     j.at("payload").at("pc").get<double>()};
            } else if (event == "select") {
                REQUIRE(active.count(node));
                CHECK(selected.insert(node).second);  // BFS never reselects
                for (const auto& [id, e] : active) {
                    bool better = e.score > active[node].score ||
                                  (e.score == active[node].score &&
                                   (e.pc > active[node].pc ||
                                    (e.pc == active[node].pc && id < node)));
                    CHECK_FALSE(better);
                }
                active.erase(node);
            }
        }
    }
}

namespace {
ScriptedEnvironment greedy_trace_env() {
    ScriptedEnvironment env;
    env.add_statement(Statement{"trace", ProofState{"R"}, "test"});
    env.add_row("R", "a", "A");
    env.add_row("R", "b", "B");
    env.add_row("A", "a1", "A1");
    env.add_row("A", "a2", "A2");
    env.add_row("B", "b1", "B1");
    env.add_row("B", "b2", "B2");
    env.add_row("B1", "b11", "B11");
    return env;
}

PRMCritic greedy_trace_critic() {
    PRMTable table;
    table.cells["R"] = {0.5, 1};
    table.cells["A"] = {0.9, 1};
    table.cells["B"] = {0.8, 1};
    table.cells["A1"] = {0.1, 1};
    table.cells["A2"] = {0.2, 1};
    table.cells["B1"] = {0.85, 1};
    table.cells["B11"] = {0.3, 1};
    table.cells["B2"] = {0.7, 1};
    return PRMCritic(std::move(table));
}
}  // namespace

TEST_CASE("greedy eta-MCTS follows the hand-simulated 10-step trace") {
    // ucb_alpha = 0 makes selection purely greedy on critic scores. With
    // budget_alpha = 4 the trace below was worked out by hand from the
    // E(n) = max(1, min(8, floor(4*I)+1)) budgets and the score table:
    //   it1 expand R (E=1)        -> A(0.9); I(R)=0.4 so E(R) grows to 2
    //   it2 expand R again        -> B(0.8)
    //   it3 descend to A (0.9>0.8), expand -> A1(0.1); I(A)=0.8, E(A)=4
    //   it4 expand A              -> A2(0.2)
    //   it5 expand A              -> menu exhausted (dry)
    //   it6 descend A -> A2 (0.2>0.1), dry
    //   it7 A2 dead, descend to A1, dry
    //   it8 A subtree dead, descend to B, expand -> B1(0.85); E(B) stays 1
    //   it9 B spent, descend B1, expand -> B11(0.3); I(B)=0.5, E(B)=3
    //   it10 B regains budget, expand -> B2(0.7)
    auto env = greedy_trace_env();
    ExhaustivePolicy policy(env.vocabulary());
    auto critic = greedy_trace_critic();
    SearchConfig config = base_config(SearchAlgorithm::EtaMCTS);
    config.max_steps = 10;
    config.ucb_alpha = 0.0;
    config.budget_alpha = 4.0;
    config.budget_min = 1;
    config.budget_max = 8;
    config.sampling_plan = SamplingPlan::uniform(8);

    auto result = eta_mcts_search(env.statements()[0], env, policy, critic, config);
    CHECK(result.termination == Termination::StepBudget);
    CHECK(result.steps_used == 10);

    std::vector<int> selects;
    for (const auto& e : result.events)
        if (e.event == "select") selects.push_back(e.node_id);
    CHECK(selects == std::vector<int>{0, 0, 1, 1, 1, 4, 3, 2, 5, 2});

    const auto& tree = *result.tree;
    CHECK(tree.size() == 8);
    CHECK(tree.node(0).visit_count == 10);
    CHECK(tree.node(1).visit_count == 5);
    CHECK(tree.node(2).visit_count == 3);
    CHECK(tree.node(1).status == NodeStatus::Dead);
    CHECK(tree.node(3).status == NodeStatus::Dead);
    CHECK(tree.node(4).status == NodeStatus::Dead);
    tree.check_invariants();
}

TEST_CASE("eta-MCTS reselects nodes on a deep chain with B_max=1") {
    ScriptedEnvironment env;
    env.add_statement(Statement{"chain", ProofState{"c0"}, "test"});
    for (int i = 0; i < 12; ++i)
        env.add_row("c" + std::to_string(i), "next", "c" + std::to_string(i + 1));
    TabularSoftmaxPolicy policy(env.vocabulary());
    PolicyConfidenceCritic critic;
    SearchConfig config = base_config(SearchAlgorithm::EtaMCTS);
    config.max_steps = 8;
    config.budget_max = 1;

    auto result = eta_mcts_search(env.statements()[0], env, policy, critic, config);
    bool reselected = false;
    for (size_t i = 0; i < result.tree->size(); ++i)
        reselected = reselected ||
                     result.tree->node(static_cast<NodeId>(i)).visit_count >= 2;
    CHECK(reselected);
    result.tree->check_invariants();
}

TEST_CASE("eta-MCTS proves and exhausts like BFS on small fixtures") {
    {
        auto env = direct_env();
        TabularSoftmaxPolicy policy(env.vocabulary());
        PolicyConfidenceCritic critic;
        auto result = eta_mcts_search(env.statements()[0], env, policy, critic,
                                      base_config(SearchAlgorithm::EtaMCTS));
        CHECK(result.proved);
        CHECK(proof_length(*result.trajectory) == 1);
    }
    {
        auto env = dead_env();
        TabularSoftmaxPolicy policy(env.vocabulary());
        PolicyConfidenceCritic critic;
        auto result = eta_mcts_search(env.statements()[0], env, policy, critic,
                                      base_config(SearchAlgorithm::EtaMCTS));
        CHECK_FALSE(result.proved);
        CHECK(result.termination == Termination::Exhausted);
    }
}

TEST_CASE("eta-MCTS explores low-critic children under UCB pressure") {
    // Two children scoring 0.9 and 0.1; exploration must still visit the
    // weak one.
    ScriptedEnvironment env;
    env.add_statement(Statement{"two", ProofState{"R"}, "test"});
    env.add_row("R", "hi", "H");
    env.add_row("R", "lo", "L");
    // Long tails below both so the search has room to keep selecting.
    for (int i = 0; i < 30; ++i) {
        env.add_row(i == 0 ? "H" : "H" + std::to_string(i), "next",
                    "H" + std::to_string(i + 1));
        env.add_row(i == 0 ? "L" : "L" + std::to_string(i), "next",
                    "L" + std::to_string(i + 1));
    }
    PRMTable table;
    table.cells["H"] = {0.9, 1};
    table.cells["L"] = {0.1, 1};
    PRMCritic critic(std::move(table));
    ExhaustivePolicy policy(env.vocabulary());
    SearchConfig config = base_config(SearchAlgorithm::EtaMCTS);
    config.max_steps = 100;
    config.ucb_alpha = 1.0;

    auto result = eta_mcts_search(env.statements()[0], env, policy, critic, config);
    NodeId lo_id = *result.tree->find_state("L");
    CHECK(result.tree->node(lo_id).visit_count > 0);
}

TEST_CASE("dedup holds for both engines at termination") {
    PuzzleFamilyConfig pf;
    pf.seed = 29;
    pf.num_statements = 6;
    pf.state_space_size = 30;
    pf.branching = 3;
    pf.solvable_fraction = 0.5;
    pf.max_depth = 5;
    auto env = generate_puzzles(pf);
    TabularSoftmaxPolicy policy(env.vocabulary());
    PolicyConfidenceCritic critic;
    for (auto algorithm : {SearchAlgorithm::BFS, SearchAlgorithm::EtaMCTS}) {
        auto config = base_config(algorithm);
        config.max_steps = 80;
        for (const auto& statement : env.statements()) {
            auto result = run_search(statement, env, policy, critic, config);
            result.tree->check_invariants();  // includes the state bijection
            CHECK(result.steps_used <= config.max_steps);
            CHECK(result.proved == (result.termination == Termination::Proved));
            CHECK(result.proved == result.trajectory.has_value());
        }
    }
}

TEST_CASE("policy backend failures degrade to an empty expansion") {
    class FailingPolicy : public Policy {
    public:
        std::vector<Tactic> sample(const Statement&, const ProofState&,
                                   const SamplingPlan&, std::mt19937_64&) const override {
            throw PolicyTimeoutError("stub backend down");
        }
    };
    auto env = direct_env();
    FailingPolicy policy;
    PolicyConfidenceCritic critic;
    auto result = bfs_search(env.statements()[0], env, policy, critic,
                             base_config(SearchAlgorithm::BFS));
    CHECK_FALSE(result.proved);
    CHECK(result.termination == Termination::Exhausted);  // root expands empty
}

TEST_CASE("run_batch is order-stable and parallelism-invariant") {
    PuzzleFamilyConfig pf;
    pf.seed = 31;
    pf.num_statements = 12;
    pf.state_space_size = 50;
    pf.branching = 3;
    pf.solvable_fraction = 0.5;
    pf.max_depth = 5;
    auto env = generate_puzzles(pf);
    TabularSoftmaxPolicy policy(env.vocabulary());
    PolicyConfidenceCritic critic;
    auto config = base_config(SearchAlgorithm::BFS);
    config.max_steps = 40;

    auto serial = run_batch(env.statements(), env, policy, critic, config, 1);
    auto parallel = run_batch(env.statements(), env, policy, critic, config, 4);
    REQUIRE(serial.size() == parallel.size());
    for (size_t i = 0; i < serial.size(); ++i) {
        CHECK(serial[i].proved == parallel[i].proved);
        CHECK(serial[i].steps_used == parallel[i].steps_used);
        CHECK(serial[i].nodes_created == parallel[i].nodes_created);
        CHECK(serialize_events(serial[i].events) == serialize_events(parallel[i].events));
        CHECK(serial[i].tree->dump() == parallel[i].tree->dump());
    }

    CHECK(run_batch({}, env, policy, critic, config, 4).empty());
}

TEST_CASE("same seed gives byte-identical event logs") {
    PuzzleFamilyConfig pf;
    pf.seed = 37;
    pf.num_statements = 4;
    pf.state_space_size = 30;
    pf.branching = 3;
    pf.solvable_fraction = 0.5;
    pf.max_depth = 4;
    auto env = generate_puzzles(pf);
    TabularSoftmaxPolicy policy(env.vocabulary());
    PolicyConfidenceCritic critic;
    auto config = base_config(SearchAlgorithm::BFS);
    config.max_steps = 50;

    auto a = bfs_search(env.statements()[0], env, policy, critic, config);
    auto b = bfs_search(env.statements()[0], env, policy, critic, config);
    CHECK(serialize_events(a.events) == serialize_events(b.events));
    CHECK(a.tree->dump() == b.tree->dump());

    config.seed = 43;
    auto c = bfs_search(env.statements()[0], env, policy, critic, config);
    // Different stream; logs normally differ (not asserted, sampling could
    // coincide on tiny menus).
    (void)c;
}

TEST_CASE("results CSV carries one row per statement") {
    auto env = direct_env();
    TabularSoftmaxPolicy policy(env.vocabulary());
    PolicyConfidenceCritic critic;
    auto results = run_batch(env.statements(), env, policy, critic,
                             base_config(SearchAlgorithm::BFS), 1);
    auto csv = results_csv(env.statements(), results);
    auto lines = split_lines(csv);
    REQUIRE(lines.size() == 2);
    CHECK(lines[0].rfind("statement_id,", 0) == 0);
    CHECK(lines[1].rfind("easy,true,1,", 0) == 0);
}
