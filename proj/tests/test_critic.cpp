#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <algorithm>
#include <random>

#include "doctest.h"
#include "tacsearch/critic.hpp"
#include "tacsearch/errors.hpp"

using namespace tacsearch;

namespace {
Statement stmt() { return Statement{"s", ProofState{"root"}, "test"}; }
}  // namespace

TEST_CASE("policy confidence is the mean token logprob") {
    PolicyConfidenceCritic pc;
    auto score = pc.score_child(stmt(), ProofState{"x"}, Tactic{"t", {-0.1, -0.3}});
    CHECK(score.value == doctest::Approx(-0.2).epsilon(1e-12));
    CHECK(score.orientation == ScoreOrientation::HigherBetter);

    CHECK(pc.score_child(stmt(), ProofState{"x"}, Tactic{"t", {0.0}}).value == 0.0);
    CHECK(pc.score_child(stmt(), ProofState{"x"}, Tactic{"t", {-1, -1, -1}}).value ==
          doctest::Approx(-1.0));
    CHECK(pc.score_root(stmt(), ProofState{"root"}).value == 0.0);
}

TEST_CASE("policy confidence rejects empty token lists") {
    PolicyConfidenceCritic pc;
    CHECK_THROWS_AS(pc.score_child(stmt(), ProofState{"x"}, Tactic{"t", {}}), ContractError);
}

TEST_CASE("policy confidence is invariant under token permutation") {
    PolicyConfidenceCritic pc;
    std::vector<double> lps{-0.5, -0.25, -1.5, -0.05};
    auto base = pc.score_child(stmt(), ProofState{"x"}, Tactic{"t", lps}).value;
    std::sort(lps.begin(), lps.end());
    do {
        CHECK(pc.score_child(stmt(), ProofState{"x"}, Tactic{"t", lps}).value ==
              doctest::Approx(base).epsilon(1e-12));
    } while (std::next_permutation(lps.begin(), lps.end()));
}

namespace {
// Builds the tree used by the labeling tests:
// root -> A -> A1(proved path), root -> B (dead side).
SearchTree labeled_tree() {
    SearchTree tree(stmt(), 0.0);
    auto a = tree.insert_node(0, Tactic{"a", {-0.1}}, ProofState{"A"}, 0.0);
    auto b = tree.insert_node(0, Tactic{"b", {-0.2}}, ProofState{"B"}, 0.0);
    auto b1 = tree.insert_node(b.id, Tactic{"b1", {-0.2}}, ProofState{"B1"}, 0.0);
    auto q = tree.insert_node(a.id, Tactic{"fin", {-0.3}}, ProofState{"QED"}, 0.0);
    tree.node_mut(q.id).status = NodeStatus::Proved;
    (void)b1;
    return tree;
}
}  // namespace

TEST_CASE("PRM labels are reachability-to-Proved") {
    auto tree = labeled_tree();
    auto labels = label_prm_nodes(tree);
    REQUIRE(labels.size() == tree.size());
    std::map<std::string, int> by_state;
    for (const auto& l : labels) by_state[l.state_text] = l.label;
    CHECK(by_state.at("root") == 1);
    CHECK(by_state.at("A") == 1);
    CHECK(by_state.at("QED") == 1);
    CHECK(by_state.at("B") == -1);
    CHECK(by_state.at("B1") == -1);
    for (const auto& l : labels) CHECK(l.statement_id == "s");
}

TEST_CASE("unproved trees label everything -1") {
    SearchTree tree(stmt(), 0.0);
    tree.insert_node(0, Tactic{"a", {-0.1}}, ProofState{"A"}, 0.0);
    for (const auto& l : label_prm_nodes(tree)) CHECK(l.label == -1);
}

TEST_CASE("fit_prm computes exact per-state means") {
    std::vector<PRMLabel> labels{
        {"s", "both", 1}, {"s", "both", -1}, {"q", "up", 1},   {"q", "up", 1},
        {"q", "down", -1}, {"s", "mixed", 1}, {"q", "mixed", 1}, {"q", "mixed", -1},
    };
    auto table = fit_prm(labels);
    CHECK(table.predict("both") == doctest::Approx(0.0));
    CHECK(table.predict("up") == doctest::Approx(1.0));
    CHECK(table.predict("down") == doctest::Approx(-1.0));
    CHECK(table.predict("mixed") == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
    CHECK(table.predict("never-seen") == 0.0);
    CHECK_THROWS_AS(fit_prm({}), ContractError);
}

TEST_CASE("per-state mean minimizes squared error over a value grid") {
    std::mt19937_64 rng(5);
    for (int round = 0; round < 10; ++round) {
        std::vector<PRMLabel> labels;
        int n = 1 + static_cast<int>(rng() % 12);
        for (int i = 0; i < n; ++i)
            labels.push_back({"s", "state", rng() % 2 == 0 ? 1 : -1});
        auto table = fit_prm(labels);
        double prediction = table.predict("state");
        CHECK(prediction >= -1.0);
        CHECK(prediction <= 1.0);

        // Brute-force argmin over a dense grid of candidate values.
        double best_v = -2.0;
        double best_err = 1e100;
        for (int g = 0; g <= 2000; ++g) {
            double v = -1.0 + g * 0.001;
            double err = 0.0;
            for (const auto& l : labels) err += (v - l.label) * (v - l.label);
            if (err < best_err) {
                best_err = err;
                best_v = v;
            }
        }
        // The grid step is 0.001, so the argmin lands within half a step of
        // the exact mean.
        CHECK(std::abs(prediction - best_v) <= 5.0e-4 + 1e-12);
    }
}

TEST_CASE("PRM label TSV round-trips") {
    std::vector<PRMLabel> labels{{"s1", "state\twith\ttabs", 1},
                                 {"s2", "multi\nline", -1}};
    auto reloaded = prm_labels_from_tsv(prm_labels_to_tsv(labels));
    REQUIRE(reloaded.size() == 2);
    CHECK(reloaded[0].state_text == "state\twith\ttabs");
    CHECK(reloaded[0].label == 1);
    CHECK(reloaded[1].state_text == "multi\nline");
    CHECK(reloaded[1].label == -1);
    CHECK_THROWS_AS(prm_labels_from_tsv("a\tb\t2\n"), ParseError);
    CHECK_THROWS_AS(prm_labels_from_tsv("a\tb\n"), ParseError);
}

namespace {
Trajectory proved_chain(const std::vector<std::string>& states) {
    // states are the visited proof states; the final tactic reaches QED.
    Trajectory t;
    t.statement = stmt();
    t.proved = true;
    for (const auto& s : states)
        t.steps.emplace_back(ProofState{s}, Tactic{"step", {-0.1}});
    t.terminal_state = ProofState{"QED"};
    return t;
}
}  // namespace

TEST_CASE("distance critic records minimum remaining steps") {
    // 3-step proof: states a(3 left), b(2 left), c(1 left).
    auto t1 = proved_chain({"a", "b", "c"});
    // 4-step proof passing through b earlier: d(4), e(3), b(2->min stays 2), c(1).
    auto t2 = proved_chain({"d", "e", "b", "c"});
    // b also seen with 4 remaining in another proof; min must win.
    auto t3 = proved_chain({"b", "x", "y", "z"});

    auto table = fit_distance_critic({t1, t2, t3}, 6);
    CHECK(table.remaining_for("c") == 1);
    CHECK(table.remaining_for("b") == 2);
    CHECK(table.remaining_for("a") == 3);
    CHECK(table.remaining_for("d") == 4);
    CHECK(table.remaining_for("unseen") == 64);
    CHECK(table.path_for("c") == encode_distance(1, 6));
    CHECK(table.path_for("unseen") == encode_distance(64, 6));
}

TEST_CASE("distance values clamp at the representable maximum") {
    std::vector<std::string> states;
    for (int i = 0; i < 70; ++i) states.push_back("long-" + std::to_string(i));
    auto table = fit_distance_critic({proved_chain(states)}, 6);
    CHECK(table.remaining_for("long-0") == 64);  // 70 clamps
    CHECK(table.remaining_for("long-69") == 1);
    CHECK_THROWS_AS(fit_distance_critic({Trajectory{}}, 6), ContractError);
}

TEST_CASE("distance critic scores carry both tuple and scalar views") {
    DistanceTable table;
    table.levels = 6;
    table.remaining["near"] = 2;
    table.remaining["far"] = 40;
    DistanceCritic critic(std::move(table));

    auto near = critic.score_child(stmt(), ProofState{"near"}, Tactic{"t", {-0.1}});
    auto far = critic.score_child(stmt(), ProofState{"far"}, Tactic{"t", {-0.1}});
    auto unseen = critic.score_root(stmt(), ProofState{"unknown"});

    CHECK(near.orientation == ScoreOrientation::LowerBetter);
    CHECK(near.value == doctest::Approx(2.0));
    REQUIRE(near.path.has_value());
    CHECK(compare_distance(*near.path, *far.path) < 0);
    CHECK(unseen.value == doctest::Approx(64.0));

    // UCB scalarization: 1 - remaining/2^L, higher is better.
    CHECK(near.selection_scalar() == doctest::Approx(1.0 - 2.0 / 64.0));
    CHECK(far.selection_scalar() == doctest::Approx(1.0 - 40.0 / 64.0));
    CHECK(unseen.selection_scalar() == doctest::Approx(0.0));
    CHECK(near.selection_scalar() > far.selection_scalar());
}

TEST_CASE("distance table TSV round-trips") {
    DistanceTable table;
    table.levels = 6;
    table.remaining["state one"] = 3;
    table.remaining["tab\tstate"] = 7;
    auto reloaded = distance_table_from_tsv(distance_table_to_tsv(table), 6);
    CHECK(reloaded.remaining_for("state one") == 3);
    CHECK(reloaded.remaining_for("tab\tstate") == 7);
    CHECK_THROWS_AS(distance_table_from_tsv("state\t0\n", 6), ParseError);
    CHECK_THROWS_AS(distance_table_from_tsv("state\n", 6), ParseError);
}
