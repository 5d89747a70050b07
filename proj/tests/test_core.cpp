#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <random>

#include "doctest.h"
#include "tacsearch/errors.hpp"
#include "tacsearch/text_util.hpp"
#include "tacsearch/tree.hpp"

using namespace tacsearch;

namespace {
Statement make_statement(const std::string& id = "s", const std::string& goal = "root") {
    return Statement{id, ProofState{goal}, "test"};
}

Tactic tac(const std::string& text, double lp = -0.5) {
    return Tactic{text, {lp}};
}
}  // namespace

TEST_CASE("insert dedups identical states across parents") {
    SearchTree tree(make_statement(), 0.0);
    auto a = tree.insert_node(0, tac("ta"), ProofState{"A"}, 0.1);
    auto b = tree.insert_node(0, tac("tb"), ProofState{"B"}, 0.2);
    REQUIRE(a.inserted);
    REQUIRE(b.inserted);

    auto dup = tree.insert_node(b.id, tac("tc"), ProofState{"A"}, 0.3);
    CHECK_FALSE(dup.inserted);
    CHECK(dup.id == a.id);
    CHECK(tree.size() == 3);  // unchanged by the duplicate
    tree.check_invariants();
}

TEST_CASE("fresh insert creates an Open child with zero visits") {
    SearchTree tree(make_statement(), 0.0);
    auto r = tree.insert_node(0, tac("t"), ProofState{"A"}, 0.7);
    REQUIRE(r.inserted);
    const auto& node = tree.node(r.id);
    CHECK(node.parent == 0);
    CHECK(node.visit_count == 0);
    CHECK(node.status == NodeStatus::Open);
    CHECK(node.critic_score == doctest::Approx(0.7));
}

TEST_CASE("unknown parent is a structural error") {
    SearchTree tree(make_statement(), 0.0);
    CHECK_THROWS_AS(tree.insert_node(42, tac("t"), ProofState{"A"}, 0.0), ContractError);
}

TEST_CASE("a hand-built 7-node tree keeps its topology and index") {
    // root with children A,B; A with A1,A2; B with B1,B2.
    SearchTree tree(make_statement(), 0.0);
    auto a = tree.insert_node(0, tac("a"), ProofState{"A"}, 0.0);
    auto b = tree.insert_node(0, tac("b"), ProofState{"B"}, 0.0);
    auto a1 = tree.insert_node(a.id, tac("a1"), ProofState{"A1"}, 0.0);
    auto a2 = tree.insert_node(a.id, tac("a2"), ProofState{"A2"}, 0.0);
    auto b1 = tree.insert_node(b.id, tac("b1"), ProofState{"B1"}, 0.0);
    auto b2 = tree.insert_node(b.id, tac("b2"), ProofState{"B2"}, 0.0);

    CHECK(tree.size() == 7);
    CHECK(tree.children(0) == std::vector<NodeId>{a.id, b.id});
    CHECK(tree.children(a.id) == std::vector<NodeId>{a1.id, a2.id});
    CHECK(tree.children(b.id) == std::vector<NodeId>{b1.id, b2.id});
    for (const char* s : {"root", "A", "B", "A1", "A2", "B1", "B2"})
        CHECK(tree.find_state(s).has_value());
    tree.check_invariants();
}

TEST_CASE("trajectory of a directly proved root has one step") {
    SearchTree tree(make_statement(), 0.0);
    auto q = tree.insert_node(0, tac("exact h"), ProofState{"QED"}, 0.0);
    tree.node_mut(q.id).status = NodeStatus::Proved;
    auto trajectory = tree.extract_trajectory(q.id);
    CHECK(trajectory.proved);
    CHECK(proof_length(trajectory) == 1);
    CHECK(trajectory.steps[0].first.text == "root");
    CHECK(trajectory.steps[0].second.text == "exact h");
    CHECK(trajectory.terminal_state.text == "QED");
}

TEST_CASE("depth-3 trajectory chains states parent to child") {
    SearchTree tree(make_statement(), 0.0);
    auto a = tree.insert_node(0, tac("t1"), ProofState{"A"}, 0.0);
    auto b = tree.insert_node(a.id, tac("t2"), ProofState{"B"}, 0.0);
    auto q = tree.insert_node(b.id, tac("t3"), ProofState{"QED"}, 0.0);
    tree.node_mut(q.id).status = NodeStatus::Proved;

    auto trajectory = tree.extract_trajectory(q.id);
    REQUIRE(trajectory.steps.size() == 3);
    CHECK(trajectory.steps[0].first.text == "root");
    CHECK(trajectory.steps[1].first.text == "A");
    CHECK(trajectory.steps[2].first.text == "B");
    CHECK(proof_length(trajectory) == 3);
}

TEST_CASE("extract_trajectory rejects unproved nodes") {
    SearchTree tree(make_statement(), 0.0);
    auto a = tree.insert_node(0, tac("t"), ProofState{"A"}, 0.0);
    CHECK_THROWS_AS(tree.extract_trajectory(a.id), ContractError);
}

TEST_CASE("proof_length rejects unproved trajectories") {
    Trajectory t;
    t.proved = false;
    CHECK_THROWS_AS(proof_length(t), ContractError);
}

TEST_CASE("shortest length per statement is the minimum over proofs") {
    // Per-statement reporting takes the min over found proofs.
    Trajectory four;
    four.proved = true;
    four.steps.resize(4);
    Trajectory six;
    six.proved = true;
    six.steps.resize(6);
    CHECK(std::min(proof_length(four), proof_length(six)) == 4);
}

TEST_CASE("random insert sequences keep the index bijective and acyclic") {
    std::mt19937_64 rng(7);
    for (int round = 0; round < 20; ++round) {
        SearchTree tree(make_statement(), 0.0);
        for (int i = 0; i < 60; ++i) {
            NodeId parent = static_cast<NodeId>(rng() % tree.size());
            // Deliberately collide state texts about half the time.
            std::string state = "state-" + std::to_string(rng() % 40);
            tree.insert_node(parent, tac("t" + std::to_string(i)), ProofState{state}, 0.0);
        }
        tree.check_invariants();
        for (size_t i = 1; i < tree.size(); ++i)
            CHECK(*tree.node(static_cast<NodeId>(i)).parent < static_cast<NodeId>(i));
    }
}

TEST_CASE("insert then extract reproduces the inserted step sequence") {
    std::mt19937_64 rng(11);
    for (int round = 0; round < 10; ++round) {
        SearchTree tree(make_statement(), 0.0);
        std::vector<std::pair<std::string, std::string>> chain;
        NodeId cur = 0;
        std::string prev_state = "root";
        int depth = 1 + static_cast<int>(rng() % 8);
        for (int d = 0; d < depth; ++d) {
            std::string state =
                d + 1 == depth ? "QED" : "st-" + std::to_string(round) + "-" + std::to_string(d);
            std::string tactic = "tac-" + std::to_string(d);
            chain.emplace_back(prev_state, tactic);
            auto r = tree.insert_node(cur, tac(tactic), ProofState{state}, 0.0);
            REQUIRE(r.inserted);
            cur = r.id;
            prev_state = state;
        }
        tree.node_mut(cur).status = NodeStatus::Proved;
        auto trajectory = tree.extract_trajectory(cur);
        REQUIRE(trajectory.steps.size() == chain.size());
        for (size_t i = 0; i < chain.size(); ++i) {
            CHECK(trajectory.steps[i].first.text == chain[i].first);
            CHECK(trajectory.steps[i].second.text == chain[i].second);
        }
    }
}

TEST_CASE("tree dump escapes tabs and newlines in states") {
    SearchTree tree(make_statement("s", "goal\twith\ntricky\\chars"), 0.25);
    tree.insert_node(0, tac("intro"), ProofState{"next"}, -0.1);
    auto dump = tree.dump();
    auto lines = split_lines(dump);
    REQUIRE(lines.size() == 2);
    CHECK(lines[0].find("goal\\twith\\ntricky\\\\chars") != std::string::npos);
    CHECK(lines[0].find('\t') != std::string::npos);  // field separators survive
    auto fields = split_tabs(lines[1]);
    REQUIRE(fields.size() == 7);
    CHECK(fields[0] == "1");
    CHECK(fields[1] == "0");
    CHECK(fields[2] == "open");
    CHECK(fields[5] == "intro");
    CHECK(fields[6] == "next");
}

TEST_CASE("field escaping round-trips arbitrary texts") {
    std::mt19937_64 rng(3);
    const std::string alphabet = "ab\\\t\n xyz";
    for (int i = 0; i < 500; ++i) {
        std::string raw;
        int len = static_cast<int>(rng() % 24);
        for (int c = 0; c < len; ++c) raw += alphabet[rng() % alphabet.size()];
        auto escaped = escape_field(raw);
        CHECK(escaped.find('\t') == std::string::npos);
        CHECK(escaped.find('\n') == std::string::npos);
        CHECK(unescape_field(escaped) == raw);
    }
}
