#pragma once

#include <optional>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "tacsearch/types.hpp"

namespace tacsearch {

using NodeId = int;

enum class NodeStatus { Open, Expanded, Proved, Dead };

std::string to_string(NodeStatus status);

struct SearchNode {
    NodeId node_id = 0;
    ProofState state;
    std::optional<NodeId> parent;
    std::optional<Tactic> incoming_tactic;
    double critic_score = 0.0;
    int visit_count = 0;
    NodeStatus status = NodeStatus::Open;

    // Policy confidence of the incoming tactic; 0 for the root. Used as a
    // deterministic tie-breaker in selection.
    double policy_confidence() const;
};

struct InsertResult {
    bool inserted = false;  // false: duplicate state, id names the existing node
    NodeId id = 0;
};

// Root-to-proved-node path as (state the tactic was applied to, tactic) steps.
struct Trajectory {
    Statement statement;
    std::vector<std::pair<ProofState, Tactic>> steps;
    ProofState terminal_state;
    bool proved = false;
};

// Number of steps of a proved trajectory. Throws ContractError if unproved.
int proof_length(const Trajectory& trajectory);

// The explored graph of one search. Node ids are dense and insertion-ordered;
// node 0 is the root. States are deduplicated by exact text match, so
// state_index is a bijection onto nodes.
class SearchTree {
public:
    SearchTree(Statement statement, double root_critic_score);

    const Statement& statement() const { return statement_; }
    size_t size() const { return nodes_.size(); }

    const SearchNode& node(NodeId id) const;
    SearchNode& node_mut(NodeId id);
    const std::vector<NodeId>& children(NodeId id) const;
    std::optional<NodeId> find_state(const std::string& state_text) const;

    // Creates a new Open node under parent unless state.text is already
    // present, in which case the tree is left unmodified and the existing id
    // is returned. Unknown parent id throws ContractError.
    InsertResult insert_node(NodeId parent, Tactic tactic, ProofState state,
                             double critic_score);

    // Requires node(proved_node).status == Proved.
    Trajectory extract_trajectory(NodeId proved_node) const;

    std::vector<NodeId> path_from_root(NodeId id) const;
    int depth(NodeId id) const;

    // One node per line: node_id, parent_id, status, critic_score,
    // visit_count, tactic_text, state_text (tab-separated, texts escaped).
    std::string dump() const;

    // Structural self-check used by tests; throws ValidationError on breakage.
    void check_invariants() const;

private:
    Statement statement_;
    std::vector<SearchNode> nodes_;
    std::vector<std::vector<NodeId>> children_;
    std::unordered_map<std::string, NodeId> state_index_;
};

}  // namespace tacsearch
