#include "tacsearch/tree.hpp"

#include <algorithm>

#include "tacsearch/errors.hpp"
#include "tacsearch/text_util.hpp"

namespace tacsearch {

std::string to_string(NodeStatus status) {
    switch (status) {
        case NodeStatus::Open: return "open";
        case NodeStatus::Expanded: return "expanded";
        case NodeStatus::Proved: return "proved";
        case NodeStatus::Dead: return "dead";
    }
    return "unknown";
}

double SearchNode::policy_confidence() const {
    if (!incoming_tactic) return 0.0;
    return mean_logprob(*incoming_tactic);
}

int proof_length(const Trajectory& trajectory) {
    if (!trajectory.proved)
        throw ContractError("proof_length: trajectory is not proved");
    return static_cast<int>(trajectory.steps.size());
}

SearchTree::SearchTree(Statement statement, double root_critic_score)
    : statement_(std::move(statement)) {
    SearchNode root;
    root.node_id = 0;
    root.state = statement_.goal_state;
    root.critic_score = root_critic_score;
    nodes_.push_back(std::move(root));
    children_.emplace_back();
    state_index_.emplace(nodes_[0].state.text, 0);
}

const SearchNode& SearchTree::node(NodeId id) const {
    if (id < 0 || static_cast<size_t>(id) >= nodes_.size())
        throw ContractError("unknown node id " + std::to_string(id));
    return nodes_[id];
}

SearchNode& SearchTree::node_mut(NodeId id) {
    return const_cast<SearchNode&>(node(id));
}

const std::vector<NodeId>& SearchTree::children(NodeId id) const {
    node(id);  // bounds check
    return children_[id];
}

std::optional<NodeId> SearchTree::find_state(const std::string& state_text) const {
    auto it = state_index_.find(state_text);
    if (it == state_index_.end()) return std::nullopt;
    return it->second;
}

InsertResult SearchTree::insert_node(NodeId parent, Tactic tactic, ProofState state,
                                     double critic_score) {
    node(parent);  // throws on unknown parent
    if (auto existing = find_state(state.text))
        return InsertResult{false, *existing};

    SearchNode n;
    n.node_id = static_cast<NodeId>(nodes_.size());
    n.state = std::move(state);
    n.parent = parent;
    n.incoming_tactic = std::move(tactic);
    n.critic_score = critic_score;
    state_index_.emplace(n.state.text, n.node_id);
    children_[parent].push_back(n.node_id);
    nodes_.push_back(std::move(n));
    children_.emplace_back();
    return InsertResult{true, static_cast<NodeId>(nodes_.size() - 1)};
}

std::vector<NodeId> SearchTree::path_from_root(NodeId id) const {
    std::vector<NodeId> path;
    for (NodeId cur = id;;) {
        path.push_back(cur);
        const auto& n = node(cur);
        if (!n.parent) break;
        cur = *n.parent;
    }
    std::reverse(path.begin(), path.end());
    return path;
}

int SearchTree::depth(NodeId id) const {
    return static_cast<int>(path_from_root(id).size()) - 1;
}

Trajectory SearchTree::extract_trajectory(NodeId proved_node) const {
    const auto& target = node(proved_node);
    if (target.status != NodeStatus::Proved)
        throw ContractError("extract_trajectory: node " + std::to_string(proved_node) +
                            " is not proved");
    Trajectory out;
    out.statement = statement_;
    out.terminal_state = target.state;
    out.proved = true;
    auto path = path_from_root(proved_node);
    for (size_t i = 0; i + 1 < path.size(); ++i) {
        const auto& child = node(path[i + 1]);
        out.steps.emplace_back(node(path[i]).state, *child.incoming_tactic);
    }
    return out;
}

std::string SearchTree::dump() const {
    std::string out;
    for (const auto& n : nodes_) {
        out += std::to_string(n.node_id);
        out += '\t';
        out += n.parent ? std::to_string(*n.parent) : "-";
        out += '\t';
        out += to_string(n.status);
        out += '\t';
        out += format_double(n.critic_score);
        out += '\t';
        out += std::to_string(n.visit_count);
        out += '\t';
        out += n.incoming_tactic ? escape_field(n.incoming_tactic->text) : "";
        out += '\t';
        out += escape_field(n.state.text);
        out += '\n';
    }
    return out;
}

void SearchTree::check_invariants() const {
    if (state_index_.size() != nodes_.size())
        throw ValidationError("state_index size != node count");
    for (const auto& n : nodes_) {
        auto it = state_index_.find(n.state.text);
        if (it == state_index_.end() || it->second != n.node_id)
            throw ValidationError("state_index mismatch for node " +
                                  std::to_string(n.node_id));
        if (n.node_id == 0) {
            if (n.parent || n.incoming_tactic)
                throw ValidationError("root must have no parent/tactic");
        } else {
            if (!n.parent || !n.incoming_tactic)
                throw ValidationError("non-root node missing parent or tactic");
            if (*n.parent >= n.node_id)
                throw ValidationError("parent does not precede child in insertion order");
            const auto& kids = children_[*n.parent];
            if (std::find(kids.begin(), kids.end(), n.node_id) == kids.end())
                throw ValidationError("parent/children link inconsistent");
        }
    }
    for (size_t pid = 0; pid < children_.size(); ++pid) {
        for (NodeId kid : children_[pid]) {
            if (!node(kid).parent || *node(kid).parent != static_cast<NodeId>(pid))
                throw ValidationError("child back-link inconsistent");
        }
    }
}

}  // namespace tacsearch
