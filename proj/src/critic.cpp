#include "tacsearch/critic.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include "tacsearch/errors.hpp"
#include "tacsearch/text_util.hpp"

namespace tacsearch {

double CriticScore::selection_scalar() const {
    if (orientation == ScoreOrientation::HigherBetter) return value;
    if (!path) throw ContractError("LowerBetter critic score without a distance path");
    return 1.0 - value / static_cast<double>(distance_max_value(path->levels()));
}

CriticScore PolicyConfidenceCritic::score_child(const Statement&, const ProofState&,
                                                const Tactic& incoming) const {
    return CriticScore{mean_logprob(incoming), ScoreOrientation::HigherBetter, {}};
}

CriticScore PolicyConfidenceCritic::score_root(const Statement&, const ProofState&) const {
    return CriticScore{0.0, ScoreOrientation::HigherBetter, {}};
}

CriticScore ConstantCritic::score_child(const Statement&, const ProofState&,
                                        const Tactic&) const {
    return CriticScore{value_, ScoreOrientation::HigherBetter, {}};
}

CriticScore ConstantCritic::score_root(const Statement&, const ProofState&) const {
    return CriticScore{value_, ScoreOrientation::HigherBetter, {}};
}

std::vector<PRMLabel> label_prm_nodes(const SearchTree& tree) {
    const size_t n = tree.size();
    std::vector<char> reaches(n, 0);
    // Ids are insertion-ordered, so children always follow parents; one
    // reverse sweep computes reachability-to-Proved.
    for (size_t i = n; i-- > 0;) {
        NodeId id = static_cast<NodeId>(i);
        const auto& node = tree.node(id);
        bool hit = node.status == NodeStatus::Proved;
        for (NodeId child : tree.children(id)) hit = hit || reaches[child];
        reaches[i] = hit ? 1 : 0;
    }
    std::vector<PRMLabel> labels;
    labels.reserve(n);
    for (size_t i = 0; i < n; ++i) {
        labels.push_back(PRMLabel{tree.statement().id,
                                  tree.node(static_cast<NodeId>(i)).state.text,
                                  reaches[i] ? +1 : -1});
    }
    return labels;
}

void PRMTable::add(const std::string& state_text, int label) {
    if (label != 1 && label != -1)
        throw ValidationError("PRM label must be +1 or -1, got " + std::to_string(label));
    auto& cell = cells[state_text];
    cell.first += label;
    cell.second += 1;
}

double PRMTable::predict(const std::string& state_text) const {
    auto it = cells.find(state_text);
    if (it == cells.end() || it->second.second == 0) return 0.0;
    return it->second.first / static_cast<double>(it->second.second);
}

PRMTable fit_prm(const std::vector<PRMLabel>& labels) {
    if (labels.empty()) throw ContractError("fit_prm: label list is empty");
    PRMTable table;
    for (const auto& l : labels) table.add(l.state_text, l.label);
    return table;
}

std::string prm_labels_to_tsv(const std::vector<PRMLabel>& labels) {
    std::string out;
    for (const auto& l : labels) {
        out += escape_field(l.statement_id);
        out += '\t';
        out += escape_field(l.state_text);
        out += '\t';
        out += l.label > 0 ? "+1" : "-1";
        out += '\n';
    }
    return out;
}

std::vector<PRMLabel> prm_labels_from_tsv(const std::string& text) {
    std::vector<PRMLabel> labels;
    int line_no = 0;
    for (const auto& line : split_lines(text)) {
        ++line_no;
        if (line.empty()) continue;
        auto fields = split_tabs(line);
        if (fields.size() != 3)
            throw ParseError("PRM label row needs statement_id, state, label", line_no);
        PRMLabel l;
        l.statement_id = unescape_field(fields[0]);
        l.state_text = unescape_field(fields[1]);
        if (fields[2] == "+1" || fields[2] == "1") {
            l.label = 1;
        } else if (fields[2] == "-1") {
            l.label = -1;
        } else {
            throw ParseError("PRM label must be +1 or -1", line_no);
        }
        labels.push_back(std::move(l));
    }
    return labels;
}

void save_prm_labels(const std::vector<PRMLabel>& labels,
                     const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw EnvironmentIOError("cannot write PRM labels: " + path.string());
    out << prm_labels_to_tsv(labels);
}

std::vector<PRMLabel> load_prm_labels(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw EnvironmentIOError("cannot open PRM labels: " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return prm_labels_from_tsv(buf.str());
}

CriticScore PRMCritic::score_child(const Statement&, const ProofState& state,
                                   const Tactic&) const {
    return CriticScore{table_.predict(state.text), ScoreOrientation::HigherBetter, {}};
}

CriticScore PRMCritic::score_root(const Statement&, const ProofState& root) const {
    return CriticScore{table_.predict(root.text), ScoreOrientation::HigherBetter, {}};
}

DistancePath DistanceTable::path_for(const std::string& state_text) const {
    return encode_distance(remaining_for(state_text), levels);
}

int DistanceTable::remaining_for(const std::string& state_text) const {
    auto it = remaining.find(state_text);
    if (it == remaining.end()) return distance_max_value(levels);
    return it->second;
}

DistanceTable fit_distance_critic(const std::vector<Trajectory>& trajectories, int levels) {
    DistanceTable table;
    table.levels = levels;
    const int max_value = distance_max_value(levels);
    for (const auto& trajectory : trajectories) {
        if (!trajectory.proved)
            throw ContractError("fit_distance_critic: trajectory is not proved");
        const int m = static_cast<int>(trajectory.steps.size());
        for (int i = 0; i < m; ++i) {
            const int steps_left = std::min(m - i, max_value);
            const auto& state_text = trajectory.steps[i].first.text;
            auto it = table.remaining.find(state_text);
            if (it == table.remaining.end()) {
                table.remaining.emplace(state_text, steps_left);
            } else {
                it->second = std::min(it->second, steps_left);
            }
        }
    }
    return table;
}

DistanceTable distance_table_from_distances(const std::map<std::string, int>& distances,
                                            int levels) {
    DistanceTable table;
    table.levels = levels;
    const int max_value = distance_max_value(levels);
    for (const auto& [state, dist] : distances) {
        if (dist < 1) throw ValidationError("distance below 1 for state " + state);
        table.remaining.emplace(state, std::min(dist, max_value));
    }
    return table;
}

std::string distance_table_to_tsv(const DistanceTable& table) {
    std::string out;
    for (const auto& [state, steps_left] : table.remaining) {
        out += escape_field(state);
        out += '\t';
        out += std::to_string(steps_left);
        out += '\n';
    }
    return out;
}

DistanceTable distance_table_from_tsv(const std::string& text, int levels) {
    DistanceTable table;
    table.levels = levels;
    const int max_value = distance_max_value(levels);
    int line_no = 0;
    for (const auto& line : split_lines(text)) {
        ++line_no;
        if (line.empty()) continue;
        auto fields = split_tabs(line);
        if (fields.size() != 2)
            throw ParseError("distance row needs state and remaining steps", line_no);
        int steps_left = 0;
        try {
            steps_left = std::stoi(fields[1]);
        } catch (const std::exception&) {
            throw ParseError("bad remaining-step count", line_no);
        }
        if (steps_left < 1) throw ParseError("remaining steps must be >= 1", line_no);
        table.remaining[unescape_field(fields[0])] = std::min(steps_left, max_value);
    }
    return table;
}

void save_distance_table(const DistanceTable& table, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw EnvironmentIOError("cannot write distance table: " + path.string());
    out << distance_table_to_tsv(table);
}

DistanceTable load_distance_table(const std::filesystem::path& path, int levels) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw EnvironmentIOError("cannot open distance table: " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return distance_table_from_tsv(buf.str(), levels);
}

CriticScore DistanceCritic::score_state(const std::string& state_text) const {
    CriticScore score;
    score.orientation = ScoreOrientation::LowerBetter;
    score.path = table_.path_for(state_text);
    score.value = static_cast<double>(decode_distance(*score.path));
    return score;
}

CriticScore DistanceCritic::score_child(const Statement&, const ProofState& state,
                                        const Tactic&) const {
    return score_state(state.text);
}

CriticScore DistanceCritic::score_root(const Statement&, const ProofState& root) const {
    return score_state(root.text);
}

}  // namespace tacsearch
