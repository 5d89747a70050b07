#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "tacsearch/distance_codec.hpp"
#include "tacsearch/tree.hpp"
#include "tacsearch/types.hpp"

namespace tacsearch {

enum class ScoreOrientation { HigherBetter, LowerBetter };

// A node score together with its reading direction. Policy confidence and
// PRM scores are HigherBetter scalars; the distance critic is LowerBetter
// (value = estimated remaining steps) and carries the coarse-to-fine path so
// frontier ordering can compare tuples directly.
struct CriticScore {
    double value = 0.0;
    ScoreOrientation orientation = ScoreOrientation::HigherBetter;
    std::optional<DistancePath> path;

    // HigherBetter scalar for UCB and importance: the value itself, or
    // 1 - remaining/2^L for distance scores.
    double selection_scalar() const;
};

class Critic {
public:
    virtual ~Critic() = default;
    virtual CriticScore score_child(const Statement& statement, const ProofState& state,
                                    const Tactic& incoming) const = 0;
    virtual CriticScore score_root(const Statement& statement,
                                   const ProofState& root) const = 0;
    virtual std::string name() const = 0;
};

// Mean token log probability of the incoming tactic; the cold-start critic.
// The root scores 0 (no incoming tactic).
class PolicyConfidenceCritic : public Critic {
public:
    CriticScore score_child(const Statement&, const ProofState&,
                            const Tactic& incoming) const override;
    CriticScore score_root(const Statement&, const ProofState&) const override;
    std::string name() const override { return "pc"; }
};

// Flat guidance: every node gets the same score, so selection degrades to
// insertion order. Used for exhaustive/uninformed baselines.
class ConstantCritic : public Critic {
public:
    explicit ConstantCritic(double value = 0.0) : value_(value) {}
    CriticScore score_child(const Statement&, const ProofState&,
                            const Tactic&) const override;
    CriticScore score_root(const Statement&, const ProofState&) const override;
    std::string name() const override { return "constant"; }

private:
    double value_;
};

// --- Process reward model -------------------------------------------------

struct PRMLabel {
    std::string statement_id;
    std::string state_text;
    int label = 1;  // +1 or -1
};

// A node is labeled +1 iff itself or some descendant has status Proved.
std::vector<PRMLabel> label_prm_nodes(const SearchTree& tree);

// Per-state mean of +-1 labels: the exact MSE minimizer of a tabular value
// model. Unseen states predict 0.
struct PRMTable {
    std::map<std::string, std::pair<double, int>> cells;  // state -> (sum, count)

    void add(const std::string& state_text, int label);
    double predict(const std::string& state_text) const;
    size_t size() const { return cells.size(); }
};

// Throws ContractError on an empty label list.
PRMTable fit_prm(const std::vector<PRMLabel>& labels);

// TSV of statement_id, state_text (escaped), label.
std::string prm_labels_to_tsv(const std::vector<PRMLabel>& labels);
std::vector<PRMLabel> prm_labels_from_tsv(const std::string& text);
void save_prm_labels(const std::vector<PRMLabel>& labels, const std::filesystem::path& path);
std::vector<PRMLabel> load_prm_labels(const std::filesystem::path& path);

class PRMCritic : public Critic {
public:
    explicit PRMCritic(PRMTable table) : table_(std::move(table)) {}
    CriticScore score_child(const Statement&, const ProofState& state,
                            const Tactic&) const override;
    CriticScore score_root(const Statement&, const ProofState& root) const override;
    std::string name() const override { return "prm"; }
    const PRMTable& table() const { return table_; }

private:
    PRMTable table_;
};

// --- Distance critic --------------------------------------------------------

// Minimum observed remaining-step count per state, clamped at 2^levels.
// Unseen states score the maximal (worst) path.
struct DistanceTable {
    int levels = kDefaultDistanceLevels;
    std::map<std::string, int> remaining;  // state -> clamped min remaining steps

    DistancePath path_for(const std::string& state_text) const;
    int remaining_for(const std::string& state_text) const;
    size_t size() const { return remaining.size(); }
};

// Remaining steps of each state on each proved trajectory; per-state minimum.
DistanceTable fit_distance_critic(const std::vector<Trajectory>& trajectories,
                                  int levels = kDefaultDistanceLevels);

// Builds the table from exact shortest distances (e.g. oracle_distances).
DistanceTable distance_table_from_distances(const std::map<std::string, int>& distances,
                                            int levels = kDefaultDistanceLevels);

// TSV of state_text (escaped), remaining steps.
std::string distance_table_to_tsv(const DistanceTable& table);
DistanceTable distance_table_from_tsv(const std::string& text, int levels);
void save_distance_table(const DistanceTable& table, const std::filesystem::path& path);
DistanceTable load_distance_table(const std::filesystem::path& path,
                                  int levels = kDefaultDistanceLevels);

class DistanceCritic : public Critic {
public:
    explicit DistanceCritic(DistanceTable table) : table_(std::move(table)) {}
    CriticScore score_child(const Statement&, const ProofState& state,
                            const Tactic&) const override;
    CriticScore score_root(const Statement&, const ProofState& root) const override;
    std::string name() const override { return "distance"; }
    const DistanceTable& table() const { return table_; }

private:
    CriticScore score_state(const std::string& state_text) const;
    DistanceTable table_;
};

}  // namespace tacsearch
