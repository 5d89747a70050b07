#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "tacsearch/types.hpp"

namespace tacsearch {

struct TimeoutPolicy {
    double whole_search_seconds = 3600.0;
    double per_step_seconds = 60.0;

    void validate() const;
};

// Outcome of executing one tactic against the proving engine. Proved carries
// no successor state; NewState carries exactly one.
struct ApplyResult {
    enum class Kind { NewState, Proved, Invalid, StepTimeout };

    Kind kind = Kind::Invalid;
    std::optional<ProofState> next;

    static ApplyResult new_state(ProofState s) {
        return ApplyResult{Kind::NewState, std::move(s)};
    }
    static ApplyResult proved() { return ApplyResult{Kind::Proved, std::nullopt}; }
    static ApplyResult invalid() { return ApplyResult{Kind::Invalid, std::nullopt}; }
    static ApplyResult step_timeout() {
        return ApplyResult{Kind::StepTimeout, std::nullopt};
    }
};

// Proving-engine abstraction. Implementations must be immutable after
// construction and safe to call concurrently. Adapters for real engines must
// speak the same ApplyResult vocabulary and map proof completion to the QED
// sentinel.
class Environment {
public:
    virtual ~Environment() = default;
    virtual ApplyResult apply(const ProofState& state, const Tactic& tactic,
                              const TimeoutPolicy& timeout) const = 0;
};

// Executes one tactic and enforces the per-step timeout on top of whatever the
// backend does: any result that took longer than per_step_seconds is reported
// as StepTimeout.
ApplyResult apply_tactic(const Environment& env, const ProofState& state,
                         const Tactic& tactic, const TimeoutPolicy& timeout);

// Per-state tactic menu, the sampling domain of desk-scale policies.
using TacticVocabulary = std::map<std::string, std::vector<std::string>>;

struct ScriptedRow {
    std::string tactic;
    std::string dst;
};

// Deterministic transition-table environment. A dst equal to the QED sentinel
// marks proof completion.
class ScriptedEnvironment : public Environment {
public:
    ApplyResult apply(const ProofState& state, const Tactic& tactic,
                      const TimeoutPolicy& timeout) const override;

    const std::vector<Statement>& statements() const { return statements_; }
    const std::map<std::string, std::vector<ScriptedRow>>& rows() const { return rows_; }
    size_t transition_count() const;
    const Statement& statement_by_id(const std::string& id) const;

    // Duplicate ids / reserved goal states throw ValidationError.
    void add_statement(Statement statement);
    // Duplicate (src, tactic) pairs throw ValidationError.
    void add_row(const std::string& src, const std::string& tactic, const std::string& dst);

    std::shared_ptr<const TacticVocabulary> vocabulary() const;

    std::string serialize() const;
    static ScriptedEnvironment parse(std::string_view text);
    static ScriptedEnvironment load(const std::filesystem::path& path);
    void save(const std::filesystem::path& path) const;

private:
    std::vector<Statement> statements_;
    std::map<std::string, std::vector<ScriptedRow>> rows_;  // src -> ordered menu
};

struct PuzzleFamilyConfig {
    unsigned long long seed = 1;
    int num_statements = 20;
    int state_space_size = 60;
    int branching = 3;
    double solvable_fraction = 0.5;
    int max_depth = 6;

    void validate() const;
};

// Deterministic in seed: the same config serializes to identical bytes. A
// solvable_fraction of statements can reach QED within max_depth steps; the
// rest provably cannot reach it at all.
ScriptedEnvironment generate_puzzles(const PuzzleFamilyConfig& config);

// Exhaustive breadth-first reachability to QED; shortest number of tactic
// steps, or absent when unreachable.
std::optional<int> oracle_solve(const ScriptedEnvironment& env, const Statement& statement);

// Shortest distance-to-QED for every state that can reach it.
std::map<std::string, int> oracle_distances(const ScriptedEnvironment& env);

}  // namespace tacsearch
