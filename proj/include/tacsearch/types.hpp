#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace tacsearch {

// Reserved terminal state text. Environment adapters must map "no remaining
// goals" to this sentinel.
inline constexpr std::string_view kQedStateText = "QED";

// An opaque proving state. Identity is exact byte equality of the text; no
// whitespace normalization is applied anywhere.
struct ProofState {
    std::string text;

    bool operator==(const ProofState& other) const { return text == other.text; }
};

// A theorem to prove: the root of one search.
struct Statement {
    std::string id;
    ProofState goal_state;
    std::string source_tag = "scripted";
};

// A proof step plus the per-token natural-log probabilities assigned by the
// policy that proposed it (each entry <= 0 when policy-produced).
struct Tactic {
    std::string text;
    std::vector<double> token_logprobs;
};

// Mean token log probability. Throws ContractError on an empty token list.
double mean_logprob(const Tactic& tactic);

// Checks the policy-output invariants (non-empty logprobs, every entry <= 0).
// Throws ValidationError.
void validate_policy_tactic(const Tactic& tactic);

}  // namespace tacsearch
