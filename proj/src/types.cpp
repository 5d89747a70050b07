#include "tacsearch/types.hpp"

#include "tacsearch/errors.hpp"

namespace tacsearch {

double mean_logprob(const Tactic& tactic) {
    if (tactic.token_logprobs.empty())
        throw ContractError("mean_logprob: tactic has no token logprobs");
    double sum = 0.0;
    for (double lp : tactic.token_logprobs) sum += lp;
    return sum / static_cast<double>(tactic.token_logprobs.size());
}

void validate_policy_tactic(const Tactic& tactic) {
    if (tactic.token_logprobs.empty())
        throw ValidationError("tactic \"" + tactic.text + "\" has empty token_logprobs");
    for (double lp : tactic.token_logprobs) {
        if (lp > 0.0)
            throw ValidationError("tactic \"" + tactic.text + "\" has positive token logprob");
    }
}

}  // namespace tacsearch
