#include "tacsearch/policy.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>

#include "tacsearch/errors.hpp"
#include "tacsearch/text_util.hpp"

namespace tacsearch {

namespace {
const std::vector<std::string> kNoCandidates;

constexpr double kNegInf = -std::numeric_limits<double>::infinity();
}  // namespace

void SamplingPlan::validate() const {
    if (total_k <= 0) throw ConfigError("sampling plan: total_k must be positive");
    if (temperature_groups.empty())
        throw ConfigError("sampling plan: needs at least one temperature group");
    int sum = 0;
    for (const auto& g : temperature_groups) {
        if (g.temperature <= 0.0)
            throw ConfigError("sampling plan: temperatures must be positive");
        if (g.count <= 0) throw ConfigError("sampling plan: group counts must be positive");
        sum += g.count;
    }
    if (sum != total_k)
        throw ConfigError("sampling plan: group counts must sum to total_k");
}

std::vector<double> SamplingPlan::expanded_temperatures() const {
    std::vector<double> out;
    out.reserve(total_k);
    for (const auto& g : temperature_groups)
        for (int i = 0; i < g.count; ++i) out.push_back(g.temperature);
    return out;
}

SamplingPlan SamplingPlan::uniform(int k, double temperature) {
    SamplingPlan plan;
    plan.total_k = k;
    plan.temperature_groups = {{temperature, k}};
    return plan;
}

std::vector<Tactic> sample_tactics(const Policy& policy, const Statement& statement,
                                   const ProofState& state, const SamplingPlan& plan,
                                   std::mt19937_64& rng) {
    plan.validate();
    auto raw = policy.sample(statement, state, plan, rng);
    std::vector<Tactic> out;
    std::set<std::string> seen;
    for (auto& t : raw) {
        if (static_cast<int>(out.size()) >= plan.total_k) break;
        if (seen.insert(t.text).second) out.push_back(std::move(t));
    }
    return out;
}

Tactic make_tabular_tactic(const std::string& text, double total_logprob) {
    Tactic t;
    t.text = text;
    auto tokens = split_whitespace(text);
    size_t n = tokens.empty() ? 1 : tokens.size();
    t.token_logprobs.assign(n, total_logprob / static_cast<double>(n));
    return t;
}

TabularSoftmaxPolicy::TabularSoftmaxPolicy(
    std::shared_ptr<const TacticVocabulary> vocabulary, double default_logit,
    unsigned long long rng_seed)
    : vocabulary_(std::move(vocabulary)), default_logit_(default_logit),
      rng_seed_(rng_seed) {
    if (!vocabulary_) throw ConfigError("tabular policy needs a vocabulary");
}

void TabularSoftmaxPolicy::set_logit(const std::string& state_text,
                                     const std::string& tactic_text, double logit) {
    logits_[{state_text, tactic_text}] = logit;
}

double TabularSoftmaxPolicy::logit(const std::string& state_text,
                                   const std::string& tactic_text) const {
    auto it = logits_.find({state_text, tactic_text});
    return it == logits_.end() ? default_logit_ : it->second;
}

const std::vector<std::string>& TabularSoftmaxPolicy::candidates(
    const std::string& state_text) const {
    auto it = vocabulary_->find(state_text);
    return it == vocabulary_->end() ? kNoCandidates : it->second;
}

std::vector<double> TabularSoftmaxPolicy::distribution(const std::string& state_text,
                                                       double temperature) const {
    const auto& menu = candidates(state_text);
    std::vector<double> probs(menu.size(), 0.0);
    if (menu.empty()) return probs;

    double max_logit = kNegInf;
    std::vector<double> logits(menu.size());
    for (size_t i = 0; i < menu.size(); ++i) {
        logits[i] = logit(state_text, menu[i]);
        max_logit = std::max(max_logit, logits[i]);
    }
    if (max_logit == kNegInf) {
        // All-zero weights: fall back to uniform over the menu.
        std::fill(probs.begin(), probs.end(), 1.0 / static_cast<double>(menu.size()));
        return probs;
    }
    double total = 0.0;
    for (size_t i = 0; i < menu.size(); ++i) {
        probs[i] = std::exp((logits[i] - max_logit) / temperature);
        total += probs[i];
    }
    for (auto& p : probs) p /= total;
    return probs;
}

std::vector<Tactic> TabularSoftmaxPolicy::sample(const Statement&, const ProofState& state,
                                                 const SamplingPlan& plan,
                                                 std::mt19937_64& rng) const {
    const auto& menu = candidates(state.text);
    if (menu.empty()) return {};

    const auto scoring = distribution(state.text, 1.0);
    std::vector<Tactic> out;
    out.reserve(plan.total_k);
    for (const auto& group : plan.temperature_groups) {
        const auto probs = distribution(state.text, group.temperature);
        for (int i = 0; i < group.count; ++i) {
            double u = unit_double(rng());
            size_t pick = 0;
            double acc = 0.0;
            for (size_t j = 0; j < probs.size(); ++j) {
                acc += probs[j];
                if (u < acc) {
                    pick = j;
                    break;
                }
                if (j + 1 == probs.size()) pick = j;  // guard accumulated rounding
            }
            double p = scoring[pick];
            double total_logprob = p > 0.0 ? std::log(p) : -1e9;
            out.push_back(make_tabular_tactic(menu[pick], total_logprob));
        }
    }

    // Collapse identical tactic texts pre-execution; each distinct tactic is
    // returned at most once per expansion.
    std::vector<Tactic> unique;
    std::set<std::string> seen;
    for (auto& t : out)
        if (seen.insert(t.text).second) unique.push_back(std::move(t));
    return unique;
}

TabularSoftmaxPolicy fit_tabular_policy(const std::vector<TrainingRecord>& records,
                                        double smoothing,
                                        std::shared_ptr<const TacticVocabulary> vocabulary) {
    if (smoothing < 0.0) throw ConfigError("smoothing must be nonnegative");
    double default_logit = smoothing > 0.0 ? std::log(smoothing) : kNegInf;
    TabularSoftmaxPolicy policy(std::move(vocabulary), default_logit);

    std::map<std::pair<std::string, std::string>, int> counts;
    for (const auto& r : records) {
        if (r.kind != RecordKind::PolicyStep) continue;
        if (r.state_text.empty())
            throw ContractError("policy record without a state text");
        ++counts[{r.state_text, r.target_text}];
    }
    for (const auto& [key, count] : counts)
        policy.set_logit(key.first, key.second,
                         std::log(static_cast<double>(count) + smoothing));
    return policy;
}

ExhaustivePolicy::ExhaustivePolicy(std::shared_ptr<const TacticVocabulary> vocabulary)
    : vocabulary_(std::move(vocabulary)) {
    if (!vocabulary_) throw ConfigError("exhaustive policy needs a vocabulary");
}

std::vector<Tactic> ExhaustivePolicy::sample(const Statement&, const ProofState& state,
                                             const SamplingPlan& plan,
                                             std::mt19937_64&) const {
    auto it = vocabulary_->find(state.text);
    if (it == vocabulary_->end()) return {};
    const auto& menu = it->second;
    double total_logprob = -std::log(static_cast<double>(menu.size()));
    std::vector<Tactic> out;
    for (const auto& text : menu) {
        if (static_cast<int>(out.size()) >= plan.total_k) break;
        out.push_back(make_tabular_tactic(text, total_logprob));
    }
    return out;
}

}  // namespace tacsearch
