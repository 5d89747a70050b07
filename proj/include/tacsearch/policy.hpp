#pragma once

#include <map>
#include <memory>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "tacsearch/env.hpp"
#include "tacsearch/records.hpp"
#include "tacsearch/types.hpp"

namespace tacsearch {

struct TemperatureGroup {
    double temperature = 1.0;
    int count = 1;
};

// How many candidates to draw per expansion and at which temperatures.
// Defaults: K=8 split two-per-temperature over 0.7 / 0.8 / 1.0 / 1.1.
struct SamplingPlan {
    int total_k = 8;
    std::vector<TemperatureGroup> temperature_groups = {
        {0.7, 2}, {0.8, 2}, {1.0, 2}, {1.1, 2}};

    void validate() const;
    std::vector<double> expanded_temperatures() const;
    static SamplingPlan uniform(int k, double temperature = 1.0);
};

// Tactic proposer. Implementations are read-only during search; the RNG
// stream is owned by the calling search so parallel statements stay
// independent.
class Policy {
public:
    virtual ~Policy() = default;
    virtual std::vector<Tactic> sample(const Statement& statement, const ProofState& state,
                                       const SamplingPlan& plan,
                                       std::mt19937_64& rng) const = 0;
};

// Validates the plan, delegates to the policy, drops duplicate tactic texts
// (keeping first occurrence) and caps the result at plan.total_k.
std::vector<Tactic> sample_tactics(const Policy& policy, const Statement& statement,
                                   const ProofState& state, const SamplingPlan& plan,
                                   std::mt19937_64& rng);

// Softmax-over-logits policy on a fixed per-state tactic menu. Token
// logprobs are reported at temperature 1 regardless of the sampling
// temperature, spread evenly over a whitespace split of the tactic text.
class TabularSoftmaxPolicy : public Policy {
public:
    explicit TabularSoftmaxPolicy(std::shared_ptr<const TacticVocabulary> vocabulary,
                                  double default_logit = 0.0,
                                  unsigned long long rng_seed = 0);

    std::vector<Tactic> sample(const Statement& statement, const ProofState& state,
                               const SamplingPlan& plan,
                               std::mt19937_64& rng) const override;

    void set_logit(const std::string& state_text, const std::string& tactic_text,
                   double logit);
    double logit(const std::string& state_text, const std::string& tactic_text) const;
    double default_logit() const { return default_logit_; }
    unsigned long long rng_seed() const { return rng_seed_; }
    std::mt19937_64 make_rng() const { return std::mt19937_64(rng_seed_); }

    const std::vector<std::string>& candidates(const std::string& state_text) const;

    // Temperature-t softmax over the state's candidate menu; uniform when
    // every candidate has zero weight.
    std::vector<double> distribution(const std::string& state_text, double temperature) const;

private:
    std::shared_ptr<const TacticVocabulary> vocabulary_;
    std::map<std::pair<std::string, std::string>, double> logits_;
    double default_logit_;
    unsigned long long rng_seed_;
};

// Maximum-likelihood fit on PolicyStep records: logit(s,a) = log(count + s),
// default logit log(smoothing). An empty record set yields a uniform policy.
TabularSoftmaxPolicy fit_tabular_policy(const std::vector<TrainingRecord>& records,
                                        double smoothing,
                                        std::shared_ptr<const TacticVocabulary> vocabulary);

// Returns the full candidate menu (capped at total_k) with uniform logprobs.
// The exhaustive-budget harness for completeness checks.
class ExhaustivePolicy : public Policy {
public:
    explicit ExhaustivePolicy(std::shared_ptr<const TacticVocabulary> vocabulary);
    std::vector<Tactic> sample(const Statement& statement, const ProofState& state,
                               const SamplingPlan& plan,
                               std::mt19937_64& rng) const override;

private:
    std::shared_ptr<const TacticVocabulary> vocabulary_;
};

// Builds the tactic object a tabular policy would emit: whitespace tokens,
// total logprob spread evenly (single pseudo-token for blank texts).
Tactic make_tabular_tactic(const std::string& text, double total_logprob);

}  // namespace tacsearch
