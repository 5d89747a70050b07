#pragma once

#include <string>
#include <vector>

#include "tacsearch/policy.hpp"
#include "tacsearch/types.hpp"

namespace tacsearch {

struct PolicyWireRequest {
    std::string statement_text;
    std::string state_text;
    int k = 8;
    std::vector<double> temperatures;
};

struct PolicyWireResponse {
    std::vector<Tactic> tactics;
};

// {"type":"sample","statement":...,"state":...,"k":8,"temperatures":[...]}
std::string wire_request_to_json(const PolicyWireRequest& request);
// {"tactics":[{"text":"...","token_logprobs":[-0.1,-0.3]}]}; validates the
// response invariants (list size <= k, logprobs non-empty and <= 0).
PolicyWireResponse parse_wire_response(const std::string& line, int k);

// One request, one newline-delimited response. Endpoint forms:
//   tcp:<host>:<port>   loopback/remote socket
//   cmd:<shell command> child process speaking the protocol on stdio
// Failures map to PolicyConnectError / PolicyTimeoutError /
// PolicyProtocolError.
PolicyWireResponse external_policy_call(const std::string& endpoint,
                                        const PolicyWireRequest& request,
                                        double timeout_seconds);

// Policy backed by an external server. Backend errors propagate as
// PolicyBackendError; the search layer turns them into empty expansions.
class ExternalPolicy : public Policy {
public:
    ExternalPolicy(std::string endpoint, double call_timeout_seconds = 10.0);
    std::vector<Tactic> sample(const Statement& statement, const ProofState& state,
                               const SamplingPlan& plan,
                               std::mt19937_64& rng) const override;

private:
    std::string endpoint_;
    double call_timeout_seconds_;
};

}  // namespace tacsearch
