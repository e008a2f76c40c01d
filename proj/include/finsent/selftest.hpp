#pragma once

#include <string>
#include <vector>

namespace finsent::selftest {

struct CheckResult {
    std::string name;
    bool pass = false;
    std::string detail;
};

// Full-network gradient check: a random small configuration (embed 6,
// hidden 4, up to `max_tokens` tokens, up to `max_terms` relevant terms
// per token), squared-error loss, analytic gradients vs central finite
// differences with the given step. Returns the worst relative error over
// every parameter element.
double gradient_check_once(std::uint64_t seed, double fd_step, std::size_t max_tokens = 5,
                           std::size_t max_terms = 3);

// Random forward passes checking that both attention weight sets are
// nonnegative and sum to 1 within `sum_tol`. Returns the worst deviation.
double attention_sum_check(std::size_t passes, std::uint64_t seed);

// Worst change in the knowledge vector m_t under a random permutation of
// the relevant terms.
double term_permutation_check(std::size_t trials, std::uint64_t seed);

// True if a network seeing only empty term sets produces bit-identical
// scores to the same-seeded network with the knowledge stage disabled.
bool empty_knowledge_matches_disabled(std::size_t sentences, std::uint64_t seed);

// Worst |solver - projected-gradient-reference| prediction gap over random
// small regression sets (both kernels), and the worst box-constraint
// violation of the solver's coefficients.
struct SvrAgreement {
    double max_prediction_gap = 0.0;
    double max_box_violation = 0.0;
    double max_balance_violation = 0.0;  // |sum of coefficients|
};
SvrAgreement svr_oracle_check(std::size_t datasets, std::uint64_t seed);

// The `selftest` CLI verb: kernels, gradients, attention invariants, SVR
// agreement. Prints one line per check through the provided sink.
std::vector<CheckResult> run_all();

bool all_passed(const std::vector<CheckResult>& results);

}  // namespace finsent::selftest
