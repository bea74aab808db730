#pragma once

#include "ssltl/hoa.hpp"
#include "ssltl/model.hpp"
#include "ssltl/product.hpp"

#include <nlohmann/json.hpp>

#include <optional>
#include <string>
#include <vector>

namespace ssltl {

inline constexpr double kSteadyStateTolerance = 1e-6;

struct IntervalResult {
    std::string formula;
    double achieved = 0.0;
    double lower = 0.0;
    double upper = 1.0;
    bool ok = false;
};

struct VerificationReport {
    bool deterministic = false;
    std::vector<std::size_t> bscc_sizes;  // BSCCs of the induced product chain
    std::optional<int> shared_state;      // model state present in every BSCC
    double bscc_disagreement = 0.0;       // max gap between per-BSCC projected stationaries
    bool unichain = false;
    std::vector<bool> rabin_ok;           // per BSCC
    std::vector<IntervalResult> ss_results;

    std::vector<ProductState> product_states;  // induced chain states
    std::vector<double> product_distribution;  // limiting, aligned with product_states
    std::vector<double> aggregate_distribution;  // per model state
    std::vector<int> aggregate_transient;      // visited model states with no long-run mass
    bool lumpable = false;                     // [s] partition lumpable on the whole chain

    bool verdict = false;
    std::vector<std::string> failures;

    nlohmann::json to_json(const Lmdp& m) const;
};

/**
 * Checks that the chain induced by `pi` is almost surely absorbed in
 * Rabin-accepting BSCCs, behaves as a unichain over model states, and meets
 * every steady-state interval within kSteadyStateTolerance. Throws
 * ModelError when `pi` misses a reachable product state.
 */
VerificationReport verify_policy(const Lmdp& m, const Dra& d, const SsLtlSpec& spec, const Policy& pi);

/// Same check on an already built product.
VerificationReport verify_policy(const ProductLmdp& p, const SsLtlSpec& spec, const Policy& pi);

struct BruteForceLimits {
    std::size_t max_states = 12;
    std::size_t max_actions = 3;
};

class EnumerationLimit : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

/**
 * Lexicographically first passing policy (actions listed by product state
 * index, earlier states most significant), or nullopt. Throws
 * EnumerationLimit when the product exceeds `limits`.
 */
std::optional<Policy> brute_force_synth(const Lmdp& m, const Dra& d, const SsLtlSpec& spec,
                                        const BruteForceLimits& limits = {});
std::optional<Policy> brute_force_synth(const ProductLmdp& p, const SsLtlSpec& spec,
                                        const BruteForceLimits& limits = {});

}  // namespace ssltl
