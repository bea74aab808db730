#pragma once

#include "ssltl/ilp.hpp"
#include "ssltl/verify.hpp"

#include <optional>
#include <string>
#include <vector>

namespace ssltl {

struct SynthOptions {
    IlpConfig ilp;
    SolverConfig solver;
};

enum class SynthOutcome { Verified, Infeasible, VerificationFailed, SolverFailed };
std::string_view to_string(SynthOutcome o);

struct SynthResult {
    SynthOutcome outcome = SynthOutcome::SolverFailed;
    std::string message;

    std::size_t product_states = 0;
    std::size_t mecs = 0;
    std::size_t amecs = 0;
    std::size_t variables = 0;
    std::size_t rows = 0;

    Solution solution;
    std::optional<Policy> policy;
    std::optional<VerificationReport> report;
    std::vector<std::string> warnings;
    double occupation_residual = 0.0;

    double solver_seconds = 0.0;
    double total_seconds = 0.0;
};

/// Product, end components, program, solver, policy extraction and verification.
/// Solver failures are reported in the result rather than thrown.
SynthResult synthesize(const Lmdp& m, const Dra& d, const SsLtlSpec& spec, const SynthOptions& opt);

}  // namespace ssltl
