#include "ssltl/synth.hpp"

#include "ssltl/graph.hpp"

#include <chrono>

namespace ssltl {

std::string_view to_string(SynthOutcome o) {
    switch (o) {
    case SynthOutcome::Verified: return "verified";
    case SynthOutcome::Infeasible: return "infeasible";
    case SynthOutcome::VerificationFailed: return "verification-failed";
    case SynthOutcome::SolverFailed: return "solver-error";
    }
    return "solver-error";
}

SynthResult synthesize(const Lmdp& m, const Dra& d, const SsLtlSpec& spec, const SynthOptions& opt) {
    using clock = std::chrono::steady_clock;
    const auto start = clock::now();
    auto seconds_since = [](clock::time_point t) { return std::chrono::duration<double>(clock::now() - t).count(); };

    SynthResult r;
    check_spec_against(spec, m);
    const ProductLmdp p = build_product(m, d);
    r.product_states = p.size();
    const auto mecs = mec_decomposition(p);
    const auto amecs = accepting_mecs(mecs, p);
    r.mecs = mecs.size();
    r.amecs = amecs.size();
    if (amecs.empty()) {
        r.outcome = SynthOutcome::Infeasible;
        r.message = "no accepting end component";
        r.solution.status = SolveStatus::Infeasible;
        r.total_seconds = seconds_since(start);
        return r;
    }

    const IlpModel ilp = build_program(p, amecs, spec, opt.ilp);
    r.variables = ilp.vars.size();
    r.rows = ilp.rows.size();

    const auto solve_start = clock::now();
    try {
        r.solution = solve(ilp, opt.solver);
    } catch (const SolverError& e) {
        r.solver_seconds = seconds_since(solve_start);
        r.outcome = SynthOutcome::SolverFailed;
        r.message = e.what();
        r.total_seconds = seconds_since(start);
        return r;
    }
    r.solver_seconds = seconds_since(solve_start);

    switch (r.solution.status) {
    case SolveStatus::Infeasible:
        r.outcome = SynthOutcome::Infeasible;
        r.message = r.solution.message;
        r.total_seconds = seconds_since(start);
        return r;
    case SolveStatus::Error:
        r.outcome = SynthOutcome::SolverFailed;
        r.message = r.solution.message;
        r.total_seconds = seconds_since(start);
        return r;
    default: break;
    }

    try {
        auto extracted = extract_policy(r.solution, ilp, p);
        r.policy = std::move(extracted.policy);
        r.warnings = std::move(extracted.warnings);
        r.occupation_residual = extracted.occupation_residual;
    } catch (const SolverError& e) {
        r.outcome = SynthOutcome::SolverFailed;
        r.message = e.what();
        r.total_seconds = seconds_since(start);
        return r;
    }

    r.report = verify_policy(p, spec, *r.policy);
    r.outcome = r.report->verdict ? SynthOutcome::Verified : SynthOutcome::VerificationFailed;
    if (!r.report->verdict && !r.report->failures.empty()) r.message = r.report->failures.front();
    r.total_seconds = seconds_since(start);
    return r;
}

}  // namespace ssltl
