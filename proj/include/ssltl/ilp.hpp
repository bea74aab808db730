#pragma once

#include "ssltl/graph.hpp"
#include "ssltl/model.hpp"
#include "ssltl/product.hpp"

#include <chrono>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace ssltl {

/// No accepting end component exists, so no policy can satisfy the automaton.
class StructurallyInfeasible : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

class SolverError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

enum class VarKind { Continuous, Binary };
enum class Sense { LessEqual, GreaterEqual, Equal };

struct Variable {
    std::string name;
    VarKind kind;
    double lower = 0.0;
    double upper = 1.0;
};

struct LinearTerm {
    int var;
    double coef;
};

struct Constraint {
    std::string name;
    std::vector<LinearTerm> terms;
    Sense sense;
    double rhs;
};

enum class Objective { ExpectedReward, Feasibility };

struct IlpConfig {
    std::optional<double> epsilon;  // default min(1e-4, 1 / (4 |product states|))
    double acc_eps = 1e-4;          // lower bound replacing "> 0" in the acceptance row
    double flow_ratio = 2.0;
    Objective objective = Objective::ExpectedReward;
};

/// Variables and rows of the steady-state + LTL program over a product LMDP.
struct IlpModel {
    std::vector<Variable> vars;
    std::vector<Constraint> rows;
    std::vector<LinearTerm> objective;  // maximized; empty in feasibility mode
    double epsilon = 0.0;

    // Variable indices by role; -1 where not declared.
    std::vector<std::vector<int>> x;   // [product state][action]
    std::vector<std::vector<int>> pi;  // [product state][action]
    std::vector<int> f;                // per product edge
    std::vector<int> isq;              // per product state
    std::vector<int> is;               // per model state
    std::vector<int> ik;               // per AMEC
    std::vector<std::vector<int>> iks; // [AMEC][model state]

    /// Adds a variable and returns its index; names must be unique.
    int add_variable(std::string name, VarKind kind, double lower = 0.0, double upper = 1.0);
    int find(std::string_view name) const;
    std::size_t count_rows(std::string_view family) const;  // e.g. "xv"

  private:
    std::unordered_map<std::string, int> by_name_;
};

/**
 * Builds the program. Throws StructurallyInfeasible when `amecs` is empty and
 * ModelError when an interval formula mentions an unknown proposition.
 */
IlpModel build_program(const ProductLmdp& p, const AmecList& amecs, const SsLtlSpec& spec, const IlpConfig& cfg);

/// Pins every pi variable to the given policy (used to test feasibility of a known policy).
void fix_policy(IlpModel& m, const ProductLmdp& p, const Policy& pi);

/// CPLEX LP text; identical inputs produce identical bytes.
std::string export_lp(const IlpModel& m);

enum class SolveStatus { Optimal, Feasible, Infeasible, Error };
std::string_view to_string(SolveStatus s);

struct Solution {
    SolveStatus status = SolveStatus::Error;
    double objective = 0.0;
    std::unordered_map<std::string, double> values;
    std::string message;

    double value(const std::string& name) const {
        auto it = values.find(name);
        return it == values.end() ? 0.0 : it->second;
    }
};

/// Accepts `name value` lines and the index-prefixed column layout; status
/// is taken from any non-numeric line (e.g. "Optimal - objective value 3").
Solution parse_solution(std::string_view text);

struct SolverConfig {
    /// Command template; `{lp}` and `{sol}` are replaced by file paths.
    std::string command;
    std::chrono::seconds timeout{600};
    std::filesystem::path workdir;  // default: system temp directory
    bool keep_files = false;

    /// `explicit_cmd` if non-empty, else $SSLTL_SOLVER_CMD, else empty.
    static SolverConfig from_environment(const std::string& explicit_cmd = {});
};

/// Runs the external solver. Declared variables absent from its output read as zero.
Solution solve(const IlpModel& m, const SolverConfig& solver);

/// Largest violation of any row, bound or integrality requirement under `sol`.
double max_violation(const IlpModel& m, const Solution& sol);

struct ExtractedPolicy {
    Policy policy;
    std::vector<std::string> warnings;  // near-fractional binaries
    double occupation_residual = 0.0;   // max |x - pi * sum_a x| over states with mass
};

/**
 * Reads the deterministic policy from the pi binaries and checks
 * x_sqa = pi(a|s,q) * sum_a x_sqa wherever sum_a x_sqa >= 1e-8.
 * Throws SolverError on a state without a selected action or when the
 * identity is violated beyond 1e-6.
 */
ExtractedPolicy extract_policy(const Solution& sol, const IlpModel& m, const ProductLmdp& p);

}  // namespace ssltl
