#pragma once

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace ssltl {

/// Maximum deviation of a kernel row sum from one.
inline constexpr double kProbabilityTolerance = 1e-12;

/// Malformed or inconsistent input (model, spec, formula).
class ModelError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

struct Transition {
    int to;
    double p;
};

using TransitionRow = std::vector<Transition>;

/**
 * Labeled MDP with a single initial state.
 *
 * States and actions are addressed by their position in `states` and
 * `actions`. `rows[s][a]` is empty iff `a` is not enabled in `s`.
 */
struct Lmdp {
    std::vector<std::string> states;
    std::vector<std::string> actions;
    std::vector<std::vector<int>> enabled;           // ascending action indices
    std::vector<std::vector<TransitionRow>> rows;    // [state][action]
    std::map<std::array<int, 3>, double> reward;     // (s, a, s') -> r, default 0
    std::vector<std::string> ap;
    std::vector<std::vector<int>> labels;            // ascending ap indices per state
    int initial = 0;

    std::size_t num_states() const { return states.size(); }
    std::size_t num_actions() const { return actions.size(); }
    bool has_label(int s, int prop) const;
    int state_index(std::string_view id) const;     // -1 when absent
    int action_index(std::string_view id) const;
    int ap_index(std::string_view name) const;

    /// Sum over successors of T(s,a)(s') * R(s,a,s').
    double expected_reward(int s, int a) const;
};

/// Labeled Markov chain with a dense kernel.
struct Lmc {
    std::vector<std::string> states;
    Eigen::MatrixXd trans;
    int initial = 0;
    std::vector<std::string> ap;
    std::vector<std::vector<int>> labels;
};

/// Boolean formula over atomic propositions: true, p, !f, f & f (| desugared).
class LabelFormula {
  public:
    enum class Kind { True, Prop, Not, And };

    static LabelFormula truth();
    static LabelFormula prop(std::string name);
    static LabelFormula negate(LabelFormula f);
    static LabelFormula conj(LabelFormula lhs, LabelFormula rhs);
    static LabelFormula disj(LabelFormula lhs, LabelFormula rhs);

    /// Grammar: `true | IDENT | ! f | f & f | f '|' f | ( f )`; `&` binds tighter than `|`.
    static LabelFormula parse(std::string_view text);

    Kind kind() const { return node_->kind; }
    std::vector<std::string> propositions() const;
    std::string to_string() const;

    /// Evaluates with p true iff `holds(p)`.
    template <typename Pred>
    bool eval(Pred&& holds) const {
        return eval_node(*node_, holds);
    }

  private:
    struct Node {
        Kind kind;
        std::string name;
        std::shared_ptr<const Node> lhs, rhs;
    };
    explicit LabelFormula(std::shared_ptr<const Node> n) : node_(std::move(n)) {}

    template <typename Pred>
    static bool eval_node(const Node& n, Pred& holds) {
        switch (n.kind) {
        case Kind::True: return true;
        case Kind::Prop: return holds(std::string_view(n.name));
        case Kind::Not: return !eval_node(*n.lhs, holds);
        case Kind::And: return eval_node(*n.lhs, holds) && eval_node(*n.rhs, holds);
        }
        return false;
    }

    std::shared_ptr<const Node> node_;
};

struct SsInterval {
    std::string text;
    LabelFormula formula;
    double lower;
    double upper;
};

/// SS+LTL objective: an automaton for the LTL part plus steady-state intervals.
struct SsLtlSpec {
    std::filesystem::path dra_source;
    std::vector<SsInterval> ss;
};

enum class LabelMode { QuartersRandom, Explicit };
enum class RewardMode { Bernoulli01, Zero };
enum class Dynamics { Deterministic, Slip };

struct GridSpec {
    int width = 4;
    int height = 4;
    std::uint64_t seed = 0;
    LabelMode label_mode = LabelMode::QuartersRandom;
    std::map<int, std::vector<std::string>> explicit_labels;  // cell (row*width+col) -> props
    std::vector<std::string> explicit_ap;                     // ap order in Explicit mode
    RewardMode reward_mode = RewardMode::Bernoulli01;
    Dynamics dynamics = Dynamics::Deterministic;
    double slip_main = 0.8;
};

/// Throws ModelError naming the offending entity.
void validate(const Lmdp& m);

Lmdp parse_model(const nlohmann::json& j);
Lmdp load_model(const std::filesystem::path& path);
nlohmann::json model_to_json(const Lmdp& m);
void save_model(const Lmdp& m, const std::filesystem::path& path);

/// States whose label set satisfies `psi`. Unknown propositions raise ModelError.
std::vector<int> labeled_subset(const Lmdp& m, const LabelFormula& psi);

/// Row-major gridworld; actions left, down, right, up; initial state top-left.
Lmdp generate_grid(const GridSpec& g);

/// `base_dir` resolves a relative automaton path.
SsLtlSpec parse_spec(const nlohmann::json& j, const std::filesystem::path& base_dir = {});
SsLtlSpec load_spec(const std::filesystem::path& path);

/// Intervals must only mention propositions of `m`.
void check_spec_against(const SsLtlSpec& spec, const Lmdp& m);

}  // namespace ssltl
