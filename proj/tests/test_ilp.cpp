#include "support.hpp"

#include "ssltl/graph.hpp"
#include "ssltl/verify.hpp"

#include <doctest.h>

#include <fstream>
#include <sstream>

using namespace testing;

namespace {

std::string slurp(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

struct Instance {
    Lmdp model;
    Dra dra;
    SsLtlSpec spec;
    ProductLmdp product;
    AmecList amecs;
};

// The product keeps pointers into the instance, so it is built in place.
std::unique_ptr<Instance> load(const std::string& model, const std::string& spec) {
    auto in = std::make_unique<Instance>();
    in->model = load_model(fixture(model));
    in->spec = load_spec(fixture(spec));
    in->dra = load_hoa(in->spec.dra_source);
    in->product = build_product(in->model, in->dra);
    in->amecs = accepting_mecs(mec_decomposition(in->product), in->product);
    return in;
}

std::unique_ptr<Instance> wrap(Lmdp m, Dra d, SsLtlSpec spec) {
    auto in = std::make_unique<Instance>();
    in->model = std::move(m);
    in->dra = std::move(d);
    in->spec = std::move(spec);
    in->product = build_product(in->model, in->dra);
    in->amecs = accepting_mecs(mec_decomposition(in->product), in->product);
    return in;
}

std::size_t count_kind(const IlpModel& m, VarKind kind, const std::string& prefix) {
    std::size_t n = 0;
    for (const auto& v : m.vars) n += v.kind == kind && v.name.rfind(prefix, 0) == 0;
    return n;
}

bool solver_available() { return !test_solver().command.empty(); }

}  // namespace

TEST_CASE("variable counts on a fully reachable 4x4 product") {
    // A three-node counter automaton over no propositions: every (s, q) is reachable.
    Dra d;
    d.nodes = {"q0", "q1", "q2"};
    d.delta = {1, 2, 0};
    d.pairs = {RabinPair{{}, {0}}};
    GridSpec g;
    g.reward_mode = RewardMode::Zero;
    auto in = wrap(generate_grid(g), d, {});
    REQUIRE(in->product.size() == 48);
    const IlpModel m = build_program(in->product, in->amecs, in->spec, {});
    CHECK(count_kind(m, VarKind::Continuous, "x_") == 192);
    CHECK(count_kind(m, VarKind::Binary, "pi_") == 192);
    CHECK(count_kind(m, VarKind::Continuous, "f_") == in->product.edges.size());
    CHECK(count_kind(m, VarKind::Binary, "isq_") == 48);
    CHECK(count_kind(m, VarKind::Binary, "is_") == 16);
    CHECK(m.ik.size() == in->amecs.size());
    CHECK(m.find("x_15_2_3") >= 0);
    CHECK(m.find("f_0_1_1_2") >= 0);
    CHECK(m.find("x_16_0_0") < 0);
    CHECK(m.epsilon == doctest::Approx(std::min(1e-4, 1.0 / (4 * 48))));
}

TEST_CASE("one interval yields two rows of the interval family") {
    GridSpec g;
    g.seed = 1;
    auto in = wrap(generate_grid(g), load_hoa(fixture("theta1.hoa")), load_spec(fixture("theta1_spec.json")));
    const IlpModel m = build_program(in->product, in->amecs, in->spec, {});
    CHECK(m.count_rows("x") == 2);
    CHECK(m.count_rows("xvi") == 1);
    CHECK(m.count_rows("xi") == 1);
    CHECK(m.count_rows("ii") == 1);
}

TEST_CASE("two AMECs over three model states") {
    // s0 chooses between two absorbing states; both are accepting end components.
    Lmdp m;
    m.states = {"s0", "s1", "s2"};
    m.actions = {"left", "right"};
    m.ap = {};
    m.labels = {{}, {}, {}};
    m.enabled = {{0, 1}, {0}, {0}};
    m.rows = {{{{1, 1.0}}, {{2, 1.0}}}, {{{1, 1.0}}, {}}, {{{2, 1.0}}, {}}};
    validate(m);
    auto in = wrap(m, load_hoa(fixture("accept_all.hoa")), {});
    REQUIRE(in->amecs.size() == 2);
    const IlpModel ilp = build_program(in->product, in->amecs, in->spec, {});
    CHECK(ilp.ik.size() == 2);
    CHECK(count_kind(ilp, VarKind::Binary, "ik_") == 2);
    CHECK(count_kind(ilp, VarKind::Binary, "iks_") == 6);
    CHECK(ilp.count_rows("xv") == 3);
    CHECK(ilp.count_rows("xiii") == 6);
    CHECK(ilp.count_rows("xiv") == 6);
    CHECK(ilp.count_rows("xii") == 2);
}

TEST_CASE("build_program input checks") {
    auto in = load("two_state.json", "two_state_spec.json");
    IlpConfig bad;
    bad.acc_eps = 0;
    CHECK_THROWS_AS(build_program(in->product, in->amecs, in->spec, bad), std::invalid_argument);
    bad = {};
    bad.flow_ratio = 0.5;
    CHECK_THROWS_AS(build_program(in->product, in->amecs, in->spec, bad), std::invalid_argument);
    bad = {};
    bad.epsilon = 0.0;
    CHECK_THROWS_AS(build_program(in->product, in->amecs, in->spec, bad), std::invalid_argument);
    CHECK_THROWS_AS(build_program(in->product, {}, in->spec, {}), StructurallyInfeasible);
    SsLtlSpec unknown = in->spec;
    unknown.ss.push_back({"zz", LabelFormula::prop("zz"), 0, 1});
    CHECK_THROWS_AS(build_program(in->product, in->amecs, unknown, {}), ModelError);
}

TEST_CASE("LP export matches the reviewed golden file") {
    auto in = load("two_state.json", "two_state_spec.json");
    const IlpModel m = build_program(in->product, in->amecs, in->spec, {});
    const std::string lp = export_lp(m);
    CHECK(lp == slurp(fixture("two_state.lp")));

    // Two independent builds give identical bytes.
    auto again = load("two_state.json", "two_state_spec.json");
    CHECK(export_lp(build_program(again->product, again->amecs, again->spec, {})) == lp);
}

TEST_CASE("LP export details") {
    auto in = load("two_state.json", "two_state_spec.json");
    IlpConfig cfg;
    cfg.objective = Objective::Feasibility;
    const IlpModel m = build_program(in->product, in->amecs, in->spec, cfg);
    const std::string lp = export_lp(m);
    CHECK(lp.find("Maximize\n obj: 0\n") != std::string::npos);
    for (const char* section : {"Subject To\n", "Bounds\n", "Binary\n", "End\n"})
        CHECK(lp.find(section) != std::string::npos);

    // every binary variable is listed exactly once in the Binary section
    const std::string binary = lp.substr(lp.find("Binary\n") + 7, lp.find("End\n") - lp.find("Binary\n") - 7);
    std::istringstream names(binary);
    std::multiset<std::string> listed;
    for (std::string n; names >> n;) listed.insert(n);
    std::size_t binaries = 0;
    for (const auto& v : m.vars)
        if (v.kind == VarKind::Binary) {
            ++binaries;
            CHECK(listed.count(v.name) == 1);
        }
    CHECK(listed.size() == binaries);

    // rows appear in family order
    std::size_t last = 0;
    for (const char* fam : {"c_i_", "c_ii_", "c_iii_", "c_iv_", "c_v_", "c_vi_", "c_vii_", "c_viii_", "c_ix_", "c_x_",
                            "c_xi_", "c_xii_", "c_xiii_", "c_xiv_", "c_xv_", "c_xvi_"}) {
        const auto pos = lp.find(std::string(" ") + fam);
        REQUIRE(pos != std::string::npos);
        CHECK(pos > last);
        last = pos;
    }

    IlpModel fixed = m;
    Policy pi;
    pi.action[{0, 0}] = 1;
    pi.action[{1, 0}] = 0;
    fix_policy(fixed, in->product, pi);
    const std::string pinned = export_lp(fixed);
    CHECK(pinned.find(" pi_0_0_1 = 1\n") != std::string::npos);
    CHECK(pinned.find(" pi_0_0_0 = 0\n") != std::string::npos);
}

TEST_CASE("parse_solution: name-value layout") {
    const Solution s = parse_solution("Optimal\nobjective 2.5\nx_0_0_0 1\npi_0_0_0 1.0\n# comment\n");
    CHECK(s.status == SolveStatus::Optimal);
    CHECK(s.objective == 2.5);
    CHECK(s.value("x_0_0_0") == 1.0);
    CHECK(s.value("pi_0_0_0") == 1.0);
    CHECK(s.value("missing") == 0.0);

    CHECK(parse_solution("Infeasible\n").status == SolveStatus::Infeasible);
    CHECK(parse_solution("Feasible (Time limit reached)\nobjective 1\nx 0.5\n").status == SolveStatus::Feasible);
    CHECK(parse_solution("Error: Not Set\n").status == SolveStatus::Error);
    CHECK(parse_solution("").status == SolveStatus::Error);
    CHECK(parse_solution("Unbounded\n").status == SolveStatus::Error);
}

TEST_CASE("parse_solution: index-column layout from CBC") {
    const Solution s = parse_solution(slurp(fixture("two_state_cbc.sol")));
    CHECK(s.status == SolveStatus::Optimal);
    CHECK(s.objective == 0.0);
    CHECK(s.value("x_0_0_0") == 0.5);
    CHECK(s.value("x_1_0_0") == 0.5);
    CHECK(s.value("pi_0_0_1") == 0.0);
    CHECK(s.value("f_0_0_1_0") == 0.0002);
    CHECK(s.value("is_1") == 1.0);

    const Solution inf = parse_solution("Infeasible - objective value 0.00000000\n      0 x  1  0\n");
    CHECK(inf.status == SolveStatus::Infeasible);
    const Solution starred = parse_solution("Stopped on time - objective value 3.0\n**    4 x_1   0.4    0\n");
    CHECK(starred.status == SolveStatus::Feasible);
    CHECK(starred.objective == 3.0);
    CHECK(starred.value("x_1") == 0.4);
}

TEST_CASE("extract_policy reads pi and checks the occupation identity") {
    auto in = load("two_state.json", "two_state_spec.json");
    const IlpModel m = build_program(in->product, in->amecs, in->spec, {});
    Solution sol;
    sol.status = SolveStatus::Optimal;
    for (const auto& v : m.vars) sol.values[v.name] = 0.0;

    SUBCASE("mass on one action") {
        sol.values["pi_0_0_1"] = 1;
        sol.values["pi_1_0_0"] = 1;
        sol.values["x_0_0_1"] = 0.3;
        const auto e = extract_policy(sol, m, in->product);
        CHECK(e.policy.action.at({0, 0}) == 1);
        CHECK(e.occupation_residual == 0.0);
        CHECK(e.warnings.empty());
    }
    SUBCASE("transient state reads its action from pi alone") {
        sol.values["pi_0_0_1"] = 1;
        sol.values["pi_1_0_0"] = 1;
        const auto e = extract_policy(sol, m, in->product);
        CHECK(e.policy.action.at({0, 0}) == 1);
        CHECK(e.policy.action.at({1, 0}) == 0);
    }
    SUBCASE("loose solver values select the larger pi and warn") {
        std::ostringstream text;
        text << "Feasible\n";
        for (const auto& v : m.vars) text << v.name << ' ' << (v.name == "pi_0_0_0" ? 0.4 : v.name == "pi_0_0_1" ? 0.6 : v.name == "pi_1_0_0" ? 1.0 : 0.0) << '\n';
        const auto e = extract_policy(parse_solution(text.str()), m, in->product);
        CHECK(e.policy.action.at({0, 0}) == 1);
        CHECK(e.warnings.size() == 2);
    }
    SUBCASE("corrupt solutions are rejected") {
        sol.values["pi_1_0_0"] = 1;
        CHECK_THROWS_AS(extract_policy(sol, m, in->product), SolverError);  // nothing at (s0, q0)
        sol.values["pi_0_0_0"] = 1;
        sol.values["pi_0_0_1"] = 1;
        CHECK_THROWS_AS(extract_policy(sol, m, in->product), SolverError);  // two actions
        sol.values["pi_0_0_1"] = 0;
        sol.values["x_0_0_1"] = 0.2;
        sol.values["x_0_0_0"] = 0.2;
        CHECK_THROWS_AS(extract_policy(sol, m, in->product), SolverError);  // mass on an unselected action
        sol.status = SolveStatus::Infeasible;
        CHECK_THROWS_AS(extract_policy(sol, m, in->product), SolverError);
    }
}

TEST_CASE("max_violation re-evaluates rows, bounds and integrality") {
    auto in = load("two_state.json", "two_state_spec.json");
    const IlpModel m = build_program(in->product, in->amecs, in->spec, {});
    Solution sol;
    sol.status = SolveStatus::Optimal;
    for (const auto& v : m.vars) sol.values[v.name] = 0.0;
    CHECK(max_violation(m, sol) >= 1.0);  // total mass row needs 1
    sol.values["pi_0_0_0"] = 0.5;
    CHECK(max_violation(m, sol) >= 0.5);
}

TEST_CASE("solver configuration from the environment") {
    CHECK(SolverConfig::from_environment("cmd {lp} {sol}").command == "cmd {lp} {sol}");
    ::setenv("SSLTL_SOLVER_CMD", "env-solver {lp} {sol}", 1);
    CHECK(SolverConfig::from_environment().command == "env-solver {lp} {sol}");
    ::unsetenv("SSLTL_SOLVER_CMD");
    CHECK(SolverConfig::from_environment().command.empty());
}

TEST_CASE("solver failures surface as SolverError") {
    auto in = load("two_state.json", "two_state_spec.json");
    const IlpModel m = build_program(in->product, in->amecs, in->spec, {});
    SolverConfig bad;
    bad.command = "false {lp} {sol}";
    CHECK_THROWS_AS(solve(m, bad), SolverError);
    bad.command = "sh -c 'echo garbage > {sol}' {lp}";
    CHECK_THROWS_AS(solve(m, bad), SolverError);
    bad.command = "sleep 30 {lp} {sol}";
    bad.timeout = std::chrono::seconds(1);
    const auto start = std::chrono::steady_clock::now();
    CHECK_THROWS_AS(solve(m, bad), SolverError);
    CHECK(std::chrono::steady_clock::now() - start < std::chrono::seconds(10));
    CHECK_THROWS_AS(solve(m, SolverConfig{}), SolverError);
}

TEST_CASE("a fake solver writing name-value lines is read back in full") {
    auto in = load("single_state.json", "single_state_spec.json");
    const IlpModel m = build_program(in->product, in->amecs, in->spec, {});
    SolverConfig fake;
    fake.command = "sh -c 'printf \"Optimal\\nobjective 9\\nx_0_0_0 1\\npi_0_0_0 1\\n\" > {sol}' {lp}";
    const Solution s = solve(m, fake);
    CHECK(s.status == SolveStatus::Optimal);
    CHECK(s.value("x_0_0_0") == 1.0);
    // undeclared-by-solver variables read as zero and the objective is recomputed
    CHECK(s.values.count("isq_0_0") == 1);
    CHECK(s.objective == doctest::Approx(2.5));
}

TEST_CASE("solver: conflicting lower bounds are infeasible" * doctest::skip(!solver_available())) {
    // Two disjoint singletons each asking for at least 0.6 of the time.
    Lmdp m;
    m.states = {"s0", "s1"};
    m.actions = {"go", "stay"};
    m.ap = {"a", "b"};
    m.labels = {{0}, {1}};
    m.enabled = {{0, 1}, {0, 1}};
    m.rows = {{{{1, 1.0}}, {{0, 1.0}}}, {{{0, 1.0}}, {{1, 1.0}}}};
    validate(m);
    SsLtlSpec spec;
    spec.ss.push_back({"a", LabelFormula::prop("a"), 0.6, 1.0});
    spec.ss.push_back({"b", LabelFormula::prop("b"), 0.6, 1.0});
    auto in = wrap(m, load_hoa(fixture("accept_all.hoa")), spec);
    const Solution s = solve(build_program(in->product, in->amecs, in->spec, {}), test_solver());
    CHECK(s.status == SolveStatus::Infeasible);
    CHECK(!brute_force_synth(in->product, in->spec).has_value());
}

TEST_CASE("solver: one-state instance" * doctest::skip(!solver_available())) {
    auto in = load("single_state.json", "single_state_spec.json");
    const IlpModel m = build_program(in->product, in->amecs, in->spec, {});
    const Solution s = solve(m, test_solver());
    REQUIRE(s.status == SolveStatus::Optimal);
    CHECK(s.value("x_0_0_0") == doctest::Approx(1.0));
    CHECK(s.value("pi_0_0_0") == doctest::Approx(1.0));
    CHECK(s.objective == doctest::Approx(2.5));
    CHECK(max_violation(m, s) <= 1e-6);
}

TEST_CASE("solver: two-state instance and solution invariants" * doctest::skip(!solver_available())) {
    auto in = load("two_state.json", "two_state_spec.json");
    const IlpModel m = build_program(in->product, in->amecs, in->spec, {});
    const Solution s = solve(m, test_solver());
    REQUIRE(s.status == SolveStatus::Optimal);
    CHECK(max_violation(m, s) <= 1e-6);
    const auto e = extract_policy(s, m, in->product);
    CHECK(e.policy.action.at({0, 0}) == in->model.action_index("go"));
    CHECK(verify_policy(in->product, in->spec, e.policy).verdict);
}

TEST_CASE("solver: invariants on random tiny instances" * doctest::skip(!solver_available())) {
    Rng rng(404);
    int feasible = 0, pinned = 0;
    for (int trial = 0; trial < 25; ++trial) {
        const TinyInstance t = random_tiny_instance(rng);
        auto in = wrap(t.model, *t.dra, t.spec);
        if (in->amecs.empty()) continue;
        const IlpModel m = build_program(in->product, in->amecs, in->spec, {});
        const Solution s = solve(m, test_solver());
        if (s.status == SolveStatus::Optimal || s.status == SolveStatus::Feasible) {
            ++feasible;
            CHECK(max_violation(m, s) <= 1e-6);
            // no occupation mass on states the reachability flags switch off
            for (std::size_t i = 0; i < in->product.size(); ++i)
                if (s.value(m.vars[m.isq[i]].name) < 0.5)
                    for (int a : in->product.enabled(static_cast<int>(i)))
                        CHECK(s.value(m.vars[m.x[i][a]].name) <= 1e-6);
        }
        // A policy the oracle accepts must stay feasible when pinned in the program.
        if (auto pi = brute_force_synth(in->product, in->spec)) {
            ++pinned;
            IlpModel fixed = m;
            fix_policy(fixed, in->product, *pi);
            const Solution f = solve(fixed, test_solver());
            CHECK((f.status == SolveStatus::Optimal || f.status == SolveStatus::Feasible));
        }
    }
    CHECK(feasible > 3);
    CHECK(pinned > 3);
}

TEST_CASE("CBC smoke test" * doctest::skip(std::string(SSLTL_TEST_CBC).empty())) {
    auto in = load("two_state.json", "two_state_spec.json");
    const IlpModel m = build_program(in->product, in->amecs, in->spec, {});
    const Solution s = solve(m, cbc_solver());
    REQUIRE(s.status == SolveStatus::Optimal);
    CHECK(max_violation(m, s) <= 1e-6);
    CHECK(extract_policy(s, m, in->product).policy.action.at({0, 0}) == in->model.action_index("go"));
}
