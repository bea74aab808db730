#include "ssltl/verify.hpp"

#include "ssltl/chain.hpp"
#include "ssltl/graph.hpp"

#include <algorithm>
#include <cmath>

namespace ssltl {

namespace {

std::vector<std::vector<bool>> interval_members(const Lmdp& m, const SsLtlSpec& spec) {
    std::vector<std::vector<bool>> out;
    for (const auto& iv : spec.ss) {
        std::vector<bool> in(m.num_states(), false);
        for (int s : labeled_subset(m, iv.formula)) in[s] = true;
        out.push_back(std::move(in));
    }
    return out;
}

VerificationReport evaluate(const ProductLmdp& p, const SsLtlSpec& spec, const std::vector<std::vector<bool>>& members,
                            const Policy& pi, const ProductLmc& c) {
    const Lmdp& m = *p.model;
    const Dra& d = *p.dra;
    VerificationReport r;

    r.deterministic = true;
    for (const auto& [ps, a] : pi.action) {
        const int i = p.find(ps);
        if (i >= 0 && p.rows[i][a].empty()) r.deterministic = false;
    }
    if (!r.deterministic) r.failures.push_back("policy selects a disabled action");

    const auto n = static_cast<Eigen::Index>(c.states.size());
    const BsccDecomposition dec = bsccs(c.trans, c.initial);
    const auto classes = projection_classes(c);

    // Every BSCC must be accepting; all of them are reachable by construction.
    for (const auto& b : dec.bsccs) {
        r.bscc_sizes.push_back(b.size());
        std::vector<ProductState> members_ps;
        for (int v : b) members_ps.push_back(c.states[v]);
        r.rabin_ok.push_back(bscc_accepting(members_ps, d));
    }
    if (std::find(r.rabin_ok.begin(), r.rabin_ok.end(), false) != r.rabin_ok.end())
        r.failures.push_back("a reachable BSCC is not Rabin-accepting");

    // A model state occurring in every BSCC.
    for (int s = 0; s < static_cast<int>(m.num_states()) && !r.shared_state; ++s) {
        bool everywhere = true;
        for (const auto& b : dec.bsccs)
            everywhere = everywhere && std::any_of(b.begin(), b.end(), [&](int v) { return classes[v] == s; });
        if (everywhere) r.shared_state = s;
    }

    // Each BSCC projected onto model states must give the same long-run profile.
    std::vector<Eigen::VectorXd> projected;
    for (const auto& b : dec.bsccs) {
        const auto k = static_cast<Eigen::Index>(b.size());
        Eigen::MatrixXd sub(k, k);
        for (Eigen::Index i = 0; i < k; ++i)
            for (Eigen::Index j = 0; j < k; ++j) sub(i, j) = c.trans(b[i], b[j]);
        const Eigen::VectorXd st = stationary(sub);
        Eigen::VectorXd proj = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(m.num_states()));
        for (Eigen::Index i = 0; i < k; ++i) proj(classes[b[i]]) += st(i);
        projected.push_back(std::move(proj));
    }
    for (std::size_t k = 1; k < projected.size(); ++k)
        r.bscc_disagreement = std::max(r.bscc_disagreement, (projected[k] - projected[0]).cwiseAbs().maxCoeff());
    r.unichain = r.shared_state.has_value() && r.bscc_disagreement <= 1e-9;
    if (!r.shared_state) r.failures.push_back("no model state is shared by all BSCCs");
    else if (!r.unichain) r.failures.push_back("BSCCs project to different long-run distributions");

    const Eigen::VectorXd lim = limiting_distribution(c.trans, point_mass<double>(n, c.initial));
    r.product_states = c.states;
    r.product_distribution.assign(lim.data(), lim.data() + n);

    Partition part;
    part.class_of.resize(static_cast<std::size_t>(n));
    part.classes.resize(m.num_states());
    for (Eigen::Index i = 0; i < n; ++i) {
        part.class_of[i] = classes[i];
        part.classes[classes[i]].push_back(static_cast<int>(i));
    }
    const Eigen::VectorXd agg = lump_distribution(lim, part);
    r.aggregate_distribution.assign(agg.data(), agg.data() + agg.size());
    for (std::size_t s = 0; s < m.num_states(); ++s)
        if (!part.classes[s].empty() && agg(static_cast<Eigen::Index>(s)) <= 1e-12)
            r.aggregate_transient.push_back(static_cast<int>(s));

    Partition visited = Partition::from_labels(classes);
    r.lumpable = check_lumpable(c.trans, visited) <= 1e-12;

    for (std::size_t k = 0; k < spec.ss.size(); ++k) {
        IntervalResult ir;
        ir.formula = spec.ss[k].text;
        ir.lower = spec.ss[k].lower;
        ir.upper = spec.ss[k].upper;
        for (std::size_t s = 0; s < m.num_states(); ++s)
            if (members[k][s]) ir.achieved += agg(static_cast<Eigen::Index>(s));
        ir.ok = ir.achieved >= ir.lower - kSteadyStateTolerance && ir.achieved <= ir.upper + kSteadyStateTolerance;
        if (!ir.ok) r.failures.push_back("steady-state interval violated: " + ir.formula);
        r.ss_results.push_back(std::move(ir));
    }

    r.verdict = r.deterministic && r.unichain &&
                std::all_of(r.rabin_ok.begin(), r.rabin_ok.end(), [](bool b) { return b; }) &&
                std::all_of(r.ss_results.begin(), r.ss_results.end(), [](const IntervalResult& x) { return x.ok; });
    return r;
}

}  // namespace

VerificationReport verify_policy(const ProductLmdp& p, const SsLtlSpec& spec, const Policy& pi) {
    check_spec_against(spec, *p.model);
    return evaluate(p, spec, interval_members(*p.model, spec), pi, induce_chain(p, pi));
}

VerificationReport verify_policy(const Lmdp& m, const Dra& d, const SsLtlSpec& spec, const Policy& pi) {
    const ProductLmdp p = build_product(m, d);
    return verify_policy(p, spec, pi);
}

nlohmann::json VerificationReport::to_json(const Lmdp& m) const {
    nlohmann::json j;
    j["verdict"] = verdict;
    j["deterministic"] = deterministic;
    j["unichain"] = unichain;
    j["bscc_sizes"] = bscc_sizes;
    j["shared_state"] = shared_state ? nlohmann::json(m.states[*shared_state]) : nlohmann::json(nullptr);
    j["bscc_disagreement"] = bscc_disagreement;
    j["rabin_ok"] = rabin_ok;
    j["lumpable"] = lumpable;
    auto& ss = j["ss_results"] = nlohmann::json::array();
    for (const auto& r : ss_results)
        ss.push_back({{"formula", r.formula}, {"achieved", r.achieved}, {"lower", r.lower}, {"upper", r.upper}, {"ok", r.ok}});
    auto& prod = j["product_distribution"] = nlohmann::json::array();
    for (std::size_t i = 0; i < product_states.size(); ++i)
        prod.push_back({{"s", m.states[product_states[i].s]}, {"q", node_id(product_states[i].q)}, {"p", product_distribution[i]}});
    auto& agg = j["aggregate_distribution"] = nlohmann::json::object();
    for (std::size_t s = 0; s < aggregate_distribution.size(); ++s) agg[m.states[s]] = aggregate_distribution[s];
    auto& tr = j["aggregate_transient"] = nlohmann::json::array();
    for (int s : aggregate_transient) tr.push_back(m.states[s]);
    j["failures"] = failures;
    return j;
}

std::optional<Policy> brute_force_synth(const ProductLmdp& p, const SsLtlSpec& spec, const BruteForceLimits& limits) {
    const Lmdp& m = *p.model;
    if (p.size() > limits.max_states)
        throw EnumerationLimit("product has " + std::to_string(p.size()) + " states (limit " +
                               std::to_string(limits.max_states) + ")");
    if (m.num_actions() > limits.max_actions)
        throw EnumerationLimit("model has " + std::to_string(m.num_actions()) + " actions (limit " +
                               std::to_string(limits.max_actions) + ")");
    check_spec_against(spec, m);
    const auto members = interval_members(m, spec);
    const int n = static_cast<int>(p.size());

    // Odometer over action choices; position 0 is the most significant digit.
    std::vector<std::size_t> digit(n, 0);
    Policy pi;
    auto current = [&] {
        for (int i = 0; i < n; ++i) pi.action[p.states[i]] = p.enabled(i)[digit[i]];
    };
    for (;;) {
        current();
        const ProductLmc c = induce_chain(p, pi);
        if (evaluate(p, spec, members, pi, c).verdict) return pi;

        // Policies agreeing on every state up to the last one the chain visits
        // induce the same chain, so advance at that position.
        int last = 0;
        for (const auto& ps : c.states) last = std::max(last, p.find(ps));
        int pos = last;
        while (pos >= 0 && ++digit[pos] == p.enabled(pos).size()) {
            digit[pos] = 0;
            --pos;
        }
        if (pos < 0) return std::nullopt;
        for (int i = last + 1; i < n; ++i) digit[i] = 0;
    }
}

std::optional<Policy> brute_force_synth(const Lmdp& m, const Dra& d, const SsLtlSpec& spec,
                                        const BruteForceLimits& limits) {
    const ProductLmdp p = build_product(m, d);
    return brute_force_synth(p, spec, limits);
}

}  // namespace ssltl
