#pragma once

#include "ssltl/chain.hpp"
#include "ssltl/hoa.hpp"
#include "ssltl/ilp.hpp"
#include "ssltl/model.hpp"
#include "ssltl/product.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <random>
#include <set>
#include <string>
#include <vector>

namespace testing {

using namespace ssltl;

inline std::filesystem::path fixture(const std::string& name) { return std::filesystem::path(SSLTL_FIXTURE_DIR) / name; }

/// Preferred MILP solver for the test suite; empty when none was found at configure time.
inline SolverConfig test_solver() {
    SolverConfig s;
    s.command = SSLTL_TEST_SOLVER;
    s.timeout = std::chrono::seconds(600);
    return s;
}

inline SolverConfig cbc_solver() {
    SolverConfig s;
    if (std::string(SSLTL_TEST_CBC).empty()) return s;
    s.command = std::string(SSLTL_TEST_CBC) + " {lp} solve printingOptions all solution {sol}";
    s.timeout = std::chrono::seconds(600);
    return s;
}

using Rng = std::mt19937_64;

inline double uniform(Rng& rng, double lo = 0.0, double hi = 1.0) {
    return std::uniform_real_distribution<double>(lo, hi)(rng);
}

inline int pick(Rng& rng, int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); }

/// Random probability vector over `n` entries, each at least `floor`.
inline std::vector<double> random_simplex(Rng& rng, int n, double floor = 0.05) {
    std::vector<double> w(n);
    double sum = 0;
    for (auto& x : w) sum += (x = uniform(rng, 0.1, 1.0));
    for (auto& x : w) x = floor + (1.0 - floor * n) * x / sum;
    return w;
}

/// Single-action LMDP from a dense kernel (rows must be stochastic).
inline Lmdp chain_model(const Eigen::MatrixXd& P, const std::vector<std::vector<int>>& labels,
                        std::vector<std::string> ap = {"a", "b"}) {
    Lmdp m;
    const int n = static_cast<int>(P.rows());
    for (int s = 0; s < n; ++s) m.states.push_back("s" + std::to_string(s));
    m.actions = {"step"};
    m.ap = std::move(ap);
    m.labels = labels;
    m.enabled.assign(n, {0});
    m.rows.assign(n, std::vector<TransitionRow>(1));
    for (int s = 0; s < n; ++s)
        for (int t = 0; t < n; ++t)
            if (P(s, t) > 0) m.rows[s][0].push_back({t, P(s, t)});
    m.initial = 0;
    return m;
}

inline std::vector<std::vector<int>> random_labels(Rng& rng, int n, int props) {
    std::vector<std::vector<int>> labels(n);
    for (auto& l : labels)
        for (int p = 0; p < props; ++p)
            if (rng() & 1) l.push_back(p);
    return labels;
}

/// Irreducible kernel: a random Hamiltonian cycle plus random extra edges.
inline Eigen::MatrixXd random_irreducible(Rng& rng, int n) {
    std::vector<int> order(n);
    for (int i = 0; i < n; ++i) order[i] = i;
    std::shuffle(order.begin(), order.end(), rng);
    Eigen::MatrixXd P = Eigen::MatrixXd::Zero(n, n);
    for (int k = 0; k < n; ++k) {
        const int s = order[k];
        std::set<int> succ{order[(k + 1) % n]};
        const int extra = pick(rng, 0, std::min(3, n - 1));
        for (int e = 0; e < extra; ++e) succ.insert(pick(rng, 0, n - 1));
        const auto w = random_simplex(rng, static_cast<int>(succ.size()));
        int i = 0;
        for (int t : succ) P(s, t) = w[i++];
    }
    return P;
}

/// Complete random DRA over `ap` with one or two pairs. With `split`, nodes
/// other than the initial one form two groups that are never left, which
/// gives product chains with several BSCCs.
inline Dra random_dra(Rng& rng, int nodes, std::vector<std::string> ap = {"a", "b"}, bool split = false) {
    Dra d;
    for (int q = 0; q < nodes; ++q) d.nodes.push_back("q" + std::to_string(q));
    d.ap = std::move(ap);
    d.initial = 0;
    const std::size_t letters = std::size_t{1} << d.ap.size();
    d.delta.resize(nodes * letters);
    if (split && nodes < 3) throw std::invalid_argument("split automata need at least three nodes");
    const int cut = split ? pick(rng, 2, nodes - 1) : nodes;
    for (int q = 0; q < nodes; ++q)
        for (std::size_t l = 0; l < letters; ++l) {
            int& t = d.delta[q * letters + l];
            if (!split) t = pick(rng, 0, nodes - 1);
            else if (q == 0) {
                // Wait on letters with both or neither of the first two
                // propositions, then commit to a group by which one was seen.
                const bool first = l & 1, second = l >> 1 & 1;
                t = first == second ? 0 : first ? pick(rng, 1, cut - 1) : pick(rng, cut, nodes - 1);
            }
            else if (q < cut) t = pick(rng, 1, cut - 1);
            else t = pick(rng, cut, nodes - 1);
        }
    const int pairs = pick(rng, 1, 2);
    for (int i = 0; i < pairs; ++i) {
        RabinPair p;
        for (int q = 0; q < nodes; ++q) {
            const int r = pick(rng, 0, 3);
            if (r == 0) p.fin.push_back(q);
            else if (r == 1) p.inf.push_back(q);
        }
        if (p.inf.empty()) {
            const int q = pick(rng, 0, nodes - 1);
            p.fin.erase(std::remove(p.fin.begin(), p.fin.end(), q), p.fin.end());
            p.inf.push_back(q);
        }
        d.pairs.push_back(p);
    }
    return d;
}

/// Multichain kernel with 1-3 closed classes (each at most 12 states) and transient states.
inline Eigen::MatrixXd random_multichain(Rng& rng, int n) {
    const int closed = pick(rng, 1, std::min(3, n));
    std::vector<int> order(n);
    for (int i = 0; i < n; ++i) order[i] = i;
    std::shuffle(order.begin(), order.end(), rng);
    // Sizes of closed classes; the rest are transient.
    std::vector<int> sizes;
    int used = 0;
    for (int c = 0; c < closed; ++c) {
        const int left = n - used - (closed - c - 1);
        const int sz = pick(rng, 1, std::min(12, std::max(1, left / 2 + 1)));
        sizes.push_back(sz);
        used += sz;
    }
    Eigen::MatrixXd P = Eigen::MatrixXd::Zero(n, n);
    int at = 0;
    for (int sz : sizes) {
        Eigen::MatrixXd sub = random_irreducible(rng, sz);
        for (int i = 0; i < sz; ++i)
            for (int j = 0; j < sz; ++j) P(order[at + i], order[at + j]) = sub(i, j);
        at += sz;
    }
    for (int k = at; k < n; ++k) {
        const int s = order[k];
        std::set<int> succ{order[pick(rng, 0, at - 1)]};
        const int extra = pick(rng, 0, 3);
        for (int e = 0; e < extra; ++e) succ.insert(order[pick(rng, 0, n - 1)]);
        succ.erase(s);
        const auto w = random_simplex(rng, static_cast<int>(succ.size()));
        int i = 0;
        for (int t : succ) P(s, t) = w[i++];
    }
    return P;
}

// ---------------------------------------------------------------------------
// LTL over lasso words u v^omega

struct Ltl;
using LtlPtr = std::shared_ptr<const Ltl>;

struct Ltl {
    enum Op { True, Prop, Not, And, Or, Next, Until } op;
    std::string prop;
    LtlPtr l, r;
};

inline LtlPtr tt() { return std::make_shared<Ltl>(Ltl{Ltl::True, {}, nullptr, nullptr}); }
inline LtlPtr ap(std::string p) { return std::make_shared<Ltl>(Ltl{Ltl::Prop, std::move(p), nullptr, nullptr}); }
inline LtlPtr lnot(LtlPtr f) { return std::make_shared<Ltl>(Ltl{Ltl::Not, {}, std::move(f), nullptr}); }
inline LtlPtr land(LtlPtr a, LtlPtr b) { return std::make_shared<Ltl>(Ltl{Ltl::And, {}, std::move(a), std::move(b)}); }
inline LtlPtr lor(LtlPtr a, LtlPtr b) { return std::make_shared<Ltl>(Ltl{Ltl::Or, {}, std::move(a), std::move(b)}); }
inline LtlPtr X(LtlPtr f) { return std::make_shared<Ltl>(Ltl{Ltl::Next, {}, std::move(f), nullptr}); }
inline LtlPtr U(LtlPtr a, LtlPtr b) { return std::make_shared<Ltl>(Ltl{Ltl::Until, {}, std::move(a), std::move(b)}); }
inline LtlPtr F(LtlPtr f) { return U(tt(), std::move(f)); }
inline LtlPtr G(LtlPtr f) { return lnot(F(lnot(std::move(f)))); }

using Word = std::vector<std::set<std::string>>;

struct Lasso {
    Word prefix, loop;  // loop non-empty

    std::size_t size() const { return prefix.size() + loop.size(); }
    std::size_t next(std::size_t i) const { return i + 1 < size() ? i + 1 : prefix.size(); }
    const std::set<std::string>& at(std::size_t i) const {
        return i < prefix.size() ? prefix[i] : loop[i - prefix.size()];
    }
};

/// Truth value of `f` at every position of the lasso.
inline std::vector<bool> ltl_eval(const LtlPtr& f, const Lasso& w) {
    const std::size_t n = w.size();
    std::vector<bool> out(n);
    switch (f->op) {
    case Ltl::True: out.assign(n, true); break;
    case Ltl::Prop:
        for (std::size_t i = 0; i < n; ++i) out[i] = w.at(i).count(f->prop) > 0;
        break;
    case Ltl::Not: {
        auto a = ltl_eval(f->l, w);
        for (std::size_t i = 0; i < n; ++i) out[i] = !a[i];
        break;
    }
    case Ltl::And:
    case Ltl::Or: {
        auto a = ltl_eval(f->l, w), b = ltl_eval(f->r, w);
        for (std::size_t i = 0; i < n; ++i) out[i] = f->op == Ltl::And ? (a[i] && b[i]) : (a[i] || b[i]);
        break;
    }
    case Ltl::Next: {
        auto a = ltl_eval(f->l, w);
        for (std::size_t i = 0; i < n; ++i) out[i] = a[w.next(i)];
        break;
    }
    case Ltl::Until: {
        // Least fixpoint of  out = b | (a & X out).
        auto a = ltl_eval(f->l, w), b = ltl_eval(f->r, w);
        out.assign(n, false);
        for (bool changed = true; changed;) {
            changed = false;
            for (std::size_t i = n; i-- > 0;) {
                const bool v = b[i] || (a[i] && out[w.next(i)]);
                if (v != out[i]) {
                    out[i] = v;
                    changed = true;
                }
            }
        }
        break;
    }
    }
    return out;
}

inline bool ltl_holds(const LtlPtr& f, const Lasso& w) { return ltl_eval(f, w)[0]; }

/// Rabin acceptance of the automaton's run on the lasso word.
inline bool dra_accepts(const Dra& d, const Lasso& w) {
    auto letter = [&](std::size_t i) {
        Letter l = 0;
        for (std::size_t k = 0; k < d.ap.size(); ++k)
            if (w.at(i).count(d.ap[k])) l |= Letter{1} << k;
        return l;
    };
    // Run until a (position, node) pair inside the loop repeats.
    std::map<std::pair<std::size_t, int>, std::size_t> seen;
    std::vector<int> run;
    int q = d.initial;
    std::size_t i = 0;
    for (;;) {
        q = d.step(q, letter(i));
        if (i >= w.prefix.size()) {
            auto [it, fresh] = seen.emplace(std::pair{i, q}, run.size());
            if (!fresh) {
                std::set<int> inf(run.begin() + static_cast<std::ptrdiff_t>(it->second), run.end());
                for (std::size_t p = 0; p < d.pairs.size(); ++p) {
                    bool fin_hit = false, inf_hit = false;
                    for (int v : inf) {
                        fin_hit = fin_hit || d.in_fin(p, v);
                        inf_hit = inf_hit || d.in_inf(p, v);
                    }
                    if (!fin_hit && inf_hit) return true;
                }
                return false;
            }
        }
        run.push_back(q);
        i = w.next(i);
    }
}

inline Lasso random_lasso(Rng& rng, const std::vector<std::string>& props, int max_prefix = 5, int max_loop = 5) {
    Lasso w;
    auto letter = [&] {
        std::set<std::string> l;
        for (const auto& p : props)
            if (rng() & 1) l.insert(p);
        return l;
    };
    const int pre = pick(rng, 0, max_prefix), loop = pick(rng, 1, max_loop);
    for (int i = 0; i < pre; ++i) w.prefix.push_back(letter());
    for (int i = 0; i < loop; ++i) w.loop.push_back(letter());
    return w;
}

// ---------------------------------------------------------------------------
// Cesaro oracle

/// Window average of beta P^n over n in [burn, burn + window).
inline Eigen::VectorXd cesaro(const Eigen::MatrixXd& P, Eigen::RowVectorXd beta, long burn, long window) {
    for (long n = 0; n < burn; ++n) beta = beta * P;
    Eigen::RowVectorXd acc = Eigen::RowVectorXd::Zero(P.rows());
    for (long n = 0; n < window; ++n) {
        acc += beta;
        beta = beta * P;
    }
    return (acc / static_cast<double>(window)).transpose();
}

// ---------------------------------------------------------------------------
// Tiny synthesis instances

struct TinyInstance {
    Lmdp model;
    std::shared_ptr<Dra> dra;
    std::string dra_name;
    SsLtlSpec spec;
};

/// 2-3 states, 2-3 actions, mixed deterministic and stochastic moves, labels
/// over {a, b}, an automaton from the fixture pool and up to two intervals.
/// Resamples until the product has at most `max_product` states.
inline TinyInstance random_tiny_instance(Rng& rng, std::size_t max_product = 12) {
    static const std::vector<std::string> pool{"accept_all", "theta1", "theta2", "theta4", "theta5", "theta6"};
    static const std::vector<std::string> formulas{"a", "b", "!a", "a & !b", "a | b"};
    for (;;) {
        TinyInstance in;
        Lmdp& m = in.model;
        const int n = pick(rng, 2, 3), na = pick(rng, 2, 3);
        for (int s = 0; s < n; ++s) m.states.push_back("s" + std::to_string(s));
        for (int a = 0; a < na; ++a) m.actions.push_back("act" + std::to_string(a));
        m.ap = {"a", "b"};
        m.labels = random_labels(rng, n, 2);
        m.enabled.assign(n, {});
        m.rows.assign(n, std::vector<TransitionRow>(na));
        for (int s = 0; s < n; ++s)
            for (int a = 0; a < na; ++a) {
                if (a > 0 && pick(rng, 0, 3) == 0) continue;
                m.enabled[s].push_back(a);
                const int t1 = pick(rng, 0, n - 1);
                if (pick(rng, 0, 1) == 0) {
                    m.rows[s][a].push_back({t1, 1.0});
                } else {
                    int t2 = pick(rng, 0, n - 2);
                    if (t2 >= t1) ++t2;
                    const double p = 0.25 * pick(rng, 1, 3);
                    m.rows[s][a] = {{std::min(t1, t2), t1 < t2 ? p : 1 - p}, {std::max(t1, t2), t1 < t2 ? 1 - p : p}};
                }
                if (pick(rng, 0, 2) == 0)
                    for (const auto& t : m.rows[s][a]) m.reward[{s, a, t.to}] = pick(rng, 0, 1);
            }
        m.initial = 0;
        validate(m);

        in.dra_name = pool[pick(rng, 0, static_cast<int>(pool.size()) - 1)];
        in.dra = std::make_shared<Dra>(load_hoa(fixture(in.dra_name + ".hoa")));
        in.spec.dra_source = fixture(in.dra_name + ".hoa");
        const int intervals = pick(rng, 0, 2);
        for (int k = 0; k < intervals; ++k) {
            const auto& text = formulas[pick(rng, 0, static_cast<int>(formulas.size()) - 1)];
            int lo = pick(rng, 0, 10), hi = pick(rng, 0, 10);
            if (lo > hi) std::swap(lo, hi);
            in.spec.ss.push_back({text, LabelFormula::parse(text), lo / 10.0, hi / 10.0});
        }
        if (build_product(in.model, *in.dra).size() <= max_product) return in;
    }
}

}  // namespace testing
