#pragma once

// Dense Markov-chain analysis. Everything here is templated on the scalar
// type of the kernel and works on any Eigen dense expression.

#include "ssltl/graph.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

namespace ssltl {

class ChainError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
template <typename Scalar>
using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

/// Partition of a state set into classes.
struct Partition {
    std::vector<int> class_of;
    std::vector<std::vector<int>> classes;

    /// Builds a partition from per-state class labels; classes are numbered
    /// in order of their smallest label value.
    static Partition from_labels(const std::vector<int>& labels) {
        std::vector<int> distinct = labels;
        std::sort(distinct.begin(), distinct.end());
        distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
        Partition p;
        p.classes.resize(distinct.size());
        p.class_of.resize(labels.size());
        for (std::size_t i = 0; i < labels.size(); ++i) {
            int k = static_cast<int>(std::lower_bound(distinct.begin(), distinct.end(), labels[i]) - distinct.begin());
            p.class_of[i] = k;
            p.classes[k].push_back(static_cast<int>(i));
        }
        return p;
    }

    static Partition singletons(std::size_t n) {
        std::vector<int> labels(n);
        for (std::size_t i = 0; i < n; ++i) labels[i] = static_cast<int>(i);
        return from_labels(labels);
    }

    std::size_t size() const { return classes.size(); }

    /// Collector matrix V: V(i, k) = 1 iff state i belongs to class k.
    template <typename Scalar = double>
    Matrix<Scalar> collector() const {
        Matrix<Scalar> V = Matrix<Scalar>::Zero(class_of.size(), classes.size());
        for (std::size_t i = 0; i < class_of.size(); ++i) V(i, class_of[i]) = Scalar(1);
        return V;
    }
};

/**
 * Stationary distribution of an irreducible chain.
 *
 * Solves x (P - I) = 0 with one balance equation replaced by sum(x) = 1,
 * using a full-pivot LU. Throws ChainError when the system is singular,
 * which happens iff the chain has more than one closed class.
 */
template <typename Derived>
Vector<typename Derived::Scalar> stationary(const Eigen::MatrixBase<Derived>& P) {
    using Scalar = typename Derived::Scalar;
    const Eigen::Index n = P.rows();
    if (n == 0 || P.cols() != n) throw ChainError("stationary: kernel must be square and non-empty");
    Matrix<Scalar> A = P.transpose() - Matrix<Scalar>::Identity(n, n);
    A.row(n - 1).setOnes();
    Vector<Scalar> b = Vector<Scalar>::Zero(n);
    b(n - 1) = Scalar(1);
    Eigen::FullPivLU<Matrix<Scalar>> lu(A);
    if (!lu.isInvertible()) throw ChainError("stationary: singular system (chain is not irreducible)");
    Vector<Scalar> x = lu.solve(b);
    const Scalar residual = (x.transpose() * P - x.transpose()).cwiseAbs().maxCoeff();
    const Scalar bound = std::max(Scalar(1e-10), Scalar(64) * Scalar(n) * std::numeric_limits<Scalar>::epsilon());
    if (!(residual <= bound)) throw ChainError("stationary: residual " + std::to_string(double(residual)));
    return x;
}

/**
 * Long-run (Cesaro) distribution of beta P^n for an arbitrary chain.
 *
 * Mass ends up in BSCC k with the absorption probability from beta, and is
 * spread there according to the BSCC's stationary distribution. Transient
 * states get zero.
 */
template <typename Derived, typename BetaDerived>
Vector<typename Derived::Scalar> limiting_distribution(const Eigen::MatrixBase<Derived>& P,
                                                       const Eigen::MatrixBase<BetaDerived>& beta) {
    using Scalar = typename Derived::Scalar;
    const Eigen::Index n = P.rows();
    const BsccDecomposition dec = bsccs(P, 0);
    std::vector<int> pos(n, -1);
    const auto& tr = dec.transient;
    for (std::size_t i = 0; i < tr.size(); ++i) pos[tr[i]] = static_cast<int>(i);

    const Eigen::Index m = static_cast<Eigen::Index>(tr.size());
    Eigen::FullPivLU<Matrix<Scalar>> lu;
    if (m > 0) {
        Matrix<Scalar> A = Matrix<Scalar>::Identity(m, m);
        for (Eigen::Index i = 0; i < m; ++i)
            for (Eigen::Index j = 0; j < m; ++j) A(i, j) -= P(tr[i], tr[j]);
        lu.compute(A);
        if (!lu.isInvertible()) throw ChainError("limiting_distribution: singular transient system");
    }

    Vector<Scalar> out = Vector<Scalar>::Zero(n);
    for (const auto& b : dec.bsccs) {
        const Eigen::Index k = static_cast<Eigen::Index>(b.size());
        Matrix<Scalar> sub(k, k);
        for (Eigen::Index i = 0; i < k; ++i)
            for (Eigen::Index j = 0; j < k; ++j) sub(i, j) = P(b[i], b[j]);
        const Vector<Scalar> pi = stationary(sub);

        Scalar mass = 0;
        for (int s : b) mass += beta(s);
        if (m > 0) {
            // h(i) = probability of absorption into b from transient state i.
            Vector<Scalar> w = Vector<Scalar>::Zero(m);
            for (Eigen::Index i = 0; i < m; ++i)
                for (int s : b) w(i) += P(tr[i], s);
            const Vector<Scalar> h = lu.solve(w);
            for (Eigen::Index i = 0; i < m; ++i) mass += beta(tr[i]) * h(i);
        }
        for (Eigen::Index i = 0; i < k; ++i) out(b[i]) = mass * pi(i);
    }
    const Scalar total = out.sum();
    if (!(std::abs(double(total - Scalar(1))) <= 1e-9))
        throw ChainError("limiting_distribution: total mass " + std::to_string(double(total)));
    return out;
}

/// Point-mass initial distribution.
template <typename Scalar = double>
Vector<Scalar> point_mass(Eigen::Index n, Eigen::Index at) {
    Vector<Scalar> beta = Vector<Scalar>::Zero(n);
    beta(at) = Scalar(1);
    return beta;
}

/// max over classes and member pairs of |(e_a - e_b) P V|_inf; zero iff ordinarily lumpable.
template <typename Derived>
typename Derived::Scalar check_lumpable(const Eigen::MatrixBase<Derived>& P, const Partition& p) {
    using Scalar = typename Derived::Scalar;
    const Matrix<Scalar> PV = P * p.template collector<Scalar>();
    Scalar worst = 0;
    // The largest pairwise gap in a column is its spread over the class.
    for (const auto& cls : p.classes) {
        Matrix<Scalar> rows(static_cast<Eigen::Index>(cls.size()), PV.cols());
        for (std::size_t i = 0; i < cls.size(); ++i) rows.row(i) = PV.row(cls[i]);
        worst = std::max(worst, (rows.colwise().maxCoeff() - rows.colwise().minCoeff()).maxCoeff());
    }
    return worst;
}

/// Class masses: sum of member masses.
template <typename Derived>
Vector<typename Derived::Scalar> lump_distribution(const Eigen::MatrixBase<Derived>& d, const Partition& p) {
    using Scalar = typename Derived::Scalar;
    Vector<Scalar> out = Vector<Scalar>::Zero(static_cast<Eigen::Index>(p.size()));
    for (std::size_t i = 0; i < p.class_of.size(); ++i) out(p.class_of[i]) += d(i);
    return out;
}

/**
 * Kernel of the aggregated chain, read off the first member of each class:
 * T*(k)(l) = sum over j in class l of P(rep_k, j). Throws ChainError if any
 * other member's row disagrees by more than `tol`.
 */
template <typename Derived>
Matrix<typename Derived::Scalar> aggregate_kernel(const Eigen::MatrixBase<Derived>& P, const Partition& p,
                                                  double tol = 1e-12) {
    using Scalar = typename Derived::Scalar;
    const Matrix<Scalar> PV = P * p.template collector<Scalar>();
    const Eigen::Index k = static_cast<Eigen::Index>(p.size());
    Matrix<Scalar> out(k, k);
    for (Eigen::Index c = 0; c < k; ++c) {
        const auto& cls = p.classes[c];
        out.row(c) = PV.row(cls[0]);
        for (std::size_t i = 1; i < cls.size(); ++i)
            if (!((PV.row(cls[i]) - PV.row(cls[0])).cwiseAbs().maxCoeff() <= Scalar(tol)))
                throw ChainError("aggregate: class " + std::to_string(c) + " is not lumpable (representative rows differ)");
    }
    return out;
}

}  // namespace ssltl
