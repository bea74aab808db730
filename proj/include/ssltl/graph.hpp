#pragma once

#include "ssltl/hoa.hpp"

#include <Eigen/Dense>

#include <map>
#include <vector>

namespace ssltl {

struct ProductLmdp;
struct ProductState;

using Adjacency = std::vector<std::vector<int>>;

/// Tarjan's algorithm (iterative). Components are emitted in reverse
/// topological order; members of each component are sorted.
std::vector<std::vector<int>> strongly_connected_components(const Adjacency& graph);

/// Positive-probability edges of a dense kernel.
template <typename Derived>
Adjacency support_graph(const Eigen::MatrixBase<Derived>& P) {
    Adjacency g(P.rows());
    for (Eigen::Index i = 0; i < P.rows(); ++i)
        for (Eigen::Index j = 0; j < P.cols(); ++j)
            if (P(i, j) > 0) g[i].push_back(static_cast<int>(j));
    return g;
}

struct BsccDecomposition {
    std::vector<std::vector<int>> bsccs;  // ordered by smallest member
    std::vector<int> transient;
    std::vector<int> reachable_bsccs;     // indices into bsccs, reachable from the initial state
};

BsccDecomposition bsccs(const Adjacency& graph, int initial);

template <typename Derived>
BsccDecomposition bsccs(const Eigen::MatrixBase<Derived>& P, int initial) {
    return bsccs(support_graph(P), initial);
}

/// End component of a product LMDP: product-state indices plus the retained actions.
struct Mec {
    std::vector<int> states;                 // sorted
    std::map<int, std::vector<int>> actions; // state -> retained action indices
};

/// Maximal end components by iterated SCC refinement.
std::vector<Mec> mec_decomposition(const ProductLmdp& p);

struct Amec {
    Mec mec;
    std::vector<int> pairs;  // witnessing Rabin pair indices
};
using AmecList = std::vector<Amec>;

/// MECs that avoid Fin_i and meet Inf_i for some pair i, ordered by smallest state.
AmecList accepting_mecs(const std::vector<Mec>& mecs, const ProductLmdp& p);

/// Rabin acceptance of a closed set of product states.
bool bscc_accepting(const std::vector<ProductState>& bscc, const Dra& d);

}  // namespace ssltl
