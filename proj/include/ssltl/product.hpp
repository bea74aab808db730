#pragma once

#include "ssltl/hoa.hpp"
#include "ssltl/model.hpp"

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include <compare>
#include <filesystem>
#include <map>
#include <utility>
#include <vector>

namespace ssltl {

struct ProductState {
    int s;
    int q;
    auto operator<=>(const ProductState&) const = default;
};

/**
 * Reachable fragment of the synchronized product of an LMDP with a DRA.
 *
 * States are sorted by (s, q). The product keeps pointers to the model and
 * automaton it was built from; both must outlive it.
 */
struct ProductLmdp {
    const Lmdp* model = nullptr;
    const Dra* dra = nullptr;
    std::vector<ProductState> states;
    std::map<ProductState, int> index;
    int initial = 0;
    std::vector<std::vector<TransitionRow>> rows;  // [state][action], empty iff not enabled
    std::vector<std::pair<int, int>> edges;        // support graph, sorted

    std::size_t size() const { return states.size(); }
    const std::vector<int>& enabled(int i) const { return model->enabled[states[i].s]; }
    int find(ProductState ps) const {
        auto it = index.find(ps);
        return it == index.end() ? -1 : it->second;
    }
};

/// Deterministic product policy: (s, q) -> action index.
struct Policy {
    std::map<ProductState, int> action;

    friend bool operator==(const Policy&, const Policy&) = default;
};

/// Chain induced by a policy on the product, restricted to states it reaches.
struct ProductLmc {
    std::vector<ProductState> states;
    Eigen::MatrixXd trans;
    int initial = 0;
};

/// DRA letter of model state `s` (propositions are matched by name).
Letter letter_of(const Lmdp& m, const Dra& d, int s);

ProductLmdp build_product(const Lmdp& m, const Dra& d);

/// Throws ModelError when the policy misses a reachable state or picks a disabled action.
ProductLmc induce_chain(const ProductLmdp& p, const Policy& pi);

/// Class [s] of every product state, for the projection partition.
std::vector<int> projection_classes(const ProductLmc& c);

/// Aggregates a product chain over [s] = {(s, q)}. Throws ChainError if the
/// partition is not lumpable on `c` (rows of a class disagree beyond 1e-12).
Lmc aggregate(const ProductLmc& c, const Lmdp& m);

nlohmann::json policy_to_json(const Policy& pi, const Lmdp& m, const Dra& d);
Policy policy_from_json(const nlohmann::json& j, const Lmdp& m, const Dra& d);
Policy load_policy(const std::filesystem::path& path, const Lmdp& m, const Dra& d);
void save_policy(const Policy& pi, const Lmdp& m, const Dra& d, const std::filesystem::path& path);

/// Automaton node identifier used in policy files: "q<index>".
std::string node_id(int q);

}  // namespace ssltl
