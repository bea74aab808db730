#pragma once

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace ssltl {

class HoaError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

/// Letter over the automaton alphabet: bit i set iff ap[i] holds.
using Letter = std::uint32_t;

/// Acceptance pair: accept iff `fin` is visited finitely often and `inf` infinitely often.
struct RabinPair {
    std::vector<int> fin;  // sorted node indices
    std::vector<int> inf;
};

/// Deterministic, complete Rabin automaton with state-based acceptance.
struct Dra {
    std::vector<std::string> nodes;
    int initial = 0;
    std::vector<std::string> ap;
    std::vector<int> delta;  // delta[q * num_letters() + letter]
    std::vector<RabinPair> pairs;

    std::size_t num_nodes() const { return nodes.size(); }
    Letter num_letters() const { return Letter{1} << ap.size(); }
    int step(int q, Letter letter) const { return delta[static_cast<std::size_t>(q) * num_letters() + letter]; }

    bool in_fin(std::size_t pair, int q) const;
    bool in_inf(std::size_t pair, int q) const;
    /// Union over pairs of the `inf` sets.
    std::vector<int> inf_union() const;
};

/// Parses HOA v1 with state-based Rabin acceptance (any number of pairs).
Dra parse_hoa(std::string_view text);
Dra load_hoa(const std::filesystem::path& path);

/// Serializes with one explicit edge per letter; `parse_hoa(to_hoa(d))` is isomorphic to `d`.
std::string to_hoa(const Dra& d);

/// Checks determinism/completeness and pair well-formedness; throws HoaError.
void validate(const Dra& d);

}  // namespace ssltl
