#include "ssltl/product.hpp"

#include "ssltl/chain.hpp"

#include <algorithm>
#include <deque>
#include <fstream>
#include <set>
#include <sstream>

namespace ssltl {

std::string node_id(int q) { return "q" + std::to_string(q); }

Letter letter_of(const Lmdp& m, const Dra& d, int s) {
    Letter l = 0;
    for (std::size_t i = 0; i < d.ap.size(); ++i) {
        const int p = m.ap_index(d.ap[i]);
        if (p >= 0 && m.has_label(s, p)) l |= Letter{1} << i;
    }
    return l;
}

ProductLmdp build_product(const Lmdp& m, const Dra& d) {
    ProductLmdp p;
    p.model = &m;
    p.dra = &d;
    std::vector<Letter> letters(m.num_states());
    for (std::size_t s = 0; s < m.num_states(); ++s) letters[s] = letter_of(m, d, static_cast<int>(s));

    // Reachability from (s0, delta(q0, L(s0))).
    const ProductState init{m.initial, d.step(d.initial, letters[m.initial])};
    std::set<ProductState> seen{init};
    std::deque<ProductState> todo{init};
    while (!todo.empty()) {
        const ProductState ps = todo.front();
        todo.pop_front();
        for (int a : m.enabled[ps.s])
            for (const auto& t : m.rows[ps.s][a]) {
                if (t.p <= 0.0) continue;
                ProductState next{t.to, d.step(ps.q, letters[t.to])};
                if (seen.insert(next).second) todo.push_back(next);
            }
    }
    p.states.assign(seen.begin(), seen.end());
    for (std::size_t i = 0; i < p.states.size(); ++i) p.index[p.states[i]] = static_cast<int>(i);
    p.initial = p.index.at(init);

    std::set<std::pair<int, int>> edges;
    p.rows.assign(p.size(), std::vector<TransitionRow>(m.num_actions()));
    for (std::size_t i = 0; i < p.size(); ++i) {
        const auto [s, q] = p.states[i];
        for (int a : m.enabled[s]) {
            auto& row = p.rows[i][a];
            for (const auto& t : m.rows[s][a]) {
                if (t.p <= 0.0) continue;
                const int j = p.index.at({t.to, d.step(q, letters[t.to])});
                row.push_back({j, t.p});
                edges.insert({static_cast<int>(i), j});
            }
            std::sort(row.begin(), row.end(), [](const Transition& x, const Transition& y) { return x.to < y.to; });
        }
    }
    p.edges.assign(edges.begin(), edges.end());
    return p;
}

ProductLmc induce_chain(const ProductLmdp& p, const Policy& pi) {
    const Lmdp& m = *p.model;
    auto action_at = [&](int i) {
        auto it = pi.action.find(p.states[i]);
        if (it == pi.action.end())
            throw ModelError("policy has no entry for (" + m.states[p.states[i].s] + ", " + node_id(p.states[i].q) + ")");
        const int a = it->second;
        if (a < 0 || a >= static_cast<int>(m.num_actions()) || p.rows[i][a].empty())
            throw ModelError("policy picks a disabled action at (" + m.states[p.states[i].s] + ", " +
                             node_id(p.states[i].q) + ")");
        return a;
    };

    std::vector<int> local(p.size(), -1);
    std::vector<int> order{p.initial};
    local[p.initial] = 0;
    for (std::size_t k = 0; k < order.size(); ++k) {
        const int i = order[k];
        for (const auto& t : p.rows[i][action_at(i)])
            if (local[t.to] < 0) {
                local[t.to] = static_cast<int>(order.size());
                order.push_back(t.to);
            }
    }
    std::sort(order.begin(), order.end());
    for (std::size_t k = 0; k < order.size(); ++k) local[order[k]] = static_cast<int>(k);

    ProductLmc c;
    const auto n = static_cast<Eigen::Index>(order.size());
    c.trans = Eigen::MatrixXd::Zero(n, n);
    for (Eigen::Index k = 0; k < n; ++k) {
        const int i = order[k];
        c.states.push_back(p.states[i]);
        for (const auto& t : p.rows[i][action_at(i)]) c.trans(k, local[t.to]) += t.p;
    }
    c.initial = local[p.initial];
    return c;
}

std::vector<int> projection_classes(const ProductLmc& c) {
    std::vector<int> labels;
    labels.reserve(c.states.size());
    for (const auto& ps : c.states) labels.push_back(ps.s);
    return labels;
}

Lmc aggregate(const ProductLmc& c, const Lmdp& m) {
    const auto labels = projection_classes(c);
    const Partition part = Partition::from_labels(labels);
    Lmc out;
    out.trans = aggregate_kernel(c.trans, part);
    out.ap = m.ap;
    for (const auto& cls : part.classes) {
        const int s = labels[cls.front()];
        out.states.push_back(m.states[s]);
        out.labels.push_back(m.labels[s]);
    }
    out.initial = part.class_of[c.initial];
    return out;
}

nlohmann::json policy_to_json(const Policy& pi, const Lmdp& m, const Dra&) {
    nlohmann::json entries = nlohmann::json::array();
    for (const auto& [ps, a] : pi.action)
        entries.push_back({{"s", m.states[ps.s]}, {"q", node_id(ps.q)}, {"action", m.actions[a]}});
    return {{"policy", entries}};
}

Policy policy_from_json(const nlohmann::json& j, const Lmdp& m, const Dra& d) {
    if (!j.is_object() || !j.contains("policy") || !j.at("policy").is_array())
        throw ModelError("policy: expected {\"policy\": [...]}");
    Policy pi;
    for (const auto& e : j.at("policy")) {
        if (!e.is_object() || !e.contains("s") || !e.contains("q") || !e.contains("action"))
            throw ModelError("policy entry needs 's', 'q' and 'action'");
        const auto s_id = e.at("s").get<std::string>();
        const auto q_id = e.at("q").get<std::string>();
        const auto a_id = e.at("action").get<std::string>();
        const int s = m.state_index(s_id);
        if (s < 0) throw ModelError("policy: unknown state '" + s_id + "'");
        int q = -1;
        for (std::size_t k = 0; k < d.num_nodes(); ++k)
            if (node_id(static_cast<int>(k)) == q_id) q = static_cast<int>(k);
        if (q < 0) throw ModelError("policy: unknown automaton node '" + q_id + "'");
        const int a = m.action_index(a_id);
        if (a < 0) throw ModelError("policy: unknown action '" + a_id + "'");
        if (!pi.action.emplace(ProductState{s, q}, a).second)
            throw ModelError("policy: duplicate entry for (" + s_id + ", " + q_id + ")");
    }
    return pi;
}

Policy load_policy(const std::filesystem::path& path, const Lmdp& m, const Dra& d) {
    std::ifstream in(path);
    if (!in) throw ModelError("cannot open " + path.string());
    try {
        return policy_from_json(nlohmann::json::parse(in), m, d);
    } catch (const nlohmann::json::exception& e) {
        throw ModelError(path.string() + ": " + e.what());
    }
}

void save_policy(const Policy& pi, const Lmdp& m, const Dra& d, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ModelError("cannot write " + path.string());
    out << policy_to_json(pi, m, d).dump(1) << '\n';
}

}  // namespace ssltl
