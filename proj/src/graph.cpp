#include "ssltl/graph.hpp"

#include "ssltl/product.hpp"

#include <algorithm>
#include <set>

namespace ssltl {

std::vector<std::vector<int>> strongly_connected_components(const Adjacency& graph) {
    const int n = static_cast<int>(graph.size());
    std::vector<int> number(n, -1), low(n, 0);
    std::vector<bool> on_stack(n, false);
    std::vector<int> stack;
    std::vector<std::vector<int>> out;
    int counter = 0;

    struct Frame {
        int v;
        std::size_t next;
    };
    std::vector<Frame> call;
    for (int root = 0; root < n; ++root) {
        if (number[root] >= 0) continue;
        call.push_back({root, 0});
        number[root] = low[root] = counter++;
        stack.push_back(root);
        on_stack[root] = true;
        while (!call.empty()) {
            Frame& f = call.back();
            const int v = f.v;
            if (f.next < graph[v].size()) {
                const int w = graph[v][f.next++];
                if (number[w] < 0) {
                    number[w] = low[w] = counter++;
                    stack.push_back(w);
                    on_stack[w] = true;
                    call.push_back({w, 0});
                } else if (on_stack[w]) {
                    low[v] = std::min(low[v], number[w]);
                }
                continue;
            }
            if (low[v] == number[v]) {
                std::vector<int> comp;
                int w;
                do {
                    w = stack.back();
                    stack.pop_back();
                    on_stack[w] = false;
                    comp.push_back(w);
                } while (w != v);
                std::sort(comp.begin(), comp.end());
                out.push_back(std::move(comp));
            }
            call.pop_back();
            if (!call.empty()) low[call.back().v] = std::min(low[call.back().v], low[v]);
        }
    }
    return out;
}

BsccDecomposition bsccs(const Adjacency& graph, int initial) {
    const int n = static_cast<int>(graph.size());
    const auto sccs = strongly_connected_components(graph);
    std::vector<int> comp(n, -1);
    for (std::size_t c = 0; c < sccs.size(); ++c)
        for (int v : sccs[c]) comp[v] = static_cast<int>(c);

    BsccDecomposition dec;
    std::vector<bool> recurrent(n, false);
    for (std::size_t c = 0; c < sccs.size(); ++c) {
        bool closed = true;
        for (int v : sccs[c])
            for (int w : graph[v])
                if (comp[w] != static_cast<int>(c)) closed = false;
        if (!closed) continue;
        for (int v : sccs[c]) recurrent[v] = true;
        dec.bsccs.push_back(sccs[c]);
    }
    std::sort(dec.bsccs.begin(), dec.bsccs.end(),
              [](const auto& a, const auto& b) { return a.front() < b.front(); });
    for (int v = 0; v < n; ++v)
        if (!recurrent[v]) dec.transient.push_back(v);

    if (initial >= 0 && initial < n) {
        std::vector<bool> seen(n, false);
        std::vector<int> todo{initial};
        seen[initial] = true;
        while (!todo.empty()) {
            int v = todo.back();
            todo.pop_back();
            for (int w : graph[v])
                if (!seen[w]) {
                    seen[w] = true;
                    todo.push_back(w);
                }
        }
        for (std::size_t k = 0; k < dec.bsccs.size(); ++k)
            if (seen[dec.bsccs[k].front()]) dec.reachable_bsccs.push_back(static_cast<int>(k));
    }
    return dec;
}

std::vector<Mec> mec_decomposition(const ProductLmdp& p) {
    const int n = static_cast<int>(p.size());
    std::vector<std::vector<int>> acts(n);
    std::vector<bool> alive(n, true);
    for (int i = 0; i < n; ++i) acts[i] = p.enabled(i);

    for (bool changed = true; changed;) {
        changed = false;
        Adjacency g(n);
        for (int i = 0; i < n; ++i) {
            if (!alive[i]) continue;
            std::set<int> succ;
            for (int a : acts[i])
                for (const auto& t : p.rows[i][a]) succ.insert(t.to);
            g[i].assign(succ.begin(), succ.end());
        }
        const auto sccs = strongly_connected_components(g);
        std::vector<int> comp(n, -1);
        for (std::size_t c = 0; c < sccs.size(); ++c)
            for (int v : sccs[c]) comp[v] = static_cast<int>(c);
        for (int i = 0; i < n; ++i) {
            if (!alive[i]) continue;
            auto& a = acts[i];
            auto leaves = [&](int act) {
                for (const auto& t : p.rows[i][act])
                    if (!alive[t.to] || comp[t.to] != comp[i]) return true;
                return false;
            };
            const auto before = a.size();
            a.erase(std::remove_if(a.begin(), a.end(), leaves), a.end());
            if (a.size() != before) changed = true;
            if (a.empty()) {
                alive[i] = false;
                changed = true;
            }
        }
        if (changed) continue;

        // Fixpoint: each SCC of surviving states is a MEC.
        std::vector<Mec> out;
        for (const auto& scc : sccs) {
            if (!alive[scc.front()]) continue;
            Mec mec;
            mec.states = scc;
            for (int v : scc) mec.actions[v] = acts[v];
            out.push_back(std::move(mec));
        }
        std::sort(out.begin(), out.end(), [](const Mec& a, const Mec& b) { return a.states.front() < b.states.front(); });
        return out;
    }
    return {};
}

AmecList accepting_mecs(const std::vector<Mec>& mecs, const ProductLmdp& p) {
    const Dra& d = *p.dra;
    AmecList out;
    for (const auto& mec : mecs) {
        Amec entry{mec, {}};
        for (std::size_t i = 0; i < d.pairs.size(); ++i) {
            bool hits_fin = false, hits_inf = false;
            for (int v : mec.states) {
                hits_fin = hits_fin || d.in_fin(i, p.states[v].q);
                hits_inf = hits_inf || d.in_inf(i, p.states[v].q);
            }
            if (!hits_fin && hits_inf) entry.pairs.push_back(static_cast<int>(i));
        }
        if (!entry.pairs.empty()) out.push_back(std::move(entry));
    }
    std::sort(out.begin(), out.end(),
              [](const Amec& a, const Amec& b) { return a.mec.states.front() < b.mec.states.front(); });
    return out;
}

bool bscc_accepting(const std::vector<ProductState>& bscc, const Dra& d) {
    for (std::size_t i = 0; i < d.pairs.size(); ++i) {
        bool hits_fin = false, hits_inf = false;
        for (const auto& ps : bscc) {
            hits_fin = hits_fin || d.in_fin(i, ps.q);
            hits_inf = hits_inf || d.in_inf(i, ps.q);
        }
        if (!hits_fin && hits_inf) return true;
    }
    return false;
}

}  // namespace ssltl
