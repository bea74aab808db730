#include "ssltl/model.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>
#include <set>
#include <sstream>

namespace ssltl {

namespace {

int find_index(const std::vector<std::string>& names, std::string_view id) {
    auto it = std::find(names.begin(), names.end(), id);
    return it == names.end() ? -1 : static_cast<int>(it - names.begin());
}

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ModelError("cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

nlohmann::json parse_json_file(const std::filesystem::path& path) {
    try {
        return nlohmann::json::parse(read_file(path));
    } catch (const nlohmann::json::parse_error& e) {
        throw ModelError(path.string() + ": " + e.what());
    }
}

template <typename T>
T field(const nlohmann::json& j, const char* key, const std::string& where) {
    if (!j.is_object() || !j.contains(key)) throw ModelError(where + ": missing field '" + key + "'");
    try {
        return j.at(key).get<T>();
    } catch (const nlohmann::json::exception&) {
        throw ModelError(where + ": field '" + key + "' has the wrong type");
    }
}

// Bounded draw without relying on implementation-defined distributions, so
// that generated grids are identical across standard libraries.
std::uint64_t bounded(std::mt19937_64& rng, std::uint64_t n) {
    const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() - std::numeric_limits<std::uint64_t>::max() % n;
    std::uint64_t v;
    do {
        v = rng();
    } while (v >= limit);
    return v % n;
}

}  // namespace

bool Lmdp::has_label(int s, int prop) const {
    const auto& l = labels[s];
    return std::binary_search(l.begin(), l.end(), prop);
}

int Lmdp::state_index(std::string_view id) const { return find_index(states, id); }
int Lmdp::action_index(std::string_view id) const { return find_index(actions, id); }
int Lmdp::ap_index(std::string_view name) const { return find_index(ap, name); }

double Lmdp::expected_reward(int s, int a) const {
    double r = 0.0;
    for (const auto& t : rows[s][a]) {
        auto it = reward.find({s, a, t.to});
        if (it != reward.end()) r += t.p * it->second;
    }
    return r;
}

// ---------------------------------------------------------------------------
// LabelFormula

LabelFormula LabelFormula::truth() { return LabelFormula(std::make_shared<Node>(Node{Kind::True, {}, {}, {}})); }

LabelFormula LabelFormula::prop(std::string name) {
    return LabelFormula(std::make_shared<Node>(Node{Kind::Prop, std::move(name), {}, {}}));
}

LabelFormula LabelFormula::negate(LabelFormula f) {
    return LabelFormula(std::make_shared<Node>(Node{Kind::Not, {}, std::move(f.node_), {}}));
}

LabelFormula LabelFormula::conj(LabelFormula lhs, LabelFormula rhs) {
    return LabelFormula(std::make_shared<Node>(Node{Kind::And, {}, std::move(lhs.node_), std::move(rhs.node_)}));
}

LabelFormula LabelFormula::disj(LabelFormula lhs, LabelFormula rhs) {
    return negate(conj(negate(std::move(lhs)), negate(std::move(rhs))));
}

namespace {

class FormulaParser {
  public:
    explicit FormulaParser(std::string_view text) : text_(text) {}

    LabelFormula parse() {
        LabelFormula f = parse_or();
        skip_ws();
        if (pos_ != text_.size()) fail("unexpected '" + std::string(1, text_[pos_]) + "'");
        return f;
    }

  private:
    void skip_ws() {
        while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
    }

    bool accept(char c) {
        skip_ws();
        if (pos_ < text_.size() && text_[pos_] == c) {
            ++pos_;
            return true;
        }
        return false;
    }

    [[noreturn]] void fail(const std::string& what) const {
        throw ModelError("formula '" + std::string(text_) + "' at " + std::to_string(pos_) + ": " + what);
    }

    LabelFormula parse_or() {
        LabelFormula f = parse_and();
        while (accept('|')) f = LabelFormula::disj(std::move(f), parse_and());
        return f;
    }

    LabelFormula parse_and() {
        LabelFormula f = parse_unary();
        while (accept('&')) f = LabelFormula::conj(std::move(f), parse_unary());
        return f;
    }

    LabelFormula parse_unary() {
        if (accept('!')) return LabelFormula::negate(parse_unary());
        if (accept('(')) {
            LabelFormula f = parse_or();
            if (!accept(')')) fail("expected ')'");
            return f;
        }
        skip_ws();
        std::size_t start = pos_;
        while (pos_ < text_.size() &&
               (std::isalnum(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '_' || text_[pos_] == '.'))
            ++pos_;
        if (start == pos_) fail("expected a proposition");
        std::string ident(text_.substr(start, pos_ - start));
        if (ident == "true") return LabelFormula::truth();
        if (ident == "false") return LabelFormula::negate(LabelFormula::truth());
        return LabelFormula::prop(std::move(ident));
    }

    std::string_view text_;
    std::size_t pos_ = 0;
};

void collect_props(const auto& node, std::set<std::string>& out) {
    if (!node) return;
    if (node->kind == LabelFormula::Kind::Prop) out.insert(node->name);
    collect_props(node->lhs, out);
    collect_props(node->rhs, out);
}

}  // namespace

LabelFormula LabelFormula::parse(std::string_view text) { return FormulaParser(text).parse(); }

std::vector<std::string> LabelFormula::propositions() const {
    std::set<std::string> out;
    collect_props(node_, out);
    return {out.begin(), out.end()};
}

std::string LabelFormula::to_string() const {
    struct Printer {
        static std::string print(const Node& n) {
            switch (n.kind) {
            case Kind::True: return "true";
            case Kind::Prop: return n.name;
            case Kind::Not: return "!" + print(*n.lhs);
            case Kind::And: return "(" + print(*n.lhs) + " & " + print(*n.rhs) + ")";
            }
            return {};
        }
    };
    return Printer::print(*node_);
}

// ---------------------------------------------------------------------------
// Validation and (de)serialization

void validate(const Lmdp& m) {
    const int n = static_cast<int>(m.num_states());
    if (n == 0) throw ModelError("model has no states");
    if (m.initial < 0 || m.initial >= n) throw ModelError("initial state out of range");
    if (m.enabled.size() != m.num_states() || m.rows.size() != m.num_states() || m.labels.size() != m.num_states())
        throw ModelError("per-state tables have inconsistent sizes");
    for (int s = 0; s < n; ++s) {
        if (m.enabled[s].empty()) throw ModelError("state '" + m.states[s] + "' has no enabled action");
        if (m.rows[s].size() != m.num_actions()) throw ModelError("state '" + m.states[s] + "' has a malformed row table");
        for (int a = 0; a < static_cast<int>(m.num_actions()); ++a) {
            const auto& row = m.rows[s][a];
            const bool enabled = std::binary_search(m.enabled[s].begin(), m.enabled[s].end(), a);
            if (enabled == row.empty())
                throw ModelError("(" + m.states[s] + ", " + m.actions[a] + "): enabled set and rows disagree");
            if (!enabled) continue;
            double sum = 0.0;
            for (const auto& t : row) {
                if (t.to < 0 || t.to >= n) throw ModelError("(" + m.states[s] + ", " + m.actions[a] + "): target out of range");
                if (!(t.p >= 0.0 && t.p <= 1.0))
                    throw ModelError("(" + m.states[s] + ", " + m.actions[a] + "): probability outside [0,1]");
                sum += t.p;
            }
            if (std::abs(sum - 1.0) > kProbabilityTolerance)
                throw ModelError("(" + m.states[s] + ", " + m.actions[a] + "): row sums to " + std::to_string(sum));
        }
        for (int p : m.labels[s])
            if (p < 0 || p >= static_cast<int>(m.ap.size()))
                throw ModelError("state '" + m.states[s] + "' carries an undeclared proposition");
    }
}

Lmdp parse_model(const nlohmann::json& j) {
    Lmdp m;
    if (!j.is_object()) throw ModelError("model: expected a JSON object");
    const auto states = field<nlohmann::json>(j, "states", "model");
    if (!states.is_array()) throw ModelError("model: 'states' must be an array");
    std::set<std::string> ap_set;
    std::vector<std::vector<std::string>> raw_labels;
    for (const auto& st : states) {
        auto id = field<std::string>(st, "id", "state");
        if (m.state_index(id) >= 0) throw ModelError("duplicate state id '" + id + "'");
        m.states.push_back(id);
        std::vector<std::string> labels;
        if (st.contains("labels")) labels = field<std::vector<std::string>>(st, "labels", "state '" + id + "'");
        for (const auto& l : labels) ap_set.insert(l);
        raw_labels.push_back(std::move(labels));
    }
    m.actions = field<std::vector<std::string>>(j, "actions", "model");
    for (std::size_t i = 0; i < m.actions.size(); ++i)
        if (m.action_index(m.actions[i]) != static_cast<int>(i)) throw ModelError("duplicate action '" + m.actions[i] + "'");
    if (j.contains("ap")) {
        m.ap = field<std::vector<std::string>>(j, "ap", "model");
        for (const auto& p : ap_set)
            if (m.ap_index(p) < 0) throw ModelError("label '" + p + "' is not declared in 'ap'");
    } else {
        m.ap.assign(ap_set.begin(), ap_set.end());
    }
    for (const auto& labels : raw_labels) {
        std::vector<int> idx;
        for (const auto& l : labels) idx.push_back(m.ap_index(l));
        std::sort(idx.begin(), idx.end());
        idx.erase(std::unique(idx.begin(), idx.end()), idx.end());
        m.labels.push_back(std::move(idx));
    }
    const auto init = field<std::string>(j, "initial", "model");
    m.initial = m.state_index(init);
    if (m.initial < 0) throw ModelError("initial state '" + init + "' is not a state");

    const std::size_t n = m.num_states(), na = m.num_actions();
    m.rows.assign(n, std::vector<TransitionRow>(na));
    m.enabled.assign(n, {});
    auto resolve = [&](const nlohmann::json& t, const char* what) {
        auto from = field<std::string>(t, "from", what);
        auto action = field<std::string>(t, "action", what);
        auto to = field<std::string>(t, "to", what);
        int s = m.state_index(from), a = m.action_index(action), s2 = m.state_index(to);
        if (s < 0) throw ModelError(std::string(what) + ": unknown state '" + from + "'");
        if (a < 0) throw ModelError(std::string(what) + ": unknown action '" + action + "'");
        if (s2 < 0) throw ModelError(std::string(what) + ": unknown state '" + to + "'");
        return std::array<int, 3>{s, a, s2};
    };
    for (const auto& t : field<nlohmann::json>(j, "transitions", "model")) {
        auto [s, a, s2] = resolve(t, "transition");
        double p = field<double>(t, "p", "transition");
        auto& row = m.rows[s][a];
        auto it = std::find_if(row.begin(), row.end(), [&](const Transition& x) { return x.to == s2; });
        if (it != row.end())
            throw ModelError("duplicate transition (" + m.states[s] + ", " + m.actions[a] + ", " + m.states[s2] + ")");
        row.push_back({s2, p});
    }
    if (j.contains("rewards")) {
        for (const auto& r : j.at("rewards")) {
            auto key = resolve(r, "reward");
            m.reward[key] = field<double>(r, "r", "reward");
        }
    }
    for (std::size_t s = 0; s < n; ++s) {
        for (std::size_t a = 0; a < na; ++a) {
            auto& row = m.rows[s][a];
            std::sort(row.begin(), row.end(), [](const Transition& x, const Transition& y) { return x.to < y.to; });
            if (!row.empty()) m.enabled[s].push_back(static_cast<int>(a));
        }
    }
    validate(m);
    return m;
}

Lmdp load_model(const std::filesystem::path& path) { return parse_model(parse_json_file(path)); }

nlohmann::json model_to_json(const Lmdp& m) {
    using nlohmann::json;
    json states = json::array();
    for (std::size_t s = 0; s < m.num_states(); ++s) {
        json labels = json::array();
        for (int p : m.labels[s]) labels.push_back(m.ap[p]);
        states.push_back({{"id", m.states[s]}, {"labels", labels}});
    }
    json trans = json::array();
    json rewards = json::array();
    for (std::size_t s = 0; s < m.num_states(); ++s)
        for (int a : m.enabled[s])
            for (const auto& t : m.rows[s][a])
                trans.push_back({{"from", m.states[s]}, {"action", m.actions[a]}, {"to", m.states[t.to]}, {"p", t.p}});
    for (const auto& [key, r] : m.reward) {
        if (r == 0.0) continue;
        rewards.push_back(
            {{"from", m.states[key[0]]}, {"action", m.actions[key[1]]}, {"to", m.states[key[2]]}, {"r", r}});
    }
    return json{{"states", states},     {"actions", m.actions},  {"ap", m.ap},
                {"initial", m.states[m.initial]}, {"transitions", trans}, {"rewards", rewards}};
}

void save_model(const Lmdp& m, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ModelError("cannot write " + path.string());
    out << model_to_json(m).dump(1) << '\n';
}

std::vector<int> labeled_subset(const Lmdp& m, const LabelFormula& psi) {
    for (const auto& p : psi.propositions())
        if (m.ap_index(p) < 0) throw ModelError("formula uses unknown proposition '" + p + "'");
    std::vector<int> out;
    for (int s = 0; s < static_cast<int>(m.num_states()); ++s) {
        bool holds = psi.eval([&](std::string_view p) { return m.has_label(s, m.ap_index(p)); });
        if (holds) out.push_back(s);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Gridworld generator

Lmdp generate_grid(const GridSpec& g) {
    if (g.width < 1 || g.height < 1) throw ModelError("grid dimensions must be positive");
    const int w = g.width, h = g.height, n = w * h;
    std::mt19937_64 rng(g.seed);

    Lmdp m;
    for (int r = 0; r < h; ++r)
        for (int c = 0; c < w; ++c) m.states.push_back("s" + std::to_string(r) + "_" + std::to_string(c));
    m.actions = {"left", "down", "right", "up"};
    constexpr std::array<int, 4> dr{0, 1, 0, -1};
    constexpr std::array<int, 4> dc{-1, 0, 1, 0};
    // Lateral directions of each action for slip dynamics.
    constexpr std::array<std::array<int, 2>, 4> lateral{{{1, 3}, {0, 2}, {1, 3}, {0, 2}}};

    auto move = [&](int s, int dir) {
        int r = s / w + dr[dir], c = s % w + dc[dir];
        if (r < 0 || r >= h || c < 0 || c >= w) return s;
        return r * w + c;
    };

    m.rows.assign(n, std::vector<TransitionRow>(4));
    m.enabled.assign(n, {0, 1, 2, 3});
    for (int s = 0; s < n; ++s) {
        for (int a = 0; a < 4; ++a) {
            std::map<int, double> dist;
            if (g.dynamics == Dynamics::Deterministic) {
                dist[move(s, a)] += 1.0;
            } else {
                const double side = (1.0 - g.slip_main) / 2.0;
                dist[move(s, a)] += g.slip_main;
                for (int l : lateral[a]) dist[move(s, l)] += side;
            }
            for (const auto& [to, p] : dist) m.rows[s][a].push_back({to, p});
        }
    }

    m.labels.assign(n, {});
    if (g.label_mode == LabelMode::QuartersRandom) {
        m.ap = {"a", "b", "c", "d"};
        std::vector<int> order(n);
        std::iota(order.begin(), order.end(), 0);
        for (int i = n - 1; i > 0; --i) std::swap(order[i], order[bounded(rng, static_cast<std::uint64_t>(i) + 1)]);
        // Quarter k takes positions [k*n/4, (k+1)*n/4) of the shuffled order.
        for (int k = 0; k < 4; ++k)
            for (int i = k * n / 4; i < (k + 1) * n / 4; ++i) m.labels[order[i]].push_back(k);
    } else {
        std::set<std::string> names(g.explicit_ap.begin(), g.explicit_ap.end());
        m.ap = g.explicit_ap;
        for (const auto& [cell, props] : g.explicit_labels)
            for (const auto& p : props)
                if (!names.count(p)) {
                    m.ap.push_back(p);
                    names.insert(p);
                }
        for (const auto& [cell, props] : g.explicit_labels) {
            if (cell < 0 || cell >= n) throw ModelError("explicit label for cell outside the grid");
            for (const auto& p : props) m.labels[cell].push_back(m.ap_index(p));
            std::sort(m.labels[cell].begin(), m.labels[cell].end());
            m.labels[cell].erase(std::unique(m.labels[cell].begin(), m.labels[cell].end()), m.labels[cell].end());
        }
    }

    if (g.reward_mode == RewardMode::Bernoulli01) {
        for (int s = 0; s < n; ++s)
            for (int a = 0; a < 4; ++a) {
                const double r = static_cast<double>(rng() >> 63);
                for (const auto& t : m.rows[s][a]) m.reward[{s, a, t.to}] = r;
            }
    }
    m.initial = 0;
    validate(m);
    return m;
}

// ---------------------------------------------------------------------------
// Spec files

SsLtlSpec parse_spec(const nlohmann::json& j, const std::filesystem::path& base_dir) {
    SsLtlSpec spec;
    auto dra = field<std::string>(j, "dra", "spec");
    spec.dra_source = std::filesystem::path(dra);
    if (spec.dra_source.is_relative() && !base_dir.empty()) spec.dra_source = base_dir / spec.dra_source;
    if (j.contains("ss")) {
        const auto& ss = j.at("ss");
        if (!ss.is_array()) throw ModelError("spec: 'ss' must be an array");
        for (std::size_t i = 0; i < ss.size(); ++i) {
            const std::string where = "ss[" + std::to_string(i) + "]";
            auto text = field<std::string>(ss[i], "formula", where);
            double lo = field<double>(ss[i], "lower", where);
            double hi = field<double>(ss[i], "upper", where);
            if (!(lo >= 0.0 && hi <= 1.0)) throw ModelError(where + ": bounds must lie in [0,1]");
            if (lo > hi) throw ModelError(where + ": lower bound exceeds upper bound");
            spec.ss.push_back({text, LabelFormula::parse(text), lo, hi});
        }
    }
    return spec;
}

SsLtlSpec load_spec(const std::filesystem::path& path) {
    return parse_spec(parse_json_file(path), path.parent_path());
}

void check_spec_against(const SsLtlSpec& spec, const Lmdp& m) {
    for (const auto& iv : spec.ss)
        for (const auto& p : iv.formula.propositions())
            if (m.ap_index(p) < 0) throw ModelError("ss formula '" + iv.text + "' uses unknown proposition '" + p + "'");
}

}  // namespace ssltl
