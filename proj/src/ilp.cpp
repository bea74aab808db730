#include "ssltl/ilp.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <map>
#include <sstream>
#include <thread>

#include <fcntl.h>
#include <signal.h>
#include <sys/wait.h>
#include <unistd.h>

namespace ssltl {

int IlpModel::add_variable(std::string name, VarKind kind, double lower, double upper) {
    const int idx = static_cast<int>(vars.size());
    if (!by_name_.emplace(name, idx).second) throw std::logic_error("duplicate variable " + name);
    vars.push_back({std::move(name), kind, lower, upper});
    return idx;
}

int IlpModel::find(std::string_view name) const {
    auto it = by_name_.find(std::string(name));
    return it == by_name_.end() ? -1 : it->second;
}

std::size_t IlpModel::count_rows(std::string_view family) const {
    const std::string prefix = "c_" + std::string(family) + "_";
    return static_cast<std::size_t>(std::count_if(rows.begin(), rows.end(), [&](const Constraint& c) {
        return c.name.compare(0, prefix.size(), prefix) == 0 &&
               c.name.find('_', prefix.size()) == std::string::npos;
    }));
}

namespace {

std::string num(double v) {
    if (v == 0.0) return "0";
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

std::string idx(int i) { return std::to_string(i); }

// Accumulates terms, merging repeated variables and dropping zeros.
class RowBuilder {
  public:
    RowBuilder& add(int var, double coef) {
        if (var >= 0) acc_[var] += coef;
        return *this;
    }

    std::vector<LinearTerm> terms() const {
        std::vector<LinearTerm> out;
        for (const auto& [v, c] : acc_)
            if (c != 0.0) out.push_back({v, c});
        return out;
    }

  private:
    std::map<int, double> acc_;
};

class ProgramBuilder {
  public:
    ProgramBuilder(const ProductLmdp& p, const AmecList& amecs, const SsLtlSpec& spec, const IlpConfig& cfg)
        : p_(p), m_(*p.model), d_(*p.dra), amecs_(amecs), spec_(spec), cfg_(cfg) {}

    IlpModel build() {
        declare();
        balance();
        determinism();
        flow();
        occupancy();
        steady_state();
        acceptance();
        shared_state();
        objective();
        return std::move(out_);
    }

  private:
    std::string sq(int i) const { return idx(p_.states[i].s) + "_" + idx(p_.states[i].q); }

    void row(const char* family, std::size_t& counter, const RowBuilder& b, Sense sense, double rhs) {
        out_.rows.push_back({std::string("c_") + family + "_" + std::to_string(counter++), b.terms(), sense, rhs});
    }

    void declare() {
        const int n = static_cast<int>(p_.size());
        const int na = static_cast<int>(m_.num_actions());
        out_.epsilon = cfg_.epsilon.value_or(std::min(1e-4, 1.0 / (4.0 * n)));
        out_.x.assign(n, std::vector<int>(na, -1));
        out_.pi.assign(n, std::vector<int>(na, -1));
        for (int i = 0; i < n; ++i)
            for (int a : p_.enabled(i)) out_.x[i][a] = out_.add_variable("x_" + sq(i) + "_" + idx(a), VarKind::Continuous);
        for (const auto& [i, j] : p_.edges) out_.f.push_back(out_.add_variable("f_" + sq(i) + "_" + sq(j), VarKind::Continuous));
        for (int i = 0; i < n; ++i)
            for (int a : p_.enabled(i)) out_.pi[i][a] = out_.add_variable("pi_" + sq(i) + "_" + idx(a), VarKind::Binary);
        for (int i = 0; i < n; ++i) out_.isq.push_back(out_.add_variable("isq_" + sq(i), VarKind::Binary));
        for (std::size_t s = 0; s < m_.num_states(); ++s)
            out_.is.push_back(out_.add_variable("is_" + idx(static_cast<int>(s)), VarKind::Binary));
        for (std::size_t k = 0; k < amecs_.size(); ++k)
            out_.ik.push_back(out_.add_variable("ik_" + idx(static_cast<int>(k)), VarKind::Binary));
        out_.iks.assign(amecs_.size(), {});
        for (std::size_t k = 0; k < amecs_.size(); ++k)
            for (std::size_t s = 0; s < m_.num_states(); ++s)
                out_.iks[k].push_back(
                    out_.add_variable("iks_" + idx(static_cast<int>(k)) + "_" + idx(static_cast<int>(s)), VarKind::Binary));

        in_edges_.assign(n, {});
        out_edges_.assign(n, {});
        for (std::size_t e = 0; e < p_.edges.size(); ++e) {
            out_edges_[p_.edges[e].first].push_back(static_cast<int>(e));
            in_edges_[p_.edges[e].second].push_back(static_cast<int>(e));
        }
    }

    RowBuilder occupation(int i) const {
        RowBuilder b;
        for (int a : p_.enabled(i)) b.add(out_.x[i][a], 1.0);
        return b;
    }

    // (i) balance, (ii) normalization
    void balance() {
        const int n = static_cast<int>(p_.size());
        std::vector<RowBuilder> rows(n);
        for (int i = 0; i < n; ++i)
            for (int a : p_.enabled(i)) {
                for (const auto& t : p_.rows[i][a]) rows[t.to].add(out_.x[i][a], t.p);
                rows[i].add(out_.x[i][a], -1.0);
            }
        std::size_t c = 0;
        for (int j = 0; j < n; ++j) row("i", c, rows[j], Sense::Equal, 0.0);
        RowBuilder all;
        for (int i = 0; i < n; ++i) all = merge(all, occupation(i));
        std::size_t c2 = 0;
        row("ii", c2, all, Sense::Equal, 1.0);
    }

    static RowBuilder merge(RowBuilder lhs, const RowBuilder& rhs) {
        for (const auto& t : rhs.terms()) lhs.add(t.var, t.coef);
        return lhs;
    }

    // (iii) x <= pi, (iv) one action per product state
    void determinism() {
        std::size_t c3 = 0, c4 = 0;
        for (int i = 0; i < static_cast<int>(p_.size()); ++i)
            for (int a : p_.enabled(i)) row("iii", c3, RowBuilder().add(out_.x[i][a], 1.0).add(out_.pi[i][a], -1.0), Sense::LessEqual, 0.0);
        for (int i = 0; i < static_cast<int>(p_.size()); ++i) {
            RowBuilder b;
            for (int a : p_.enabled(i)) b.add(out_.pi[i][a], 1.0);
            row("iv", c4, b, Sense::Equal, 1.0);
        }
    }

    RowBuilder inflow(int i, double coef) const {
        RowBuilder b;
        for (int e : in_edges_[i]) b.add(out_.f[e], coef);
        return b;
    }

    // (v) capacities, (vi) strict decrease, (vii) inflow flags, (viii) outflow
    void flow() {
        std::size_t c5 = 0, c6 = 0, c7 = 0, c8 = 0;
        for (std::size_t e = 0; e < p_.edges.size(); ++e) {
            const auto [i, j] = p_.edges[e];
            RowBuilder b;
            b.add(out_.f[e], 1.0);
            for (int a : p_.enabled(i))
                for (const auto& t : p_.rows[i][a])
                    if (t.to == j) b.add(out_.pi[i][a], -t.p);
            row("v", c5, b, Sense::LessEqual, 0.0);
        }
        const int n = static_cast<int>(p_.size());
        for (int i = 0; i < n; ++i) {
            if (i == p_.initial) continue;
            RowBuilder b = inflow(i, 1.0);
            for (int e : out_edges_[i]) b.add(out_.f[e], -1.0);
            b.add(out_.isq[i], -out_.epsilon);
            row("vi", c6, b, Sense::GreaterEqual, 0.0);
        }
        for (int i = 0; i < n; ++i) row("vii", c7, inflow(i, 1.0).add(out_.isq[i], -1.0), Sense::LessEqual, 0.0);
        for (int i = 0; i < n; ++i) {
            RowBuilder b = inflow(i, -1.0 / cfg_.flow_ratio);
            for (int e : out_edges_[i]) b.add(out_.f[e], 1.0);
            row("viii", c8, b, Sense::GreaterEqual, 0.0);
        }
    }

    // (ix) mass only on flagged states
    void occupancy() {
        std::size_t c = 0;
        for (int i = 0; i < static_cast<int>(p_.size()); ++i)
            row("ix", c, occupation(i).add(out_.isq[i], -1.0), Sense::LessEqual, 0.0);
    }

    // (x) steady-state intervals
    void steady_state() {
        std::size_t c = 0;
        for (const auto& iv : spec_.ss) {
            const auto subset = labeled_subset(m_, iv.formula);
            std::vector<bool> in(m_.num_states(), false);
            for (int s : subset) in[s] = true;
            RowBuilder b;
            for (int i = 0; i < static_cast<int>(p_.size()); ++i)
                if (in[p_.states[i].s]) b = merge(b, occupation(i));
            row("x", c, b, Sense::GreaterEqual, iv.lower);
            row("x", c, b, Sense::LessEqual, iv.upper);
        }
    }

    // (xi) mass on the union of Inf sets
    void acceptance() {
        const auto inf = d_.inf_union();
        RowBuilder b;
        for (int i = 0; i < static_cast<int>(p_.size()); ++i)
            if (std::binary_search(inf.begin(), inf.end(), p_.states[i].q)) b = merge(b, occupation(i));
        std::size_t c = 0;
        row("xi", c, b, Sense::GreaterEqual, cfg_.acc_eps);
    }

    // (xii)-(xvi) every BSCC of the product chain shares a model state
    void shared_state() {
        const int ns = static_cast<int>(m_.num_states());
        const double nq = static_cast<double>(d_.num_nodes());
        const double namec = static_cast<double>(amecs_.size());
        std::size_t c12 = 0, c13 = 0, c14 = 0, c15 = 0, c16 = 0;
        for (std::size_t k = 0; k < amecs_.size(); ++k) {
            RowBuilder b;
            for (int i : amecs_[k].mec.states) b = merge(b, occupation(i));
            row("xii", c12, b.add(out_.ik[k], -1.0), Sense::LessEqual, 0.0);
        }
        std::vector<std::vector<std::vector<int>>> members(amecs_.size(), std::vector<std::vector<int>>(ns));
        for (std::size_t k = 0; k < amecs_.size(); ++k)
            for (int i : amecs_[k].mec.states) members[k][p_.states[i].s].push_back(i);
        for (std::size_t k = 0; k < amecs_.size(); ++k)
            for (int s = 0; s < ns; ++s) {
                RowBuilder b;
                b.add(out_.iks[k][s], 1.0);
                for (int i : members[k][s]) b.add(out_.isq[i], -1.0);
                row("xiii", c13, b, Sense::LessEqual, 0.0);
            }
        for (std::size_t k = 0; k < amecs_.size(); ++k)
            for (int s = 0; s < ns; ++s) {
                RowBuilder b;
                for (int i : members[k][s]) b.add(out_.isq[i], 1.0);
                b.add(out_.iks[k][s], -nq);
                row("xiv", c14, b, Sense::LessEqual, 0.0);
            }
        // is_s - 1 <= sum_k (iks_ks - ik_k) / |AMEC|, scaled by |AMEC|.
        for (int s = 0; s < ns; ++s) {
            RowBuilder b;
            b.add(out_.is[s], namec);
            for (std::size_t k = 0; k < amecs_.size(); ++k) b.add(out_.iks[k][s], -1.0).add(out_.ik[k], 1.0);
            row("xv", c15, b, Sense::LessEqual, namec);
        }
        RowBuilder any;
        for (int s = 0; s < ns; ++s) any.add(out_.is[s], 1.0);
        row("xvi", c16, any, Sense::GreaterEqual, 1.0);
    }

    void objective() {
        if (cfg_.objective == Objective::Feasibility) return;
        for (int i = 0; i < static_cast<int>(p_.size()); ++i)
            for (int a : p_.enabled(i)) {
                const double r = m_.expected_reward(p_.states[i].s, a);
                if (r != 0.0) out_.objective.push_back({out_.x[i][a], r});
            }
    }

    const ProductLmdp& p_;
    const Lmdp& m_;
    const Dra& d_;
    const AmecList& amecs_;
    const SsLtlSpec& spec_;
    const IlpConfig& cfg_;
    IlpModel out_;
    std::vector<std::vector<int>> in_edges_, out_edges_;
};

}  // namespace

IlpModel build_program(const ProductLmdp& p, const AmecList& amecs, const SsLtlSpec& spec, const IlpConfig& cfg) {
    if (!(cfg.acc_eps > 0.0)) throw std::invalid_argument("acc_eps must be positive");
    if (!(cfg.flow_ratio >= 1.0)) throw std::invalid_argument("flow_ratio must be at least 1");
    if (cfg.epsilon && !(*cfg.epsilon > 0.0)) throw std::invalid_argument("epsilon must be positive");
    check_spec_against(spec, *p.model);
    if (amecs.empty()) throw StructurallyInfeasible("the product has no accepting maximal end component");
    return ProgramBuilder(p, amecs, spec, cfg).build();
}

void fix_policy(IlpModel& m, const ProductLmdp& p, const Policy& pi) {
    for (int i = 0; i < static_cast<int>(p.size()); ++i) {
        auto it = pi.action.find(p.states[i]);
        if (it == pi.action.end()) continue;
        for (int a : p.enabled(i)) {
            const double v = a == it->second ? 1.0 : 0.0;
            m.vars[m.pi[i][a]].lower = v;
            m.vars[m.pi[i][a]].upper = v;
        }
    }
}

// ---------------------------------------------------------------------------
// LP export

namespace {

void write_expression(std::ostringstream& out, const IlpModel& m, const std::vector<LinearTerm>& terms) {
    if (terms.empty()) {
        out << " 0 " << m.vars.front().name;
        return;
    }
    for (std::size_t k = 0; k < terms.size(); ++k) {
        if (k > 0 && k % 8 == 0) out << "\n  ";
        const double c = terms[k].coef;
        out << ' ' << (c < 0 ? '-' : '+') << ' ';
        if (std::abs(c) != 1.0) out << num(std::abs(c)) << ' ';
        out << m.vars[terms[k].var].name;
    }
}

}  // namespace

std::string export_lp(const IlpModel& m) {
    std::ostringstream out;
    out << "\\ steady-state + LTL synthesis program\n";
    out << "Maximize\n obj:";
    if (m.objective.empty())
        out << " 0";
    else
        write_expression(out, m, m.objective);
    out << "\nSubject To\n";
    for (const auto& c : m.rows) {
        out << ' ' << c.name << ':';
        write_expression(out, m, c.terms);
        out << (c.sense == Sense::LessEqual ? " <= " : c.sense == Sense::GreaterEqual ? " >= " : " = ") << num(c.rhs)
            << '\n';
    }
    out << "Bounds\n";
    for (const auto& v : m.vars) {
        const bool default_binary = v.kind == VarKind::Binary && v.lower == 0.0 && v.upper == 1.0;
        if (default_binary) continue;
        if (v.lower == v.upper)
            out << ' ' << v.name << " = " << num(v.lower) << '\n';
        else
            out << ' ' << num(v.lower) << " <= " << v.name << " <= " << num(v.upper) << '\n';
    }
    out << "Binary\n";
    for (const auto& v : m.vars)
        if (v.kind == VarKind::Binary) out << ' ' << v.name << '\n';
    out << "End\n";
    return out.str();
}

// ---------------------------------------------------------------------------
// Solver interaction

std::string_view to_string(SolveStatus s) {
    switch (s) {
    case SolveStatus::Optimal: return "optimal";
    case SolveStatus::Feasible: return "feasible";
    case SolveStatus::Infeasible: return "infeasible";
    case SolveStatus::Error: return "error";
    }
    return "error";
}

namespace {

std::optional<double> parse_number(std::string_view s) {
    if (s.empty()) return std::nullopt;
    // from_chars rejects a leading '+'
    if (s.front() == '+') s.remove_prefix(1);
    double v;
    auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc() || res.ptr != s.data() + s.size()) {
        std::string lower(s);
        std::transform(lower.begin(), lower.end(), lower.begin(), ::tolower);
        if (lower == "inf" || lower == "infinity") return std::numeric_limits<double>::infinity();
        if (lower == "-inf" || lower == "-infinity") return -std::numeric_limits<double>::infinity();
        return std::nullopt;
    }
    return v;
}

bool is_integer(std::string_view s) {
    return !s.empty() && std::all_of(s.begin(), s.end(), [](char c) { return std::isdigit(static_cast<unsigned char>(c)); });
}

}  // namespace

Solution parse_solution(std::string_view text) {
    Solution sol;
    std::string status_text;
    std::istringstream in{std::string(text)};
    std::string line;
    bool have_objective = false;
    while (std::getline(in, line)) {
        std::istringstream ls(line);
        std::vector<std::string> tok;
        for (std::string t; ls >> t;) tok.push_back(t);
        if (tok.empty() || tok.front().front() == '#') continue;
        if (tok.front() == "**") tok.erase(tok.begin());
        if (tok.size() >= 3 && is_integer(tok[0]) && parse_number(tok[2])) {
            sol.values[tok[1]] = *parse_number(tok[2]);
            continue;
        }
        if (tok.size() == 2 && parse_number(tok[1]) && !parse_number(tok[0])) {
            std::string key = tok[0];
            std::transform(key.begin(), key.end(), key.begin(), ::tolower);
            if (key == "objective" || key == "objective:") {
                sol.objective = *parse_number(tok[1]);
                have_objective = true;
            } else {
                sol.values[tok[0]] = *parse_number(tok[1]);
            }
            continue;
        }
        status_text += line + "\n";
        auto pos = line.find("objective value");
        if (pos != std::string::npos) {
            std::istringstream rest(line.substr(pos + 15));
            std::string v;
            if (rest >> v && parse_number(v)) {
                sol.objective = *parse_number(v);
                have_objective = true;
            }
        }
    }
    std::string lower = status_text;
    std::transform(lower.begin(), lower.end(), lower.begin(), ::tolower);
    if (lower.find("infeasible") != std::string::npos)
        sol.status = SolveStatus::Infeasible;
    else if (lower.find("unbounded") != std::string::npos)
        sol.status = SolveStatus::Error;
    else if (lower.find("optimal") != std::string::npos)
        sol.status = SolveStatus::Optimal;
    else if (!sol.values.empty())
        sol.status = SolveStatus::Feasible;
    else
        sol.status = SolveStatus::Error;
    (void)have_objective;
    sol.message = status_text;
    while (!sol.message.empty() && sol.message.back() == '\n') sol.message.pop_back();
    return sol;
}

SolverConfig SolverConfig::from_environment(const std::string& explicit_cmd) {
    SolverConfig cfg;
    if (!explicit_cmd.empty()) {
        cfg.command = explicit_cmd;
    } else if (const char* env = std::getenv("SSLTL_SOLVER_CMD")) {
        cfg.command = env;
    }
    return cfg;
}

namespace {

std::string substitute(std::string cmd, const std::string& key, const std::string& value) {
    for (auto pos = cmd.find(key); pos != std::string::npos; pos = cmd.find(key, pos + value.size()))
        cmd.replace(pos, key.size(), value);
    return cmd;
}

// Runs `cmd` through the shell with output captured in `log`; returns the exit
// status, or throws SolverError on launch failure or timeout.
int run_command(const std::string& cmd, const std::filesystem::path& log, std::chrono::seconds timeout) {
    const pid_t pid = fork();
    if (pid < 0) throw SolverError("fork failed");
    if (pid == 0) {
        setpgid(0, 0);
        const int fd = ::open(log.c_str(), O_WRONLY | O_CREAT | O_TRUNC, 0644);
        if (fd >= 0) {
            dup2(fd, STDOUT_FILENO);
            dup2(fd, STDERR_FILENO);
            ::close(fd);
        }
        execl("/bin/sh", "sh", "-c", cmd.c_str(), static_cast<char*>(nullptr));
        _exit(127);
    }
    const auto deadline = std::chrono::steady_clock::now() + timeout;
    for (;;) {
        int status = 0;
        const pid_t r = waitpid(pid, &status, WNOHANG);
        if (r == pid) {
            if (WIFEXITED(status)) return WEXITSTATUS(status);
            throw SolverError("solver terminated by a signal");
        }
        if (r < 0) throw SolverError("waitpid failed");
        if (std::chrono::steady_clock::now() > deadline) {
            kill(-pid, SIGKILL);
            kill(pid, SIGKILL);
            waitpid(pid, &status, 0);
            throw SolverError("solver timed out after " + std::to_string(timeout.count()) + " s");
        }
        std::this_thread::sleep_for(std::chrono::milliseconds(5));
    }
}

std::filesystem::path unique_stem(const std::filesystem::path& dir) {
    static std::atomic<unsigned> counter{0};
    const auto now = std::chrono::steady_clock::now().time_since_epoch().count();
    return dir / ("ssltl-" + std::to_string(getpid()) + "-" + std::to_string(counter++) + "-" +
                  std::to_string(static_cast<unsigned long long>(now) % 1000003ULL));
}

}  // namespace

Solution solve(const IlpModel& m, const SolverConfig& solver) {
    if (solver.command.empty()) throw SolverError("no solver command configured (use --solver-cmd or SSLTL_SOLVER_CMD)");
    const auto dir = solver.workdir.empty() ? std::filesystem::temp_directory_path() : solver.workdir;
    const auto stem = unique_stem(dir);
    const auto lp = stem.string() + ".lp", sol_path = stem.string() + ".sol", log = stem.string() + ".log";
    {
        std::ofstream out(lp, std::ios::binary);
        if (!out) throw SolverError("cannot write " + lp);
        out << export_lp(m);
    }
    auto cleanup = [&] {
        if (solver.keep_files) return;
        std::error_code ec;
        for (const auto& f : {lp, sol_path, log}) std::filesystem::remove(f, ec);
    };
    const std::string cmd = substitute(substitute(solver.command, "{lp}", lp), "{sol}", sol_path);
    int code;
    try {
        code = run_command(cmd, log, solver.timeout);
    } catch (...) {
        cleanup();
        throw;
    }
    std::ifstream in(sol_path, std::ios::binary);
    if (!in) {
        cleanup();
        throw SolverError("solver produced no solution file (exit code " + std::to_string(code) + ")");
    }
    std::ostringstream text;
    text << in.rdbuf();
    in.close();
    Solution sol = parse_solution(text.str());
    cleanup();
    if (sol.status == SolveStatus::Error && sol.values.empty())
        throw SolverError("unparseable solution file: " + sol.message);
    if (sol.status == SolveStatus::Optimal || sol.status == SolveStatus::Feasible) {
        for (const auto& v : m.vars) sol.values.try_emplace(v.name, 0.0);
        sol.objective = 0.0;
        for (const auto& t : m.objective) sol.objective += t.coef * sol.value(m.vars[t.var].name);
    }
    return sol;
}

double max_violation(const IlpModel& m, const Solution& sol) {
    std::vector<double> val(m.vars.size());
    double worst = 0.0;
    for (std::size_t i = 0; i < m.vars.size(); ++i) {
        const auto& v = m.vars[i];
        val[i] = sol.value(v.name);
        worst = std::max({worst, v.lower - val[i], val[i] - v.upper});
        if (v.kind == VarKind::Binary) worst = std::max(worst, std::abs(val[i] - std::round(val[i])));
    }
    for (const auto& c : m.rows) {
        double lhs = 0.0;
        for (const auto& t : c.terms) lhs += t.coef * val[t.var];
        switch (c.sense) {
        case Sense::LessEqual: worst = std::max(worst, lhs - c.rhs); break;
        case Sense::GreaterEqual: worst = std::max(worst, c.rhs - lhs); break;
        case Sense::Equal: worst = std::max(worst, std::abs(lhs - c.rhs)); break;
        }
    }
    return worst;
}

ExtractedPolicy extract_policy(const Solution& sol, const IlpModel& m, const ProductLmdp& p) {
    if (sol.status != SolveStatus::Optimal && sol.status != SolveStatus::Feasible)
        throw SolverError("cannot extract a policy from a " + std::string(to_string(sol.status)) + " solution");
    constexpr double band = 1e-6;
    ExtractedPolicy out;
    const Lmdp& model = *p.model;
    for (int i = 0; i < static_cast<int>(p.size()); ++i) {
        const auto& ps = p.states[i];
        int chosen = -1;
        double total = 0.0;
        for (int a : p.enabled(i)) {
            const auto& name = m.vars[m.pi[i][a]].name;
            const double v = sol.value(name);
            if (v > band && v < 1.0 - band) out.warnings.push_back(name + " = " + num(v) + " is not integral");
            if (v > 0.5) {
                if (chosen >= 0) throw SolverError("two actions selected at (" + model.states[ps.s] + ", " + node_id(ps.q) + ")");
                chosen = a;
            }
            total += sol.value(m.vars[m.x[i][a]].name);
        }
        if (chosen < 0) throw SolverError("no action selected at (" + model.states[ps.s] + ", " + node_id(ps.q) + ")");
        out.policy.action[ps] = chosen;
        if (total < 1e-8) continue;
        for (int a : p.enabled(i)) {
            const double x = sol.value(m.vars[m.x[i][a]].name);
            const double expected = a == chosen ? total : 0.0;
            out.occupation_residual = std::max(out.occupation_residual, std::abs(x - expected));
        }
    }
    if (out.occupation_residual > 1e-6)
        throw SolverError("occupation measure disagrees with the selected actions (residual " +
                          num(out.occupation_residual) + ")");
    return out;
}

}  // namespace ssltl
