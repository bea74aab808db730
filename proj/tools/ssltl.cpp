// ssltl: synthesize and verify steady-state + LTL policies for labeled MDPs.

#include "ssltl/chain.hpp"
#include "ssltl/hoa.hpp"
#include "ssltl/ilp.hpp"
#include "ssltl/model.hpp"
#include "ssltl/product.hpp"
#include "ssltl/synth.hpp"
#include "ssltl/verify.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <mutex>
#include <sstream>
#include <thread>

namespace {

using namespace ssltl;

enum Exit { kOk = 0, kUsage = 1, kInfeasible = 2, kNotVerified = 3, kSolver = 4 };

struct SolverFlags {
    std::string cmd;
    int timeout = 600;
    double eps = 0.0;  // 0 selects the size-dependent default
    double acc_eps = 1e-4;
    double flow_ratio = 2.0;
    std::string objective = "reward";

    void attach(CLI::App* app) {
        app->add_option("--solver-cmd", cmd, "solver command template with {lp} and {sol}");
        app->add_option("--timeout", timeout, "solver timeout in seconds")->check(CLI::PositiveNumber);
        app->add_option("--eps", eps, "flow decrease per flagged state (default min(1e-4, 1/(4|S x Q|)))")
            ->check(CLI::NonNegativeNumber);
        app->add_option("--acc-eps", acc_eps, "minimum mass on accepting automaton states")->check(CLI::PositiveNumber);
        app->add_option("--flow-ratio", flow_ratio, "outflow >= inflow / ratio")->check(CLI::Range(1.0, 1e9));
        app->add_option("--objective", objective)->check(CLI::IsMember({"reward", "feasibility"}));
    }

    IlpConfig ilp() const {
        IlpConfig c;
        if (eps > 0) c.epsilon = eps;
        c.acc_eps = acc_eps;
        c.flow_ratio = flow_ratio;
        c.objective = objective == "feasibility" ? Objective::Feasibility : Objective::ExpectedReward;
        return c;
    }

    SolverConfig solver() const {
        SolverConfig s = SolverConfig::from_environment(cmd);
#ifdef SSLTL_DEFAULT_CBC
        if (s.command.empty()) s.command = std::string(SSLTL_DEFAULT_CBC) + " {lp} solve printingOptions all solution {sol}";
#endif
        s.timeout = std::chrono::seconds(timeout);
        return s;
    }
};

void write_json(const nlohmann::json& j, const std::string& path) {
    if (path.empty() || path == "-") {
        std::cout << j.dump(2) << '\n';
        return;
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ModelError("cannot write " + path);
    out << j.dump(2) << '\n';
}

struct Instance {
    Lmdp model;
    SsLtlSpec spec;
    Dra dra;
};

Instance load_instance(const std::string& model_path, const std::string& spec_path) {
    Instance in{load_model(model_path), load_spec(spec_path), {}};
    in.dra = load_hoa(in.spec.dra_source);
    check_spec_against(in.spec, in.model);
    return in;
}

// ---------------------------------------------------------------------------

int cmd_gen_grid(int size, int width, int height, std::uint64_t seed, const std::string& dynamics,
                 const std::string& rewards, const std::string& out) {
    GridSpec g;
    g.width = width > 0 ? width : size;
    g.height = height > 0 ? height : size;
    g.seed = seed;
    g.dynamics = dynamics == "slip" ? Dynamics::Slip : Dynamics::Deterministic;
    g.reward_mode = rewards == "zero" ? RewardMode::Zero : RewardMode::Bernoulli01;
    const Lmdp m = generate_grid(g);
    if (out.empty() || out == "-")
        std::cout << model_to_json(m).dump(1) << '\n';
    else
        save_model(m, out);
    return kOk;
}

nlohmann::json synth_record(const SynthResult& r, const Lmdp& m) {
    nlohmann::json j{{"outcome", to_string(r.outcome)},
                     {"status", to_string(r.solution.status)},
                     {"message", r.message},
                     {"product_states", r.product_states},
                     {"mecs", r.mecs},
                     {"amecs", r.amecs},
                     {"variables", r.variables},
                     {"rows", r.rows},
                     {"solver_seconds", r.solver_seconds},
                     {"seconds", r.total_seconds},
                     {"warnings", r.warnings}};
    if (r.policy) {
        j["objective"] = r.solution.objective;
        j["occupation_residual"] = r.occupation_residual;
    }
    if (r.report) j["verification"] = r.report->to_json(m);
    return j;
}

int exit_for(SynthOutcome o) {
    switch (o) {
    case SynthOutcome::Verified: return kOk;
    case SynthOutcome::Infeasible: return kInfeasible;
    case SynthOutcome::VerificationFailed: return kNotVerified;
    case SynthOutcome::SolverFailed: return kSolver;
    }
    return kSolver;
}

int cmd_synth(const std::string& model, const std::string& spec, const std::string& policy_out,
              const std::string& record_out, const SolverFlags& flags) {
    const Instance in = load_instance(model, spec);
    const SynthResult r = synthesize(in.model, in.dra, in.spec, {flags.ilp(), flags.solver()});
    if (r.outcome == SynthOutcome::Verified) save_policy(*r.policy, in.model, in.dra, policy_out);
    const auto rec = synth_record(r, in.model);
    if (!record_out.empty()) write_json(rec, record_out);
    std::cerr << to_string(r.outcome);
    if (!r.message.empty()) std::cerr << ": " << r.message;
    std::cerr << '\n';
    return exit_for(r.outcome);
}

int cmd_verify(const std::string& model, const std::string& spec, const std::string& policy, const std::string& out) {
    const Instance in = load_instance(model, spec);
    const Policy pi = load_policy(policy, in.model, in.dra);
    const VerificationReport rep = verify_policy(in.model, in.dra, in.spec, pi);
    write_json(rep.to_json(in.model), out);
    return rep.verdict ? kOk : kNotVerified;
}

int cmd_steady(const std::string& model, const std::string& spec, const std::string& policy, const std::string& out) {
    const Instance in = load_instance(model, spec);
    const Policy pi = load_policy(policy, in.model, in.dra);
    const ProductLmdp p = build_product(in.model, in.dra);
    const ProductLmc c = induce_chain(p, pi);
    const Eigen::VectorXd lim = limiting_distribution(c.trans, point_mass<double>(c.trans.rows(), c.initial));
    const Partition part = Partition::from_labels(projection_classes(c));
    const Eigen::VectorXd agg = lump_distribution(lim, part);

    nlohmann::json j;
    auto& prod = j["product"] = nlohmann::json::array();
    for (std::size_t i = 0; i < c.states.size(); ++i)
        prod.push_back({{"s", in.model.states[c.states[i].s]}, {"q", node_id(c.states[i].q)},
                        {"p", lim(static_cast<Eigen::Index>(i))}});
    auto& aggj = j["aggregate"] = nlohmann::json::object();
    for (std::size_t k = 0; k < part.size(); ++k)
        aggj[in.model.states[c.states[part.classes[k].front()].s]] = agg(static_cast<Eigen::Index>(k));
    j["lumpability_residual"] = check_lumpable(c.trans, part);
    write_json(j, out);
    return kOk;
}

int cmd_export_lp(const std::string& model, const std::string& spec, const std::string& out, const SolverFlags& flags) {
    const Instance in = load_instance(model, spec);
    const ProductLmdp p = build_product(in.model, in.dra);
    const auto amecs = accepting_mecs(mec_decomposition(p), p);
    const IlpModel ilp = build_program(p, amecs, in.spec, flags.ilp());
    const std::string text = export_lp(ilp);
    if (out.empty() || out == "-") {
        std::cout << text;
    } else {
        std::ofstream f(out, std::ios::binary);
        if (!f) throw ModelError("cannot write " + out);
        f << text;
    }
    return kOk;
}

// ---------------------------------------------------------------------------
// bench

struct BenchJob {
    std::string spec_name;
    std::filesystem::path spec_path;
    int size;
    std::uint64_t seed;
};

struct BenchRow {
    BenchJob job;
    std::string status;
    double seconds = 0.0;
    double solver_seconds = 0.0;
    std::optional<double> objective;
    std::optional<bool> verified;
    std::string error;
};

std::string csv_field(const std::string& s) {
    if (s.find_first_of(",\"\r\n") == std::string::npos) return s;
    std::string q = "\"";
    for (char c : s) q += c == '"' ? std::string("\"\"") : std::string(1, c);
    return q + "\"";
}

std::string fmt(double v) {
    std::ostringstream o;
    o << std::setprecision(9) << v;
    return o.str();
}

BenchRow run_bench_job(const BenchJob& job, const std::string& dynamics, const SolverFlags& flags) {
    BenchRow row{job, "error", 0, 0, {}, {}, {}};
    const auto start = std::chrono::steady_clock::now();
    try {
        GridSpec g;
        g.width = g.height = job.size;
        g.seed = job.seed;
        g.dynamics = dynamics == "slip" ? Dynamics::Slip : Dynamics::Deterministic;
        const Lmdp m = generate_grid(g);
        const SsLtlSpec spec = load_spec(job.spec_path);
        const Dra d = load_hoa(spec.dra_source);
        const SynthResult r = synthesize(m, d, spec, {flags.ilp(), flags.solver()});
        row.status = std::string(to_string(r.solution.status));
        row.solver_seconds = r.solver_seconds;
        if (r.policy) {
            row.objective = r.solution.objective;
            row.verified = r.outcome == SynthOutcome::Verified;
        }
        if (r.outcome == SynthOutcome::SolverFailed) row.error = r.message;
    } catch (const std::exception& e) {
        row.status = "error";
        row.error = e.what();
    }
    row.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return row;
}

int cmd_bench(const std::vector<std::string>& specs, const std::vector<int>& sizes, int seeds, std::uint64_t first_seed,
              int jobs, const std::string& dynamics, const std::string& out, const std::string& summary_out,
              const SolverFlags& flags) {
    std::vector<BenchJob> queue;
    for (const auto& entry : specs) {
        const auto eq = entry.find('=');
        std::filesystem::path path = eq == std::string::npos ? entry : entry.substr(eq + 1);
        std::string name = eq == std::string::npos ? path.stem().string() : entry.substr(0, eq);
        for (int size : sizes)
            for (int k = 0; k < seeds; ++k) queue.push_back({name, path, size, first_seed + static_cast<std::uint64_t>(k)});
    }

    std::vector<BenchRow> rows(queue.size());
    std::atomic<std::size_t> next{0};
    std::mutex log_mutex;
    auto worker = [&] {
        for (std::size_t i = next++; i < queue.size(); i = next++) {
            rows[i] = run_bench_job(queue[i], dynamics, flags);
            std::lock_guard lock(log_mutex);
            std::cerr << queue[i].spec_name << " size " << queue[i].size << " seed " << queue[i].seed << ": "
                      << rows[i].status << (rows[i].error.empty() ? "" : " (" + rows[i].error + ")") << '\n';
        }
    };
    std::vector<std::thread> pool;
    for (int w = 0; w < std::max(1, jobs); ++w) pool.emplace_back(worker);
    for (auto& t : pool) t.join();

    std::ofstream file;
    if (!out.empty() && out != "-") {
        file.open(out, std::ios::binary);
        if (!file) throw ModelError("cannot write " + out);
    }
    std::ostream& csv = file.is_open() ? file : std::cout;
    csv << "instance,size,spec,status,seconds,objective,verified\r\n";
    for (const auto& r : rows) {
        csv << csv_field(r.job.spec_name + "-" + std::to_string(r.job.size) + "-" + std::to_string(r.job.seed)) << ','
            << r.job.size << ',' << csv_field(r.job.spec_name) << ',' << r.status << ',' << fmt(r.seconds) << ','
            << (r.objective ? fmt(*r.objective) : "") << ','
            << (r.verified ? (*r.verified ? "true" : "false") : "") << "\r\n";
    }

    if (!summary_out.empty()) {
        std::ofstream sum(summary_out, std::ios::binary);
        if (!sum) throw ModelError("cannot write " + summary_out);
        sum << "spec,size,instances,feasible,verified,mean_seconds,stddev_seconds,mean_solver_seconds,"
               "stddev_solver_seconds\r\n";
        std::map<std::pair<std::string, int>, std::vector<const BenchRow*>> groups;
        for (const auto& r : rows) groups[{r.job.spec_name, r.job.size}].push_back(&r);
        auto stats = [](const std::vector<double>& v) {
            double mean = 0, var = 0;
            for (double x : v) mean += x;
            mean /= static_cast<double>(v.size());
            for (double x : v) var += (x - mean) * (x - mean);
            var = v.size() > 1 ? var / static_cast<double>(v.size() - 1) : 0.0;
            return std::pair{mean, std::sqrt(var)};
        };
        for (const auto& [key, group] : groups) {
            std::vector<double> total, solver;
            int feasible = 0, verified = 0;
            for (const auto* r : group) {
                total.push_back(r->seconds);
                solver.push_back(r->solver_seconds);
                feasible += r->status == "optimal" || r->status == "feasible";
                verified += r->verified.value_or(false);
            }
            const auto [tm, ts] = stats(total);
            const auto [sm, ss] = stats(solver);
            sum << csv_field(key.first) << ',' << key.second << ',' << group.size() << ',' << feasible << ','
                << verified << ',' << fmt(tm) << ',' << fmt(ts) << ',' << fmt(sm) << ',' << fmt(ss) << "\r\n";
        }
    }
    const bool all_ok = std::all_of(rows.begin(), rows.end(), [](const BenchRow& r) {
        return r.status != "error" && r.verified.value_or(true);
    });
    return all_ok ? kOk : kNotVerified;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Steady-state + LTL policy synthesis and verification for labeled MDPs"};
    app.require_subcommand(1);

    int size = 4, width = 0, height = 0;
    std::uint64_t seed = 0;
    std::string dynamics = "det", rewards = "bernoulli", out;
    auto* gen = app.add_subcommand("gen-grid", "generate a random gridworld model");
    gen->add_option("--size", size, "grid side length")->check(CLI::PositiveNumber);
    gen->add_option("--width", width)->check(CLI::PositiveNumber);
    gen->add_option("--height", height)->check(CLI::PositiveNumber);
    gen->add_option("--seed", seed);
    gen->add_option("--dynamics", dynamics)->check(CLI::IsMember({"det", "slip"}));
    gen->add_option("--rewards", rewards)->check(CLI::IsMember({"bernoulli", "zero"}));
    gen->add_option("-o,--output", out, "model file (default stdout)");

    std::string model, spec, policy, record;
    SolverFlags flags;
    auto* synth = app.add_subcommand("synth", "synthesize and verify a policy");
    synth->add_option("--model", model)->required()->check(CLI::ExistingFile);
    synth->add_option("--spec", spec)->required()->check(CLI::ExistingFile);
    synth->add_option("-o,--policy", policy, "policy output file")->required();
    synth->add_option("--record", record, "run record (JSON)");
    flags.attach(synth);

    auto* verify = app.add_subcommand("verify", "verify a policy file");
    verify->add_option("--model", model)->required()->check(CLI::ExistingFile);
    verify->add_option("--spec", spec)->required()->check(CLI::ExistingFile);
    verify->add_option("--policy", policy)->required()->check(CLI::ExistingFile);
    verify->add_option("-o,--output", out, "report file (default stdout)");

    auto* steady = app.add_subcommand("steady", "long-run distributions of the chain induced by a policy");
    steady->add_option("--model", model)->required()->check(CLI::ExistingFile);
    steady->add_option("--spec", spec)->required()->check(CLI::ExistingFile);
    steady->add_option("--policy", policy)->required()->check(CLI::ExistingFile);
    steady->add_option("-o,--output", out);

    auto* lp = app.add_subcommand("export-lp", "write the synthesis program as an LP file");
    lp->add_option("--model", model)->required()->check(CLI::ExistingFile);
    lp->add_option("--spec", spec)->required()->check(CLI::ExistingFile);
    lp->add_option("-o,--output", out);
    flags.attach(lp);

    std::vector<std::string> bench_specs;
    std::vector<int> sizes{4};
    int seeds = 10, jobs = 1;
    std::string summary;
    auto* bench = app.add_subcommand("bench", "run synthesis over random grids");
    bench->add_option("--spec", bench_specs, "spec file, optionally NAME=PATH")->required();
    bench->add_option("--sizes", sizes)->delimiter(',')->check(CLI::PositiveNumber);
    bench->add_option("--seeds", seeds, "instances per (spec, size)")->check(CLI::PositiveNumber);
    bench->add_option("--first-seed", seed);
    bench->add_option("--jobs", jobs)->check(CLI::PositiveNumber);
    bench->add_option("--dynamics", dynamics)->check(CLI::IsMember({"det", "slip"}));
    bench->add_option("-o,--output", out, "per-instance CSV (default stdout)");
    bench->add_option("--summary", summary, "per (spec, size) timing summary CSV");
    flags.attach(bench);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kOk : kUsage;
    }

    try {
        if (*gen) return cmd_gen_grid(size, width, height, seed, dynamics, rewards, out);
        if (*synth) return cmd_synth(model, spec, policy, record, flags);
        if (*verify) return cmd_verify(model, spec, policy, out);
        if (*steady) return cmd_steady(model, spec, policy, out);
        if (*lp) return cmd_export_lp(model, spec, out, flags);
        if (*bench) return cmd_bench(bench_specs, sizes, seeds, seed, jobs, dynamics, out, summary, flags);
    } catch (const StructurallyInfeasible& e) {
        std::cerr << "infeasible: " << e.what() << '\n';
        return kInfeasible;
    } catch (const SolverError& e) {
        std::cerr << "solver error: " << e.what() << '\n';
        return kSolver;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kUsage;
    }
    return kUsage;
}
