#include <CLI11.hpp>
#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <numeric>

#include "qudio/diagnostics.hpp"
#include "qudio/engine.hpp"

using namespace qudio;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

// Exit codes: 0 ok, 1 usage, 2 input data, 3 internal invariant violation.
constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitData = 2;
constexpr int kExitInternal = 3;

std::uint64_t fnv1a_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path.string() + " for digest");
    std::uint64_t h = 1469598103934665603ULL;
    char buffer[1 << 15];
    while (in.read(buffer, sizeof buffer) || in.gcount() > 0) {
        for (std::streamsize i = 0; i < in.gcount(); ++i) {
            h ^= std::uint8_t(buffer[i]);
            h *= 1099511628211ULL;
        }
        if (!in) break;
    }
    return h;
}

std::string hex64(std::uint64_t v) {
    char buffer[17];
    std::snprintf(buffer, sizeof buffer, "%016llx", static_cast<unsigned long long>(v));
    return buffer;
}

fs::path digest_source(const fs::path& path) {
    if (fs::exists(path)) return path;
    fs::path gz = path;
    gz += ".gz";
    return gz;
}

struct RunFlags {
    int nodes = 1;
    int local_steps = 1;
    int global_rounds = 100;
    long shots = 100;
    double depolarize = 0.0;
    bool ideal = false;
    double lr = 0.01;
    double momentum = 0.9;
    double decay_factor = 0.1;
    int decay_period = 40;
    double lambda = 0.0;
    std::uint64_t seed = 0;
    std::string dataset_dir;
    std::string hamiltonian_dir = "data/hamiltonians";
    std::string bond_distances = "0.3,0.5,0.7,0.9,1.1,1.3,1.5,1.7,1.9,2.1";
    std::string out = "out";
    int blocks = 4;
    int grad_norm_stride = 0;
    int threads = 0;
    bool no_balance = false;
    bool single_axis = false;
    std::string entangle = "chain";
    double init_scale = 1.0;
    std::string init = "uniform";
};

void add_optimizer_flags(CLI::App* cmd, RunFlags& f) {
    cmd->add_option("--lr", f.lr, "initial learning rate")->check(CLI::PositiveNumber);
    cmd->add_option("--momentum", f.momentum, "momentum coefficient");
    cmd->add_option("--decay-factor", f.decay_factor, "learning-rate decay factor");
    cmd->add_option("--decay-period", f.decay_period, "rounds between decays")
        ->check(CLI::PositiveNumber);
    cmd->add_option("--lambda", f.lambda, "l2 regularizer coefficient")
        ->check(CLI::NonNegativeNumber);
    cmd->add_option("--seed", f.seed, "master seed");
    cmd->add_option("--out", f.out, "output directory");
    cmd->add_option("--threads", f.threads, "worker threads (0 = hardware)");
    cmd->add_option("--grad-norm-stride", f.grad_norm_stride,
                    "record the ideal gradient norm every N rounds (0 = off)");
    cmd->add_option("--init-scale", f.init_scale,
                    "theta(0) ~ U[0, 2 pi * scale); 1 is the full domain")
        ->check(CLI::Range(1e-9, 1.0));
}

void add_noise_flags(CLI::App* cmd, RunFlags& f) {
    auto* shots = cmd->add_option("--shots,-K", f.shots, "measurements per expectation estimate")
                      ->check(CLI::PositiveNumber);
    auto* depol =
        cmd->add_option("--depolarize,-p", f.depolarize, "per-layer depolarization rate")
            ->check(CLI::Range(0.0, 1.0));
    auto* ideal = cmd->add_flag("--ideal", f.ideal, "analytic gradients, no noise");
    ideal->excludes(shots);
    ideal->excludes(depol);
}

GlobalConfig config_from_flags(const RunFlags& f, Workload workload) {
    GlobalConfig config;
    config.workload = workload;
    config.nodes = f.nodes;
    config.local_steps = f.local_steps;
    config.global_rounds = f.global_rounds;
    config.lr = f.lr;
    config.momentum = f.momentum;
    config.decay = {f.decay_factor, f.decay_period};
    config.lambda = f.lambda;
    config.seed = f.seed;
    config.grad_norm_stride = f.grad_norm_stride;
    config.threads = f.threads;
    config.init_scale = f.init_scale;
    config.noise = f.ideal ? NoiseModel{0.0, NoiseModel::kAnalytic}
                           : NoiseModel{f.depolarize, f.shots};
    return config;
}

json config_to_json(const GlobalConfig& c) {
    return json{{"workload", c.workload == Workload::Qnn ? "qnn" : "vqe"},
                {"nodes", c.nodes},
                {"local_steps", c.local_steps},
                {"global_rounds", c.global_rounds},
                {"lr", c.lr},
                {"momentum", c.momentum},
                {"decay_factor", c.decay.factor},
                {"decay_period", c.decay.period},
                {"lambda", c.lambda},
                {"depolarize", c.noise.p},
                {"shots", c.noise.shots},
                {"analytic", c.noise.analytic_shots()},
                {"seed", c.seed},
                {"carry_momentum", c.carry_momentum},
                {"grad_norm_stride", c.grad_norm_stride},
                {"init_scale", c.init_scale},
                {"threads", c.threads}};
}

// Every subcommand drops a manifest next to its outputs; the digests pin the
// exact inputs so a run can be reproduced from the manifest alone.
void write_manifest(const fs::path& out_dir, const std::string& subcommand, const json& config,
                    const std::vector<fs::path>& inputs, const std::vector<std::string>& outputs) {
    json m;
    m["subcommand"] = subcommand;
    m["config"] = config;
    auto& digests = m["input_digests"] = json::object();
    for (const fs::path& p : inputs) {
        const fs::path src = digest_source(p);
        digests[src.string()] = hex64(fnv1a_file(src));
    }
    m["outputs"] = outputs;
    std::uint64_t id = 1469598103934665603ULL;
    for (unsigned char c : m.dump()) {
        id ^= c;
        id *= 1099511628211ULL;
    }
    m["run_id"] = hex64(id);
    std::ofstream out(out_dir / "manifest.json");
    out << m.dump(2) << "\n";
}

void write_trace(const fs::path& path, const TrainingTrace& trace) {
    std::ofstream out(path);
    trace.write_csv(out);
}

std::vector<fs::path> mnist_inputs(const fs::path& dir) {
    const MnistPaths p = MnistPaths::in(dir);
    return {p.train_images, p.train_labels, p.test_images, p.test_labels};
}

fs::path require_dataset(const std::string& flag_value) {
    const fs::path dir = resolve_dataset_dir(flag_value);
    if (!MnistPaths::in(dir).all_present()) {
        std::string err;
        std::cerr << "dataset not found in " << dir << ", attempting download...\n";
        if (!fetch_mnist(dir, err)) throw std::runtime_error(err);
    }
    return dir;
}


// Empirical bound on the local-gradient variance: max over nodes of the
// sample variance of a few stochastic gradients at the final parameters.
double estimate_sigma_sq_qnn(const QnnProblem& problem, const QnnLossSpec& spec,
                             const GlobalConfig& config, std::span<const double> params) {
    const ShardPlan plan = shard(int(problem.train.size()), config.nodes, config.seed);
    const int draws = 8;
    double worst = 0.0;
    for (int node = 0; node < config.nodes; ++node) {
        Rng rng = make_stream(config.seed, 0x5347ULL + node, 0);
        const auto& idx = plan.assignments[node];
        std::vector<std::vector<double>> grads;
        for (int s = 0; s < draws; ++s) {
            const EncodedExample& e = problem.train[idx[std::size_t(uniform01(rng) * idx.size())]];
            grads.push_back(config.noise.ideal()
                                ? qnn_grad_analytic(params, e, spec).values
                                : qnn_grad_estimated(params, e, spec, config.noise, rng).values);
        }
        std::vector<double> mean(params.size(), 0.0);
        for (const auto& g : grads)
            for (std::size_t j = 0; j < mean.size(); ++j) mean[j] += g[j] / draws;
        double var = 0.0;
        for (const auto& g : grads)
            for (std::size_t j = 0; j < mean.size(); ++j)
                var += (g[j] - mean[j]) * (g[j] - mean[j]) / (draws - 1);
        worst = std::max(worst, var);
    }
    return worst;
}

double estimate_sigma_sq_vqe(const VqeProblem& problem, const GlobalConfig& config,
                             std::span<const double> params, double p_tilde) {
    if (config.noise.analytic_shots()) return 0.0;
    const Partition part = partition_terms(problem.ham, config.nodes);
    const int draws = 8;
    double worst = 0.0;
    for (int node = 0; node < config.nodes; ++node) {
        Rng rng = make_stream(config.seed, 0x5347ULL + node, 0);
        std::vector<std::vector<double>> grads;
        for (int s = 0; s < draws; ++s)
            grads.push_back(vqe_grad(params, problem.spec, problem.ham, part.index_sets[node],
                                     config.noise.shots, &rng, p_tilde)
                                .values);
        std::vector<double> mean(params.size(), 0.0);
        for (const auto& g : grads)
            for (std::size_t j = 0; j < mean.size(); ++j) mean[j] += g[j] / draws;
        double var = 0.0;
        for (const auto& g : grads)
            for (std::size_t j = 0; j < mean.size(); ++j)
                var += (g[j] - mean[j]) * (g[j] - mean[j]) / (draws - 1);
        worst = std::max(worst, var);
    }
    return worst;
}

// R1 plus the convergence-bound overlay (unit hidden constant, G2 taken as
// G1); attached to summaries when the trace captured gradient norms.
void attach_convergence_overlay(json& summary, const TrainingTrace& trace,
                                const GlobalConfig& config, int n_params, double sigma_sq,
                                double p_tilde) {
    if (config.grad_norm_stride != 1) return;
    const BoundConstants constants = bound_constants(n_params, config.lambda);
    summary["utility_r1"] = utility_r1(trace);
    summary["sigma_sq_estimate"] = sigma_sq;
    summary["smoothness_s"] = constants.smoothness;
    summary["lipschitz_g1"] = constants.lipschitz;
    summary["convergence_bound_overlay"] =
        convergence_bound(constants, sigma_sq, constants.lipschitz, config.lambda, n_params,
                       config.local_steps, config.global_rounds, p_tilde, config.noise.shots);
}

int cmd_qnn_train(const RunFlags& f) {
    const fs::path dir = require_dataset(f.dataset_dir);
    DistillOptions distill_options;
    distill_options.seed = f.seed;
    distill_options.balanced = !f.no_balance;
    QnnProblem problem = build_qnn_problem(dir, f.blocks, distill_options);
    if (f.entangle == "ring")
        problem.spec.circuit =
            build_qnn_ansatz(kEncodedQubits, f.blocks, EntanglePattern::Ring);
    const GlobalConfig config = config_from_flags(f, Workload::Qnn);

    const TrainingTrace trace = run_qudio(config, problem);

    fs::create_directories(f.out);
    write_trace(fs::path(f.out) / "trace.csv", trace);
    json summary;
    summary["rounds_run"] = trace.rows.size() - 1;
    summary["final_test_accuracy"] = trace.rows.back().metric;
    summary["final_train_loss"] = trace.rows.back().train_loss;
    summary["final_params"] = trace.final_params();
    summary["config"] = config_to_json(config);
    QnnLossSpec spec = problem.spec;
    spec.lambda = config.lambda;
    const double p_tilde = effective_depolarization(config.noise.p, spec.circuit.depth());
    attach_convergence_overlay(summary, trace, config, spec.circuit.n_params,
                               estimate_sigma_sq_qnn(problem, spec, config, trace.final_params()),
                               p_tilde);
    std::ofstream(fs::path(f.out) / "summary.json") << summary.dump(2) << "\n";
    write_manifest(f.out, "qnn-train", config_to_json(config), mnist_inputs(dir),
                   {"trace.csv", "summary.json"});
    std::cout << "final test accuracy " << trace.rows.back().metric << " after "
              << trace.rows.size() - 1 << " rounds\n";
    return kExitOk;
}

std::vector<double> parse_distances(const std::string& text) {
    std::vector<double> out;
    std::stringstream ss(text);
    std::string token;
    while (std::getline(ss, token, ',')) {
        if (token.empty()) continue;
        out.push_back(std::stod(token));
    }
    if (out.empty()) throw CLI::ValidationError("--bond-distances", "no distances given");
    return out;
}

fs::path hamiltonian_file(const fs::path& dir, double distance) {
    char name[64];
    std::snprintf(name, sizeof name, "h2_%.1fA.txt", distance);
    return dir / name;
}

int cmd_vqe(const RunFlags& f) {
    const std::vector<double> distances = parse_distances(f.bond_distances);
    const GlobalConfig config = config_from_flags(f, Workload::Vqe);
    fs::create_directories(f.out);

    std::vector<fs::path> inputs;
    std::vector<std::string> outputs;
    std::ofstream surface(fs::path(f.out) / "energy_surface.csv");
    surface << "distance_angstrom,final_energy,exact_energy,abs_error\n";
    outputs.push_back("energy_surface.csv");
    json config_json = config_to_json(config);
    config_json["init"] = f.init;
    json summary = json::array();
    for (double distance : distances) {
        const fs::path file = hamiltonian_file(f.hamiltonian_dir, distance);
        inputs.push_back(file);
        const VqeProblem problem = build_vqe_problem(file, f.single_axis);
        GlobalConfig run_config = config;
        if (f.init == "warm") run_config.init_center = problem.reference_params();
        const TrainingTrace trace = run_qudio(run_config, problem);
        const double exact = exact_ground_energy(problem.ham);
        const double final_energy = trace.rows.back().metric;
        char row[160];
        std::snprintf(row, sizeof row, "%.1f,%.12f,%.12f,%.12f\n", distance, final_energy, exact,
                      std::abs(final_energy - exact));
        surface << row;
        char trace_name[64];
        std::snprintf(trace_name, sizeof trace_name, "trace_%.1fA.csv", distance);
        write_trace(fs::path(f.out) / trace_name, trace);
        outputs.push_back(trace_name);
        json entry = {{"distance", distance},
                      {"final_energy", final_energy},
                      {"exact_energy", exact},
                      {"abs_error", std::abs(final_energy - exact)},
                      {"final_params", trace.final_params()}};
        const double p_tilde =
            effective_depolarization(run_config.noise.p, problem.spec.circuit.depth());
        attach_convergence_overlay(entry, trace, run_config, problem.spec.circuit.n_params,
                                   estimate_sigma_sq_vqe(problem, run_config,
                                                         trace.final_params(), p_tilde),
                                   p_tilde);
        summary.push_back(std::move(entry));
        std::cout << "d=" << distance << " A: energy " << final_energy << " (exact " << exact
                  << ", error " << std::abs(final_energy - exact) << ")\n";
    }
    json summary_doc;
    summary_doc["config"] = config_json;
    summary_doc["distances"] = std::move(summary);
    std::ofstream(fs::path(f.out) / "summary.json") << summary_doc.dump(2) << "\n";
    outputs.push_back("summary.json");
    write_manifest(f.out, "vqe", config_json, inputs, outputs);
    return kExitOk;
}

int cmd_bias_check(const RunFlags& f, int trials) {
    const fs::path dir = require_dataset(f.dataset_dir);
    DistillOptions distill_options;
    distill_options.seed = f.seed;
    const QnnProblem problem = build_qnn_problem(dir, f.blocks, distill_options);
    QnnLossSpec spec = problem.spec;
    spec.lambda = f.lambda;

    Rng rng = make_stream(f.seed, 0xB1A5ULL);
    std::vector<double> params(spec.circuit.n_params);
    for (double& p : params) p = uniform_angle(rng);
    const BiasCheckReport report =
        bias_check(params, problem.train.front(), spec, f.depolarize, f.shots, trials, rng);

    fs::create_directories(f.out);
    std::ofstream(fs::path(f.out) / "report.json") << report.to_json() << "\n";
    json config = config_to_json(config_from_flags(f, Workload::Qnn));
    config["trials"] = trials;
    config["blocks"] = f.blocks;
    write_manifest(f.out, "bias-check", config, mnist_inputs(dir), {"report.json"});
    std::cout << report.n_pass() << "/" << report.components.size()
              << " components within 4 standard errors (p_tilde " << report.p_tilde << ")\n";
    return report.pass_fraction() >= 0.95 ? kExitOk : kExitData;
}

int cmd_bench(const RunFlags& f, const std::string& workload, const std::string& nodes_list,
              double threshold_flag, bool threshold_given) {
    std::vector<int> node_counts;
    {
        std::stringstream ss(nodes_list);
        std::string token;
        while (std::getline(ss, token, ','))
            if (!token.empty()) node_counts.push_back(std::stoi(token));
    }
    if (node_counts.empty()) throw CLI::ValidationError("--nodes-list", "no node counts given");

    fs::create_directories(f.out);
    std::map<int, TrainingTrace> traces;
    std::vector<fs::path> inputs;
    double threshold = threshold_flag;
    const bool is_vqe = workload == "vqe";

    for (int q : node_counts) {
        RunFlags rf = f;
        rf.nodes = q;
        if (is_vqe) {
            const double distance = parse_distances(f.bond_distances).front();
            const fs::path file = hamiltonian_file(f.hamiltonian_dir, distance);
            if (inputs.empty()) inputs.push_back(file);
            const VqeProblem problem = build_vqe_problem(file, f.single_axis);
            if (!threshold_given) threshold = exact_ground_energy(problem.ham) + 0.1;
            GlobalConfig run_config = config_from_flags(rf, Workload::Vqe);
            if (f.init == "warm") run_config.init_center = problem.reference_params();
            TrainingTrace trace = run_qudio(run_config, problem);
            // energies improve downward; flip so the shared threshold logic
            // can keep its metric >= threshold convention
            for (TraceRow& row : trace.rows) row.metric = -row.metric;
            traces[q] = std::move(trace);
        } else {
            const fs::path dir = require_dataset(f.dataset_dir);
            if (inputs.empty()) inputs = mnist_inputs(dir);
            DistillOptions distill_options;
            distill_options.seed = f.seed;
            const QnnProblem problem = build_qnn_problem(dir, f.blocks, distill_options);
            traces[q] = run_qudio(config_from_flags(rf, Workload::Qnn), problem);
        }
        char trace_name[64];
        std::snprintf(trace_name, sizeof trace_name, "trace_q%d.csv", q);
        write_trace(fs::path(f.out) / trace_name, traces[q]);
    }

    const double effective = is_vqe ? -threshold : threshold;
    const auto rows = speedup_metrics(traces, effective);
    std::ofstream csv(fs::path(f.out) / "speedup.csv");
    csv << "# absolute ratios are hardware-dependent; compare trends only\n";
    csv << "nodes,reached,time_to_threshold_s,speedup,fixed_t_time_s,fixed_t_ratio\n";
    std::cout << "nodes,reached,time_to_threshold_s,speedup,fixed_t_time_s,fixed_t_ratio\n";
    for (const SpeedupRow& row : rows) {
        char line[200];
        if (row.reached)
            std::snprintf(line, sizeof line, "%d,yes,%.6f,%.3f,%.6f,%.3f\n", row.nodes,
                          row.time_to_threshold, row.speedup, row.fixed_t_time, row.fixed_t_ratio);
        else
            std::snprintf(line, sizeof line, "%d,not reached,,,%.6f,%.3f\n", row.nodes,
                          row.fixed_t_time, row.fixed_t_ratio);
        csv << line;
        std::cout << line;
    }
    json config = config_to_json(config_from_flags(f, is_vqe ? Workload::Vqe : Workload::Qnn));
    config["workload"] = workload;
    config["nodes_list"] = node_counts;
    config["threshold"] = threshold;
    write_manifest(f.out, "bench", config, inputs, {"speedup.csv"});
    return kExitOk;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"QUDIO: distributed optimization of variational quantum algorithms"};
    app.require_subcommand(1);

    RunFlags qnn_flags;
    auto* qnn = app.add_subcommand("qnn-train", "train the 6-qubit MNIST 0-vs-1 classifier");
    qnn->add_option("--nodes,-Q", qnn_flags.nodes, "local nodes")->check(CLI::PositiveNumber);
    qnn->add_option("--local-steps,-W", qnn_flags.local_steps, "local steps per round")
        ->check(CLI::PositiveNumber);
    qnn->add_option("--global-steps,-T", qnn_flags.global_rounds, "global rounds")
        ->check(CLI::PositiveNumber);
    qnn->add_option("--blocks", qnn_flags.blocks, "ansatz blocks")->check(CLI::PositiveNumber);
    qnn->add_option("--dataset-dir", qnn_flags.dataset_dir, "MNIST IDX directory");
    qnn->add_flag("--no-balance", qnn_flags.no_balance, "disable class-balanced distillation");
    qnn->add_option("--entangle", qnn_flags.entangle, "entangling layer pattern")
        ->check(CLI::IsMember({"chain", "ring"}));
    add_noise_flags(qnn, qnn_flags);
    add_optimizer_flags(qnn, qnn_flags);

    RunFlags vqe_flags;
    vqe_flags.global_rounds = 150;
    vqe_flags.init = "warm";
    vqe_flags.init_scale = 0.05;
    auto* vqe = app.add_subcommand("vqe", "estimate H2 ground energies over a bond-distance grid");
    vqe->add_option("--nodes,-Q", vqe_flags.nodes, "local nodes")->check(CLI::PositiveNumber);
    vqe->add_option("--local-steps,-W", vqe_flags.local_steps, "local steps per round")
        ->check(CLI::PositiveNumber);
    vqe->add_option("--global-steps,-T", vqe_flags.global_rounds, "global rounds")
        ->check(CLI::PositiveNumber);
    vqe->add_option("--hamiltonian-dir", vqe_flags.hamiltonian_dir, "hamiltonian data directory");
    vqe->add_option("--bond-distances", vqe_flags.bond_distances, "comma-separated distances (A)");
    vqe->add_flag("--single-axis", vqe_flags.single_axis, "one RY per qubit instead of full Euler rotations");
    vqe->add_option("--init", vqe_flags.init, "warm: jitter around the reference-determinant angles; uniform: U[0, 2 pi * init-scale)")
        ->check(CLI::IsMember({"warm", "uniform"}));
    add_noise_flags(vqe, vqe_flags);
    add_optimizer_flags(vqe, vqe_flags);

    RunFlags bias_flags;
    bias_flags.blocks = 2;
    int bias_trials = 10000;
    auto* bias = app.add_subcommand("bias-check", "Monte Carlo check of the gradient-bias relation");
    bias->add_option("--p", bias_flags.depolarize, "per-layer depolarization rate")
        ->check(CLI::Range(0.0, 1.0));
    bias->add_option("--shots,-K", bias_flags.shots, "measurements per estimate")
        ->check(CLI::PositiveNumber);
    bias->add_option("--trials", bias_trials, "Monte Carlo trials")->check(CLI::PositiveNumber);
    bias->add_option("--blocks", bias_flags.blocks, "ansatz blocks")->check(CLI::PositiveNumber);
    bias->add_option("--lambda", bias_flags.lambda, "l2 regularizer coefficient")
        ->check(CLI::NonNegativeNumber);
    bias->add_option("--seed", bias_flags.seed, "master seed");
    bias->add_option("--dataset-dir", bias_flags.dataset_dir, "MNIST IDX directory");
    bias->add_option("--out", bias_flags.out, "output directory");

    RunFlags bench_flags;
    bench_flags.global_rounds = 20;
    bench_flags.init = "warm";
    bench_flags.init_scale = 0.05;
    std::string bench_workload = "qnn";
    std::string bench_nodes = "1,2,4";
    double bench_threshold = 0.95;
    auto* bench = app.add_subcommand("bench", "Q-sweep wall-clock and time-to-threshold table");
    bench->add_option("--workload", bench_workload, "qnn or vqe")
        ->check(CLI::IsMember({"qnn", "vqe"}));
    bench->add_option("--nodes-list", bench_nodes, "comma-separated node counts");
    auto* threshold_opt = bench->add_option("--threshold", bench_threshold,
                                            "metric threshold (accuracy, or energy for vqe)");
    bench->add_option("--local-steps,-W", bench_flags.local_steps, "local steps per round")
        ->check(CLI::PositiveNumber);
    bench->add_option("--global-steps,-T", bench_flags.global_rounds, "global rounds")
        ->check(CLI::PositiveNumber);
    bench->add_option("--blocks", bench_flags.blocks, "ansatz blocks")->check(CLI::PositiveNumber);
    bench->add_option("--dataset-dir", bench_flags.dataset_dir, "MNIST IDX directory");
    bench->add_option("--hamiltonian-dir", bench_flags.hamiltonian_dir, "hamiltonian directory");
    bench->add_option("--bond-distances", bench_flags.bond_distances,
                      "vqe bond distance (first entry used)");
    bench->add_flag("--single-axis", bench_flags.single_axis, "one RY per qubit instead of full Euler rotations");
    bench->add_option("--init", bench_flags.init, "vqe initialization: warm or uniform")
        ->check(CLI::IsMember({"warm", "uniform"}));
    add_noise_flags(bench, bench_flags);
    add_optimizer_flags(bench, bench_flags);

    RunFlags fetch_flags;
    auto* fetch = app.add_subcommand("fetch-data", "download the MNIST IDX files");
    fetch->add_option("--dataset-dir", fetch_flags.dataset_dir, "target directory");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitUsage;
    }

    try {
        if (qnn->parsed()) return cmd_qnn_train(qnn_flags);
        if (vqe->parsed()) return cmd_vqe(vqe_flags);
        if (bias->parsed()) return cmd_bias_check(bias_flags, bias_trials);
        if (bench->parsed())
            return cmd_bench(bench_flags, bench_workload, bench_nodes, bench_threshold,
                             threshold_opt->count() > 0);
        if (fetch->parsed()) {
            const fs::path dir = resolve_dataset_dir(fetch_flags.dataset_dir);
            std::string err;
            if (!fetch_mnist(dir, err)) {
                std::cerr << err << "\n";
                return kExitData;
            }
            std::cout << "MNIST files present in " << dir << "\n";
            return kExitOk;
        }
    } catch (const CLI::Error& e) {
        std::cerr << e.what() << "\n";
        return kExitUsage;
    } catch (const std::logic_error& e) {
        std::cerr << "internal invariant violation: " << e.what() << "\n";
        return kExitInternal;
    } catch (const std::exception& e) {
        std::cerr << e.what() << "\n";
        return kExitData;
    }
    return kExitUsage;
}
