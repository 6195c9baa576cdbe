#include "qudio/engine.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <ostream>
#include <stdexcept>

namespace qudio {

namespace {

// Stream ids: 0 is the theta^(0) draw, nodes use 1..Q keyed by round, and the
// metric evaluator gets its own id so recording never perturbs training.
constexpr std::uint64_t kThetaStream = 0;
constexpr std::uint64_t kNodeStreamBase = 1;
constexpr std::uint64_t kMetricStream = 0x4d4554524943ULL;

double sq_norm(std::span<const double> v) {
    double s = 0.0;
    for (double x : v) s += x * x;
    return s;
}

} // namespace

double lr_schedule(double lr0, double factor, int period, int round) {
    if (period < 1) throw std::invalid_argument("decay period must be >= 1");
    return lr0 * std::pow(factor, round / period);
}

void GlobalConfig::validate() const {
    if (nodes < 1) throw std::invalid_argument("node count must be >= 1");
    if (local_steps < 1) throw std::invalid_argument("local step count must be >= 1");
    if (global_rounds < 1) throw std::invalid_argument("global round count must be >= 1");
    if (lr <= 0.0) throw std::invalid_argument("learning rate must be positive");
    if (momentum < 0.0 || momentum >= 1.0) throw std::invalid_argument("momentum outside [0,1)");
    if (decay.factor <= 0.0 || decay.factor > 1.0)
        throw std::invalid_argument("decay factor outside (0,1]");
    if (decay.period < 1) throw std::invalid_argument("decay period must be >= 1");
    if (lambda < 0.0) throw std::invalid_argument("regularizer must be >= 0");
    if (grad_norm_stride < 0) throw std::invalid_argument("grad-norm stride must be >= 0");
    if (threads < 0) throw std::invalid_argument("thread count must be >= 0");
    if (init_scale <= 0.0 || init_scale > 1.0)
        throw std::invalid_argument("init scale outside (0,1]");
    noise.validate();
}

void sgd_step(std::vector<double>& params, std::span<const double> grad, double lr,
              std::vector<double>& velocity, double beta) {
    if (params.size() != grad.size() || params.size() != velocity.size())
        throw std::invalid_argument("dimension mismatch in sgd step");
    for (std::size_t j = 0; j < params.size(); ++j) {
        velocity[j] = beta * velocity[j] + grad[j];
        params[j] -= lr * velocity[j];
    }
}

std::vector<double> synchronize(const std::vector<std::vector<double>>& node_params) {
    if (node_params.empty()) throw std::invalid_argument("synchronize over no nodes");
    const std::size_t d = node_params.front().size();
    std::vector<double> mean(d, 0.0);
    for (const auto& p : node_params) {
        if (p.size() != d) throw std::invalid_argument("node parameter lengths differ");
        for (std::size_t j = 0; j < d; ++j) mean[j] += p[j];
    }
    const double inv = 1.0 / double(node_params.size());
    for (double& v : mean) v *= inv;
    return mean;
}

std::vector<double> local_update_loop(std::vector<double> params, int steps, double lr,
                                      double beta, std::vector<double>& velocity,
                                      const GradSampler& sample_grad, Rng& rng) {
    if (velocity.size() != params.size())
        throw std::invalid_argument("velocity buffer dimension mismatch");
    for (int w = 0; w < steps; ++w) {
        const std::vector<double> grad = sample_grad(params, rng);
        sgd_step(params, grad, lr, velocity, beta);
    }
    return params;
}

int predict_label(double y_hat) { return y_hat <= 0.5 ? 0 : 1; }

double evaluate_accuracy(std::span<const double> params, const std::vector<EncodedExample>& data,
                         const QnnLossSpec& spec, const NoiseModel& noise, Rng* rng) {
    if (data.empty()) throw std::invalid_argument("accuracy over an empty dataset");
    int correct = 0;
    for (const EncodedExample& example : data) {
        const double y_hat = qnn_forward(params, example, spec, noise, rng);
        if (predict_label(y_hat) == example.label) ++correct;
    }
    return double(correct) / double(data.size());
}

void TrainingTrace::write_csv(std::ostream& out) const {
    out << "round,wall_clock_s,train_loss,grad_norm_sq,metric\n";
    char buffer[256];
    for (const TraceRow& row : rows) {
        std::snprintf(buffer, sizeof buffer, "%d,%.9f,%.17g,%.17g,%.17g\n", row.round,
                      row.wall_clock_s, row.train_loss, row.grad_norm_sq, row.metric);
        out << buffer;
    }
}

WorkerPool::WorkerPool(int n_threads) {
    const int hw = int(std::thread::hardware_concurrency());
    const int count = std::max(1, n_threads > 0 ? n_threads : hw);
    threads_.reserve(count);
    for (int i = 0; i < count; ++i) threads_.emplace_back([this] { worker(); });
}

WorkerPool::~WorkerPool() {
    {
        std::lock_guard lock(mutex_);
        stop_ = true;
    }
    work_ready_.notify_all();
    for (std::thread& t : threads_) t.join();
}

void WorkerPool::worker() {
    std::uint64_t seen = 0;
    while (true) {
        std::unique_lock lock(mutex_);
        work_ready_.wait(lock, [&] { return stop_ || generation_ != seen; });
        if (stop_) return;
        seen = generation_;
        while (next_task_ < tasks_total_) {
            const int index = next_task_++;
            lock.unlock();
            try {
                (*task_)(index);
            } catch (...) {
                lock.lock();
                if (!failure_) failure_ = std::current_exception();
                ++tasks_done_;
                continue;
            }
            lock.lock();
            ++tasks_done_;
        }
        if (tasks_done_ == tasks_total_) round_done_.notify_all();
    }
}

void WorkerPool::parallel_for(int n_tasks, const std::function<void(int)>& task) {
    std::unique_lock lock(mutex_);
    task_ = &task;
    next_task_ = 0;
    tasks_done_ = 0;
    tasks_total_ = n_tasks;
    failure_ = nullptr;
    ++generation_;
    work_ready_.notify_all();
    round_done_.wait(lock, [&] { return tasks_done_ == tasks_total_; });
    task_ = nullptr;
    if (failure_) std::rethrow_exception(failure_);
}

namespace {

struct RoundMetrics {
    double train_loss = 0.0;
    double grad_norm_sq = std::nan("");
    double metric = 0.0;
};

// Shared driver for both workloads. `sampler_for` builds the per-node gradient
// sampler; `evaluate` fills the trace row for a synchronized parameter vector.
TrainingTrace drive_qudio(const GlobalConfig& config, int n_params, Workload workload,
                          const std::function<GradSampler(int)>& sampler_for,
                          const std::function<RoundMetrics(std::span<const double>, int)>& evaluate) {
    config.validate();
    const int q = config.nodes;

    std::vector<double> theta(n_params);
    Rng init_rng = make_stream(config.seed, kThetaStream, 0);
    if (!config.init_center.empty() && config.init_center.size() != std::size_t(n_params))
        throw std::invalid_argument("init center dimension mismatch");
    for (int j = 0; j < n_params; ++j) {
        theta[j] = uniform_angle(init_rng) * config.init_scale;
        if (!config.init_center.empty()) theta[j] += config.init_center[j];
    }

    std::vector<GradSampler> samplers;
    samplers.reserve(q);
    for (int i = 0; i < q; ++i) samplers.push_back(sampler_for(i));

    std::vector<std::vector<double>> node_params(q, std::vector<double>(n_params, 0.0));
    std::vector<std::vector<double>> velocity(q, std::vector<double>(n_params, 0.0));

    WorkerPool pool(config.threads > 0 ? std::min(config.threads, q)
                                       : std::min<int>(q, std::max(1u, std::thread::hardware_concurrency())));

    TrainingTrace trace;
    trace.workload = workload;
    auto record = [&](int round, double wall) {
        const RoundMetrics m = evaluate(theta, round);
        trace.rows.push_back({round, wall, m.train_loss, m.grad_norm_sq, m.metric});
        trace.params.push_back(theta);
        return m.metric;
    };

    double wall = 0.0;
    double metric = record(0, wall);
    const bool stop_enabled = config.workload == Workload::Qnn && !std::isnan(config.stop_at_accuracy);
    if (stop_enabled && metric >= config.stop_at_accuracy) return trace;

    for (int t = 0; t < config.global_rounds; ++t) {
        const double lr = lr_schedule(config.lr, config.decay.factor, config.decay.period, t);
        const auto start = std::chrono::steady_clock::now();
        pool.parallel_for(q, [&](int node) {
            if (!config.carry_momentum)
                std::fill(velocity[node].begin(), velocity[node].end(), 0.0);
            Rng rng = make_stream(config.seed, kNodeStreamBase + std::uint64_t(node),
                                  std::uint64_t(t));
            node_params[node] = local_update_loop(theta, config.local_steps, lr, config.momentum,
                                                  velocity[node], samplers[node], rng);
        });
        theta = synchronize(node_params);
        for (double v : theta)
            if (!std::isfinite(v)) throw std::logic_error("non-finite parameter after synchronization");
        wall += std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        metric = record(t + 1, wall);
        if (stop_enabled && metric >= config.stop_at_accuracy) break;
    }
    return trace;
}

} // namespace

QnnProblem build_qnn_problem(const std::filesystem::path& dataset_dir, int n_blocks,
                             const DistillOptions& distill_options) {
    const MnistPaths paths = MnistPaths::in(dataset_dir);
    std::vector<RawExample> train_split = load_idx(paths.train_images, paths.train_labels);
    std::vector<RawExample> test_split = load_idx(paths.test_images, paths.test_labels);
    DistilledDataset distilled = distill(train_split, test_split, distill_options);
    QnnProblem problem;
    problem.train = std::move(distilled.train);
    problem.test = std::move(distilled.test);
    problem.spec.circuit = build_qnn_ansatz(kEncodedQubits, n_blocks);
    problem.spec.measured_qubit = kEncodedQubits - 1;
    return problem;
}

std::vector<double> VqeProblem::reference_params() const {
    constexpr double pi = 3.14159265358979323846;
    const int d = spec.circuit.n_params;
    std::vector<double> center(d, 0.0);
    if (d == 4) {
        center[1] = pi;
        center[2] = pi;
    } else {
        center[4] = pi;  // the RY slot of qubit 1
        center[7] = pi;  // the RY slot of qubit 2
    }
    return center;
}

VqeProblem build_vqe_problem(const std::filesystem::path& hamiltonian_file, bool single_axis) {
    VqeProblem problem;
    problem.spec = make_h2_vqe_spec(single_axis);
    problem.ham = load_hamiltonian(hamiltonian_file);
    if (problem.ham.n_qubits != problem.spec.circuit.n_qubits)
        throw std::runtime_error(hamiltonian_file.string() + ": expected a 4-qubit hamiltonian");
    return problem;
}

TrainingTrace run_qudio(const GlobalConfig& config, const QnnProblem& problem) {
    if (config.workload != Workload::Qnn) throw std::invalid_argument("config is not a QNN config");
    if (problem.train.empty() || problem.test.empty())
        throw std::invalid_argument("empty dataset");
    QnnLossSpec spec = problem.spec;
    spec.lambda = config.lambda;
    const ShardPlan plan = shard(int(problem.train.size()), config.nodes, config.seed);

    std::vector<int> all_train(problem.train.size());
    for (int i = 0; i < int(all_train.size()); ++i) all_train[i] = i;

    auto sampler_for = [&](int node) -> GradSampler {
        const std::vector<int>& indices = plan.assignments[node];
        if (indices.empty()) throw std::invalid_argument("empty shard");
        return [&problem, &spec, &indices, noise = config.noise](std::span<const double> params,
                                                                 Rng& rng) {
            const int pick = indices[std::size_t(uniform01(rng) * indices.size())];
            const EncodedExample& example = problem.train[pick];
            if (noise.ideal()) return qnn_grad_analytic(params, example, spec).values;
            return qnn_grad_estimated(params, example, spec, noise, rng).values;
        };
    };

    auto evaluate = [&](std::span<const double> theta, int round) {
        RoundMetrics m;
        m.train_loss = qnn_loss(theta, problem.train, all_train, spec);
        if (config.grad_norm_stride > 0 && round % config.grad_norm_stride == 0)
            m.grad_norm_sq = sq_norm(qnn_grad_dataset(theta, problem.train, all_train, spec));
        if (config.noise.ideal()) {
            m.metric = evaluate_accuracy(theta, problem.test, spec);
        } else {
            Rng rng = make_stream(config.seed, kMetricStream, std::uint64_t(round));
            m.metric = evaluate_accuracy(theta, problem.test, spec, config.noise, &rng);
        }
        return m;
    };

    return drive_qudio(config, spec.circuit.n_params, Workload::Qnn, sampler_for, evaluate);
}

TrainingTrace run_qudio(const GlobalConfig& config, const VqeProblem& problem) {
    if (config.workload != Workload::Vqe) throw std::invalid_argument("config is not a VQE config");
    const Partition partition = partition_terms(problem.ham, config.nodes);
    const double p_tilde =
        effective_depolarization(config.noise.p, problem.spec.circuit.depth());

    std::vector<int> all_terms(problem.ham.terms.size());
    for (int i = 0; i < int(all_terms.size()); ++i) all_terms[i] = i;

    auto sampler_for = [&](int node) -> GradSampler {
        const std::vector<int>& subset = partition.index_sets[node];
        return [&problem, &subset, shots = config.noise.shots, p_tilde](
                   std::span<const double> params, Rng& rng) {
            return vqe_grad(params, problem.spec, problem.ham, subset, shots, &rng, p_tilde)
                .values;
        };
    };

    auto evaluate = [&](std::span<const double> theta, int round) {
        RoundMetrics m;
        m.metric = vqe_energy(theta, problem.spec, problem.ham, all_terms);
        m.train_loss = m.metric;
        if (config.grad_norm_stride > 0 && round % config.grad_norm_stride == 0)
            m.grad_norm_sq =
                sq_norm(vqe_grad(theta, problem.spec, problem.ham, all_terms).values);
        return m;
    };

    return drive_qudio(config, problem.spec.circuit.n_params, Workload::Vqe, sampler_for, evaluate);
}

} // namespace qudio
