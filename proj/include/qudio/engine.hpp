#pragma once

#include <cmath>
#include <condition_variable>
#include <functional>
#include <iosfwd>
#include <mutex>
#include <thread>
#include <vector>

#include "qudio/dataset.hpp"
#include "qudio/gradient.hpp"
#include "qudio/pauli.hpp"

namespace qudio {

enum class Workload { Qnn, Vqe };

struct DecaySchedule {
    double factor = 0.1;
    int period = 40; // in global rounds
};

// eta_t = eta0 * factor^floor(t / period).
double lr_schedule(double lr0, double factor, int period, int round);

struct GlobalConfig {
    Workload workload = Workload::Qnn;
    int nodes = 1;         // Q
    int local_steps = 1;   // W
    int global_rounds = 1; // T
    double lr = 0.01;
    double momentum = 0.9;
    DecaySchedule decay;
    double lambda = 0.0;
    NoiseModel noise;
    std::uint64_t seed = 0;
    bool carry_momentum = false; // default: reset buffers at every synchronization
    int grad_norm_stride = 1;    // 0 disables the ideal gradient-norm column
    int threads = 0;             // 0: hardware concurrency
    double stop_at_accuracy = std::nan(""); // QNN: stop once the metric reaches this
    double init_scale = 1.0; // theta^(0) ~ init_center + U[0, 2 pi * init_scale)^d
    std::vector<double> init_center; // empty = origin (the plain uniform draw)

    void validate() const;
};

// One classical-momentum step: v' = beta v + g; theta' = theta - lr v'.
void sgd_step(std::vector<double>& params, std::span<const double> grad, double lr,
              std::vector<double>& velocity, double beta);

// Unweighted componentwise mean of the node parameter vectors.
std::vector<double> synchronize(const std::vector<std::vector<double>>& node_params);

// W sequential SGD steps with gradients drawn from `sample_grad`.
using GradSampler = std::function<std::vector<double>(std::span<const double>, Rng&)>;
std::vector<double> local_update_loop(std::vector<double> params, int steps, double lr,
                                      double beta, std::vector<double>& velocity,
                                      const GradSampler& sample_grad, Rng& rng);

int predict_label(double y_hat); // 0 iff y_hat <= 0.5

// Fraction of correct predictions; in shot mode each prediction thresholds a
// fresh K-shot sample mean.
double evaluate_accuracy(std::span<const double> params, const std::vector<EncodedExample>& data,
                         const QnnLossSpec& spec, const NoiseModel& noise = {},
                         Rng* rng = nullptr);

struct TraceRow {
    int round = 0;
    double wall_clock_s = 0.0;
    double train_loss = 0.0;
    double grad_norm_sq = std::nan("");
    double metric = 0.0; // test accuracy (QNN) or analytic energy (VQE)
};

struct TrainingTrace {
    Workload workload = Workload::Qnn;
    std::vector<TraceRow> rows;                 // T+1 rows including round 0
    std::vector<std::vector<double>> params;    // synchronized theta per row

    const std::vector<double>& final_params() const { return params.back(); }
    void write_csv(std::ostream& out) const; // round,wall_clock_s,train_loss,grad_norm_sq,metric
};

struct QnnProblem {
    std::vector<EncodedExample> train;
    std::vector<EncodedExample> test;
    QnnLossSpec spec;
};

struct VqeProblem {
    VqeSpec spec;
    Hamiltonian ham;

    // Rotation angles that prepare the reference determinant |1100> through
    // the entangling chain; the conventional VQE warm start.
    std::vector<double> reference_params() const;
};

// Assemble the image-classification workload from MNIST IDX files. The
// regularizer strength is stamped from the run config, not here.
QnnProblem build_qnn_problem(const std::filesystem::path& dataset_dir, int n_blocks,
                             const DistillOptions& distill_options);

VqeProblem build_vqe_problem(const std::filesystem::path& hamiltonian_file,
                             bool single_axis = false);

// The full protocol: T rounds of broadcast, W parallel local steps on Q nodes,
// barrier, parameter averaging; theta^(0) drawn uniformly from [0, 2pi)^d.
TrainingTrace run_qudio(const GlobalConfig& config, const QnnProblem& problem);
TrainingTrace run_qudio(const GlobalConfig& config, const VqeProblem& problem);

// Persistent bulk-synchronous worker pool; results are keyed by task index so
// the outcome is independent of thread scheduling.
class WorkerPool {
public:
    explicit WorkerPool(int n_threads);
    ~WorkerPool();
    WorkerPool(const WorkerPool&) = delete;
    WorkerPool& operator=(const WorkerPool&) = delete;

    void parallel_for(int n_tasks, const std::function<void(int)>& task);

private:
    void worker();

    std::vector<std::thread> threads_;
    std::mutex mutex_;
    std::condition_variable work_ready_;
    std::condition_variable round_done_;
    const std::function<void(int)>* task_ = nullptr;
    std::uint64_t generation_ = 0;
    int next_task_ = 0;
    int tasks_total_ = 0;
    int tasks_done_ = 0;
    bool stop_ = false;
    std::exception_ptr failure_;
};

} // namespace qudio
