#pragma once

#include <functional>
#include <span>
#include <vector>

#include "qudio/dataset.hpp"
#include "qudio/pauli.hpp"
#include "qudio/statevector.hpp"

namespace qudio {

struct QnnLossSpec {
    Circuit circuit;
    int measured_qubit = 0; // observable is |0><0| on this qubit
    double lambda = 0.0;

    double projector_trace() const; // Tr(O) = 2^{n-1}
};

enum class GradMode { AnalyticIdeal, ShotNoisy };

struct GradEstimate {
    std::vector<double> values;
    GradMode mode = GradMode::AnalyticIdeal;
    long shots_used = 0;
};

// Prediction h = Tr(O U rho U^dag). Under noise the depolarized expectation is
// formed in closed form; finite K draws a Bernoulli sample mean (rng required).
double qnn_forward(std::span<const double> params, const EncodedExample& example,
                   const QnnLossSpec& spec, const NoiseModel& noise = {}, Rng* rng = nullptr);

// Per-example loss: (y_hat - y)^2 / 2 + lambda * |theta|^2.
double qnn_loss_single(double y_hat, int label, std::span<const double> params, double lambda);

// Dataset loss: sum of squared errors / (2n) + lambda * |theta|^2 (ideal).
double qnn_loss(std::span<const double> params, const std::vector<EncodedExample>& data,
                const std::vector<int>& subset, const QnnLossSpec& spec);

// Parameter-shift gradient, component j:
//   (y_hat - y) * (y_hat(+j) - y_hat(-j)) / 2 + lambda * theta_j
// 2 d_Q + 1 forward evaluations. The regularizer enters as lambda * theta_j,
// not the 2*lambda*theta_j derivative of the penalty; see README.
GradEstimate qnn_grad_analytic(std::span<const double> params, const EncodedExample& example,
                               const QnnLossSpec& spec);

// Same shape with every expectation replaced by an independent K-shot sample
// mean of the depolarized probability.
GradEstimate qnn_grad_estimated(std::span<const double> params, const EncodedExample& example,
                                const QnnLossSpec& spec, const NoiseModel& noise, Rng& rng);

// Ideal full-subset gradient (mean over examples), for trace diagnostics.
std::vector<double> qnn_grad_dataset(std::span<const double> params,
                                     const std::vector<EncodedExample>& data,
                                     const std::vector<int>& subset, const QnnLossSpec& spec);

struct VqeSpec {
    Circuit circuit;
    StateVector initial_state;
};

VqeSpec make_h2_vqe_spec(bool single_axis = false); // |1100> input, fixed ansatz

// Energy over the subset's terms: analytic when shots == NoiseModel::kAnalytic,
// otherwise each term is estimated with K categorical shots. p_tilde applies
// the global depolarization channel (off by default for this workload).
double vqe_energy(std::span<const double> params, const VqeSpec& spec, const Hamiltonian& ham,
                  const std::vector<int>& subset, long shots = NoiseModel::kAnalytic,
                  Rng* rng = nullptr, double p_tilde = 0.0);

// Parameter-shift gradient (y_hat(+j) - y_hat(-j)) / 2 over the subset.
GradEstimate vqe_grad(std::span<const double> params, const VqeSpec& spec, const Hamiltonian& ham,
                      const std::vector<int>& subset, long shots = NoiseModel::kAnalytic,
                      Rng* rng = nullptr, double p_tilde = 0.0);

// Central differences (f(x+eps e_j) - f(x-eps e_j)) / (2 eps); the
// verification oracle for the shift rule.
std::vector<double> finite_difference(const std::function<double(std::span<const double>)>& fn,
                                      std::span<const double> params, double eps);

} // namespace qudio
