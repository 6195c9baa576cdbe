#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "qudio/engine.hpp"

namespace qudio {

// Time-averaged squared gradient norm over rounds 1..T (round 0 is the
// untrained snapshot). Requires the trace to carry grad_norm_sq per round.
double utility_r1(const TrainingTrace& trace);

// Smoothness and Lipschitz constants of the regularized square loss:
// S = (3/2 + lambda) d^2, G1 = d (1 + 3 pi lambda).
struct BoundConstants {
    double smoothness = 0.0; // S
    double lipschitz = 0.0;  // G1
};
BoundConstants bound_constants(int n_params, double lambda);

// Moments of the shot-sampled QNN gradient component under depolarization.
// c1 is the mean offset: E[estimated grad_j] = (1-p~)^2 grad_j + c1. c2/c3
// are the cross-term coefficients of the zero-mean fluctuation, c4/c5 the
// shot variances of the unshifted and shifted sample means.
struct GradMomentConstants {
    double c1 = 0.0, c2 = 0.0, c3 = 0.0, c4 = 0.0, c5 = 0.0;
};
GradMomentConstants gradient_moment_constants(double y_hat, double y_plus, double y_minus, double label,
                                 double theta_j, double p_tilde, double lambda, long shots);

struct BiasComponent {
    double analytic_grad = 0.0;
    double predicted_mean = 0.0;
    double empirical_mean = 0.0;
    double std_error = 0.0;
    GradMomentConstants constants;
    bool pass = false; // |empirical - predicted| <= 4 stderr
};

struct BiasCheckReport {
    double p = 0.0;
    double p_tilde = 0.0;
    long shots = 0;
    int trials = 0;
    double lambda = 0.0;
    int circuit_depth = 0;
    std::vector<BiasComponent> components;

    int n_pass() const;
    double pass_fraction() const;
    std::string to_json() const; // full inputs echoed for auditability
};

// Monte Carlo verification of the estimated-gradient mean relation: M draws
// of the shot-sampled gradient at fixed (theta, example), compared
// componentwise against the predicted mean at 4 standard errors.
BiasCheckReport bias_check(std::span<const double> params, const EncodedExample& example,
                           const QnnLossSpec& spec, double p, long shots, int trials, Rng& rng);

// Right-hand side of the convergence bound with the hidden constant set to 1:
//   lambda d sqrt(S/T) + sqrt(S/T) (4 W^2 sigma^2 + 2 W^2 G2^2) + W^2 (p~ d + p~ d / K).
// Reported as a diagnostic overlay only; never a pass/fail gate.
double convergence_bound(const BoundConstants& constants, double sigma_sq, double g2, double lambda,
                      int n_params, int local_steps, int global_rounds, double p_tilde,
                      long shots);

struct SpeedupRow {
    int nodes = 0;
    bool reached = false;
    double time_to_threshold = 0.0; // wall-clock of first round with metric >= threshold
    double speedup = 0.0;           // baseline time / this time (when both reached)
    double fixed_t_time = 0.0;      // wall-clock of the full run
    double fixed_t_ratio = 0.0;     // baseline full-run time / this full-run time
};

// Time-to-threshold and fixed-T wall-clock ratios against the Q=1 baseline.
std::vector<SpeedupRow> speedup_metrics(const std::map<int, TrainingTrace>& traces,
                                        double threshold);

} // namespace qudio
