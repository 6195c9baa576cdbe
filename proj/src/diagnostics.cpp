#include "qudio/diagnostics.hpp"

#include <cmath>
#include <stdexcept>

#include <json.hpp>

namespace qudio {

namespace {
constexpr double kPi = 3.14159265358979323846;
}

double utility_r1(const TrainingTrace& trace) {
    if (trace.rows.size() < 2) throw std::invalid_argument("trace has no training rounds");
    double acc = 0.0;
    int count = 0;
    for (std::size_t t = 1; t < trace.rows.size(); ++t) {
        const double g = trace.rows[t].grad_norm_sq;
        if (std::isnan(g)) throw std::invalid_argument("trace is missing grad_norm_sq entries");
        acc += g;
        ++count;
    }
    return acc / double(count);
}

BoundConstants bound_constants(int n_params, double lambda) {
    if (n_params < 1) throw std::invalid_argument("parameter count must be >= 1");
    if (lambda < 0.0) throw std::invalid_argument("regularizer must be >= 0");
    const double d = double(n_params);
    return {(1.5 + lambda) * d * d, d * (1.0 + 3.0 * kPi * lambda)};
}

GradMomentConstants gradient_moment_constants(double y_hat, double y_plus, double y_minus, double label,
                                 double theta_j, double p_tilde, double lambda, long shots) {
    if (shots < 1) throw std::invalid_argument("shot count must be >= 1");
    const double q = p_tilde;
    const double shift = 0.5 * (y_plus - y_minus);
    const double k = double(shots);
    GradMomentConstants c;
    // Mean offset, derived from E[sample mean] = (1-p~) y + p~/2 for the
    // rank-2^{N-1} projector observable and independent shifted estimates.
    c.c1 = (1.0 - q) * q * (0.5 - label) * shift + (2.0 * q - q * q) * lambda * theta_j;
    c.c2 = (1.0 - q) * (y_plus - y_minus);
    c.c3 = (1.0 - q) * y_hat + 0.5 * q - label;
    auto noisy = [&](double y) { return (1.0 - q) * y + 0.5 * q; };
    auto bern_var = [&](double y) {
        const double m = noisy(y);
        return m * (1.0 - m) / k;
    };
    c.c4 = bern_var(y_hat);
    c.c5 = bern_var(y_plus) + bern_var(y_minus);
    return c;
}

int BiasCheckReport::n_pass() const {
    int n = 0;
    for (const BiasComponent& c : components)
        if (c.pass) ++n;
    return n;
}

double BiasCheckReport::pass_fraction() const {
    if (components.empty()) return 0.0;
    return double(n_pass()) / double(components.size());
}

std::string BiasCheckReport::to_json() const {
    nlohmann::json j;
    j["p"] = p;
    j["p_tilde"] = p_tilde;
    j["shots"] = shots;
    j["trials"] = trials;
    j["lambda"] = lambda;
    j["circuit_depth"] = circuit_depth;
    j["n_components"] = components.size();
    j["n_pass"] = n_pass();
    j["pass_fraction"] = pass_fraction();
    auto& comps = j["components"] = nlohmann::json::array();
    for (const BiasComponent& c : components) {
        comps.push_back({{"analytic_grad", c.analytic_grad},
                         {"predicted_mean", c.predicted_mean},
                         {"empirical_mean", c.empirical_mean},
                         {"std_error", c.std_error},
                         {"pass", c.pass},
                         {"c1", c.constants.c1},
                         {"c2", c.constants.c2},
                         {"c3", c.constants.c3},
                         {"c4", c.constants.c4},
                         {"c5", c.constants.c5}});
    }
    return j.dump(2);
}

BiasCheckReport bias_check(std::span<const double> params, const EncodedExample& example,
                           const QnnLossSpec& spec, double p, long shots, int trials, Rng& rng) {
    if (trials < 2) throw std::invalid_argument("bias check needs at least 2 trials");
    const int d = spec.circuit.n_params;
    const double p_tilde = effective_depolarization(p, spec.circuit.depth());

    // The 2d+1 ideal expectations are fixed across trials; only the shot
    // sampling varies, so precompute them once.
    const NoiseModel exact{p, NoiseModel::kAnalytic};
    std::vector<double> shifted(params.begin(), params.end());
    const double y_hat_ideal = qnn_forward(params, example, spec);
    const double prob = qnn_forward(params, example, spec, exact, nullptr);
    std::vector<double> plus_ideal(d), minus_ideal(d), prob_plus(d), prob_minus(d);
    for (int j = 0; j < d; ++j) {
        shifted[j] = params[j] + kPi / 2.0;
        plus_ideal[j] = qnn_forward(shifted, example, spec);
        prob_plus[j] = qnn_forward(shifted, example, spec, exact, nullptr);
        shifted[j] = params[j] - kPi / 2.0;
        minus_ideal[j] = qnn_forward(shifted, example, spec);
        prob_minus[j] = qnn_forward(shifted, example, spec, exact, nullptr);
        shifted[j] = params[j];
    }
    const GradEstimate analytic = qnn_grad_analytic(params, example, spec);

    std::vector<double> sum(d, 0.0), sum_sq(d, 0.0);
    const double label = double(example.label);
    for (int m = 0; m < trials; ++m) {
        const double y_bar = sample_two_outcome(prob, shots, rng);
        for (int j = 0; j < d; ++j) {
            const double plus_bar = sample_two_outcome(prob_plus[j], shots, rng);
            const double minus_bar = sample_two_outcome(prob_minus[j], shots, rng);
            const double g =
                (y_bar - label) * 0.5 * (plus_bar - minus_bar) + spec.lambda * params[j];
            sum[j] += g;
            sum_sq[j] += g * g;
        }
    }

    BiasCheckReport report;
    report.p = p;
    report.p_tilde = p_tilde;
    report.shots = shots;
    report.trials = trials;
    report.lambda = spec.lambda;
    report.circuit_depth = spec.circuit.depth();
    report.components.resize(d);
    const double attenuation = (1.0 - p_tilde) * (1.0 - p_tilde);
    for (int j = 0; j < d; ++j) {
        BiasComponent& c = report.components[j];
        c.constants = gradient_moment_constants(y_hat_ideal, plus_ideal[j], minus_ideal[j], label,
                                       params[j], p_tilde, spec.lambda, shots);
        c.analytic_grad = analytic.values[j];
        c.predicted_mean = attenuation * c.analytic_grad + c.constants.c1;
        c.empirical_mean = sum[j] / double(trials);
        const double var =
            std::max(0.0, (sum_sq[j] - sum[j] * sum[j] / double(trials)) / double(trials - 1));
        c.std_error = std::sqrt(var / double(trials));
        const double gap = std::abs(c.empirical_mean - c.predicted_mean);
        c.pass = gap <= 4.0 * c.std_error + 1e-12; // degenerate estimators pass when exact
    }
    return report;
}

double convergence_bound(const BoundConstants& constants, double sigma_sq, double g2, double lambda,
                      int n_params, int local_steps, int global_rounds, double p_tilde,
                      long shots) {
    if (global_rounds < 1) throw std::invalid_argument("round count must be >= 1");
    const double d = double(n_params);
    const double w = double(local_steps);
    const double rate = std::sqrt(constants.smoothness / double(global_rounds));
    const double drift = rate * (4.0 * w * w * sigma_sq + 2.0 * w * w * g2 * g2);
    const double inv_k = shots == NoiseModel::kAnalytic ? 0.0 : 1.0 / double(shots);
    const double residual = w * w * (p_tilde * d + p_tilde * d * inv_k);
    return lambda * d * rate + drift + residual;
}

std::vector<SpeedupRow> speedup_metrics(const std::map<int, TrainingTrace>& traces,
                                        double threshold) {
    if (traces.empty()) throw std::invalid_argument("no traces");
    const auto baseline_it = traces.begin(); // smallest Q is the baseline
    auto time_to = [&](const TrainingTrace& trace) -> std::optional<double> {
        for (const TraceRow& row : trace.rows)
            if (row.metric >= threshold) return row.wall_clock_s;
        return std::nullopt;
    };
    const std::optional<double> base_time = time_to(baseline_it->second);
    const double base_total = baseline_it->second.rows.back().wall_clock_s;
    std::vector<SpeedupRow> rows;
    for (const auto& [q, trace] : traces) {
        SpeedupRow row;
        row.nodes = q;
        row.fixed_t_time = trace.rows.back().wall_clock_s;
        row.fixed_t_ratio =
            row.fixed_t_time > 0.0 ? base_total / row.fixed_t_time
                                   : (base_total == 0.0 ? 1.0 : 0.0);
        const std::optional<double> t = time_to(trace);
        row.reached = t.has_value();
        if (t) {
            row.time_to_threshold = *t;
            if (base_time && *t > 0.0) row.speedup = *base_time / *t;
            else if (base_time && *base_time == 0.0 && *t == 0.0) row.speedup = 1.0;
        }
        rows.push_back(row);
    }
    return rows;
}

} // namespace qudio
