#include "qudio/gradient.hpp"

#include <cmath>
#include <stdexcept>

namespace qudio {

namespace {

constexpr double kHalfPi = 1.57079632679489661923;

void run_circuit_into(const Circuit& circuit, const StateVector& in,
                      std::span<const double> params, StateVector& out) {
    out = in;
    for (const Gate& g : circuit.gates) apply_gate_inplace(out, g, params);
}

double ideal_prediction(std::span<const double> params, const EncodedExample& example,
                        const QnnLossSpec& spec, StateVector& scratch) {
    run_circuit_into(spec.circuit, example.state, params, scratch);
    return expectation_projector(scratch, spec.measured_qubit);
}

double norm_sq(std::span<const double> v) {
    double s = 0.0;
    for (double x : v) s += x * x;
    return s;
}

} // namespace

double QnnLossSpec::projector_trace() const {
    return double(std::size_t(1) << (circuit.n_qubits - 1));
}

double qnn_forward(std::span<const double> params, const EncodedExample& example,
                   const QnnLossSpec& spec, const NoiseModel& noise, Rng* rng) {
    if (params.size() != std::size_t(spec.circuit.n_params))
        throw std::invalid_argument("parameter count mismatch");
    thread_local StateVector scratch;
    const double ideal = ideal_prediction(params, example, spec, scratch);
    if (noise.ideal()) return ideal;
    const double p_tilde = effective_depolarization(noise.p, spec.circuit.depth());
    const double prob =
        noisy_expectation(ideal, spec.projector_trace(), spec.circuit.n_qubits, p_tilde);
    if (noise.analytic_shots()) return prob;
    if (!rng) throw std::invalid_argument("shot sampling needs an rng stream");
    return sample_two_outcome(prob, noise.shots, *rng);
}

double qnn_loss_single(double y_hat, int label, std::span<const double> params, double lambda) {
    const double r = y_hat - double(label);
    return 0.5 * r * r + lambda * norm_sq(params);
}

double qnn_loss(std::span<const double> params, const std::vector<EncodedExample>& data,
                const std::vector<int>& subset, const QnnLossSpec& spec) {
    if (subset.empty()) throw std::invalid_argument("loss over an empty subset");
    thread_local StateVector scratch;
    double acc = 0.0;
    for (int idx : subset) {
        const double r =
            ideal_prediction(params, data.at(idx), spec, scratch) - double(data.at(idx).label);
        acc += r * r;
    }
    return acc / (2.0 * double(subset.size())) + spec.lambda * norm_sq(params);
}

GradEstimate qnn_grad_analytic(std::span<const double> params, const EncodedExample& example,
                               const QnnLossSpec& spec) {
    const int d = spec.circuit.n_params;
    if (params.size() != std::size_t(d)) throw std::invalid_argument("parameter count mismatch");
    thread_local StateVector scratch;
    std::vector<double> shifted(params.begin(), params.end());
    const double y_hat = ideal_prediction(params, example, spec, scratch);
    GradEstimate grad;
    grad.mode = GradMode::AnalyticIdeal;
    grad.values.resize(d);
    for (int j = 0; j < d; ++j) {
        shifted[j] = params[j] + kHalfPi;
        const double plus = ideal_prediction(shifted, example, spec, scratch);
        shifted[j] = params[j] - kHalfPi;
        const double minus = ideal_prediction(shifted, example, spec, scratch);
        shifted[j] = params[j];
        grad.values[j] = (y_hat - double(example.label)) * 0.5 * (plus - minus) +
                         spec.lambda * params[j];
    }
    return grad;
}

GradEstimate qnn_grad_estimated(std::span<const double> params, const EncodedExample& example,
                                const QnnLossSpec& spec, const NoiseModel& noise, Rng& rng) {
    const int d = spec.circuit.n_params;
    if (params.size() != std::size_t(d)) throw std::invalid_argument("parameter count mismatch");
    noise.validate(); // analytic shots allowed: infinite-measurement limit of the estimator
    std::vector<double> shifted(params.begin(), params.end());
    // 2 d_Q + 1 independent sample means, fresh shots each.
    const double y_bar = qnn_forward(params, example, spec, noise, &rng);
    GradEstimate grad;
    grad.mode = GradMode::ShotNoisy;
    grad.values.resize(d);
    for (int j = 0; j < d; ++j) {
        shifted[j] = params[j] + kHalfPi;
        const double plus = qnn_forward(shifted, example, spec, noise, &rng);
        shifted[j] = params[j] - kHalfPi;
        const double minus = qnn_forward(shifted, example, spec, noise, &rng);
        shifted[j] = params[j];
        grad.values[j] = (y_bar - double(example.label)) * 0.5 * (plus - minus) +
                         spec.lambda * params[j];
    }
    if (!noise.analytic_shots()) grad.shots_used = noise.shots * (2L * d + 1L);
    return grad;
}

std::vector<double> qnn_grad_dataset(std::span<const double> params,
                                     const std::vector<EncodedExample>& data,
                                     const std::vector<int>& subset, const QnnLossSpec& spec) {
    if (subset.empty()) throw std::invalid_argument("gradient over an empty subset");
    const int d = spec.circuit.n_params;
    thread_local StateVector scratch;
    std::vector<double> shifted(params.begin(), params.end());
    std::vector<double> grad(d, 0.0);
    for (int idx : subset) {
        const EncodedExample& example = data.at(idx);
        const double y_hat = ideal_prediction(params, example, spec, scratch);
        for (int j = 0; j < d; ++j) {
            shifted[j] = params[j] + kHalfPi;
            const double plus = ideal_prediction(shifted, example, spec, scratch);
            shifted[j] = params[j] - kHalfPi;
            const double minus = ideal_prediction(shifted, example, spec, scratch);
            shifted[j] = params[j];
            grad[j] += (y_hat - double(example.label)) * 0.5 * (plus - minus);
        }
    }
    for (int j = 0; j < d; ++j)
        grad[j] = grad[j] / double(subset.size()) + spec.lambda * params[j];
    return grad;
}

VqeSpec make_h2_vqe_spec(bool single_axis) {
    return {build_vqe_ansatz(single_axis), init_basis_state("1100")};
}

namespace {

bool is_identity_string(const PauliString& string) {
    for (PauliOp op : string.ops)
        if (op != PauliOp::I) return false;
    return true;
}

} // namespace

double vqe_energy(std::span<const double> params, const VqeSpec& spec, const Hamiltonian& ham,
                  const std::vector<int>& subset, long shots, Rng* rng, double p_tilde) {
    if (params.size() != std::size_t(spec.circuit.n_params))
        throw std::invalid_argument("parameter count mismatch");
    if (ham.n_qubits != spec.circuit.n_qubits)
        throw std::invalid_argument("hamiltonian dimension does not match ansatz");
    if (subset.empty()) return 0.0;
    thread_local StateVector evolved;
    run_circuit_into(spec.circuit, spec.initial_state, params, evolved);
    if (shots == NoiseModel::kAnalytic) {
        if (p_tilde == 0.0) return expectation_pauli_sum(evolved, ham, subset);
        // Pauli strings are traceless, so the channel scales every term by
        // (1 - p_tilde) except the all-identity one.
        double acc = 0.0;
        for (int idx : subset) {
            const PauliTerm& term = ham.terms.at(idx);
            acc += is_identity_string(term.string)
                       ? term.coeff
                       : (1.0 - p_tilde) * expectation_pauli_term(evolved, term);
        }
        return acc;
    }
    if (!rng) throw std::invalid_argument("shot sampling needs an rng stream");
    double acc = 0.0;
    for (int idx : subset)
        acc += sample_pauli_expectation(evolved, ham.terms.at(idx), shots, *rng, p_tilde);
    return acc;
}

GradEstimate vqe_grad(std::span<const double> params, const VqeSpec& spec, const Hamiltonian& ham,
                      const std::vector<int>& subset, long shots, Rng* rng, double p_tilde) {
    const int d = spec.circuit.n_params;
    if (params.size() != std::size_t(d)) throw std::invalid_argument("parameter count mismatch");
    std::vector<double> shifted(params.begin(), params.end());
    GradEstimate grad;
    grad.mode = shots == NoiseModel::kAnalytic ? GradMode::AnalyticIdeal : GradMode::ShotNoisy;
    grad.values.resize(d);
    for (int j = 0; j < d; ++j) {
        shifted[j] = params[j] + kHalfPi;
        const double plus = vqe_energy(shifted, spec, ham, subset, shots, rng, p_tilde);
        shifted[j] = params[j] - kHalfPi;
        const double minus = vqe_energy(shifted, spec, ham, subset, shots, rng, p_tilde);
        shifted[j] = params[j];
        grad.values[j] = 0.5 * (plus - minus);
    }
    if (shots != NoiseModel::kAnalytic)
        grad.shots_used = shots * 2L * d * long(subset.size());
    return grad;
}

std::vector<double> finite_difference(const std::function<double(std::span<const double>)>& fn,
                                      std::span<const double> params, double eps) {
    if (eps <= 0.0) throw std::invalid_argument("epsilon must be positive");
    std::vector<double> shifted(params.begin(), params.end());
    std::vector<double> grad(params.size());
    for (std::size_t j = 0; j < params.size(); ++j) {
        shifted[j] = params[j] + eps;
        const double plus = fn(shifted);
        shifted[j] = params[j] - eps;
        const double minus = fn(shifted);
        shifted[j] = params[j];
        grad[j] = (plus - minus) / (2.0 * eps);
    }
    return grad;
}

} // namespace qudio
