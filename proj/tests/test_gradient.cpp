#include <doctest.h>

#include <cmath>
#include <numeric>

#include "qudio/gradient.hpp"

using namespace qudio;

namespace {

constexpr double kPi = 3.14159265358979323846;

EncodedExample example_from_state(StateVector state, int label) {
    EncodedExample e;
    e.state = std::move(state);
    e.label = label;
    return e;
}

EncodedExample random_encoded_example(int n_qubits, int label, Rng& rng) {
    StateVector s(n_qubits);
    for (auto& a : s.amplitudes) a = cxd(uniform01(rng), 0.0);
    const double inv = 1.0 / std::sqrt(s.norm_sq());
    for (auto& a : s.amplitudes) a *= inv;
    return example_from_state(std::move(s), label);
}

QnnLossSpec one_qubit_ry_spec(double lambda = 0.0) {
    QnnLossSpec spec;
    spec.circuit.n_qubits = 1;
    spec.circuit.gates = {Gate::ry(0, 0)};
    spec.circuit.n_params = 1;
    spec.measured_qubit = 0;
    spec.lambda = lambda;
    return spec;
}

void check_grad_close(const std::vector<double>& got, const std::vector<double>& expected,
                      double abs_tol = 1e-6, double rel_tol = 1e-4) {
    REQUIRE(got.size() == expected.size());
    for (std::size_t j = 0; j < got.size(); ++j) {
        const double gap = std::abs(got[j] - expected[j]);
        const bool ok = gap <= abs_tol || gap <= rel_tol * std::abs(expected[j]);
        CHECK(ok);
        if (!ok)
            MESSAGE("component ", j, ": got ", got[j], " expected ", expected[j]);
    }
}

std::vector<int> iota_subset(int n) {
    std::vector<int> all(n);
    std::iota(all.begin(), all.end(), 0);
    return all;
}

} // namespace

TEST_CASE("qnn forward") {
    QnnLossSpec spec;
    spec.circuit = build_qnn_ansatz(6, 4);
    spec.measured_qubit = 5;
    const std::vector<double> zeros(72, 0.0);
    const EncodedExample e0 = example_from_state(init_basis_state("000000"), 0);

    // Rot(0) is the identity and the CNOT chain fixes |0...0>
    CHECK(qnn_forward(zeros, e0, spec) == doctest::Approx(1.0));

    // fully mixed: the rank-32 projector in dimension 64 reads 0.5
    Rng rng = make_stream(5, 0);
    std::vector<double> params(72);
    for (double& p : params) p = uniform_angle(rng);
    NoiseModel fully_mixed{1.0, NoiseModel::kAnalytic};
    CHECK(qnn_forward(params, e0, spec, fully_mixed) == doctest::Approx(0.5));

    // the analytic sentinel with p = 0 is exactly the ideal path
    NoiseModel ideal_sentinel{0.0, NoiseModel::kAnalytic};
    CHECK(qnn_forward(params, e0, spec, ideal_sentinel) == qnn_forward(params, e0, spec));

    CHECK_THROWS_AS(qnn_forward(std::vector<double>(3, 0.0), e0, spec), std::invalid_argument);
}

TEST_CASE("qnn loss") {
    // single-example form: (0.8 - 1)^2/2 + 0.1*2 = 0.22
    std::vector<double> theta = {1.0, -1.0};
    CHECK(qnn_loss_single(0.8, 1, theta, 0.1) == doctest::Approx(0.22));

    QnnLossSpec spec = one_qubit_ry_spec();
    std::vector<EncodedExample> data;
    data.push_back(example_from_state(init_basis_state("0"), 1));
    data.push_back(example_from_state(init_basis_state("1"), 0));
    // theta = 0: predictions are exactly the labels; zero loss at lambda = 0
    const std::vector<double> zero = {0.0};
    CHECK(qnn_loss(zero, data, {0, 1}, spec) == doctest::Approx(0.0));

    // lambda enters once, undivided by the subset size
    spec.lambda = 1.0;
    const std::vector<double> origin = {0.0};
    CHECK(qnn_loss(origin, data, {0, 1}, spec) == doctest::Approx(0.0)); // |theta|^2 = 0

    CHECK_THROWS_AS(qnn_loss(zero, data, {}, spec), std::invalid_argument);
}

TEST_CASE("qnn analytic gradient matches finite differences") {
    Rng rng = make_stream(31, 0);
    QnnLossSpec spec;
    spec.circuit = build_qnn_ansatz(4, 2);
    spec.measured_qubit = 3;
    spec.lambda = 0.0;
    for (int draw = 0; draw < 20; ++draw) {
        const EncodedExample example = random_encoded_example(4, draw % 2, rng);
        std::vector<double> params(spec.circuit.n_params);
        for (double& p : params) p = uniform_angle(rng);
        const GradEstimate analytic = qnn_grad_analytic(params, example, spec);
        CHECK(analytic.shots_used == 0);
        const auto fd = finite_difference(
            [&](std::span<const double> p) {
                return qnn_loss_single(qnn_forward(p, example, spec), example.label, p, 0.0);
            },
            params, 1e-5);
        check_grad_close(analytic.values, fd);
    }
}

TEST_CASE("qnn regularizer path") {
    Rng rng = make_stream(32, 0);
    QnnLossSpec bare = one_qubit_ry_spec(0.0);
    QnnLossSpec reg = one_qubit_ry_spec(0.25);
    const EncodedExample example = example_from_state(init_basis_state("0"), 0);
    for (int draw = 0; draw < 5; ++draw) {
        const std::vector<double> params = {uniform_angle(rng)};
        const auto g0 = qnn_grad_analytic(params, example, bare);
        const auto g1 = qnn_grad_analytic(params, example, reg);
        // the regularizer contributes lambda * theta_j per component (model
        // convention; the literal penalty derivative would be twice that)
        CHECK(g1.values[0] - g0.values[0] == doctest::Approx(0.25 * params[0]).epsilon(1e-12));
    }
}

TEST_CASE("single-qubit closed form") {
    QnnLossSpec spec = one_qubit_ry_spec();
    const EncodedExample example = example_from_state(init_basis_state("0"), 0);
    const std::vector<double> params = {kPi / 2.0};
    // y_hat = cos^2(theta/2) = 1/2; shifted values 0 and 1; gradient -0.25
    CHECK(qnn_forward(params, example, spec) == doctest::Approx(0.5));
    const auto grad = qnn_grad_analytic(params, example, spec);
    CHECK(grad.values[0] == doctest::Approx(-0.25).epsilon(1e-12));
}

TEST_CASE("shift-rule periodicity") {
    Rng rng = make_stream(33, 0);
    QnnLossSpec spec;
    spec.circuit = build_qnn_ansatz(3, 1);
    spec.measured_qubit = 2;
    const EncodedExample example = random_encoded_example(3, 1, rng);
    std::vector<double> params(spec.circuit.n_params);
    for (double& p : params) p = uniform_angle(rng);
    const auto base = qnn_grad_analytic(params, example, spec);
    for (int j = 0; j < spec.circuit.n_params; ++j) {
        std::vector<double> wrapped = params;
        wrapped[j] += 2.0 * kPi;
        const auto moved = qnn_grad_analytic(wrapped, example, spec);
        CHECK(std::abs(moved.values[j] - base.values[j]) < 1e-10);
    }
}

TEST_CASE("estimated gradient is unbiased without depolarization") {
    Rng rng = make_stream(34, 0);
    QnnLossSpec spec;
    spec.circuit = build_qnn_ansatz(2, 1);
    spec.measured_qubit = 1;
    const EncodedExample example = random_encoded_example(2, 0, rng);
    std::vector<double> params(spec.circuit.n_params);
    for (double& p : params) p = uniform_angle(rng);
    const auto analytic = qnn_grad_analytic(params, example, spec);

    const NoiseModel noise{0.0, 25};
    const int trials = 10000;
    const int d = spec.circuit.n_params;
    std::vector<double> sum(d, 0.0), sum_sq(d, 0.0);
    for (int m = 0; m < trials; ++m) {
        const auto g = qnn_grad_estimated(params, example, spec, noise, rng);
        for (int j = 0; j < d; ++j) {
            sum[j] += g.values[j];
            sum_sq[j] += g.values[j] * g.values[j];
        }
    }
    for (int j = 0; j < d; ++j) {
        const double mean = sum[j] / trials;
        const double var = (sum_sq[j] - sum[j] * sum[j] / trials) / (trials - 1);
        CHECK(std::abs(mean - analytic.values[j]) <= 4.0 * std::sqrt(var / trials) + 1e-12);
    }
}

TEST_CASE("fully mixed estimator leaves only the regularizer") {
    Rng rng = make_stream(35, 0);
    QnnLossSpec spec;
    spec.circuit = build_qnn_ansatz(2, 1);
    spec.measured_qubit = 1;
    spec.lambda = 0.2;
    const EncodedExample example = random_encoded_example(2, 1, rng);
    std::vector<double> params(spec.circuit.n_params);
    for (double& p : params) p = uniform_angle(rng);

    const NoiseModel noise{1.0, 10};
    const int trials = 20000;
    const int d = spec.circuit.n_params;
    std::vector<double> sum(d, 0.0), sum_sq(d, 0.0);
    for (int m = 0; m < trials; ++m) {
        const auto g = qnn_grad_estimated(params, example, spec, noise, rng);
        for (int j = 0; j < d; ++j) {
            sum[j] += g.values[j];
            sum_sq[j] += g.values[j] * g.values[j];
        }
    }
    for (int j = 0; j < d; ++j) {
        const double mean = sum[j] / trials;
        const double var = (sum_sq[j] - sum[j] * sum[j] / trials) / (trials - 1);
        CHECK(std::abs(mean - 0.2 * params[j]) <= 4.0 * std::sqrt(var / trials));
    }
}

TEST_CASE("estimator variance scales as 1/K") {
    QnnLossSpec spec = one_qubit_ry_spec();
    const EncodedExample example = example_from_state(init_basis_state("0"), 0);
    const std::vector<double> params = {1.0};
    const int trials = 10000;
    auto variance_at = [&](long shots) {
        Rng rng = make_stream(36, std::uint64_t(shots));
        const NoiseModel noise{0.0, shots};
        double sum = 0.0, sum_sq = 0.0;
        for (int m = 0; m < trials; ++m) {
            const double g = qnn_grad_estimated(params, example, spec, noise, rng).values[0];
            sum += g;
            sum_sq += g * g;
        }
        return (sum_sq - sum * sum / trials) / (trials - 1);
    };
    const double v10 = variance_at(10);
    const double v100 = variance_at(100);
    const double ratio = v10 / v100; // expect ~10
    CHECK(ratio > 10.0 / 1.5);
    CHECK(ratio < 10.0 * 1.5);
}

TEST_CASE("noisy analytic limit attenuates the data term") {
    // p~ > 0 with the K -> infinity sentinel: deterministic output equal to
    // the depolarized expectations pushed through the estimator formula.
    QnnLossSpec spec = one_qubit_ry_spec(0.1);
    const EncodedExample example = example_from_state(init_basis_state("0"), 0);
    const std::vector<double> params = {1.2};
    const NoiseModel noise{0.3, NoiseModel::kAnalytic};
    Rng rng = make_stream(37, 0);
    const auto g = qnn_grad_estimated(params, example, spec, noise, rng);
    CHECK(g.shots_used == 0);
    const double p_tilde = 0.3; // depth 1
    auto blur = [&](double y) { return (1.0 - p_tilde) * y + 0.5 * p_tilde; };
    const double y = std::cos(0.6) * std::cos(0.6);
    const double yp = std::cos((1.2 + kPi / 2) / 2) * std::cos((1.2 + kPi / 2) / 2);
    const double ym = std::cos((1.2 - kPi / 2) / 2) * std::cos((1.2 - kPi / 2) / 2);
    const double expected = (blur(y) - 0.0) * 0.5 * (blur(yp) - blur(ym)) + 0.1 * 1.2;
    CHECK(g.values[0] == doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("vqe energy") {
    const VqeSpec spec = make_h2_vqe_spec();
    const Hamiltonian zi = parse_hamiltonian("1.0 ZIII\n");
    const std::vector<double> zeros(12, 0.0);
    // identity circuit on |1100>: qubit 0 reads -1
    CHECK(vqe_energy(zeros, spec, zi, {0}) == doctest::Approx(-1.0));
    CHECK(vqe_energy(zeros, spec, zi, {}) == 0.0);

    const Hamiltonian h2 = load_hamiltonian("data/hamiltonians/h2_0.7A.txt");
    const double e0 = exact_ground_energy(h2);
    Rng rng = make_stream(41, 0);
    for (int rep = 0; rep < 10; ++rep) {
        std::vector<double> params(12);
        for (double& p : params) p = uniform_angle(rng);
        CHECK(vqe_energy(params, spec, h2, iota_subset(h2.n_terms())) >= e0 - 1e-10);
    }
}

TEST_CASE("vqe gradient matches finite differences") {
    Rng rng = make_stream(42, 0);
    const VqeSpec spec = make_h2_vqe_spec();
    const Hamiltonian h2 = load_hamiltonian("data/hamiltonians/h2_1.3A.txt");
    const auto all = iota_subset(h2.n_terms());
    for (int draw = 0; draw < 20; ++draw) {
        std::vector<double> params(12);
        for (double& p : params) p = uniform_angle(rng);
        const auto analytic = vqe_grad(params, spec, h2, all);
        const auto fd = finite_difference(
            [&](std::span<const double> p) { return vqe_energy(p, spec, h2, all); }, params, 1e-5);
        check_grad_close(analytic.values, fd);
    }
}

TEST_CASE("vqe gradient is additive over disjoint subsets") {
    Rng rng = make_stream(43, 0);
    const VqeSpec spec = make_h2_vqe_spec();
    const Hamiltonian h2 = load_hamiltonian("data/hamiltonians/h2_0.5A.txt");
    std::vector<double> params(12);
    for (double& p : params) p = uniform_angle(rng);
    const Partition part = partition_terms(h2, 3);
    const auto whole = vqe_grad(params, spec, h2, iota_subset(h2.n_terms()));
    std::vector<double> acc(12, 0.0);
    for (const auto& set : part.index_sets) {
        const auto piece = vqe_grad(params, spec, h2, set);
        for (int j = 0; j < 12; ++j) acc[j] += piece.values[j];
    }
    for (int j = 0; j < 12; ++j) CHECK(acc[j] == doctest::Approx(whole.values[j]).epsilon(1e-10));
}

TEST_CASE("vqe shot gradient is unbiased") {
    Rng rng = make_stream(44, 0);
    const VqeSpec spec = make_h2_vqe_spec();
    const Hamiltonian h2 = load_hamiltonian("data/hamiltonians/h2_0.9A.txt");
    std::vector<double> params(12);
    for (double& p : params) p = uniform_angle(rng);
    const std::vector<int> subset = {0, 3, 7, 11}; // a few mixed terms
    const auto analytic = vqe_grad(params, spec, h2, subset);
    const int trials = 10000;
    const long shots = 10;
    std::vector<double> sum(12, 0.0), sum_sq(12, 0.0);
    for (int m = 0; m < trials; ++m) {
        const auto g = vqe_grad(params, spec, h2, subset, shots, &rng);
        for (int j = 0; j < 12; ++j) {
            sum[j] += g.values[j];
            sum_sq[j] += g.values[j] * g.values[j];
        }
    }
    int failures = 0;
    for (int j = 0; j < 12; ++j) {
        const double mean = sum[j] / trials;
        const double var = (sum_sq[j] - sum[j] * sum[j] / trials) / (trials - 1);
        if (std::abs(mean - analytic.values[j]) > 4.0 * std::sqrt(var / trials) + 1e-12) ++failures;
    }
    CHECK(failures == 0);
}

TEST_CASE("finite differences on closed forms") {
    auto quadratic = [](std::span<const double> p) {
        double s = 0.0;
        for (double x : p) s += x * x;
        return s;
    };
    const std::vector<double> point = {0.3, -1.1, 2.0};
    const auto grad = finite_difference(quadratic, point, 1e-5);
    for (std::size_t j = 0; j < point.size(); ++j)
        CHECK(grad[j] == doctest::Approx(2.0 * point[j]).epsilon(1e-8));

    auto constant = [](std::span<const double>) { return 4.2; };
    for (double g : finite_difference(constant, point, 1e-5)) CHECK(g == 0.0);

    CHECK_THROWS_AS(finite_difference(constant, point, 0.0), std::invalid_argument);
}
