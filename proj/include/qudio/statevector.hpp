#pragma once

#include <complex>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "qudio/rng.hpp"

namespace qudio {

using cxd = std::complex<double>;

// Dense N-qubit pure state. Convention: qubit 0 is the most significant bit
// of the basis-state index, so "1100" -> index 12.
struct StateVector {
    int n_qubits = 0;
    std::vector<cxd> amplitudes;

    StateVector() = default;
    explicit StateVector(int n);

    std::size_t dim() const { return amplitudes.size(); }
    double norm_sq() const;
};

// Basis state from a bit string, e.g. "1100".
StateVector init_basis_state(const std::string& bits);

enum class GateKind { RZ, RY, CNOT };

struct Gate {
    GateKind kind;
    int target = 0;
    int control = -1;    // CNOT only
    int param_slot = -1; // rotation gates only

    static Gate rz(int target, int slot) { return {GateKind::RZ, target, -1, slot}; }
    static Gate ry(int target, int slot) { return {GateKind::RY, target, -1, slot}; }
    static Gate cnot(int control, int target) { return {GateKind::CNOT, target, control, -1}; }
};

struct Circuit {
    int n_qubits = 0;
    std::vector<Gate> gates;
    int n_params = 0;
    int depth_override = -1; // -1: derive by layering

    // Circuit depth L_Q by greedy layering: each gate lands one past the
    // deepest layer touching its qubit support.
    int depth() const;
    void validate() const;
};

// RZ(phi) = diag(e^{-i phi/2}, e^{+i phi/2}); RY(phi) = [[cos, -sin],[sin, cos]] of phi/2.
void apply_gate_inplace(StateVector& state, const Gate& gate, std::span<const double> params);
StateVector apply_gate(const StateVector& state, const Gate& gate, std::span<const double> params);

// Evolve a copy of `in` through the whole circuit.
StateVector run_circuit(const Circuit& circuit, const StateVector& in,
                        std::span<const double> params);

enum class EntanglePattern { Chain, Ring };

// Hardware-efficient ansatz: per block, Rot = RZ RY RZ on every qubit, then a
// CNOT entangling layer. d_Q = 3 * n_qubits * n_blocks.
Circuit build_qnn_ansatz(int n_qubits, int n_blocks,
                         EntanglePattern pattern = EntanglePattern::Chain);

// Fixed 4-qubit ansatz: one Rot per qubit followed by CNOT (0,1),(1,2),(2,3).
// single_axis = true replaces Rot by a lone RY per qubit.
Circuit build_vqe_ansatz(bool single_axis = false);

// <psi| (|0><0| on measured_qubit) |psi>, clamped to [0,1].
double expectation_projector(const StateVector& state, int measured_qubit);

struct NoiseModel {
    static constexpr long kAnalytic = -1; // shot-count sentinel for analytic mode

    double p = 0.0;          // per-layer depolarization rate
    long shots = kAnalytic;  // K

    bool ideal() const { return p == 0.0 && shots == kAnalytic; }
    bool analytic_shots() const { return shots == kAnalytic; }
    void validate() const;
};

// p_tilde = 1 - (1-p)^depth.
double effective_depolarization(double p, int depth);

// Expectation of O under the global channel (1-p~) rho + p~ I/2^N, given the
// ideal expectation and Tr(O).
double noisy_expectation(double ideal, double trace_o, int n_qubits, double p_tilde);

// Mean of K Bernoulli(prob) draws; prob clamped to [0,1] first.
double sample_two_outcome(double prob, long shots, Rng& rng);

} // namespace qudio
