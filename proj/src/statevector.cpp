#include "qudio/statevector.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace qudio {

StateVector::StateVector(int n) : n_qubits(n) {
    if (n < 1 || n > 24) throw std::invalid_argument("qubit count out of range");
    amplitudes.assign(std::size_t(1) << n, cxd(0.0, 0.0));
}

double StateVector::norm_sq() const {
    double s = 0.0;
    for (const cxd& a : amplitudes) s += std::norm(a);
    return s;
}

StateVector init_basis_state(const std::string& bits) {
    if (bits.empty()) throw std::invalid_argument("empty bitstring");
    StateVector state(static_cast<int>(bits.size()));
    std::size_t index = 0;
    for (char c : bits) {
        if (c != '0' && c != '1') throw std::invalid_argument("bitstring must be over {0,1}");
        index = (index << 1) | std::size_t(c - '0');
    }
    state.amplitudes[index] = cxd(1.0, 0.0);
    return state;
}

int Circuit::depth() const {
    if (depth_override >= 0) return depth_override;
    std::vector<int> frontier(n_qubits, 0);
    for (const Gate& g : gates) {
        int layer = frontier[g.target];
        if (g.kind == GateKind::CNOT) layer = std::max(layer, frontier[g.control]);
        ++layer;
        frontier[g.target] = layer;
        if (g.kind == GateKind::CNOT) frontier[g.control] = layer;
    }
    int d = 0;
    for (int f : frontier) d = std::max(d, f);
    return d;
}

void Circuit::validate() const {
    std::vector<int> slot_uses(n_params, 0);
    for (const Gate& g : gates) {
        if (g.target < 0 || g.target >= n_qubits) throw std::invalid_argument("gate target out of range");
        if (g.kind == GateKind::CNOT) {
            if (g.control < 0 || g.control >= n_qubits) throw std::invalid_argument("gate control out of range");
            if (g.control == g.target) throw std::invalid_argument("control equals target");
            if (g.param_slot != -1) throw std::invalid_argument("CNOT carries no parameter");
        } else {
            if (g.param_slot < 0 || g.param_slot >= n_params)
                throw std::invalid_argument("parameter slot out of range");
            ++slot_uses[g.param_slot];
        }
    }
    for (int u : slot_uses)
        if (u == 0) throw std::invalid_argument("unused parameter slot");
    if (!gates.empty() && depth() < 1) throw std::invalid_argument("bad depth");
}

namespace {

// Pairs (i0, i1) differ in the target bit; qubit q sits at bit (n-1-q).
inline void apply_two_by_two(StateVector& state, int qubit, cxd u00, cxd u01, cxd u10, cxd u11) {
    const std::size_t dim = state.dim();
    const std::size_t bit = std::size_t(1) << (state.n_qubits - 1 - qubit);
    for (std::size_t base = 0; base < dim; base += 2 * bit) {
        for (std::size_t low = 0; low < bit; ++low) {
            const std::size_t i0 = base | low;
            const std::size_t i1 = i0 | bit;
            const cxd a = state.amplitudes[i0];
            const cxd b = state.amplitudes[i1];
            state.amplitudes[i0] = u00 * a + u01 * b;
            state.amplitudes[i1] = u10 * a + u11 * b;
        }
    }
}

} // namespace

void apply_gate_inplace(StateVector& state, const Gate& gate, std::span<const double> params) {
    if (gate.target < 0 || gate.target >= state.n_qubits)
        throw std::out_of_range("gate target out of range");
    switch (gate.kind) {
    case GateKind::RZ: {
        const double half = 0.5 * params[gate.param_slot];
        const cxd e0(std::cos(half), -std::sin(half));
        const cxd e1 = std::conj(e0);
        const std::size_t bit = std::size_t(1) << (state.n_qubits - 1 - gate.target);
        for (std::size_t i = 0; i < state.dim(); ++i)
            state.amplitudes[i] *= (i & bit) ? e1 : e0;
        break;
    }
    case GateKind::RY: {
        const double half = 0.5 * params[gate.param_slot];
        const double c = std::cos(half), s = std::sin(half);
        apply_two_by_two(state, gate.target, c, -s, s, c);
        break;
    }
    case GateKind::CNOT: {
        if (gate.control < 0 || gate.control >= state.n_qubits)
            throw std::out_of_range("gate control out of range");
        const std::size_t cbit = std::size_t(1) << (state.n_qubits - 1 - gate.control);
        const std::size_t tbit = std::size_t(1) << (state.n_qubits - 1 - gate.target);
        for (std::size_t i = 0; i < state.dim(); ++i)
            if ((i & cbit) && !(i & tbit))
                std::swap(state.amplitudes[i], state.amplitudes[i | tbit]);
        break;
    }
    }
}

StateVector apply_gate(const StateVector& state, const Gate& gate, std::span<const double> params) {
    StateVector out = state;
    apply_gate_inplace(out, gate, params);
    return out;
}

StateVector run_circuit(const Circuit& circuit, const StateVector& in,
                        std::span<const double> params) {
    if (circuit.n_qubits != in.n_qubits) throw std::invalid_argument("qubit count mismatch");
    if (params.size() < std::size_t(circuit.n_params))
        throw std::invalid_argument("parameter vector too short");
    StateVector out = in;
    for (const Gate& g : circuit.gates) apply_gate_inplace(out, g, params);
    return out;
}

Circuit build_qnn_ansatz(int n_qubits, int n_blocks, EntanglePattern pattern) {
    if (n_qubits < 2) throw std::invalid_argument("ansatz needs at least 2 qubits");
    if (n_blocks < 1) throw std::invalid_argument("ansatz needs at least 1 block");
    Circuit c;
    c.n_qubits = n_qubits;
    c.n_params = 3 * n_qubits * n_blocks;
    int slot = 0;
    for (int b = 0; b < n_blocks; ++b) {
        for (int q = 0; q < n_qubits; ++q) {
            c.gates.push_back(Gate::rz(q, slot++));
            c.gates.push_back(Gate::ry(q, slot++));
            c.gates.push_back(Gate::rz(q, slot++));
        }
        for (int q = 0; q + 1 < n_qubits; ++q) c.gates.push_back(Gate::cnot(q, q + 1));
        if (pattern == EntanglePattern::Ring && n_qubits > 2)
            c.gates.push_back(Gate::cnot(n_qubits - 1, 0));
    }
    c.validate();
    return c;
}

Circuit build_vqe_ansatz(bool single_axis) {
    Circuit c;
    c.n_qubits = 4;
    int slot = 0;
    if (single_axis) {
        c.n_params = 4;
        for (int q = 0; q < 4; ++q) c.gates.push_back(Gate::ry(q, slot++));
    } else {
        c.n_params = 12;
        for (int q = 0; q < 4; ++q) {
            c.gates.push_back(Gate::rz(q, slot++));
            c.gates.push_back(Gate::ry(q, slot++));
            c.gates.push_back(Gate::rz(q, slot++));
        }
    }
    for (int q = 0; q < 3; ++q) c.gates.push_back(Gate::cnot(q, q + 1));
    c.validate();
    return c;
}

double expectation_projector(const StateVector& state, int measured_qubit) {
    if (measured_qubit < 0 || measured_qubit >= state.n_qubits)
        throw std::out_of_range("measured qubit out of range");
    const std::size_t bit = std::size_t(1) << (state.n_qubits - 1 - measured_qubit);
    double acc = 0.0;
    for (std::size_t i = 0; i < state.dim(); ++i)
        if (!(i & bit)) acc += std::norm(state.amplitudes[i]);
    return std::clamp(acc, 0.0, 1.0);
}

void NoiseModel::validate() const {
    if (p < 0.0 || p > 1.0) throw std::invalid_argument("depolarization rate outside [0,1]");
    if (shots != kAnalytic && shots < 1) throw std::invalid_argument("shot count must be positive");
}

double effective_depolarization(double p, int depth) {
    if (p < 0.0 || p > 1.0) throw std::invalid_argument("depolarization rate outside [0,1]");
    if (depth < 0) throw std::invalid_argument("negative depth");
    return 1.0 - std::pow(1.0 - p, depth);
}

double noisy_expectation(double ideal, double trace_o, int n_qubits, double p_tilde) {
    const double mixed = trace_o / double(std::size_t(1) << n_qubits);
    return (1.0 - p_tilde) * ideal + p_tilde * mixed;
}

double sample_two_outcome(double prob, long shots, Rng& rng) {
    if (shots < 1) throw std::invalid_argument("shot count must be positive");
    const double q = std::clamp(prob, 0.0, 1.0);
    long hits = 0;
    for (long k = 0; k < shots; ++k)
        if (uniform01(rng) < q) ++hits;
    return double(hits) / double(shots);
}

} // namespace qudio
