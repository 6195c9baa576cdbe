#include "qudio/pauli.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>
#include <stdexcept>

namespace qudio {

namespace {
constexpr double kPi = 3.14159265358979323846;
constexpr double kHalfPi = kPi / 2.0;
} // namespace

PauliString PauliString::parse(const std::string& word) {
    PauliString out;
    out.ops.reserve(word.size());
    for (char c : word) {
        switch (c) {
        case 'I': out.ops.push_back(PauliOp::I); break;
        case 'X': out.ops.push_back(PauliOp::X); break;
        case 'Y': out.ops.push_back(PauliOp::Y); break;
        case 'Z': out.ops.push_back(PauliOp::Z); break;
        default: throw std::invalid_argument("pauli word must be over {I,X,Y,Z}");
        }
    }
    return out;
}

std::string PauliString::str() const {
    std::string s;
    s.reserve(ops.size());
    for (PauliOp op : ops) s.push_back("IXYZ"[static_cast<int>(op)]);
    return s;
}

Hamiltonian parse_hamiltonian(std::istream& in) {
    Hamiltonian ham;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        std::istringstream fields(line);
        std::string coeff_text, word, extra;
        if (!(fields >> coeff_text)) continue; // blank or comment-only line
        if (!(fields >> word) || (fields >> extra))
            throw std::runtime_error("line " + std::to_string(line_no) +
                                     ": expected `<coefficient> <pauli-word>`");
        double coeff = 0.0;
        std::size_t used = 0;
        try {
            coeff = std::stod(coeff_text, &used);
        } catch (const std::exception&) {
            used = 0;
        }
        if (used != coeff_text.size() || !std::isfinite(coeff))
            throw std::runtime_error("line " + std::to_string(line_no) + ": bad coefficient `" +
                                     coeff_text + "`");
        PauliString string;
        try {
            string = PauliString::parse(word);
        } catch (const std::exception&) {
            throw std::runtime_error("line " + std::to_string(line_no) + ": bad pauli word `" +
                                     word + "`");
        }
        if (ham.terms.empty()) {
            ham.n_qubits = string.size();
        } else if (string.size() != ham.n_qubits) {
            throw std::runtime_error("line " + std::to_string(line_no) +
                                     ": pauli word length differs from earlier terms");
        }
        ham.terms.push_back({coeff, std::move(string)});
    }
    if (ham.terms.empty()) throw std::runtime_error("no hamiltonian terms found");
    return ham;
}

Hamiltonian parse_hamiltonian(const std::string& text) {
    std::istringstream in(text);
    return parse_hamiltonian(in);
}

Hamiltonian load_hamiltonian(const std::filesystem::path& file) {
    std::ifstream in(file);
    if (!in) throw std::runtime_error("cannot open hamiltonian file " + file.string());
    try {
        return parse_hamiltonian(in);
    } catch (const std::runtime_error& e) {
        throw std::runtime_error(file.string() + ": " + e.what());
    }
}

Partition partition_terms(const Hamiltonian& ham, int subgroups, std::uint64_t seed,
                          bool shuffled) {
    const int n = ham.n_terms();
    if (subgroups < 1 || subgroups > n)
        throw std::invalid_argument("subgroup count must be in [1, n_terms]");
    std::vector<int> order(n);
    std::iota(order.begin(), order.end(), 0);
    if (shuffled) {
        Rng rng = make_stream(seed, 0x5041525449ULL);
        for (int i = n - 1; i > 0; --i)
            std::swap(order[i], order[std::size_t(uniform01(rng) * (i + 1))]);
    }
    Partition part;
    part.index_sets.resize(subgroups);
    const int base = n / subgroups;
    const int extra = n % subgroups;
    int cursor = 0;
    for (int g = 0; g < subgroups; ++g) {
        const int size = base + (g < extra ? 1 : 0);
        part.index_sets[g].assign(order.begin() + cursor, order.begin() + cursor + size);
        cursor += size;
    }
    return part;
}

EigStructure eig_structure(const PauliString& string, bool with_eigenvalues) {
    const int n = string.size();
    EigStructure out;
    out.rotation.n_qubits = n;
    int slot = 0;
    for (int q = 0; q < n; ++q) {
        switch (string.ops[q]) {
        case PauliOp::I:
            break;
        case PauliOp::Z:
            out.support_mask |= std::uint64_t(1) << (n - 1 - q);
            break;
        case PauliOp::X:
            // RY(-pi/2) maps the X eigenbasis onto the computational basis.
            out.rotation.gates.push_back(Gate::ry(q, slot));
            out.angles.push_back(-kHalfPi);
            ++slot;
            out.support_mask |= std::uint64_t(1) << (n - 1 - q);
            break;
        case PauliOp::Y:
            // RZ(-pi/2) then RY(-pi/2) sends |y+> -> |0>, |y-> -> |1>.
            out.rotation.gates.push_back(Gate::rz(q, slot));
            out.angles.push_back(-kHalfPi);
            ++slot;
            out.rotation.gates.push_back(Gate::ry(q, slot));
            out.angles.push_back(-kHalfPi);
            ++slot;
            out.support_mask |= std::uint64_t(1) << (n - 1 - q);
            break;
        }
    }
    out.rotation.n_params = slot;
    if (with_eigenvalues) {
        const std::size_t dim = std::size_t(1) << n;
        out.eigenvalues.resize(dim);
        for (std::size_t i = 0; i < dim; ++i)
            out.eigenvalues[i] = (std::popcount(i & out.support_mask) & 1) ? -1.0 : 1.0;
    }
    return out;
}

double expectation_pauli_term(const StateVector& state, const PauliTerm& term) {
    if (term.string.size() != state.n_qubits)
        throw std::invalid_argument("pauli string length does not match state");
    const EigStructure eig = eig_structure(term.string, /*with_eigenvalues=*/false);
    const StateVector* rotated = &state;
    StateVector scratch;
    if (!eig.rotation.gates.empty()) {
        scratch = run_circuit(eig.rotation, state, eig.angles);
        rotated = &scratch;
    }
    double acc = 0.0;
    for (std::size_t i = 0; i < rotated->dim(); ++i) {
        const double w = std::norm(rotated->amplitudes[i]);
        acc += (std::popcount(i & eig.support_mask) & 1) ? -w : w;
    }
    return term.coeff * acc;
}

double expectation_pauli_sum(const StateVector& state, const Hamiltonian& ham,
                             const std::vector<int>& subset) {
    if (ham.n_qubits != state.n_qubits)
        throw std::invalid_argument("hamiltonian dimension does not match state");
    double acc = 0.0;
    for (int idx : subset) acc += expectation_pauli_term(state, ham.terms.at(idx));
    return acc;
}

double sample_pauli_expectation(const StateVector& state, const PauliTerm& term, long shots,
                                Rng& rng, double p_tilde) {
    if (shots < 1) throw std::invalid_argument("shot count must be positive");
    if (p_tilde < 0.0 || p_tilde > 1.0) throw std::invalid_argument("p_tilde outside [0,1]");
    if (term.string.size() != state.n_qubits)
        throw std::invalid_argument("pauli string length does not match state");
    const EigStructure eig = eig_structure(term.string, /*with_eigenvalues=*/false);
    const StateVector* rotated = &state;
    StateVector scratch;
    if (!eig.rotation.gates.empty()) {
        scratch = run_circuit(eig.rotation, state, eig.angles);
        rotated = &scratch;
    }
    const std::size_t dim = rotated->dim();
    const double uniform_weight = p_tilde / double(dim);
    std::vector<double> cumulative(dim);
    double total = 0.0;
    for (std::size_t i = 0; i < dim; ++i) {
        total += (1.0 - p_tilde) * std::norm(rotated->amplitudes[i]) + uniform_weight;
        cumulative[i] = total;
    }
    long sum = 0;
    for (long k = 0; k < shots; ++k) {
        const double u = uniform01(rng) * total;
        const std::size_t idx =
            std::upper_bound(cumulative.begin(), cumulative.end(), u) - cumulative.begin();
        const std::size_t clamped = std::min(idx, dim - 1);
        sum += (std::popcount(clamped & eig.support_mask) & 1) ? -1 : 1;
    }
    return term.coeff * double(sum) / double(shots);
}

std::vector<cxd> dense_matrix(const Hamiltonian& ham) {
    const int n = ham.n_qubits;
    if (n < 1 || n > 12) throw std::invalid_argument("dense matrix limited to 12 qubits");
    const std::size_t dim = std::size_t(1) << n;
    std::vector<cxd> matrix(dim * dim, cxd(0.0, 0.0));
    for (const PauliTerm& term : ham.terms) {
        // Pauli strings map each column basis state to one row: X/Y flip the
        // bit, Y and Z contribute phases.
        std::uint64_t flip_mask = 0;
        for (int q = 0; q < n; ++q) {
            const PauliOp op = term.string.ops[q];
            if (op == PauliOp::X || op == PauliOp::Y)
                flip_mask |= std::uint64_t(1) << (n - 1 - q);
        }
        for (std::size_t col = 0; col < dim; ++col) {
            cxd amp(term.coeff, 0.0);
            for (int q = 0; q < n; ++q) {
                const std::uint64_t bit = std::uint64_t(1) << (n - 1 - q);
                const bool one = col & bit;
                switch (term.string.ops[q]) {
                case PauliOp::I: break;
                case PauliOp::X: break;
                case PauliOp::Z:
                    if (one) amp = -amp;
                    break;
                case PauliOp::Y:
                    // Y|0> = i|1>, Y|1> = -i|0>
                    amp *= one ? cxd(0.0, -1.0) : cxd(0.0, 1.0);
                    break;
                }
            }
            const std::size_t row = col ^ flip_mask;
            matrix[row * dim + col] += amp;
        }
    }
    return matrix;
}

std::vector<double> hermitian_eigenvalues(std::vector<cxd> a, std::size_t dim) {
    if (a.size() != dim * dim) throw std::invalid_argument("matrix size mismatch");
    // Cyclic Jacobi with complex Givens rotations; adequate for the dense
    // sizes handled here.
    auto at = [&](std::size_t r, std::size_t c) -> cxd& { return a[r * dim + c]; };
    for (int sweep = 0; sweep < 100; ++sweep) {
        double off = 0.0;
        for (std::size_t p = 0; p < dim; ++p)
            for (std::size_t q = p + 1; q < dim; ++q) off += std::norm(at(p, q));
        if (off < 1e-24) break;
        for (std::size_t p = 0; p < dim; ++p) {
            for (std::size_t q = p + 1; q < dim; ++q) {
                const cxd apq = at(p, q);
                const double mag = std::abs(apq);
                if (mag < 1e-300) continue;
                const cxd phase = apq / mag;
                const double app = at(p, p).real();
                const double aqq = at(q, q).real();
                const double tau = (aqq - app) / (2.0 * mag);
                const double t = (tau >= 0.0 ? 1.0 : -1.0) /
                                 (std::abs(tau) + std::sqrt(1.0 + tau * tau));
                const double c = 1.0 / std::sqrt(1.0 + t * t);
                const cxd s = t * c * phase;
                // Right-multiply columns p,q by [[c, s],[-conj(s), c]] and
                // left-multiply rows by its conjugate transpose.
                for (std::size_t k = 0; k < dim; ++k) {
                    const cxd akp = at(k, p);
                    const cxd akq = at(k, q);
                    at(k, p) = c * akp - std::conj(s) * akq;
                    at(k, q) = s * akp + c * akq;
                }
                for (std::size_t k = 0; k < dim; ++k) {
                    const cxd apk = at(p, k);
                    const cxd aqk = at(q, k);
                    at(p, k) = c * apk - s * aqk;
                    at(q, k) = std::conj(s) * apk + c * aqk;
                }
            }
        }
    }
    std::vector<double> eigenvalues(dim);
    for (std::size_t i = 0; i < dim; ++i) eigenvalues[i] = at(i, i).real();
    std::sort(eigenvalues.begin(), eigenvalues.end());
    return eigenvalues;
}

double exact_ground_energy(const Hamiltonian& ham) {
    if (ham.n_qubits > 12) throw std::invalid_argument("dense diagonalization limited to 12 qubits");
    const std::size_t dim = std::size_t(1) << ham.n_qubits;
    return hermitian_eigenvalues(dense_matrix(ham), dim).front();
}

} // namespace qudio
