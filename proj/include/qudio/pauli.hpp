#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "qudio/statevector.hpp"

namespace qudio {

enum class PauliOp : unsigned char { I, X, Y, Z };

struct PauliString {
    std::vector<PauliOp> ops;

    static PauliString parse(const std::string& word);
    std::string str() const;
    int size() const { return static_cast<int>(ops.size()); }
};

struct PauliTerm {
    double coeff = 0.0;
    PauliString string;
};

struct Hamiltonian {
    int n_qubits = 0;
    std::vector<PauliTerm> terms;

    int n_terms() const { return static_cast<int>(terms.size()); }
};

// Line format: `<coefficient> <pauli-word>`, `#` comments, blank lines ignored.
Hamiltonian parse_hamiltonian(std::istream& in);
Hamiltonian parse_hamiltonian(const std::string& text);
Hamiltonian load_hamiltonian(const std::filesystem::path& file);

struct Partition {
    std::vector<std::vector<int>> index_sets;

    int n_groups() const { return static_cast<int>(index_sets.size()); }
};

// Deterministic near-equal split of term indices in file order (sizes differ
// by at most one). `shuffled` applies a seeded permutation first.
Partition partition_terms(const Hamiltonian& ham, int subgroups, std::uint64_t seed = 0,
                          bool shuffled = false);

// Basis change R with R H R^dag diagonal, as a tensor product of single-qubit
// rotations, plus the +/-1 eigenvalue pattern of H in the rotated basis.
struct EigStructure {
    Circuit rotation;           // RZ/RY gates only, fixed angles below
    std::vector<double> angles; // parameter vector for `rotation`
    std::vector<double> eigenvalues;
    std::uint64_t support_mask = 0; // non-identity qubits, qubit 0 = MSB of index
};

EigStructure eig_structure(const PauliString& string, bool with_eigenvalues = true);

// Sum over `subset` of coeff_j * <psi|H_j|psi>, computed analytically.
double expectation_pauli_sum(const StateVector& state, const Hamiltonian& ham,
                             const std::vector<int>& subset);
double expectation_pauli_term(const StateVector& state, const PauliTerm& term);

// Rotate to the term's eigenbasis, draw `shots` basis indices from |amp|^2,
// average the sampled eigenvalues, scale by the coefficient. A nonzero
// p_tilde mixes the outcome distribution with the uniform one (global
// depolarization of the pre-measurement state).
double sample_pauli_expectation(const StateVector& state, const PauliTerm& term, long shots,
                                Rng& rng, double p_tilde = 0.0);

// Dense Hermitian matrix of the Pauli sum, row-major, dim = 2^n.
std::vector<cxd> dense_matrix(const Hamiltonian& ham);

// All eigenvalues of a dense Hermitian matrix, ascending (cyclic Jacobi).
std::vector<double> hermitian_eigenvalues(std::vector<cxd> matrix, std::size_t dim);

// Minimum eigenvalue of the dense matrix of `ham`; requires n_qubits <= 12.
double exact_ground_energy(const Hamiltonian& ham);

} // namespace qudio
