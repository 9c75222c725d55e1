#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "qitp/linalg.hpp"

namespace qitp {

// One two-body term acting on qubits (i, j); `term` is 4x4 Hermitian in the
// (qubit i ⊗ qubit j) ordering.
struct PairTerm {
    int i = 0;
    int j = 0;
    ComplexMatrix term;
};

// Immutable after construction; carries its spectrum so repeated thermal
// evaluations reuse one diagonalization.
class Hamiltonian {
public:
    // Validates hermiticity and, when pair terms are given, that the embedded
    // terms sum to `dense` (PairSumMismatchError otherwise).
    Hamiltonian(ComplexMatrix dense,
                std::vector<PairTerm> pair_terms = {},
                std::string label = "hamiltonian");

    int n_sys() const { return n_sys_; }
    const ComplexMatrix& dense() const { return dense_; }
    const std::vector<PairTerm>& pair_terms() const { return pair_terms_; }
    bool has_pair_terms() const { return !pair_terms_.empty(); }
    double ground_energy() const { return eig_.eigenvalues(0); }
    const Eigensystem& eigensystem() const { return eig_; }
    const std::string& label() const { return label_; }

private:
    int n_sys_;
    ComplexMatrix dense_;
    std::vector<PairTerm> pair_terms_;
    std::string label_;
    Eigensystem eig_;
};

// Hermitian operator to be measured; lambda_min and spread feed the dilation
// A = sqrt((O - lambda_min)/spread). spread == 0 marks a degenerate
// observable (O proportional to identity).
class Observable {
public:
    explicit Observable(ComplexMatrix dense, std::string label = "observable");

    int n_sys() const { return n_sys_; }
    const ComplexMatrix& dense() const { return dense_; }
    double lambda_min() const { return eig_.eigenvalues(0); }
    double spread() const { return spread_; }
    bool degenerate() const { return spread_ == 0.0; }
    const Eigensystem& eigensystem() const { return eig_; }
    const std::string& label() const { return label_; }

private:
    int n_sys_;
    ComplexMatrix dense_;
    std::string label_;
    Eigensystem eig_;
    double spread_;
};

// ---------------------------------------------------------------------------
// Documents. JSON with n_qubits plus exactly one of dense / pauli_terms /
// pairs; unknown fields are rejected (SchemaError).
// ---------------------------------------------------------------------------

Hamiltonian load_hamiltonian(const std::string& json_text);
Hamiltonian load_hamiltonian_file(const std::string& path);
Observable load_observable(const std::string& json_text);
Observable load_observable_file(const std::string& path);

// Pairs form when pair terms are present, dense form otherwise.
// load(serialize(load(doc))) reproduces load(doc) within 1e-12.
std::string serialize_hamiltonian(const Hamiltonian& h);
std::string serialize_observable(const Observable& o);

// ---------------------------------------------------------------------------
// Pauli strings. Qubit 0 is the leftmost character; the matrix is the kron
// product in qubit order.
// ---------------------------------------------------------------------------

ComplexMatrix pauli_string_matrix(const std::string& s);

// Coefficients c_s = Tr(P_s O) / 2^n with |c_s| <= tol::PAULI_PRUNE dropped;
// keys ordered lexicographically in I < X < Y < Z per position.
std::map<std::string, double> pauli_decompose(const ComplexMatrix& o);

// ---------------------------------------------------------------------------
// Built-in model: pairwise Heisenberg exchange plus on-site fields.
// ---------------------------------------------------------------------------

struct PairCoupling {
    double jx = 0.0;
    double jy = 0.0;
    double jz = 0.0;
};

struct QubitField {
    double hx = 0.0;
    double hy = 0.0;
    double hz = 0.0;
};

// Pair terms for every unordered pair i<j in lexicographic order. Each
// qubit's field is split evenly across the n-1 pairs containing it so the
// pair terms sum to the full Hamiltonian. n_sys in [2, 5].
Hamiltonian heisenberg_pair_model(int n_sys,
                                  const std::vector<PairCoupling>& couplings,
                                  const std::vector<QubitField>& fields = {},
                                  std::string label = "heisenberg");

// Uniform couplings on every pair, uniform field on every qubit.
Hamiltonian heisenberg_pair_model(int n_sys, PairCoupling coupling,
                                  QubitField field = {},
                                  std::string label = "heisenberg");

// Embeds a 4x4 pair operator on qubits (i, j) of an n-qubit register.
ComplexMatrix embed_pair_term(const ComplexMatrix& term, int i, int j, int n_sys);

// sigma_z on one qubit of an n-qubit register, as an Observable.
Observable sigma_z_observable(int qubit, int n_sys);

} // namespace qitp
