#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "qitp/propagator.hpp"

namespace qitp {

enum class GateKind {
    hadamard,
    cnot,
    ry,
    unitary,            // fixed matrix on an ordered target list
    measure_discard,    // trace the qubit out, no record
    measure_postselect, // project on `outcome`, renormalize, drop the qubit
    measure_record,     // record the outcome, keep both branches
};

struct Gate {
    GateKind kind;
    std::vector<int> targets;  // cnot: the target qubit only
    std::vector<int> controls; // cnot: the control qubit
    double angle = 0.0;        // ry
    ComplexMatrix matrix;      // unitary
    int outcome = 0;           // measure_postselect

    static Gate h(int q);
    static Gate cnot(int control, int target);
    static Gate ry(int q, double angle);
    static Gate unitary(ComplexMatrix m, std::vector<int> targets);
    static Gate mdiscard(int q);
    static Gate mpostselect(int q, int outcome);
    static Gate mrecord(int q);
};

enum class QubitRole { system, mme_ancilla, qitp_ancilla, obs_ancilla };

struct Circuit {
    int n_qubits = 0;
    std::vector<QubitRole> roles; // size n_qubits
    std::vector<Gate> gates;

    std::vector<int> qubits_with_role(QubitRole role) const;
};

struct GateCounts {
    int hadamard = 0;
    int cnot = 0;
    int ry = 0;
    int unitary = 0;
    int measure = 0;

    int total() const { return hadamard + cnot + ry + unitary + measure; }
};

GateCounts gate_counts(const Circuit& c);

// Density matrix over the currently live qubits. live_qubits holds original
// circuit indices in ascending order; measured qubits leave the list.
struct RegisterState {
    ComplexMatrix rho;
    std::vector<int> live_qubits;
    double accumulated_prob = 1.0;
};

struct SimulateOptions {
    // Re-validate trace and positivity after every gate (slower; tests use it).
    bool validate_each_step = false;
};

// Exact density-matrix execution. Qubits start in |0>, materialized lazily so
// wide circuits whose ancillas are measured early stay cheap; any qubit never
// touched is still present (as |0><0|) in the result. Post-selection
// multiplies accumulated_prob by the branch probability
// (ZeroProbabilityError when that probability is below tol::POSTSELECT_FLOOR).
// measure_record dephases the qubit in the computational basis and keeps it.
RegisterState simulate(const Circuit& c,
                       std::optional<RegisterState> initial = std::nullopt,
                       const SimulateOptions& options = {});

// Joint distribution over recorded measurement outcomes (measure_postselect
// and measure_record gates, one character each in gate order), exact from the
// density matrix. Keys sorted; probabilities sum to 1.
std::vector<std::pair<std::string, double>> outcome_distribution(
    const Circuit& c, std::optional<RegisterState> initial = std::nullopt);

// Unitary of a measurement-free gate list. qubit_order lists circuit qubits
// from most to least significant position of the matrix index.
ComplexMatrix circuit_unitary(const Circuit& c,
                              const std::vector<int>& qubit_order);

// ---------------------------------------------------------------------------
// Builders
// ---------------------------------------------------------------------------

// Maximally mixed state on n_sys system qubits via one Bell pair per qubit:
// Hadamard on the ancilla, CNOT ancilla->system, discard the ancilla.
// Qubits [0, n_sys) are system, [n_sys, 2 n_sys) are mme ancillas.
Circuit build_mme_prep(int n_sys);

// Multiplexed-Ry compilation of a dilated operator whose (ancilla ⊗ system)
// matrix is cos(theta_i) on the diagonal blocks and ±sin(theta_i) off the
// diagonal, in the eigenbasis `basis` (columns). Emits basis change, then the
// Gray-code CNOT ladder with 2^n Ry and 2^n CNOT, then the inverse change.
std::vector<Gate> compile_dilated_rotation(const ComplexMatrix& basis,
                                           const std::vector<double>& thetas,
                                           const std::vector<int>& system_qubits,
                                           int ancilla);

// Gray-code compiled thermal propagator fragment. Qubits [0, n_sys) are
// system, qubit n_sys is the qitp ancilla; no measurements. Its matrix in
// (ancilla ⊗ system) order equals qitp_th_matrix(h, params).
Circuit compile_qitp_gray(const Hamiltonian& h, const QitpParams& params);

// Fragment unitary in (ancilla ⊗ system) order, for comparing against the
// dilation matrices.
ComplexMatrix fragment_unitary(const Circuit& fragment);

// ---------------------------------------------------------------------------
// Full preparation pipeline: MME prep, one thermal fragment per Trotter entry
// (or a single exact fragment), post-selection on every qitp ancilla, then an
// optional observable fragment whose ancilla is recorded, not post-selected.
// ---------------------------------------------------------------------------

struct PipelineSpec {
    QitpParams params;
    std::optional<TrotterPlan> plan;      // absent: single exact fragment
    const Observable* observable = nullptr; // optional; must not be degenerate
};

Circuit build_thermal_pipeline(const Hamiltonian& h, const PipelineSpec& spec);

// Number of recorded post-selections in a pipeline (qitp ancilla count).
int pipeline_n_beta(const Circuit& c);

// ---------------------------------------------------------------------------
// Dump format: JSON document {"n_qubits", "roles", "gates": [...]} with
// angles and matrix entries at full double precision, so parse(dump(c))
// reproduces c.
// ---------------------------------------------------------------------------

std::string dump_circuit(const Circuit& c);
Circuit parse_circuit(const std::string& text);

} // namespace qitp
