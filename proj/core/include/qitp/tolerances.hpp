#pragma once

namespace qitp::tol {

// Central numeric tolerances. Validation thresholds live here so tests and
// callers see the same numbers the library enforces.

// Hermiticity admission: max |M - M^dagger| entry allowed.
inline constexpr double HERMITICITY = 1e-12;

// Eigendecomposition must reconstruct its input to this accuracy.
inline constexpr double RECONSTRUCTION = 1e-10;

// Pair terms must sum to the declared dense matrix to this accuracy.
inline constexpr double PAIR_SUM = 1e-10;

// Density-matrix trace drift allowed after each simulator operation.
inline constexpr double TRACE = 1e-10;

// Eigenvalue floor when checking density-matrix positivity (debug checks).
inline constexpr double POSITIVITY = 1e-10;

// Post-selection outcomes with probability below this are treated as
// impossible and raise ZeroProbabilityError rather than dividing by noise.
inline constexpr double POSTSELECT_FLOOR = 1e-14;

// Slack on the dilation feasibility bound p*exp(-2*tau*(E_i - E_T)) <= 1,
// absorbing eigensolver roundoff when E_T sits exactly on the ground energy.
inline constexpr double FEASIBILITY_SLACK = 1e-12;

// Pauli coefficients with magnitude below this are dropped from expansions.
inline constexpr double PAULI_PRUNE = 1e-12;

// Two eigenvalues closer than this (on a unit-scale spectrum) are treated as
// degenerate when forming ground-space averages.
inline constexpr double DEGENERACY = 1e-9;

// Largest register the dense linear-algebra layer accepts: 12 qubits.
inline constexpr int MAX_QUBITS = 12;

} // namespace qitp::tol
