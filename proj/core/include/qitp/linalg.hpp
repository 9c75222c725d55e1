#pragma once

#include <complex>
#include <functional>
#include <vector>

#include <Eigen/Dense>

#include "qitp/errors.hpp"
#include "qitp/tolerances.hpp"

namespace qitp {

using Complex = std::complex<double>;
using ComplexMatrix = Eigen::MatrixXcd;
using ComplexVector = Eigen::VectorXcd;
using RealVector = Eigen::VectorXd;

// Eigendecomposition of a Hermitian matrix with a deterministic gauge:
// eigenvalues ascending, each eigenvector's largest-magnitude component made
// real and positive (ties broken toward the lowest index).
struct Eigensystem {
    RealVector eigenvalues;
    ComplexMatrix eigenvectors; // column k pairs with eigenvalues[k]
};

double max_abs_diff(const ComplexMatrix& a, const ComplexMatrix& b);
bool approx_equal(const ComplexMatrix& a, const ComplexMatrix& b, double tolerance);

bool is_hermitian(const ComplexMatrix& m, double tolerance = tol::HERMITICITY);

// Throws NonSquareError / NonHermitianError / BadDimensionError (above 12
// qubits). Guarantees eigenvectors * diag(eigenvalues) * eigenvectors^dagger
// reconstructs m within tol::RECONSTRUCTION.
Eigensystem hermitian_eig(const ComplexMatrix& m);

// f applied to the spectrum: V diag(f(e_k)) V^dagger. f returning NaN or Inf
// for any eigenvalue raises DomainError.
ComplexMatrix matrix_func_hermitian(const ComplexMatrix& m,
                                    const std::function<double(double)>& f);
ComplexMatrix matrix_func(const Eigensystem& es,
                          const std::function<double(double)>& f);

ComplexMatrix kron(const ComplexMatrix& a, const ComplexMatrix& b);

// Partial trace over the qubits NOT listed in `keep`. Qubit 0 is the most
// significant bit of the index; kept qubits stay in ascending order.
ComplexMatrix partial_trace(const ComplexMatrix& rho,
                            const std::vector<int>& keep,
                            int total_qubits);

ComplexMatrix identity_matrix(int dim);

// dim must be a power of two; returns the qubit count, else BadDimensionError.
int qubit_count_for_dim(Eigen::Index dim);

} // namespace qitp
