#include "qitp/linalg.hpp"

#include <cmath>

namespace qitp {

double max_abs_diff(const ComplexMatrix& a, const ComplexMatrix& b) {
    if (a.rows() != b.rows() || a.cols() != b.cols())
        throw BadDimensionError("max_abs_diff: shapes differ");
    if (a.size() == 0) return 0.0;
    return (a - b).cwiseAbs().maxCoeff();
}

bool approx_equal(const ComplexMatrix& a, const ComplexMatrix& b, double tolerance) {
    return max_abs_diff(a, b) <= tolerance;
}

bool is_hermitian(const ComplexMatrix& m, double tolerance) {
    if (m.rows() != m.cols()) return false;
    return max_abs_diff(m, m.adjoint()) <= tolerance;
}

int qubit_count_for_dim(Eigen::Index dim) {
    if (dim < 1) throw BadDimensionError("dimension must be positive");
    int n = 0;
    Eigen::Index d = dim;
    while (d > 1) {
        if (d % 2 != 0) throw BadDimensionError("dimension is not a power of two");
        d /= 2;
        ++n;
    }
    if (n > tol::MAX_QUBITS)
        throw BadDimensionError("register exceeds the 12-qubit dense limit");
    return n;
}

Eigensystem hermitian_eig(const ComplexMatrix& m) {
    if (m.rows() != m.cols())
        throw NonSquareError("eigendecomposition needs a square matrix");
    if (m.rows() < 1 || m.rows() > (1l << tol::MAX_QUBITS))
        throw BadDimensionError("matrix exceeds the 12-qubit dense limit");
    if (!is_hermitian(m))
        throw NonHermitianError("matrix is not Hermitian within tolerance");

    Eigen::SelfAdjointEigenSolver<ComplexMatrix> solver(m);
    if (solver.info() != Eigen::Success)
        throw NonHermitianError("eigendecomposition failed to converge");

    Eigensystem es{solver.eigenvalues(), solver.eigenvectors()};

    // Deterministic gauge: rotate each column so its largest-magnitude
    // component (lowest index on ties) is real and positive.
    for (Eigen::Index k = 0; k < es.eigenvectors.cols(); ++k) {
        Eigen::Index pivot = 0;
        double best = -1.0;
        for (Eigen::Index i = 0; i < es.eigenvectors.rows(); ++i) {
            const double mag = std::abs(es.eigenvectors(i, k));
            if (mag > best + 1e-12) {
                best = mag;
                pivot = i;
            }
        }
        const Complex v = es.eigenvectors(pivot, k);
        if (std::abs(v) > 0.0) es.eigenvectors.col(k) *= std::conj(v) / std::abs(v);
    }

    const ComplexMatrix recon = es.eigenvectors * es.eigenvalues.asDiagonal() *
                                es.eigenvectors.adjoint();
    if (max_abs_diff(recon, m) > tol::RECONSTRUCTION)
        throw NonHermitianError("eigendecomposition failed reconstruction check");
    return es;
}

ComplexMatrix matrix_func(const Eigensystem& es,
                          const std::function<double(double)>& f) {
    RealVector mapped(es.eigenvalues.size());
    for (Eigen::Index k = 0; k < es.eigenvalues.size(); ++k) {
        const double y = f(es.eigenvalues(k));
        if (!std::isfinite(y))
            throw DomainError("function undefined at eigenvalue " +
                              std::to_string(es.eigenvalues(k)));
        mapped(k) = y;
    }
    return es.eigenvectors * mapped.asDiagonal() * es.eigenvectors.adjoint();
}

ComplexMatrix matrix_func_hermitian(const ComplexMatrix& m,
                                    const std::function<double(double)>& f) {
    return matrix_func(hermitian_eig(m), f);
}

ComplexMatrix kron(const ComplexMatrix& a, const ComplexMatrix& b) {
    const Eigen::Index p = b.rows(), q = b.cols();
    ComplexMatrix out(a.rows() * p, a.cols() * q);
    for (Eigen::Index i = 0; i < a.rows(); ++i)
        for (Eigen::Index j = 0; j < a.cols(); ++j)
            out.block(i * p, j * q, p, q) = a(i, j) * b;
    return out;
}

ComplexMatrix identity_matrix(int dim) {
    return ComplexMatrix::Identity(dim, dim);
}

ComplexMatrix partial_trace(const ComplexMatrix& rho,
                            const std::vector<int>& keep,
                            int total_qubits) {
    if (rho.rows() != rho.cols())
        throw NonSquareError("partial_trace needs a square matrix");
    if (rho.rows() != (Eigen::Index{1} << total_qubits))
        throw BadDimensionError("partial_trace: dimension does not match qubit count");

    std::vector<bool> kept(total_qubits, false);
    for (int q : keep) {
        if (q < 0 || q >= total_qubits)
            throw BadIndexError("partial_trace: qubit index out of range");
        if (kept[q]) throw BadIndexError("partial_trace: duplicate qubit index");
        kept[q] = true;
    }

    // Ascending kept / traced qubit lists; bit position of qubit q is
    // total_qubits - 1 - q (qubit 0 most significant).
    std::vector<int> keep_sorted, traced;
    for (int q = 0; q < total_qubits; ++q)
        (kept[q] ? keep_sorted : traced).push_back(q);

    const int nk = static_cast<int>(keep_sorted.size());
    const int nt = static_cast<int>(traced.size());
    const long dk = 1l << nk;
    const long dt = 1l << nt;

    // index = scatter of kept bits + scatter of traced bits
    const auto scatter = [total_qubits](long bits, const std::vector<int>& qubits) {
        long idx = 0;
        for (std::size_t m = 0; m < qubits.size(); ++m) {
            const long bit = (bits >> (qubits.size() - 1 - m)) & 1l;
            idx |= bit << (total_qubits - 1 - qubits[m]);
        }
        return idx;
    };

    ComplexMatrix out = ComplexMatrix::Zero(dk, dk);
    for (long ik = 0; ik < dk; ++ik) {
        for (long jk = 0; jk < dk; ++jk) {
            Complex sum = 0.0;
            const long ibase = scatter(ik, keep_sorted);
            const long jbase = scatter(jk, keep_sorted);
            for (long t = 0; t < dt; ++t) {
                const long toff = scatter(t, traced);
                sum += rho(ibase | toff, jbase | toff);
            }
            out(ik, jk) = sum;
        }
    }
    return out;
}

} // namespace qitp
