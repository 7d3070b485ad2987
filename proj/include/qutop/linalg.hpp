#pragma once

#include <Eigen/Dense>

#include <complex>
#include <functional>

#include "qutop/errors.hpp"

namespace qutop {

using Complex = std::complex<double>;
using Matrix = Eigen::MatrixXcd;
using Vector = Eigen::VectorXcd;
using RealVector = Eigen::VectorXd;

/// Default absolute tolerance for Hermiticity/unitarity gates.
inline constexpr double kDefaultTol = 1e-10;

/// Eigenvalues closer than this are treated as one degenerate cluster.
inline constexpr double kClusterTol = 1e-9;

inline double max_abs(const Matrix& m) { return m.cwiseAbs().maxCoeff(); }

struct HermitianEig {
    RealVector eigenvalues; // ascending
    Matrix eigenvectors;    // orthonormal columns
};

struct UnitaryEig {
    RealVector phases;  // ascending in (-pi, pi]
    Vector eigenvalues; // exp(i*phase)
    Matrix eigenvectors;
};

/// Spectral decomposition of a Hermitian matrix. Throws NotHermitian when
/// max |M - M^dagger| exceeds tol, NoConvergence if the solver fails.
HermitianEig hermitian_eig(const Matrix& m, double tol = kDefaultTol);

/// Eigenphases of a unitary matrix, obtained by jointly diagonalizing the
/// commuting Hermitian pair (U+U^dagger)/2 and (U-U^dagger)/(2i). Guarantees
/// orthonormal eigenvectors across degenerate clusters and a per-pair
/// residual ||U v - e^{i phi} v|| <= 1e-10.
UnitaryEig unitary_eigenphases(const Matrix& u, double tol = kDefaultTol);

/// Kronecker product, entry ((i*rb+k),(j*cb+l)) = A(i,j) B(k,l).
template <typename DerivedA, typename DerivedB>
Matrix kron(const Eigen::MatrixBase<DerivedA>& a, const Eigen::MatrixBase<DerivedB>& b) {
    Matrix out(a.rows() * b.rows(), a.cols() * b.cols());
    for (Eigen::Index i = 0; i < a.rows(); ++i)
        for (Eigen::Index j = 0; j < a.cols(); ++j)
            out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b.derived();
    return out;
}

/// V f(diag) V^dagger for Hermitian input. The scalar map may throw
/// DomainError where it is undefined (e.g. sqrt below -tol).
Matrix matrix_function_hermitian(const Matrix& m, const std::function<Complex(double)>& f,
                                 double tol = kDefaultTol);

} // namespace qutop
