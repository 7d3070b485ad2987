#pragma once

#include "qutop/linalg.hpp"
#include "qutop/spin.hpp"

namespace qutop {

/// Eigenvalues of rho in [-1e-10, 0) are treated as rounding and clamped;
/// anything more negative signals an evolution bug.
inline constexpr double kPsdClamp = 1e-10;

/// Transpose of the second tensor factor. Output is Hermitian when the
/// input is; trace is preserved.
Matrix partial_transpose(const DensityMatrix& rho);

/// log2 of the trace norm of the partial transpose, clamped at 0.
double log_negativity(const DensityMatrix& rho);

/// Uhlmann fidelity [Tr sqrt(sqrt(rho1) rho2 sqrt(rho1))]^2 in [0,1].
double fidelity(const DensityMatrix& rho1, const DensityMatrix& rho2);

/// -sum lambda log_base lambda with 0 log 0 = 0. Requires base > 1.
double von_neumann_entropy(const DensityMatrix& rho, double base = 2.0);

/// Entropy gained by the symmetric p=0.5 mixture over the p=0 pure case as
/// a function of x = |<psi1|psi2>|^2:
/// 1 - (1/ln4) [(1-x) ln(1-x) + (1+x) ln(1+x)], in [0,1].
double delta_entropy(double overlap_sq);

/// Principal square root of a PSD Hermitian matrix, with the kPsdClamp rule.
Matrix matrix_sqrt_psd(const Matrix& m, double tol = kDefaultTol);

} // namespace qutop
