#pragma once

#include <functional>
#include <vector>

#include "qutop/linalg.hpp"
#include "qutop/spin.hpp"

namespace qutop {

/// Parameters of the coupled symmetric tops. The kick strength is
/// k_re + i k_im; a positive imaginary part amplifies the large-|m|
/// components of the kick and drives the dynamics non-unitary.
struct TopParams {
    double j = 1.0;
    double k_re = 0.0;
    double k_im = 0.0;
    double epsilon = 0.0;
};

/// One-period propagator U = K (R x R): a pi/2 rotation of both tops about
/// y followed by a diagonal kick exp(-i[(k/2j)(m1^2+m2^2) + (eps/j) m1 m2]).
struct FloquetOperator {
    Matrix u;
    TopParams params;
    bool is_unitary = true;
};

/// Floquet spectrum split by exchange parity together with the expansion
/// coefficients of an initial product state pair:
///   |g2>|g1> = sum a_i |e_i> + sum b_i |o_i>
///   |g1>|g2> = sum a_i |e_i> - sum b_i |o_i>
struct ParityDecomposition {
    RealVector even_phases; // ascending, (j+1)(2j+1) entries
    RealVector odd_phases;  // ascending, j(2j+1) entries
    Matrix even_states;     // orthonormal columns, SWAP +1
    Matrix odd_states;      // orthonormal columns, SWAP -1
    Vector coeff_even;      // a_i
    Vector coeff_odd;       // b_i
};

/// Tensor-factor exchange: SWAP |a>|b> = |b>|a>.
Matrix swap_operator(Eigen::Index d);

/// Diagonal of the kick operator over the product Jz basis.
Vector kick_diagonal(const TopParams& params);

/// One-period propagator of a single top, exp(-i (k/2j) Jz^2) exp(-i (pi/2) Jy).
Matrix single_top_floquet(double j, Complex k);

FloquetOperator build_floquet(const TopParams& params);

/// One kick period. With renormalize the output is scaled back to unit
/// trace; throws TraceCollapse when the trace falls below 1e-300.
DensityMatrix step(const DensityMatrix& rho, const FloquetOperator& op, bool renormalize);

/// States at t = 0..n_steps (n_steps+1 entries). renormalize is required
/// when k_im > 0.
std::vector<DensityMatrix> evolve(const DensityMatrix& rho, const FloquetOperator& op,
                                  long n_steps, bool renormalize);

/// Streaming variant: observer(t, rho_t) for t = 0..n_steps, no storage.
void evolve_observe(const DensityMatrix& rho, const FloquetOperator& op, long n_steps,
                    bool renormalize,
                    const std::function<void(long, const DensityMatrix&)>& observer);

/// Requires a unitary operator (k_im = 0); psi_plus is |g1> x |g2>.
ParityDecomposition parity_decompose(const FloquetOperator& op, const Vector& psi_plus);

/// Eigenphase propagation of |psi+> (plus) or |psi-> over n periods.
Vector spectral_psi(const ParityDecomposition& decomp, long n, bool plus);

/// rho_p(n) reconstructed from the parity spectrum; for p = 0.5 the
/// cross-parity coherences cancel.
DensityMatrix spectral_density(const ParityDecomposition& decomp, double p, long n);

} // namespace qutop
