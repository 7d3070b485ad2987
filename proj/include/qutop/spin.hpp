#pragma once

#include "qutop/linalg.hpp"

namespace qutop {

/// Angular momentum matrices for one spin-j top in the |j,m> basis,
/// m descending (j, j-1, ..., -j).
struct SpinOperators {
    double j;
    Eigen::Index dim; // 2j+1
    Matrix jx, jy, jz;
};

/// gamma = exp(i phi) tan(theta/2). The theta = pi pole (gamma -> infinity)
/// is carried as an explicit flag and maps to the basis state |j,-j>.
struct CoherentParam {
    Complex gamma{0.0, 0.0};
    bool at_pole = false;

    CoherentParam() = default;
    CoherentParam(Complex g) : gamma(g) {}
    CoherentParam(double re, double im) : gamma(re, im) {}

    static CoherentParam pole() {
        CoherentParam p;
        p.at_pole = true;
        return p;
    }
    static CoherentParam from_angles(double theta, double phi);
};

/// Bipartite density matrix: Hermitian, unit trace, PSD within 1e-10.
struct DensityMatrix {
    Matrix rho;
    Eigen::Index dim_a = 1;
    Eigen::Index dim_b = 1;
};

/// Throws InvalidSpin unless 2j is a positive integer.
SpinOperators build_spin_operators(double j);

/// Normalized spin coherent state, amplitude of |j,m> proportional to
/// gamma^(j-m) sqrt(C(2j, j+m)).
Vector coherent_state(double j, const CoherentParam& gamma);

/// Closed-form overlap <gamma1|gamma2> =
/// (1 + conj(gamma1) gamma2)^2j / [(1+|gamma1|^2)^j (1+|gamma2|^2)^j].
Complex coherent_overlap(double j, const CoherentParam& gamma1, const CoherentParam& gamma2);

/// rho(0) = p |psi+><psi+| + (1-p) |psi-><psi-| with psi+ = |g1> x |g2>,
/// psi- = |g2> x |g1>.
DensityMatrix initial_density(double j, const CoherentParam& gamma1, const CoherentParam& gamma2,
                              double p);

} // namespace qutop
