#include "qutop/spin.hpp"

#include <cmath>

namespace qutop {

namespace {

constexpr double kPi = 3.14159265358979323846;

long spin_dim(double j) {
    const double two_j = 2.0 * j;
    const long rounded = std::lround(two_j);
    if (!(j > 0.0) || rounded < 1 || std::abs(two_j - static_cast<double>(rounded)) > 1e-9)
        throw InvalidSpin("j must be a positive half-integer");
    return rounded + 1;
}

double binomial(long n, long k) {
    return std::exp(std::lgamma(static_cast<double>(n) + 1.0) -
                    std::lgamma(static_cast<double>(k) + 1.0) -
                    std::lgamma(static_cast<double>(n - k) + 1.0));
}

Complex cpow_int(Complex base, long e) {
    Complex out{1.0, 0.0};
    for (long i = 0; i < e; ++i) out *= base;
    return out;
}

} // namespace

CoherentParam CoherentParam::from_angles(double theta, double phi) {
    if (theta == kPi) return CoherentParam::pole();
    return CoherentParam(std::polar(1.0, phi) * std::tan(theta / 2.0));
}

SpinOperators build_spin_operators(double j) {
    const long dim = spin_dim(j);
    SpinOperators ops;
    ops.j = j;
    ops.dim = dim;
    ops.jz = Matrix::Zero(dim, dim);
    Matrix jplus = Matrix::Zero(dim, dim);
    for (long i = 0; i < dim; ++i) {
        const double m = j - static_cast<double>(i);
        ops.jz(i, i) = m;
        // J+ |j,m> = sqrt(j(j+1) - m(m+1)) |j,m+1>, one row up with m descending
        if (i > 0) jplus(i - 1, i) = std::sqrt(j * (j + 1.0) - m * (m + 1.0));
    }
    const Matrix jminus = jplus.adjoint();
    ops.jx = (jplus + jminus) / 2.0;
    ops.jy = (jplus - jminus) / Complex(0.0, 2.0);
    return ops;
}

Vector coherent_state(double j, const CoherentParam& gamma) {
    const long dim = spin_dim(j);
    Vector psi = Vector::Zero(dim);
    if (gamma.at_pole) {
        psi[dim - 1] = 1.0; // |j,-j>
        return psi;
    }
    const double norm = std::pow(1.0 + std::norm(gamma.gamma), -j);
    for (long i = 0; i < dim; ++i) {
        // index i has m = j - i, so the gamma exponent j - m equals i
        psi[i] = norm * cpow_int(gamma.gamma, i) * std::sqrt(binomial(dim - 1, i));
    }
    return psi;
}

Complex coherent_overlap(double j, const CoherentParam& gamma1, const CoherentParam& gamma2) {
    if (gamma1.at_pole || gamma2.at_pole) {
        const Vector a = coherent_state(j, gamma1);
        const Vector b = coherent_state(j, gamma2);
        return a.dot(b);
    }
    const long two_j = spin_dim(j) - 1;
    const Complex num = cpow_int(1.0 + std::conj(gamma1.gamma) * gamma2.gamma, two_j);
    const double den =
        std::pow((1.0 + std::norm(gamma1.gamma)) * (1.0 + std::norm(gamma2.gamma)), j);
    return num / den;
}

DensityMatrix initial_density(double j, const CoherentParam& gamma1, const CoherentParam& gamma2,
                              double p) {
    if (!(p >= 0.0 && p <= 1.0)) throw InvalidProbability("p must lie in [0,1]");
    const Vector g1 = coherent_state(j, gamma1);
    const Vector g2 = coherent_state(j, gamma2);
    const Vector psi_plus = kron(g1, g2);
    const Vector psi_minus = kron(g2, g1);
    DensityMatrix out;
    out.dim_a = g1.size();
    out.dim_b = g2.size();
    out.rho = p * (psi_plus * psi_plus.adjoint()) + (1.0 - p) * (psi_minus * psi_minus.adjoint());
    return out;
}

} // namespace qutop
