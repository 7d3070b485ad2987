#include "qutop/dynamics.hpp"

#include <cmath>
#include <map>
#include <mutex>

namespace qutop {

namespace {

constexpr double kPi = 3.14159265358979323846;

// The pi/2 rotation about y depends only on j; cache it across parameter sets.
Matrix half_pi_rotation(double j) {
    static std::map<long, Matrix> cache;
    static std::mutex mutex;
    const long key = std::lround(2.0 * j);
    {
        std::lock_guard<std::mutex> lock(mutex);
        const auto it = cache.find(key);
        if (it != cache.end()) return it->second;
    }
    const SpinOperators ops = build_spin_operators(j);
    Matrix r = matrix_function_hermitian(
        ops.jy, [](double m) { return std::polar(1.0, -kPi / 2.0 * m); });
    std::lock_guard<std::mutex> lock(mutex);
    cache.emplace(key, r);
    return r;
}

long top_dim(double j) { return std::lround(2.0 * j) + 1; }

void check_state(const DensityMatrix& rho, const FloquetOperator& op) {
    if (rho.rho.rows() != op.u.rows() || rho.rho.cols() != op.u.cols())
        throw DimensionMismatch("state dimension does not match the propagator");
}

} // namespace

Matrix swap_operator(Eigen::Index d) {
    Matrix s = Matrix::Zero(d * d, d * d);
    for (Eigen::Index a = 0; a < d; ++a)
        for (Eigen::Index b = 0; b < d; ++b) s(a * d + b, b * d + a) = 1.0;
    return s;
}

Vector kick_diagonal(const TopParams& params) {
    const long d = top_dim(params.j);
    const Complex k(params.k_re, params.k_im);
    Vector diag(d * d);
    for (long i1 = 0; i1 < d; ++i1) {
        const double m1 = params.j - static_cast<double>(i1);
        for (long i2 = 0; i2 < d; ++i2) {
            const double m2 = params.j - static_cast<double>(i2);
            const Complex phase = k / (2.0 * params.j) * (m1 * m1 + m2 * m2) +
                                  params.epsilon / params.j * m1 * m2;
            diag[i1 * d + i2] = std::exp(Complex(0.0, -1.0) * phase);
        }
    }
    return diag;
}

Matrix single_top_floquet(double j, Complex k) {
    const long d = top_dim(j);
    Vector diag(d);
    for (long i = 0; i < d; ++i) {
        const double m = j - static_cast<double>(i);
        diag[i] = std::exp(Complex(0.0, -1.0) * (k / (2.0 * j) * m * m));
    }
    return diag.asDiagonal() * half_pi_rotation(j);
}

FloquetOperator build_floquet(const TopParams& params) {
    if (params.k_im < 0.0) throw OutOfRange("k_im must be non-negative");
    const Matrix r = half_pi_rotation(params.j);
    FloquetOperator op;
    op.params = params;
    op.is_unitary = (params.k_im == 0.0);
    op.u = kick_diagonal(params).asDiagonal() * kron(r, r);
    return op;
}

DensityMatrix step(const DensityMatrix& rho, const FloquetOperator& op, bool renormalize) {
    check_state(rho, op);
    DensityMatrix out = rho;
    Matrix next = op.u * rho.rho * op.u.adjoint();
    if (renormalize) {
        const double trace = next.trace().real();
        if (trace < 1e-300) throw TraceCollapse("state annihilated, cannot renormalize");
        next /= trace;
    }
    out.rho = (next + next.adjoint()) / 2.0;
    return out;
}

std::vector<DensityMatrix> evolve(const DensityMatrix& rho, const FloquetOperator& op,
                                  long n_steps, bool renormalize) {
    std::vector<DensityMatrix> states;
    states.reserve(static_cast<size_t>(n_steps) + 1);
    evolve_observe(rho, op, n_steps, renormalize,
                   [&](long, const DensityMatrix& r) { states.push_back(r); });
    return states;
}

void evolve_observe(const DensityMatrix& rho, const FloquetOperator& op, long n_steps,
                    bool renormalize,
                    const std::function<void(long, const DensityMatrix&)>& observer) {
    check_state(rho, op);
    if (op.params.k_im > 0.0 && !renormalize)
        throw std::invalid_argument("non-unitary evolution requires renormalization");
    if (n_steps < 0) throw std::invalid_argument("n_steps must be non-negative");
    DensityMatrix current = rho;
    observer(0, current);
    for (long t = 1; t <= n_steps; ++t) {
        current = step(current, op, renormalize);
        observer(t, current);
    }
}

namespace {

// Orthonormal bases of the exchange-symmetric and antisymmetric sectors.
std::pair<Matrix, Matrix> parity_bases(Eigen::Index d) {
    const double inv_sqrt2 = 1.0 / std::sqrt(2.0);
    Matrix even = Matrix::Zero(d * d, d * (d + 1) / 2);
    Matrix odd = Matrix::Zero(d * d, d * (d - 1) / 2);
    Eigen::Index ce = 0;
    Eigen::Index co = 0;
    for (Eigen::Index a = 0; a < d; ++a) even(a * d + a, ce++) = 1.0;
    for (Eigen::Index a = 0; a < d; ++a) {
        for (Eigen::Index b = a + 1; b < d; ++b) {
            even(a * d + b, ce) = inv_sqrt2;
            even(b * d + a, ce) = inv_sqrt2;
            ++ce;
            odd(a * d + b, co) = inv_sqrt2;
            odd(b * d + a, co) = -inv_sqrt2;
            ++co;
        }
    }
    return {even, odd};
}

} // namespace

ParityDecomposition parity_decompose(const FloquetOperator& op, const Vector& psi_plus) {
    if (!op.is_unitary || op.params.k_im > 0.0)
        throw NotUnitary("parity decomposition requires a unitary propagator");
    if (psi_plus.size() != op.u.rows())
        throw DimensionMismatch("state dimension does not match the propagator");
    const Eigen::Index d = top_dim(op.params.j);
    const auto [basis_even, basis_odd] = parity_bases(d);

    const UnitaryEig even = unitary_eigenphases(Matrix(basis_even.adjoint() * op.u * basis_even));
    const UnitaryEig odd = unitary_eigenphases(Matrix(basis_odd.adjoint() * op.u * basis_odd));

    ParityDecomposition out;
    out.even_phases = even.phases;
    out.odd_phases = odd.phases;
    out.even_states = basis_even * even.eigenvectors;
    out.odd_states = basis_odd * odd.eigenvectors;
    out.coeff_even = out.even_states.adjoint() * psi_plus;
    out.coeff_odd = -(out.odd_states.adjoint() * psi_plus);
    return out;
}

Vector spectral_psi(const ParityDecomposition& decomp, long n, bool plus) {
    Vector psi = Vector::Zero(decomp.even_states.rows());
    for (Eigen::Index i = 0; i < decomp.even_phases.size(); ++i)
        psi += decomp.coeff_even[i] *
               std::polar(1.0, static_cast<double>(n) * decomp.even_phases[i]) *
               decomp.even_states.col(i);
    const double sign = plus ? -1.0 : 1.0;
    for (Eigen::Index i = 0; i < decomp.odd_phases.size(); ++i)
        psi += sign * decomp.coeff_odd[i] *
               std::polar(1.0, static_cast<double>(n) * decomp.odd_phases[i]) *
               decomp.odd_states.col(i);
    return psi;
}

DensityMatrix spectral_density(const ParityDecomposition& decomp, double p, long n) {
    if (!(p >= 0.0 && p <= 1.0)) throw InvalidProbability("p must lie in [0,1]");
    const Vector plus = spectral_psi(decomp, n, true);
    const Vector minus = spectral_psi(decomp, n, false);
    DensityMatrix out;
    const auto d = static_cast<Eigen::Index>(std::lround(std::sqrt(static_cast<double>(plus.size()))));
    out.dim_a = d;
    out.dim_b = d;
    out.rho = p * (plus * plus.adjoint()) + (1.0 - p) * (minus * minus.adjoint());
    return out;
}

} // namespace qutop
