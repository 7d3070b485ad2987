#include "qutop/measures.hpp"

#include <cmath>

namespace qutop {

namespace {

double clamp_eigenvalue(double lambda) {
    if (lambda >= 0.0) return lambda;
    if (lambda >= -kPsdClamp) return 0.0;
    throw DomainError("matrix has a negative eigenvalue beyond the rounding clamp");
}

} // namespace

Matrix partial_transpose(const DensityMatrix& rho) {
    const Eigen::Index da = rho.dim_a;
    const Eigen::Index db = rho.dim_b;
    if (da < 1 || db < 1 || da * db != rho.rho.rows() || rho.rho.rows() != rho.rho.cols())
        throw DimensionMismatch("bipartition does not match matrix dimension");
    Matrix out(da * db, da * db);
    for (Eigen::Index a = 0; a < da; ++a)
        for (Eigen::Index ap = 0; ap < da; ++ap)
            for (Eigen::Index b = 0; b < db; ++b)
                for (Eigen::Index bp = 0; bp < db; ++bp)
                    out(a * db + b, ap * db + bp) = rho.rho(a * db + bp, ap * db + b);
    return out;
}

double log_negativity(const DensityMatrix& rho) {
    const Matrix pt = partial_transpose(rho);
    const HermitianEig eig = hermitian_eig(pt);
    const double trace_norm = eig.eigenvalues.cwiseAbs().sum();
    return std::max(0.0, std::log2(trace_norm));
}

Matrix matrix_sqrt_psd(const Matrix& m, double tol) {
    return matrix_function_hermitian(
        m, [](double lambda) { return Complex(std::sqrt(clamp_eigenvalue(lambda)), 0.0); }, tol);
}

double fidelity(const DensityMatrix& rho1, const DensityMatrix& rho2) {
    if (rho1.rho.rows() != rho2.rho.rows() || rho1.rho.cols() != rho2.rho.cols())
        throw DimensionMismatch("fidelity requires equal dimensions");
    const Matrix s1 = matrix_sqrt_psd(rho1.rho);
    Matrix inner = s1 * rho2.rho * s1;
    inner = Matrix(((inner + inner.adjoint()) / 2.0).eval());
    const HermitianEig eig = hermitian_eig(inner);
    double trace_sqrt = 0.0;
    for (Eigen::Index i = 0; i < eig.eigenvalues.size(); ++i)
        trace_sqrt += std::sqrt(clamp_eigenvalue(eig.eigenvalues[i]));
    const double f = trace_sqrt * trace_sqrt;
    return std::clamp(f, 0.0, 1.0);
}

double von_neumann_entropy(const DensityMatrix& rho, double base) {
    if (!(base > 1.0)) throw OutOfRange("entropy base must exceed 1");
    const HermitianEig eig = hermitian_eig(rho.rho);
    double s = 0.0;
    for (Eigen::Index i = 0; i < eig.eigenvalues.size(); ++i) {
        const double lambda = clamp_eigenvalue(eig.eigenvalues[i]);
        if (lambda > 0.0) s -= lambda * std::log(lambda);
    }
    return s / std::log(base);
}

double delta_entropy(double overlap_sq) {
    if (!(overlap_sq >= 0.0 && overlap_sq <= 1.0))
        throw OutOfRange("overlap_sq must lie in [0,1]");
    const double x = overlap_sq;
    const double lo = (x < 1.0) ? (1.0 - x) * std::log(1.0 - x) : 0.0;
    const double hi = (1.0 + x) * std::log(1.0 + x);
    return 1.0 - (lo + hi) / std::log(4.0);
}

} // namespace qutop
