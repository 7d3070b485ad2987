#include "qutop/linalg.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

namespace qutop {

namespace {

void require_square(const Matrix& m) {
    if (m.rows() != m.cols() || m.rows() < 1)
        throw DimensionMismatch("matrix must be square and non-empty");
}

} // namespace

HermitianEig hermitian_eig(const Matrix& m, double tol) {
    require_square(m);
    if (max_abs(m - m.adjoint()) > tol)
        throw NotHermitian("matrix is not Hermitian within tolerance");

    Eigen::SelfAdjointEigenSolver<Matrix> solver(m);
    if (solver.info() != Eigen::Success)
        throw NoConvergence("Hermitian eigensolver did not converge");
    return {solver.eigenvalues(), solver.eigenvectors()};
}

namespace {

// Rotate eigenvectors of hc inside each degenerate cluster so that they also
// diagonalize hs. hc and hs commute when U is unitary.
void split_clusters(const RealVector& cos_vals, Matrix& vecs, const Matrix& hs,
                    double cluster_tol) {
    const Eigen::Index n = cos_vals.size();
    Eigen::Index lo = 0;
    while (lo < n) {
        Eigen::Index hi = lo + 1;
        while (hi < n && cos_vals[hi] - cos_vals[hi - 1] < cluster_tol) ++hi;
        const Eigen::Index size = hi - lo;
        if (size > 1) {
            Matrix block = vecs.middleCols(lo, size);
            Matrix w = block.adjoint() * hs * block;
            w = Matrix(((w + w.adjoint()) / 2.0).eval());
            Eigen::SelfAdjointEigenSolver<Matrix> sub(w);
            if (sub.info() != Eigen::Success)
                throw NoConvergence("cluster sub-solver did not converge");
            vecs.middleCols(lo, size) = block * sub.eigenvectors();
        }
        lo = hi;
    }
}

} // namespace

UnitaryEig unitary_eigenphases(const Matrix& u, double tol) {
    require_square(u);
    const Eigen::Index n = u.rows();
    if (max_abs(u.adjoint() * u - Matrix::Identity(n, n)) > tol)
        throw NotUnitary("matrix is not unitary within tolerance");

    const Matrix hc = (u + u.adjoint()) / 2.0;
    const Matrix hs = (u - u.adjoint()) / Complex(0.0, 2.0);
    const HermitianEig base = hermitian_eig(hc, 10 * tol);

    // Widen the cluster tolerance until the per-pair residual gate passes;
    // near-degenerate cos values otherwise leave the basis under-resolved.
    const double residual_gate = 1e-10;
    for (double cluster_tol : {kClusterTol, 1e-7, 1e-5, 1e-3}) {
        Matrix vecs = base.eigenvectors;
        split_clusters(base.eigenvalues, vecs, hs, cluster_tol);

        RealVector phases(n);
        for (Eigen::Index i = 0; i < n; ++i) {
            const Vector v = vecs.col(i);
            const double c = (v.adjoint() * hc * v)(0).real();
            const double s = (v.adjoint() * hs * v)(0).real();
            phases[i] = std::atan2(s, c);
        }

        std::vector<Eigen::Index> order(static_cast<size_t>(n));
        std::iota(order.begin(), order.end(), 0);
        std::stable_sort(order.begin(), order.end(),
                         [&](Eigen::Index a, Eigen::Index b) { return phases[a] < phases[b]; });

        UnitaryEig out;
        out.phases.resize(n);
        out.eigenvalues.resize(n);
        out.eigenvectors.resize(n, n);
        for (Eigen::Index i = 0; i < n; ++i) {
            out.phases[i] = phases[order[static_cast<size_t>(i)]];
            out.eigenvalues[i] = std::polar(1.0, out.phases[i]);
            out.eigenvectors.col(i) = vecs.col(order[static_cast<size_t>(i)]);
        }

        double worst = 0.0;
        for (Eigen::Index i = 0; i < n; ++i) {
            const double r = (u * out.eigenvectors.col(i) -
                              out.eigenvalues[i] * out.eigenvectors.col(i))
                                 .norm();
            worst = std::max(worst, r);
        }
        if (worst <= residual_gate) return out;
    }
    throw NoConvergence("unitary eigenphase residual gate not met");
}

Matrix matrix_function_hermitian(const Matrix& m, const std::function<Complex(double)>& f,
                                 double tol) {
    const HermitianEig eig = hermitian_eig(m, tol);
    Vector mapped(eig.eigenvalues.size());
    for (Eigen::Index i = 0; i < eig.eigenvalues.size(); ++i)
        mapped[i] = f(eig.eigenvalues[i]);
    return eig.eigenvectors * mapped.asDiagonal() * eig.eigenvectors.adjoint();
}

} // namespace qutop
