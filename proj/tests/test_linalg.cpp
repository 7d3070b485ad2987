#include <doctest.h>

#include <cmath>
#include <random>

#include "qutop/dynamics.hpp"
#include "qutop/linalg.hpp"
#include "qutop/spin.hpp"

using namespace qutop;

namespace {

Matrix random_complex(Eigen::Index n, std::mt19937& rng) {
    std::uniform_real_distribution<double> dist(-1.0, 1.0);
    Matrix m(n, n);
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index k = 0; k < n; ++k) m(i, k) = Complex(dist(rng), dist(rng));
    return m;
}

Matrix random_hermitian(Eigen::Index n, std::mt19937& rng) {
    const Matrix m = random_complex(n, rng);
    return (m + m.adjoint()) / 2.0;
}

// 3x3 determinant by cofactor expansion, independent of the eigensolver.
Complex det3(const Matrix& m) {
    return m(0, 0) * (m(1, 1) * m(2, 2) - m(1, 2) * m(2, 1)) -
           m(0, 1) * (m(1, 0) * m(2, 2) - m(1, 2) * m(2, 0)) +
           m(0, 2) * (m(1, 0) * m(2, 1) - m(1, 1) * m(2, 0));
}

// Taylor series of exp(A) summed to machine precision.
Matrix exp_series(const Matrix& a) {
    Matrix sum = Matrix::Identity(a.rows(), a.cols());
    Matrix term = sum;
    for (int n = 1; n < 80; ++n) {
        term = Matrix(term * a / static_cast<double>(n));
        sum += term;
        if (max_abs(term) < 1e-18) break;
    }
    return sum;
}

} // namespace

TEST_CASE("hermitian_eig identity and diagonal") {
    const Matrix eye = Matrix::Identity(3, 3);
    const HermitianEig eig = hermitian_eig(eye);
    for (int i = 0; i < 3; ++i) CHECK(eig.eigenvalues[i] == doctest::Approx(1.0));
    CHECK(max_abs(eig.eigenvectors.adjoint() * eig.eigenvectors - eye) < 1e-12);

    Matrix d = Matrix::Zero(3, 3);
    d(0, 0) = 3.0;
    d(1, 1) = 1.0;
    d(2, 2) = 2.0;
    const HermitianEig sorted = hermitian_eig(d);
    CHECK(sorted.eigenvalues[0] == doctest::Approx(1.0));
    CHECK(sorted.eigenvalues[1] == doctest::Approx(2.0));
    CHECK(sorted.eigenvalues[2] == doctest::Approx(3.0));
}

TEST_CASE("hermitian_eig of J_y matches the characteristic polynomial") {
    const SpinOperators ops = build_spin_operators(1.0);
    // det(J_y - x I) expanded by cofactors gives x^3 + c2 x^2 + c1 x + c0.
    const Complex c0 = det3(ops.jy);
    const Complex c2 = -(ops.jy(0, 0) + ops.jy(1, 1) + ops.jy(2, 2));
    const Complex c1 = ops.jy(0, 0) * ops.jy(1, 1) - ops.jy(0, 1) * ops.jy(1, 0) +
                       ops.jy(0, 0) * ops.jy(2, 2) - ops.jy(0, 2) * ops.jy(2, 0) +
                       ops.jy(1, 1) * ops.jy(2, 2) - ops.jy(1, 2) * ops.jy(2, 1);
    CHECK(std::abs(c2) < 1e-14);      // traceless
    CHECK(std::abs(c1 - Complex(-1.0)) < 1e-14);
    CHECK(std::abs(c0) < 1e-14);      // so the polynomial is x^3 - x, roots -1, 0, 1

    const HermitianEig eig = hermitian_eig(ops.jy);
    CHECK(eig.eigenvalues[0] == doctest::Approx(-1.0).epsilon(1e-12));
    CHECK(eig.eigenvalues[1] == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(eig.eigenvalues[2] == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("hermitian_eig rejects non-Hermitian input") {
    Matrix m = Matrix::Zero(2, 2);
    m(0, 1) = 1.0;
    CHECK_THROWS_AS(hermitian_eig(m), NotHermitian);
}

TEST_CASE("unitary_eigenphases on diagonal unitaries") {
    const UnitaryEig id = unitary_eigenphases(Matrix::Identity(3, 3));
    for (int i = 0; i < 3; ++i) CHECK(std::abs(id.phases[i]) < 1e-14);

    Matrix d = Matrix::Zero(2, 2);
    d(0, 0) = std::polar(1.0, M_PI / 2.0);
    d(1, 1) = 1.0;
    const UnitaryEig eig = unitary_eigenphases(d);
    CHECK(eig.phases[0] == doctest::Approx(0.0));
    CHECK(eig.phases[1] == doctest::Approx(M_PI / 2.0));
}

TEST_CASE("unitary_eigenphases of a single-top period matches det oracle") {
    const Matrix u = single_top_floquet(1.0, Complex(0.25, 0.0));
    const UnitaryEig eig = unitary_eigenphases(u);
    Complex product(1.0, 0.0);
    for (int i = 0; i < 3; ++i) {
        CHECK(std::abs(std::abs(eig.eigenvalues[i]) - 1.0) < 1e-10);
        CHECK((u * eig.eigenvectors.col(i) - eig.eigenvalues[i] * eig.eigenvectors.col(i))
                  .norm() < 1e-10);
        product *= eig.eigenvalues[i];
    }
    CHECK(std::abs(product - det3(u)) < 1e-12);
}

TEST_CASE("unitary_eigenphases rejects non-unitary input") {
    CHECK_THROWS_AS(unitary_eigenphases(Matrix::Identity(2, 2) * 2.0), NotUnitary);
}

TEST_CASE("kron on identities and diagonals") {
    CHECK(max_abs(kron(Matrix::Identity(2, 2), Matrix::Identity(2, 2)) -
                  Matrix::Identity(4, 4)) == 0.0);

    Matrix a = Matrix::Zero(2, 2);
    a(0, 0) = 1.0;
    a(1, 1) = 2.0;
    Matrix b = Matrix::Zero(2, 2);
    b(0, 0) = 3.0;
    b(1, 1) = 4.0;
    const Matrix k = kron(a, b);
    CHECK(k(0, 0) == Complex(3.0));
    CHECK(k(1, 1) == Complex(4.0));
    CHECK(k(2, 2) == Complex(6.0));
    CHECK(k(3, 3) == Complex(8.0));
}

TEST_CASE("kron trace multiplicativity and associativity") {
    std::mt19937 rng(7);
    for (int trial = 0; trial < 20; ++trial) {
        const Matrix a = random_complex(3, rng);
        const Matrix b = random_complex(3, rng);
        CHECK(std::abs(kron(a, b).trace() - a.trace() * b.trace()) < 1e-12);
    }

    std::uniform_int_distribution<int> ints(-4, 4);
    auto int_matrix = [&](Eigen::Index n) {
        Matrix m(n, n);
        for (Eigen::Index i = 0; i < n; ++i)
            for (Eigen::Index k = 0; k < n; ++k) m(i, k) = static_cast<double>(ints(rng));
        return m;
    };
    const Matrix a = int_matrix(2);
    const Matrix b = int_matrix(3);
    const Matrix c = int_matrix(2);
    CHECK(max_abs(kron(kron(a, b), c) - kron(a, kron(b, c))) == 0.0);
}

TEST_CASE("matrix_function_hermitian basics") {
    std::mt19937 rng(11);
    const Matrix m = random_hermitian(4, rng);
    CHECK(max_abs(matrix_function_hermitian(m, [](double x) { return Complex(x); }) - m) < 1e-10);
    CHECK(max_abs(matrix_function_hermitian(m, [](double) { return Complex(1.0); }) -
                  Matrix::Identity(4, 4)) < 1e-12);

    Matrix d = Matrix::Zero(2, 2);
    d(0, 0) = 4.0;
    d(1, 1) = 9.0;
    const Matrix root =
        matrix_function_hermitian(d, [](double x) { return Complex(std::sqrt(x)); });
    CHECK(std::abs(root(0, 0) - Complex(2.0)) < 1e-14);
    CHECK(std::abs(root(1, 1) - Complex(3.0)) < 1e-14);
}

TEST_CASE("half-turn rotation of |1,1> matches the series exponential") {
    const SpinOperators ops = build_spin_operators(1.0);
    const Matrix rot = matrix_function_hermitian(
        ops.jy, [](double m) { return std::polar(1.0, -M_PI / 2.0 * m); });
    const Matrix oracle = exp_series(Complex(0.0, -M_PI / 2.0) * ops.jy);
    CHECK(max_abs(rot - oracle) < 1e-13);

    Vector top = Vector::Zero(3);
    top[0] = 1.0; // |1,1>
    const Vector rotated = rot * top;
    CHECK(std::abs(std::abs(rotated[0]) - 0.5) < 1e-12);
    CHECK(std::abs(std::abs(rotated[1]) - 1.0 / std::sqrt(2.0)) < 1e-12);
    CHECK(std::abs(std::abs(rotated[2]) - 0.5) < 1e-12);
}

TEST_CASE("matrix function domain errors propagate") {
    Matrix d = Matrix::Zero(2, 2);
    d(0, 0) = -1.0;
    d(1, 1) = 1.0;
    auto guarded_sqrt = [](double x) {
        if (x < -1e-10) throw DomainError("sqrt of negative eigenvalue");
        return Complex(std::sqrt(std::max(0.0, x)));
    };
    CHECK_THROWS_AS(matrix_function_hermitian(d, guarded_sqrt), DomainError);
}

TEST_CASE("random Hermitian spectra: reconstruction, trace, orthonormality") {
    std::mt19937 rng(23);
    for (Eigen::Index dim = 1; dim <= 9; ++dim) {
        for (int trial = 0; trial < 25; ++trial) {
            const Matrix m = random_hermitian(dim, rng);
            const HermitianEig eig = hermitian_eig(m);
            const Matrix rebuilt = eig.eigenvectors *
                                   eig.eigenvalues.cast<Complex>().asDiagonal() *
                                   eig.eigenvectors.adjoint();
            CHECK(max_abs(rebuilt - m) <= 1e-10 * std::max(1.0, max_abs(m)));
            CHECK(max_abs(eig.eigenvectors.adjoint() * eig.eigenvectors -
                          Matrix::Identity(dim, dim)) <= 1e-12);
            CHECK(std::abs(eig.eigenvalues.sum() - m.trace().real()) <= 1e-10);
            for (Eigen::Index i = 1; i < dim; ++i)
                CHECK(eig.eigenvalues[i] >= eig.eigenvalues[i - 1]);
        }
    }
}

TEST_CASE("spectral exponential of a Hermitian matrix is unitary") {
    std::mt19937 rng(31);
    std::uniform_real_distribution<double> angles(-3.0, 3.0);
    for (int trial = 0; trial < 20; ++trial) {
        const Matrix m = random_hermitian(5, rng);
        const double theta = angles(rng);
        const Matrix u = matrix_function_hermitian(
            m, [theta](double x) { return std::polar(1.0, -theta * x); });
        CHECK(max_abs(u.adjoint() * u - Matrix::Identity(5, 5)) <= 1e-12);
    }
}

TEST_CASE("unitary eigenphase residuals on random Floquet-like unitaries") {
    std::mt19937 rng(41);
    std::uniform_real_distribution<double> ks(0.0, 10.0);
    std::uniform_real_distribution<double> eps(0.0, 1.0);
    for (int trial = 0; trial < 25; ++trial) {
        const FloquetOperator op = build_floquet({1.0, ks(rng), 0.0, eps(rng)});
        const UnitaryEig eig = unitary_eigenphases(op.u);
        for (Eigen::Index i = 0; i < 9; ++i) {
            const double residual =
                (op.u * eig.eigenvectors.col(i) - eig.eigenvalues[i] * eig.eigenvectors.col(i))
                    .norm();
            CHECK(residual <= 1e-10);
        }
        CHECK(max_abs(eig.eigenvectors.adjoint() * eig.eigenvectors -
                      Matrix::Identity(9, 9)) <= 1e-12);
        for (Eigen::Index i = 1; i < 9; ++i) CHECK(eig.phases[i] >= eig.phases[i - 1]);
    }
}
