// linalg.hpp - small dense complex/real linear algebra
//
// Column-major matrices sized by the problem (K users, N antennas, N^2 phase
// entries). Everything here is deliberately dependency-free: the systems are
// small enough that a Cholesky factorization and a cyclic Jacobi eigensolver
// cover all needs of the optimizers and the feasibility checks.

#pragma once

#include <complex>
#include <cstddef>
#include <stdexcept>
#include <utility>
#include <vector>

namespace umaircomp {

using cplx = std::complex<double>;
using CVec = std::vector<cplx>;
using RVec = std::vector<double>;

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct DimensionError : Error {
    using Error::Error;
};
struct ConfigError : Error {
    using Error::Error;
};
struct SolverError : Error {
    using Error::Error;
};

template <typename T>
class Mat {
public:
    Mat() = default;
    Mat(int rows, int cols, T value = T{})
        : rows_(rows), cols_(cols), a_(static_cast<std::size_t>(rows) * cols, value) {}

    static Mat identity(int n) {
        Mat m(n, n);
        for (int i = 0; i < n; ++i) m(i, i) = T{1};
        return m;
    }

    int rows() const { return rows_; }
    int cols() const { return cols_; }
    std::size_t size() const { return a_.size(); }

    T& operator()(int r, int c) { return a_[static_cast<std::size_t>(c) * rows_ + r]; }
    const T& operator()(int r, int c) const {
        return a_[static_cast<std::size_t>(c) * rows_ + r];
    }

    T* data() { return a_.data(); }
    const T* data() const { return a_.data(); }
    T* col(int c) { return a_.data() + static_cast<std::size_t>(c) * rows_; }
    const T* col(int c) const { return a_.data() + static_cast<std::size_t>(c) * rows_; }

    std::vector<T> col_vec(int c) const {
        return std::vector<T>(col(c), col(c) + rows_);
    }
    void set_col(int c, const std::vector<T>& v) {
        for (int r = 0; r < rows_; ++r) (*this)(r, c) = v[static_cast<std::size_t>(r)];
    }

    bool operator==(const Mat& o) const {
        return rows_ == o.rows_ && cols_ == o.cols_ && a_ == o.a_;
    }

private:
    int rows_ = 0, cols_ = 0;
    std::vector<T> a_;
};

using CMat = Mat<cplx>;
using RMat = Mat<double>;

// x^H y
cplx inner(const CVec& x, const CVec& y);
double inner(const RVec& x, const RVec& y);
double norm2(const CVec& x);
double norm2(const RVec& x);
double norm(const CVec& x);
double norm(const RVec& x);

CVec matvec(const CMat& a, const CVec& x);       // A x
CVec matvec_adj(const CMat& a, const CVec& x);   // A^H x
RVec matvec(const RMat& a, const RVec& x);
RVec matvec_t(const RMat& a, const RVec& x);     // A^T x
CMat matmul(const CMat& a, const CMat& b);
CMat adjoint(const CMat& a);
CMat gram(const CMat& a);                        // A^H A
RMat gram_t(const RMat& a);                      // A^T A
CMat outer(const CVec& x, const CVec& y);        // x y^H
double frobenius(const CMat& a);

// Cholesky factorization of a Hermitian (resp. symmetric) positive-definite
// matrix; solve() back-substitutes. Throws SolverError if a pivot fails.
class CholeskyC {
public:
    explicit CholeskyC(CMat a);
    CVec solve(const CVec& b) const;

private:
    CMat l_;
};

class CholeskyR {
public:
    explicit CholeskyR(RMat a);
    RVec solve(const RVec& b) const;

private:
    RMat l_;
};

CVec solve_hpd(const CMat& a, const CVec& b);
RVec solve_spd(const RMat& a, const RVec& b);

// Eigenvalues of a real symmetric matrix (cyclic Jacobi), ascending.
std::vector<double> symmetric_eigenvalues(RMat a);

// Eigenvalues of a complex Hermitian matrix via the real 2n x 2n embedding
// [[Re, -Im], [Im, Re]]; each eigenvalue of A appears twice, ascending order
// with duplicates removed pairwise.
std::vector<double> hermitian_eigenvalues(const CMat& a);

// Two largest singular values (power iteration on A^H A with deflation).
std::pair<double, double> top_two_singular_values(const CMat& a);

// Largest eigenvalue of a real symmetric PSD matrix by power iteration.
// Exposed mainly so tests can cross-check the Jacobi route.
double power_iteration_max_eig(const RMat& a, int iters = 500, std::uint64_t seed = 1);

} // namespace umaircomp
