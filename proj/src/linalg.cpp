#include "umaircomp/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "umaircomp/rng.hpp"

namespace umaircomp {

cplx inner(const CVec& x, const CVec& y) {
    if (x.size() != y.size()) throw DimensionError("inner: vector lengths differ");
    cplx s = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) s += std::conj(x[i]) * y[i];
    return s;
}

double inner(const RVec& x, const RVec& y) {
    if (x.size() != y.size()) throw DimensionError("inner: vector lengths differ");
    double s = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) s += x[i] * y[i];
    return s;
}

double norm2(const CVec& x) {
    double s = 0.0;
    for (const cplx& v : x) s += std::norm(v);
    return s;
}

double norm2(const RVec& x) {
    double s = 0.0;
    for (double v : x) s += v * v;
    return s;
}

double norm(const CVec& x) { return std::sqrt(norm2(x)); }
double norm(const RVec& x) { return std::sqrt(norm2(x)); }

CVec matvec(const CMat& a, const CVec& x) {
    if (static_cast<int>(x.size()) != a.cols())
        throw DimensionError("matvec: expected length " + std::to_string(a.cols()));
    CVec y(static_cast<std::size_t>(a.rows()), cplx{0.0});
    for (int c = 0; c < a.cols(); ++c) {
        const cplx xc = x[static_cast<std::size_t>(c)];
        const cplx* col = a.col(c);
        for (int r = 0; r < a.rows(); ++r) y[static_cast<std::size_t>(r)] += col[r] * xc;
    }
    return y;
}

CVec matvec_adj(const CMat& a, const CVec& x) {
    if (static_cast<int>(x.size()) != a.rows())
        throw DimensionError("matvec_adj: expected length " + std::to_string(a.rows()));
    CVec y(static_cast<std::size_t>(a.cols()), cplx{0.0});
    for (int c = 0; c < a.cols(); ++c) {
        const cplx* col = a.col(c);
        cplx s = 0.0;
        for (int r = 0; r < a.rows(); ++r) s += std::conj(col[r]) * x[static_cast<std::size_t>(r)];
        y[static_cast<std::size_t>(c)] = s;
    }
    return y;
}

RVec matvec(const RMat& a, const RVec& x) {
    if (static_cast<int>(x.size()) != a.cols())
        throw DimensionError("matvec: expected length " + std::to_string(a.cols()));
    RVec y(static_cast<std::size_t>(a.rows()), 0.0);
    for (int c = 0; c < a.cols(); ++c) {
        const double xc = x[static_cast<std::size_t>(c)];
        const double* col = a.col(c);
        for (int r = 0; r < a.rows(); ++r) y[static_cast<std::size_t>(r)] += col[r] * xc;
    }
    return y;
}

RVec matvec_t(const RMat& a, const RVec& x) {
    if (static_cast<int>(x.size()) != a.rows())
        throw DimensionError("matvec_t: expected length " + std::to_string(a.rows()));
    RVec y(static_cast<std::size_t>(a.cols()), 0.0);
    for (int c = 0; c < a.cols(); ++c) {
        const double* col = a.col(c);
        double s = 0.0;
        for (int r = 0; r < a.rows(); ++r) s += col[r] * x[static_cast<std::size_t>(r)];
        y[static_cast<std::size_t>(c)] = s;
    }
    return y;
}

CMat matmul(const CMat& a, const CMat& b) {
    if (a.cols() != b.rows()) throw DimensionError("matmul: inner dimensions differ");
    CMat c(a.rows(), b.cols());
    for (int j = 0; j < b.cols(); ++j) {
        for (int k = 0; k < a.cols(); ++k) {
            const cplx bkj = b(k, j);
            if (bkj == cplx{0.0}) continue;
            const cplx* acol = a.col(k);
            cplx* ccol = c.col(j);
            for (int i = 0; i < a.rows(); ++i) ccol[i] += acol[i] * bkj;
        }
    }
    return c;
}

CMat adjoint(const CMat& a) {
    CMat b(a.cols(), a.rows());
    for (int c = 0; c < a.cols(); ++c)
        for (int r = 0; r < a.rows(); ++r) b(c, r) = std::conj(a(r, c));
    return b;
}

CMat gram(const CMat& a) {
    CMat g(a.cols(), a.cols());
    for (int i = 0; i < a.cols(); ++i) {
        for (int j = i; j < a.cols(); ++j) {
            cplx s = 0.0;
            const cplx* ci = a.col(i);
            const cplx* cj = a.col(j);
            for (int r = 0; r < a.rows(); ++r) s += std::conj(ci[r]) * cj[r];
            g(i, j) = s;
            g(j, i) = std::conj(s);
        }
    }
    return g;
}

RMat gram_t(const RMat& a) {
    RMat g(a.cols(), a.cols());
    for (int i = 0; i < a.cols(); ++i) {
        for (int j = i; j < a.cols(); ++j) {
            double s = 0.0;
            const double* ci = a.col(i);
            const double* cj = a.col(j);
            for (int r = 0; r < a.rows(); ++r) s += ci[r] * cj[r];
            g(i, j) = s;
            g(j, i) = s;
        }
    }
    return g;
}

CMat outer(const CVec& x, const CVec& y) {
    CMat m(static_cast<int>(x.size()), static_cast<int>(y.size()));
    for (int c = 0; c < m.cols(); ++c) {
        const cplx yc = std::conj(y[static_cast<std::size_t>(c)]);
        for (int r = 0; r < m.rows(); ++r) m(r, c) = x[static_cast<std::size_t>(r)] * yc;
    }
    return m;
}

double frobenius(const CMat& a) {
    double s = 0.0;
    for (int c = 0; c < a.cols(); ++c)
        for (int r = 0; r < a.rows(); ++r) s += std::norm(a(r, c));
    return std::sqrt(s);
}

CholeskyC::CholeskyC(CMat a) : l_(std::move(a)) {
    const int n = l_.rows();
    if (n != l_.cols()) throw DimensionError("cholesky: matrix not square");
    for (int j = 0; j < n; ++j) {
        double d = l_(j, j).real();
        for (int k = 0; k < j; ++k) d -= std::norm(l_(j, k));
        if (!(d > 0.0)) throw SolverError("cholesky: matrix not positive definite");
        const double ljj = std::sqrt(d);
        l_(j, j) = ljj;
        for (int i = j + 1; i < n; ++i) {
            cplx s = l_(i, j);
            for (int k = 0; k < j; ++k) s -= l_(i, k) * std::conj(l_(j, k));
            l_(i, j) = s / ljj;
        }
    }
}

CVec CholeskyC::solve(const CVec& b) const {
    const int n = l_.rows();
    if (static_cast<int>(b.size()) != n)
        throw DimensionError("cholesky solve: rhs length mismatch");
    CVec y(b);
    for (int i = 0; i < n; ++i) {
        cplx s = y[static_cast<std::size_t>(i)];
        for (int k = 0; k < i; ++k) s -= l_(i, k) * y[static_cast<std::size_t>(k)];
        y[static_cast<std::size_t>(i)] = s / l_(i, i);
    }
    for (int i = n - 1; i >= 0; --i) {
        cplx s = y[static_cast<std::size_t>(i)];
        for (int k = i + 1; k < n; ++k) s -= std::conj(l_(k, i)) * y[static_cast<std::size_t>(k)];
        y[static_cast<std::size_t>(i)] = s / l_(i, i);
    }
    return y;
}

CholeskyR::CholeskyR(RMat a) : l_(std::move(a)) {
    const int n = l_.rows();
    if (n != l_.cols()) throw DimensionError("cholesky: matrix not square");
    for (int j = 0; j < n; ++j) {
        double d = l_(j, j);
        for (int k = 0; k < j; ++k) d -= l_(j, k) * l_(j, k);
        if (!(d > 0.0)) throw SolverError("cholesky: matrix not positive definite");
        const double ljj = std::sqrt(d);
        l_(j, j) = ljj;
        for (int i = j + 1; i < n; ++i) {
            double s = l_(i, j);
            for (int k = 0; k < j; ++k) s -= l_(i, k) * l_(j, k);
            l_(i, j) = s / ljj;
        }
    }
}

RVec CholeskyR::solve(const RVec& b) const {
    const int n = l_.rows();
    if (static_cast<int>(b.size()) != n)
        throw DimensionError("cholesky solve: rhs length mismatch");
    RVec y(b);
    for (int i = 0; i < n; ++i) {
        double s = y[static_cast<std::size_t>(i)];
        for (int k = 0; k < i; ++k) s -= l_(i, k) * y[static_cast<std::size_t>(k)];
        y[static_cast<std::size_t>(i)] = s / l_(i, i);
    }
    for (int i = n - 1; i >= 0; --i) {
        double s = y[static_cast<std::size_t>(i)];
        for (int k = i + 1; k < n; ++k) s -= l_(k, i) * y[static_cast<std::size_t>(k)];
        y[static_cast<std::size_t>(i)] = s / l_(i, i);
    }
    return y;
}

CVec solve_hpd(const CMat& a, const CVec& b) { return CholeskyC(a).solve(b); }
RVec solve_spd(const RMat& a, const RVec& b) { return CholeskyR(a).solve(b); }

std::vector<double> symmetric_eigenvalues(RMat a) {
    const int n = a.rows();
    if (n != a.cols()) throw DimensionError("eigenvalues: matrix not square");
    // Cyclic Jacobi sweeps until off-diagonal mass is negligible.
    double scale = 0.0;
    for (int i = 0; i < n; ++i) scale = std::max(scale, std::abs(a(i, i)));
    for (int c = 0; c < n; ++c)
        for (int r = 0; r < n; ++r) scale = std::max(scale, std::abs(a(r, c)));
    if (scale == 0.0) return std::vector<double>(static_cast<std::size_t>(n), 0.0);

    const double tol = 1e-15 * scale;
    for (int sweep = 0; sweep < 100; ++sweep) {
        double off = 0.0;
        for (int p = 0; p < n - 1; ++p)
            for (int q = p + 1; q < n; ++q) off = std::max(off, std::abs(a(p, q)));
        if (off <= tol) break;
        for (int p = 0; p < n - 1; ++p) {
            for (int q = p + 1; q < n; ++q) {
                const double apq = a(p, q);
                if (std::abs(apq) <= tol * 1e-2) continue;
                const double theta = (a(q, q) - a(p, p)) / (2.0 * apq);
                const double t = (theta >= 0.0 ? 1.0 : -1.0) /
                                 (std::abs(theta) + std::sqrt(theta * theta + 1.0));
                const double c = 1.0 / std::sqrt(t * t + 1.0);
                const double s = t * c;
                for (int i = 0; i < n; ++i) {
                    const double aip = a(i, p);
                    const double aiq = a(i, q);
                    a(i, p) = c * aip - s * aiq;
                    a(i, q) = s * aip + c * aiq;
                }
                for (int i = 0; i < n; ++i) {
                    const double api = a(p, i);
                    const double aqi = a(q, i);
                    a(p, i) = c * api - s * aqi;
                    a(q, i) = s * api + c * aqi;
                }
            }
        }
    }
    std::vector<double> ev(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) ev[static_cast<std::size_t>(i)] = a(i, i);
    std::sort(ev.begin(), ev.end());
    return ev;
}

std::vector<double> hermitian_eigenvalues(const CMat& a) {
    const int n = a.rows();
    if (n != a.cols()) throw DimensionError("eigenvalues: matrix not square");
    RMat e(2 * n, 2 * n);
    for (int c = 0; c < n; ++c) {
        for (int r = 0; r < n; ++r) {
            const double re = a(r, c).real();
            const double im = a(r, c).imag();
            e(r, c) = re;
            e(r + n, c + n) = re;
            e(r + n, c) = im;
            e(r, c + n) = -im;
        }
    }
    std::vector<double> doubled = symmetric_eigenvalues(std::move(e));
    // Spectrum is duplicated; keep one copy of each pair.
    std::vector<double> ev(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) ev[static_cast<std::size_t>(i)] = doubled[static_cast<std::size_t>(2 * i)];
    return ev;
}

std::pair<double, double> top_two_singular_values(const CMat& a) {
    const int n = a.cols();
    const int m = a.rows();
    if (n == 0 || m == 0) return {0.0, 0.0};
    if (n == 1) return {norm(a.col_vec(0)), 0.0};

    // One-sided Jacobi: rotate column pairs until mutually orthogonal; the
    // singular values are then the column norms. Unlike the A^H A route this
    // keeps full relative accuracy for tiny sigma_2 (rank-1 residual tests).
    CMat w = a;
    for (int sweep = 0; sweep < 60; ++sweep) {
        bool rotated = false;
        for (int p = 0; p < n - 1; ++p) {
            for (int q = p + 1; q < n; ++q) {
                cplx* up = w.col(p);
                cplx* uq = w.col(q);
                double app = 0.0, aqq = 0.0;
                cplx apq = 0.0;
                for (int r = 0; r < m; ++r) {
                    app += std::norm(up[r]);
                    aqq += std::norm(uq[r]);
                    apq += std::conj(up[r]) * uq[r];
                }
                const double ab = std::abs(apq);
                if (ab <= 1e-16 * std::sqrt(app * aqq) || ab == 0.0) continue;
                rotated = true;
                const cplx phase = apq / ab;
                const double tau = (aqq - app) / (2.0 * ab);
                const double t = (tau >= 0.0 ? 1.0 : -1.0) /
                                 (std::abs(tau) + std::sqrt(1.0 + tau * tau));
                const double cs = 1.0 / std::sqrt(1.0 + t * t);
                const double sn = cs * t;
                for (int r = 0; r < m; ++r) {
                    const cplx vp = up[r];
                    const cplx vq = uq[r] * std::conj(phase);
                    up[r] = cs * vp - sn * vq;
                    uq[r] = (sn * vp + cs * vq) * phase;
                }
            }
        }
        if (!rotated) break;
    }
    double s1 = 0.0, s2 = 0.0;
    for (int c = 0; c < n; ++c) {
        const double nc = norm(w.col_vec(c));
        if (nc > s1) {
            s2 = s1;
            s1 = nc;
        } else if (nc > s2) {
            s2 = nc;
        }
    }
    return {s1, s2};
}

double power_iteration_max_eig(const RMat& a, int iters, std::uint64_t seed) {
    const int n = a.rows();
    RandomStream rs(seed);
    RVec v(static_cast<std::size_t>(n));
    for (auto& x : v) x = rs.next_gaussian(1.0);
    double lambda = 0.0;
    for (int it = 0; it < iters; ++it) {
        const double nv = norm(v);
        if (nv == 0.0) return 0.0;
        for (auto& x : v) x /= nv;
        RVec av = matvec(a, v);
        lambda = inner(v, av);
        v = std::move(av);
    }
    return lambda;
}

} // namespace umaircomp
