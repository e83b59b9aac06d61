#pragma once

// Small dense factorizations for partition-local systems: LU with partial
// pivoting, one-sided Jacobi SVD and cyclic Jacobi for symmetric eigenproblems.
// Sparse inputs are densified; these kernels target matrices up to ~64x64.

#include <algorithm>
#include <cmath>
#include <numeric>
#include <span>
#include <vector>

#include "mli/local_matrix.hpp"

namespace mli {

/// Pivots at or below this magnitude are treated as singular.
inline constexpr double kSingularPivot = 1e-12;
/// Singular values above this fraction of the largest count toward rank.
inline constexpr double kRankTolerance = 1e-10;
/// Maximum |a_ij - a_ji| accepted by eigen().
inline constexpr double kSymmetryTolerance = 1e-10;

/// In-place LU factorization with partial pivoting (row-major, n x n).
class LuDecomposition {
public:
    explicit LuDecomposition(const LocalMatrix& a) : lu_(toDense(a)), perm_(a.rows()) {
        if (a.rows() != a.cols()) {
            throw DimError("solve: matrix is " + std::to_string(a.rows()) + "x" + std::to_string(a.cols()) +
                           ", expected square");
        }
        const std::size_t n = a.rows();
        std::iota(perm_.begin(), perm_.end(), std::size_t{0});
        for (std::size_t k = 0; k < n; ++k) {
            std::size_t piv = k;
            double best = std::abs(lu_(k, k));
            for (std::size_t i = k + 1; i < n; ++i) {
                if (std::abs(lu_(i, k)) > best) {
                    best = std::abs(lu_(i, k));
                    piv = i;
                }
            }
            if (!(best > kSingularPivot)) {
                throw SingularMatrixError("solve: pivot " + std::to_string(best) + " at column " +
                                          std::to_string(k));
            }
            if (piv != k) {
                std::swap_ranges(lu_.row(k).begin(), lu_.row(k).end(), lu_.row(piv).begin());
                std::swap(perm_[k], perm_[piv]);
            }
            const double d = lu_(k, k);
            for (std::size_t i = k + 1; i < n; ++i) {
                const double f = lu_(i, k) / d;
                lu_(i, k) = f;
                if (f == 0.0) continue;
                for (std::size_t j = k + 1; j < n; ++j) lu_(i, j) -= f * lu_(k, j);
            }
        }
    }

    std::size_t size() const noexcept { return perm_.size(); }

    /// Solves for one right-hand side.
    std::vector<double> solve(std::span<const double> b) const {
        const std::size_t n = size();
        if (b.size() != n) {
            throw DimError("solve: right-hand side has " + std::to_string(b.size()) + " entries, expected " +
                           std::to_string(n));
        }
        std::vector<double> x(n);
        for (std::size_t i = 0; i < n; ++i) x[i] = b[perm_[i]];
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t j = 0; j < i; ++j) x[i] -= lu_(i, j) * x[j];
        }
        for (std::size_t i = n; i-- > 0;) {
            for (std::size_t j = i + 1; j < n; ++j) x[i] -= lu_(i, j) * x[j];
            x[i] /= lu_(i, i);
        }
        return x;
    }

private:
    LocalMatrix lu_;
    std::vector<std::size_t> perm_;
};

inline std::vector<double> solve(const LocalMatrix& a, std::span<const double> b) {
    return LuDecomposition(a).solve(b);
}

/// Solves a X = B column by column.
inline LocalMatrix solve(const LocalMatrix& a, const LocalMatrix& b) {
    const LuDecomposition lu(a);
    if (b.rows() != lu.size()) {
        throw DimError("solve: right-hand side has " + std::to_string(b.rows()) + " rows, expected " +
                       std::to_string(lu.size()));
    }
    LocalMatrix out(b.rows(), b.cols());
    std::vector<double> col(b.rows());
    for (std::size_t j = 0; j < b.cols(); ++j) {
        for (std::size_t i = 0; i < b.rows(); ++i) col[i] = b.get(i, j);
        const auto x = lu.solve(col);
        for (std::size_t i = 0; i < b.rows(); ++i) out(i, j) = x[i];
    }
    return out;
}

struct SvdResult {
    LocalMatrix u;                     ///< m x p, orthonormal columns
    std::vector<double> singularValues;  ///< p values, non-increasing
    LocalMatrix v;                     ///< n x p, orthonormal columns
};

namespace detail {

// Extends the orthonormal columns [0, filled) of q to a full orthonormal set
// by Gram-Schmidt against the standard basis.
inline void completeOrthonormal(LocalMatrix& q, std::vector<bool>& valid) {
    const std::size_t m = q.rows();
    std::size_t basis = 0;
    for (std::size_t c = 0; c < q.cols(); ++c) {
        if (valid[c]) continue;
        while (basis < m) {
            std::vector<double> e(m, 0.0);
            e[basis++] = 1.0;
            for (int pass = 0; pass < 2; ++pass) {
                for (std::size_t o = 0; o < q.cols(); ++o) {
                    if (!valid[o]) continue;
                    double proj = 0.0;
                    for (std::size_t i = 0; i < m; ++i) proj += q(i, o) * e[i];
                    for (std::size_t i = 0; i < m; ++i) e[i] -= proj * q(i, o);
                }
            }
            double norm = 0.0;
            for (double x : e) norm += x * x;
            norm = std::sqrt(norm);
            if (norm > 1e-6) {
                for (std::size_t i = 0; i < m; ++i) q(i, c) = e[i] / norm;
                valid[c] = true;
                break;
            }
        }
    }
}

// Thin SVD of a tall (m >= n) dense matrix by one-sided Jacobi rotations.
inline SvdResult jacobiSvdTall(LocalMatrix a) {
    const std::size_t m = a.rows();
    const std::size_t n = a.cols();
    LocalMatrix v = LocalMatrix::identity(n);
    constexpr double eps = 1e-15;
    for (int sweep = 0; sweep < 100; ++sweep) {
        bool rotated = false;
        for (std::size_t p = 0; p + 1 < n; ++p) {
            for (std::size_t q = p + 1; q < n; ++q) {
                double alpha = 0.0;
                double beta = 0.0;
                double gamma = 0.0;
                for (std::size_t i = 0; i < m; ++i) {
                    const double ap = a(i, p);
                    const double aq = a(i, q);
                    alpha += ap * ap;
                    beta += aq * aq;
                    gamma += ap * aq;
                }
                if (gamma == 0.0 || std::abs(gamma) <= eps * std::sqrt(alpha * beta)) continue;
                rotated = true;
                const double zeta = (beta - alpha) / (2.0 * gamma);
                const double t = std::copysign(1.0, zeta) / (std::abs(zeta) + std::sqrt(1.0 + zeta * zeta));
                const double c = 1.0 / std::sqrt(1.0 + t * t);
                const double s = c * t;
                for (std::size_t i = 0; i < m; ++i) {
                    const double ap = a(i, p);
                    const double aq = a(i, q);
                    a(i, p) = c * ap - s * aq;
                    a(i, q) = s * ap + c * aq;
                }
                for (std::size_t i = 0; i < n; ++i) {
                    const double vp = v(i, p);
                    const double vq = v(i, q);
                    v(i, p) = c * vp - s * vq;
                    v(i, q) = s * vp + c * vq;
                }
            }
        }
        if (!rotated) break;
    }

    std::vector<double> sigma(n);
    for (std::size_t j = 0; j < n; ++j) {
        double norm = 0.0;
        for (std::size_t i = 0; i < m; ++i) norm += a(i, j) * a(i, j);
        sigma[j] = std::sqrt(norm);
    }
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) { return sigma[x] > sigma[y]; });

    SvdResult out{LocalMatrix(m, n), std::vector<double>(n), LocalMatrix(n, n)};
    const double cutoff = (n > 0 ? sigma[order[0]] : 0.0) * 1e-14;
    std::vector<bool> valid(n, false);
    for (std::size_t k = 0; k < n; ++k) {
        const std::size_t j = order[k];
        out.singularValues[k] = sigma[j];
        for (std::size_t i = 0; i < n; ++i) out.v(i, k) = v(i, j);
        if (sigma[j] > cutoff && sigma[j] > 0.0) {
            for (std::size_t i = 0; i < m; ++i) out.u(i, k) = a(i, j) / sigma[j];
            valid[k] = true;
        }
    }
    completeOrthonormal(out.u, valid);
    return out;
}

}  // namespace detail

/// Thin SVD, A = U diag(s) V^T with p = min(rows, cols) singular triples.
inline SvdResult svd(const LocalMatrix& m) {
    if (m.rows() >= m.cols()) return detail::jacobiSvdTall(toDense(m));
    SvdResult t = detail::jacobiSvdTall(transpose(toDense(m)));
    return SvdResult{std::move(t.v), std::move(t.singularValues), std::move(t.u)};
}

struct EigenResult {
    std::vector<double> values;  ///< non-increasing
    LocalMatrix vectors;         ///< column i pairs with values[i]
};

/// Eigen-decomposition of a symmetric matrix by cyclic Jacobi rotations.
inline EigenResult eigen(const LocalMatrix& m) {
    if (m.rows() != m.cols()) throw DimError("eigen: matrix must be square");
    LocalMatrix a = toDense(m);
    const std::size_t n = a.rows();
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            if (std::abs(a(i, j) - a(j, i)) > kSymmetryTolerance) {
                throw UnsupportedError("eigen: input is not symmetric");
            }
        }
    }
    LocalMatrix v = LocalMatrix::identity(n);
    for (int sweep = 0; sweep < 100; ++sweep) {
        double off = 0.0;
        double diag = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            diag += a(i, i) * a(i, i);
            for (std::size_t j = i + 1; j < n; ++j) off += a(i, j) * a(i, j);
        }
        if (off == 0.0 || off <= 1e-32 * diag) break;
        for (std::size_t p = 0; p + 1 < n; ++p) {
            for (std::size_t q = p + 1; q < n; ++q) {
                const double apq = a(p, q);
                if (apq == 0.0) continue;
                const double theta = (a(q, q) - a(p, p)) / (2.0 * apq);
                const double t = std::copysign(1.0, theta) / (std::abs(theta) + std::sqrt(1.0 + theta * theta));
                const double c = 1.0 / std::sqrt(1.0 + t * t);
                const double s = t * c;
                for (std::size_t k = 0; k < n; ++k) {
                    const double akp = a(k, p);
                    const double akq = a(k, q);
                    a(k, p) = c * akp - s * akq;
                    a(k, q) = s * akp + c * akq;
                }
                for (std::size_t k = 0; k < n; ++k) {
                    const double apk = a(p, k);
                    const double aqk = a(q, k);
                    a(p, k) = c * apk - s * aqk;
                    a(q, k) = s * apk + c * aqk;
                }
                for (std::size_t k = 0; k < n; ++k) {
                    const double vkp = v(k, p);
                    const double vkq = v(k, q);
                    v(k, p) = c * vkp - s * vkq;
                    v(k, q) = s * vkp + c * vkq;
                }
            }
        }
    }
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) { return a(x, x) > a(y, y); });
    EigenResult out{std::vector<double>(n), LocalMatrix(n, n)};
    for (std::size_t k = 0; k < n; ++k) {
        out.values[k] = a(order[k], order[k]);
        for (std::size_t i = 0; i < n; ++i) out.vectors(i, k) = v(i, order[k]);
    }
    return out;
}

/// Numerical rank: singular values above kRankTolerance times the largest.
inline std::size_t rank(const LocalMatrix& m) {
    if (m.rows() == 0 || m.cols() == 0) return 0;
    const auto s = svd(m).singularValues;
    if (s.empty() || s.front() == 0.0) return 0;
    const double threshold = kRankTolerance * s.front();
    return static_cast<std::size_t>(std::count_if(s.begin(), s.end(), [&](double x) { return x > threshold; }));
}

}  // namespace mli
