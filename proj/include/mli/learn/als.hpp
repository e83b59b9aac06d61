#pragma once

/*
 * Matrix factorization by alternating least squares.
 *
 * Each half-sweep fixes one factor, broadcasts it, and re-solves every row of
 * the other factor independently:
 *
 *     (B^T B + lambda * n_row * I) u = B^T r
 *
 * where B stacks the fixed-factor rows of the observed entries and r holds the
 * observed ratings. Scaling lambda by the row's observation count is the
 * weighted-lambda regularization; alsObjective reports the unscaled objective,
 * alsWeightedObjective the one the row solves minimize exactly.
 */

#include <cmath>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "mli/engine.hpp"
#include "mli/error.hpp"
#include "mli/linalg.hpp"
#include "mli/local_matrix.hpp"
#include "mli/ml_table.hpp"
#include "mli/random.hpp"

namespace mli {

/// Observed entries held twice: CSR by user and CSR by item.
class RatingsMatrix {
public:
    RatingsMatrix() = default;

    /// From a users x items CSR (or dense) matrix; zeros are unobserved.
    explicit RatingsMatrix(const LocalMatrix& byUser) : byUser_(toCsr(byUser)), byItem_(transpose(byUser_)) {}

    /// Duplicated (user, item) pairs are summed.
    static RatingsMatrix fromTriplets(std::size_t users, std::size_t items, std::vector<Triplet> entries) {
        return RatingsMatrix(LocalMatrix::fromTriplets(users, items, std::move(entries)));
    }

    std::size_t users() const noexcept { return byUser_.rows(); }
    std::size_t items() const noexcept { return byUser_.cols(); }
    std::size_t nnz() const noexcept { return byUser_.nnz(); }
    const LocalMatrix& byUser() const noexcept { return byUser_; }
    const LocalMatrix& byItem() const noexcept { return byItem_; }

private:
    LocalMatrix byUser_ = LocalMatrix::fromTriplets(0, 0, {});
    LocalMatrix byItem_ = LocalMatrix::fromTriplets(0, 0, {});
};

struct AlsConfig {
    std::size_t rank = 10;
    double lambda = 0.01;
    std::size_t iterations = 10;
    std::uint64_t seed = 42;
    /// Row blocks per half-sweep; 0 means one per pool worker.
    std::size_t partitions = 0;

    void validate() const {
        if (rank == 0) throw ConfigError("ALS rank must be at least 1");
        if (!(lambda >= 0.0) || !std::isfinite(lambda)) throw ConfigError("ALS lambda must be non-negative");
        if (iterations == 0) throw ConfigError("ALS iterations must be at least 1");
    }
};

/// U (users x k) and V (items x k); a rating is predicted as U_i . V_j.
class FactorizationModel {
public:
    FactorizationModel() = default;
    FactorizationModel(LocalMatrix u, LocalMatrix v) : u_(std::move(u)), v_(std::move(v)) {
        if (u_.cols() != v_.cols()) throw DimError("factor ranks differ");
    }

    const LocalMatrix& u() const noexcept { return u_; }
    const LocalMatrix& v() const noexcept { return v_; }
    std::size_t rank() const noexcept { return u_.cols(); }

    double predict(std::size_t user, std::size_t item) const {
        if (user >= u_.rows() || item >= v_.rows()) throw IndexError("predict: (user, item) out of range");
        return dot(u_.row(user), v_.row(item));
    }

    /// Predicted ratings for every item, for one user.
    std::vector<double> recommend(std::size_t user) const {
        std::vector<double> out(v_.rows());
        for (std::size_t j = 0; j < v_.rows(); ++j) out[j] = predict(user, j);
        return out;
    }

private:
    LocalMatrix u_;
    LocalMatrix v_;
};

/// Closed-form solve for one row given the fixed factor and the row's
/// observed (index, rating) pairs. A row with no observations maps to zero.
inline std::vector<double> alsRowUpdate(const LocalMatrix& fixed, std::span<const std::size_t> indices,
                                        std::span<const double> ratings, double lambda, std::size_t k) {
    if (fixed.cols() != k) {
        throw DimError("alsRowUpdate: fixed factor has " + std::to_string(fixed.cols()) + " columns, rank is " +
                       std::to_string(k));
    }
    if (indices.size() != ratings.size()) throw DimError("alsRowUpdate: index and rating counts differ");
    std::vector<double> rhs(k, 0.0);
    if (indices.empty()) return rhs;
    LocalMatrix normal(k, k);
    for (std::size_t t = 0; t < indices.size(); ++t) {
        if (indices[t] >= fixed.rows()) {
            throw IndexError("alsRowUpdate: index " + std::to_string(indices[t]) + " outside fixed factor");
        }
        const auto f = fixed.row(indices[t]);
        for (std::size_t a = 0; a < k; ++a) {
            rhs[a] += f[a] * ratings[t];
            for (std::size_t b = 0; b < k; ++b) normal(a, b) += f[a] * f[b];
        }
    }
    const double reg = lambda * static_cast<double>(indices.size());
    for (std::size_t a = 0; a < k; ++a) normal(a, a) += reg;
    return solve(normal, rhs);
}

namespace detail {

// Re-solves every row of the factor opposite `fixed`.
inline LocalMatrix alsHalfSweep(const LocalMatrix& ratings, const Broadcast<LocalMatrix>& fixed, double lambda,
                                std::size_t k, std::size_t partitions, WorkerPool* pool) {
    const auto bounds = partitionBounds(ratings.rows(), partitions);
    auto blocks = runPartitions(pool, partitions, [&](std::size_t p) {
        LocalMatrix block(bounds[p + 1] - bounds[p], k);
        for (std::size_t r = bounds[p]; r < bounds[p + 1]; ++r) {
            const auto x = alsRowUpdate(*fixed, ratings.csrRowIndices(r), ratings.csrRowValues(r), lambda, k);
            std::copy(x.begin(), x.end(), block.row(r - bounds[p]).begin());
        }
        return block;
    });
    std::vector<double> values;
    values.reserve(ratings.rows() * k);
    for (const auto& b : blocks) values.insert(values.end(), b.data().begin(), b.data().end());
    return LocalMatrix::dense(ratings.rows(), k, std::move(values));
}

inline void requireFiniteFactor(const LocalMatrix& m, const char* which) {
    for (double x : m.data()) {
        if (!std::isfinite(x)) throw DivergenceError(std::string("alsTrain: non-finite entry in ") + which);
    }
}

}  // namespace detail

/// Initial item factor: uniform [0, 1) scaled by 1/sqrt(k), row-major from the seed.
inline LocalMatrix alsInitialItemFactor(std::size_t items, std::size_t k, std::uint64_t seed) {
    Rng rng(deriveSeed(seed, 0xA15ULL));
    LocalMatrix v(items, k);
    const double scale = 1.0 / std::sqrt(static_cast<double>(k));
    for (double& x : v.data()) x = uniformUnit(rng) * scale;
    return v;
}

/// Called after every half-sweep with the current factors.
using AlsObserver = std::function<void(const FactorizationModel&)>;

/// ALS from a caller-supplied initial item factor. U is solved first.
inline FactorizationModel alsTrain(const RatingsMatrix& ratings, const AlsConfig& config, LocalMatrix initialV,
                                   WorkerPool* pool = nullptr, const AlsObserver& observer = {}) {
    config.validate();
    if (ratings.nnz() == 0) throw EmptyTableError("alsTrain: no observed ratings");
    const std::size_t k = config.rank;
    if (initialV.rows() != ratings.items() || initialV.cols() != k) {
        throw DimError("alsTrain: initial item factor must be items x rank");
    }
    const std::size_t partitions = config.partitions != 0 ? config.partitions : (pool ? pool->workerCount() : 1);
    LocalMatrix v = toDense(initialV);
    LocalMatrix u(ratings.users(), k);
    for (std::size_t it = 0; it < config.iterations; ++it) {
        u = detail::alsHalfSweep(ratings.byUser(), broadcast(v), config.lambda, k, partitions, pool);
        detail::requireFiniteFactor(u, "U");
        if (observer) observer(FactorizationModel(u, v));
        v = detail::alsHalfSweep(ratings.byItem(), broadcast(u), config.lambda, k, partitions, pool);
        detail::requireFiniteFactor(v, "V");
        if (observer) observer(FactorizationModel(u, v));
    }
    return FactorizationModel(std::move(u), std::move(v));
}

inline FactorizationModel alsTrain(const RatingsMatrix& ratings, const AlsConfig& config, WorkerPool* pool = nullptr,
                                   const AlsObserver& observer = {}) {
    config.validate();
    return alsTrain(ratings, config, alsInitialItemFactor(ratings.items(), config.rank, config.seed), pool, observer);
}

namespace detail {

inline void checkModelShape(const FactorizationModel& model, const RatingsMatrix& ratings) {
    if (model.u().rows() != ratings.users() || model.v().rows() != ratings.items()) {
        throw DimError("model is " + std::to_string(model.u().rows()) + " users x " +
                       std::to_string(model.v().rows()) + " items, ratings are " + std::to_string(ratings.users()) +
                       " x " + std::to_string(ratings.items()));
    }
}

inline double squaredError(const FactorizationModel& model, const RatingsMatrix& ratings) {
    const auto& m = ratings.byUser();
    double sum = 0.0;
    for (std::size_t i = 0; i < m.rows(); ++i) {
        const auto idx = m.csrRowIndices(i);
        const auto val = m.csrRowValues(i);
        for (std::size_t t = 0; t < idx.size(); ++t) {
            const double e = val[t] - model.predict(i, idx[t]);
            sum += e * e;
        }
    }
    return sum;
}

inline double rowNormSquared(const LocalMatrix& f, std::size_t r) {
    double s = 0.0;
    for (double x : f.row(r)) s += x * x;
    return s;
}

}  // namespace detail

/// sum over observed (M_ij - U_i.V_j)^2 + lambda (|U|_F^2 + |V|_F^2).
inline double alsObjective(const FactorizationModel& model, const RatingsMatrix& ratings, double lambda) {
    detail::checkModelShape(model, ratings);
    const double fu = frobeniusNorm(model.u());
    const double fv = frobeniusNorm(model.v());
    return detail::squaredError(model, ratings) + lambda * (fu * fu + fv * fv);
}

/// The objective minimized by the row solves: each row's squared norm is
/// weighted by its observation count.
inline double alsWeightedObjective(const FactorizationModel& model, const RatingsMatrix& ratings, double lambda) {
    detail::checkModelShape(model, ratings);
    double reg = 0.0;
    for (std::size_t i = 0; i < ratings.users(); ++i) {
        reg += static_cast<double>(ratings.byUser().csrRowIndices(i).size()) * detail::rowNormSquared(model.u(), i);
    }
    for (std::size_t j = 0; j < ratings.items(); ++j) {
        reg += static_cast<double>(ratings.byItem().csrRowIndices(j).size()) * detail::rowNormSquared(model.v(), j);
    }
    return detail::squaredError(model, ratings) + lambda * reg;
}

/// Root mean squared error over the observed entries.
inline double observedRmse(const FactorizationModel& model, const RatingsMatrix& ratings) {
    detail::checkModelShape(model, ratings);
    if (ratings.nnz() == 0) return 0.0;
    return std::sqrt(detail::squaredError(model, ratings) / static_cast<double>(ratings.nnz()));
}

}  // namespace mli
