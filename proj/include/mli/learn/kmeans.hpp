#pragma once

// Lloyd's k-means over a partitioned numeric table. Assignment runs per
// partition; the master sums the per-partition centroid sums and counts in
// partition order.

#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "mli/engine.hpp"
#include "mli/error.hpp"
#include "mli/local_matrix.hpp"
#include "mli/ml_table.hpp"
#include "mli/random.hpp"

namespace mli {

struct KMeansResult {
    LocalMatrix centroids;                 ///< k x d
    std::vector<std::size_t> assignments;  ///< one cluster per logical row
    std::vector<double> costHistory;       ///< sum of squared distances after each assignment step
    std::size_t iterations = 0;            ///< centroid updates performed
    bool converged = false;                ///< stopped at an assignment fixpoint

    double cost() const { return costHistory.empty() ? 0.0 : costHistory.back(); }
};

namespace detail {

struct AssignmentPartial {
    std::vector<std::size_t> assignments;
    LocalMatrix sums;
    std::vector<std::size_t> counts;
    double cost = 0.0;
};

inline double squaredDistance(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t j = 0; j < a.size(); ++j) {
        const double diff = a[j] - b[j];
        s += diff * diff;
    }
    return s;
}

// Nearest centroid for every row; ties go to the lowest centroid index.
inline std::vector<AssignmentPartial> assignAll(const MLNumericTable& data, const Broadcast<LocalMatrix>& centroids,
                                                WorkerPool* pool) {
    const std::size_t k = centroids->rows();
    const std::size_t d = data.numCols();
    return mapPartitions(
        data,
        [&](std::size_t, const LocalMatrix& block) {
            AssignmentPartial out{std::vector<std::size_t>(block.rows()), LocalMatrix(k, d),
                                  std::vector<std::size_t>(k, 0), 0.0};
            for (std::size_t i = 0; i < block.rows(); ++i) {
                const auto x = block.row(i);
                std::size_t best = 0;
                double bestDist = std::numeric_limits<double>::infinity();
                for (std::size_t c = 0; c < k; ++c) {
                    const double dist = squaredDistance(x, centroids->row(c));
                    if (dist < bestDist) {
                        bestDist = dist;
                        best = c;
                    }
                }
                out.assignments[i] = best;
                out.cost += bestDist;
                ++out.counts[best];
                auto s = out.sums.row(best);
                for (std::size_t j = 0; j < d; ++j) s[j] += x[j];
            }
            return out;
        },
        pool);
}

}  // namespace detail

/// Lloyd iterations from the given centroids. Stops after `iterations`
/// centroid updates or when an assignment step reproduces the previous one.
/// An empty cluster keeps its previous centroid. The returned assignments
/// always correspond to the returned centroids.
inline KMeansResult kMeansFrom(const MLNumericTable& data, LocalMatrix centroids, std::size_t iterations,
                               WorkerPool* pool = nullptr) {
    if (centroids.cols() != data.numCols()) throw DimError("kMeans: centroid width differs from data width");
    const std::size_t k = centroids.rows();
    const std::size_t d = data.numCols();
    KMeansResult result;
    std::optional<std::vector<std::size_t>> previous;
    for (std::size_t step = 0;; ++step) {
        auto partials = detail::assignAll(data, broadcast(centroids), pool);
        std::vector<std::size_t> assignments;
        assignments.reserve(data.numRows());
        LocalMatrix sums(k, d);
        std::vector<std::size_t> counts(k, 0);
        double cost = 0.0;
        for (const auto& part : partials) {
            assignments.insert(assignments.end(), part.assignments.begin(), part.assignments.end());
            cost += part.cost;
            for (std::size_t c = 0; c < k; ++c) {
                counts[c] += part.counts[c];
                auto s = sums.row(c);
                const auto ps = part.sums.row(c);
                for (std::size_t j = 0; j < d; ++j) s[j] += ps[j];
            }
        }
        result.costHistory.push_back(cost);
        const bool fixpoint = previous && *previous == assignments;
        result.assignments = assignments;
        if (fixpoint) {
            result.converged = true;
            break;
        }
        if (step == iterations) break;
        for (std::size_t c = 0; c < k; ++c) {
            if (counts[c] == 0) continue;
            auto row = centroids.row(c);
            const auto s = sums.row(c);
            for (std::size_t j = 0; j < d; ++j) row[j] = s[j] / static_cast<double>(counts[c]);
        }
        ++result.iterations;
        previous = std::move(assignments);
    }
    result.centroids = std::move(centroids);
    return result;
}

/// Seeds k centroids with k distinct rows chosen from the seed, then runs Lloyd.
inline KMeansResult kMeans(const MLNumericTable& data, std::size_t k, std::size_t iterations, std::uint64_t seed,
                           WorkerPool* pool = nullptr) {
    if (k == 0) throw ConfigError("kMeans: k must be at least 1");
    if (k > data.numRows()) {
        throw ConfigError("kMeans: k = " + std::to_string(k) + " exceeds " + std::to_string(data.numRows()) + " rows");
    }
    Rng rng(deriveSeed(seed, 0xC1u));
    const auto order = shuffledIndices(data.numRows(), rng);
    LocalMatrix centroids(k, data.numCols());
    for (std::size_t c = 0; c < k; ++c) {
        const auto x = data.row(order[c]);
        std::copy(x.begin(), x.end(), centroids.row(c).begin());
    }
    return kMeansFrom(data, std::move(centroids), iterations, pool);
}

}  // namespace mli
