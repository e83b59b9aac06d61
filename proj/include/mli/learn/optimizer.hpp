#pragma once

/*
 * First-order optimizers over a partitioned numeric table.
 *
 * sgdOptimize runs one round per iteration: the current weights are
 * broadcast, every partition makes `localPasses` sequential SGD passes over
 * its rows in a shuffled order derived from (seed, round, partition, pass),
 * and the master replaces the weights with the example-weighted average of
 * the partition results.
 *
 * gradientDescent takes full-gradient steps; the gradient is the
 * example-weighted average of per-partition mean gradients, times n.
 */

#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "mli/engine.hpp"
#include "mli/error.hpp"
#include "mli/learn/interfaces.hpp"
#include "mli/ml_table.hpp"
#include "mli/random.hpp"

namespace mli {

struct SgdConfig {
    double learningRate = 0.5;
    std::size_t rounds = 20;
    std::size_t localPasses = 1;
    std::uint64_t seed = 42;

    void validate() const {
        if (!(learningRate > 0.0) || !std::isfinite(learningRate)) {
            throw ConfigError("learning rate must be positive and finite");
        }
        if (rounds == 0) throw ConfigError("rounds must be at least 1");
        if (localPasses == 0) throw ConfigError("local passes must be at least 1");
    }
};

/// Visiting order for one SGD pass over one partition.
inline std::vector<std::size_t> sgdVisitOrder(std::uint64_t seed, std::size_t round, std::size_t partition,
                                              std::size_t pass, std::size_t rows) {
    Rng rng(deriveSeed(seed, round, partition, pass));
    return shuffledIndices(rows, rng);
}

namespace detail {

inline void requireFinite(std::span<const double> w, const char* where) {
    for (std::size_t j = 0; j < w.size(); ++j) {
        if (!std::isfinite(w[j])) {
            throw DivergenceError(std::string(where) + ": weight " + std::to_string(j) + " is not finite");
        }
    }
}

inline void checkLabels(const MLNumericTable& data, std::span<const double> labels) {
    if (labels.size() != data.numRows()) {
        throw DimError("labels: " + std::to_string(labels.size()) + " labels for " +
                       std::to_string(data.numRows()) + " rows");
    }
}

}  // namespace detail

template <GradientFunction Grad>
std::vector<double> sgdOptimize(const MLNumericTable& data, std::span<const double> labels, const Grad& gradient,
                                const SgdConfig& config, WorkerPool* pool = nullptr,
                                std::vector<double> initial = {}) {
    config.validate();
    detail::checkLabels(data, labels);
    const std::size_t d = data.numCols();
    if (initial.empty()) initial.assign(d, 0.0);
    if (initial.size() != d) throw DimError("sgdOptimize: initial weights have the wrong length");

    std::vector<double> w = std::move(initial);
    for (std::size_t round = 0; round < config.rounds; ++round) {
        const auto shared = broadcast(w);
        auto local = mapPartitions(
            data,
            [&](std::size_t p, const LocalMatrix& block) {
                std::vector<double> wp = *shared;
                std::vector<double> grad(d);
                const std::size_t offset = data.partitionOffset(p);
                for (std::size_t pass = 0; pass < config.localPasses; ++pass) {
                    for (std::size_t i : sgdVisitOrder(config.seed, round, p, pass, block.rows())) {
                        gradient(std::span<const double>(wp), block.row(i), labels[offset + i], std::span<double>(grad));
                        for (std::size_t j = 0; j < d; ++j) wp[j] -= config.learningRate * grad[j];
                    }
                }
                return WeightedVector{std::move(wp), static_cast<double>(block.rows())};
            },
            pool);
        w = gatherAverage(local);
        detail::requireFinite(w, "sgdOptimize");
    }
    return w;
}

template <GradientFunction Grad>
std::vector<double> gradientDescent(const MLNumericTable& data, std::span<const double> labels, const Grad& gradient,
                                    const SgdConfig& config, WorkerPool* pool = nullptr) {
    config.validate();
    detail::checkLabels(data, labels);
    const std::size_t d = data.numCols();
    const double n = static_cast<double>(data.numRows());
    std::vector<double> w(d, 0.0);
    if (data.numRows() == 0) return w;
    for (std::size_t step = 0; step < config.rounds; ++step) {
        const auto shared = broadcast(w);
        auto partial = mapPartitions(
            data,
            [&](std::size_t p, const LocalMatrix& block) {
                std::vector<double> sum(d, 0.0);
                std::vector<double> grad(d);
                const std::size_t offset = data.partitionOffset(p);
                for (std::size_t i = 0; i < block.rows(); ++i) {
                    gradient(std::span<const double>(*shared), block.row(i), labels[offset + i], std::span<double>(grad));
                    for (std::size_t j = 0; j < d; ++j) sum[j] += grad[j];
                }
                const double rows = static_cast<double>(block.rows());
                if (rows > 0.0) {
                    for (double& s : sum) s /= rows;
                }
                return WeightedVector{std::move(sum), rows};
            },
            pool);
        const auto mean = gatherAverage(partial);
        for (std::size_t j = 0; j < d; ++j) w[j] -= config.learningRate * (mean[j] * n);
        detail::requireFinite(w, "gradientDescent");
    }
    return w;
}

}  // namespace mli
