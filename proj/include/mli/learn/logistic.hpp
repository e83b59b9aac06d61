#pragma once

#include <cmath>
#include <span>
#include <string>
#include <vector>

#include "mli/error.hpp"
#include "mli/local_matrix.hpp"
#include "mli/ml_table.hpp"
#include "mli/learn/optimizer.hpp"

namespace mli {

/// Logistic sigmoid, branching on sign so exp() never overflows.
inline double sigmoid(double x) noexcept {
    if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
    const double e = std::exp(x);
    return e / (1.0 + e);
}

/// Per-example negative log-likelihood, -[y log s + (1 - y) log(1 - s)] with
/// s = sigmoid(w.x), evaluated without forming log(0).
inline double logisticLoss(std::span<const double> w, std::span<const double> x, double y) {
    const double z = dot(w, x);
    // log(1 + e^z) computed stably.
    const double softplus = z > 0.0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z));
    return softplus - y * z;
}

/// (sigmoid(w.x) - y) x, written into `out`.
inline void logisticGradientSummand(std::span<const double> w, std::span<const double> x, double y,
                                    std::span<double> out) {
    if (w.size() != x.size() || out.size() != x.size()) {
        throw DimError("logistic gradient: w has " + std::to_string(w.size()) + " entries, x has " +
                       std::to_string(x.size()));
    }
    const double residual = sigmoid(dot(w, x)) - y;
    for (std::size_t j = 0; j < x.size(); ++j) out[j] = residual * x[j];
}

inline std::vector<double> logisticGradientSummand(std::span<const double> w, std::span<const double> x, double y) {
    std::vector<double> out(x.size());
    logisticGradientSummand(w, x, y, out);
    return out;
}

/// GradientFunction for logistic loss.
struct LogisticGradient {
    void operator()(std::span<const double> w, std::span<const double> x, double y, std::span<double> out) const {
        logisticGradientSummand(w, x, y, out);
    }
};

class LogisticModel {
public:
    LogisticModel() = default;
    explicit LogisticModel(std::vector<double> weights) : weights_(std::move(weights)) {}

    const std::vector<double>& weights() const noexcept { return weights_; }
    std::size_t dimension() const noexcept { return weights_.size(); }

    double predictProbability(std::span<const double> x) const { return sigmoid(dot(weights_, x)); }

    /// Class 1 iff sigmoid(w.x) >= 0.5.
    int predict(std::span<const double> x) const { return predictProbability(x) >= 0.5 ? 1 : 0; }

    /// Fraction of rows whose predicted label equals the given one.
    double accuracy(const MLNumericTable& data, std::span<const double> labels) const {
        if (labels.size() != data.numRows()) throw DimError("accuracy: label count differs from row count");
        if (labels.empty()) return 0.0;
        std::size_t correct = 0;
        for (std::size_t i = 0; i < data.numRows(); ++i) {
            if (static_cast<double>(predict(data.row(i))) == labels[i]) ++correct;
        }
        return static_cast<double>(correct) / static_cast<double>(labels.size());
    }

private:
    std::vector<double> weights_;
};

/// Logistic regression trained by locally-averaged SGD.
struct LogisticRegression {
    WorkerPool* pool = nullptr;

    LogisticModel train(const MLNumericTable& data, std::span<const double> labels, const SgdConfig& config) const {
        return LogisticModel(sgdOptimize(data, labels, LogisticGradient{}, config, pool));
    }
};

/// Full-batch gradient descent on logistic loss from w = 0.
inline std::vector<double> gradientDescent(const MLNumericTable& data, std::span<const double> labels,
                                           const SgdConfig& config, WorkerPool* pool = nullptr) {
    return gradientDescent(data, labels, LogisticGradient{}, config, pool);
}

inline LogisticModel trainLogistic(const MLNumericTable& data, std::span<const double> labels,
                                   const SgdConfig& config, WorkerPool* pool = nullptr) {
    return LogisticRegression{pool}.train(data, labels, config);
}

}  // namespace mli
