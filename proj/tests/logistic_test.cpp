#include <gtest/gtest.h>

#include <cmath>
#include <numeric>
#include <random>

#include "mli/experiment.hpp"
#include "mli/learn/logistic.hpp"
#include "test_support.hpp"

using namespace mli;

namespace {

struct Instance {
    std::vector<std::vector<double>> x;
    std::vector<double> y;
};

Instance randomInstance(std::mt19937_64& rng, std::size_t n, std::size_t d) {
    Instance out{oracle::randomGrid(rng, n, d), std::vector<double>(n)};
    for (auto& v : out.y) v = static_cast<double>(rng() % 2);
    return out;
}

MLNumericTable tableOf(const Instance& inst, std::size_t partitions) {
    return MLNumericTable::fromMatrix(oracle::fromGrid(inst.x), partitions);
}

double relativeError(const std::vector<double>& got, const std::vector<double>& expect) {
    double num = 0.0, den = 0.0;
    for (std::size_t j = 0; j < got.size(); ++j) {
        num += (got[j] - expect[j]) * (got[j] - expect[j]);
        den += expect[j] * expect[j];
    }
    return den == 0.0 ? std::sqrt(num) : std::sqrt(num / den);
}

struct ZeroGradient {
    void operator()(std::span<const double>, std::span<const double>, double, std::span<double> out) const {
        std::fill(out.begin(), out.end(), 0.0);
    }
};

}  // namespace

TEST(Sigmoid, KnownValuesAndSymmetry) {
    EXPECT_EQ(sigmoid(0.0), 0.5);
    EXPECT_NEAR(sigmoid(2.0), 0.8807970779778823, 1e-16);
    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> u(-50.0, 50.0);
    for (int i = 0; i < 1000; ++i) {
        const double x = u(rng);
        EXPECT_NEAR(sigmoid(x) + sigmoid(-x), 1.0, 1e-15);
    }
    EXPECT_GT(sigmoid(-700.0), 0.0);
    EXPECT_LT(sigmoid(-700.0), 1e-300);
    EXPECT_EQ(sigmoid(700.0), 1.0);
    EXPECT_FALSE(std::isnan(sigmoid(-1e6)));
}

TEST(LogisticGradient, Examples) {
    const std::vector<double> x{0.3, -2.0, 1.0};
    const auto g = logisticGradientSummand(std::vector<double>(3, 0.0), x, 1.0);
    for (std::size_t j = 0; j < 3; ++j) EXPECT_DOUBLE_EQ(g[j], -0.5 * x[j]);
    const auto h = logisticGradientSummand(std::vector<double>{1, 0}, std::vector<double>{0, 1}, 1.0);
    EXPECT_EQ(h, (std::vector<double>{0.0, -0.5}));
    EXPECT_THROW(logisticGradientSummand(std::vector<double>{1, 0}, std::vector<double>{0, 1, 2}, 1.0), DimError);
}

TEST(LogisticGradient, MatchesCentralFiniteDifferences) {
    std::mt19937_64 rng(2);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (int trial = 0; trial < 100; ++trial) {
        const std::size_t d = 1 + rng() % 20;
        std::vector<double> w(d), x(d);
        for (auto& v : w) v = u(rng);
        for (auto& v : x) v = u(rng);
        const double y = static_cast<double>(rng() % 2);
        const auto g = logisticGradientSummand(w, x, y);
        ASSERT_LT(relativeError(g, oracle::finiteDifferenceGradient(w, x, y)), 1e-6);
    }
}

TEST(LogisticLoss, AgreesWithExtendedPrecisionOracle) {
    std::mt19937_64 rng(3);
    for (int trial = 0; trial < 100; ++trial) {
        const auto x = oracle::randomGrid(rng, 1, 8)[0];
        auto w = oracle::randomGrid(rng, 1, 8)[0];
        for (auto& v : w) v *= 30.0;
        const double y = static_cast<double>(rng() % 2);
        const std::vector<long double> wl(w.begin(), w.end());
        const double expect = static_cast<double>(oracle::logisticNll(wl, x, y));
        EXPECT_NEAR(logisticLoss(w, x, y), expect, 1e-12 * std::max(1.0, std::abs(expect)));
    }
}

TEST(GradientDescent, Examples) {
    const SgdConfig five{0.5, 5, 1, 1};
    const auto zero = MLNumericTable::fromMatrix(LocalMatrix(10, 3), 2);
    EXPECT_EQ(gradientDescent(zero, std::vector<double>(10, 1.0), five), std::vector<double>(3, 0.0));

    const auto single = MLNumericTable::fromMatrix(LocalMatrix::fromRows({{1.0}}), 1);
    const SgdConfig one{1.0, 1, 1, 1};
    EXPECT_EQ(gradientDescent(single, std::vector<double>{1.0}, one), std::vector<double>{0.5});
    EXPECT_THROW(gradientDescent(single, std::vector<double>{1.0, 0.0}, one), DimError);
}

TEST(GradientDescent, MatchesSerialOracleForEveryPartitionCount) {
    std::mt19937_64 rng(4);
    const auto inst = randomInstance(rng, 100, 6);
    const SgdConfig config{0.01, 25, 1, 7};
    const auto expect = oracle::serialLogisticGd(inst.x, inst.y, config.learningRate, config.rounds);
    const auto p1 = gradientDescent(tableOf(inst, 1), inst.y, config);
    WorkerPool pool(4);
    for (std::size_t p : {1, 2, 4, 8}) {
        const auto w = gradientDescent(tableOf(inst, p), inst.y, config, &pool);
        for (std::size_t j = 0; j < w.size(); ++j) {
            EXPECT_NEAR(w[j], p1[j], 1e-12) << "P=" << p;
            EXPECT_NEAR(w[j], expect[j], 1e-12) << "P=" << p;
        }
    }
}

TEST(Sgd, ZeroGradientLeavesWeightsUnchanged) {
    std::mt19937_64 rng(5);
    const auto inst = randomInstance(rng, 40, 3);
    const std::vector<double> start{0.25, -1.0, 3.0};
    const auto w = sgdOptimize(tableOf(inst, 4), inst.y, ZeroGradient{}, SgdConfig{0.5, 9, 2, 3}, nullptr, start);
    EXPECT_EQ(w, start);
}

TEST(Sgd, SinglePartitionEqualsSerialLoopBitwise) {
    std::mt19937_64 rng(6);
    for (int trial = 0; trial < 20; ++trial) {
        const std::size_t n = 1 + rng() % 200;
        const std::size_t d = 1 + rng() % 12;
        const auto inst = randomInstance(rng, n, d);
        const SgdConfig config{0.05 + 0.9 * static_cast<double>(rng() % 100) / 100.0, 1 + rng() % 15, 1, rng()};
        const auto got = sgdOptimize(tableOf(inst, 1), inst.y, LogisticGradient{}, config);
        const auto expect = oracle::serialLogisticSgd(inst.x, inst.y, config.learningRate, config.rounds,
                                                      [&](std::size_t t) { return sgdVisitOrder(config.seed, t, 0, 0, n); });
        ASSERT_EQ(got, expect) << "trial " << trial;
    }
}

TEST(Sgd, VisitOrderIsAPermutationAndSeedDependent) {
    const auto a = sgdVisitOrder(1, 0, 0, 0, 50);
    auto sorted = a;
    std::sort(sorted.begin(), sorted.end());
    for (std::size_t i = 0; i < 50; ++i) EXPECT_EQ(sorted[i], i);
    EXPECT_EQ(a, sgdVisitOrder(1, 0, 0, 0, 50));
    EXPECT_NE(a, sgdVisitOrder(2, 0, 0, 0, 50));
    EXPECT_NE(a, sgdVisitOrder(1, 1, 0, 0, 50));
    EXPECT_NE(a, sgdVisitOrder(1, 0, 1, 0, 50));
}

TEST(Sgd, DeterministicAcrossWorkerCounts) {
    const auto data = generateClassificationData(600, 5, 11, 6);
    const SgdConfig config{0.3, 6, 2, 9};
    const auto serial = sgdOptimize(data.features, data.labels, LogisticGradient{}, config);
    WorkerPool two(2), eight(8);
    EXPECT_EQ(sgdOptimize(data.features, data.labels, LogisticGradient{}, config, &two), serial);
    EXPECT_EQ(sgdOptimize(data.features, data.labels, LogisticGradient{}, config, &eight), serial);
}

TEST(Sgd, ConfigAndDivergenceErrors) {
    const auto t = MLNumericTable::fromMatrix(LocalMatrix::fromRows({{1e308}, {1e308}}), 1);
    EXPECT_THROW(sgdOptimize(t, std::vector<double>{1.0, 0.0}, LogisticGradient{}, SgdConfig{1e300, 3, 1, 1}),
                 DivergenceError);
    EXPECT_THROW(SgdConfig({0.0, 1, 1, 1}).validate(), ConfigError);
    EXPECT_THROW(SgdConfig({0.1, 0, 1, 1}).validate(), ConfigError);
    EXPECT_THROW(SgdConfig({0.1, 1, 0, 1}).validate(), ConfigError);
}

TEST(LogisticModelTest, PredictionRules) {
    const LogisticModel zero(std::vector<double>(3, 0.0));
    EXPECT_EQ(zero.predict(std::vector<double>{1, -1, 5}), 1);
    EXPECT_EQ(zero.predictProbability(std::vector<double>{1, -1, 5}), 0.5);
    const LogisticModel m(std::vector<double>{10, 0});
    EXPECT_EQ(m.predict(std::vector<double>{1, 0}), 1);
    EXPECT_EQ(m.predict(std::vector<double>{-1, 0}), 0);
    static_assert(Model<LogisticModel, std::vector<double>>);
    static_assert(Algorithm<LogisticRegression, MLNumericTable, std::span<const double>, SgdConfig>);
}

TEST(LogisticEndToEnd, SeparableDataTrainingAndHeldOutAccuracy) {
    const auto data = generateClassificationData(2500, 10, 2024, 1);
    const auto all = data.features.toMatrix();
    std::vector<std::size_t> train(2000), held(500);
    std::iota(train.begin(), train.end(), 0);
    std::iota(held.begin(), held.end(), 2000);
    const auto trainTable = MLNumericTable::fromMatrix(slice(all, train, mli::all), 4);
    const auto heldTable = MLNumericTable::fromMatrix(slice(all, held, mli::all), 1);
    const std::vector<double> trainLabels(data.labels.begin(), data.labels.begin() + 2000);
    const std::vector<double> heldLabels(data.labels.begin() + 2000, data.labels.end());

    WorkerPool pool(4);
    const auto model = trainLogistic(trainTable, trainLabels, SgdConfig{0.5, 20, 1, 42}, &pool);
    EXPECT_GE(model.accuracy(trainTable, trainLabels), 0.99);
    EXPECT_GE(model.accuracy(heldTable, heldLabels), 0.98);
}
