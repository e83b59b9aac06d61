#include <gtest/gtest.h>

#include <cmath>
#include <set>
#include <sstream>

#include "mli/experiment.hpp"

using namespace mli;

#ifndef MLI_TEST_DATA_DIR
#define MLI_TEST_DATA_DIR "tests/data"
#endif

namespace {

const std::string kCorpus = std::string(MLI_TEST_DATA_DIR) + "/corpus100.txt";

}  // namespace

TEST(GenerateClassificationData, DeterministicAndSeparableByTruth) {
    const auto a = generateClassificationData(300, 7, 5, 3);
    const auto b = generateClassificationData(300, 7, 5, 1);
    EXPECT_EQ(a.features.numRows(), 300u);
    EXPECT_EQ(a.features.numCols(), 7u);
    EXPECT_EQ(a.features.toMatrix(), b.features.toMatrix());
    EXPECT_EQ(a.labels, b.labels);
    EXPECT_NE(generateClassificationData(300, 7, 6, 3).labels, a.labels);
    EXPECT_NEAR(std::sqrt(dot(a.truth, a.truth)), 1.0, 1e-12);
    const auto x = a.features.toMatrix();
    for (std::size_t i = 0; i < 300; ++i) {
        const double side = dot(a.truth, x.row(i));
        EXPECT_GE(std::abs(side), kClassificationMargin);
        EXPECT_EQ(a.labels[i], side > 0.0 ? 1.0 : 0.0);
    }
    EXPECT_THROW(generateClassificationData(0, 3, 1), ConfigError);
}

TEST(GenerateLowRankRatings, DeterministicAndInRange) {
    const auto a = generateLowRankRatings(30, 20, 3, 0.3, 4);
    EXPECT_EQ(a.byUser(), generateLowRankRatings(30, 20, 3, 0.3, 4).byUser());
    EXPECT_EQ(a.users(), 30u);
    EXPECT_EQ(a.items(), 20u);
    EXPECT_GT(a.nnz(), 0u);
}

TEST(ExperimentConfigTest, ValidationAndSizes) {
    ExperimentConfig c;
    EXPECT_NO_THROW(c.validate());
    c.workers = {1, 2, 4};
    EXPECT_EQ(c.pointsFor(2), 10000u);
    c.scaling = ScalingMode::Strong;
    EXPECT_EQ(c.pointsFor(2), 20000u);
    c.n = 777;
    EXPECT_EQ(c.pointsFor(4), 777u);
    EXPECT_EQ(c.tileFor(4), 1u);
    c.workers = {};
    EXPECT_THROW(c.validate(), ConfigError);
    c.workers = {1, 0};
    EXPECT_THROW(c.validate(), ConfigError);
    c.workers = {1};
    c.tile = 0;
    EXPECT_THROW(c.validate(), ConfigError);
    EXPECT_THROW(parseMode("svm"), ConfigError);
    EXPECT_THROW(parseScaling("linear"), ConfigError);
    EXPECT_EQ(parseMode(modeName(ExperimentMode::ClusterText)), ExperimentMode::ClusterText);
}

TEST(ScalingReportTest, CsvRoundTripIsLossless) {
    ScalingReport r;
    r.rows.push_back({"logistic", 1, 5000, 0.1234567890123456789, 0.995});
    r.rows.push_back({"logistic", 4, 20000, 1.0 / 3.0, 1.0});
    r.rows.push_back({"als", 2, 2, 2.5e-7, 0.0123456789});
    std::stringstream buf;
    writeReport(buf, r);
    EXPECT_EQ(buf.str().substr(0, buf.str().find('\n')), "mode,workers,scale,seconds,metric");
    EXPECT_EQ(parseReport(buf), r);
    ASSERT_TRUE(r.speedup(4).has_value());
    EXPECT_DOUBLE_EQ(*r.speedup(4), 0.1234567890123456789 * 3.0);
    EXPECT_FALSE(r.speedup(8).has_value());
    std::istringstream bad("mode,workers,scale,seconds,metric\nlogistic,x,1,1,1\n");
    EXPECT_THROW(parseReport(bad), IoError);
}

TEST(RunScaling, SingleWorkerLogistic) {
    ExperimentConfig c;
    c.n = 400;
    c.d = 5;
    const auto r = runScaling(c);
    ASSERT_EQ(r.rows.size(), 1u);
    EXPECT_EQ(r.rows[0].mode, "logistic");
    EXPECT_EQ(r.rows[0].workers, 1u);
    EXPECT_EQ(r.rows[0].scale, 400u);
    EXPECT_GT(r.rows[0].seconds, 0.0);
    EXPECT_GE(r.rows[0].metric, 0.99);
}

TEST(RunScaling, WeakAlsTilesWithWorkersAndIsReproducible) {
    ExperimentConfig c;
    c.mode = ExperimentMode::Als;
    c.workers = {1, 2};
    c.als.rank = 3;
    c.als.iterations = 3;
    const auto a = runScaling(c);
    const auto b = runScaling(c);
    ASSERT_EQ(a.rows.size(), 2u);
    EXPECT_EQ(a.rows[1].scale, 2u);
    for (std::size_t i = 0; i < 2; ++i) EXPECT_EQ(a.rows[i].metric, b.rows[i].metric);
    c.mode = ExperimentMode::ClusterText;
    EXPECT_THROW(runScaling(c), ConfigError);
}

TEST(TextPipeline, FixtureRunIsReproducible) {
    TextPipelineConfig config;
    config.workers = 3;
    const auto a = runTextPipeline(kCorpus, config);
    const auto b = runTextPipeline(kCorpus, config);
    ASSERT_EQ(a.assignments.size(), 100u);
    EXPECT_EQ(a.assignments, b.assignments);
    EXPECT_EQ(a.kmeans.centroids, b.kmeans.centroids);
    std::size_t total = 0;
    for (const auto& s : a.clusters) total += s.size;
    EXPECT_EQ(total, 100u);
    std::ostringstream out;
    writeAssignments(out, a.assignments);
    std::istringstream lines(out.str());
    std::string line;
    std::size_t count = 0;
    std::getline(lines, line);
    EXPECT_EQ(line, "docIndex,cluster");
    while (std::getline(lines, line)) ++count;
    EXPECT_EQ(count, 100u);
}

TEST(TextPipeline, SingleClusterTakesEveryDocument) {
    TextPipelineConfig config;
    config.k = 1;
    const auto r = runTextPipeline(kCorpus, config);
    for (auto a : r.assignments) EXPECT_EQ(a, 0u);
    EXPECT_EQ(r.clusters.at(0).size, 100u);
}

TEST(TextPipeline, SeparatesTopicsInFixture) {
    const auto r = runTextPipeline(kCorpus, TextPipelineConfig{});
    // Documents cycle through four topics; each topic should land in one cluster.
    std::set<std::size_t> seen;
    for (std::size_t t = 0; t < 4; ++t) {
        for (std::size_t i = t; i < 100; i += 4) EXPECT_EQ(r.assignments[i], r.assignments[t]) << "doc " << i;
        seen.insert(r.assignments[t]);
    }
    EXPECT_EQ(seen.size(), 4u);
}

TEST(TextPipeline, Errors) {
    EXPECT_THROW(runTextPipeline(std::string("/nonexistent/corpus.txt"), TextPipelineConfig{}), IoError);
    EXPECT_THROW(runTextPipeline(std::vector<std::string>{}, TextPipelineConfig{}), ConfigError);
}
