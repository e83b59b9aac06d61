#pragma once

/*
 * Experiment harness: synthetic data generators, ratings tiling, weak/strong
 * scaling runs and the text clustering pipeline. Wall time covers the train
 * call only; data generation and I/O are excluded.
 */

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "mli/engine.hpp"
#include "mli/error.hpp"
#include "mli/io.hpp"
#include "mli/learn/als.hpp"
#include "mli/learn/kmeans.hpp"
#include "mli/learn/logistic.hpp"
#include "mli/learn/optimizer.hpp"
#include "mli/learn/text.hpp"
#include "mli/ml_table.hpp"
#include "mli/random.hpp"

namespace mli {

/// Minimum |w.x| of generated points around the ground-truth hyperplane.
inline constexpr double kClassificationMargin = 0.1;

struct ClassificationData {
    MLNumericTable features;
    std::vector<double> labels;    ///< 0 or 1
    std::vector<double> truth;     ///< unit-norm generating hyperplane
};

/// Standard-normal features labelled by a random unit hyperplane through the
/// origin; points within the margin are redrawn, so the data is separable.
inline ClassificationData generateClassificationData(std::size_t n, std::size_t d, std::uint64_t seed,
                                                     std::size_t partitionCount = defaultWorkerCount()) {
    if (n == 0 || d == 0) throw ConfigError("generateClassificationData: n and d must be at least 1");
    Rng rng(deriveSeed(seed, 0xDA7Au));
    std::vector<double> truth(d);
    double norm = 0.0;
    while (norm == 0.0) {
        for (double& t : truth) t = standardNormal(rng);
        norm = std::sqrt(dot(truth, truth));
    }
    for (double& t : truth) t /= norm;

    LocalMatrix x(n, d);
    std::vector<double> labels(n);
    for (std::size_t i = 0; i < n; ++i) {
        auto row = x.row(i);
        double side = 0.0;
        do {
            for (double& v : row) v = standardNormal(rng);
            side = dot(truth, row);
        } while (std::abs(side) < kClassificationMargin);
        labels[i] = side > 0.0 ? 1.0 : 0.0;
    }
    return {MLNumericTable::fromMatrix(x, partitionCount), std::move(labels), std::move(truth)};
}

/// Low-rank ratings U V^T (entries of U, V uniform in [0, 1)), each entry
/// observed independently with probability `density`.
inline RatingsMatrix generateLowRankRatings(std::size_t users, std::size_t items, std::size_t rank, double density,
                                            std::uint64_t seed) {
    if (users == 0 || items == 0 || rank == 0) throw ConfigError("generateLowRankRatings: empty shape");
    if (!(density > 0.0 && density <= 1.0)) throw ConfigError("generateLowRankRatings: density must be in (0, 1]");
    Rng rng(deriveSeed(seed, 0x4A7Eu));
    LocalMatrix u(users, rank);
    LocalMatrix v(items, rank);
    for (double& x : u.data()) x = uniformUnit(rng);
    for (double& x : v.data()) x = uniformUnit(rng);
    std::vector<Triplet> entries;
    for (std::size_t i = 0; i < users; ++i) {
        for (std::size_t j = 0; j < items; ++j) {
            if (uniformUnit(rng) < density) entries.push_back({i, j, dot(u.row(i), v.row(j))});
        }
    }
    return RatingsMatrix::fromTriplets(users, items, std::move(entries));
}

/// Block-diagonal tiling: t copies of the base matrix at offsets (c*m, c*n).
inline RatingsMatrix tileRatings(const RatingsMatrix& base, std::size_t t) {
    if (t == 0) throw ConfigError("tileRatings: tiling factor must be at least 1");
    const auto& m = base.byUser();
    std::vector<Triplet> entries;
    entries.reserve(base.nnz() * t);
    for (std::size_t c = 0; c < t; ++c) {
        for (std::size_t i = 0; i < m.rows(); ++i) {
            const auto idx = m.csrRowIndices(i);
            const auto val = m.csrRowValues(i);
            for (std::size_t k = 0; k < idx.size(); ++k) {
                entries.push_back({c * base.users() + i, c * base.items() + idx[k], val[k]});
            }
        }
    }
    return RatingsMatrix::fromTriplets(base.users() * t, base.items() * t, std::move(entries));
}

/// The ratings of tile `block` of a tiled matrix, shifted back to the origin.
inline RatingsMatrix ratingsBlock(const RatingsMatrix& tiled, std::size_t users, std::size_t items,
                                  std::size_t block) {
    const auto& m = tiled.byUser();
    std::vector<Triplet> entries;
    for (std::size_t i = block * users; i < (block + 1) * users && i < m.rows(); ++i) {
        const auto idx = m.csrRowIndices(i);
        const auto val = m.csrRowValues(i);
        for (std::size_t k = 0; k < idx.size(); ++k) {
            if (idx[k] >= block * items && idx[k] < (block + 1) * items) {
                entries.push_back({i - block * users, idx[k] - block * items, val[k]});
            }
        }
    }
    return RatingsMatrix::fromTriplets(users, items, std::move(entries));
}

/// Factors of one tile of a model trained on tiled ratings.
inline FactorizationModel modelBlock(const FactorizationModel& model, std::size_t users, std::size_t items,
                                     std::size_t block) {
    std::vector<std::size_t> rows(users);
    std::vector<std::size_t> cols(items);
    for (std::size_t i = 0; i < users; ++i) rows[i] = block * users + i;
    for (std::size_t j = 0; j < items; ++j) cols[j] = block * items + j;
    return FactorizationModel(slice(model.u(), rows, all), slice(model.v(), cols, all));
}

enum class ExperimentMode { Logistic, Als, ClusterText };
enum class ScalingMode { None, Weak, Strong };

inline std::string modeName(ExperimentMode m) {
    switch (m) {
        case ExperimentMode::Logistic: return "logistic";
        case ExperimentMode::Als: return "als";
        case ExperimentMode::ClusterText: return "cluster-text";
    }
    return "?";
}

inline ExperimentMode parseMode(const std::string& s) {
    if (s == "logistic") return ExperimentMode::Logistic;
    if (s == "als") return ExperimentMode::Als;
    if (s == "cluster-text") return ExperimentMode::ClusterText;
    throw ConfigError("unknown mode '" + s + "' (expected logistic, als or cluster-text)");
}

inline ScalingMode parseScaling(const std::string& s) {
    if (s == "weak") return ScalingMode::Weak;
    if (s == "strong") return ScalingMode::Strong;
    if (s == "none") return ScalingMode::None;
    throw ConfigError("unknown scaling '" + s + "' (expected weak, strong or none)");
}

struct ExperimentConfig {
    ExperimentMode mode = ExperimentMode::Logistic;
    ScalingMode scaling = ScalingMode::Weak;
    std::vector<std::size_t> workers{1};

    /// Logistic points: per worker under weak scaling, in total otherwise.
    /// Unset means 5000 per worker, or the 4-worker weak size in total.
    std::optional<std::size_t> n;
    std::size_t d = 10;

    /// Ratings file (`user item rating`); synthetic ratings when empty.
    std::string ratingsPath;
    /// Tiling factor for strong scaling and single ALS runs.
    std::size_t tile = 1;

    SgdConfig sgd;
    AlsConfig als;
    std::uint64_t seed = 42;
    std::string out;

    static constexpr std::size_t kDefaultPointsPerWorker = 5000;

    void validate() const {
        if (workers.empty()) throw ConfigError("workers list is empty");
        for (auto w : workers) {
            if (w == 0) throw ConfigError("worker counts must be positive");
        }
        if (tile == 0) throw ConfigError("tiling factor must be at least 1");
        if (n && *n == 0) throw ConfigError("n must be at least 1");
        if (d == 0) throw ConfigError("d must be at least 1");
        if (mode == ExperimentMode::ClusterText) throw ConfigError("scaling runs support logistic and als only");
        sgd.validate();
        als.validate();
    }

    std::size_t pointsFor(std::size_t workerCount) const {
        if (scaling == ScalingMode::Weak) return n.value_or(kDefaultPointsPerWorker) * workerCount;
        return n.value_or(kDefaultPointsPerWorker * 4);
    }

    std::size_t tileFor(std::size_t workerCount) const { return scaling == ScalingMode::Weak ? workerCount : tile; }
};

struct ScalingRow {
    std::string mode;
    std::size_t workers = 0;
    std::size_t scale = 0;
    double seconds = 0.0;
    double metric = 0.0;

    friend bool operator==(const ScalingRow&, const ScalingRow&) = default;
};

struct ScalingReport {
    std::vector<ScalingRow> rows;

    /// Wall time of the first row divided by the row's time for `workers`.
    std::optional<double> speedup(std::size_t workers) const {
        if (rows.empty()) return std::nullopt;
        for (const auto& r : rows) {
            if (r.workers == workers && r.seconds > 0.0) return rows.front().seconds / r.seconds;
        }
        return std::nullopt;
    }

    friend bool operator==(const ScalingReport&, const ScalingReport&) = default;
};

inline void writeReport(std::ostream& out, const ScalingReport& report) {
    out << "mode,workers,scale,seconds,metric\n";
    char buf[64];
    for (const auto& r : report.rows) {
        out << r.mode << ',' << r.workers << ',' << r.scale << ',';
        std::snprintf(buf, sizeof buf, "%.17g", r.seconds);
        out << buf << ',';
        std::snprintf(buf, sizeof buf, "%.17g", r.metric);
        out << buf << '\n';
    }
}

inline ScalingReport parseReport(std::istream& in) {
    std::string line;
    if (!std::getline(in, line) || line != "mode,workers,scale,seconds,metric") {
        throw IoError("scaling report: missing or unexpected header");
    }
    ScalingReport report;
    std::size_t lineNo = 1;
    while (std::getline(in, line)) {
        ++lineNo;
        if (line.empty()) continue;
        std::vector<std::string> f;
        std::stringstream ss(line);
        std::string field;
        while (std::getline(ss, field, ',')) f.push_back(field);
        if (f.size() != 5) throw IoError("scaling report line " + std::to_string(lineNo) + ": expected 5 fields");
        try {
            report.rows.push_back({f[0], std::stoul(f[1]), std::stoul(f[2]), std::stod(f[3]), std::stod(f[4])});
        } catch (const std::exception&) {
            throw IoError("scaling report line " + std::to_string(lineNo) + ": malformed number");
        }
    }
    return report;
}

struct RunOutcome {
    double seconds = 0.0;
    double metric = 0.0;
};

/// Trains logistic regression on freshly generated data; metric is training accuracy.
inline RunOutcome runLogisticOnce(const ExperimentConfig& config, std::size_t workers, std::size_t points) {
    const auto data = generateClassificationData(points, config.d, config.seed, workers);
    WorkerPool pool(workers);
    const auto start = std::chrono::steady_clock::now();
    const auto model = trainLogistic(data.features, data.labels, config.sgd, &pool);
    const auto stop = std::chrono::steady_clock::now();
    return {std::chrono::duration<double>(stop - start).count(), model.accuracy(data.features, data.labels)};
}

/// Base ratings for ALS runs: the configured file, or a synthetic rank-5
/// 200 x 150 matrix with 30% of entries observed.
inline RatingsMatrix baseRatings(const ExperimentConfig& config) {
    if (!config.ratingsPath.empty()) {
        auto file = readTriplets(config.ratingsPath);
        return RatingsMatrix::fromTriplets(file.rows, file.cols, std::move(file.entries));
    }
    return generateLowRankRatings(200, 150, 5, 0.3, config.seed);
}

/// ALS on the base ratings tiled `tile` times; metric is observed RMSE.
inline RunOutcome runAlsOnce(const ExperimentConfig& config, const RatingsMatrix& base, std::size_t workers,
                             std::size_t tile) {
    const auto ratings = tileRatings(base, tile);
    WorkerPool pool(workers);
    AlsConfig als = config.als;
    als.partitions = workers;
    const auto start = std::chrono::steady_clock::now();
    const auto model = alsTrain(ratings, als, &pool);
    const auto stop = std::chrono::steady_clock::now();
    return {std::chrono::duration<double>(stop - start).count(), observedRmse(model, ratings)};
}

/// One end-to-end run per worker count. Weak scaling grows the data with the
/// worker count; strong scaling holds it fixed.
inline ScalingReport runScaling(const ExperimentConfig& config) {
    config.validate();
    ScalingReport report;
    std::optional<RatingsMatrix> base;
    if (config.mode == ExperimentMode::Als) base = baseRatings(config);
    for (auto w : config.workers) {
        ScalingRow row;
        row.mode = modeName(config.mode);
        row.workers = w;
        RunOutcome outcome;
        if (config.mode == ExperimentMode::Logistic) {
            row.scale = config.pointsFor(w);
            outcome = runLogisticOnce(config, w, row.scale);
        } else {
            row.scale = config.tileFor(w);
            outcome = runAlsOnce(config, *base, w, row.scale);
        }
        row.seconds = std::max(outcome.seconds, 1e-9);
        row.metric = outcome.metric;
        report.rows.push_back(std::move(row));
    }
    return report;
}

struct TextPipelineConfig {
    std::size_t ngram = 1;
    std::size_t k = 4;
    std::size_t iterations = 20;
    std::uint64_t seed = 42;
    std::size_t workers = 1;
    /// Scale each tf-idf row to unit length before clustering.
    bool normalizeRows = true;
    std::size_t topTerms = 5;
};

struct ClusterSummary {
    std::size_t cluster = 0;
    std::size_t size = 0;
    std::vector<std::string> topTerms;
};

struct TextPipelineResult {
    std::vector<std::size_t> assignments;
    std::vector<ClusterSummary> clusters;
    std::vector<std::string> vocabulary;
    KMeansResult kmeans;
};

/// Unit-length rows; zero rows stay zero.
inline LocalMatrix normalizeRows(const LocalMatrix& m) {
    LocalMatrix out = toDense(m);
    for (std::size_t i = 0; i < out.rows(); ++i) {
        auto r = out.row(i);
        const double len = std::sqrt(dot(r, r));
        if (len > 0.0) {
            for (double& x : r) x /= len;
        }
    }
    return out;
}

/// Documents -> n-grams -> tf-idf -> k-means.
inline TextPipelineResult runTextPipeline(const std::vector<std::string>& docs, const TextPipelineConfig& config) {
    if (docs.empty()) throw ConfigError("text pipeline: corpus is empty");
    WorkerPool pool(config.workers);
    const auto corpus = corpusTable(docs, config.workers);
    const auto terms = nGramTable(corpus, config.ngram, 0, &pool);
    auto tfidf = tfIdf(terms, docs.size(), config.workers);
    MLNumericTable features = tfidf.features;
    if (config.normalizeRows) features = features.matrixBatchMap([](const LocalMatrix& m) { return normalizeRows(m); }, &pool);

    TextPipelineResult result;
    result.kmeans = kMeans(features, config.k, config.iterations, config.seed, &pool);
    result.assignments = result.kmeans.assignments;
    result.vocabulary = std::move(tfidf.vocabulary);
    const auto& centroids = result.kmeans.centroids;
    for (std::size_t c = 0; c < config.k; ++c) {
        ClusterSummary s;
        s.cluster = c;
        s.size = static_cast<std::size_t>(std::count(result.assignments.begin(), result.assignments.end(), c));
        std::vector<std::size_t> order(result.vocabulary.size());
        for (std::size_t j = 0; j < order.size(); ++j) order[j] = j;
        std::stable_sort(order.begin(), order.end(),
                         [&](std::size_t a, std::size_t b) { return centroids.get(c, a) > centroids.get(c, b); });
        for (std::size_t t = 0; t < order.size() && s.topTerms.size() < config.topTerms; ++t) {
            if (centroids.get(c, order[t]) > 0.0) s.topTerms.push_back(result.vocabulary[order[t]]);
        }
        result.clusters.push_back(std::move(s));
    }
    return result;
}

inline TextPipelineResult runTextPipeline(const std::string& corpusPath, const TextPipelineConfig& config) {
    const auto docs = readCorpus(corpusPath);
    if (docs.empty()) throw IoError("corpus '" + corpusPath + "' is empty");
    return runTextPipeline(docs, config);
}

inline void writeAssignments(std::ostream& out, const std::vector<std::size_t>& assignments) {
    out << "docIndex,cluster\n";
    for (std::size_t i = 0; i < assignments.size(); ++i) out << i << ',' << assignments[i] << '\n';
}

inline void writeClusterSummary(std::ostream& out, const TextPipelineResult& result) {
    for (const auto& s : result.clusters) {
        out << "cluster " << s.cluster << " (" << s.size << " docs):";
        for (const auto& t : s.topTerms) out << ' ' << t;
        out << '\n';
    }
}

}  // namespace mli
