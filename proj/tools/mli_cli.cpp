// mli: command-line driver for training runs, the text pipeline and scaling
// experiments.

#include <CLI11.hpp>

#include <fstream>
#include <iostream>

#include "mli/experiment.hpp"
#include "mli/learn/serialization.hpp"

namespace {

struct Options {
    std::vector<std::size_t> workers;
    std::size_t n = 0;
    std::size_t d = 10;
    std::size_t tile = 1;
    std::size_t rank = 10;
    double lambda = 0.01;
    std::size_t iters = 10;
    double eta = 0.5;
    std::size_t rounds = 20;
    std::size_t localPasses = 1;
    std::uint64_t seed = 42;
    std::string out;
    std::string mode = "logistic";
    std::string scaling = "weak";
    std::string ratings;
    std::string corpus;
    std::size_t ngram = 1;
    std::size_t k = 4;
};

mli::ExperimentConfig toConfig(const Options& o, const CLI::App& app) {
    mli::ExperimentConfig c;
    c.mode = mli::parseMode(o.mode);
    c.scaling = mli::parseScaling(o.scaling);
    c.workers = o.workers.empty() ? std::vector<std::size_t>{mli::defaultWorkerCount()} : o.workers;
    if (app.count("--n") > 0) c.n = o.n;
    c.d = o.d;
    c.ratingsPath = o.ratings;
    c.tile = o.tile;
    c.sgd = {o.eta, o.rounds, o.localPasses, o.seed};
    c.als = {o.rank, o.lambda, o.iters, o.seed, 0};
    c.seed = o.seed;
    c.out = o.out;
    return c;
}

// Writes to the --out path, or to stdout when none is given.
template <typename Fn>
void emit(const std::string& path, Fn&& write) {
    if (path.empty()) {
        write(std::cout);
        return;
    }
    std::ofstream out(path);
    if (!out) throw mli::IoError("cannot open '" + path + "' for writing");
    write(out);
    if (!out) throw mli::IoError("write to '" + path + "' failed");
}

void runLogistic(const mli::ExperimentConfig& c) {
    c.sgd.validate();
    const std::size_t workers = c.workers.front();
    const std::size_t points = c.n.value_or(mli::ExperimentConfig::kDefaultPointsPerWorker * workers);
    const auto data = mli::generateClassificationData(points, c.d, c.seed, workers);
    mli::WorkerPool pool(workers);
    const auto model = mli::trainLogistic(data.features, data.labels, c.sgd, &pool);
    std::cerr << "logistic: n=" << points << " d=" << c.d << " workers=" << workers
              << " training accuracy=" << model.accuracy(data.features, data.labels) << '\n';
    if (!c.out.empty()) mli::saveModelFile(c.out, model);
}

void runAls(const mli::ExperimentConfig& c) {
    c.als.validate();
    if (c.tile == 0) throw mli::ConfigError("tiling factor must be at least 1");
    const std::size_t workers = c.workers.front();
    const auto ratings = mli::tileRatings(mli::baseRatings(c), c.tile);
    mli::WorkerPool pool(workers);
    auto als = c.als;
    als.partitions = workers;
    const auto model = mli::alsTrain(ratings, als, &pool);
    std::cerr << "als: " << ratings.users() << "x" << ratings.items() << " nnz=" << ratings.nnz()
              << " workers=" << workers << " observed rmse=" << mli::observedRmse(model, ratings) << '\n';
    if (!c.out.empty()) mli::saveModelFile(c.out, model);
}

void runClusterText(const Options& o, const mli::ExperimentConfig& c, bool itersGiven) {
    if (o.corpus.empty()) throw mli::ConfigError("cluster-text needs --corpus");
    mli::TextPipelineConfig t;
    t.ngram = o.ngram;
    t.k = o.k;
    if (itersGiven) t.iterations = o.iters;
    t.seed = o.seed;
    t.workers = c.workers.front();
    const auto result = mli::runTextPipeline(o.corpus, t);
    emit(o.out, [&](std::ostream& os) { mli::writeAssignments(os, result.assignments); });
    mli::writeClusterSummary(std::cerr, result);
}

void runScalingReport(const mli::ExperimentConfig& c) {
    const auto report = mli::runScaling(c);
    emit(c.out, [&](std::ostream& os) { mli::writeReport(os, report); });
    for (const auto& r : report.rows) {
        std::cerr << r.mode << " workers=" << r.workers << " scale=" << r.scale << " seconds=" << r.seconds
                  << " metric=" << r.metric;
        if (const auto s = report.speedup(r.workers)) std::cerr << " speedup=" << *s;
        std::cerr << '\n';
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Data-parallel ML toolkit driver"};
    app.set_config("--config", "", "key=value file; command-line flags override it");
    app.require_subcommand(1);

    Options o;
    app.add_option("--workers", o.workers, "Worker counts, comma separated")->delimiter(',');
    app.add_option("--n", o.n, "Logistic points (per worker under weak scaling)");
    app.add_option("--d", o.d, "Logistic feature count");
    app.add_option("--tile", o.tile, "Ratings tiling factor");
    app.add_option("--rank", o.rank, "ALS rank");
    app.add_option("--lambda", o.lambda, "ALS regularization");
    app.add_option("--iters", o.iters, "ALS or k-means iterations");
    app.add_option("--eta", o.eta, "SGD learning rate");
    app.add_option("--rounds", o.rounds, "SGD averaging rounds");
    app.add_option("--local-passes", o.localPasses, "SGD passes per round");
    app.add_option("--seed", o.seed, "Random seed");
    app.add_option("--out", o.out, "Output path (model, CSV)");
    app.add_option("--mode", o.mode, "Scaling mode: logistic or als");
    app.add_option("--scaling", o.scaling, "weak, strong or none");
    app.add_option("--ratings", o.ratings, "Ratings triplet file (user item rating)");
    app.add_option("--corpus", o.corpus, "Corpus file, one document per line");
    app.add_option("--ngram", o.ngram, "N-gram length");
    app.add_option("--k", o.k, "Cluster count");

    auto* logistic = app.add_subcommand("logistic", "Train logistic regression on generated data");
    auto* als = app.add_subcommand("als", "Train ALS on tiled ratings");
    auto* cluster = app.add_subcommand("cluster-text", "Cluster a text corpus with tf-idf and k-means");
    auto* scaling = app.add_subcommand("scaling", "Run a weak or strong scaling experiment");
    for (auto* sub : {logistic, als, cluster, scaling}) sub->fallthrough();

    CLI11_PARSE(app, argc, argv);

    try {
        if (logistic->parsed()) o.mode = "logistic";
        if (als->parsed()) o.mode = "als";
        if (cluster->parsed()) o.mode = "cluster-text";
        const auto config = toConfig(o, app);
        if (logistic->parsed()) runLogistic(config);
        if (als->parsed()) runAls(config);
        if (cluster->parsed()) runClusterText(o, config, app.count("--iters") > 0);
        if (scaling->parsed()) runScalingReport(config);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
