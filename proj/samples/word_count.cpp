// Counts terms in a corpus with map and reduceByKey, then prints the most
// frequent ones.

#include <algorithm>
#include <iostream>

#include "mli/io.hpp"
#include "mli/learn/text.hpp"

int main(int argc, char** argv) {
    if (argc < 2) {
        std::cerr << "usage: word_count <corpus> [top]\n";
        return 2;
    }
    const std::size_t top = argc > 2 ? std::stoul(argv[2]) : 10;
    mli::WorkerPool pool(4);
    const auto corpus = mli::corpusTable(mli::readCorpus(argv[1]), 4);
    const auto terms = mli::nGramTable(corpus, 1, 0, &pool);
    const auto ones = terms.map([](const mli::MLRow& r) { return mli::MLRow{r[1], mli::MLValue(std::int64_t{1})}; }, &pool);
    const auto counts = ones.reduceByKey(
        0, [](const mli::MLRow& a, const mli::MLRow& b) { return mli::MLRow{mli::MLValue(a[0].asInt() + b[0].asInt())}; },
        &pool);
    auto rows = counts.rows();
    std::stable_sort(rows.begin(), rows.end(), [](const auto& a, const auto& b) { return a[1].asInt() > b[1].asInt(); });
    rows.resize(std::min(rows.size(), top));
    for (const auto& r : rows) std::cout << r[0].asString() << ' ' << r[1].asInt() << '\n';
    return 0;
}
