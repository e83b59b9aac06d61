#pragma once

/*
 * Text featurization: word n-grams and tf-idf.
 *
 * Tokens are maximal runs of ASCII letters and digits, lowercased. An n-gram
 * is n consecutive tokens joined by single spaces. tf-idf weights are
 * rawCount * ln(N / df) with no smoothing; vocabulary columns are sorted.
 */

#include <cctype>
#include <cmath>
#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "mli/engine.hpp"
#include "mli/error.hpp"
#include "mli/local_matrix.hpp"
#include "mli/ml_table.hpp"

namespace mli {

inline std::vector<std::string> tokenize(std::string_view text) {
    std::vector<std::string> tokens;
    std::string cur;
    for (char ch : text) {
        const auto u = static_cast<unsigned char>(ch);
        if (u < 0x80 && std::isalnum(u)) {
            cur.push_back(static_cast<char>(std::tolower(u)));
        } else if (!cur.empty()) {
            tokens.push_back(std::move(cur));
            cur.clear();
        }
    }
    if (!cur.empty()) tokens.push_back(std::move(cur));
    return tokens;
}

/// Word n-grams in text order; fewer than n tokens gives none.
inline std::vector<std::string> nGrams(std::string_view text, std::size_t n) {
    if (n == 0) throw ConfigError("nGrams: n must be at least 1");
    const auto tokens = tokenize(text);
    std::vector<std::string> grams;
    if (tokens.size() < n) return grams;
    grams.reserve(tokens.size() - n + 1);
    for (std::size_t i = 0; i + n <= tokens.size(); ++i) {
        std::string g = tokens[i];
        for (std::size_t j = 1; j < n; ++j) {
            g.push_back(' ');
            g += tokens[i + j];
        }
        grams.push_back(std::move(g));
    }
    return grams;
}

/// Long-format term table (doc: Int, term: String), one row per n-gram
/// occurrence, from a table whose column `textCol` holds documents. The
/// document index is the logical row index.
inline MLTable nGramTable(const MLTable& corpus, std::size_t n, std::size_t textCol = 0, WorkerPool* pool = nullptr) {
    if (textCol >= corpus.numCols() || corpus.schema()[textCol].kind != ValueKind::String) {
        throw SchemaError("nGramTable: text column must be a String column");
    }
    std::vector<std::size_t> offsets{0};
    for (std::size_t p = 0; p < corpus.partitionCount(); ++p) offsets.push_back(offsets.back() + corpus.partition(p).size());
    auto parts = mapPartitions(
        corpus,
        [&](std::size_t p, const std::vector<MLRow>& rows) {
            std::vector<MLRow> out;
            for (std::size_t i = 0; i < rows.size(); ++i) {
                if (rows[i][textCol].isEmpty()) continue;
                const auto doc = static_cast<std::int64_t>(offsets[p] + i);
                for (auto& g : nGrams(rows[i][textCol].asString(), n)) out.push_back({MLValue(doc), MLValue(std::move(g))});
            }
            return out;
        },
        pool);
    return MLTable(Schema({{"doc", ValueKind::Int}, {"term", ValueKind::String}}), std::move(parts));
}

struct TfIdfResult {
    MLNumericTable features;               ///< numDocs x vocabulary.size()
    std::vector<std::string> vocabulary;   ///< sorted distinct terms
};

namespace detail {

using TermCounts = std::vector<std::map<std::string, std::size_t>>;

inline TfIdfResult tfIdfFromCounts(const TermCounts& counts, std::size_t partitionCount) {
    const std::size_t numDocs = counts.size();
    std::map<std::string, std::size_t> df;
    for (const auto& doc : counts) {
        for (const auto& [term, c] : doc) ++df[term];
    }
    TfIdfResult out;
    std::map<std::string, std::size_t> column;
    for (const auto& [term, _] : df) {
        column[term] = out.vocabulary.size();
        out.vocabulary.push_back(term);
    }
    const std::size_t width = std::max<std::size_t>(out.vocabulary.size(), 1);
    LocalMatrix weights(numDocs, width);
    for (std::size_t d = 0; d < numDocs; ++d) {
        for (const auto& [term, c] : counts[d]) {
            const double idf = std::log(static_cast<double>(numDocs) / static_cast<double>(df.at(term)));
            weights(d, column.at(term)) = static_cast<double>(c) * idf;
        }
    }
    std::vector<Column> cols;
    for (const auto& t : out.vocabulary) cols.push_back({t, ValueKind::Scalar});
    if (cols.empty()) cols.push_back({std::nullopt, ValueKind::Scalar});
    auto table = MLNumericTable::fromMatrix(weights, partitionCount);
    out.features = MLNumericTable(table.partitions(), Schema(std::move(cols)));
    return out;
}

}  // namespace detail

/// tf-idf over a long-format (doc: Int, term: String) table covering
/// documents [0, numDocs). Documents without terms get all-zero rows.
inline TfIdfResult tfIdf(const MLTable& terms, std::size_t numDocs, std::size_t partitionCount = 1) {
    if (numDocs == 0) throw EmptyTableError("tfIdf: corpus has no documents");
    if (terms.numCols() != 2 || terms.schema()[0].kind != ValueKind::Int ||
        terms.schema()[1].kind != ValueKind::String) {
        throw SchemaError("tfIdf: expected (doc: Int, term: String) rows");
    }
    detail::TermCounts counts(numDocs);
    for (std::size_t p = 0; p < terms.partitionCount(); ++p) {
        for (const auto& row : terms.partition(p)) {
            if (row[0].isEmpty() || row[1].isEmpty()) continue;
            const auto doc = row[0].asInt();
            if (doc < 0 || static_cast<std::size_t>(doc) >= numDocs) {
                throw IndexError("tfIdf: document index " + std::to_string(doc) + " out of range");
            }
            ++counts[static_cast<std::size_t>(doc)][row[1].asString()];
        }
    }
    return detail::tfIdfFromCounts(counts, partitionCount);
}

/// tf-idf over token sequences, one per document.
inline TfIdfResult tfIdf(const std::vector<std::vector<std::string>>& docs, std::size_t partitionCount = 1) {
    if (docs.empty()) throw EmptyTableError("tfIdf: corpus has no documents");
    detail::TermCounts counts(docs.size());
    for (std::size_t d = 0; d < docs.size(); ++d) {
        for (const auto& t : docs[d]) ++counts[d][t];
    }
    return detail::tfIdfFromCounts(counts, partitionCount);
}

}  // namespace mli
