#pragma once

// Text loaders and writers: delimited tables, one-document-per-line corpora
// and `row col value` sparse triplets.

#include <charconv>
#include <cstdint>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "mli/error.hpp"
#include "mli/local_matrix.hpp"
#include "mli/ml_table.hpp"

namespace mli {

struct CsvOptions {
    char delimiter = ',';
    bool header = false;
};

namespace detail {

struct CsvField {
    std::string text;
    bool quoted = false;
};

inline std::vector<CsvField> splitCsvLine(std::string_view line, char delim) {
    std::vector<CsvField> fields;
    CsvField cur;
    bool inQuotes = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char ch = line[i];
        if (inQuotes) {
            if (ch == '"') {
                if (i + 1 < line.size() && line[i + 1] == '"') {
                    cur.text.push_back('"');
                    ++i;
                } else {
                    inQuotes = false;
                }
            } else {
                cur.text.push_back(ch);
            }
        } else if (ch == '"') {
            inQuotes = true;
            cur.quoted = true;
        } else if (ch == delim) {
            fields.push_back(std::move(cur));
            cur = {};
        } else {
            cur.text.push_back(ch);
        }
    }
    fields.push_back(std::move(cur));
    return fields;
}

inline bool parseInt(std::string_view s, std::int64_t& out) {
    if (s.empty()) return false;
    const auto* begin = s.data() + (s.front() == '+' ? 1 : 0);
    const auto [ptr, ec] = std::from_chars(begin, s.data() + s.size(), out);
    return ec == std::errc{} && ptr == s.data() + s.size();
}

inline bool parseScalar(std::string_view s, double& out) {
    if (s.empty()) return false;
    const std::string copy(s);
    char* end = nullptr;
    out = std::strtod(copy.c_str(), &end);
    return end == copy.c_str() + copy.size();
}

inline std::string quoteField(const std::string& s, char delim) {
    const bool needs = s.empty() || s.find_first_of(std::string{delim, '"', '\n', '\r'}) != std::string::npos;
    if (!needs) return s;
    std::string out = "\"";
    for (char ch : s) {
        if (ch == '"') out.push_back('"');
        out.push_back(ch);
    }
    out.push_back('"');
    return out;
}

}  // namespace detail

/// Parses delimited text. An empty field, quoted or not, is Empty. Column
/// kinds are inferred over non-Empty cells: all `true`/`false` gives Bool,
/// else Int, else Scalar, else String.
inline MLTable parseCsv(std::istream& in, const CsvOptions& options = {},
                        std::size_t partitionCount = defaultWorkerCount()) {
    std::vector<std::vector<detail::CsvField>> records;
    std::vector<std::optional<std::string>> names;
    std::string line;
    bool first = true;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        auto fields = detail::splitCsvLine(line, options.delimiter);
        if (first && options.header) {
            for (auto& f : fields) names.emplace_back(std::move(f.text));
            first = false;
            continue;
        }
        first = false;
        records.push_back(std::move(fields));
    }
    std::size_t width = names.size();
    if (width == 0 && !records.empty()) width = records.front().size();
    if (width == 0) throw SchemaError("csv: no columns");
    names.resize(width);
    for (std::size_t r = 0; r < records.size(); ++r) {
        if (records[r].size() != width) {
            throw SchemaError("csv: record " + std::to_string(r) + " has " + std::to_string(records[r].size()) +
                              " fields, expected " + std::to_string(width));
        }
    }

    std::vector<ValueKind> kinds(width, ValueKind::String);
    for (std::size_t c = 0; c < width; ++c) {
        bool any = false;
        bool allBool = true;
        bool allInt = true;
        bool allScalar = true;
        for (const auto& rec : records) {
            const auto& f = rec[c];
            if (f.text.empty()) continue;
            any = true;
            std::int64_t i;
            double x;
            allBool = allBool && !f.quoted && (f.text == "true" || f.text == "false");
            allInt = allInt && !f.quoted && detail::parseInt(f.text, i);
            allScalar = allScalar && !f.quoted && detail::parseScalar(f.text, x);
        }
        if (!any) continue;
        if (allBool) kinds[c] = ValueKind::Bool;
        else if (allInt) kinds[c] = ValueKind::Int;
        else if (allScalar) kinds[c] = ValueKind::Scalar;
    }

    std::vector<Column> columns;
    for (std::size_t c = 0; c < width; ++c) columns.push_back({names[c], kinds[c]});
    std::vector<MLRow> rows;
    rows.reserve(records.size());
    for (const auto& rec : records) {
        MLRow row;
        row.reserve(width);
        for (std::size_t c = 0; c < width; ++c) {
            const auto& f = rec[c];
            if (f.text.empty()) {
                row.emplace_back();
                continue;
            }
            switch (kinds[c]) {
                case ValueKind::Bool: row.emplace_back(f.text == "true"); break;
                case ValueKind::Int: {
                    std::int64_t i = 0;
                    detail::parseInt(f.text, i);
                    row.emplace_back(i);
                    break;
                }
                case ValueKind::Scalar: {
                    double x = 0.0;
                    detail::parseScalar(f.text, x);
                    row.emplace_back(x);
                    break;
                }
                default: row.emplace_back(f.text); break;
            }
        }
        rows.push_back(std::move(row));
    }
    return MLTable::fromRows(Schema(std::move(columns)), std::move(rows), partitionCount);
}

inline MLTable readCsv(const std::string& path, const CsvOptions& options = {},
                       std::size_t partitionCount = defaultWorkerCount()) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open '" + path + "' for reading");
    return parseCsv(in, options, partitionCount);
}

/// Writes rows in logical order. Header names fall back to c<index>.
inline void writeCsv(std::ostream& out, const MLTable& table, const CsvOptions& options = {}) {
    const char d = options.delimiter;
    if (options.header) {
        for (std::size_t c = 0; c < table.numCols(); ++c) {
            if (c) out << d;
            const auto& name = table.schema()[c].name;
            out << detail::quoteField(name ? *name : "c" + std::to_string(c), d);
        }
        out << '\n';
    }
    for (std::size_t p = 0; p < table.partitionCount(); ++p) {
        for (const auto& row : table.partition(p)) {
            for (std::size_t c = 0; c < row.size(); ++c) {
                if (c) out << d;
                if (row[c].isEmpty()) {
                    // Blank lines are skipped on read, so a lone Empty cell is quoted.
                    if (row.size() == 1) out << "\"\"";
                    continue;
                }
                if (row[c].kind() == ValueKind::String) {
                    out << detail::quoteField(row[c].asString(), d);
                } else {
                    out << row[c].toString();
                }
            }
            out << '\n';
        }
    }
}

inline void writeCsv(const std::string& path, const MLTable& table, const CsvOptions& options = {}) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot open '" + path + "' for writing");
    writeCsv(out, table, options);
    if (!out) throw IoError("write to '" + path + "' failed");
}

/// One document per line; trailing carriage returns are stripped.
inline std::vector<std::string> readCorpus(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open corpus '" + path + "'");
    std::vector<std::string> docs;
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        docs.push_back(std::move(line));
    }
    return docs;
}

/// Corpus as a one-column String table.
inline MLTable corpusTable(const std::vector<std::string>& docs, std::size_t partitionCount = defaultWorkerCount()) {
    std::vector<MLRow> rows;
    rows.reserve(docs.size());
    for (const auto& d : docs) rows.push_back({MLValue(d)});
    return MLTable::fromRows(Schema({{"text", ValueKind::String}}), std::move(rows), partitionCount);
}

struct TripletFile {
    std::size_t rows = 0;  ///< 1 + largest row index
    std::size_t cols = 0;  ///< 1 + largest column index
    std::vector<Triplet> entries;
};

/// Reads whitespace-separated `row col value` lines (0-based). Blank lines
/// and lines starting with '#' are skipped.
inline TripletFile parseTriplets(std::istream& in, const std::string& source = "<stream>") {
    TripletFile out;
    std::string line;
    std::size_t lineNo = 0;
    while (std::getline(in, line)) {
        ++lineNo;
        const auto start = line.find_first_not_of(" \t\r");
        if (start == std::string::npos || line[start] == '#') continue;
        std::istringstream fields(line);
        long long r = -1;
        long long c = -1;
        double v = 0.0;
        if (!(fields >> r >> c >> v) || r < 0 || c < 0) {
            throw IoError(source + ":" + std::to_string(lineNo) + ": expected `row col value`");
        }
        out.entries.push_back({static_cast<std::size_t>(r), static_cast<std::size_t>(c), v});
        out.rows = std::max(out.rows, static_cast<std::size_t>(r) + 1);
        out.cols = std::max(out.cols, static_cast<std::size_t>(c) + 1);
    }
    return out;
}

inline TripletFile readTriplets(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open '" + path + "' for reading");
    return parseTriplets(in, path);
}

inline void writeTriplets(std::ostream& out, const LocalMatrix& m) {
    const LocalMatrix s = toCsr(m);
    char buf[64];
    for (std::size_t i = 0; i < s.rows(); ++i) {
        const auto idx = s.csrRowIndices(i);
        const auto val = s.csrRowValues(i);
        for (std::size_t k = 0; k < idx.size(); ++k) {
            std::snprintf(buf, sizeof buf, "%.17g", val[k]);
            out << i << ' ' << idx[k] << ' ' << buf << '\n';
        }
    }
}

}  // namespace mli
