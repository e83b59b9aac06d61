#pragma once

/*
 * MLTable: an immutable, schema-carrying collection of rows split into
 * contiguous partitions. Logical row order is the concatenation of the
 * partitions. Every operation returns a new table; operations that take a
 * WorkerPool evaluate partitions concurrently and assemble results in
 * partition order.
 *
 * MLNumericTable holds all-Scalar, Empty-free data. Each partition is stored
 * as a dense LocalMatrix so batch functions receive it without conversion.
 */

#include <algorithm>
#include <cstddef>
#include <exception>
#include <map>
#include <optional>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "mli/engine.hpp"
#include "mli/error.hpp"
#include "mli/local_matrix.hpp"
#include "mli/ml_value.hpp"

namespace mli {

/// Offsets of P contiguous, near-equal chunks of n rows (size P + 1).
inline std::vector<std::size_t> partitionBounds(std::size_t n, std::size_t partitionCount) {
    if (partitionCount == 0) throw ConfigError("partition count must be at least 1");
    std::vector<std::size_t> bounds(partitionCount + 1);
    for (std::size_t p = 0; p <= partitionCount; ++p) bounds[p] = p * n / partitionCount;
    return bounds;
}

class MLTable;

class MLNumericTable {
public:
    MLNumericTable() = default;

    /// Builds from dense partition blocks that share a column count.
    MLNumericTable(std::vector<LocalMatrix> partitions, std::size_t numCols)
        : MLNumericTable(std::move(partitions), Schema::ofKinds(std::vector<ValueKind>(numCols, ValueKind::Scalar))) {}

    MLNumericTable(std::vector<LocalMatrix> partitions, Schema schema)
        : schema_(std::move(schema)), partitions_(std::move(partitions)) {
        if (partitions_.empty()) throw ConfigError("a table needs at least one partition");
        for (const auto& c : schema_.columns()) {
            if (c.kind != ValueKind::Scalar) throw SchemaError("numeric tables hold Scalar columns only");
        }
        offsets_.push_back(0);
        for (auto& m : partitions_) {
            if (m.isSparse()) m = toDense(m);
            if (m.cols() != schema_.size()) {
                throw SchemaError("partition has " + std::to_string(m.cols()) + " columns, expected " +
                                  std::to_string(schema_.size()));
            }
            offsets_.push_back(offsets_.back() + m.rows());
        }
    }

    /// Splits a matrix into contiguous row partitions.
    static MLNumericTable fromMatrix(const LocalMatrix& m, std::size_t partitionCount = defaultWorkerCount()) {
        const LocalMatrix dense = toDense(m);
        const auto bounds = partitionBounds(m.rows(), partitionCount);
        std::vector<LocalMatrix> parts;
        parts.reserve(partitionCount);
        for (std::size_t p = 0; p < partitionCount; ++p) {
            const auto begin = dense.data().begin() + static_cast<std::ptrdiff_t>(bounds[p] * m.cols());
            const auto end = dense.data().begin() + static_cast<std::ptrdiff_t>(bounds[p + 1] * m.cols());
            parts.push_back(LocalMatrix::dense(bounds[p + 1] - bounds[p], m.cols(), std::vector<double>(begin, end)));
        }
        return MLNumericTable(std::move(parts), m.cols());
    }

    static MLNumericTable fromRows(const std::vector<std::vector<double>>& rows, std::size_t numCols,
                                   std::size_t partitionCount = defaultWorkerCount()) {
        std::vector<double> values;
        values.reserve(rows.size() * numCols);
        for (const auto& r : rows) {
            if (r.size() != numCols) throw SchemaError("row length differs from column count");
            values.insert(values.end(), r.begin(), r.end());
        }
        return fromMatrix(LocalMatrix::dense(rows.size(), numCols, std::move(values)), partitionCount);
    }

    const Schema& schema() const noexcept { return schema_; }
    std::size_t numRows() const noexcept { return offsets_.empty() ? 0 : offsets_.back(); }
    std::size_t numCols() const noexcept { return schema_.size(); }
    std::size_t partitionCount() const noexcept { return partitions_.size(); }
    const LocalMatrix& partition(std::size_t p) const { return partitions_.at(p); }
    const std::vector<LocalMatrix>& partitions() const noexcept { return partitions_; }
    /// Logical index of the first row of partition p.
    std::size_t partitionOffset(std::size_t p) const { return offsets_.at(p); }

    /// Feature vector of logical row i.
    std::span<const double> row(std::size_t i) const {
        if (i >= numRows()) throw IndexError("row " + std::to_string(i) + " out of range");
        const auto it = std::upper_bound(offsets_.begin(), offsets_.end(), i);
        const auto p = static_cast<std::size_t>(it - offsets_.begin()) - 1;
        return partitions_[p].row(i - offsets_[p]);
    }

    /// All rows stacked into one dense matrix.
    LocalMatrix toMatrix() const {
        std::vector<double> values;
        values.reserve(numRows() * numCols());
        for (const auto& m : partitions_) values.insert(values.end(), m.data().begin(), m.data().end());
        return LocalMatrix::dense(numRows(), numCols(), std::move(values));
    }

    MLNumericTable repartition(std::size_t partitionCount) const {
        MLNumericTable out = fromMatrix(toMatrix(), partitionCount);
        out.schema_ = schema_;
        return out;
    }

    /// Applies f to each partition matrix; outputs are stacked in partition order.
    template <typename Fn>
    MLNumericTable matrixBatchMap(Fn&& f, WorkerPool* pool = nullptr) const {
        auto outputs = runPartitions(pool, partitions_.size(), [&](std::size_t p) -> LocalMatrix {
            return toDense(f(partitions_[p]));
        });
        const std::size_t cols = outputs.front().cols();
        for (std::size_t p = 1; p < outputs.size(); ++p) {
            if (outputs[p].cols() != cols) {
                throw SchemaError("matrixBatchMap: partition " + std::to_string(p) + " produced " +
                                  std::to_string(outputs[p].cols()) + " columns, partition 0 produced " +
                                  std::to_string(cols));
            }
        }
        if (cols == numCols()) return MLNumericTable(std::move(outputs), schema_);
        return MLNumericTable(std::move(outputs), cols);
    }

    inline MLTable toTable() const;

    friend bool operator==(const MLNumericTable& a, const MLNumericTable& b) {
        return a.schema_ == b.schema_ && a.offsets_ == b.offsets_ && a.partitions_ == b.partitions_;
    }

private:
    Schema schema_;
    std::vector<LocalMatrix> partitions_;
    std::vector<std::size_t> offsets_;
};

namespace detail {

// Runs a user row function, converting foreign exceptions into
// UserFunctionError tagged with the logical row index.
template <typename Fn>
decltype(auto) callUser(Fn& f, std::size_t row, const MLRow& value) {
    try {
        return f(value);
    } catch (const UserFunctionError&) {
        throw;
    } catch (const std::exception& e) {
        throw UserFunctionError(row, e.what());
    } catch (...) {
        throw UserFunctionError(row, "unknown exception");
    }
}

struct RowHash {
    std::size_t operator()(const MLRow& r) const noexcept {
        std::size_t h = r.size();
        for (const auto& v : r) h ^= v.hash() + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
        return h;
    }
};

// Infers an output schema from produced rows: the first row fixes arity and
// kinds; columns that start Empty take the kind of their first non-Empty
// value. Input names are kept when the result lines up with the input schema.
inline Schema inferSchema(const Schema& input, const std::vector<std::vector<MLRow>>& parts) {
    std::optional<std::vector<ValueKind>> kinds;
    std::size_t index = 0;
    for (const auto& part : parts) {
        for (const auto& row : part) {
            if (!kinds) {
                if (row.empty()) throw SchemaError("user function produced a row with no columns");
                kinds.emplace();
                for (const auto& v : row) kinds->push_back(v.kind());
            } else {
                if (row.size() != kinds->size()) {
                    throw SchemaError("output row " + std::to_string(index) + " has " + std::to_string(row.size()) +
                                      " columns, expected " + std::to_string(kinds->size()));
                }
                for (std::size_t c = 0; c < row.size(); ++c) {
                    if (row[c].isEmpty()) continue;
                    if ((*kinds)[c] == ValueKind::Empty) {
                        (*kinds)[c] = row[c].kind();
                    } else if ((*kinds)[c] != row[c].kind()) {
                        throw SchemaError("output row " + std::to_string(index) + " column " + std::to_string(c) +
                                          " is " + kindName(row[c].kind()) + ", expected " + kindName((*kinds)[c]));
                    }
                }
            }
            ++index;
        }
    }
    if (!kinds) return input;
    if (kinds->size() == input.size()) {
        bool lined = true;
        for (std::size_t c = 0; c < kinds->size(); ++c) {
            if ((*kinds)[c] != ValueKind::Empty && (*kinds)[c] != input[c].kind) lined = false;
        }
        if (lined) return input;
    }
    return Schema::ofKinds(*kinds);
}

}  // namespace detail

class MLTable {
public:
    MLTable() = default;

    /// Validates every row against the schema.
    MLTable(Schema schema, std::vector<std::vector<MLRow>> partitions)
        : schema_(std::move(schema)), partitions_(std::move(partitions)) {
        if (!schema_.isValid()) throw SchemaError("table schema has no columns");
        if (partitions_.empty()) throw ConfigError("a table needs at least one partition");
        std::size_t index = 0;
        for (const auto& part : partitions_) {
            for (const auto& row : part) {
                if (!schema_.conforms(row)) {
                    throw SchemaError("row " + std::to_string(index) + " does not conform to the schema");
                }
                ++index;
            }
        }
    }

    /// Splits rows into contiguous, near-equal partitions.
    static MLTable fromRows(Schema schema, std::vector<MLRow> rows,
                            std::size_t partitionCount = defaultWorkerCount()) {
        const auto bounds = partitionBounds(rows.size(), partitionCount);
        std::vector<std::vector<MLRow>> parts(partitionCount);
        for (std::size_t p = 0; p < partitionCount; ++p) {
            parts[p].assign(std::make_move_iterator(rows.begin() + static_cast<std::ptrdiff_t>(bounds[p])),
                            std::make_move_iterator(rows.begin() + static_cast<std::ptrdiff_t>(bounds[p + 1])));
        }
        return MLTable(std::move(schema), std::move(parts));
    }

    static MLTable empty(Schema schema, std::size_t partitionCount = 1) {
        return MLTable(std::move(schema), std::vector<std::vector<MLRow>>(partitionCount));
    }

    const Schema& schema() const noexcept { return schema_; }
    std::size_t numCols() const noexcept { return schema_.size(); }
    std::size_t numRows() const noexcept {
        std::size_t n = 0;
        for (const auto& p : partitions_) n += p.size();
        return n;
    }
    std::size_t partitionCount() const noexcept { return partitions_.size(); }
    const std::vector<MLRow>& partition(std::size_t p) const { return partitions_.at(p); }

    /// Rows in logical order.
    std::vector<MLRow> rows() const {
        std::vector<MLRow> out;
        out.reserve(numRows());
        for (const auto& p : partitions_) out.insert(out.end(), p.begin(), p.end());
        return out;
    }

    MLTable repartition(std::size_t partitionCount) const { return fromRows(schema_, rows(), partitionCount); }

    /// Columns `cols` in the given order.
    MLTable project(const std::vector<std::size_t>& cols) const {
        std::vector<Column> columns;
        for (auto c : cols) {
            if (c >= numCols()) {
                throw IndexError("project: column " + std::to_string(c) + " out of range for " +
                                 std::to_string(numCols()) + " columns");
            }
            columns.push_back(schema_[c]);
        }
        // Repeated columns would duplicate names.
        for (std::size_t i = 0; i < columns.size(); ++i) {
            for (std::size_t j = 0; j < i; ++j) {
                if (cols[i] == cols[j]) columns[i].name.reset();
            }
        }
        std::vector<std::vector<MLRow>> parts(partitions_.size());
        for (std::size_t p = 0; p < partitions_.size(); ++p) {
            parts[p].reserve(partitions_[p].size());
            for (const auto& row : partitions_[p]) {
                MLRow out;
                out.reserve(cols.size());
                for (auto c : cols) out.push_back(row[c]);
                parts[p].push_back(std::move(out));
            }
        }
        return MLTable(Schema(std::move(columns)), std::move(parts));
    }

    /// This table's rows followed by other's; partitions are concatenated.
    MLTable unionWith(const MLTable& other) const {
        if (!schema_.compatibleWith(other.schema_)) throw SchemaError("union: schemas differ");
        std::vector<Column> columns = schema_.columns();
        for (std::size_t c = 0; c < columns.size(); ++c) {
            if (!columns[c].name) columns[c].name = other.schema_[c].name;
        }
        std::vector<std::vector<MLRow>> parts = partitions_;
        parts.insert(parts.end(), other.partitions_.begin(), other.partitions_.end());
        MLTable out;
        out.schema_ = Schema(std::move(columns));
        out.partitions_ = std::move(parts);
        return out;
    }

    /// Rows where pred holds, in order.
    template <typename Pred>
    MLTable filter(Pred&& pred, WorkerPool* pool = nullptr) const {
        auto parts = runPartitions(pool, partitions_.size(), [&](std::size_t p) {
            std::vector<MLRow> kept;
            std::size_t index = offsetOf(p);
            for (const auto& row : partitions_[p]) {
                if (detail::callUser(pred, index++, row)) kept.push_back(row);
            }
            return kept;
        });
        MLTable out;
        out.schema_ = schema_;
        out.partitions_ = std::move(parts);
        return out;
    }

    /// f applied to every row. Partition boundaries are preserved.
    template <typename Fn>
    MLTable map(Fn&& f, WorkerPool* pool = nullptr) const {
        auto parts = runPartitions(pool, partitions_.size(), [&](std::size_t p) {
            std::vector<MLRow> produced;
            produced.reserve(partitions_[p].size());
            std::size_t index = offsetOf(p);
            for (const auto& row : partitions_[p]) produced.push_back(detail::callUser(f, index++, row));
            return produced;
        });
        Schema schema = detail::inferSchema(schema_, parts);
        return MLTable(std::move(schema), std::move(parts));
    }

    /// f produces zero or more rows per input row, concatenated in input order.
    template <typename Fn>
    MLTable flatMap(Fn&& f, WorkerPool* pool = nullptr) const {
        auto parts = runPartitions(pool, partitions_.size(), [&](std::size_t p) {
            std::vector<MLRow> produced;
            std::size_t index = offsetOf(p);
            for (const auto& row : partitions_[p]) {
                for (auto& r : detail::callUser(f, index++, row)) produced.push_back(std::move(r));
            }
            return produced;
        });
        Schema schema = detail::inferSchema(schema_, parts);
        return MLTable(std::move(schema), std::move(parts));
    }

    /// Inner equi-join on columns `keys` (same positions in both tables).
    /// Output columns are this table's, then other's non-key columns. Rows
    /// come out in this table's order, matches in other's order. Empty keys
    /// never match.
    MLTable join(const MLTable& other, const std::vector<std::size_t>& keys, WorkerPool* pool = nullptr) const {
        if (keys.empty()) throw SchemaError("join: at least one key column is required");
        std::vector<bool> isKey(other.numCols(), false);
        for (auto k : keys) {
            if (k >= numCols() || k >= other.numCols()) {
                throw IndexError("join: key column " + std::to_string(k) + " out of range");
            }
            if (schema_[k].kind != other.schema_[k].kind) {
                throw SchemaError("join: key column " + std::to_string(k) + " is " + kindName(schema_[k].kind) +
                                  " on the left and " + kindName(other.schema_[k].kind) + " on the right");
            }
            isKey[k] = true;
        }
        std::vector<Column> columns = schema_.columns();
        std::vector<std::size_t> carried;
        for (std::size_t c = 0; c < other.numCols(); ++c) {
            if (isKey[c]) continue;
            Column col = other.schema_[c];
            if (col.name && schema_.indexOf(*col.name)) col.name.reset();
            columns.push_back(std::move(col));
            carried.push_back(c);
        }

        std::unordered_map<MLRow, std::vector<const MLRow*>, detail::RowHash> index;
        for (const auto& part : other.partitions_) {
            for (const auto& row : part) {
                MLRow key;
                bool hasEmpty = false;
                for (auto k : keys) {
                    hasEmpty = hasEmpty || row[k].isEmpty();
                    key.push_back(row[k]);
                }
                if (!hasEmpty) index[std::move(key)].push_back(&row);
            }
        }

        auto parts = runPartitions(pool, partitions_.size(), [&](std::size_t p) {
            std::vector<MLRow> produced;
            MLRow key;
            for (const auto& row : partitions_[p]) {
                key.clear();
                for (auto k : keys) key.push_back(row[k]);
                const auto it = index.find(key);
                if (it == index.end()) continue;
                for (const MLRow* match : it->second) {
                    MLRow out = row;
                    for (auto c : carried) out.push_back((*match)[c]);
                    produced.push_back(std::move(out));
                }
            }
            return produced;
        });
        return MLTable(Schema(std::move(columns)), std::move(parts));
    }

    /// Folds all rows with an associative, commutative f: each partition is
    /// folded in order, then partition results are folded in partition order.
    template <typename Fn>
    MLRow reduce(Fn&& f, WorkerPool* pool = nullptr) const {
        if (numRows() == 0) throw EmptyTableError("reduce: table has no rows");
        requireNoEmpty("reduce");
        auto partial = runPartitions(pool, partitions_.size(), [&](std::size_t p) -> std::optional<MLRow> {
            const auto& part = partitions_[p];
            if (part.empty()) return std::nullopt;
            MLRow acc = part.front();
            for (std::size_t i = 1; i < part.size(); ++i) acc = f(acc, part[i]);
            return acc;
        });
        std::optional<MLRow> acc;
        for (auto& r : partial) {
            if (!r) continue;
            acc = acc ? f(*acc, *r) : std::move(*r);
        }
        if (!schema_.conforms(*acc)) throw SchemaError("reduce: result does not conform to the schema");
        return *acc;
    }

    /// Groups by keyCol and folds the non-key values of each group with f.
    /// Output rows are (key, reduced values...) sorted by key.
    template <typename Fn>
    MLTable reduceByKey(std::size_t keyCol, Fn&& f, WorkerPool* pool = nullptr) const {
        if (keyCol >= numCols()) {
            throw IndexError("reduceByKey: key column " + std::to_string(keyCol) + " out of range");
        }
        if (numRows() == 0) throw EmptyTableError("reduceByKey: table has no rows");
        requireNoEmpty("reduceByKey");
        using Groups = std::map<MLValue, MLRow, MLValueLess>;
        auto split = [keyCol](const MLRow& row) {
            MLRow values;
            values.reserve(row.size() - 1);
            for (std::size_t c = 0; c < row.size(); ++c) {
                if (c != keyCol) values.push_back(row[c]);
            }
            return values;
        };
        auto partial = runPartitions(pool, partitions_.size(), [&](std::size_t p) {
            Groups groups;
            for (const auto& row : partitions_[p]) {
                auto [it, fresh] = groups.try_emplace(row[keyCol]);
                if (fresh) {
                    it->second = split(row);
                } else {
                    it->second = f(it->second, split(row));
                }
            }
            return groups;
        });
        Groups merged;
        for (auto& groups : partial) {
            for (auto& [key, values] : groups) {
                auto [it, fresh] = merged.try_emplace(key);
                it->second = fresh ? std::move(values) : f(it->second, values);
            }
        }
        std::vector<Column> columns{schema_[keyCol]};
        for (std::size_t c = 0; c < numCols(); ++c) {
            if (c != keyCol) columns.push_back(schema_[c]);
        }
        std::vector<MLRow> rows;
        rows.reserve(merged.size());
        for (auto& [key, values] : merged) {
            MLRow row{key};
            row.insert(row.end(), std::make_move_iterator(values.begin()), std::make_move_iterator(values.end()));
            rows.push_back(std::move(row));
        }
        return fromRows(Schema(std::move(columns)), std::move(rows), partitions_.size());
    }

    /// Casts to a numeric table: Int widens to Scalar; Empty and non-numeric
    /// cells raise CastError at their coordinates.
    MLNumericTable toNumeric() const {
        std::vector<Column> columns;
        for (std::size_t c = 0; c < numCols(); ++c) {
            const auto kind = schema_[c].kind;
            if (kind != ValueKind::Scalar && kind != ValueKind::Int) {
                throw CastError(0, c, std::string("column kind ") + kindName(kind) + " is not numeric");
            }
            columns.push_back({schema_[c].name, ValueKind::Scalar});
        }
        std::vector<LocalMatrix> parts;
        std::size_t index = 0;
        for (const auto& part : partitions_) {
            LocalMatrix m(part.size(), numCols());
            for (std::size_t i = 0; i < part.size(); ++i, ++index) {
                for (std::size_t c = 0; c < numCols(); ++c) {
                    if (part[i][c].isEmpty()) throw CastError(index, c, "cell is Empty");
                    m(i, c) = part[i][c].toDouble();
                }
            }
            parts.push_back(std::move(m));
        }
        return MLNumericTable(std::move(parts), Schema(std::move(columns)));
    }

    /// Same rows in the same order; partitioning is ignored.
    bool sameContents(const MLTable& other) const { return schema_ == other.schema_ && rows() == other.rows(); }

    friend bool operator==(const MLTable& a, const MLTable& b) {
        return a.schema_ == b.schema_ && a.partitions_ == b.partitions_;
    }

private:
    std::size_t offsetOf(std::size_t p) const {
        std::size_t n = 0;
        for (std::size_t q = 0; q < p; ++q) n += partitions_[q].size();
        return n;
    }

    void requireNoEmpty(const char* op) const {
        std::size_t index = 0;
        for (const auto& part : partitions_) {
            for (const auto& row : part) {
                for (std::size_t c = 0; c < row.size(); ++c) {
                    if (row[c].isEmpty()) {
                        throw SchemaError(std::string(op) + ": Empty cell at row " + std::to_string(index) +
                                          ", column " + std::to_string(c));
                    }
                }
                ++index;
            }
        }
    }

    Schema schema_;
    std::vector<std::vector<MLRow>> partitions_;
};

inline MLTable MLNumericTable::toTable() const {
    std::vector<std::vector<MLRow>> parts;
    parts.reserve(partitions_.size());
    for (const auto& m : partitions_) {
        std::vector<MLRow> rows(m.rows());
        for (std::size_t i = 0; i < m.rows(); ++i) {
            rows[i].reserve(m.cols());
            for (double v : m.row(i)) rows[i].emplace_back(v);
        }
        parts.push_back(std::move(rows));
    }
    return MLTable(schema_, std::move(parts));
}

inline MLTable unionAll(const MLTable& a, const MLTable& b) { return a.unionWith(b); }

/// One fn(partitionIndex, rows) result per partition, in partition order.
template <typename Fn>
auto mapPartitions(const MLTable& table, Fn&& fn, WorkerPool* pool = nullptr) {
    return runPartitions(pool, table.partitionCount(),
                         [&](std::size_t p) { return fn(p, table.partition(p)); });
}

/// One fn(partitionIndex, matrix) result per partition, in partition order.
template <typename Fn>
auto mapPartitions(const MLNumericTable& table, Fn&& fn, WorkerPool* pool = nullptr) {
    return runPartitions(pool, table.partitionCount(),
                         [&](std::size_t p) { return fn(p, table.partition(p)); });
}

}  // namespace mli
