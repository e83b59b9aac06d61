#pragma once

/*
 * LocalMatrix: a matrix confined to one partition of a table.
 *
 * Two encodings share one value type. Dense storage is row-major; CSR storage
 * is kept in canonical form (strictly increasing column indices per row, no
 * explicit zeros) and is read-only through update().
 */

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <initializer_list>
#include <span>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "mli/error.hpp"

namespace mli {

/// Selects every index along one axis.
struct All {};
inline constexpr All all{};

/// A row or column selector: a single index, an index sequence, or all.
class Selector {
public:
    Selector(All) : sel_(All{}) {}
    Selector(std::size_t index) : sel_(index) {}
    Selector(int index) : sel_(static_cast<std::size_t>(index)) {
        if (index < 0) throw IndexError("negative index " + std::to_string(index));
    }
    Selector(std::vector<std::size_t> indices) : sel_(std::move(indices)) {}
    Selector(std::initializer_list<std::size_t> indices) : sel_(std::vector<std::size_t>(indices)) {}

    bool isSingle() const noexcept { return std::holds_alternative<std::size_t>(sel_); }

    /// Expands the selector against an axis of the given extent.
    std::vector<std::size_t> resolve(std::size_t extent) const {
        std::vector<std::size_t> out;
        if (std::holds_alternative<All>(sel_)) {
            out.resize(extent);
            for (std::size_t i = 0; i < extent; ++i) out[i] = i;
            return out;
        }
        if (const auto* one = std::get_if<std::size_t>(&sel_)) {
            out.push_back(*one);
        } else {
            out = std::get<std::vector<std::size_t>>(sel_);
        }
        for (auto i : out) {
            if (i >= extent) {
                throw IndexError("index " + std::to_string(i) + " out of range for extent " +
                                 std::to_string(extent));
            }
        }
        return out;
    }

private:
    std::variant<All, std::size_t, std::vector<std::size_t>> sel_;
};

/// A (row, col, value) entry used to assemble sparse matrices.
struct Triplet {
    std::size_t row;
    std::size_t col;
    double value;
};

class LocalMatrix {
public:
    enum class Storage { Dense, Csr };

    LocalMatrix() = default;

    /// Dense rows x cols matrix filled with `fill`.
    LocalMatrix(std::size_t rows, std::size_t cols, double fill = 0.0)
        : rows_(rows), cols_(cols), dense_(rows * cols, fill) {}

    static LocalMatrix dense(std::size_t rows, std::size_t cols, std::vector<double> values) {
        if (values.size() != rows * cols) {
            throw DimError("dense buffer holds " + std::to_string(values.size()) +
                           " values, expected " + std::to_string(rows * cols));
        }
        LocalMatrix m;
        m.rows_ = rows;
        m.cols_ = cols;
        m.dense_ = std::move(values);
        return m;
    }

    /// Dense matrix from nested row lists; every row must have the same length.
    static LocalMatrix fromRows(std::initializer_list<std::initializer_list<double>> rows) {
        const std::size_t r = rows.size();
        const std::size_t c = r == 0 ? 0 : rows.begin()->size();
        std::vector<double> values;
        values.reserve(r * c);
        for (const auto& row : rows) {
            if (row.size() != c) throw DimError("ragged row list");
            values.insert(values.end(), row.begin(), row.end());
        }
        return dense(r, c, std::move(values));
    }

    static LocalMatrix columnVector(std::span<const double> v) {
        return dense(v.size(), 1, std::vector<double>(v.begin(), v.end()));
    }

    static LocalMatrix rowVector(std::span<const double> v) {
        return dense(1, v.size(), std::vector<double>(v.begin(), v.end()));
    }

    static LocalMatrix identity(std::size_t n) {
        LocalMatrix m(n, n);
        for (std::size_t i = 0; i < n; ++i) m.dense_[i * n + i] = 1.0;
        return m;
    }

    /// CSR matrix from raw arrays. Throws DimError unless the arrays are canonical.
    static LocalMatrix csr(std::size_t rows, std::size_t cols, std::vector<std::size_t> rowPointers,
                           std::vector<std::size_t> columnIndices, std::vector<double> values) {
        LocalMatrix m;
        m.storage_ = Storage::Csr;
        m.rows_ = rows;
        m.cols_ = cols;
        m.rowPtr_ = std::move(rowPointers);
        m.colIdx_ = std::move(columnIndices);
        m.values_ = std::move(values);
        if (!m.isCanonical()) throw DimError("CSR arrays are not in canonical form");
        return m;
    }

    /// CSR matrix from unordered triplets. Duplicates are summed and zeros dropped.
    static LocalMatrix fromTriplets(std::size_t rows, std::size_t cols, std::vector<Triplet> entries) {
        for (const auto& t : entries) {
            if (t.row >= rows || t.col >= cols) {
                throw IndexError("triplet (" + std::to_string(t.row) + ", " + std::to_string(t.col) +
                                 ") outside " + std::to_string(rows) + "x" + std::to_string(cols));
            }
        }
        std::stable_sort(entries.begin(), entries.end(), [](const Triplet& a, const Triplet& b) {
            return a.row != b.row ? a.row < b.row : a.col < b.col;
        });
        LocalMatrix m;
        m.storage_ = Storage::Csr;
        m.rows_ = rows;
        m.cols_ = cols;
        m.rowPtr_.assign(rows + 1, 0);
        for (std::size_t i = 0; i < entries.size();) {
            std::size_t j = i;
            double sum = 0.0;
            while (j < entries.size() && entries[j].row == entries[i].row &&
                   entries[j].col == entries[i].col) {
                sum += entries[j].value;
                ++j;
            }
            if (sum != 0.0) {
                m.colIdx_.push_back(entries[i].col);
                m.values_.push_back(sum);
                ++m.rowPtr_[entries[i].row + 1];
            }
            i = j;
        }
        for (std::size_t r = 0; r < rows; ++r) m.rowPtr_[r + 1] += m.rowPtr_[r];
        return m;
    }

    std::size_t rows() const noexcept { return rows_; }
    std::size_t cols() const noexcept { return cols_; }
    std::pair<std::size_t, std::size_t> dims() const noexcept { return {rows_, cols_}; }
    Storage storage() const noexcept { return storage_; }
    bool isSparse() const noexcept { return storage_ == Storage::Csr; }
    bool isVector() const noexcept { return rows_ == 1 || cols_ == 1; }

    /// Number of nonzero entries (stored entries for canonical CSR).
    std::size_t nnz() const noexcept {
        if (isSparse()) return values_.size();
        return static_cast<std::size_t>(
            std::count_if(dense_.begin(), dense_.end(), [](double v) { return v != 0.0; }));
    }

    /// Checked element read for either encoding.
    double at(std::size_t i, std::size_t j) const {
        checkIndex(i, j);
        return get(i, j);
    }

    /// Unchecked element read.
    double get(std::size_t i, std::size_t j) const {
        if (!isSparse()) return dense_[i * cols_ + j];
        const auto begin = colIdx_.begin() + static_cast<std::ptrdiff_t>(rowPtr_[i]);
        const auto end = colIdx_.begin() + static_cast<std::ptrdiff_t>(rowPtr_[i + 1]);
        const auto it = std::lower_bound(begin, end, j);
        if (it == end || *it != j) return 0.0;
        return values_[static_cast<std::size_t>(it - colIdx_.begin())];
    }

    /// Mutable element access; dense storage only.
    double& operator()(std::size_t i, std::size_t j) {
        requireDense("element assignment");
        return dense_[i * cols_ + j];
    }
    double operator()(std::size_t i, std::size_t j) const { return get(i, j); }

    std::span<const double> data() const {
        requireDense("raw data access");
        return dense_;
    }
    std::span<double> data() {
        requireDense("raw data access");
        return dense_;
    }
    std::span<const double> row(std::size_t i) const {
        requireDense("row view");
        return std::span<const double>(dense_).subspan(i * cols_, cols_);
    }
    std::span<double> row(std::size_t i) {
        requireDense("row view");
        return std::span<double>(dense_).subspan(i * cols_, cols_);
    }

    std::span<const std::size_t> rowPointers() const noexcept { return rowPtr_; }
    std::span<const std::size_t> columnIndices() const noexcept { return colIdx_; }
    std::span<const double> storedValues() const noexcept { return values_; }

    /// Column indices of one CSR row.
    std::span<const std::size_t> csrRowIndices(std::size_t i) const {
        return std::span<const std::size_t>(colIdx_).subspan(rowPtr_[i], rowPtr_[i + 1] - rowPtr_[i]);
    }
    /// Stored values of one CSR row.
    std::span<const double> csrRowValues(std::size_t i) const {
        return std::span<const double>(values_).subspan(rowPtr_[i], rowPtr_[i + 1] - rowPtr_[i]);
    }

    /// True when the storage satisfies its structural invariants.
    bool isCanonical() const {
        if (!isSparse()) return dense_.size() == rows_ * cols_;
        if (rowPtr_.size() != rows_ + 1 || rowPtr_.front() != 0 || rowPtr_.back() != values_.size() ||
            colIdx_.size() != values_.size()) {
            return false;
        }
        for (std::size_t r = 0; r < rows_; ++r) {
            if (rowPtr_[r] > rowPtr_[r + 1]) return false;
            for (std::size_t k = rowPtr_[r]; k < rowPtr_[r + 1]; ++k) {
                if (colIdx_[k] >= cols_ || values_[k] == 0.0) return false;
                if (k > rowPtr_[r] && colIdx_[k - 1] >= colIdx_[k]) return false;
            }
        }
        return true;
    }

    /// Entrywise equality, independent of encoding.
    friend bool operator==(const LocalMatrix& a, const LocalMatrix& b) {
        if (a.rows_ != b.rows_ || a.cols_ != b.cols_) return false;
        if (!a.isSparse() && !b.isSparse()) return a.dense_ == b.dense_;
        if (a.isSparse() && b.isSparse()) {
            return a.rowPtr_ == b.rowPtr_ && a.colIdx_ == b.colIdx_ && a.values_ == b.values_;
        }
        for (std::size_t i = 0; i < a.rows_; ++i) {
            for (std::size_t j = 0; j < a.cols_; ++j) {
                if (a.get(i, j) != b.get(i, j)) return false;
            }
        }
        return true;
    }

    void requireDense(const char* what) const {
        if (isSparse()) throw UnsupportedError(std::string(what) + " requires dense storage");
    }

private:
    void checkIndex(std::size_t i, std::size_t j) const {
        if (i >= rows_ || j >= cols_) {
            throw IndexError("(" + std::to_string(i) + ", " + std::to_string(j) + ") out of range for " +
                             std::to_string(rows_) + "x" + std::to_string(cols_));
        }
    }

    Storage storage_ = Storage::Dense;
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> dense_;
    std::vector<std::size_t> rowPtr_{0};
    std::vector<std::size_t> colIdx_;
    std::vector<double> values_;
};

inline std::pair<std::size_t, std::size_t> dims(const LocalMatrix& m) noexcept { return m.dims(); }

inline LocalMatrix toDense(const LocalMatrix& m) {
    if (!m.isSparse()) return m;
    LocalMatrix out(m.rows(), m.cols());
    for (std::size_t i = 0; i < m.rows(); ++i) {
        const auto idx = m.csrRowIndices(i);
        const auto val = m.csrRowValues(i);
        for (std::size_t k = 0; k < idx.size(); ++k) out(i, idx[k]) = val[k];
    }
    return out;
}

/// Canonical CSR copy; exact zeros are dropped.
inline LocalMatrix toCsr(const LocalMatrix& m) {
    if (m.isSparse()) return m;
    std::vector<std::size_t> rowPtr(m.rows() + 1, 0);
    std::vector<std::size_t> colIdx;
    std::vector<double> values;
    for (std::size_t i = 0; i < m.rows(); ++i) {
        for (std::size_t j = 0; j < m.cols(); ++j) {
            const double v = m.get(i, j);
            if (v != 0.0) {
                colIdx.push_back(j);
                values.push_back(v);
            }
        }
        rowPtr[i + 1] = values.size();
    }
    return LocalMatrix::csr(m.rows(), m.cols(), std::move(rowPtr), std::move(colIdx), std::move(values));
}

namespace detail {

inline void appendCsrRow(std::vector<std::size_t>& colIdx, std::vector<double>& values,
                         std::span<const std::size_t> idx, std::span<const double> val,
                         std::size_t colOffset) {
    for (std::size_t k = 0; k < idx.size(); ++k) {
        colIdx.push_back(idx[k] + colOffset);
        values.push_back(val[k]);
    }
}

}  // namespace detail

/// Row-wise composition (`a on b`): b's rows follow a's.
inline LocalMatrix stackRows(const LocalMatrix& a, const LocalMatrix& b) {
    if (a.cols() != b.cols()) {
        throw DimError("stackRows: column counts differ (" + std::to_string(a.cols()) + " vs " +
                       std::to_string(b.cols()) + ")");
    }
    if (a.isSparse() && b.isSparse()) {
        std::vector<std::size_t> rowPtr(a.rowPointers().begin(), a.rowPointers().end());
        std::vector<std::size_t> colIdx(a.columnIndices().begin(), a.columnIndices().end());
        std::vector<double> values(a.storedValues().begin(), a.storedValues().end());
        const std::size_t base = values.size();
        for (std::size_t i = 1; i < b.rowPointers().size(); ++i) rowPtr.push_back(base + b.rowPointers()[i]);
        colIdx.insert(colIdx.end(), b.columnIndices().begin(), b.columnIndices().end());
        values.insert(values.end(), b.storedValues().begin(), b.storedValues().end());
        return LocalMatrix::csr(a.rows() + b.rows(), a.cols(), std::move(rowPtr), std::move(colIdx),
                                std::move(values));
    }
    const LocalMatrix da = toDense(a);
    const LocalMatrix db = toDense(b);
    std::vector<double> values(da.data().begin(), da.data().end());
    values.insert(values.end(), db.data().begin(), db.data().end());
    return LocalMatrix::dense(a.rows() + b.rows(), a.cols(), std::move(values));
}

/// Column-wise composition (`a then b`): b's columns follow a's.
inline LocalMatrix concatCols(const LocalMatrix& a, const LocalMatrix& b) {
    if (a.rows() != b.rows()) {
        throw DimError("concatCols: row counts differ (" + std::to_string(a.rows()) + " vs " +
                       std::to_string(b.rows()) + ")");
    }
    if (a.isSparse() && b.isSparse()) {
        std::vector<std::size_t> rowPtr(a.rows() + 1, 0);
        std::vector<std::size_t> colIdx;
        std::vector<double> values;
        for (std::size_t i = 0; i < a.rows(); ++i) {
            detail::appendCsrRow(colIdx, values, a.csrRowIndices(i), a.csrRowValues(i), 0);
            detail::appendCsrRow(colIdx, values, b.csrRowIndices(i), b.csrRowValues(i), a.cols());
            rowPtr[i + 1] = values.size();
        }
        return LocalMatrix::csr(a.rows(), a.cols() + b.cols(), std::move(rowPtr), std::move(colIdx),
                                std::move(values));
    }
    const LocalMatrix da = toDense(a);
    const LocalMatrix db = toDense(b);
    LocalMatrix out(a.rows(), a.cols() + b.cols());
    for (std::size_t i = 0; i < a.rows(); ++i) {
        std::copy(da.row(i).begin(), da.row(i).end(), out.row(i).begin());
        std::copy(db.row(i).begin(), db.row(i).end(), out.row(i).begin() + static_cast<std::ptrdiff_t>(a.cols()));
    }
    return out;
}

/// Sub-matrix in selector order. The result keeps the input's encoding.
inline LocalMatrix slice(const LocalMatrix& m, const Selector& rowSel, const Selector& colSel) {
    const auto rows = rowSel.resolve(m.rows());
    const auto cols = colSel.resolve(m.cols());
    if (!m.isSparse()) {
        LocalMatrix out(rows.size(), cols.size());
        for (std::size_t i = 0; i < rows.size(); ++i) {
            for (std::size_t j = 0; j < cols.size(); ++j) out(i, j) = m.get(rows[i], cols[j]);
        }
        return out;
    }
    std::vector<Triplet> entries;
    for (std::size_t i = 0; i < rows.size(); ++i) {
        for (std::size_t j = 0; j < cols.size(); ++j) {
            const double v = m.get(rows[i], cols[j]);
            if (v != 0.0) entries.push_back({i, j, v});
        }
    }
    return LocalMatrix::fromTriplets(rows.size(), cols.size(), std::move(entries));
}

/// Two single indices select one element.
inline double slice(const LocalMatrix& m, std::size_t row, std::size_t col) { return m.at(row, col); }

/// Strictly increasing column indices of the nonzero entries of one row.
inline std::vector<std::size_t> nonZeroIndices(const LocalMatrix& m, std::size_t row) {
    if (row >= m.rows()) {
        throw IndexError("row " + std::to_string(row) + " out of range for " + std::to_string(m.rows()) + " rows");
    }
    if (m.isSparse()) {
        const auto idx = m.csrRowIndices(row);
        return {idx.begin(), idx.end()};
    }
    std::vector<std::size_t> out;
    const auto r = m.row(row);
    for (std::size_t j = 0; j < r.size(); ++j) {
        if (r[j] != 0.0) out.push_back(j);
    }
    return out;
}

/// Overwrites the selected region with one value.
inline void update(LocalMatrix& m, const Selector& rowSel, const Selector& colSel, double value) {
    m.requireDense("update");
    for (auto i : rowSel.resolve(m.rows())) {
        for (auto j : colSel.resolve(m.cols())) m(i, j) = value;
    }
}

/// Overwrites the selected region with the entries of `source`.
inline void update(LocalMatrix& m, const Selector& rowSel, const Selector& colSel, const LocalMatrix& source) {
    m.requireDense("update");
    const auto rows = rowSel.resolve(m.rows());
    const auto cols = colSel.resolve(m.cols());
    if (source.rows() != rows.size() || source.cols() != cols.size()) {
        throw DimError("update: region is " + std::to_string(rows.size()) + "x" + std::to_string(cols.size()) +
                       " but source is " + std::to_string(source.rows()) + "x" + std::to_string(source.cols()));
    }
    for (std::size_t i = 0; i < rows.size(); ++i) {
        for (std::size_t j = 0; j < cols.size(); ++j) m(rows[i], cols[j]) = source.get(i, j);
    }
}

enum class ElementOp { Add, Sub, Mul, Div };

namespace detail {

inline double apply(ElementOp op, double a, double b) noexcept {
    switch (op) {
        case ElementOp::Add: return a + b;
        case ElementOp::Sub: return a - b;
        case ElementOp::Mul: return a * b;
        case ElementOp::Div: return a / b;
    }
    return 0.0;
}

// Merge of two canonical CSR rows under + or -.
inline LocalMatrix sparseAddSub(const LocalMatrix& a, const LocalMatrix& b, ElementOp op) {
    std::vector<std::size_t> rowPtr(a.rows() + 1, 0);
    std::vector<std::size_t> colIdx;
    std::vector<double> values;
    auto push = [&](std::size_t c, double v) {
        if (v != 0.0) {
            colIdx.push_back(c);
            values.push_back(v);
        }
    };
    for (std::size_t i = 0; i < a.rows(); ++i) {
        const auto ai = a.csrRowIndices(i);
        const auto av = a.csrRowValues(i);
        const auto bi = b.csrRowIndices(i);
        const auto bv = b.csrRowValues(i);
        std::size_t p = 0;
        std::size_t q = 0;
        while (p < ai.size() || q < bi.size()) {
            if (q == bi.size() || (p < ai.size() && ai[p] < bi[q])) {
                push(ai[p], apply(op, av[p], 0.0));
                ++p;
            } else if (p == ai.size() || bi[q] < ai[p]) {
                push(bi[q], apply(op, 0.0, bv[q]));
                ++q;
            } else {
                push(ai[p], apply(op, av[p], bv[q]));
                ++p;
                ++q;
            }
        }
        rowPtr[i + 1] = values.size();
    }
    return LocalMatrix::csr(a.rows(), a.cols(), std::move(rowPtr), std::move(colIdx), std::move(values));
}

}  // namespace detail

/// Entrywise matrix-matrix arithmetic. Division by zero follows IEEE rules.
inline LocalMatrix elementwise(const LocalMatrix& a, const LocalMatrix& b, ElementOp op) {
    if (a.dims() != b.dims()) {
        throw DimError("elementwise: " + std::to_string(a.rows()) + "x" + std::to_string(a.cols()) + " vs " +
                       std::to_string(b.rows()) + "x" + std::to_string(b.cols()));
    }
    if (a.isSparse() && b.isSparse() && (op == ElementOp::Add || op == ElementOp::Sub)) {
        return detail::sparseAddSub(a, b, op);
    }
    const LocalMatrix da = toDense(a);
    const LocalMatrix db = toDense(b);
    LocalMatrix out(a.rows(), a.cols());
    auto o = out.data();
    const auto x = da.data();
    const auto y = db.data();
    for (std::size_t k = 0; k < o.size(); ++k) o[k] = detail::apply(op, x[k], y[k]);
    return out;
}

/// Entrywise matrix-scalar arithmetic (matrix on the left).
inline LocalMatrix elementwise(const LocalMatrix& a, double s, ElementOp op) {
    if (a.isSparse() && op == ElementOp::Mul && std::isfinite(s)) {
        std::vector<std::size_t> rowPtr(a.rows() + 1, 0);
        std::vector<std::size_t> colIdx;
        std::vector<double> values;
        for (std::size_t i = 0; i < a.rows(); ++i) {
            const auto idx = a.csrRowIndices(i);
            const auto val = a.csrRowValues(i);
            for (std::size_t k = 0; k < idx.size(); ++k) {
                const double v = val[k] * s;
                if (v != 0.0) {
                    colIdx.push_back(idx[k]);
                    values.push_back(v);
                }
            }
            rowPtr[i + 1] = values.size();
        }
        return LocalMatrix::csr(a.rows(), a.cols(), std::move(rowPtr), std::move(colIdx), std::move(values));
    }
    LocalMatrix out = toDense(a);
    for (double& v : out.data()) v = detail::apply(op, v, s);
    return out;
}

inline LocalMatrix operator+(const LocalMatrix& a, const LocalMatrix& b) { return elementwise(a, b, ElementOp::Add); }
inline LocalMatrix operator-(const LocalMatrix& a, const LocalMatrix& b) { return elementwise(a, b, ElementOp::Sub); }
inline LocalMatrix operator*(const LocalMatrix& a, const LocalMatrix& b) { return elementwise(a, b, ElementOp::Mul); }
inline LocalMatrix operator/(const LocalMatrix& a, const LocalMatrix& b) { return elementwise(a, b, ElementOp::Div); }
inline LocalMatrix operator+(const LocalMatrix& a, double s) { return elementwise(a, s, ElementOp::Add); }
inline LocalMatrix operator-(const LocalMatrix& a, double s) { return elementwise(a, s, ElementOp::Sub); }
inline LocalMatrix operator*(const LocalMatrix& a, double s) { return elementwise(a, s, ElementOp::Mul); }
inline LocalMatrix operator/(const LocalMatrix& a, double s) { return elementwise(a, s, ElementOp::Div); }

/// Matrix product. CSR operands are never densified; CSR x CSR yields CSR.
inline LocalMatrix times(const LocalMatrix& a, const LocalMatrix& b) {
    if (a.cols() != b.rows()) {
        throw DimError("times: inner dimensions differ (" + std::to_string(a.cols()) + " vs " +
                       std::to_string(b.rows()) + ")");
    }
    const std::size_t n = a.rows();
    const std::size_t inner = a.cols();
    const std::size_t p = b.cols();

    if (a.isSparse() && b.isSparse()) {
        // Gustavson row-by-row accumulation with a dense scatter row.
        std::vector<double> acc(p, 0.0);
        std::vector<char> used(p, 0);
        std::vector<std::size_t> touched;
        std::vector<std::size_t> rowPtr(n + 1, 0);
        std::vector<std::size_t> colIdx;
        std::vector<double> values;
        for (std::size_t i = 0; i < n; ++i) {
            touched.clear();
            const auto ai = a.csrRowIndices(i);
            const auto av = a.csrRowValues(i);
            for (std::size_t k = 0; k < ai.size(); ++k) {
                const auto bi = b.csrRowIndices(ai[k]);
                const auto bv = b.csrRowValues(ai[k]);
                for (std::size_t q = 0; q < bi.size(); ++q) {
                    if (!used[bi[q]]) {
                        used[bi[q]] = 1;
                        touched.push_back(bi[q]);
                    }
                    acc[bi[q]] += av[k] * bv[q];
                }
            }
            std::sort(touched.begin(), touched.end());
            for (auto c : touched) {
                if (acc[c] != 0.0) {
                    colIdx.push_back(c);
                    values.push_back(acc[c]);
                }
                acc[c] = 0.0;
                used[c] = 0;
            }
            rowPtr[i + 1] = values.size();
        }
        return LocalMatrix::csr(n, p, std::move(rowPtr), std::move(colIdx), std::move(values));
    }

    LocalMatrix out(n, p);
    if (a.isSparse()) {
        for (std::size_t i = 0; i < n; ++i) {
            auto o = out.row(i);
            const auto ai = a.csrRowIndices(i);
            const auto av = a.csrRowValues(i);
            for (std::size_t k = 0; k < ai.size(); ++k) {
                const auto br = b.row(ai[k]);
                for (std::size_t j = 0; j < p; ++j) o[j] += av[k] * br[j];
            }
        }
    } else if (b.isSparse()) {
        for (std::size_t i = 0; i < n; ++i) {
            auto o = out.row(i);
            const auto ar = a.row(i);
            for (std::size_t k = 0; k < inner; ++k) {
                if (ar[k] == 0.0) continue;
                const auto bi = b.csrRowIndices(k);
                const auto bv = b.csrRowValues(k);
                for (std::size_t q = 0; q < bi.size(); ++q) o[bi[q]] += ar[k] * bv[q];
            }
        }
    } else {
        for (std::size_t i = 0; i < n; ++i) {
            auto o = out.row(i);
            const auto ar = a.row(i);
            for (std::size_t k = 0; k < inner; ++k) {
                const double aik = ar[k];
                if (aik == 0.0) continue;
                const auto br = b.row(k);
                for (std::size_t j = 0; j < p; ++j) o[j] += aik * br[j];
            }
        }
    }
    return out;
}

/// Inner product of two equal-length spans, summed in index order.
inline double dot(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size()) {
        throw DimError("dot: lengths differ (" + std::to_string(a.size()) + " vs " + std::to_string(b.size()) + ")");
    }
    double sum = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) sum += a[i] * b[i];
    return sum;
}

/// Inner product of two vectors (1 x n or n x 1, in any combination).
inline double dot(const LocalMatrix& a, const LocalMatrix& b) {
    if (!a.isVector() || !b.isVector()) throw DimError("dot: both operands must be vectors");
    const std::size_t na = a.rows() * a.cols();
    const std::size_t nb = b.rows() * b.cols();
    if (na != nb) throw DimError("dot: lengths differ (" + std::to_string(na) + " vs " + std::to_string(nb) + ")");
    auto elem = [](const LocalMatrix& m, std::size_t k) { return m.rows() == 1 ? m.get(0, k) : m.get(k, 0); };
    double sum = 0.0;
    for (std::size_t k = 0; k < na; ++k) sum += elem(a, k) * elem(b, k);
    return sum;
}

inline LocalMatrix transpose(const LocalMatrix& m) {
    if (!m.isSparse()) {
        LocalMatrix out(m.cols(), m.rows());
        for (std::size_t i = 0; i < m.rows(); ++i) {
            for (std::size_t j = 0; j < m.cols(); ++j) out(j, i) = m.get(i, j);
        }
        return out;
    }
    // Counting-sort transpose; walking source rows in order keeps columns sorted.
    const auto srcPtr = m.rowPointers();
    const auto srcIdx = m.columnIndices();
    const auto srcVal = m.storedValues();
    std::vector<std::size_t> rowPtr(m.cols() + 1, 0);
    for (auto c : srcIdx) ++rowPtr[c + 1];
    for (std::size_t c = 0; c < m.cols(); ++c) rowPtr[c + 1] += rowPtr[c];
    std::vector<std::size_t> next(rowPtr.begin(), rowPtr.end() - 1);
    std::vector<std::size_t> colIdx(srcIdx.size());
    std::vector<double> values(srcVal.size());
    for (std::size_t i = 0; i < m.rows(); ++i) {
        for (std::size_t k = srcPtr[i]; k < srcPtr[i + 1]; ++k) {
            const std::size_t dst = next[srcIdx[k]]++;
            colIdx[dst] = i;
            values[dst] = srcVal[k];
        }
    }
    return LocalMatrix::csr(m.cols(), m.rows(), std::move(rowPtr), std::move(colIdx), std::move(values));
}

inline double frobeniusNorm(const LocalMatrix& m) {
    double sum = 0.0;
    if (m.isSparse()) {
        for (double v : m.storedValues()) sum += v * v;
    } else {
        for (double v : m.data()) sum += v * v;
    }
    return std::sqrt(sum);
}

inline double maxAbsDiff(const LocalMatrix& a, const LocalMatrix& b) {
    if (a.dims() != b.dims()) throw DimError("maxAbsDiff: shapes differ");
    double worst = 0.0;
    for (std::size_t i = 0; i < a.rows(); ++i) {
        for (std::size_t j = 0; j < a.cols(); ++j) worst = std::max(worst, std::abs(a.get(i, j) - b.get(i, j)));
    }
    return worst;
}

}  // namespace mli
