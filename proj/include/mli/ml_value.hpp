#pragma once

#include <cmath>
#include <compare>
#include <cstdio>
#include <cstdint>
#include <functional>
#include <optional>
#include <ostream>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "mli/error.hpp"

namespace mli {

enum class ValueKind { String, Int, Bool, Scalar, Empty };

inline const char* kindName(ValueKind k) noexcept {
    switch (k) {
        case ValueKind::String: return "String";
        case ValueKind::Int: return "Int";
        case ValueKind::Bool: return "Bool";
        case ValueKind::Scalar: return "Scalar";
        case ValueKind::Empty: return "Empty";
    }
    return "?";
}

/// One table cell. Empty is a distinct value: it equals only Empty and is
/// never coerced to 0 or "".
class MLValue {
public:
    MLValue() = default;
    MLValue(std::string s) : v_(std::move(s)) {}
    MLValue(const char* s) : v_(std::string(s)) {}
    MLValue(std::int64_t i) : v_(i) {}
    MLValue(int i) : v_(static_cast<std::int64_t>(i)) {}
    MLValue(bool b) : v_(b) {}
    MLValue(double x) : v_(x) {}

    static MLValue empty() { return MLValue(); }

    ValueKind kind() const noexcept {
        switch (v_.index()) {
            case 1: return ValueKind::String;
            case 2: return ValueKind::Int;
            case 3: return ValueKind::Bool;
            case 4: return ValueKind::Scalar;
            default: return ValueKind::Empty;
        }
    }

    bool isEmpty() const noexcept { return v_.index() == 0; }

    const std::string& asString() const { return get<std::string>(ValueKind::String); }
    std::int64_t asInt() const { return get<std::int64_t>(ValueKind::Int); }
    bool asBool() const { return get<bool>(ValueKind::Bool); }
    double asScalar() const { return get<double>(ValueKind::Scalar); }

    /// Int or Scalar widened to double; anything else throws.
    double toDouble() const {
        if (const auto* i = std::get_if<std::int64_t>(&v_)) return static_cast<double>(*i);
        return asScalar();
    }

    /// Scalars compare by value, so NaN differs from itself.
    friend bool operator==(const MLValue& a, const MLValue& b) { return a.v_ == b.v_; }

    /// Total order: kinds first (Empty lowest), then values; NaN sorts last among scalars.
    friend bool lessThan(const MLValue& a, const MLValue& b) {
        if (a.v_.index() != b.v_.index()) return a.v_.index() < b.v_.index();
        if (const auto* x = std::get_if<double>(&a.v_)) {
            const double y = std::get<double>(b.v_);
            if (std::isnan(*x)) return false;
            if (std::isnan(y)) return true;
            return *x < y;
        }
        return a.v_ < b.v_;
    }

    std::size_t hash() const noexcept {
        std::size_t h = std::hash<std::size_t>{}(v_.index());
        std::size_t inner = 0;
        switch (v_.index()) {
            case 1: inner = std::hash<std::string>{}(std::get<1>(v_)); break;
            case 2: inner = std::hash<std::int64_t>{}(std::get<2>(v_)); break;
            case 3: inner = std::hash<bool>{}(std::get<3>(v_)); break;
            case 4: {
                const double x = std::get<4>(v_);
                inner = std::hash<double>{}(x == 0.0 ? 0.0 : x);
                break;
            }
            default: break;
        }
        return h ^ (inner + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2));
    }

    std::string toString() const {
        switch (v_.index()) {
            case 1: return std::get<1>(v_);
            case 2: return std::to_string(std::get<2>(v_));
            case 3: return std::get<3>(v_) ? "true" : "false";
            case 4: {
                char buf[32];
                std::snprintf(buf, sizeof buf, "%.17g", std::get<4>(v_));
                return buf;
            }
            default: return "";
        }
    }

    friend std::ostream& operator<<(std::ostream& os, const MLValue& v) {
        return os << (v.isEmpty() ? std::string("<empty>") : v.toString());
    }

private:
    template <typename T>
    const T& get(ValueKind want) const {
        if (const auto* p = std::get_if<T>(&v_)) return *p;
        throw CastError(0, 0, std::string("value is ") + kindName(kind()) + ", not " + kindName(want));
    }

    std::variant<std::monostate, std::string, std::int64_t, bool, double> v_;
};

struct MLValueLess {
    bool operator()(const MLValue& a, const MLValue& b) const { return lessThan(a, b); }
};

struct MLValueHash {
    std::size_t operator()(const MLValue& v) const noexcept { return v.hash(); }
};

using MLRow = std::vector<MLValue>;

struct Column {
    std::optional<std::string> name;
    ValueKind kind = ValueKind::Scalar;

    friend bool operator==(const Column&, const Column&) = default;
};

/// Ordered, non-empty column list; names are optional but unique when present.
class Schema {
public:
    Schema() = default;

    explicit Schema(std::vector<Column> columns) : columns_(std::move(columns)) {
        if (columns_.empty()) throw SchemaError("schema must have at least one column");
        for (std::size_t i = 0; i < columns_.size(); ++i) {
            if (!columns_[i].name) continue;
            for (std::size_t j = 0; j < i; ++j) {
                if (columns_[j].name == columns_[i].name) {
                    throw SchemaError("duplicate column name '" + *columns_[i].name + "'");
                }
            }
        }
    }

    /// Unnamed columns of the given kinds.
    static Schema ofKinds(const std::vector<ValueKind>& kinds) {
        std::vector<Column> cols;
        cols.reserve(kinds.size());
        for (auto k : kinds) cols.push_back({std::nullopt, k});
        return Schema(std::move(cols));
    }

    std::size_t size() const noexcept { return columns_.size(); }
    bool isValid() const noexcept { return !columns_.empty(); }
    const Column& operator[](std::size_t i) const { return columns_.at(i); }
    const std::vector<Column>& columns() const noexcept { return columns_; }

    std::optional<std::size_t> indexOf(const std::string& name) const {
        for (std::size_t i = 0; i < columns_.size(); ++i) {
            if (columns_[i].name == name) return i;
        }
        return std::nullopt;
    }

    /// Kinds equal and names equal wherever both sides are named.
    bool compatibleWith(const Schema& other) const {
        if (size() != other.size()) return false;
        for (std::size_t i = 0; i < size(); ++i) {
            if (columns_[i].kind != other.columns_[i].kind) return false;
            if (columns_[i].name && other.columns_[i].name && columns_[i].name != other.columns_[i].name) {
                return false;
            }
        }
        return true;
    }

    bool conforms(const MLRow& row) const noexcept {
        if (row.size() != columns_.size()) return false;
        for (std::size_t i = 0; i < row.size(); ++i) {
            if (!row[i].isEmpty() && row[i].kind() != columns_[i].kind) return false;
        }
        return true;
    }

    friend bool operator==(const Schema&, const Schema&) = default;

private:
    std::vector<Column> columns_;
};

}  // namespace mli
