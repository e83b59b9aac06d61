#pragma once

// Plain-text model files.
//   logistic:       d, then one weight per line
//   factorization:  "users items rank", then U row-major, then V row-major,
//                   one matrix row per line
// Values are written with 17 significant digits, so a round trip is exact.

#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <string>

#include "mli/error.hpp"
#include "mli/learn/als.hpp"
#include "mli/learn/logistic.hpp"

namespace mli {

namespace detail {

inline std::string formatDouble(double x) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

inline double readDouble(std::istream& in, const char* what) {
    std::string token;
    if (!(in >> token)) throw IoError(std::string("model file truncated while reading ") + what);
    try {
        std::size_t used = 0;
        const double x = std::stod(token, &used);
        if (used != token.size()) throw std::invalid_argument(token);
        return x;
    } catch (const std::exception&) {
        throw IoError(std::string("malformed number '") + token + "' in " + what);
    }
}

inline std::size_t readCount(std::istream& in, const char* what) {
    long long n = -1;
    if (!(in >> n) || n < 0) throw IoError(std::string("model file: bad ") + what);
    return static_cast<std::size_t>(n);
}

inline void writeMatrix(std::ostream& out, const LocalMatrix& m) {
    for (std::size_t i = 0; i < m.rows(); ++i) {
        for (std::size_t j = 0; j < m.cols(); ++j) {
            if (j) out << ' ';
            out << formatDouble(m.get(i, j));
        }
        out << '\n';
    }
}

inline LocalMatrix readMatrix(std::istream& in, std::size_t rows, std::size_t cols, const char* what) {
    LocalMatrix m(rows, cols);
    for (double& x : m.data()) x = readDouble(in, what);
    return m;
}

}  // namespace detail

inline void saveModel(std::ostream& out, const LogisticModel& model) {
    out << model.dimension() << '\n';
    for (double w : model.weights()) out << detail::formatDouble(w) << '\n';
}

inline LogisticModel loadLogisticModel(std::istream& in) {
    const std::size_t d = detail::readCount(in, "dimension");
    std::vector<double> w(d);
    for (double& x : w) x = detail::readDouble(in, "weights");
    return LogisticModel(std::move(w));
}

inline void saveModel(std::ostream& out, const FactorizationModel& model) {
    out << model.u().rows() << ' ' << model.v().rows() << ' ' << model.rank() << '\n';
    detail::writeMatrix(out, model.u());
    detail::writeMatrix(out, model.v());
}

inline FactorizationModel loadFactorizationModel(std::istream& in) {
    const std::size_t users = detail::readCount(in, "user count");
    const std::size_t items = detail::readCount(in, "item count");
    const std::size_t k = detail::readCount(in, "rank");
    LocalMatrix u = detail::readMatrix(in, users, k, "U");
    LocalMatrix v = detail::readMatrix(in, items, k, "V");
    return FactorizationModel(std::move(u), std::move(v));
}

template <typename M>
void saveModelFile(const std::string& path, const M& model) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot open '" + path + "' for writing");
    saveModel(out, model);
    if (!out) throw IoError("write to '" + path + "' failed");
}

}  // namespace mli
