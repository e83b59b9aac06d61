#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <stdexcept>

#include "mli/ml_table.hpp"
#include "test_support.hpp"

using namespace mli;
namespace oracle = mli::oracle;

namespace {

Schema intString() { return Schema({{"id", ValueKind::Int}, {"name", ValueKind::String}}); }

MLTable randomTable(std::mt19937_64& rng, const std::vector<ValueKind>& kinds, std::size_t rows,
                    double emptyRate = 0.0) {
    return MLTable::fromRows(Schema::ofKinds(kinds), oracle::randomRows(rng, kinds, rows, emptyRate),
                             1 + rng() % 5);
}

MLRow sumInts(const MLRow& a, const MLRow& b) {
    MLRow out;
    for (std::size_t c = 0; c < a.size(); ++c) out.emplace_back(a[c].asInt() + b[c].asInt());
    return out;
}

MLRow sumScalars(const MLRow& a, const MLRow& b) {
    MLRow out;
    for (std::size_t c = 0; c < a.size(); ++c) out.emplace_back(a[c].asScalar() + b[c].asScalar());
    return out;
}

}  // namespace

TEST(MLValueTest, EmptyIsNeverCoerced) {
    const MLValue e;
    EXPECT_TRUE(e.isEmpty());
    EXPECT_EQ(e, MLValue());
    EXPECT_FALSE(e == MLValue(0));
    EXPECT_FALSE(e == MLValue(""));
    EXPECT_FALSE(e == MLValue(0.0));
    EXPECT_THROW(e.asScalar(), CastError);
    EXPECT_THROW(e.toDouble(), CastError);
    EXPECT_THROW(MLValue("x").asInt(), CastError);
    EXPECT_EQ(MLValue(3).toDouble(), 3.0);
}

TEST(SchemaTest, RejectsDuplicateNamesAndEmptyColumnList) {
    EXPECT_THROW(Schema({{"a", ValueKind::Int}, {"a", ValueKind::String}}), SchemaError);
    EXPECT_THROW(MLTable::fromRows(Schema(), {}, 1), SchemaError);
    EXPECT_NO_THROW(Schema({{std::nullopt, ValueKind::Int}, {std::nullopt, ValueKind::Int}}));
    EXPECT_THROW(MLTable::fromRows(intString(), {{MLValue(1)}}, 1), SchemaError);
    EXPECT_THROW(MLTable::fromRows(intString(), {{MLValue("x"), MLValue("y")}}, 1), SchemaError);
    EXPECT_NO_THROW(MLTable::fromRows(intString(), {{MLValue(), MLValue("y")}}, 1));
}

TEST(Project, Examples) {
    const auto t = MLTable::fromRows(intString(), {{MLValue(1), MLValue("a")}, {MLValue(2), MLValue("b")}}, 2);
    EXPECT_EQ(t.project({0, 1}), t);
    const auto p = t.project({1});
    EXPECT_EQ(p.rows(), (std::vector<MLRow>{{MLValue("a")}, {MLValue("b")}}));
    EXPECT_EQ(p.schema()[0].name, std::optional<std::string>("name"));
    EXPECT_THROW(t.project({2}), IndexError);
}

TEST(Project, MatchesColumnPickingOracle) {
    std::mt19937_64 rng(1);
    for (int trial = 0; trial < 20; ++trial) {
        const auto t = randomTable(rng, oracle::randomKinds(rng, 5), 50, 0.1);
        const std::vector<std::size_t> cols{4, 0};
        EXPECT_EQ(t.project(cols).rows(), oracle::projectRows(t.rows(), cols));
        EXPECT_EQ(t.project(cols).numRows(), 50u);
    }
}

TEST(Project, CompositionIndexesOuterByInner) {
    std::mt19937_64 rng(2);
    for (int trial = 0; trial < 50; ++trial) {
        const auto t = randomTable(rng, oracle::randomKinds(rng, 6), rng() % 40);
        std::vector<std::size_t> a(1 + rng() % 6), b(1 + rng() % 4);
        for (auto& x : a) x = rng() % 6;
        for (auto& x : b) x = rng() % a.size();
        std::vector<std::size_t> ab;
        for (auto i : b) ab.push_back(a[i]);
        EXPECT_EQ(t.project(a).project(b).rows(), t.project(ab).rows());
    }
}

TEST(Union, ExamplesAndErrors) {
    const auto a = MLTable::fromRows(intString(), {{MLValue(1), MLValue("a")}, {MLValue(2), MLValue("b")}}, 1);
    const auto b = MLTable::fromRows(
        intString(), {{MLValue(3), MLValue("c")}, {MLValue(4), MLValue("d")}, {MLValue(5), MLValue("e")}}, 2);
    EXPECT_TRUE(a.unionWith(MLTable::empty(intString())).sameContents(a));
    EXPECT_EQ(unionAll(a, b).numRows(), 5u);
    EXPECT_EQ(unionAll(a, b).rows().front(), a.rows().front());
    EXPECT_THROW(a.unionWith(MLTable::empty(Schema::ofKinds({ValueKind::Int, ValueKind::Int}))), SchemaError);
    EXPECT_THROW(a.unionWith(MLTable::empty(Schema({{"x", ValueKind::Int}, {"name", ValueKind::String}}))),
                 SchemaError);
}

TEST(Union, MultisetAndAssociativity) {
    std::mt19937_64 rng(3);
    for (int trial = 0; trial < 30; ++trial) {
        const auto kinds = oracle::randomKinds(rng, 3);
        const auto a = randomTable(rng, kinds, rng() % 30);
        const auto b = randomTable(rng, kinds, rng() % 30);
        const auto c = randomTable(rng, kinds, rng() % 30);
        auto expect = a.rows();
        const auto br = b.rows();
        expect.insert(expect.end(), br.begin(), br.end());
        EXPECT_TRUE(oracle::sameMultiset(unionAll(a, b).rows(), expect));
        EXPECT_EQ(unionAll(a, b).rows(), expect);
        EXPECT_EQ(unionAll(unionAll(a, b), c).rows(), unionAll(a, unionAll(b, c)).rows());
    }
}

TEST(Filter, ExamplesAndOracle) {
    std::mt19937_64 rng(4);
    const auto t = randomTable(rng, {ValueKind::Scalar, ValueKind::Int}, 60);
    EXPECT_TRUE(t.filter([](const MLRow&) { return true; }).sameContents(t));
    const auto none = t.filter([](const MLRow&) { return false; });
    EXPECT_EQ(none.numRows(), 0u);
    EXPECT_EQ(none.schema(), t.schema());
    auto pred = [](const MLRow& r) { return r[0].asScalar() > 0.5; };
    EXPECT_EQ(t.filter(pred).rows(), oracle::filterRows(t.rows(), pred));
}

TEST(Filter, ComposesAsConjunction) {
    std::mt19937_64 rng(5);
    for (int trial = 0; trial < 30; ++trial) {
        const auto t = randomTable(rng, {ValueKind::Scalar, ValueKind::Int}, rng() % 80);
        auto p = [](const MLRow& r) { return r[0].asScalar() > 0.3; };
        auto q = [](const MLRow& r) { return r[1].asInt() % 2 == 0; };
        EXPECT_EQ(t.filter(p).filter(q).rows(), t.filter([&](const MLRow& r) { return p(r) && q(r); }).rows());
    }
}

TEST(Filter, UserErrorCarriesRowIndex) {
    const auto t = MLTable::fromRows(Schema::ofKinds({ValueKind::Int}), {{MLValue(0)}, {MLValue(1)}, {MLValue(2)}},
                                     2);
    try {
        t.filter([](const MLRow& r) -> bool {
            if (r[0].asInt() == 2) throw std::runtime_error("boom");
            return true;
        });
        FAIL() << "expected UserFunctionError";
    } catch (const UserFunctionError& e) {
        EXPECT_EQ(e.row(), 2u);
    }
    try {
        t.map([](const MLRow& r) { return MLRow{MLValue(r[0].asScalar())}; });
        FAIL() << "expected UserFunctionError";
    } catch (const UserFunctionError& e) {
        EXPECT_EQ(e.row(), 0u);
    }
}

TEST(Join, Examples) {
    const auto a = MLTable::fromRows(intString(), {{MLValue(1), MLValue("a")}, {MLValue(2), MLValue("b")}}, 2);
    const auto b = MLTable::fromRows(Schema({{"id", ValueKind::Int}, {"v", ValueKind::Int}}),
                                     {{MLValue(1), MLValue(10)}}, 1);
    const auto j = a.join(b, {0});
    EXPECT_EQ(j.rows(), (std::vector<MLRow>{{MLValue(1), MLValue("a"), MLValue(10)}}));
    EXPECT_EQ(j.numCols(), 3u);
    EXPECT_EQ(a.join(MLTable::empty(b.schema()), {0}).numRows(), 0u);
    EXPECT_THROW(a.join(MLTable::empty(Schema::ofKinds({ValueKind::String})), {0}), SchemaError);
}

TEST(Join, EmptyKeysNeverMatch) {
    const auto s = Schema::ofKinds({ValueKind::Int, ValueKind::Int});
    const auto a = MLTable::fromRows(s, {{MLValue(), MLValue(1)}, {MLValue(2), MLValue(2)}}, 1);
    const auto b = MLTable::fromRows(s, {{MLValue(), MLValue(3)}, {MLValue(2), MLValue(4)}}, 1);
    EXPECT_EQ(a.join(b, {0}).rows(), (std::vector<MLRow>{{MLValue(2), MLValue(2), MLValue(4)}}));
}

TEST(Join, MatchesNestedLoopOracle) {
    std::mt19937_64 rng(6);
    for (int trial = 0; trial < 60; ++trial) {
        auto kinds = oracle::randomKinds(rng, 1 + rng() % 4);
        auto other = oracle::randomKinds(rng, 1 + rng() % 4);
        other[0] = kinds[0];
        const auto a = randomTable(rng, kinds, rng() % 200, 0.05);
        const auto b = randomTable(rng, other, rng() % 200, 0.05);
        const auto j = a.join(b, {0});
        EXPECT_TRUE(oracle::sameMultiset(j.rows(), oracle::joinRows(a.rows(), b.rows(), {0})));
        EXPECT_TRUE(oracle::conformsByHand(j));
    }
}

TEST(Join, MultiKeyMatchesOracle) {
    std::mt19937_64 rng(7);
    const std::vector<ValueKind> kinds{ValueKind::Int, ValueKind::Bool, ValueKind::String};
    for (int trial = 0; trial < 20; ++trial) {
        const auto a = randomTable(rng, kinds, rng() % 100);
        const auto b = randomTable(rng, kinds, rng() % 100);
        EXPECT_TRUE(oracle::sameMultiset(a.join(b, {0, 1}).rows(), oracle::joinRows(a.rows(), b.rows(), {0, 1})));
    }
}

TEST(Map, Examples) {
    std::mt19937_64 rng(8);
    const auto t = randomTable(rng, {ValueKind::Scalar, ValueKind::String}, 25);
    EXPECT_EQ(t.map([](const MLRow& r) { return r; }), t);

    const auto widened = t.map([](MLRow r) {
        r.emplace_back(1.0);
        return r;
    });
    EXPECT_EQ(widened.numCols(), 3u);
    EXPECT_EQ(widened.numRows(), 25u);
    EXPECT_EQ(widened.partitionCount(), t.partitionCount());
    for (std::size_t p = 0; p < t.partitionCount(); ++p) EXPECT_EQ(widened.partition(p).size(), t.partition(p).size());

    auto scale = [](MLRow r) {
        for (auto& v : r)
            if (v.kind() == ValueKind::Scalar) v = MLValue(v.asScalar() * 2.0);
        return r;
    };
    auto expect = t.rows();
    for (auto& r : expect) r = scale(r);
    EXPECT_EQ(t.map(scale).rows(), expect);
}

TEST(Map, InconsistentOutputIsSchemaError) {
    const auto t = MLTable::fromRows(Schema::ofKinds({ValueKind::Int}), {{MLValue(0)}, {MLValue(1)}}, 1);
    EXPECT_THROW(t.map([](const MLRow& r) {
        return r[0].asInt() == 0 ? MLRow{MLValue(1)} : MLRow{MLValue("x")};
    }),
                 SchemaError);
    EXPECT_THROW(t.map([](const MLRow& r) { return r[0].asInt() == 0 ? MLRow{MLValue(1)} : MLRow{MLValue(1), MLValue(2)}; }),
                 SchemaError);
}

TEST(Map, EmptyPassesThroughUntouched) {
    const auto t = MLTable::fromRows(Schema::ofKinds({ValueKind::Scalar}), {{MLValue()}, {MLValue(1.0)}}, 1);
    const auto out = t.map([](const MLRow& r) { return r; });
    EXPECT_TRUE(out.rows()[0][0].isEmpty());
    EXPECT_THROW(t.toNumeric(), CastError);
}

TEST(FlatMap, Examples) {
    std::mt19937_64 rng(9);
    const auto t = randomTable(rng, {ValueKind::Int, ValueKind::Bool}, 40);
    EXPECT_TRUE(t.flatMap([](const MLRow& r) { return std::vector<MLRow>{r}; }).sameContents(t));
    const auto none = t.flatMap([](const MLRow&) { return std::vector<MLRow>{}; });
    EXPECT_EQ(none.numRows(), 0u);
    const auto twice = t.flatMap([](const MLRow& r) { return std::vector<MLRow>{r, r}; });
    std::vector<MLRow> expect;
    for (const auto& r : t.rows()) {
        expect.push_back(r);
        expect.push_back(r);
    }
    EXPECT_EQ(twice.rows(), expect);
    EXPECT_EQ(twice.numRows(), 2 * t.numRows());
}

TEST(NumRows, CountsAcrossPartitions) {
    const auto s = Schema::ofKinds({ValueKind::Int});
    EXPECT_EQ(MLTable::empty(s).numRows(), 0u);
    std::vector<std::vector<MLRow>> parts{std::vector<MLRow>(2, {MLValue(1)}), std::vector<MLRow>(3, {MLValue(1)}),
                                          std::vector<MLRow>(4, {MLValue(1)})};
    const MLTable t(s, parts);
    EXPECT_EQ(t.numRows(), 9u);
    EXPECT_EQ(t.numCols(), 1u);
}

TEST(Reduce, Examples) {
    const auto s = Schema::ofKinds({ValueKind::Int});
    const auto one = MLTable::fromRows(s, {{MLValue(7)}}, 3);
    EXPECT_EQ(one.reduce(sumInts), (MLRow{MLValue(7)}));
    const auto t = MLTable::fromRows(s, {{MLValue(1)}, {MLValue(2)}, {MLValue(3)}}, 2);
    EXPECT_EQ(t.reduce(sumInts), (MLRow{MLValue(6)}));
    EXPECT_THROW(MLTable::empty(s).reduce(sumInts), EmptyTableError);
    EXPECT_THROW(MLTable::fromRows(s, {{MLValue()}}, 1).reduce(sumInts), SchemaError);
}

TEST(Reduce, IntegerSumIsPartitionIndependent) {
    std::mt19937_64 rng(10);
    const auto kinds = std::vector<ValueKind>{ValueKind::Int, ValueKind::Int};
    const auto rows = oracle::randomRows(rng, kinds, 500);
    const auto base = MLTable::fromRows(Schema::ofKinds(kinds), rows, 1).reduce(sumInts);
    for (std::size_t p : {2, 3, 7, 16, 500, 600}) {
        EXPECT_EQ(MLTable::fromRows(Schema::ofKinds(kinds), rows, p).reduce(sumInts), base);
    }
}

TEST(Reduce, ScalarSumMatchesSequentialFold) {
    std::mt19937_64 rng(11);
    const auto kinds = std::vector<ValueKind>{ValueKind::Scalar};
    const auto rows = oracle::randomRows(rng, kinds, 100000);
    double fold = 0.0;
    for (const auto& r : rows) fold += r[0].asScalar();
    for (std::size_t p : {1, 2, 4, 8, 13}) {
        const double got = MLTable::fromRows(Schema::ofKinds(kinds), rows, p).reduce(sumScalars)[0].asScalar();
        EXPECT_LE(std::abs(got - fold), 1e-9 * std::abs(fold));
    }
}

TEST(ReduceByKey, Examples) {
    const auto s = Schema::ofKinds({ValueKind::Int, ValueKind::Int});
    const auto t = MLTable::fromRows(s, {{MLValue(2), MLValue(5)}, {MLValue(1), MLValue(3)}, {MLValue(1), MLValue(4)}},
                                     2);
    EXPECT_EQ(t.reduceByKey(0, sumInts).rows(),
              (std::vector<MLRow>{{MLValue(1), MLValue(7)}, {MLValue(2), MLValue(5)}}));
    const auto distinct = MLTable::fromRows(s, {{MLValue(1), MLValue(1)}, {MLValue(2), MLValue(2)}}, 1);
    EXPECT_EQ(distinct.reduceByKey(0, sumInts).numRows(), 2u);
    EXPECT_THROW(MLTable::empty(s).reduceByKey(0, sumInts), EmptyTableError);
    EXPECT_THROW(t.reduceByKey(5, sumInts), IndexError);
}

TEST(ReduceByKey, MatchesGroupThenFoldOracle) {
    std::mt19937_64 rng(12);
    for (int trial = 0; trial < 40; ++trial) {
        const std::vector<ValueKind> kinds{ValueKind::Int, ValueKind::String, ValueKind::Int};
        auto rows = oracle::randomRows(rng, kinds, 1 + rng() % 150);
        const auto t = MLTable::fromRows(Schema::ofKinds(kinds), rows, 1 + rng() % 6);
        auto sumLast = [](const MLRow& a, const MLRow& b) {
            return MLRow{MLValue(a[0].asInt() + b[0].asInt()), MLValue(a[1].asInt() + b[1].asInt())};
        };
        EXPECT_EQ(t.reduceByKey(1, sumLast).rows(), oracle::reduceByKeyRows(rows, 1, sumLast));
    }
}

TEST(MatrixBatchMap, Examples) {
    std::mt19937_64 rng(13);
    const auto t = MLNumericTable::fromMatrix(oracle::randomDense(rng, 30, 4), 4);
    EXPECT_EQ(t.matrixBatchMap([](const LocalMatrix& m) { return m; }), t);
    const auto ones = t.matrixBatchMap([](const LocalMatrix& m) { return concatCols(m, LocalMatrix(m.rows(), 1, 1.0)); });
    EXPECT_EQ(ones.numCols(), 5u);
    EXPECT_EQ(ones.numRows(), 30u);
    EXPECT_THROW(t.matrixBatchMap([](const LocalMatrix& m) { return LocalMatrix(m.rows(), m.rows() == 7 ? 1 : 2); }),
                 SchemaError);
}

TEST(MatrixBatchMap, PartitionLocalCentering) {
    std::mt19937_64 rng(14);
    const auto x = oracle::randomDense(rng, 37, 3);
    const std::size_t parts = 4;
    const auto t = MLNumericTable::fromMatrix(x, parts);
    const auto centered = t.matrixBatchMap([](const LocalMatrix& m) {
        LocalMatrix out = m;
        for (std::size_t j = 0; j < m.cols(); ++j) {
            double mean = 0.0;
            for (std::size_t i = 0; i < m.rows(); ++i) mean += m.get(i, j);
            mean /= static_cast<double>(m.rows());
            for (std::size_t i = 0; i < m.rows(); ++i) out(i, j) -= mean;
        }
        return out;
    });
    // Oracle: contiguous chunks p*n/P .. (p+1)*n/P, centred column by column.
    const auto grid = oracle::toGrid(x);
    for (std::size_t p = 0; p < parts; ++p) {
        const std::size_t lo = p * 37 / parts, hi = (p + 1) * 37 / parts;
        for (std::size_t j = 0; j < 3; ++j) {
            long double mean = 0.0L;
            for (std::size_t i = lo; i < hi; ++i) mean += grid[i][j];
            mean /= static_cast<long double>(hi - lo);
            for (std::size_t i = lo; i < hi; ++i)
                EXPECT_NEAR(centered.row(i)[j], static_cast<double>(grid[i][j] - mean), 1e-12);
        }
    }
}

TEST(ToNumeric, CastsAndErrors) {
    const auto s = Schema::ofKinds({ValueKind::Int, ValueKind::Scalar});
    const auto t = MLTable::fromRows(s, {{MLValue(1), MLValue(0.5)}, {MLValue(2), MLValue(1.5)}}, 2);
    const auto n = t.toNumeric();
    EXPECT_EQ(n.toMatrix(), LocalMatrix::fromRows({{1.0, 0.5}, {2.0, 1.5}}));
    EXPECT_EQ(n.schema()[0].kind, ValueKind::Scalar);

    const auto withEmpty = MLTable::fromRows(s, {{MLValue(1), MLValue(0.5)}, {MLValue(2), MLValue()}}, 2);
    try {
        withEmpty.toNumeric();
        FAIL() << "expected CastError";
    } catch (const CastError& e) {
        EXPECT_EQ(e.row(), 1u);
        EXPECT_EQ(e.col(), 1u);
    }
    EXPECT_THROW(MLTable::empty(intString()).toNumeric(), CastError);
}

TEST(MLTableInvariants, RandomOperationSequencesConform) {
    std::mt19937_64 rng(15);
    for (int trial = 0; trial < 40; ++trial) {
        const auto kinds = oracle::randomKinds(rng, 1 + rng() % 5);
        auto t = randomTable(rng, kinds, rng() % 60, 0.1);
        for (int step = 0; step < 8; ++step) {
            // Keep self-joins small.
            if (t.numRows() > 100) {
                auto rows = t.rows();
                rows.resize(100);
                t = MLTable::fromRows(t.schema(), std::move(rows), t.partitionCount());
            }
            switch (rng() % 5) {
                case 0: {
                    std::vector<std::size_t> cols(1 + rng() % t.numCols());
                    for (auto& c : cols) c = rng() % t.numCols();
                    t = t.project(cols);
                    break;
                }
                case 1: t = t.filter([](const MLRow& r) { return r[0].hash() % 3 != 0; }); break;
                case 2: t = unionAll(t, t); break;
                case 3: t = t.map([](MLRow r) { std::rotate(r.begin(), r.begin() + 1, r.end()); return r; }); break;
                default: t = t.join(t.project({0}), {0}); break;
            }
            ASSERT_TRUE(oracle::conformsByHand(t));
        }
    }
}

TEST(MLTableInvariants, PooledEvaluationMatchesSerial) {
    std::mt19937_64 rng(16);
    WorkerPool pool(4);
    const auto t = randomTable(rng, {ValueKind::Int, ValueKind::Scalar}, 300);
    auto pred = [](const MLRow& r) { return r[1].asScalar() < 0.7; };
    EXPECT_EQ(t.filter(pred, &pool), t.filter(pred));
    auto f = [](MLRow r) { r.emplace_back(r[0].asInt() * 2); return r; };
    EXPECT_EQ(t.map(f, &pool), t.map(f));
    EXPECT_EQ(t.join(t, {0}, &pool), t.join(t, {0}));
}
