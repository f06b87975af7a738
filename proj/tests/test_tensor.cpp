#include "cata/tensor.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "helpers.hpp"

using cata::DenseTensor;
using cata::Matrix;
using cata::Rng;

TEST(DenseTensor, ValidatesShapeEagerly) {
    EXPECT_THROW(DenseTensor({}), std::invalid_argument);
    EXPECT_THROW(DenseTensor({2, 0, 3}), std::invalid_argument);
    EXPECT_THROW(DenseTensor({2, 3}, {1.0, 2.0}), std::invalid_argument);
    EXPECT_THROW(DenseTensor(std::vector<std::size_t>(9, 1)), std::invalid_argument);
    DenseTensor t({2, 3});
    EXPECT_EQ(t.size(), 6u);
    EXPECT_EQ(t.modes(), 2u);
}

TEST(Matrix, ValidatesShape) {
    EXPECT_THROW(Matrix(0, 3), std::invalid_argument);
    EXPECT_THROW(Matrix(2, 2, {1.0}), std::invalid_argument);
    Matrix m(2, 3);
    EXPECT_EQ(m.values().size(), 6u);
}

TEST(OuterProduct, MatchesElementwiseDefinition) {
    const DenseTensor a = cata::outer_product({{1.0}, {1.0, 2.0}});
    EXPECT_EQ(a.shape(), (std::vector<std::size_t>{1, 2}));
    EXPECT_EQ(a.values(), (std::vector<double>{1.0, 2.0}));

    // Hand-checked per the elementwise definition.
    const DenseTensor b = cata::outer_product({{2.0, 3.0}, {1.0, 0.0}});
    EXPECT_EQ(b.values(), (std::vector<double>{2.0, 0.0, 3.0, 0.0}));

    const DenseTensor z = cata::outer_product({{0.0, 0.0}, {5.0, -1.0, 2.0}});
    for (double x : z.values()) EXPECT_EQ(x, 0.0);

    EXPECT_THROW(cata::outer_product({}), std::invalid_argument);
    EXPECT_THROW(cata::outer_product({{1.0}, {}}), std::invalid_argument);
}

TEST(OuterProduct, RandomAgainstIndexOracle) {
    Rng rng(11);
    for (int trial = 0; trial < 20; ++trial) {
        std::vector<std::vector<double>> vs;
        std::vector<std::size_t> shape;
        const std::size_t n_modes = 1 + rng.index(3);
        for (std::size_t m = 0; m < n_modes; ++m) {
            vs.push_back(testutil::random_vector(rng, 1 + rng.index(4)));
            shape.push_back(vs.back().size());
        }
        const DenseTensor t = cata::outer_product(vs);
        std::vector<std::size_t> idx(shape.size(), 0);
        do {
            double expected = 1.0;
            for (std::size_t m = 0; m < n_modes; ++m) expected *= vs[m][idx[m]];
            EXPECT_DOUBLE_EQ(t[testutil::flat_index(shape, idx)], expected);
        } while (testutil::next_index(shape, idx));
    }
}

TEST(InnerProduct, FrobeniusAndBruteForce) {
    Rng rng(7);
    const DenseTensor x = testutil::random_tensor(rng, {2, 3, 2});
    double frob = 0.0;
    for (double v : x.values()) frob += v * v;
    EXPECT_NEAR(cata::inner_product(x, x), frob, 1e-12);

    const DenseTensor y = testutil::random_tensor(rng, {2, 3, 2});
    double brute = 0.0;
    for (std::size_t i = 0; i < 2; ++i) {
        for (std::size_t j = 0; j < 3; ++j) {
            for (std::size_t k = 0; k < 2; ++k) {
                brute += x[(i * 3 + j) * 2 + k] * y[(i * 3 + j) * 2 + k];
            }
        }
    }
    EXPECT_NEAR(cata::inner_product(x, y), brute, 1e-12);

    EXPECT_THROW(cata::inner_product(x, testutil::random_tensor(rng, {2, 3})),
                 std::invalid_argument);
}

TEST(InnerProduct, RankOneFactorsIntoDotProducts) {
    Rng rng(13);
    for (int trial = 0; trial < 50; ++trial) {
        std::vector<std::vector<double>> xs, ys;
        const std::size_t n_modes = 1 + rng.index(3);
        for (std::size_t m = 0; m < n_modes; ++m) {
            const std::size_t len = 1 + rng.index(4);
            xs.push_back(testutil::random_vector(rng, len));
            ys.push_back(testutil::random_vector(rng, len));
        }
        double expected = 1.0;
        for (std::size_t m = 0; m < n_modes; ++m) {
            double dot = 0.0;
            for (std::size_t i = 0; i < xs[m].size(); ++i) dot += xs[m][i] * ys[m][i];
            expected *= dot;
        }
        const double got = cata::inner_product(cata::outer_product(xs), cata::outer_product(ys));
        EXPECT_NEAR(got, expected, 1e-12 * std::max(1.0, std::abs(expected)));
    }
}

TEST(Kronecker, ScalarAndBlockCases) {
    Rng rng(3);
    const Matrix y = testutil::random_matrix(rng, 2, 3);
    const Matrix one(1, 1, {1.0});
    EXPECT_EQ(cata::kronecker(one, y).values(), y.values());

    const Matrix two(1, 1, {2.0});
    const Matrix scaled = cata::kronecker(two, y);
    for (std::size_t i = 0; i < y.values().size(); ++i) {
        EXPECT_DOUBLE_EQ(scaled.values()[i], 2.0 * y.values()[i]);
    }

    // Direct evaluation of the block formula.
    const Matrix a(2, 2, {1, 2, 3, 4});
    const Matrix b(2, 2, {0, 1, 1, 0});
    const Matrix k = cata::kronecker(a, b);
    const std::vector<double> expected{0, 1, 0, 2, 1, 0, 2, 0, 0, 3, 0, 4, 3, 0, 4, 0};
    EXPECT_EQ(k.values(), expected);
    EXPECT_EQ(k.rows(), 4u);
    EXPECT_EQ(k.cols(), 4u);
}

TEST(Kronecker, MixedProductProperty) {
    Rng rng(17);
    for (int trial = 0; trial < 30; ++trial) {
        const std::size_t i = 1 + rng.index(3), j = 1 + rng.index(3), k = 1 + rng.index(3);
        const std::size_t p = 1 + rng.index(3), q = 1 + rng.index(3), r = 1 + rng.index(3);
        const Matrix a = testutil::random_matrix(rng, i, j);
        const Matrix b = testutil::random_matrix(rng, p, q);
        const Matrix c = testutil::random_matrix(rng, j, k);
        const Matrix d = testutil::random_matrix(rng, q, r);
        const Matrix lhs = testutil::matmul(cata::kronecker(a, b), cata::kronecker(c, d));
        const Matrix rhs = cata::kronecker(testutil::matmul(a, c), testutil::matmul(b, d));
        EXPECT_LT(testutil::max_rel_diff(lhs.values(), rhs.values()), 1e-10);
    }
}

TEST(KhatriRao, ColumnwiseKronecker) {
    Rng rng(5);
    const Matrix y = testutil::random_matrix(rng, 3, 2);
    const Matrix ones(1, 2, {1.0, 1.0});
    EXPECT_EQ(cata::khatri_rao(ones, y).values(), y.values());

    const Matrix a(2, 1, {1, 2});
    const Matrix b(2, 1, {3, 4});
    EXPECT_EQ(cata::khatri_rao(a, b).values(), (std::vector<double>{3, 4, 6, 8}));

    const Matrix zero(2, 2);
    const Matrix x = testutil::random_matrix(rng, 2, 2);
    for (double v : cata::khatri_rao(x, zero).values()) EXPECT_EQ(v, 0.0);

    EXPECT_THROW(cata::khatri_rao(Matrix(2, 2), Matrix(2, 3)), std::invalid_argument);
}

TEST(ModeNProduct, IdentityAndSums) {
    Rng rng(23);
    const DenseTensor x = testutil::random_tensor(rng, {2, 3, 4});
    for (std::size_t n = 0; n < 3; ++n) {
        const DenseTensor y = cata::mode_n_product(x, Matrix::identity(x.shape()[n]), n);
        EXPECT_EQ(y.shape(), x.shape());
        EXPECT_EQ(y.values(), x.values());  // elementwise equality, mode-n identity
    }

    // A row of ones sums out the mode.
    const Matrix ones(1, 3, {1.0, 1.0, 1.0});
    const DenseTensor sums = cata::mode_n_product(x, ones, 1);
    EXPECT_EQ(sums.shape(), (std::vector<std::size_t>{2, 1, 4}));
    for (std::size_t i = 0; i < 2; ++i) {
        for (std::size_t k = 0; k < 4; ++k) {
            double expected = 0.0;
            for (std::size_t j = 0; j < 3; ++j) expected += x[(i * 3 + j) * 4 + k];
            EXPECT_NEAR(sums[i * 4 + k], expected, 1e-12);
        }
    }

    EXPECT_THROW(cata::mode_n_product(x, Matrix(5, 2), 1), std::invalid_argument);
    EXPECT_THROW(cata::mode_n_product(x, Matrix(5, 3), 3), std::invalid_argument);
}

TEST(ModeNProduct, MatchesDefinitionOracle) {
    Rng rng(29);
    const DenseTensor x = testutil::random_tensor(rng, {2, 3, 4});
    const Matrix u = testutil::random_matrix(rng, 5, 3);
    const DenseTensor got = cata::mode_n_product(x, u, 1);
    const DenseTensor expected = testutil::mode_n_oracle(x, u, 1);
    EXPECT_EQ(got.shape(), expected.shape());
    EXPECT_LT(testutil::max_abs_diff(got.values(), expected.values()), 1e-12);
}

TEST(ModeNProduct, DistinctModesCommute) {
    Rng rng(31);
    for (int trial = 0; trial < 30; ++trial) {
        const std::vector<std::size_t> shape{1 + rng.index(4), 1 + rng.index(4),
                                             1 + rng.index(4)};
        const DenseTensor x = testutil::random_tensor(rng, shape);
        const Matrix a = testutil::random_matrix(rng, 1 + rng.index(4), shape[0]);
        const Matrix b = testutil::random_matrix(rng, 1 + rng.index(4), shape[2]);
        const DenseTensor ab = cata::mode_n_product(cata::mode_n_product(x, a, 0), b, 2);
        const DenseTensor ba = cata::mode_n_product(cata::mode_n_product(x, b, 2), a, 0);
        EXPECT_EQ(ab.shape(), ba.shape());
        EXPECT_LT(testutil::max_abs_diff(ab.values(), ba.values()), 1e-12);
    }
}

TEST(Matricize, SingleModeAndRankOne) {
    const DenseTensor v({3}, {1.0, 2.0, 3.0});
    const Matrix m = cata::matricize(v, 0);
    EXPECT_EQ(m.rows(), 3u);
    EXPECT_EQ(m.cols(), 1u);
    EXPECT_EQ(m.values(), v.values());

    const std::vector<double> u{2.0, -1.0};
    const std::vector<double> w{1.0, 0.5, 3.0};
    const Matrix uv = cata::matricize(cata::outer_product({u, w}), 0);
    for (std::size_t i = 0; i < 2; ++i) {
        for (std::size_t j = 0; j < 3; ++j) EXPECT_DOUBLE_EQ(uv(i, j), u[i] * w[j]);
    }

    EXPECT_THROW(cata::matricize(v, 1), std::invalid_argument);
}

TEST(Matricize, IndexMapOracle) {
    Rng rng(37);
    const std::vector<std::size_t> shape{2, 3, 2};
    const DenseTensor x = testutil::random_tensor(rng, shape);
    const Matrix m = cata::matricize(x, 1);
    EXPECT_EQ(m.rows(), 3u);
    EXPECT_EQ(m.cols(), 4u);
    // Exhaustive check: column index packs the remaining modes with the
    // lower mode varying faster, so col = i0 + 2 * i2 here.
    std::vector<std::size_t> idx(3, 0);
    do {
        const std::size_t col = idx[0] + 2 * idx[2];
        EXPECT_EQ(m(idx[1], col), x[testutil::flat_index(shape, idx)]);
    } while (testutil::next_index(shape, idx));
}

TEST(TuckerReconstruct, IdentityZeroAndOracle) {
    Rng rng(41);
    const DenseTensor g = testutil::random_tensor(rng, {2, 3, 2});
    const std::vector<Matrix> eyes{Matrix::identity(2), Matrix::identity(3),
                                   Matrix::identity(2)};
    EXPECT_EQ(cata::tucker_reconstruct(g, eyes).values(), g.values());

    const DenseTensor zero({2, 3, 2});
    std::vector<Matrix> factors{testutil::random_matrix(rng, 4, 2),
                                testutil::random_matrix(rng, 2, 3),
                                testutil::random_matrix(rng, 3, 2)};
    for (double v : cata::tucker_reconstruct(zero, factors).values()) EXPECT_EQ(v, 0.0);

    const DenseTensor got = cata::tucker_reconstruct(g, factors);
    const DenseTensor expected = testutil::tucker_oracle(g, factors);
    EXPECT_EQ(got.shape(), expected.shape());
    EXPECT_LT(testutil::max_rel_diff(got.values(), expected.values()), 1e-12);

    factors[1] = Matrix(2, 4);
    EXPECT_THROW(cata::tucker_reconstruct(g, factors), std::invalid_argument);
    EXPECT_THROW(cata::tucker_reconstruct(g, {Matrix(2, 2)}), std::invalid_argument);
}

// Kolda-style unfolding identity tying matricize, mode products, and the
// reverse-order Kronecker together; this pins the column-ordering convention.
TEST(TuckerReconstruct, MatricizedIdentity) {
    Rng rng(43);
    for (int trial = 0; trial < 40; ++trial) {
        const std::size_t n_modes = 2 + rng.index(2);
        std::vector<std::size_t> core_shape, out_shape;
        std::vector<Matrix> factors;
        for (std::size_t m = 0; m < n_modes; ++m) {
            core_shape.push_back(1 + rng.index(4));
            out_shape.push_back(1 + rng.index(4));
            factors.push_back(testutil::random_matrix(rng, out_shape[m], core_shape[m]));
        }
        const DenseTensor g = testutil::random_tensor(rng, core_shape);
        const DenseTensor full = cata::tucker_reconstruct(g, factors);
        for (std::size_t n = 0; n < n_modes; ++n) {
            Matrix kron(1, 1, {1.0});
            for (std::size_t m = n_modes; m-- > 0;) {
                if (m == n) continue;
                kron = cata::kronecker(kron, factors[m]);
            }
            const Matrix rhs = testutil::matmul(
                testutil::matmul(factors[n], cata::matricize(g, n)), testutil::transpose(kron));
            const Matrix lhs = cata::matricize(full, n);
            EXPECT_LT(testutil::max_rel_diff(lhs.values(), rhs.values()), 1e-10);
        }
    }
}

TEST(Contractions, AgreeWithModeProducts) {
    Rng rng(47);
    for (int trial = 0; trial < 30; ++trial) {
        const std::size_t n_modes = 1 + rng.index(3);
        std::vector<std::size_t> shape;
        std::vector<std::vector<double>> vecs;
        for (std::size_t m = 0; m < n_modes; ++m) {
            shape.push_back(1 + rng.index(4));
            vecs.push_back(testutil::random_vector(rng, shape.back()));
        }
        const DenseTensor g = testutil::random_tensor(rng, shape);

        // Full contraction vs sequential 1-row mode products.
        DenseTensor seq = g;
        for (std::size_t m = 0; m < n_modes; ++m) {
            seq = cata::mode_n_product(seq, Matrix(1, vecs[m].size(), vecs[m]), m);
        }
        EXPECT_NEAR(cata::contract_all(g, vecs), seq.values()[0],
                    1e-12 * std::max(1.0, std::abs(seq.values()[0])));

        // Keep-one contraction vs mode products over the other modes.
        const std::size_t keep = rng.index(n_modes);
        DenseTensor partial = g;
        for (std::size_t m = 0; m < n_modes; ++m) {
            if (m == keep) continue;
            partial = cata::mode_n_product(partial, Matrix(1, vecs[m].size(), vecs[m]), m);
        }
        const auto got = cata::contract_all_but(g, vecs, keep);
        EXPECT_EQ(got.size(), shape[keep]);
        EXPECT_LT(testutil::max_rel_diff(got, partial.values()), 1e-12);
    }
}
