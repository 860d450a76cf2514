// SPDX-License-Identifier: MIT
#include "bht/tensor.hpp"
#include "test_support.hpp"

#include <gtest/gtest.h>

using namespace bht;
using bht::testing::iota_tensor;
using bht::testing::multi_index;
using bht::testing::random_matrix;
using bht::testing::random_tensor;
using bht::testing::rel_diff;

namespace {

// Unfolding by enumeration of every element: column = sum_{k != n} i_k J_k,
// J_k = prod_{l < k, l != n} I_l.
Matrix oracle_unfold(const DenseTensor& t, std::size_t n) {
    const Shape& s = t.shape();
    std::size_t cols = t.size() / s[n];
    Matrix m(static_cast<Eigen::Index>(s[n]), static_cast<Eigen::Index>(cols));
    for (std::size_t f = 0; f < t.size(); ++f) {
        const auto idx = multi_index(f, s);
        std::size_t col = 0;
        for (std::size_t k = 0; k < s.size(); ++k) {
            if (k == n) continue;
            std::size_t jk = 1;
            for (std::size_t l = 0; l < k; ++l)
                if (l != n) jk *= s[l];
            col += idx[k] * jk;
        }
        m(static_cast<Eigen::Index>(idx[n]), static_cast<Eigen::Index>(col)) = t[f];
    }
    return m;
}

}  // namespace

TEST(DenseTensor, RejectsBadShapes) {
    EXPECT_THROW(DenseTensor(Shape{}), ShapeError);
    EXPECT_THROW(DenseTensor(Shape{2, 0}), ShapeError);
    EXPECT_THROW(DenseTensor(Shape{2, 2}, std::vector<double>(3)), ShapeError);
}

TEST(DenseTensor, ElementAccessIsFirstIndexFastest) {
    const DenseTensor t = iota_tensor({2, 3, 4});
    EXPECT_EQ(t(0, 0, 0), 1.0);
    EXPECT_EQ(t(1, 0, 0), 2.0);
    EXPECT_EQ(t(0, 1, 0), 3.0);
    EXPECT_EQ(t(0, 0, 1), 7.0);
    EXPECT_EQ(t(1, 2, 3), 24.0);
    EXPECT_THROW(t(2, 0, 0), ShapeError);
}

TEST(Unfold, MatrixModesAreIdentityAndTranspose) {
    const DenseTensor t(Shape{2, 2}, {1, 2, 3, 4});
    Matrix m0(2, 2), m1(2, 2);
    m0 << 1, 3, 2, 4;
    m1 << 1, 2, 3, 4;
    EXPECT_EQ(unfold(t, 0), m0);
    EXPECT_EQ(unfold(t, 1), m1);
}

TEST(Unfold, ThirdOrderModeTwoMatchesEnumeration) {
    const DenseTensor t = iota_tensor({2, 2, 2});
    Matrix expected(2, 4);
    expected << 1, 2, 5, 6, 3, 4, 7, 8;  // frozen from oracle_unfold
    EXPECT_EQ(oracle_unfold(t, 1), expected);
    EXPECT_EQ(unfold(t, 1), expected);
}

TEST(Unfold, AgreesWithOracleOnRandomShapes) {
    std::mt19937_64 rng(11);
    for (const Shape& s : {Shape{3, 4, 5}, Shape{2, 1, 3, 2}, Shape{5}, Shape{1, 7}}) {
        const DenseTensor t = random_tensor(s, rng);
        for (std::size_t n = 0; n < s.size(); ++n) EXPECT_EQ(unfold(t, n), oracle_unfold(t, n));
    }
}

TEST(Unfold, ModeOutOfRange) { EXPECT_THROW(unfold(iota_tensor({2, 2}), 2), ShapeError); }

TEST(Fold, Examples) {
    Matrix m(2, 2);
    m << 1, 2, 3, 4;
    EXPECT_EQ(fold(m, 1, {2, 2}), DenseTensor(Shape{2, 2}, {1, 2, 3, 4}));

    Matrix u(2, 4);
    u << 1, 2, 5, 6, 3, 4, 7, 8;
    EXPECT_EQ(fold(u, 1, {2, 2, 2}), iota_tensor({2, 2, 2}));
    EXPECT_THROW(fold(u, 0, {2, 2, 3}), ShapeError);
}

TEST(Fold, RoundTripIsExactForEveryMode) {
    std::mt19937_64 rng(3);
    for (int trial = 0; trial < 20; ++trial) {
        std::uniform_int_distribution<std::size_t> ext(1, 5), ord(1, 4);
        Shape s(ord(rng));
        for (auto& e : s) e = ext(rng);
        const DenseTensor t = random_tensor(s, rng);
        for (std::size_t n = 0; n < s.size(); ++n) EXPECT_EQ(fold(unfold(t, n), n, s), t);
    }
}

TEST(ModeProduct, IdentityAndSummation) {
    std::mt19937_64 rng(5);
    const DenseTensor t = random_tensor({3, 4, 2}, rng);
    for (std::size_t n = 0; n < 3; ++n) EXPECT_EQ(mode_product(t, Matrix::Identity(t.extent(n), t.extent(n)), n), t);

    const DenseTensor s = mode_product(t, Matrix::Ones(1, 4), 1);
    ASSERT_EQ(s.shape(), (Shape{3, 1, 2}));
    for (std::size_t i = 0; i < 3; ++i)
        for (std::size_t k = 0; k < 2; ++k) {
            double sum = 0.0;
            for (std::size_t j = 0; j < 4; ++j) sum += t(i, j, k);
            EXPECT_NEAR(s(i, 0, k), sum, 1e-12);
        }
}

TEST(ModeProduct, MatchesTripleLoopContraction) {
    std::mt19937_64 rng(7);
    const DenseTensor t = random_tensor({3, 4, 2}, rng);
    const Matrix a = random_matrix(5, 4, rng);
    const DenseTensor y = mode_product(t, a, 1);
    ASSERT_EQ(y.shape(), (Shape{3, 5, 2}));
    for (std::size_t i = 0; i < 3; ++i)
        for (std::size_t r = 0; r < 5; ++r)
            for (std::size_t k = 0; k < 2; ++k) {
                double acc = 0.0;
                for (std::size_t j = 0; j < 4; ++j) acc += a(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(j)) * t(i, j, k);
                EXPECT_NEAR(y(i, r, k), acc, 1e-12);
            }
    EXPECT_THROW(mode_product(t, a, 0), ShapeError);
}

TEST(ModeProduct, Properties) {
    std::mt19937_64 rng(9);
    for (int trial = 0; trial < 10; ++trial) {
        const DenseTensor t = random_tensor({3, 4, 5}, rng);
        const Matrix a = random_matrix(2, 3, rng);
        const Matrix b = random_matrix(6, 5, rng);
        // distinct modes commute
        const DenseTensor ab = mode_product(mode_product(t, a, 0), b, 2);
        const DenseTensor ba = mode_product(mode_product(t, b, 2), a, 0);
        EXPECT_LT(rel_diff(ab, ba), 1e-10);
        // unfolding identity
        EXPECT_LT(rel_diff(unfold(mode_product(t, a, 0), 0), Matrix(a * unfold(t, 0))), 1e-10);
    }
}

TEST(KronChainSkip, Degenerate) {
    const std::vector<Matrix> ones{Matrix::Identity(1, 1), Matrix::Identity(1, 1), Matrix::Identity(1, 1)};
    EXPECT_EQ(kron_chain_skip(ones, 1), Matrix::Identity(1, 1));

    std::mt19937_64 rng(2);
    const std::vector<Matrix> two{random_matrix(2, 3, rng), random_matrix(4, 2, rng)};
    EXPECT_EQ(kron_chain_skip(two, 1), two[0]);
    EXPECT_THROW(kron_chain_skip(std::vector<Matrix>{two[0]}, 0), ShapeError);
    EXPECT_THROW(kron_chain_skip(two, 2), ShapeError);
}

TEST(KronChainSkip, MatchesDefinitionByEnumeration) {
    std::mt19937_64 rng(4);
    const std::vector<Matrix> f{random_matrix(2, 2, rng), random_matrix(2, 2, rng), random_matrix(2, 2, rng)};
    // skip mode 1: U3 (x) U1, (A (x) B)(i, j) = A(i / 2, j / 2) B(i % 2, j % 2)
    const Matrix k = kron_chain_skip(f, 1);
    ASSERT_EQ(k.rows(), 4);
    ASSERT_EQ(k.cols(), 4);
    for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 4; ++j) EXPECT_DOUBLE_EQ(k(i, j), f[2](i / 2, j / 2) * f[0](i % 2, j % 2));
    // no skip of the middle: U3 (x) U2 (x) U1 minus mode 0 -> U3 (x) U2
    const Matrix k0 = kron_chain_skip(f, 0);
    for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 4; ++j) EXPECT_DOUBLE_EQ(k0(i, j), f[2](i / 2, j / 2) * f[1](i % 2, j % 2));
}

TEST(Tucker, UnfoldingIdentityUnderKroneckerOrder) {
    std::mt19937_64 rng(21);
    const DenseTensor core = random_tensor({2, 3, 2}, rng);
    const std::vector<Matrix> u{random_matrix(4, 2, rng), random_matrix(5, 3, rng), random_matrix(3, 2, rng)};
    const DenseTensor x = tucker_compose(core, u);
    for (std::size_t n = 0; n < 3; ++n) {
        const Matrix rhs = u[n] * unfold(core, n) * kron_chain_skip(u, n).transpose();
        EXPECT_LT(rel_diff(unfold(x, n), rhs), 1e-10) << "mode " << n;
    }
}

TEST(Norms, Examples) {
    EXPECT_EQ(frobenius_norm(DenseTensor(Shape{2, 3})), 0.0);
    EXPECT_DOUBLE_EQ(frobenius_norm(DenseTensor::filled({2, 3}, 1.0)), std::sqrt(6.0));
    std::mt19937_64 rng(1);
    const DenseTensor t = random_tensor({3, 3, 2}, rng);
    const double n = frobenius_norm(t);
    EXPECT_NEAR(inner(t, t), n * n, 1e-12);
    EXPECT_THROW(inner(t, DenseTensor(Shape{3, 3})), ShapeError);
}

TEST(TimeAxis, SplitAndStackRoundTrip) {
    const DenseTensor x = iota_tensor({2, 3, 4});
    const TensorSeries s = split_last(x);
    ASSERT_EQ(s.size(), 4u);
    EXPECT_EQ(s[1], DenseTensor(Shape{2, 3}, {7, 8, 9, 10, 11, 12}));
    EXPECT_EQ(stack_last(s), x);
    EXPECT_EQ(leading(x, 2), stack_last(std::span(s).first(2)));
}
