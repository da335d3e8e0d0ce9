#include "inspl/matrix.hpp"

#include <gtest/gtest.h>

#include "inspl/rng.hpp"

using namespace inspl;

namespace {

Matrixf random_matrix(std::size_t r, std::size_t c, Rng& rng) {
  Matrixf m(r, c);
  for (auto& v : m.raw()) v = static_cast<float>(rng.next_uniform(1.0));
  return m;
}

// plain triple loop, the independent route
Matrixf naive_matmul(const Matrixf& a, const Matrixf& b) {
  Matrixf c(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t k = 0; k < a.cols(); ++k)
      for (std::size_t j = 0; j < b.cols(); ++j)
        c(i, j) += a(i, k) * b(k, j);
  return c;
}

}  // namespace

TEST(Matrix, MatmulIdentity) {
  Rng rng(1);
  const Matrixf a = random_matrix(5, 7, rng);
  EXPECT_EQ(matmul(a, Matrixf::identity(7)), a);
  EXPECT_EQ(matmul(Matrixf::identity(5), a), a);
}

TEST(Matrix, MatmulMatchesNaiveOrder) {
  Rng rng(2);
  for (int trial = 0; trial < 10; ++trial) {
    const auto r = 1 + rng.next_below(20);
    const auto k = 1 + rng.next_below(20);
    const auto c = 1 + rng.next_below(20);
    const Matrixf a = random_matrix(r, k, rng);
    const Matrixf b = random_matrix(k, c, rng);
    EXPECT_EQ(matmul(a, b), naive_matmul(a, b));
  }
}

TEST(Matrix, TransposedProducts) {
  Rng rng(3);
  const Matrixf a = random_matrix(9, 4, rng);
  const Matrixf b = random_matrix(9, 6, rng);
  const Matrixf c = random_matrix(5, 4, rng);
  // A^T B via explicit transpose, same k-order as the fused kernel
  EXPECT_EQ(matmul_at_b(a, b), naive_matmul(transpose(a), b));
  const Matrixf abt = matmul_a_bt(a, c);
  const Matrixf ref = matmul(a, transpose(c));
  ASSERT_TRUE(abt.same_shape(ref));
  for (std::size_t i = 0; i < ref.size(); ++i)
    EXPECT_NEAR(abt.data()[i], ref.data()[i], 1e-5f);
}

TEST(Matrix, ShapeMismatchThrows) {
  Matrixf a(2, 3), b(4, 2);
  EXPECT_THROW(matmul(a, b), Error);
}

TEST(Matrix, LargeMatmulIsDeterministic) {
  // big enough that parallel_for actually splits across workers
  Rng rng(4);
  const Matrixf a = random_matrix(700, 40, rng);
  const Matrixf b = random_matrix(40, 30, rng);
  const Matrixf first = matmul(a, b);
  for (int i = 0; i < 3; ++i) EXPECT_EQ(matmul(a, b), first);
}

TEST(Matrix, ColMeanUsesAllRows) {
  Matrixf m(3, 2);
  m(0, 0) = 1; m(0, 1) = -2;
  m(1, 0) = 2; m(1, 1) = 0;
  m(2, 0) = 3; m(2, 1) = 2;
  const auto mean = col_mean(m);
  EXPECT_DOUBLE_EQ(mean[0], 2.0);
  EXPECT_DOUBLE_EQ(mean[1], 0.0);
}

TEST(Matrix, AllFinite) {
  Matrixf m(2, 2, 1.0f);
  EXPECT_TRUE(m.all_finite());
  m(1, 1) = std::numeric_limits<float>::infinity();
  EXPECT_FALSE(m.all_finite());
}
