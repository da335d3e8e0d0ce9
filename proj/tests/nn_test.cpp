#include "inspl/nn.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace inspl;

namespace {

template <typename T>
Matrix<T> random_matrix(std::size_t r, std::size_t c, Rng& rng,
                        double half_width = 1.0) {
  Matrix<T> m(r, c);
  for (auto& v : m.raw()) v = static_cast<T>(rng.next_uniform(half_width));
  return m;
}

}  // namespace

// ---------------------------------------------------------------------------
// linear

TEST(Linear, IdentityWeightZeroBias) {
  Rng rng(7);
  const Matrixf x = random_matrix<float>(4, 3, rng);
  const Matrixf w = Matrixf::identity(3);
  const Matrixf b(1, 3);
  EXPECT_EQ(linear_forward(x, w, b), x);
}

TEST(Linear, ScalarHandCheck) {
  // x=[[1,2]], W=[[1],[1]], b=[1] -> [[4]]
  Matrixf x(1, 2);
  x(0, 0) = 1; x(0, 1) = 2;
  Matrixf w(2, 1, 1.0f);
  Matrixf b(1, 1, 1.0f);
  const Matrixf y = linear_forward(x, w, b);
  ASSERT_EQ(y.rows(), 1u);
  ASSERT_EQ(y.cols(), 1u);
  EXPECT_FLOAT_EQ(y(0, 0), 4.0f);
}

TEST(Linear, ZeroInputGivesBias) {
  Matrixf x(3, 2);
  Rng rng(8);
  const Matrixf w = random_matrix<float>(2, 1, rng);
  Matrixf b(1, 1, 3.0f);
  const Matrixf y = linear_forward(x, w, b);
  for (std::size_t i = 0; i < 3; ++i) EXPECT_FLOAT_EQ(y(i, 0), 3.0f);
}

TEST(Linear, ShapeMismatchThrows) {
  Matrixf x(2, 3), w(4, 2), b(1, 2);
  EXPECT_THROW(linear_forward(x, w, b), Error);
}

// ---------------------------------------------------------------------------
// activations

TEST(Activations, ReluClampsNegatives) {
  Matrixf x(1, 3);
  x(0, 0) = -1; x(0, 1) = 0; x(0, 2) = 2;
  const Matrixf y = relu(x);
  EXPECT_FLOAT_EQ(y(0, 0), 0.0f);
  EXPECT_FLOAT_EQ(y(0, 1), 0.0f);
  EXPECT_FLOAT_EQ(y(0, 2), 2.0f);
}

TEST(Activations, SigmoidValues) {
  EXPECT_FLOAT_EQ(sigmoid_scalar(0.0f), 0.5f);
  EXPECT_NEAR(sigmoid_scalar(1.0f), 0.731059, 1e-6);
  EXPECT_NEAR(sigmoid_scalar(1.0) + sigmoid_scalar(-1.0), 1.0, 1e-12);
}

TEST(Activations, SigmoidStrictlyInsideUnitInterval) {
  for (float x : {-200.0f, -30.0f, 0.0f, 30.0f, 200.0f}) {
    const float y = sigmoid_scalar(x);
    EXPECT_GT(y, 0.0f);
    EXPECT_LT(y, 1.0f);
  }
}

// ---------------------------------------------------------------------------
// batch norm

TEST(BatchNorm, ConstantBatchMapsToBeta) {
  Matrixf x(3, 1, 1.0f);
  Matrixf gamma(1, 1, 1.0f), beta(1, 1);
  Matrixf rm(1, 1), rv(1, 1, 1.0f);
  const auto out = batchnorm_forward(x, gamma, beta, Mode::Train, rm, rv);
  for (std::size_t i = 0; i < 3; ++i) EXPECT_FLOAT_EQ(out.y(i, 0), 0.0f);
  EXPECT_FLOAT_EQ(out.batch_mean[0], 1.0f);
  EXPECT_FLOAT_EQ(out.batch_var[0], 0.0f);
}

TEST(BatchNorm, TwoPointColumn) {
  // column [0,2]: mean 1, var 1, xhat = +-1/sqrt(1+1e-5)
  Matrixf x(2, 1);
  x(1, 0) = 2.0f;
  Matrixf gamma(1, 1, 1.0f), beta(1, 1);
  Matrixf rm(1, 1), rv(1, 1, 1.0f);
  const auto out = batchnorm_forward(x, gamma, beta, Mode::Train, rm, rv);
  EXPECT_NEAR(out.y(0, 0), -0.999995, 1e-6);
  EXPECT_NEAR(out.y(1, 0), 0.999995, 1e-6);
}

TEST(BatchNorm, AffineShiftScale) {
  Rng rng(11);
  const Matrixf x = random_matrix<float>(6, 4, rng);
  Matrixf g1(1, 4, 1.0f), b0(1, 4);
  Matrixf g2(1, 4, 2.0f), b1(1, 4, 1.0f);
  Matrixf rm(1, 4), rv(1, 4, 1.0f);
  Matrixf rm2(1, 4), rv2(1, 4, 1.0f);
  const auto base = batchnorm_forward(x, g1, b0, Mode::Train, rm, rv);
  const auto scaled = batchnorm_forward(x, g2, b1, Mode::Train, rm2, rv2);
  for (std::size_t i = 0; i < x.size(); ++i)
    EXPECT_NEAR(scaled.y.data()[i], 2.0f * base.y.data()[i] + 1.0f, 1e-5f);
}

TEST(BatchNorm, TrainOutputIsStandardized) {
  Rng rng(12);
  Matrixf x = random_matrix<float>(32, 5, rng, 3.0);
  Matrixf gamma(1, 5, 1.0f), beta(1, 5);
  Matrixf rm(1, 5), rv(1, 5, 1.0f);
  const auto out = batchnorm_forward(x, gamma, beta, Mode::Train, rm, rv);
  for (std::size_t j = 0; j < 5; ++j) {
    double mean = 0.0, var = 0.0;
    for (std::size_t i = 0; i < 32; ++i) mean += out.y(i, j);
    mean /= 32.0;
    for (std::size_t i = 0; i < 32; ++i) {
      const double d = out.y(i, j) - mean;
      var += d * d;
    }
    var /= 32.0;
    EXPECT_LT(std::abs(mean), 1e-5);
    EXPECT_LT(std::abs(var - 1.0), 1e-3);
  }
}

TEST(BatchNorm, EvalUsesRunningStats) {
  Matrixf x(1, 1, 5.0f);
  Matrixf gamma(1, 1, 1.0f), beta(1, 1);
  Matrixf rm(1, 1, 3.0f), rv(1, 1, 4.0f);
  const auto out = batchnorm_forward(x, gamma, beta, Mode::Eval, rm, rv);
  // (5-3)/sqrt(4+1e-5) ~ 1
  EXPECT_NEAR(out.y(0, 0), 1.0, 1e-5);
  EXPECT_FLOAT_EQ(rm(0, 0), 3.0f);  // untouched
  EXPECT_FLOAT_EQ(rv(0, 0), 4.0f);
}

TEST(BatchNorm, EmptyBatchThrows) {
  Matrixf x(0, 2), gamma(1, 2, 1.0f), beta(1, 2);
  Matrixf rm(1, 2), rv(1, 2, 1.0f);
  EXPECT_THROW(batchnorm_forward(x, gamma, beta, Mode::Train, rm, rv), Error);
}

// ---------------------------------------------------------------------------
// adam

TEST(Adam, ZeroGradientLeavesParams) {
  Matrixf p(2, 2, 1.5f);
  Matrixf g(2, 2);
  auto state = AdamState<float>::make({&p}, 1e-4f);
  adam_step<float>({&p}, {&g}, state);
  EXPECT_EQ(state.t, 1);
  for (float v : p.raw()) EXPECT_FLOAT_EQ(v, 1.5f);
}

TEST(Adam, OneStepHandComputation) {
  // p=1, g=1, defaults: mhat=1, vhat=1 -> p ~ 1 - 1e-4
  Matrixf p(1, 1, 1.0f);
  Matrixf g(1, 1, 1.0f);
  auto state = AdamState<float>::make({&p}, 1e-4f);
  adam_step<float>({&p}, {&g}, state);
  EXPECT_NEAR(p(0, 0), 1.0f - 1e-4f, 1e-8f);
}

TEST(Adam, DefaultHyperparameters) {
  const AdamState<float> s;
  EXPECT_FLOAT_EQ(s.lr, 1e-4f);
  EXPECT_FLOAT_EQ(s.beta1, 0.9f);
  EXPECT_FLOAT_EQ(s.beta2, 0.999f);
  EXPECT_FLOAT_EQ(s.eps_adam, 1e-8f);
}

TEST(Adam, DeterministicGivenSameInputs) {
  Rng rng(13);
  Matrixf p1 = random_matrix<float>(3, 3, rng);
  Matrixf p2 = p1;
  const Matrixf g = random_matrix<float>(3, 3, rng);
  auto s1 = AdamState<float>::make({&p1}, 1e-3f);
  auto s2 = AdamState<float>::make({&p2}, 1e-3f);
  for (int i = 0; i < 10; ++i) {
    adam_step<float>({&p1}, {&g}, s1);
    adam_step<float>({&p2}, {&g}, s2);
  }
  EXPECT_EQ(p1, p2);
}

// ---------------------------------------------------------------------------
// gradient checking

TEST(GradCheck, QuadraticExactInDouble) {
  Rng rng(14);
  Matrixd w = random_matrix<double>(3, 4, rng);
  Matrixd analytic(3, 4);
  for (std::size_t i = 0; i < w.size(); ++i)
    analytic.data()[i] = 2.0 * w.data()[i];
  const auto f = [&]() {
    double acc = 0.0;
    for (double v : w.raw()) acc += v * v;
    return acc;
  };
  const double err =
      grad_check<double>(f, {&w}, {&analytic});
  EXPECT_LT(err, 1e-6);
}

TEST(GradCheck, QuadraticFloat) {
  Rng rng(15);
  Matrixf w = random_matrix<float>(3, 4, rng);
  Matrixf analytic(3, 4);
  for (std::size_t i = 0; i < w.size(); ++i)
    analytic.data()[i] = 2.0f * w.data()[i];
  const auto f = [&]() {
    double acc = 0.0;
    for (float v : w.raw()) acc += static_cast<double>(v) * v;
    return static_cast<float>(acc);
  };
  const float err = grad_check<float>(f, {&w}, {&analytic});
  EXPECT_LT(err, 1e-3f);
}

TEST(GradCheck, ConstantFunctionHasZeroGradient) {
  Matrixd w(2, 2, 0.3);
  Matrixd analytic(2, 2);
  const auto f = [] { return 42.0; };
  const double err = grad_check<double>(f, {&w}, {&analytic});
  EXPECT_DOUBLE_EQ(err, 0.0);
}

// Two dense+BN+ReLU sublayers into a sigmoid BCE head, gradients composed
// from the individual backward ops and checked against finite differences.
template <typename T>
class MlpBceCase {
 public:
  explicit MlpBceCase(std::uint64_t seed) : rng_(seed) {
    x_ = random_matrix<T>(8, 5, rng_);
    w1_ = random_matrix<T>(5, 16, rng_, 0.5);
    b1_ = random_matrix<T>(1, 16, rng_, 0.1);
    gamma_ = Matrix<T>(1, 16, T(1));
    beta_ = Matrix<T>(1, 16);
    w2_ = random_matrix<T>(16, 1, rng_, 0.5);
    b2_ = random_matrix<T>(1, 1, rng_, 0.1);
    targets_.resize(8);
    for (auto& t : targets_) t = rng_.next_bernoulli(0.5) ? T(1) : T(0);
  }

  T loss() {
    Matrix<T> rm(1, 16), rv(1, 16, T(1));
    const Matrix<T> z1 = linear_forward(x_, w1_, b1_);
    const auto bn = batchnorm_forward(z1, gamma_, beta_, Mode::Train, rm, rv);
    const Matrix<T> a1 = relu(bn.y);
    const Matrix<T> z2 = linear_forward(a1, w2_, b2_);
    double acc = 0.0;
    for (std::size_t i = 0; i < z2.rows(); ++i) {
      const T p = sigmoid_scalar(z2(i, 0));
      acc += targets_[i] == T(1) ? std::log(static_cast<double>(p))
                                 : std::log(1.0 - static_cast<double>(p));
    }
    return static_cast<T>(-acc / static_cast<double>(z2.rows()));
  }

  void backward() {
    Matrix<T> rm(1, 16), rv(1, 16, T(1));
    BnCache<T> bn_cache;
    const Matrix<T> z1 = linear_forward(x_, w1_, b1_);
    const auto bn =
        batchnorm_forward(z1, gamma_, beta_, Mode::Train, rm, rv, &bn_cache);
    const Matrix<T> a1 = relu(bn.y);
    const Matrix<T> z2 = linear_forward(a1, w2_, b2_);

    Matrix<T> dz2(8, 1);
    for (std::size_t i = 0; i < 8; ++i)
      dz2(i, 0) = (sigmoid_scalar(z2(i, 0)) - targets_[i]) / T(8);
    auto lin2 = linear_backward(a1, w2_, dz2);
    dw2_ = lin2.dweight;
    db2_ = lin2.dbias;
    const Matrix<T> da1 = relu_backward(a1, lin2.dx);
    auto bng = batchnorm_backward(bn_cache, da1);
    dgamma_ = bng.dgamma;
    dbeta_ = bng.dbeta;
    auto lin1 = linear_backward(x_, w1_, bng.dx);
    dw1_ = lin1.dweight;
    db1_ = lin1.dbias;
  }

  T run_grad_check() {
    backward();
    const auto f = [this] { return loss(); };
    return grad_check<T>(
        f, {&w1_, &b1_, &gamma_, &beta_, &w2_, &b2_},
        {&dw1_, &db1_, &dgamma_, &dbeta_, &dw2_, &db2_});
  }

 private:
  Rng rng_;
  Matrix<T> x_, w1_, b1_, gamma_, beta_, w2_, b2_;
  std::vector<T> targets_;
  Matrix<T> dw1_, db1_, dgamma_, dbeta_, dw2_, db2_;
};

TEST(GradCheck, MlpBceFloat) {
  MlpBceCase<float> cse(100);
  EXPECT_LT(cse.run_grad_check(), 1e-3f);
}

TEST(GradCheck, MlpBceDouble) {
  MlpBceCase<double> cse(100);
  EXPECT_LT(cse.run_grad_check(), 1e-6);
}
