#pragma once
// Dense layers for the encoder: linear, batch normalization, ReLU, sigmoid,
// Adam, and a finite-difference gradient checker. Forward ops have
// hand-derived backward counterparts; the composition is validated against
// central differences in the test suite.
//
// Vectors (bias, gamma, beta, running stats) are stored as 1 x n matrices so
// the optimizer and the serializer can treat every parameter uniformly.

#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <vector>

#include "inspl/matrix.hpp"
#include "inspl/rng.hpp"

namespace inspl {

// ---------------------------------------------------------------------------
// elementwise activations

template <typename T>
Matrix<T> relu(const Matrix<T>& x) {
  Matrix<T> y = x;
  for (auto& v : y.raw())
    if (v < T(0)) v = T(0);
  return y;
}

// dx = dy where the forward output was positive. ReLU'(0) := 0.
template <typename T>
Matrix<T> relu_backward(const Matrix<T>& y, const Matrix<T>& dy) {
  require(y.same_shape(dy), ErrorCode::ShapeMismatch, "relu_backward");
  Matrix<T> dx = dy;
  for (std::size_t i = 0; i < y.size(); ++i)
    if (y.data()[i] <= T(0)) dx.data()[i] = T(0);
  return dx;
}

// Logistic function, clamped so outputs stay strictly inside (0, 1) even
// where the float rounding would saturate to exactly 1.
template <typename T>
T sigmoid_scalar(T x) {
  const T y = x >= T(0) ? T(1) / (T(1) + std::exp(-x))
                        : [&] {
                            const T e = std::exp(x);
                            return e / (T(1) + e);
                          }();
  const T hi = T(1) - std::numeric_limits<T>::epsilon() / T(2);
  const T lo = std::numeric_limits<T>::min();
  return std::min(hi, std::max(lo, y));
}

template <typename T>
Matrix<T> sigmoid(const Matrix<T>& x) {
  Matrix<T> y = x;
  for (auto& v : y.raw()) v = sigmoid_scalar(v);
  return y;
}

// ---------------------------------------------------------------------------
// linear layer

// y = x * W + b, bias broadcast over rows.
template <typename T>
Matrix<T> linear_forward(const Matrix<T>& x, const Matrix<T>& weight,
                         const Matrix<T>& bias) {
  require(x.cols() == weight.rows(), ErrorCode::ShapeMismatch,
          "linear_forward: input width " + std::to_string(x.cols()) +
              " vs weight rows " + std::to_string(weight.rows()));
  require(bias.rows() == 1 && bias.cols() == weight.cols(),
          ErrorCode::ShapeMismatch, "linear_forward: bias shape");
  Matrix<T> y = matmul(x, weight);
  for (std::size_t i = 0; i < y.rows(); ++i) {
    T* row = y.row(i);
    for (std::size_t j = 0; j < y.cols(); ++j) row[j] += bias(0, j);
  }
  return y;
}

template <typename T>
struct LinearGrads {
  Matrix<T> dx;
  Matrix<T> dweight;
  Matrix<T> dbias;
};

template <typename T>
LinearGrads<T> linear_backward(const Matrix<T>& x, const Matrix<T>& weight,
                               const Matrix<T>& dy) {
  LinearGrads<T> g;
  g.dx = matmul_a_bt(dy, weight);
  g.dweight = matmul_at_b(x, dy);
  g.dbias = Matrix<T>(1, dy.cols());
  std::vector<double> acc(dy.cols(), 0.0);
  for (std::size_t i = 0; i < dy.rows(); ++i) {
    const T* row = dy.row(i);
    for (std::size_t j = 0; j < dy.cols(); ++j) acc[j] += row[j];
  }
  for (std::size_t j = 0; j < dy.cols(); ++j)
    g.dbias(0, j) = static_cast<T>(acc[j]);
  return g;
}

// ---------------------------------------------------------------------------
// batch normalization

inline constexpr double kBnEps = 1e-5;
inline constexpr double kBnMomentum = 0.1;

template <typename T>
struct BnCache {
  Matrix<T> xhat;            // normalized input, needed for dgamma and dx
  std::vector<T> inv_std;    // 1 / sqrt(var + eps) per column
  const Matrix<T>* gamma = nullptr;
};

template <typename T>
struct BnResult {
  Matrix<T> y;
  std::vector<T> batch_mean;
  std::vector<T> batch_var;  // biased (1/m), the statistic used to normalize
};

// Train mode normalizes with batch statistics and folds them into the
// running stats by exponential moving average (the running variance update
// uses the unbiased estimate when m > 1). Eval mode normalizes with the
// running stats and leaves them untouched.
template <typename T>
BnResult<T> batchnorm_forward(const Matrix<T>& x, const Matrix<T>& gamma,
                              const Matrix<T>& beta, Mode mode,
                              Matrix<T>& running_mean, Matrix<T>& running_var,
                              BnCache<T>* cache = nullptr,
                              T eps = T(kBnEps), T momentum = T(kBnMomentum)) {
  require(x.rows() >= 1, ErrorCode::EmptyBatch, "batchnorm_forward");
  const std::size_t m = x.rows(), c = x.cols();
  require(gamma.cols() == c && beta.cols() == c, ErrorCode::ShapeMismatch,
          "batchnorm_forward: affine width");

  BnResult<T> out;
  out.y = Matrix<T>(m, c);
  out.batch_mean.resize(c);
  out.batch_var.resize(c);

  std::vector<T> use_mean(c), inv_std(c);
  if (mode == Mode::Train) {
    // batch statistics, 64-bit accumulation
    for (std::size_t j = 0; j < c; ++j) {
      double mean = 0.0;
      for (std::size_t i = 0; i < m; ++i) mean += x(i, j);
      mean /= static_cast<double>(m);
      double var = 0.0;
      for (std::size_t i = 0; i < m; ++i) {
        const double d = x(i, j) - mean;
        var += d * d;
      }
      var /= static_cast<double>(m);
      out.batch_mean[j] = static_cast<T>(mean);
      out.batch_var[j] = static_cast<T>(var);
      use_mean[j] = static_cast<T>(mean);
      inv_std[j] = T(1) / std::sqrt(static_cast<T>(var) + eps);

      const double unbiased =
          m > 1 ? var * static_cast<double>(m) / static_cast<double>(m - 1)
                : var;
      running_mean(0, j) = static_cast<T>((1.0 - momentum) * running_mean(0, j) +
                                          momentum * mean);
      running_var(0, j) = static_cast<T>((1.0 - momentum) * running_var(0, j) +
                                         momentum * unbiased);
    }
  } else {
    for (std::size_t j = 0; j < c; ++j) {
      out.batch_mean[j] = running_mean(0, j);
      out.batch_var[j] = running_var(0, j);
      use_mean[j] = running_mean(0, j);
      inv_std[j] = T(1) / std::sqrt(running_var(0, j) + eps);
    }
  }

  Matrix<T> xhat(m, c);
  for (std::size_t i = 0; i < m; ++i) {
    const T* xr = x.row(i);
    T* hr = xhat.row(i);
    T* yr = out.y.row(i);
    for (std::size_t j = 0; j < c; ++j) {
      hr[j] = (xr[j] - use_mean[j]) * inv_std[j];
      yr[j] = gamma(0, j) * hr[j] + beta(0, j);
    }
  }
  if (cache) {
    cache->xhat = std::move(xhat);
    cache->inv_std = std::move(inv_std);
    cache->gamma = &gamma;
  }
  return out;
}

template <typename T>
struct BnGrads {
  Matrix<T> dx;
  Matrix<T> dgamma;
  Matrix<T> dbeta;
};

// Standard train-mode backward through the batch statistics:
//   dx = inv_std/m * (m*dxhat - sum(dxhat) - xhat * sum(dxhat .* xhat))
template <typename T>
BnGrads<T> batchnorm_backward(const BnCache<T>& cache, const Matrix<T>& dy) {
  const Matrix<T>& xhat = cache.xhat;
  require(xhat.same_shape(dy), ErrorCode::ShapeMismatch, "batchnorm_backward");
  const std::size_t m = dy.rows(), c = dy.cols();
  BnGrads<T> g;
  g.dx = Matrix<T>(m, c);
  g.dgamma = Matrix<T>(1, c);
  g.dbeta = Matrix<T>(1, c);

  std::vector<double> sum_dxhat(c, 0.0), sum_dxhat_xhat(c, 0.0);
  std::vector<double> acc_dgamma(c, 0.0), acc_dbeta(c, 0.0);
  for (std::size_t i = 0; i < m; ++i) {
    const T* dyr = dy.row(i);
    const T* hr = xhat.row(i);
    for (std::size_t j = 0; j < c; ++j) {
      const double dxhat = static_cast<double>(dyr[j]) * (*cache.gamma)(0, j);
      sum_dxhat[j] += dxhat;
      sum_dxhat_xhat[j] += dxhat * hr[j];
      acc_dgamma[j] += static_cast<double>(dyr[j]) * hr[j];
      acc_dbeta[j] += dyr[j];
    }
  }
  for (std::size_t j = 0; j < c; ++j) {
    g.dgamma(0, j) = static_cast<T>(acc_dgamma[j]);
    g.dbeta(0, j) = static_cast<T>(acc_dbeta[j]);
  }
  const double inv_m = 1.0 / static_cast<double>(m);
  for (std::size_t i = 0; i < m; ++i) {
    const T* dyr = dy.row(i);
    const T* hr = xhat.row(i);
    T* dxr = g.dx.row(i);
    for (std::size_t j = 0; j < c; ++j) {
      const double dxhat = static_cast<double>(dyr[j]) * (*cache.gamma)(0, j);
      const double v = dxhat - inv_m * sum_dxhat[j] -
                       inv_m * static_cast<double>(hr[j]) * sum_dxhat_xhat[j];
      dxr[j] = static_cast<T>(v * cache.inv_std[j]);
    }
  }
  return g;
}

// ---------------------------------------------------------------------------
// Adam

template <typename T>
struct AdamState {
  struct Moments {
    Matrix<T> m;
    Matrix<T> v;
  };
  std::vector<Moments> moments;  // one per parameter tensor, same order
  std::int64_t t = 0;
  T lr = T(1e-4);
  T beta1 = T(0.9);
  T beta2 = T(0.999);
  T eps_adam = T(1e-8);

  static AdamState make(const std::vector<Matrix<T>*>& params, T lr) {
    AdamState s;
    s.lr = lr;
    s.moments.reserve(params.size());
    for (const auto* p : params)
      s.moments.push_back({Matrix<T>(p->rows(), p->cols()),
                           Matrix<T>(p->rows(), p->cols())});
    return s;
  }
};

// Bias-corrected Adam update, applied in place.
template <typename T>
void adam_step(const std::vector<Matrix<T>*>& params,
               const std::vector<const Matrix<T>*>& grads,
               AdamState<T>& state) {
  require(params.size() == grads.size() &&
              params.size() == state.moments.size(),
          ErrorCode::ShapeMismatch, "adam_step: tensor count");
  state.t += 1;
  const T bc1 = T(1) - std::pow(state.beta1, static_cast<T>(state.t));
  const T bc2 = T(1) - std::pow(state.beta2, static_cast<T>(state.t));
  for (std::size_t k = 0; k < params.size(); ++k) {
    Matrix<T>& p = *params[k];
    const Matrix<T>& g = *grads[k];
    require(p.same_shape(g), ErrorCode::ShapeMismatch, "adam_step: grad shape");
    auto& mom = state.moments[k];
    for (std::size_t i = 0; i < p.size(); ++i) {
      T& m = mom.m.data()[i];
      T& v = mom.v.data()[i];
      const T gi = g.data()[i];
      m = state.beta1 * m + (T(1) - state.beta1) * gi;
      v = state.beta2 * v + (T(1) - state.beta2) * gi * gi;
      const T mhat = m / bc1;
      const T vhat = v / bc2;
      p.data()[i] -= state.lr * mhat / (std::sqrt(vhat) + state.eps_adam);
    }
  }
}

// ---------------------------------------------------------------------------
// initialization

// Fan-in scaled uniform init for linear weights: U(-1/sqrt(in), 1/sqrt(in)).
template <typename T>
void init_linear(Matrix<T>& weight, Matrix<T>& bias, Rng& rng) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(weight.rows()));
  for (auto& v : weight.raw()) v = static_cast<T>(rng.next_uniform(bound));
  bias.fill(T(0));
}

// ---------------------------------------------------------------------------
// gradient checking

// Central finite differences around the current point, sampled per
// coordinate. `f` re-evaluates the scalar objective from the parameter
// tensors; `analytic` holds d f / d params in the same order. Returns the
// max over checked coordinates of |a - n| / max(1, |a|, |n|).
//
// Step size: 1e-3 for 32-bit scalars, 1e-6 for 64-bit, per the precision of
// the loss evaluation.
template <typename T>
struct GradCheckOptions {
  T step = std::is_same_v<T, double> ? T(1e-6) : T(1e-3);
  std::size_t max_coords_per_tensor = 0;  // 0 = all coordinates
  std::uint64_t sample_seed = 17;
};

template <typename T>
T grad_check(const std::function<T()>& f,
             const std::vector<Matrix<T>*>& params,
             const std::vector<const Matrix<T>*>& analytic,
             GradCheckOptions<T> opts = {}) {
  require(params.size() == analytic.size(), ErrorCode::ShapeMismatch,
          "grad_check: tensor count");
  Rng rng(opts.sample_seed);
  T worst = T(0);
  for (std::size_t k = 0; k < params.size(); ++k) {
    Matrix<T>& p = *params[k];
    const Matrix<T>& a = *analytic[k];
    require(p.same_shape(a), ErrorCode::ShapeMismatch, "grad_check: shape");
    std::vector<std::size_t> coords;
    if (opts.max_coords_per_tensor == 0 ||
        p.size() <= opts.max_coords_per_tensor) {
      coords.resize(p.size());
      for (std::size_t i = 0; i < p.size(); ++i) coords[i] = i;
    } else {
      for (std::size_t i = 0; i < opts.max_coords_per_tensor; ++i)
        coords.push_back(rng.next_below(p.size()));
    }
    for (std::size_t idx : coords) {
      const T saved = p.data()[idx];
      p.data()[idx] = saved + opts.step;
      const T f_plus = f();
      p.data()[idx] = saved - opts.step;
      const T f_minus = f();
      p.data()[idx] = saved;
      const T numeric = (f_plus - f_minus) / (T(2) * opts.step);
      const T an = a.data()[idx];
      const T denom = std::max(T(1), std::max(std::abs(an), std::abs(numeric)));
      worst = std::max(worst, std::abs(an - numeric) / denom);
    }
  }
  return worst;
}

}  // namespace inspl
