#pragma once
// Self-supervised node embeddings: a two-layer GIN encoder trained with the
// DGI objective. One training step on a graph G:
//
//   h  = encode(G, X)            real embeddings (train-mode batch norm)
//   ht = encode(G, shuffle(X))   corrupted embeddings, same adjacency
//   s  = sigmoid(mean-row(h))    graph summary from the real side only
//   score(v) = sigmoid(v^T W s)  bilinear discriminator
//   loss = BCE: real scores toward 1, corrupted toward 0
//
// Gradients are closed-form per operation and flow through both encoder
// passes into one shared parameter set; Adam performs the update. The
// scalar type is templated so the finite-difference suite can run the whole
// objective in double.

#include <array>
#include <cmath>
#include <string>
#include <utility>
#include <vector>

#include "inspl/graph.hpp"
#include "inspl/nn.hpp"
#include "inspl/serialize.hpp"

namespace inspl {

inline constexpr std::size_t kHiddenDim = 128;  // MLP width and embedding dim

enum class EpsMode : std::uint8_t { Fixed0 = 0, Learnable = 1 };

struct DgiConfig {
  int epochs_per_graph = 300;
  double learning_rate = 1e-4;
  std::uint64_t seed = 1;
  EpsMode eps_mode = EpsMode::Fixed0;
};

// One linear + batch-norm sublayer of a GIN MLP (activation is ReLU).
template <typename T>
struct DenseBnParams {
  Matrix<T> weight;        // in x out
  Matrix<T> bias;          // 1 x out
  Matrix<T> gamma;         // 1 x out
  Matrix<T> beta;          // 1 x out
  Matrix<T> running_mean;  // 1 x out
  Matrix<T> running_var;   // 1 x out

  DenseBnParams() = default;
  DenseBnParams(std::size_t in, std::size_t out)
      : weight(in, out),
        bias(1, out),
        gamma(1, out, T(1)),
        beta(1, out),
        running_mean(1, out),
        running_var(1, out, T(1)) {}
};

template <typename T>
struct GinLayerParams {
  Matrix<T> eps;                        // 1 x 1 scalar
  std::array<DenseBnParams<T>, 2> mlp;  // in -> 128 -> 128

  GinLayerParams() = default;
  explicit GinLayerParams(std::size_t in)
      : eps(1, 1), mlp{DenseBnParams<T>(in, kHiddenDim),
                       DenseBnParams<T>(kHiddenDim, kHiddenDim)} {}
};

template <typename T>
struct GinEncoderParamsT {
  std::array<GinLayerParams<T>, 2> layers;

  GinEncoderParamsT() = default;
  explicit GinEncoderParamsT(std::size_t input_dim)
      : layers{GinLayerParams<T>(input_dim), GinLayerParams<T>(kHiddenDim)} {}

  std::size_t input_dim() const { return layers[0].mlp[0].weight.rows(); }
};

using GinEncoderParams = GinEncoderParamsT<float>;

template <typename T>
struct DgiModelT {
  GinEncoderParamsT<T> encoder;
  Matrix<T> disc_weight;  // kHiddenDim x kHiddenDim bilinear form
  AdamState<T> adam;
  EpsMode eps_mode = EpsMode::Fixed0;

  // Stable parameter order shared by gradients, Adam state, and artifacts.
  std::vector<Matrix<T>*> trainables() {
    std::vector<Matrix<T>*> out;
    for (auto& layer : encoder.layers) {
      for (auto& sub : layer.mlp) {
        out.push_back(&sub.weight);
        out.push_back(&sub.bias);
        out.push_back(&sub.gamma);
        out.push_back(&sub.beta);
      }
      if (eps_mode == EpsMode::Learnable) out.push_back(&layer.eps);
    }
    out.push_back(&disc_weight);
    return out;
  }
};

using DgiModel = DgiModelT<float>;

// Gradients use the same layout as the model they mirror.
template <typename T>
struct DgiGradsT {
  GinEncoderParamsT<T> encoder;
  Matrix<T> disc_weight;
  EpsMode eps_mode = EpsMode::Fixed0;

  static DgiGradsT make_like(const DgiModelT<T>& m) {
    DgiGradsT g;
    g.encoder = GinEncoderParamsT<T>(m.encoder.input_dim());
    for (auto& layer : g.encoder.layers)
      for (auto& sub : layer.mlp) {
        sub.gamma.fill(T(0));
        sub.running_var.fill(T(0));
      }
    g.disc_weight = Matrix<T>(kHiddenDim, kHiddenDim);
    g.eps_mode = m.eps_mode;
    return g;
  }

  std::vector<Matrix<T>*> trainables() {
    std::vector<Matrix<T>*> out;
    for (auto& layer : encoder.layers) {
      for (auto& sub : layer.mlp) {
        out.push_back(&sub.weight);
        out.push_back(&sub.bias);
        out.push_back(&sub.gamma);
        out.push_back(&sub.beta);
      }
      if (eps_mode == EpsMode::Learnable) out.push_back(&layer.eps);
    }
    out.push_back(&disc_weight);
    return out;
  }
};

template <typename T>
DgiModelT<T> init_dgi_model(std::size_t input_dim, const DgiConfig& config) {
  DgiModelT<T> model;
  model.encoder = GinEncoderParamsT<T>(input_dim);
  model.eps_mode = config.eps_mode;
  Rng rng(derive_seed(config.seed, "dgi-init"));
  for (auto& layer : model.encoder.layers)
    for (auto& sub : layer.mlp) init_linear(sub.weight, sub.bias, rng);
  // The bilinear weight scales with 1/d rather than 1/sqrt(d): the encoder
  // output has unit per-column variance out of batch norm, and 1/d keeps the
  // initial scores near 0.5 (initial loss near ln 2).
  model.disc_weight = Matrix<T>(kHiddenDim, kHiddenDim);
  const double bound = 1.0 / static_cast<double>(kHiddenDim);
  for (auto& v : model.disc_weight.raw())
    v = static_cast<T>(rng.next_uniform(bound));
  model.adam =
      AdamState<T>::make(model.trainables(), static_cast<T>(config.learning_rate));
  return model;
}

// ---------------------------------------------------------------------------
// corruption

// Uniform random row permutation of the feature matrix; adjacency is left
// untouched by construction, so the negative sample keeps the real edges.
template <typename T>
Matrix<T> corrupt(const Matrix<T>& features, Rng& rng) {
  require(features.rows() >= 1, ErrorCode::EmptyGraph, "corrupt: no nodes");
  const auto perm = rng.next_permutation(static_cast<std::uint32_t>(features.rows()));
  Matrix<T> out(features.rows(), features.cols());
  for (std::size_t i = 0; i < features.rows(); ++i) {
    const T* src = features.row(perm[i]);
    std::copy(src, src + features.cols(), out.row(i));
  }
  return out;
}

// ---------------------------------------------------------------------------
// encoder forward

// Pre-MLP aggregation: (1+eps) * h_v + sum of neighbor rows. The self term
// is added in neighbor-index order (at position v), which makes the result
// bitwise equal to the dense (A + (1+eps) I) * H product evaluated in
// ascending column order.
template <typename T>
Matrix<T> gin_aggregate(const TransactionGraph& g, const Matrix<T>& h, T eps) {
  require(h.rows() == g.num_nodes(), ErrorCode::ShapeMismatch,
          "gin_aggregate: row count");
  const std::size_t d = h.cols();
  Matrix<T> out(h.rows(), d);
  const T self_w = T(1) + eps;
  parallel_for(h.rows(), [&](std::size_t lo, std::size_t hi) {
    for (std::size_t v = lo; v < hi; ++v) {
      T* dst = out.row(v);
      const auto nb = g.neighbors(v);
      std::size_t k = 0;
      for (; k < nb.size() && nb[k] < v; ++k) {
        const T* src = h.row(nb[k]);
        for (std::size_t j = 0; j < d; ++j) dst[j] += src[j];
      }
      const T* self = h.row(v);
      for (std::size_t j = 0; j < d; ++j) dst[j] += self_w * self[j];
      for (; k < nb.size(); ++k) {
        const T* src = h.row(nb[k]);
        for (std::size_t j = 0; j < d; ++j) dst[j] += src[j];
      }
    }
  }, 64);
  return out;
}

template <typename T>
struct SubCache {
  Matrix<T> input;    // into the linear op
  BnCache<T> bn;
  Matrix<T> output;   // post-ReLU
};

template <typename T>
struct LayerCache {
  Matrix<T> h_in;  // layer input, needed for d eps
  std::array<SubCache<T>, 2> subs;
};

template <typename T>
struct EncoderCache {
  std::array<LayerCache<T>, 2> layers;
};

template <typename T>
Matrix<T> gin_layer_forward(GinLayerParams<T>& layer, const TransactionGraph& g,
                            const Matrix<T>& h_in, Mode mode,
                            LayerCache<T>* cache = nullptr) {
  require(h_in.cols() == layer.mlp[0].weight.rows(), ErrorCode::ShapeMismatch,
          "gin_layer_forward: input width " + std::to_string(h_in.cols()));
  Matrix<T> h = gin_aggregate(g, h_in, layer.eps(0, 0));
  if (cache) cache->h_in = h_in;
  for (std::size_t s = 0; s < layer.mlp.size(); ++s) {
    auto& sub = layer.mlp[s];
    SubCache<T>* sc = cache ? &cache->subs[s] : nullptr;
    if (sc) sc->input = h;
    Matrix<T> z = linear_forward(h, sub.weight, sub.bias);
    auto bn = batchnorm_forward(z, sub.gamma, sub.beta, mode, sub.running_mean,
                                sub.running_var, sc ? &sc->bn : nullptr);
    h = relu(bn.y);
    if (sc) sc->output = h;
  }
  return h;
}

// Two stacked GIN layers: a 2-hop receptive field over the full neighbor
// set. Train mode updates the batch-norm running stats as a side effect.
template <typename T>
Matrix<T> encoder_forward(GinEncoderParamsT<T>& encoder,
                          const TransactionGraph& g, const Matrix<T>& x,
                          Mode mode, EncoderCache<T>* cache = nullptr) {
  Matrix<T> h = gin_layer_forward(encoder.layers[0], g, x, mode,
                                  cache ? &cache->layers[0] : nullptr);
  return gin_layer_forward(encoder.layers[1], g, h, mode,
                           cache ? &cache->layers[1] : nullptr);
}

// ---------------------------------------------------------------------------
// encoder backward

template <typename T>
void gin_layer_backward(GinLayerParams<T>& layer, const TransactionGraph& g,
                        const LayerCache<T>& cache, const Matrix<T>& d_out,
                        GinLayerParams<T>& grads, Matrix<T>* d_in) {
  Matrix<T> d = d_out;
  for (std::size_t s = layer.mlp.size(); s-- > 0;) {
    const auto& sub = layer.mlp[s];
    const auto& sc = cache.subs[s];
    d = relu_backward(sc.output, d);
    auto bn = batchnorm_backward(sc.bn, d);
    add_inplace(grads.mlp[s].gamma, bn.dgamma);
    add_inplace(grads.mlp[s].beta, bn.dbeta);
    auto lin = linear_backward(sc.input, sub.weight, bn.dx);
    add_inplace(grads.mlp[s].weight, lin.dweight);
    add_inplace(grads.mlp[s].bias, lin.dbias);
    d = std::move(lin.dx);
  }
  // d agg: eps gradient plus the symmetric aggregation transpose, which is
  // the aggregation itself.
  double d_eps = 0.0;
  for (std::size_t i = 0; i < d.size(); ++i)
    d_eps += static_cast<double>(d.data()[i]) *
             static_cast<double>(cache.h_in.data()[i]);
  grads.eps(0, 0) += static_cast<T>(d_eps);
  if (d_in) *d_in = gin_aggregate(g, d, layer.eps(0, 0));
}

template <typename T>
void encoder_backward(GinEncoderParamsT<T>& encoder, const TransactionGraph& g,
                      const EncoderCache<T>& cache, const Matrix<T>& d_out,
                      GinEncoderParamsT<T>& grads) {
  Matrix<T> d_mid;
  gin_layer_backward(encoder.layers[1], g, cache.layers[1], d_out,
                     grads.layers[1], &d_mid);
  gin_layer_backward(encoder.layers[0], g, cache.layers[0], d_mid,
                     grads.layers[0], static_cast<Matrix<T>*>(nullptr));
}

// ---------------------------------------------------------------------------
// readout, discriminator, loss

// Graph summary: sigmoid of the per-column mean of the node embeddings.
template <typename T>
Matrix<T> readout(const Matrix<T>& embeddings) {
  require(embeddings.rows() >= 1, ErrorCode::EmptyGraph, "readout: no rows");
  const auto mean = col_mean(embeddings);
  Matrix<T> s(1, embeddings.cols());
  for (std::size_t j = 0; j < embeddings.cols(); ++j)
    s(0, j) = sigmoid_scalar(static_cast<T>(mean[j]));
  return s;
}

// Bilinear score sigma(h^T w s) for a single embedding against a summary.
template <typename T>
T discriminate(const Matrix<T>& h, const Matrix<T>& summary,
               const Matrix<T>& w) {
  require(h.rows() == 1 && summary.rows() == 1, ErrorCode::ShapeMismatch,
          "discriminate: expects row vectors");
  require(w.rows() == h.cols() && w.cols() == summary.cols(),
          ErrorCode::ShapeMismatch, "discriminate: bilinear shape");
  const Matrix<T> ws = matmul(w, transpose(summary));  // d x 1
  T a = T(0);
  for (std::size_t j = 0; j < h.cols(); ++j) a += h(0, j) * ws(j, 0);
  return sigmoid_scalar(a);
}

inline constexpr double kLogClamp = 1e-7;  // floor for log arguments

// Negated BCE objective as a minimization loss:
//   -( sum log pos + sum log(1 - neg) ) / (N + M)
template <typename T>
T dgi_loss(const std::vector<T>& pos_scores, const std::vector<T>& neg_scores) {
  require(!pos_scores.empty() && !neg_scores.empty(), ErrorCode::EmptyScores,
          "dgi_loss");
  double acc = 0.0;
  for (T p : pos_scores)
    acc += std::log(std::max(static_cast<double>(p), kLogClamp));
  for (T q : neg_scores)
    acc += std::log(std::max(1.0 - static_cast<double>(q), kLogClamp));
  return static_cast<T>(-acc /
                        static_cast<double>(pos_scores.size() + neg_scores.size()));
}

// ---------------------------------------------------------------------------
// one training step

template <typename T>
struct DgiForward {
  EncoderCache<T> pos_cache;
  EncoderCache<T> neg_cache;
  Matrix<T> pos_h;          // n x d real embeddings
  Matrix<T> neg_h;          // n x d corrupted embeddings
  Matrix<T> summary;        // 1 x d
  Matrix<T> ws;             // d x 1, disc_weight * summary^T
  std::vector<T> pos_scores;
  std::vector<T> neg_scores;
  T loss = T(0);
};

template <typename T>
std::vector<T> bilinear_scores(const Matrix<T>& h, const Matrix<T>& ws) {
  std::vector<T> scores(h.rows());
  for (std::size_t i = 0; i < h.rows(); ++i) {
    const T* row = h.row(i);
    T a = T(0);
    for (std::size_t j = 0; j < h.cols(); ++j) a += row[j] * ws(j, 0);
    scores[i] = sigmoid_scalar(a);
  }
  return scores;
}

template <typename T>
DgiForward<T> dgi_forward(DgiModelT<T>& model, const TransactionGraph& g,
                          const Matrix<T>& x, const Matrix<T>& x_corrupt,
                          bool want_cache) {
  DgiForward<T> f;
  f.pos_h = encoder_forward(model.encoder, g, x, Mode::Train,
                            want_cache ? &f.pos_cache : nullptr);
  f.neg_h = encoder_forward(model.encoder, g, x_corrupt, Mode::Train,
                            want_cache ? &f.neg_cache : nullptr);
  f.summary = readout(f.pos_h);
  f.ws = matmul(model.disc_weight, transpose(f.summary));
  f.pos_scores = bilinear_scores(f.pos_h, f.ws);
  f.neg_scores = bilinear_scores(f.neg_h, f.ws);
  f.loss = dgi_loss(f.pos_scores, f.neg_scores);
  return f;
}

template <typename T>
void dgi_backward(DgiModelT<T>& model, const TransactionGraph& g,
                  const DgiForward<T>& f, DgiGradsT<T>& grads) {
  const std::size_t n = f.pos_h.rows();
  const std::size_t d = f.pos_h.cols();
  const T inv_total = T(1) / static_cast<T>(f.pos_scores.size() +
                                            f.neg_scores.size());

  // d loss / d score-logit; zero where the log argument was clamped
  Matrix<T> c_pos(n, 1), c_neg(n, 1);
  for (std::size_t i = 0; i < n; ++i) {
    const T p = f.pos_scores[i];
    c_pos(i, 0) = (static_cast<double>(p) > kLogClamp)
                      ? -(T(1) - p) * inv_total
                      : T(0);
    const T q = f.neg_scores[i];
    c_neg(i, 0) = ((1.0 - static_cast<double>(q)) > kLogClamp)
                      ? q * inv_total
                      : T(0);
  }

  // u = H_pos^T c_pos + H_neg^T c_neg collects both score sets
  Matrix<T> u = matmul_at_b(f.pos_h, c_pos);
  add_inplace(u, matmul_at_b(f.neg_h, c_neg));

  add_inplace(grads.disc_weight, matmul(u, f.summary));  // dW = u s^T

  // d summary = W^T u, then through the readout sigmoid and mean
  const Matrix<T> ds = matmul_at_b(model.disc_weight, u);  // d x 1
  Matrix<T> d_pos = matmul(c_pos, transpose(f.ws));        // n x d
  const T inv_n = T(1) / static_cast<T>(n);
  for (std::size_t j = 0; j < d; ++j) {
    const T s = f.summary(0, j);
    const T dm = ds(j, 0) * s * (T(1) - s) * inv_n;
    for (std::size_t i = 0; i < n; ++i) d_pos(i, j) += dm;
  }
  const Matrix<T> d_neg = matmul(c_neg, transpose(f.ws));

  encoder_backward(model.encoder, g, f.pos_cache, d_pos, grads.encoder);
  encoder_backward(model.encoder, g, f.neg_cache, d_neg, grads.encoder);
}

// ---------------------------------------------------------------------------
// training loop and embedding extraction

struct LossEntry {
  int time_step;
  int epoch;  // 1-based
  double loss;
};

struct DgiTrainResult {
  DgiModel model;
  std::vector<LossEntry> loss_log;  // num_graphs * epochs entries
};

// Algorithm: initialize once, then for each training graph in time order run
// `epochs_per_graph` full DGI steps, sharing one Adam state throughout.
inline DgiTrainResult train_dgi(const TemporalDataset& train_set,
                                FeatureView view, const DgiConfig& config) {
  require(!train_set.graphs.empty(), ErrorCode::EmptyTrainingSet, "train_dgi");
  require(config.epochs_per_graph >= 0, ErrorCode::BadConfig, "train_dgi: epochs");
  require(config.learning_rate > 0, ErrorCode::BadConfig, "train_dgi: lr");

  DgiTrainResult result;
  result.model =
      init_dgi_model<float>(static_cast<std::size_t>(view_width(view)), config);
  DgiModel& model = result.model;
  Rng corrupt_rng(derive_seed(config.seed, "dgi-corrupt"));

  auto params = model.trainables();
  for (const auto& gp : train_set.graphs) {
    const TransactionGraph& g = *gp;
    const Matrixf x = select_features(g, view);
    for (int epoch = 1; epoch <= config.epochs_per_graph; ++epoch) {
      const Matrixf xc = corrupt(x, corrupt_rng);
      DgiForward<float> f = dgi_forward(model, g, x, xc, /*want_cache=*/true);
      auto grads = DgiGradsT<float>::make_like(model);
      dgi_backward(model, g, f, grads);
      auto grad_list = grads.trainables();
      std::vector<const Matrixf*> grad_ptrs(grad_list.begin(), grad_list.end());
      adam_step(params, grad_ptrs, model.adam);
      result.loss_log.push_back(
          {g.time_step, epoch, static_cast<double>(f.loss)});
    }
  }
  return result;
}

struct EmbeddingTable {
  std::vector<NodeId> node_ids;
  Matrixf embeddings;  // num_nodes x kHiddenDim
};

// Eval-mode embedding of one graph (running batch-norm stats, no updates).
inline EmbeddingTable encode(const GinEncoderParams& encoder,
                             const TransactionGraph& g, const Matrixf& features,
                             Mode mode = Mode::Eval) {
  GinEncoderParams working = encoder;  // Train mode may touch running stats
  EmbeddingTable table;
  table.node_ids = g.node_ids;
  table.embeddings = encoder_forward(working, g, features, mode);
  return table;
}

inline std::vector<EmbeddingTable> embed_all(const DgiModel& model,
                                             const TemporalDataset& dataset,
                                             FeatureView view) {
  std::vector<EmbeddingTable> tables;
  tables.reserve(dataset.num_graphs());
  GinEncoderParams encoder = model.encoder;
  for (const auto& gp : dataset.graphs) {
    EmbeddingTable t;
    t.node_ids = gp->node_ids;
    t.embeddings = encoder_forward(encoder, *gp, select_features(*gp, view),
                                   Mode::Eval);
    tables.push_back(std::move(t));
  }
  return tables;
}

// ---------------------------------------------------------------------------
// artifact io

inline NamedTensors dgi_model_tensors(const DgiModel& model) {
  NamedTensors out;
  for (std::size_t l = 0; l < model.encoder.layers.size(); ++l) {
    const auto& layer = model.encoder.layers[l];
    const std::string lp = "layer" + std::to_string(l) + ".";
    out.emplace_back(lp + "eps", layer.eps);
    for (std::size_t s = 0; s < layer.mlp.size(); ++s) {
      const auto& sub = layer.mlp[s];
      const std::string sp = lp + "mlp" + std::to_string(s) + ".";
      out.emplace_back(sp + "weight", sub.weight);
      out.emplace_back(sp + "bias", sub.bias);
      out.emplace_back(sp + "bn_gamma", sub.gamma);
      out.emplace_back(sp + "bn_beta", sub.beta);
      out.emplace_back(sp + "bn_running_mean", sub.running_mean);
      out.emplace_back(sp + "bn_running_var", sub.running_var);
    }
  }
  out.emplace_back("disc.weight", model.disc_weight);
  return out;
}

inline void save_dgi_model(const std::string& path, const DgiModel& model) {
  save_tensors(path, dgi_model_tensors(model));
}

inline DgiModel load_dgi_model(const std::string& path) {
  const NamedTensors tensors = load_tensors(path);
  auto find = [&](const std::string& name) -> const Matrixf& {
    for (const auto& [n, t] : tensors)
      if (n == name) return t;
    fail(ErrorCode::VersionMismatch, path + ": missing tensor " + name);
  };
  const std::size_t input_dim = find("layer0.mlp0.weight").rows();
  DgiModel model;
  model.encoder = GinEncoderParams(input_dim);
  for (std::size_t l = 0; l < model.encoder.layers.size(); ++l) {
    auto& layer = model.encoder.layers[l];
    const std::string lp = "layer" + std::to_string(l) + ".";
    layer.eps = find(lp + "eps");
    for (std::size_t s = 0; s < layer.mlp.size(); ++s) {
      auto& sub = layer.mlp[s];
      const std::string sp = lp + "mlp" + std::to_string(s) + ".";
      const auto check = [&](const Matrixf& got, const Matrixf& slot,
                             const std::string& name) -> const Matrixf& {
        require(got.rows() == slot.rows() && got.cols() == slot.cols(),
                ErrorCode::VersionMismatch, path + ": shape of " + name);
        return got;
      };
      sub.weight = check(find(sp + "weight"), sub.weight, sp + "weight");
      sub.bias = check(find(sp + "bias"), sub.bias, sp + "bias");
      sub.gamma = check(find(sp + "bn_gamma"), sub.gamma, sp + "bn_gamma");
      sub.beta = check(find(sp + "bn_beta"), sub.beta, sp + "bn_beta");
      sub.running_mean = check(find(sp + "bn_running_mean"), sub.running_mean,
                               sp + "bn_running_mean");
      sub.running_var = check(find(sp + "bn_running_var"), sub.running_var,
                              sp + "bn_running_var");
    }
  }
  model.disc_weight = find("disc.weight");
  require(model.disc_weight.rows() == kHiddenDim &&
              model.disc_weight.cols() == kHiddenDim,
          ErrorCode::VersionMismatch, path + ": disc.weight shape");
  model.adam = AdamState<float>::make(model.trainables(), 1e-4f);
  return model;
}

}  // namespace inspl
