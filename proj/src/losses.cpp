#include "nst/losses.hpp"

#include <Eigen/Core>

#include "nst/vgg.hpp"

namespace nst {

namespace {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

template <typename T>
RowMatrix feature_matrix(const Tensor3<T>& f) {
  using Map = Eigen::Map<const Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>;
  return Map(f.data(), static_cast<Eigen::Index>(f.channels()), static_cast<Eigen::Index>(f.plane_size()))
      .template cast<double>();
}

}  // namespace

StyleNormalization parse_style_normalization(const std::string& name) {
  if (name == "per_layer") return StyleNormalization::per_layer;
  if (name == "raw") return StyleNormalization::raw;
  throw NameError("unknown style normalization '" + name + "' (expected per_layer or raw)");
}

std::string to_string(StyleNormalization n) { return n == StyleNormalization::raw ? "raw" : "per_layer"; }

template <typename T>
GramMatrix gram(const Tensor3<T>& feature) {
  if (feature.empty()) throw DimensionError("gram: empty feature map " + feature.shape_string());
  const RowMatrix f = feature_matrix(feature);
  const auto c = static_cast<Eigen::Index>(feature.channels());
  Eigen::MatrixXd g = Eigen::MatrixXd::Zero(c, c);
  g.selfadjointView<Eigen::Lower>().rankUpdate(f);

  GramMatrix out;
  out.channels = feature.channels();
  out.spatial_size = feature.plane_size();
  out.values.resize(out.channels * out.channels);
  for (Eigen::Index i = 0; i < c; ++i) {
    for (Eigen::Index j = 0; j <= i; ++j) {
      const double v = g(i, j);
      out.values[static_cast<std::size_t>(i * c + j)] = v;
      out.values[static_cast<std::size_t>(j * c + i)] = v;
    }
  }
  return out;
}

template <typename T>
TermResult<T> content_term(const Tensor3<T>& current, const Tensor3<T>& target) {
  require_same_shape(current, target, "content_term");
  TermResult<T> r{0.0, Tensor3<T>(current.channels(), current.height(), current.width())};
  for (std::size_t i = 0; i < current.size(); ++i) {
    const double d = static_cast<double>(current[i]) - static_cast<double>(target[i]);
    r.loss += d * d;
    r.grad[i] = static_cast<T>(2.0 * d);
  }
  return r;
}

template <typename T>
TermResult<T> style_term(const Tensor3<T>& current, const GramMatrix& target, double weight,
                         StyleNormalization normalization) {
  if (current.channels() != target.channels) {
    throw DimensionError("style_term: feature has " + std::to_string(current.channels()) +
                         " channels, target Gram has " + std::to_string(target.channels));
  }
  if (current.empty()) throw DimensionError("style_term: empty feature map");
  const auto c = static_cast<Eigen::Index>(current.channels());
  const double n_cur = static_cast<double>(current.plane_size());
  const double n_tgt = static_cast<double>(target.spatial_size);

  // diff = G' - (N'/N_s) G; coef * sum(diff^2) is the loss, 4 coef diff F the gradient.
  double coef = weight;
  double target_scale = 1.0;
  if (normalization == StyleNormalization::per_layer) {
    const double cc = static_cast<double>(c);
    coef = weight / (4.0 * cc * cc * n_cur * n_cur);
    target_scale = n_cur / n_tgt;
  }

  const RowMatrix f = feature_matrix(current);
  const GramMatrix g_cur = gram(current);
  RowMatrix diff(c, c);
  double sq = 0.0;
  for (Eigen::Index i = 0; i < c; ++i) {
    for (Eigen::Index j = 0; j < c; ++j) {
      const auto k = static_cast<std::size_t>(i * c + j);
      const double d = g_cur.values[k] - target_scale * target.values[k];
      diff(i, j) = d;
      sq += d * d;
    }
  }

  TermResult<T> r{coef * sq, Tensor3<T>(current.channels(), current.height(), current.width())};
  const RowMatrix grad = (4.0 * coef) * (diff * f);
  for (std::size_t i = 0; i < r.grad.size(); ++i) r.grad[i] = static_cast<T>(grad.data()[i]);
  return r;
}

double LossConfig::style_weight(LayerName layer) const {
  if (auto it = style_weights.find(layer); it != style_weights.end()) return it->second;
  return style_layers.empty() ? 0.0 : 1.0 / static_cast<double>(style_layers.size());
}

void LossConfig::validate() const {
  if (!(lambda >= 0.0)) throw ParameterError("lambda must be non-negative, got " + std::to_string(lambda));
  for (const auto& [layer, w] : style_weights) {
    if (!style_layers.contains(layer)) throw ParameterError("style weight given for non-style layer " + layer.str());
    if (!(w > 0.0)) throw ParameterError("style weight for " + layer.str() + " must be positive");
  }
}

template <typename T>
ContentTarget<T> build_content_target(const Tensor3<T>& content, const WeightStore& store, const LayerSet& layers,
                                      PoolingMode pooling) {
  ContentTarget<T> target;
  if (layers.empty()) return target;
  const auto cache = forward(content, store, layers, pooling);
  for (auto l : layers) target.features.emplace(l, cache.at(l));
  return target;
}

template <typename T>
StyleTarget build_style_target(const Tensor3<T>& style, const WeightStore& store, const LossConfig& cfg,
                               PoolingMode pooling) {
  StyleTarget target;
  if (cfg.style_layers.empty()) return target;
  const auto cache = forward(style, store, cfg.style_layers, pooling);
  for (auto l : cfg.style_layers) {
    target.grams.emplace(l, gram(cache.at(l)));
    target.weights.emplace(l, cfg.style_weight(l));
  }
  return target;
}

template <typename T>
LossEvaluation<T> total_loss(const Tensor3<T>& image, const ContentTarget<T>& content_target,
                             const StyleTarget& style_target, const LossConfig& cfg, const WeightStore& store,
                             PoolingMode pooling) {
  cfg.validate();
  const bool use_style = cfg.lambda > 0.0 && !cfg.style_layers.empty();
  LayerSet requested = cfg.content_layers;
  if (use_style) requested.insert(cfg.style_layers.begin(), cfg.style_layers.end());

  LossEvaluation<T> eval;
  if (requested.empty()) {
    eval.grad = Tensor3<T>(image.channels(), image.height(), image.width());
    return eval;
  }
  const auto cache = forward(image, store, requested, pooling);

  LayerGrads<T> grads;
  auto inject = [&grads](LayerName layer, Tensor3<T>&& g, double scale) {
    if (scale != 1.0) {
      for (auto& v : g.values()) v = static_cast<T>(v * scale);
    }
    auto [it, inserted] = grads.try_emplace(layer, std::move(g));
    if (!inserted) {
      for (std::size_t i = 0; i < it->second.size(); ++i) it->second[i] += g[i];
    }
  };

  for (auto l : cfg.content_layers) {
    auto it = content_target.features.find(l);
    if (it == content_target.features.end()) throw NameError("content target lacks layer " + l.str());
    auto term = content_term(cache.at(l), it->second);
    eval.breakdown.content += term.loss;
    eval.breakdown.per_layer["content:" + l.str()] = term.loss;
    inject(l, std::move(term.grad), 1.0);
  }
  if (use_style) {
    for (auto l : cfg.style_layers) {
      auto it = style_target.grams.find(l);
      if (it == style_target.grams.end()) throw NameError("style target lacks layer " + l.str());
      auto term = style_term(cache.at(l), it->second, cfg.style_weight(l), cfg.normalization);
      const double contribution = cfg.lambda * term.loss;
      eval.breakdown.style += contribution;
      eval.breakdown.per_layer["style:" + l.str()] = contribution;
      inject(l, std::move(term.grad), cfg.lambda);
    }
  }
  eval.loss = eval.breakdown.content + eval.breakdown.style;
  eval.grad = backward(cache, store, grads);
  return eval;
}

#define NST_INSTANTIATE_LOSSES(T)                                                                                  \
  template GramMatrix gram<T>(const Tensor3<T>&);                                                                  \
  template TermResult<T> content_term<T>(const Tensor3<T>&, const Tensor3<T>&);                                    \
  template TermResult<T> style_term<T>(const Tensor3<T>&, const GramMatrix&, double, StyleNormalization);          \
  template ContentTarget<T> build_content_target<T>(const Tensor3<T>&, const WeightStore&, const LayerSet&,        \
                                                    PoolingMode);                                                  \
  template StyleTarget build_style_target<T>(const Tensor3<T>&, const WeightStore&, const LossConfig&, PoolingMode); \
  template LossEvaluation<T> total_loss<T>(const Tensor3<T>&, const ContentTarget<T>&, const StyleTarget&,        \
                                           const LossConfig&, const WeightStore&, PoolingMode);

NST_INSTANTIATE_LOSSES(float)
NST_INSTANTIATE_LOSSES(double)

}  // namespace nst
