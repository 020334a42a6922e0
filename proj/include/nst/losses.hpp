#pragma once

#include <map>
#include <string>
#include <vector>

#include "nst/layers.hpp"
#include "nst/tensor_ops.hpp"
#include "nst/weights.hpp"

namespace nst {

/// Uncentered channel inner products G[i][j] = sum_p f_i(p) f_j(p) of one feature map.
struct GramMatrix {
  std::size_t channels = 0;
  std::size_t spatial_size = 0;  // N_l of the image it was computed from
  std::vector<double> values;    // row-major channels x channels, exactly symmetric

  double operator()(std::size_t i, std::size_t j) const { return values[i * channels + j]; }
};

template <typename T>
GramMatrix gram(const Tensor3<T>& feature);

/// How the per-layer style loss is scaled before w_l.
enum class StyleNormalization {
  per_layer,  // n(l) = 1 / (4 C^2 N^2), Grams compared per spatial position
  raw,        // n(l) = 1, the bare sum of squared Gram differences
};

StyleNormalization parse_style_normalization(const std::string& name);
std::string to_string(StyleNormalization n);

template <typename T>
struct TermResult {
  double loss = 0.0;
  Tensor3<T> grad;
};

/// sum (current - target)^2 and its gradient 2 (current - target).
template <typename T>
TermResult<T> content_term(const Tensor3<T>& current, const Tensor3<T>& target);

/// w n(l) sum_ij (G' - G)^2 with G' = gram(current). In per-layer mode the two
/// Grams are compared after dividing by their own spatial sizes, which reduces
/// to the plain difference when the sizes agree.
template <typename T>
TermResult<T> style_term(const Tensor3<T>& current, const GramMatrix& target, double weight,
                         StyleNormalization normalization = StyleNormalization::per_layer);

struct LossConfig {
  LayerSet content_layers;
  LayerSet style_layers;
  std::map<LayerName, double> style_weights;  // missing entries default to 1/|style_layers|
  double lambda = 1.0;
  StyleNormalization normalization = StyleNormalization::per_layer;

  double style_weight(LayerName layer) const;
  /// Throws ParameterError on negative lambda, non-positive weights, or weights
  /// for layers outside style_layers.
  void validate() const;
};

template <typename T>
struct ContentTarget {
  std::map<LayerName, Tensor3<T>> features;
};

struct StyleTarget {
  std::map<LayerName, GramMatrix> grams;
  std::map<LayerName, double> weights;
};

template <typename T>
ContentTarget<T> build_content_target(const Tensor3<T>& content, const WeightStore& store, const LayerSet& layers,
                                      PoolingMode pooling);

template <typename T>
StyleTarget build_style_target(const Tensor3<T>& style, const WeightStore& store, const LossConfig& cfg,
                               PoolingMode pooling);

struct LossBreakdown {
  double content = 0.0;  // content_sum
  double style = 0.0;    // lambda * style_sum
  std::map<std::string, double> per_layer;  // "content:<layer>" / "style:<layer>", in total-loss units
};

template <typename T>
struct LossEvaluation {
  double loss = 0.0;
  Tensor3<T> grad;
  LossBreakdown breakdown;
};

/// content_sum + lambda * style_sum with the image gradient from one forward
/// and one backward pass. The content term is skipped when content_layers is
/// empty; the style term when lambda is zero.
template <typename T>
LossEvaluation<T> total_loss(const Tensor3<T>& image, const ContentTarget<T>& content_target,
                             const StyleTarget& style_target, const LossConfig& cfg, const WeightStore& store,
                             PoolingMode pooling);

}  // namespace nst
