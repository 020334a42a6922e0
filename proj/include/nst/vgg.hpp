#pragma once

#include <map>
#include <vector>

#include "nst/image.hpp"
#include "nst/layers.hpp"
#include "nst/tensor_ops.hpp"
#include "nst/weights.hpp"

namespace nst {

/// Reorders channels per `meta.channel_order` and subtracts the channel means.
Tensor3f preprocess(const RgbImage& image, const PreprocessMeta& meta);
/// Same transform applied to float RGB planes in 0..255 (no rounding).
Tensor3f preprocess_planes(const Tensor3f& planes, const PreprocessMeta& meta);
/// Inverse of preprocess_planes; no clamping.
Tensor3f deprocess_planes(const Tensor3f& tensor, const PreprocessMeta& meta);
/// Inverse of preprocess, rounding and clamping to 0..255.
RgbImage deprocess(const Tensor3f& tensor, const PreprocessMeta& meta);

/// Activations of one forward pass, retained for the matching backward pass.
/// Holds every layer from the input up to the deepest requested one.
template <typename T>
struct ActivationCache {
  std::size_t input_height = 0;
  std::size_t input_width = 0;
  PoolingMode pooling = PoolingMode::average;
  LayerSet requested;
  std::vector<Tensor3<T>> activations;  // indexed by LayerName::index()
  std::vector<PoolRecord> pool_records; // same indexing; empty for conv layers

  std::size_t depth() const { return activations.size(); }
  /// Throws NameError if `layer` was not computed.
  const Tensor3<T>& at(LayerName layer) const;
  /// Sum of cached activation sizes in bytes.
  std::size_t memory_bytes() const;
};

template <typename T>
using LayerGrads = std::map<LayerName, Tensor3<T>>;

/// Runs the chain up to max(requested). Input must have 3 channels.
template <typename T>
ActivationCache<T> forward(const Tensor3<T>& input, const WeightStore& store, const LayerSet& requested,
                           PoolingMode pooling);

/// Gradient of sum_l <layer_grads[l], f_l(x)> with respect to the input x.
template <typename T>
Tensor3<T> backward(const ActivationCache<T>& cache, const WeightStore& store, const LayerGrads<T>& layer_grads);

}  // namespace nst
