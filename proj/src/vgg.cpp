#include "nst/vgg.hpp"

#include <cmath>

namespace nst {

namespace {

// Tensor channel c holds image channel source_channel(meta, c).
std::size_t source_channel(const PreprocessMeta& meta, std::size_t c) {
  return meta.channel_order == "BGR" ? 2 - c : c;
}

}  // namespace

Tensor3f preprocess_planes(const Tensor3f& planes, const PreprocessMeta& meta) {
  if (planes.channels() != 3 || planes.empty()) {
    throw DimensionError("preprocess: expected a non-empty 3-channel image, got " + planes.shape_string());
  }
  Tensor3f out(3, planes.height(), planes.width());
  for (std::size_t c = 0; c < 3; ++c) {
    const auto src = planes.plane(source_channel(meta, c));
    auto dst = out.plane(c);
    for (std::size_t i = 0; i < src.size(); ++i) dst[i] = src[i] - meta.mean[c];
  }
  return out;
}

Tensor3f deprocess_planes(const Tensor3f& tensor, const PreprocessMeta& meta) {
  if (tensor.channels() != 3) throw DimensionError("deprocess: expected 3 channels, got " + tensor.shape_string());
  Tensor3f out(3, tensor.height(), tensor.width());
  for (std::size_t c = 0; c < 3; ++c) {
    const auto src = tensor.plane(c);
    auto dst = out.plane(source_channel(meta, c));
    for (std::size_t i = 0; i < src.size(); ++i) dst[i] = src[i] + meta.mean[c];
  }
  return out;
}

Tensor3f preprocess(const RgbImage& image, const PreprocessMeta& meta) {
  if (image.empty()) throw DimensionError("preprocess: zero-sized image");
  return preprocess_planes(to_planes(image), meta);
}

RgbImage deprocess(const Tensor3f& tensor, const PreprocessMeta& meta) {
  return from_planes(deprocess_planes(tensor, meta));
}

template <typename T>
const Tensor3<T>& ActivationCache<T>::at(LayerName layer) const {
  if (layer.index() >= activations.size()) throw NameError("layer " + layer.str() + " was not computed");
  return activations[layer.index()];
}

template <typename T>
std::size_t ActivationCache<T>::memory_bytes() const {
  std::size_t bytes = 0;
  for (const auto& a : activations) bytes += a.size() * sizeof(T);
  return bytes;
}

template <typename T>
ActivationCache<T> forward(const Tensor3<T>& input, const WeightStore& store, const LayerSet& requested,
                           PoolingMode pooling) {
  if (input.channels() != 3) throw DimensionError("forward: input must have 3 channels, got " + input.shape_string());
  if (input.empty()) throw DimensionError("forward: empty input");

  ActivationCache<T> cache;
  cache.input_height = input.height();
  cache.input_width = input.width();
  cache.pooling = pooling;
  cache.requested = requested;
  if (requested.empty()) return cache;

  const std::size_t depth = requested.rbegin()->index() + 1;
  cache.activations.reserve(depth);
  cache.pool_records.resize(depth);
  const Tensor3<T>* current = &input;
  for (std::size_t i = 0; i < depth; ++i) {
    const LayerInfo& info = kVgg19Layers[i];
    if (info.kind == LayerKind::conv) {
      cache.activations.push_back(relu_forward(conv2d_forward(*current, store.kernel(std::string(info.name)))));
    } else {
      auto pooled = pool_forward(*current, pooling);
      cache.activations.push_back(std::move(pooled.output));
      cache.pool_records[i] = std::move(pooled.record);
    }
    current = &cache.activations.back();
  }
  return cache;
}

template <typename T>
Tensor3<T> backward(const ActivationCache<T>& cache, const WeightStore& store, const LayerGrads<T>& layer_grads) {
  if (layer_grads.empty()) return Tensor3<T>(3, cache.input_height, cache.input_width);
  for (const auto& [layer, grad] : layer_grads) {
    if (!cache.requested.contains(layer)) throw NameError("backward: layer " + layer.str() + " was not requested");
    require_same_shape(grad, cache.at(layer), "backward");
  }

  const std::size_t deepest = layer_grads.rbegin()->first.index();
  Tensor3<T> grad = layer_grads.rbegin()->second;
  for (std::size_t i = deepest + 1; i-- > 0;) {
    const LayerInfo& info = kVgg19Layers[i];
    if (i != deepest) {
      if (auto it = layer_grads.find(LayerName::at(i)); it != layer_grads.end()) {
        for (std::size_t k = 0; k < grad.size(); ++k) grad[k] += it->second[k];
      }
    }
    if (info.kind == LayerKind::conv) {
      grad = conv2d_backward_input(relu_backward(grad, cache.activations[i]), store.kernel(std::string(info.name)));
    } else {
      grad = pool_backward(grad, cache.pool_records[i]);
    }
  }
  return grad;
}

#define NST_INSTANTIATE_VGG(T)                                                                              \
  template struct ActivationCache<T>;                                                                       \
  template ActivationCache<T> forward<T>(const Tensor3<T>&, const WeightStore&, const LayerSet&, PoolingMode); \
  template Tensor3<T> backward<T>(const ActivationCache<T>&, const WeightStore&, const LayerGrads<T>&);

NST_INSTANTIATE_VGG(float)
NST_INSTANTIATE_VGG(double)

}  // namespace nst
