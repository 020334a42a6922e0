#include "nst/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <random>

#include "nst/pipeline.hpp"
#include "nst/tensor_ops.hpp"
#include "nst/vgg.hpp"

namespace nst {

bool GradcheckReport::passed() const {
  return std::all_of(cases.begin(), cases.end(), [](const GradcheckCase& c) { return c.passed; });
}

namespace {

Tensor3d random_tensor(std::size_t c, std::size_t h, std::size_t w, double scale, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> dist(-scale, scale);
  Tensor3d t(c, h, w);
  for (auto& v : t.values()) v = dist(rng);
  return t;
}

ConvKernel random_kernel(std::size_t out, std::size_t in, std::mt19937_64& rng) {
  std::normal_distribution<float> dist(0.0f, 0.5f);
  ConvKernel k(out, in);
  for (auto& w : k.weights) w = dist(rng);
  for (auto& b : k.bias) b = dist(rng);
  return k;
}

double relative_error(double analytic, double numeric) {
  const double denom = std::max({std::abs(analytic), std::abs(numeric), 1e-12});
  return std::abs(analytic - numeric) / denom;
}

// Compares `grad` against central differences of `f` at the given flat indices.
GradcheckCase compare(const std::string& name, const std::function<double(const Tensor3d&)>& f, Tensor3d x,
                      const Tensor3d& grad, const std::vector<std::size_t>& indices, double step, double tol) {
  GradcheckCase result{name, 0.0, indices.size(), false};
  for (auto i : indices) {
    const double orig = x[i];
    x[i] = orig + step;
    const double up = f(x);
    x[i] = orig - step;
    const double down = f(x);
    x[i] = orig;
    result.max_rel_error = std::max(result.max_rel_error, relative_error(grad[i], (up - down) / (2.0 * step)));
  }
  result.passed = result.max_rel_error < tol;
  return result;
}

std::vector<std::size_t> all_indices(std::size_t n) {
  std::vector<std::size_t> idx(n);
  for (std::size_t i = 0; i < n; ++i) idx[i] = i;
  return idx;
}

// Keeps inputs away from the rectifier kink and from max-pool ties.
void push_off_kink(Tensor3d& x, double margin) {
  for (auto& v : x.values()) {
    if (std::abs(v) < margin) v = v < 0 ? -margin : margin;
  }
}

// Replaces values with a shuffled ladder of spacing `gap` so no max-pool window has a near tie.
void separate_values(Tensor3d& x, double gap, std::mt19937_64& rng) {
  std::vector<double> ladder(x.size());
  for (std::size_t i = 0; i < ladder.size(); ++i) ladder[i] = (static_cast<double>(i) - ladder.size() / 2.0) * gap;
  std::shuffle(ladder.begin(), ladder.end(), rng);
  std::copy(ladder.begin(), ladder.end(), x.values().begin());
}

}  // namespace

GradcheckReport run_gradcheck(const GradcheckSettings& s) {
  std::mt19937_64 rng(s.seed);
  GradcheckReport report;

  {
    const ConvKernel k = random_kernel(3, 2, rng);
    const Tensor3d x = random_tensor(2, 5, 5, 1.0, rng);
    const Tensor3d probe = random_tensor(3, 5, 5, 1.0, rng);
    auto f = [&](const Tensor3d& in) { return dot(conv2d_forward(in, k), probe); };
    report.cases.push_back(compare("conv2d_backward_input", f, x, conv2d_backward_input(probe, k),
                                   all_indices(x.size()), s.step, s.tolerance));
  }
  {
    Tensor3d x = random_tensor(2, 5, 5, 1.0, rng);
    push_off_kink(x, 10 * s.step);
    const Tensor3d probe = random_tensor(2, 5, 5, 1.0, rng);
    auto f = [&](const Tensor3d& in) { return dot(relu_forward(in), probe); };
    report.cases.push_back(compare("relu_backward", f, x, relu_backward(probe, x), all_indices(x.size()), s.step,
                                   s.tolerance));
  }
  for (const PoolingMode mode : {PoolingMode::max, PoolingMode::average}) {
    Tensor3d x = random_tensor(3, 7, 6, 1.0, rng);
    if (mode == PoolingMode::max) separate_values(x, 10 * s.step, rng);
    const auto pooled = pool_forward(x, mode);
    const Tensor3d probe = random_tensor(3, pooled.output.height(), pooled.output.width(), 1.0, rng);
    auto f = [&](const Tensor3d& in) { return dot(pool_forward(in, mode).output, probe); };
    report.cases.push_back(compare(std::string("pool_backward_") + std::string(to_string(mode)), f, x,
                                   pool_backward(probe, pooled.record), all_indices(x.size()), s.step, s.tolerance));
  }
  {
    const WeightStore store = random_weight_store(s.seed);
    TransferConfig cfg = preset("V");
    const Tensor3d content = random_tensor(3, s.size, s.size, 60.0, rng);
    const Tensor3d style = random_tensor(3, s.size, s.size, 60.0, rng);
    const Tensor3d x = random_tensor(3, s.size, s.size, 60.0, rng);
    const auto content_target = build_content_target(content, store, cfg.loss.content_layers, cfg.pooling);
    const auto style_target = build_style_target(style, store, cfg.loss, cfg.pooling);
    auto f = [&](const Tensor3d& in) {
      return total_loss(in, content_target, style_target, cfg.loss, store, cfg.pooling).loss;
    };
    const auto eval = total_loss(x, content_target, style_target, cfg.loss, store, cfg.pooling);
    std::uniform_int_distribution<std::size_t> pick(0, x.size() - 1);
    std::vector<std::size_t> indices;
    while (indices.size() < std::min(s.pixels, x.size())) {
      const std::size_t i = pick(rng);
      if (std::find(indices.begin(), indices.end(), i) == indices.end()) indices.push_back(i);
    }
    report.cases.push_back(compare("total_loss_preset_V", f, x, eval.grad, indices, s.step, s.tolerance));
  }
  return report;
}

}  // namespace nst
