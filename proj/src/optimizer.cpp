#include "nst/optimizer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <deque>
#include <ostream>

namespace nst {

OptimizerMethod parse_optimizer_method(const std::string& name) {
  if (name == "lbfgs") return OptimizerMethod::lbfgs;
  if (name == "adam") return OptimizerMethod::adam;
  throw NameError("unknown optimizer '" + name + "' (expected lbfgs or adam)");
}

std::string to_string(OptimizerMethod m) { return m == OptimizerMethod::adam ? "adam" : "lbfgs"; }

void OptimizerSettings::validate() const {
  if (max_iters < 1) throw ParameterError("max_iters must be at least 1");
  if (history_size < 1) throw ParameterError("history_size must be at least 1");
  if (grad_tol < 0.0 || loss_rel_tol < 0.0) throw ParameterError("tolerances must be non-negative");
  if (!(armijo_c1 > 0.0 && armijo_c1 < 1.0)) throw ParameterError("armijo_c1 must lie in (0, 1)");
  if (!(backtrack_shrink > 0.0 && backtrack_shrink < 1.0)) throw ParameterError("backtrack_shrink must lie in (0, 1)");
  if (!(initial_step > 0.0) || !(adam_rate > 0.0)) throw ParameterError("step sizes must be positive");
  if (clamp_interval < 1 || loss_window < 1) throw ParameterError("intervals must be at least 1");
}

namespace {

using Vec = std::vector<double>;
using Clock = std::chrono::steady_clock;

double dot(const Vec& a, const Vec& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double norm(const Vec& a) { return std::sqrt(dot(a, a)); }

Vec to_vec(const Tensor3f& t) { return Vec(t.values().begin(), t.values().end()); }

bool finite(const LossEvaluation<float>& e) { return std::isfinite(e.loss) && all_finite(e.grad); }

class Run {
 public:
  Run(const Objective& objective, const OptimizerSettings& settings, const Projection& project,
      const IterationCallback& on_iteration)
      : objective_(objective), settings_(settings), project_(project), on_iteration_(on_iteration),
        start_(Clock::now()) {}

  LossEvaluation<float> evaluate(const Tensor3f& x) {
    ++trace_.evaluations;
    auto e = objective_(x);
    if (!finite(e)) {
      trace_.stop_reason = "non-finite objective";
      throw OptimizationAborted("objective returned a non-finite loss or gradient after " +
                                    std::to_string(trace_.evaluations) + " evaluations; last good loss " +
                                    std::to_string(best_loss_),
                                best_, trace_);
    }
    return e;
  }

  void record(int iter, const LossEvaluation<float>& e, double step, const Tensor3f& x) {
    TraceEntry entry;
    entry.iter = iter;
    entry.loss = e.loss;
    entry.content_loss = e.breakdown.content;
    entry.style_loss = e.breakdown.style;
    entry.grad_norm = std::sqrt(nst::dot(e.grad, e.grad));
    entry.step = step;
    entry.millis = std::chrono::duration<double, std::milli>(Clock::now() - start_).count();
    trace_.entries.push_back(entry);
    if (trace_.entries.size() == 1 || e.loss < best_loss_) {
      best_loss_ = e.loss;
      best_ = x;
    }
    if (on_iteration_) on_iteration_(entry);
  }

  /// True if the loss has not improved by loss_rel_tol over the last loss_window iterations
  /// since the most recent projection.
  bool stalled() const {
    const auto w = static_cast<std::size_t>(settings_.loss_window);
    const auto& e = trace_.entries;
    if (e.size() <= segment_start_ + w) return false;
    const double old_loss = e[e.size() - 1 - w].loss;
    const double new_loss = e.back().loss;
    return old_loss - new_loss <= settings_.loss_rel_tol * std::abs(old_loss);
  }

  bool project(Tensor3f& x) const {
    if (!project_) return false;
    const Tensor3f before = x;
    project_(x);
    return !(before == x);
  }

  OptimizeResult finish(const std::string& reason) {
    trace_.stop_reason = reason;
    Tensor3f result = best_;
    if (project(result)) {
      auto e = evaluate(result);
      if (e.loss > trace_.entries.front().loss) {
        // Projection of the best iterate lost ground; fall back to the (already feasible) start.
        result = initial_;
        trace_.final_loss = trace_.entries.front().loss;
      } else {
        trace_.final_loss = e.loss;
      }
    } else {
      trace_.final_loss = best_loss_;
    }
    return {std::move(result), std::move(trace_)};
  }

  /// Projects x; if that moved it, later stall checks start from the next recorded entry.
  bool project_iterate(Tensor3f& x) {
    if (!project(x)) return false;
    segment_start_ = trace_.entries.size();
    return true;
  }

  void set_initial(const Tensor3f& x) { initial_ = x; }
  const OptimizerSettings& settings() const { return settings_; }

 private:
  const Objective& objective_;
  const OptimizerSettings& settings_;
  const Projection& project_;
  const IterationCallback& on_iteration_;
  Clock::time_point start_;
  OptTrace trace_;
  Tensor3f best_;
  Tensor3f initial_;
  double best_loss_ = 0.0;
  std::size_t segment_start_ = 0;
};

OptimizeResult run_lbfgs(Run& run, Tensor3f x) {
  const OptimizerSettings& s = run.settings();
  auto current = run.evaluate(x);
  run.record(0, current, 0.0, x);
  Vec g = to_vec(current.grad);

  std::deque<Vec> s_hist;
  std::deque<Vec> y_hist;
  std::deque<double> rho_hist;

  for (int iter = 1; iter <= s.max_iters; ++iter) {
    const double gnorm = norm(g);
    if (gnorm <= s.grad_tol) return run.finish("gradient norm below tolerance");

    // Two-loop recursion for d = -H g.
    Vec d(g.size());
    for (std::size_t i = 0; i < g.size(); ++i) d[i] = -g[i];
    std::vector<double> alpha(s_hist.size());
    for (std::size_t k = s_hist.size(); k-- > 0;) {
      alpha[k] = rho_hist[k] * dot(s_hist[k], d);
      for (std::size_t i = 0; i < d.size(); ++i) d[i] -= alpha[k] * y_hist[k][i];
    }
    if (!s_hist.empty()) {
      const double gamma = dot(s_hist.back(), y_hist.back()) / dot(y_hist.back(), y_hist.back());
      for (auto& v : d) v *= gamma;
    }
    for (std::size_t k = 0; k < s_hist.size(); ++k) {
      const double beta = rho_hist[k] * dot(y_hist[k], d);
      for (std::size_t i = 0; i < d.size(); ++i) d[i] += (alpha[k] - beta) * s_hist[k][i];
    }

    double slope = dot(g, d);
    double t = 1.0;
    if (s_hist.empty() || !(slope < 0.0)) {
      s_hist.clear();
      y_hist.clear();
      rho_hist.clear();
      for (std::size_t i = 0; i < g.size(); ++i) d[i] = -g[i];
      slope = -gnorm * gnorm;
      const double dmax = std::abs(*std::max_element(d.begin(), d.end(), [](double a, double b) {
        return std::abs(a) < std::abs(b);
      }));
      t = s.initial_step / dmax;
    }

    // Backtracking Armijo search along d.
    Tensor3f trial = x;
    LossEvaluation<float> next;
    bool accepted = false;
    for (int bt = 0; bt <= s.max_backtracks; ++bt) {
      for (std::size_t i = 0; i < d.size(); ++i) trial[i] = static_cast<float>(x[i] + t * d[i]);
      if (trial == x) break;
      next = run.evaluate(trial);
      if (next.loss <= current.loss + s.armijo_c1 * t * slope) {
        accepted = true;
        break;
      }
      t *= s.backtrack_shrink;
    }
    if (!accepted) {
      if (!s_hist.empty()) {
        // Curvature history led us astray; retry this iteration from steepest descent.
        s_hist.clear();
        y_hist.clear();
        rho_hist.clear();
        --iter;
        continue;
      }
      return run.finish("line search failed");
    }

    Vec sv(g.size());
    Vec yv(g.size());
    for (std::size_t i = 0; i < g.size(); ++i) {
      sv[i] = static_cast<double>(trial[i]) - static_cast<double>(x[i]);
      yv[i] = static_cast<double>(next.grad[i]) - g[i];
    }
    x = std::move(trial);
    current = std::move(next);
    g = to_vec(current.grad);

    const double sy = dot(sv, yv);
    if (sy > 1e-10 * norm(sv) * norm(yv)) {
      s_hist.push_back(std::move(sv));
      y_hist.push_back(std::move(yv));
      rho_hist.push_back(1.0 / sy);
      if (s_hist.size() > static_cast<std::size_t>(s.history_size)) {
        s_hist.pop_front();
        y_hist.pop_front();
        rho_hist.pop_front();
      }
    }

    if (iter % s.clamp_interval == 0 && run.project_iterate(x)) {
      current = run.evaluate(x);
      g = to_vec(current.grad);
    }
    run.record(iter, current, t, x);
    if (current.loss == 0.0) return run.finish("zero loss");
    if (run.stalled()) return run.finish("relative loss change below tolerance");
  }
  return run.finish("max iterations");
}

OptimizeResult run_adam(Run& run, Tensor3f x) {
  const OptimizerSettings& s = run.settings();
  auto current = run.evaluate(x);
  run.record(0, current, 0.0, x);
  Vec m(x.size(), 0.0);
  Vec v(x.size(), 0.0);
  double b1 = 1.0;
  double b2 = 1.0;
  for (int iter = 1; iter <= s.max_iters; ++iter) {
    if (std::sqrt(nst::dot(current.grad, current.grad)) <= s.grad_tol) {
      return run.finish("gradient norm below tolerance");
    }
    b1 *= s.adam_beta1;
    b2 *= s.adam_beta2;
    for (std::size_t i = 0; i < x.size(); ++i) {
      const double gi = current.grad[i];
      m[i] = s.adam_beta1 * m[i] + (1.0 - s.adam_beta1) * gi;
      v[i] = s.adam_beta2 * v[i] + (1.0 - s.adam_beta2) * gi * gi;
      const double mhat = m[i] / (1.0 - b1);
      const double vhat = v[i] / (1.0 - b2);
      x[i] = static_cast<float>(x[i] - s.adam_rate * mhat / (std::sqrt(vhat) + s.adam_epsilon));
    }
    if (iter % s.clamp_interval == 0) run.project_iterate(x);
    current = run.evaluate(x);
    run.record(iter, current, s.adam_rate, x);
    if (current.loss == 0.0) return run.finish("zero loss");
    if (run.stalled()) return run.finish("relative loss change below tolerance");
  }
  return run.finish("max iterations");
}

}  // namespace

OptimizeResult minimize(const Objective& objective, Tensor3f init, const OptimizerSettings& settings,
                        const Projection& project, const IterationCallback& on_iteration) {
  settings.validate();
  if (!all_finite(init)) throw NumericError("minimize: initial image contains non-finite values");
  Run run(objective, settings, project, on_iteration);
  run.project(init);
  run.set_initial(init);
  if (settings.method == OptimizerMethod::adam) return run_adam(run, std::move(init));
  return run_lbfgs(run, std::move(init));
}

void clamp_in_place(Tensor3f& image, const PreprocessMeta& meta) {
  if (image.channels() != 3) throw DimensionError("clamp_to_range: expected 3 channels, got " + image.shape_string());
  for (std::size_t c = 0; c < 3; ++c) {
    const float lo = -meta.mean[c];
    const float hi = 255.0f - meta.mean[c];
    for (auto& v : image.plane(c)) v = std::clamp(v, lo, hi);
  }
}

Tensor3f clamp_to_range(const Tensor3f& image, const PreprocessMeta& meta) {
  Tensor3f out = image;
  clamp_in_place(out, meta);
  return out;
}

void write_trace_csv(std::ostream& out, const OptTrace& trace, const std::vector<std::string>& header_comments) {
  for (const auto& line : header_comments) out << "# " << line << '\n';
  out << "iter,loss,content_loss,style_loss,grad_norm,step,millis\n";
  char buf[256];
  for (const auto& e : trace.entries) {
    std::snprintf(buf, sizeof buf, "%d,%.9g,%.9g,%.9g,%.9g,%.9g,%.3f\n", e.iter, e.loss, e.content_loss, e.style_loss,
                  e.grad_norm, e.step, e.millis);
    out << buf;
  }
}

}  // namespace nst
