#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include "nst/losses.hpp"
#include "nst/weights.hpp"

namespace nst {

enum class OptimizerMethod { lbfgs, adam };

OptimizerMethod parse_optimizer_method(const std::string& name);
std::string to_string(OptimizerMethod m);

struct OptimizerSettings {
  OptimizerMethod method = OptimizerMethod::lbfgs;
  int max_iters = 300;
  int history_size = 20;
  // Backtracking Armijo line search.
  double armijo_c1 = 1e-4;
  double backtrack_shrink = 0.5;
  int max_backtracks = 20;
  /// Largest per-pixel change of the first (steepest-descent) step.
  double initial_step = 10.0;
  // Adam.
  double adam_rate = 1.0;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_epsilon = 1e-8;
  // Stopping.
  double grad_tol = 1e-10;
  double loss_rel_tol = 1e-7;
  int loss_window = 10;
  /// Projection (if any) runs every this many iterations and at termination.
  int clamp_interval = 25;
  std::uint64_t seed = 0;

  void validate() const;
};

struct TraceEntry {
  int iter = 0;
  double loss = 0.0;
  double content_loss = 0.0;
  double style_loss = 0.0;
  double grad_norm = 0.0;
  double step = 0.0;
  double millis = 0.0;
};

struct OptTrace {
  std::vector<TraceEntry> entries;  // entries[0] is the initial point
  double final_loss = 0.0;          // loss of the returned image
  int evaluations = 0;
  std::string stop_reason;
};

using Objective = std::function<LossEvaluation<float>(const Tensor3f&)>;
/// In-place feasibility projection, e.g. clamp_to_range.
using Projection = std::function<void(Tensor3f&)>;
using IterationCallback = std::function<void(const TraceEntry&)>;

struct OptimizeResult {
  Tensor3f image;
  OptTrace trace;
};

/// Raised when the objective returns a non-finite loss or gradient. Carries the
/// last finite iterate and the trace so far.
class OptimizationAborted : public NumericError {
 public:
  OptimizationAborted(const std::string& what, Tensor3f last_good, OptTrace trace)
      : NumericError(what), last_good_(std::move(last_good)), trace_(std::move(trace)) {}
  const Tensor3f& last_good() const { return last_good_; }
  const OptTrace& trace() const { return trace_; }

 private:
  Tensor3f last_good_;
  OptTrace trace_;
};

/// Minimises `objective` from `init` and returns the best iterate seen. The
/// projection, when given, is applied to the initial point, every
/// clamp_interval iterations, and to the returned image.
OptimizeResult minimize(const Objective& objective, Tensor3f init, const OptimizerSettings& settings,
                        const Projection& project = {}, const IterationCallback& on_iteration = {});

/// Clamps a preprocessed image so that deprocessing lands in 0..255.
Tensor3f clamp_to_range(const Tensor3f& image, const PreprocessMeta& meta);
void clamp_in_place(Tensor3f& image, const PreprocessMeta& meta);

/// CSV with columns iter,loss,content_loss,style_loss,grad_norm,step,millis.
/// `header_comments` are written first, each prefixed with "# ".
void write_trace_csv(std::ostream& out, const OptTrace& trace, const std::vector<std::string>& header_comments = {});

}  // namespace nst
