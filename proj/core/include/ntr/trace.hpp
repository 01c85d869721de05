#pragma once

#include <cstddef>
#include <iosfwd>
#include <limits>
#include <string>
#include <vector>

#include "ntr/linalg.hpp"

namespace ntr {

inline constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

/// One row of a run trace. Engine-specific fields stay NaN/0 when unused.
struct IterationRecord {
  std::size_t iter = 0;
  Vector x;
  double f = kNaN;
  double delta = kNaN;
  double rho = kNaN;
  double step_norm = kNaN;
  double model_decrease = kNaN;
  bool accepted = false;
  std::string update_kind;  // success-swap | geometry-repair | shrink
  double kkt_stationarity = kNaN;
  double kkt_complementarity = kNaN;
  double kkt_curvature = kNaN;
  std::size_t evals = 0;
  // black-box engine extras
  double train_mse = kNaN;
  double test_mse = kNaN;
  double loss_ldelta = kNaN;
  double loss_cauchy = kNaN;
  double loss_local = kNaN;
  double loss_agreement = kNaN;
  double clarke_proxy = kNaN;
  std::size_t n_w = 0;
  std::size_t n_b = 0;
};

enum class TraceSchema { quadratic, blackbox };

enum class TerminationReason { delta, stationarity, budget, max_iters, failure };

std::string to_string(TerminationReason r);

struct OptimizationResult {
  Vector x;
  double f = kNaN;
  std::size_t evals = 0;
  std::size_t iters = 0;
  TerminationReason terminated_by = TerminationReason::max_iters;
  std::vector<IterationRecord> trace;
  TraceSchema schema = TraceSchema::quadratic;
  std::size_t beta_violations = 0;
  double clarke_proxy = kNaN;
  std::string failure_message;
};

/// 17-significant-digit decimal rendering; round-trips finite doubles exactly.
std::string format_double17(double v);

std::vector<std::string> trace_columns(TraceSchema schema, std::size_t dim);
void write_trace_csv(std::ostream& out, TraceSchema schema, std::size_t dim,
                     const std::vector<IterationRecord>& rows);

}  // namespace ntr
