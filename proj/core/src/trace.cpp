#include "ntr/trace.hpp"

#include <cstdio>
#include <ostream>

namespace ntr {

std::string to_string(TerminationReason r) {
  switch (r) {
    case TerminationReason::delta: return "delta";
    case TerminationReason::stationarity: return "stationarity";
    case TerminationReason::budget: return "budget";
    case TerminationReason::max_iters: return "max_iters";
    case TerminationReason::failure: return "failure";
  }
  return "unknown";
}

std::string format_double17(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::vector<std::string> trace_columns(TraceSchema schema, std::size_t dim) {
  std::vector<std::string> cols;
  cols.push_back("iter");
  for (std::size_t i = 0; i < dim; ++i) cols.push_back("x" + std::to_string(i));
  for (const char* c : {"f", "delta", "rho", "step_norm", "model_decrease", "accepted",
                        "update_kind", "kkt_stationarity", "kkt_complementarity",
                        "kkt_curvature", "evals"})
    cols.push_back(c);
  if (schema == TraceSchema::blackbox)
    for (const char* c : {"train_mse", "test_mse", "loss_ldelta", "loss_cauchy", "loss_local",
                          "loss_agreement", "clarke_proxy", "n_w", "n_b"})
      cols.push_back(c);
  return cols;
}

void write_trace_csv(std::ostream& out, TraceSchema schema, std::size_t dim,
                     const std::vector<IterationRecord>& rows) {
  const auto cols = trace_columns(schema, dim);
  for (std::size_t i = 0; i < cols.size(); ++i) out << (i ? "," : "") << cols[i];
  out << "\n";
  for (const IterationRecord& r : rows) {
    out << r.iter;
    for (std::size_t i = 0; i < dim; ++i) out << ',' << format_double17(r.x.at(i));
    out << ',' << format_double17(r.f) << ',' << format_double17(r.delta) << ','
        << format_double17(r.rho) << ',' << format_double17(r.step_norm) << ','
        << format_double17(r.model_decrease) << ',' << (r.accepted ? 1 : 0) << ','
        << r.update_kind << ',' << format_double17(r.kkt_stationarity) << ','
        << format_double17(r.kkt_complementarity) << ',' << format_double17(r.kkt_curvature)
        << ',' << r.evals;
    if (schema == TraceSchema::blackbox) {
      out << ',' << format_double17(r.train_mse) << ',' << format_double17(r.test_mse) << ','
          << format_double17(r.loss_ldelta) << ',' << format_double17(r.loss_cauchy) << ','
          << format_double17(r.loss_local) << ',' << format_double17(r.loss_agreement) << ','
          << format_double17(r.clarke_proxy) << ',' << r.n_w << ',' << r.n_b;
    }
    out << "\n";
  }
}

}  // namespace ntr
