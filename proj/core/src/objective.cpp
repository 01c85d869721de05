#include "ntr/objective.hpp"

#include <cmath>

namespace ntr {

double Evaluator::operator()(const Vector& x) {
  auto it = cache_.find(x);
  if (it != cache_.end()) return it->second;
  if (evals_ >= budget_) throw BudgetExceededError("objective evaluation budget exhausted");
  const double v = f_(x);
  ++evals_;
  if (!std::isfinite(v)) throw ObjectiveFailureError("objective returned a non-finite value", x);
  cache_.emplace(x, v);
  return v;
}

bool Evaluator::cached(const Vector& x, double* value) const {
  auto it = cache_.find(x);
  if (it == cache_.end()) return false;
  if (value) *value = it->second;
  return true;
}

}  // namespace ntr
