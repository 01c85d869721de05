#pragma once

#include <cstddef>
#include <functional>
#include <map>
#include <stdexcept>

#include "ntr/linalg.hpp"

namespace ntr {

class ObjectiveFailureError : public std::runtime_error {
public:
  ObjectiveFailureError(const std::string& what, Vector at)
      : std::runtime_error(what), at_(std::move(at)) {}
  const Vector& at() const { return at_; }

private:
  Vector at_;
};

class BudgetExceededError : public std::runtime_error {
public:
  explicit BudgetExceededError(const std::string& what) : std::runtime_error(what) {}
};

/// Budgeted, memoizing wrapper around the true objective. Each distinct point
/// fires the callback once; `evals()` counts exactly those fires.
class Evaluator {
public:
  Evaluator(std::function<double(const Vector&)> f, std::size_t budget)
      : f_(std::move(f)), budget_(budget) {}

  double operator()(const Vector& x);

  /// Value at a point already in the cache, without evaluating.
  bool cached(const Vector& x, double* value = nullptr) const;

  std::size_t evals() const { return evals_; }
  std::size_t budget() const { return budget_; }
  std::size_t remaining() const { return budget_ > evals_ ? budget_ - evals_ : 0; }

private:
  std::function<double(const Vector&)> f_;
  std::size_t budget_;
  std::size_t evals_ = 0;
  std::map<Vector, double> cache_;
};

}  // namespace ntr
