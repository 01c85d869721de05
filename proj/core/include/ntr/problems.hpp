#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "ntr/linalg.hpp"

namespace ntr {

struct Problem {
  std::string name;
  std::size_t dim = 0;
  std::function<double(const Vector&)> evaluate;
  std::optional<Vector> known_minimizer;
  std::optional<double> known_minimum;
  bool smooth = true;
  std::string lipschitz_note;
};

/// Registry lookup; throws std::invalid_argument for unknown names.
Problem get_problem(const std::string& name);

struct ProblemInfo {
  std::string name;
  std::size_t dim;
  bool smooth;
};

/// Full registry, sorted by name.
std::vector<ProblemInfo> list_problems();

}  // namespace ntr
