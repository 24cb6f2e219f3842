#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <string>

#include "fakenews/autodiff.hpp"

namespace fakenews {

struct NamedTensor {
  std::string name;
  Tensor* tensor;
};

struct GradCheckReport {
  double max_rel_error = 0.0;
  std::string worst_parameter;
  std::size_t worst_element = 0;
  double worst_analytic = 0.0;
  double worst_numeric = 0.0;
  std::size_t checked = 0;
  /// Elements whose +/- probes landed in a different ReLU/max-pool piece than
  /// the base point; the central difference is meaningless there.
  std::size_t skipped_at_kinks = 0;
  bool passed = true;

  std::string describe() const;
};

/// Compares analytic gradients of a scalar graph against central differences
/// (f(p+h) - f(p-h)) / 2h for every element of every listed parameter.
/// Relative error is |a - n| / max(|a|, |n|, abs_floor). The floor defaults
/// to step^2, the order of the central difference's truncation error, so
/// gradients that are zero up to that resolution are compared absolutely.
///
/// Throws OracleInvalidError if two forward passes at the same point differ.
GradCheckReport finite_diff_check(const std::function<Var(Graph&)>& build_loss,
                                  std::span<const NamedTensor> params, double step, double tol,
                                  std::optional<double> abs_floor = std::nullopt);

}  // namespace fakenews
