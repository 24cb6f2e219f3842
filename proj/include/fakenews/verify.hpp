#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "fakenews/reference_results.hpp"

namespace fakenews {

struct GradientSuiteOptions {
  std::size_t trials = 100;
  std::uint64_t seed = 1;
  double step = 1e-3;
  double tolerance = 1e-4;
};

struct GradientCaseResult {
  std::string name;
  std::size_t trials = 0;
  std::size_t elements_checked = 0;
  std::size_t skipped_at_kinks = 0;
  double max_rel_error = 0.0;
  std::string worst;  // description of the worst element seen
  bool passed = true;
};

/// Finite-difference checks of every layer type and of the three model
/// graphs at downscaled size, each over `trials` seeded random instances.
std::vector<GradientCaseResult> run_gradient_suite(const GradientSuiteOptions& options);

struct VerifyOptions {
  /// Reference tables to reproduce; the built-in published results if unset.
  std::optional<PublishedResults> published;
  bool gradients = true;
  GradientSuiteOptions gradient;
};

struct VerifySummary {
  std::vector<CheckResult> checks;
  bool passed() const;
  std::size_t failures() const;
};

VerifySummary run_verify(const VerifyOptions& options);

/// One "PASS name" / "FAIL name: detail" line per check.
void print_checks(std::ostream& out, const std::vector<CheckResult>& checks, bool failures_only = false);

}  // namespace fakenews
