#pragma once

#include <array>
#include <string>
#include <vector>

#include "fakenews/eval_report.hpp"

namespace fakenews {

/// Published per-class (precision, recall, F1) rows plus the support-weighted
/// average row, each rounded to two decimals.
struct PublishedMetricsTable {
  std::string model;
  std::array<std::array<double, 3>, kNumClasses> per_class{};
  std::array<double, 3> average{};
  std::array<long, kNumClasses> supports{};
};

struct PublishedMatrix {
  std::string model;
  ConfusionMatrix matrix;
};

struct PublishedAccuracy {
  std::string model;
  double accuracy;
};

struct PublishedResults {
  std::vector<PublishedMatrix> matrices;
  std::vector<PublishedMetricsTable> tables;
  std::vector<PublishedAccuracy> accuracies;
};

/// Test-split results reported for the Bi-LSTM, CNN and combined models.
const PublishedResults& published_results();

/// Two-decimal rounding of the published tables.
inline constexpr double kTableTolerance = 0.005;
inline constexpr double kAccuracyTolerance = 1e-4;

struct CheckResult {
  std::string name;
  bool passed = false;
  std::string detail;
};

/// Recomputes every published metric from the published confusion matrices.
/// Tables and accuracies are paired with matrices by numerical consistency
/// (closest match), not by model name.
std::vector<CheckResult> check_reproduction(const PublishedResults& published);

}  // namespace fakenews
