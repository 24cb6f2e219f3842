#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <string>
#include <utility>

#include "fakenews/liar_data.hpp"

namespace fakenews {

/// Rows are actual classes, columns predicted, both in kLabelNames order.
class ConfusionMatrix {
 public:
  using Counts = std::array<std::array<long, kNumClasses>, kNumClasses>;

  ConfusionMatrix() = default;
  explicit ConfusionMatrix(const Counts& counts);

  void add(int actual, int predicted, long n = 1);
  long at(std::size_t actual, std::size_t predicted) const { return counts_[actual][predicted]; }
  const Counts& counts() const { return counts_; }

  long row_sum(std::size_t actual) const;
  long col_sum(std::size_t predicted) const;
  long trace() const;
  long total() const;

  friend bool operator==(const ConfusionMatrix&, const ConfusionMatrix&) = default;

 private:
  Counts counts_{};
};

ConfusionMatrix confusion(std::span<const int> actual, std::span<const int> predicted);

struct ClassMetrics {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  long support = 0;
};

struct MetricsReport {
  std::array<ClassMetrics, kNumClasses> per_class{};
  /// Support-weighted averages (the "Avg/Total" row).
  ClassMetrics weighted;
  /// Unweighted mean over classes; reported for reference only.
  ClassMetrics macro;
  double accuracy = 0.0;
  long total = 0;
};

/// Metrics whose denominator is zero are reported as 0.
MetricsReport metrics(const ConfusionMatrix& m);

enum class ReportFormat { text, json };

inline constexpr int kReportSchemaVersion = 1;

std::string render_report(const MetricsReport& report, const ConfusionMatrix& matrix, ReportFormat format);
/// Plain-text confusion matrix, actual classes down, predicted across.
std::string render_confusion(const ConfusionMatrix& matrix);

/// Inverse of render_report(..., json). Throws ParseError on schema mismatch.
std::pair<MetricsReport, ConfusionMatrix> parse_report_json(const std::string& text);

}  // namespace fakenews
