#include "fakenews/eval_report.hpp"

#include <cctype>
#include <cstdio>
#include <sstream>

#include <json.hpp>

#include "fakenews/errors.hpp"

namespace fakenews {

ConfusionMatrix::ConfusionMatrix(const Counts& counts) : counts_(counts) {
  for (const auto& row : counts_) {
    for (long v : row) {
      if (v < 0) throw ContractError("confusion matrix entries must be nonnegative");
    }
  }
}

void ConfusionMatrix::add(int actual, int predicted, long n) {
  decode_label(actual);
  decode_label(predicted);
  counts_[static_cast<std::size_t>(actual)][static_cast<std::size_t>(predicted)] += n;
}

long ConfusionMatrix::row_sum(std::size_t actual) const {
  long s = 0;
  for (long v : counts_[actual]) s += v;
  return s;
}

long ConfusionMatrix::col_sum(std::size_t predicted) const {
  long s = 0;
  for (const auto& row : counts_) s += row[predicted];
  return s;
}

long ConfusionMatrix::trace() const {
  long s = 0;
  for (std::size_t c = 0; c < kNumClasses; ++c) s += counts_[c][c];
  return s;
}

long ConfusionMatrix::total() const {
  long s = 0;
  for (std::size_t c = 0; c < kNumClasses; ++c) s += row_sum(c);
  return s;
}

ConfusionMatrix confusion(std::span<const int> actual, std::span<const int> predicted) {
  if (actual.size() != predicted.size()) {
    throw ContractError("confusion: " + std::to_string(actual.size()) + " actual labels vs " +
                        std::to_string(predicted.size()) + " predictions");
  }
  if (actual.empty()) throw ContractError("confusion: no labels");
  ConfusionMatrix m;
  for (std::size_t i = 0; i < actual.size(); ++i) m.add(actual[i], predicted[i]);
  return m;
}

namespace {

double ratio(long num, long den) { return den == 0 ? 0.0 : static_cast<double>(num) / static_cast<double>(den); }

double harmonic(double p, double r) { return p + r == 0.0 ? 0.0 : 2.0 * p * r / (p + r); }

}  // namespace

MetricsReport metrics(const ConfusionMatrix& m) {
  MetricsReport rep;
  rep.total = m.total();
  if (rep.total <= 0) throw ContractError("metrics: empty confusion matrix");
  for (std::size_t c = 0; c < kNumClasses; ++c) {
    ClassMetrics& cm = rep.per_class[c];
    cm.support = m.row_sum(c);
    cm.precision = ratio(m.at(c, c), m.col_sum(c));
    cm.recall = ratio(m.at(c, c), cm.support);
    cm.f1 = harmonic(cm.precision, cm.recall);
  }
  for (const ClassMetrics& cm : rep.per_class) {
    const double w = static_cast<double>(cm.support) / static_cast<double>(rep.total);
    rep.weighted.precision += w * cm.precision;
    rep.weighted.recall += w * cm.recall;
    rep.weighted.f1 += w * cm.f1;
    rep.macro.precision += cm.precision / kNumClasses;
    rep.macro.recall += cm.recall / kNumClasses;
    rep.macro.f1 += cm.f1 / kNumClasses;
  }
  rep.weighted.support = rep.total;
  rep.macro.support = rep.total;
  rep.accuracy = ratio(m.trace(), rep.total);
  return rep;
}

// ---------------------------------------------------------------------------
// Rendering

namespace {

std::string upper(std::string_view s) {
  std::string out(s);
  for (char& c : out) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  return out;
}

std::string metric_row(const std::string& name, const ClassMetrics& m) {
  char buf[128];
  std::snprintf(buf, sizeof buf, "%-13s %9.2f %9.2f %9.2f %16ld\n", name.c_str(), m.precision,
                m.recall, m.f1, m.support);
  return buf;
}

nlohmann::ordered_json metric_json(const ClassMetrics& m) {
  return {{"precision", m.precision}, {"recall", m.recall}, {"f1", m.f1}, {"support", m.support}};
}

ClassMetrics metric_from(const nlohmann::json& j) {
  return {j.at("precision"), j.at("recall"), j.at("f1"), j.at("support")};
}

}  // namespace

std::string render_confusion(const ConfusionMatrix& matrix) {
  std::ostringstream out;
  char buf[64];
  std::snprintf(buf, sizeof buf, "%-18s", "Actual\\Predicted");
  out << buf;
  for (auto name : kLabelNames) {
    std::snprintf(buf, sizeof buf, " %12s", upper(name).c_str());
    out << buf;
  }
  out << '\n';
  for (std::size_t a = 0; a < kNumClasses; ++a) {
    std::snprintf(buf, sizeof buf, "%-18s", upper(kLabelNames[a]).c_str());
    out << buf;
    for (std::size_t p = 0; p < kNumClasses; ++p) {
      std::snprintf(buf, sizeof buf, " %12ld", matrix.at(a, p));
      out << buf;
    }
    out << '\n';
  }
  return out.str();
}

std::string render_report(const MetricsReport& report, const ConfusionMatrix& matrix, ReportFormat format) {
  if (format == ReportFormat::json) {
    nlohmann::ordered_json j;
    j["schema_version"] = kReportSchemaVersion;
    j["classes"] = kLabelNames;
    j["accuracy"] = report.accuracy;
    j["total"] = report.total;
    auto per_class = nlohmann::ordered_json::object();
    for (std::size_t c = 0; c < kNumClasses; ++c) {
      per_class[std::string(kLabelNames[c])] = metric_json(report.per_class[c]);
    }
    j["per_class"] = per_class;
    j["weighted_average"] = metric_json(report.weighted);
    j["macro_average"] = metric_json(report.macro);
    j["confusion_matrix"] = matrix.counts();
    return j.dump(2) + "\n";
  }
  std::ostringstream out;
  char buf[128];
  std::snprintf(buf, sizeof buf, "%-13s %9s %9s %9s %16s\n", "", "precision", "recall", "F1-score",
                "No. of instances");
  out << buf;
  for (std::size_t c = 0; c < kNumClasses; ++c) out << metric_row(upper(kLabelNames[c]), report.per_class[c]);
  out << metric_row("Avg/Total", report.weighted);
  out << '\n' << metric_row("Macro avg", report.macro);
  std::snprintf(buf, sizeof buf, "\naccuracy %.4f (%ld/%ld)\n", report.accuracy, matrix.trace(), report.total);
  out << buf;
  return out.str();
}

std::pair<MetricsReport, ConfusionMatrix> parse_report_json(const std::string& text) {
  try {
    const auto j = nlohmann::json::parse(text);
    if (j.at("schema_version").get<int>() != kReportSchemaVersion) {
      throw ParseError("report.json", 1, "unsupported schema version");
    }
    MetricsReport rep;
    rep.accuracy = j.at("accuracy");
    rep.total = j.at("total");
    for (std::size_t c = 0; c < kNumClasses; ++c) {
      rep.per_class[c] = metric_from(j.at("per_class").at(std::string(kLabelNames[c])));
    }
    rep.weighted = metric_from(j.at("weighted_average"));
    rep.macro = metric_from(j.at("macro_average"));
    return {rep, ConfusionMatrix(j.at("confusion_matrix").get<ConfusionMatrix::Counts>())};
  } catch (const nlohmann::json::exception& e) {
    throw ParseError("report.json", 1, e.what());
  }
}

}  // namespace fakenews
