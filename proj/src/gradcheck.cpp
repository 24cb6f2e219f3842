#include "fakenews/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "fakenews/errors.hpp"

namespace fakenews {

std::string GradCheckReport::describe() const {
  char buf[256];
  std::snprintf(buf, sizeof buf,
                "%s: max rel error %.3e at %s[%zu] (analytic %.6e, numeric %.6e); %zu checked, "
                "%zu skipped at kinks",
                passed ? "pass" : "FAIL", max_rel_error, worst_parameter.c_str(), worst_element,
                worst_analytic, worst_numeric, checked, skipped_at_kinks);
  return buf;
}

namespace {

struct Evaluation {
  double value;
  std::uint64_t signature;
};

Evaluation evaluate(const std::function<Var(Graph&)>& build_loss) {
  Graph g;
  Var loss = build_loss(g);
  if (loss.value().size() != 1) throw ContractError("gradient check needs a scalar loss");
  return {loss.value()[0], g.kink_signature()};
}

}  // namespace

GradCheckReport finite_diff_check(const std::function<Var(Graph&)>& build_loss,
                                  std::span<const NamedTensor> params, double step, double tol,
                                  std::optional<double> abs_floor) {
  const double floor = abs_floor.value_or(step * step);
  if (!(step > 0.0)) throw ContractError("finite-difference step must be positive");

  for (const auto& p : params) p.tensor->zero_grad();
  Evaluation base{};
  {
    Graph g;
    Var loss = build_loss(g);
    g.backward(loss);
    base = {loss.value()[0], g.kink_signature()};
  }
  const Evaluation again = evaluate(build_loss);
  if (again.value != base.value || again.signature != base.signature) {
    throw OracleInvalidError("loss builder is not deterministic: two forward passes gave " +
                             std::to_string(base.value) + " and " + std::to_string(again.value));
  }

  GradCheckReport report;
  for (const auto& p : params) {
    Tensor& t = *p.tensor;
    if (!t.requires_grad()) continue;
    const std::vector<double> analytic(t.grad().begin(), t.grad().end());
    for (std::size_t i = 0; i < t.size(); ++i) {
      const double saved = t[i];
      t[i] = saved + step;
      const Evaluation plus = evaluate(build_loss);
      t[i] = saved - step;
      const Evaluation minus = evaluate(build_loss);
      t[i] = saved;
      if (plus.signature != base.signature || minus.signature != base.signature) {
        ++report.skipped_at_kinks;
        continue;
      }
      const double numeric = (plus.value - minus.value) / (2.0 * step);
      const double a = analytic[i];
      const double denom = std::max({std::abs(a), std::abs(numeric), floor});
      const double rel = std::abs(a - numeric) / denom;
      ++report.checked;
      if (rel > report.max_rel_error || report.worst_parameter.empty()) {
        report.max_rel_error = std::max(rel, report.max_rel_error);
        report.worst_parameter = p.name;
        report.worst_element = i;
        report.worst_analytic = a;
        report.worst_numeric = numeric;
      }
    }
  }
  report.passed = report.max_rel_error <= tol;
  return report;
}

}  // namespace fakenews
