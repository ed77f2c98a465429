#include "ssp/autodiff/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

namespace ssp::ad {

GradCheckReport finite_diff_check(const std::function<Tensor<double>()>& f, std::span<Tensor<double>> params,
                                  const GradCheckOptions& options) {
  GradCheckReport report;
  for (auto& p : params) {
    p.set_requires_grad(true);
    p.zero_grad();
  }
  {
    Tensor<double> root = f();
    backward(root);
  }
  std::vector<std::vector<double>> analytic;
  analytic.reserve(params.size());
  for (auto& p : params) {
    analytic.emplace_back(p.has_grad() ? std::vector<double>(p.grad().begin(), p.grad().end())
                                       : std::vector<double>(p.numel(), 0.0));
  }

  NoGradGuard no_grad;
  const double h = options.step;
  for (std::size_t pi = 0; pi < params.size(); ++pi) {
    auto values = params[pi].data();
    for (std::size_t i = 0; i < values.size(); ++i) {
      const double saved = values[i];
      values[i] = saved + h;
      const double fp = f().item();
      values[i] = saved - h;
      const double fm = f().item();
      values[i] = saved;
      const double numeric = (fp - fm) / (2 * h);
      const double a = analytic[pi][i];
      const double abs_err = std::abs(a - numeric);
      const double denom = std::max({std::abs(a), std::abs(numeric), options.denominator_floor});
      const double rel = abs_err / denom;
      report.max_abs_error = std::max(report.max_abs_error, abs_err);
      if (rel > report.max_rel_error || report.elements_checked == 0) {
        report.max_rel_error = std::max(rel, report.max_rel_error);
        report.worst_param = params[pi].name().empty() ? "#" + std::to_string(pi) : params[pi].name();
        report.worst_index = i;
      }
      ++report.elements_checked;
    }
  }
  report.passed = std::isfinite(report.max_rel_error) && report.max_rel_error < options.tolerance;
  return report;
}

}  // namespace ssp::ad
