#include "nse/grad_check.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>

namespace nse {

namespace {

double evaluate(const LossFn& f) {
  Tape tape(false);
  Var loss = f(tape);
  if (tape.stochastic())
    throw InvalidCheckError("grad_check: loss function draws random numbers");
  if (loss->size() != 1) throw UsageError("grad_check: loss must be scalar");
  return loss->data[0];
}

}  // namespace

double relative_error(double analytic, double numeric, double floor) {
  double denom = std::max({std::abs(analytic), std::abs(numeric), floor});
  return std::abs(analytic - numeric) / denom;
}

GradCheckReport grad_check(const LossFn& f, const std::vector<NamedParam>& params, double eps,
                           double tol) {
  std::vector<bool> saved_flags;
  for (const auto& p : params) {
    saved_flags.push_back(p.value->requires_grad);
    p.value->requires_grad = true;
    p.value->ensure_grad();
    p.value->zero_grad();
  }

  Tape tape;
  Var loss = f(tape);
  if (tape.stochastic())
    throw InvalidCheckError("grad_check: loss function draws random numbers");
  tape.backward(loss);
  const double base = loss->data[0];

  // Bitwise repeatability of the unperturbed loss.
  double again = evaluate(f);
  if (std::memcmp(&again, &base, sizeof(double)) != 0)
    throw InvalidCheckError("grad_check: loss function is not deterministic");

  GradCheckReport report;
  for (std::size_t k = 0; k < params.size(); ++k) {
    Tensor& t = *params[k].value;
    ParamCheck pc{params[k].name, 0.0, true};
    std::vector<double> analytic = t.grad;
    for (std::size_t i = 0; i < t.size(); ++i) {
      const double orig = t.data[i];
      t.data[i] = orig + eps;
      double fp = evaluate(f);
      t.data[i] = orig - eps;
      double fm = evaluate(f);
      t.data[i] = orig;
      double numeric = (fp - fm) / (2.0 * eps);
      pc.max_rel_error = std::max(pc.max_rel_error, relative_error(analytic[i], numeric));
    }
    pc.passed = pc.max_rel_error < tol;
    report.max_rel_error = std::max(report.max_rel_error, pc.max_rel_error);
    report.passed = report.passed && pc.passed;
    report.params.push_back(pc);
  }

  for (std::size_t k = 0; k < params.size(); ++k) params[k].value->requires_grad = saved_flags[k];
  return report;
}

}  // namespace nse
