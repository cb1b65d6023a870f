#ifndef NSE_GRAD_CHECK_HPP
#define NSE_GRAD_CHECK_HPP

#include <functional>
#include <string>
#include <vector>

#include "nse/tensor.hpp"

namespace nse {

struct NamedParam {
  std::string name;
  Var value;
};

struct ParamCheck {
  std::string name;
  double max_rel_error = 0.0;
  bool passed = true;
};

struct GradCheckReport {
  std::vector<ParamCheck> params;
  double max_rel_error = 0.0;
  bool passed = true;
};

// Builds a scalar loss on the given tape. Must be deterministic.
using LossFn = std::function<Var(Tape&)>;

// Relative error between analytic gradient a and central difference n,
// |a - n| / max(|a|, |n|, floor). The floor keeps entries whose true
// gradient is zero from reporting rounding noise as relative error.
double relative_error(double analytic, double numeric, double floor = 1e-6);

// Compares tape gradients against central differences
// (f(p + eps) - f(p - eps)) / 2eps for every element of every param.
// Throws InvalidCheckError if f is stochastic.
GradCheckReport grad_check(const LossFn& f, const std::vector<NamedParam>& params, double eps,
                           double tol);

}  // namespace nse

#endif  // NSE_GRAD_CHECK_HPP
