// Central-difference gradient verification.
//
// Given a loss closure and the analytic gradient of every parameter it
// depends on, perturb each coordinate by +/-step, difference the losses and
// compare. Runs in double precision; callers pick a step around the cube
// root of machine epsilon scaled to the parameter magnitude.

#pragma once

#include <cmath>
#include <cstddef>
#include <functional>
#include <span>
#include <string>
#include <vector>

namespace xlc {

struct GradCheckReport {
  double max_rel_err = 0.0;  // worst coordinate's relative error
  double max_abs_err = 0.0;
  size_t checked = 0;
  size_t worst_span = 0;  // which parameter span held the worst coordinate
  size_t worst_index = 0;

  bool pass(double tol) const { return checked > 0 && max_rel_err <= tol; }
};

// loss() must re-evaluate from the current contents of params. analytic[i]
// matches params[i] elementwise. stride checks every stride-th coordinate
// (1 = all), keeping big spans affordable without losing coverage pattern.
//
// floor sets where the error ratio switches from relative to absolute: a
// coordinate whose gradient is below it is effectively checked as
// |err| <= tol*floor. Central differences resolve a gradient only down to
// about eps*loss/(2*step), so callers probing losses much larger than 1
// should raise the floor above that noise level rather than demand relative
// agreement on coordinates whose true gradient is numerically zero.
inline GradCheckReport finite_diff_check(const std::function<double()>& loss,
                                         const std::vector<std::span<double>>& params,
                                         const std::vector<std::span<const double>>& analytic,
                                         double step = 1e-5, size_t stride = 1,
                                         double floor = 1e-8) {
  GradCheckReport rep;
  if (stride == 0) stride = 1;
  for (size_t s = 0; s < params.size(); ++s) {
    auto p = params[s];
    auto a = analytic[s];
    for (size_t i = 0; i < p.size(); i += stride) {
      const double keep = p[i];
      p[i] = keep + step;
      const double up = loss();
      p[i] = keep - step;
      const double dn = loss();
      p[i] = keep;
      const double numeric = (up - dn) / (2.0 * step);
      const double err = std::abs(numeric - a[i]);
      // Relative to the larger magnitude, floored so near-zero pairs compare
      // absolutely.
      const double rel = err / std::max({std::abs(numeric), std::abs(a[i]), floor});
      if (rel > rep.max_rel_err) {
        rep.max_rel_err = rel;
        rep.worst_span = s;
        rep.worst_index = i;
      }
      rep.max_abs_err = std::max(rep.max_abs_err, err);
      ++rep.checked;
    }
  }
  return rep;
}

}  // namespace xlc
