#pragma once

// Central finite-difference verification of reverse-mode gradients.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <span>
#include <string>

#include "logiformer/tensor.hpp"

namespace logiformer {

struct GradCheckResult {
  double max_relative_error = 0.0;
  std::size_t worst_parameter = 0;  // index into the params span
  std::size_t worst_index = 0;      // flat index inside that parameter
  double analytic = 0.0;
  double numeric = 0.0;
  std::size_t entries_checked = 0;
};

/// |a - n| / max(floor, |a|, |n|). Gradients smaller than `floor` are
/// compared absolutely.
inline double relative_error(double analytic, double numeric, double floor = 1.0) {
  const double denom = std::max({floor, std::abs(analytic), std::abs(numeric)});
  return std::abs(analytic - numeric) / denom;
}

/// Compares the gradients from one backward pass of `f` with
/// (f(p+step) - f(p-step)) / (2 step) for each parameter entry.
/// `max_entries_per_param` > 0 checks an evenly strided subset of each
/// parameter (always including its first and last entry). Parameter values
/// are restored before returning; their grads are left holding the analytic
/// gradient. `floor` is passed to relative_error.
template <typename T>
GradCheckResult grad_check(const std::function<Tensor<T>()>& f, std::span<Tensor<T>> params, T step = T(1e-5),
                           std::size_t max_entries_per_param = 0, double floor = 1.0) {
  for (auto& p : params) p.zero_grad();
  f().backward();

  GradCheckResult result;
  for (std::size_t k = 0; k < params.size(); ++k) {
    Tensor<T>& p = params[k];
    const std::size_t n = p.size();
    if (n == 0) continue;
    const auto analytic = p.grad();
    std::size_t stride = 1;
    if (max_entries_per_param > 1 && n > max_entries_per_param)
      stride = (n - 1 + max_entries_per_param - 2) / (max_entries_per_param - 1);
    auto values = p.mutable_values();
    auto check = [&](std::size_t i) {
      const T original = values[i];
      T plus, minus;
      {
        NoGradGuard guard;
        values[i] = original + step;
        plus = f().item();
        values[i] = original - step;
        minus = f().item();
      }
      values[i] = original;
      const double numeric = (static_cast<double>(plus) - static_cast<double>(minus)) / (2.0 * static_cast<double>(step));
      const double a = analytic.empty() ? 0.0 : static_cast<double>(analytic[i]);
      const double err = relative_error(a, numeric, floor);
      ++result.entries_checked;
      if (result.entries_checked == 1 || err > result.max_relative_error) {
        result.max_relative_error = err;
        result.worst_parameter = k;
        result.worst_index = i;
        result.analytic = a;
        result.numeric = numeric;
      }
    };
    for (std::size_t i = 0; i < n; i += stride) check(i);
    if ((n - 1) % stride != 0) check(n - 1);
  }
  return result;
}

}  // namespace logiformer
