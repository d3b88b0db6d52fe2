#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "footandball/autodiff.hpp"

namespace fnb {

struct GradCheckOptions {
  double step = 1e-4;
  double tolerance = 1e-4;
  /// Denominator floor of the relative error |a - n| / max(|a|, |n|, floor).
  double abs_floor = 1e-6;
  /// Coordinates checked per input; all coordinates when the input is smaller.
  std::size_t max_coords_per_input = 0;  // 0 = all
  std::uint64_t seed = 1;
};

struct GradCheckReport {
  double max_rel_error = 0;
  double max_abs_error = 0;
  std::size_t checked = 0;
  /// Coordinates skipped because the +/- step perturbation crossed a ReLU or
  /// max-pool kink.
  std::size_t skipped_kinks = 0;
  std::string worst;  // "input[i] coord j: analytic a numeric n"
  bool passed = false;
};

/// Scalar-valued function of several tensors, evaluated on a fresh tape.
using TapeFunction =
    std::function<Var<double>(Tape<double>& tape, const std::vector<Var<double>>& inputs)>;

/// Compares tape gradients of `f` against central finite differences.
GradCheckReport grad_check(const TapeFunction& f, const std::vector<Tensor<double>>& inputs,
                           const GradCheckOptions& opt = {});

/// Single-input convenience overload.
GradCheckReport grad_check(const std::function<Var<double>(Tape<double>&, const Var<double>&)>& f,
                           const Tensor<double>& input, const GradCheckOptions& opt = {});

}  // namespace fnb
