#include "footandball/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <sstream>

namespace fnb {
namespace {

struct Evaluation {
  double value;
  std::uint64_t signature;
};

Evaluation evaluate(const TapeFunction& f, const std::vector<Tensor<double>>& inputs) {
  Tape<double> tape(false);
  tape.set_track_kinks(true);
  std::vector<Var<double>> vars;
  vars.reserve(inputs.size());
  for (const auto& t : inputs) vars.push_back(tape.leaf(t, false));
  const Var<double> out = f(tape, vars);
  if (out.value().numel() != 1) throw TapeError("grad_check: function must return a scalar");
  return {out.value()[0], tape.signature()};
}

std::vector<std::size_t> pick_coords(std::size_t numel, std::size_t limit, std::mt19937_64& rng) {
  std::vector<std::size_t> idx(numel);
  std::iota(idx.begin(), idx.end(), 0);
  if (limit == 0 || limit >= numel) return idx;
  for (std::size_t i = 0; i < numel; ++i) {
    const std::size_t j = i + rng() % (numel - i);
    std::swap(idx[i], idx[j]);
  }
  return idx;  // caller consumes a prefix, the rest serves as replacements
}

}  // namespace

GradCheckReport grad_check(const TapeFunction& f, const std::vector<Tensor<double>>& inputs,
                           const GradCheckOptions& opt) {
  GradCheckReport report;

  // Analytic gradients.
  std::vector<Tensor<double>> analytic;
  std::uint64_t base_signature = 0;
  {
    Tape<double> tape(true);
    tape.set_track_kinks(true);
    std::vector<Var<double>> vars;
    for (const auto& t : inputs) vars.push_back(tape.leaf(t, true));
    const Var<double> out = f(tape, vars);
    base_signature = tape.signature();
    tape.backward(out);
    for (std::size_t i = 0; i < vars.size(); ++i) {
      analytic.push_back(vars[i].has_grad() ? vars[i].grad() : Tensor<double>(inputs[i].shape()));
    }
  }

  std::mt19937_64 rng(opt.seed);
  std::vector<Tensor<double>> work = inputs;
  for (std::size_t in = 0; in < inputs.size(); ++in) {
    const std::size_t numel = inputs[in].numel();
    const std::vector<std::size_t> order = pick_coords(numel, opt.max_coords_per_input, rng);
    const std::size_t want = opt.max_coords_per_input == 0 ? numel
                                                           : std::min(numel, opt.max_coords_per_input);
    std::size_t done = 0;
    for (std::size_t k = 0; k < order.size() && done < want; ++k) {
      const std::size_t j = order[k];
      const double orig = inputs[in][j];
      work[in][j] = orig + opt.step;
      const Evaluation plus = evaluate(f, work);
      work[in][j] = orig - opt.step;
      const Evaluation minus = evaluate(f, work);
      work[in][j] = orig;
      if (plus.signature != base_signature || minus.signature != base_signature) {
        ++report.skipped_kinks;
        continue;
      }
      const double numeric = (plus.value - minus.value) / (2 * opt.step);
      const double a = analytic[in][j];
      const double abs_err = std::fabs(a - numeric);
      const double rel = abs_err / std::max({std::fabs(a), std::fabs(numeric), opt.abs_floor});
      report.max_abs_error = std::max(report.max_abs_error, abs_err);
      if (rel > report.max_rel_error || report.checked == 0) {
        if (rel >= report.max_rel_error) {
          std::ostringstream os;
          os << "input[" << in << "] coord " << j << ": analytic " << a << " numeric " << numeric;
          report.worst = os.str();
        }
        report.max_rel_error = std::max(report.max_rel_error, rel);
      }
      ++report.checked;
      ++done;
    }
  }
  report.passed = report.checked > 0 && report.max_rel_error < opt.tolerance;
  return report;
}

GradCheckReport grad_check(const std::function<Var<double>(Tape<double>&, const Var<double>&)>& f,
                           const Tensor<double>& input, const GradCheckOptions& opt) {
  return grad_check(
      [&f](Tape<double>& tape, const std::vector<Var<double>>& v) { return f(tape, v[0]); },
      std::vector<Tensor<double>>{input}, opt);
}

}  // namespace fnb
