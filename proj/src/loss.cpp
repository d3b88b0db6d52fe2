#include "footandball/loss.hpp"

#include <algorithm>
#include <cmath>

#include "footandball/errors.hpp"

namespace fnb {
namespace {

std::vector<std::size_t> complement(const std::vector<std::size_t>& sorted_pos, std::size_t n) {
  std::vector<std::size_t> out;
  out.reserve(n - std::min(n, sorted_pos.size()));
  std::size_t k = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (k < sorted_pos.size() && sorted_pos[k] == i) {
      ++k;
      continue;
    }
    out.push_back(i);
  }
  return out;
}

int cell_of(double v, int stride, int limit) {
  return std::clamp(static_cast<int>(std::floor(v / stride)), 0, limit - 1);
}

}  // namespace

std::vector<std::size_t> TargetAssignment::ball_negatives() const {
  return complement(ball_pos, ball_grid.cells());
}

std::vector<std::size_t> TargetAssignment::player_negatives() const {
  return complement(player_pos, player_grid.cells());
}

TargetAssignment build_targets(const GroundTruthFrame& gt, int image_width, int image_height,
                               GridSize ball_grid, GridSize player_grid) {
  if (image_width <= 0 || image_height <= 0) throw ShapeError("build_targets: empty image");
  TargetAssignment t;
  t.ball_grid = ball_grid;
  t.player_grid = player_grid;
  if (ball_grid.cells() > 0) {
    for (const auto& b : gt.balls) {
      const int ci = cell_of(b[0], kBallStride, ball_grid.cols);
      const int cj = cell_of(b[1], kBallStride, ball_grid.rows);
      for (int j = std::max(0, cj - 1); j <= std::min(ball_grid.rows - 1, cj + 1); ++j) {
        for (int i = std::max(0, ci - 1); i <= std::min(ball_grid.cols - 1, ci + 1); ++i) {
          t.ball_pos.push_back(static_cast<std::size_t>(j) * ball_grid.cols + i);
        }
      }
    }
  }
  std::map<std::size_t, double> best_distance;
  if (player_grid.cells() > 0) {
    for (const auto& p : gt.players) {
      const int ci = cell_of(p[0], kPlayerStride, player_grid.cols);
      const int cj = cell_of(p[1], kPlayerStride, player_grid.rows);
      const std::size_t cell = static_cast<std::size_t>(cj) * player_grid.cols + ci;
      const double ccx = kPlayerStride * (ci + 0.5);
      const double ccy = kPlayerStride * (cj + 0.5);
      const double dist = std::hypot(p[0] - ccx, p[1] - ccy);
      t.player_pos.push_back(cell);
      auto it = best_distance.find(cell);
      if (it != best_distance.end() && it->second <= dist) continue;
      best_distance[cell] = dist;
      t.bbox_targets[cell] = {(p[0] - ccx) / image_width, (p[1] - ccy) / image_height,
                              p[2] / image_width, p[3] / image_height};
    }
  }
  for (auto* v : {&t.ball_pos, &t.player_pos}) {
    std::sort(v->begin(), v->end());
    v->erase(std::unique(v->begin(), v->end()), v->end());
  }
  return t;
}

std::vector<std::size_t> hard_negative_mining(const std::vector<NegativeCandidate>& candidates,
                                              std::size_t n_pos, const MiningConfig& cfg) {
  const std::size_t want =
      n_pos == 0 ? cfg.empty_floor : static_cast<std::size_t>(std::floor(cfg.ratio * n_pos));
  const std::size_t k = std::min(want, candidates.size());
  std::vector<NegativeCandidate> c = candidates;
  auto harder = [](const NegativeCandidate& a, const NegativeCandidate& b) {
    if (a.loss != b.loss) return a.loss > b.loss;
    return a.index < b.index;
  };
  std::nth_element(c.begin(), c.begin() + static_cast<std::ptrdiff_t>(k), c.end(), harder);
  std::vector<std::size_t> out;
  out.reserve(k);
  for (std::size_t i = 0; i < k; ++i) out.push_back(c[i].index);
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<CellLabel> select_cells(const std::vector<std::size_t>& positives,
                                    const std::vector<NegativeCandidate>& negatives,
                                    std::size_t offset, const MiningConfig& cfg) {
  std::vector<CellLabel> cells;
  for (std::size_t p : positives) cells.push_back({offset + p, true});
  for (std::size_t n : hard_negative_mining(negatives, positives.size(), cfg)) {
    cells.push_back({offset + n, false});
  }
  return cells;
}

namespace {

template <typename T>
std::vector<NegativeCandidate> negative_losses(const Tensor<T>& logits, int n,
                                               const std::vector<std::size_t>& negatives) {
  const T* z = logits.plane(n, 0);
  std::vector<NegativeCandidate> out;
  out.reserve(negatives.size());
  for (std::size_t idx : negatives) out.push_back({idx, softplus(static_cast<double>(z[idx]))});
  return out;
}

void check_grid(const Shape& s, GridSize g, const char* what) {
  if (s.h != g.rows || s.w != g.cols) {
    throw ShapeError(std::string("total_loss: ") + what + " map " + s.str() + " does not match target grid " +
                     std::to_string(g.rows) + "x" + std::to_string(g.cols));
  }
}

}  // namespace

template <typename T>
LossResult<T> total_loss(Tape<T>& tape, const NetworkOutputs<T>& outputs,
                         const std::vector<TargetAssignment>& targets, const LossWeights& weights) {
  const Tensor<T>& bl = outputs.ball_logits.value();
  const Tensor<T>& pl = outputs.player_logits.value();
  const int batch = bl.shape().n;
  if (static_cast<int>(targets.size()) != batch) {
    throw ShapeError("total_loss: " + std::to_string(targets.size()) + " target frames for batch of " +
                     std::to_string(batch));
  }
  std::vector<CellLabel> ball_cells, player_cells;
  std::vector<RegressionCell> boxes;
  std::size_t n_ball_pos = 0, n_player_pos = 0;
  for (int n = 0; n < batch; ++n) {
    const TargetAssignment& t = targets[n];
    check_grid(bl.shape(), t.ball_grid, "ball");
    check_grid(pl.shape(), t.player_grid, "player");
    const auto bc = select_cells(t.ball_pos, negative_losses(bl, n, t.ball_negatives()),
                                 static_cast<std::size_t>(n) * bl.shape().plane(), weights.mining);
    ball_cells.insert(ball_cells.end(), bc.begin(), bc.end());
    const auto pc = select_cells(t.player_pos, negative_losses(pl, n, t.player_negatives()),
                                 static_cast<std::size_t>(n) * pl.shape().plane(), weights.mining);
    player_cells.insert(player_cells.end(), pc.begin(), pc.end());
    for (const auto& [cell, g] : t.bbox_targets) {
      const int y = static_cast<int>(cell / t.player_grid.cols);
      const int x = static_cast<int>(cell % t.player_grid.cols);
      boxes.push_back({n, y, x, g});
    }
    n_ball_pos += t.ball_pos.size();
    n_player_pos += t.player_pos.size();
  }
  if (tape.tracking_kinks()) {
    // the mined negative set is a discrete choice like a ReLU mask
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (const auto* cells : {&ball_cells, &player_cells}) {
      for (const CellLabel& c : *cells) h = (h ^ (c.index * 2 + c.positive)) * 0x100000001b3ULL;
    }
    tape.mix_signature(h);
  }
  const Var<T> lb = ops::bce_with_logits(tape, outputs.ball_logits, ball_cells);
  const Var<T> lp = ops::bce_with_logits(tape, outputs.player_logits, player_cells);
  const Var<T> lr = ops::smooth_l1(tape, outputs.bbox, boxes);

  double nb = batch, np = batch, nr = batch;
  if (weights.normalization == LossNormalization::kPositives) {
    nb = static_cast<double>(std::max<std::size_t>(1, n_ball_pos));
    np = nr = static_cast<double>(std::max<std::size_t>(1, n_player_pos));
  }
  if (batch == 0) nb = np = nr = 1;
  LossResult<T> r;
  r.total = ops::weighted_sum(tape, {lb, lp, lr}, {weights.alpha_ball / nb, weights.alpha_player / np, 1.0 / nr});
  r.breakdown.ball = lb.value()[0] / nb;
  r.breakdown.player = lp.value()[0] / np;
  r.breakdown.bbox = lr.value()[0] / nr;
  r.breakdown.total = r.total.value()[0];
  return r;
}

template LossResult<float> total_loss<float>(Tape<float>&, const NetworkOutputs<float>&,
                                             const std::vector<TargetAssignment>&, const LossWeights&);
template LossResult<double> total_loss<double>(Tape<double>&, const NetworkOutputs<double>&,
                                               const std::vector<TargetAssignment>&, const LossWeights&);

}  // namespace fnb
