#pragma once

// Training targets and the three-part detection loss.

#include <array>
#include <cstddef>
#include <map>
#include <vector>

#include "footandball/autodiff.hpp"
#include "footandball/model.hpp"

namespace fnb {

struct GroundTruthFrame {
  std::vector<std::array<double, 2>> balls;    // (x, y) pixels
  std::vector<std::array<double, 4>> players;  // (cx, cy, bw, bh) pixels

  bool operator==(const GroundTruthFrame&) const = default;
};

struct GridSize {
  int rows = 0;
  int cols = 0;
  std::size_t cells() const { return static_cast<std::size_t>(rows) * cols; }
};

/// Positive cells are flat row-major indices, sorted ascending. Every cell
/// that is not positive is a candidate negative.
struct TargetAssignment {
  GridSize ball_grid;
  GridSize player_grid;
  std::vector<std::size_t> ball_pos;
  std::vector<std::size_t> player_pos;
  /// Normalized (x_bbox, y_bbox, w_bbox, h_bbox) per positive player cell.
  std::map<std::size_t, std::array<double, 4>> bbox_targets;

  std::vector<std::size_t> ball_negatives() const;
  std::vector<std::size_t> player_negatives() const;
};

/// Ball: the cell containing the ball plus its 8-neighborhood (clipped).
/// Player: the single cell containing the box center, with offsets and sizes
/// normalized by the image width and height. When two players share a cell
/// the one nearest the cell center keeps the regression slot.
TargetAssignment build_targets(const GroundTruthFrame& gt, int image_width, int image_height,
                               GridSize ball_grid, GridSize player_grid);

struct MiningConfig {
  double ratio = 3.0;
  std::size_t empty_floor = 8;
};

struct NegativeCandidate {
  std::size_t index;
  double loss;
};

/// Keeps the min(ratio * n_pos, available) highest-loss candidates
/// (empty_floor of them when n_pos == 0). Equal losses prefer the lower
/// index. Returned indices are ascending.
std::vector<std::size_t> hard_negative_mining(const std::vector<NegativeCandidate>& candidates,
                                              std::size_t n_pos, const MiningConfig& cfg = {});

enum class LossNormalization { kBatch, kPositives };

struct LossWeights {
  double alpha_ball = 1.0;
  double alpha_player = 1.0;
  LossNormalization normalization = LossNormalization::kBatch;
  MiningConfig mining;
};

struct LossBreakdown {
  double total = 0;
  double ball = 0;    // L_B after normalization, before alpha
  double player = 0;  // L_P after normalization, before alpha
  double bbox = 0;
};

template <typename T>
struct LossResult {
  Var<T> total;
  LossBreakdown breakdown;
};

/// L = (alpha_B L_B + alpha_P L_P + L_bbox) / N. With kBatch, N is the number
/// of frames; with kPositives each term is divided by its own positive count
/// (ball cells for L_B, player cells for L_P and L_bbox), floored at 1.
template <typename T>
LossResult<T> total_loss(Tape<T>& tape, const NetworkOutputs<T>& outputs,
                         const std::vector<TargetAssignment>& targets, const LossWeights& weights);

/// Mined cell labels for one head of one frame (exposed for tests).
std::vector<CellLabel> select_cells(const std::vector<std::size_t>& positives,
                                    const std::vector<NegativeCandidate>& negatives,
                                    std::size_t offset, const MiningConfig& cfg);

}  // namespace fnb
