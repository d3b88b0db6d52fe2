#pragma once

// Turns confidence maps and the box tensor into pixel-space detections.
// Cell indices are 0-based: i is the column, j the row.

#include <vector>

#include "footandball/tensor.hpp"

namespace fnb {

enum class BallMode { kSingleBest, kAllCandidates };

struct DecoderConfig {
  double theta_ball = 0.5;
  double theta_player = 0.5;
  int k_ball = 4;
  int k_player = 16;
  int nms_window = 3;
  BallMode ball_mode = BallMode::kSingleBest;

  void validate() const;
};

struct BallDetection {
  double x;
  double y;
  double score;
};

/// Center-format box in pixels. Decoded boxes are kept unclipped; use
/// clip_to_image() for reporting.
struct PlayerDetection {
  double cx;
  double cy;
  double bw;
  double bh;
  double score;
};

struct PixelPoint {
  int x;
  int y;
};

/// Center of the k x k pixel block of cell (i, j).
PixelPoint cell_to_pixel(int i, int j, int k);

/// Dense single-channel score grid, row-major.
struct ScoreGrid {
  int rows = 0;
  int cols = 0;
  std::vector<double> values;

  double at(int j, int i) const { return values[static_cast<std::size_t>(j) * cols + i]; }
};

template <typename T>
ScoreGrid grid_from(const Tensor<T>& t, int n, int c);

struct Peak {
  int i;
  int j;
  double score;
};

/// Cells with score >= threshold that are >= every cell in the centered
/// window x window neighborhood. Among equal scores in one window only the
/// row-major-first cell survives. Result is in row-major order.
std::vector<Peak> nms_local_maxima(const ScoreGrid& grid, int window, double threshold);

/// Ball candidates of one frame. Cells whose pixel center falls outside
/// image_width x image_height (padding) are ignored. All-candidates mode
/// returns peaks sorted by descending score.
std::vector<BallDetection> decode_ball(const ScoreGrid& ball_map, const DecoderConfig& cfg,
                                       int image_width, int image_height);

/// Player boxes of one frame. `bbox` holds the four regression channels
/// (x, y, w, h) on the player grid; offsets and sizes are relative to the
/// image width and height. Detections whose center falls outside the image
/// are dropped.
std::vector<PlayerDetection> decode_players(const ScoreGrid& player_map,
                                            const std::vector<ScoreGrid>& bbox,
                                            const DecoderConfig& cfg, int image_width,
                                            int image_height);

PlayerDetection clip_to_image(const PlayerDetection& d, int image_width, int image_height);

struct FrameDetections {
  std::vector<BallDetection> balls;
  std::vector<PlayerDetection> players;
};

/// Decodes frame n of a batch of network outputs.
template <typename T>
FrameDetections decode_frame(const Tensor<T>& ball_map, const Tensor<T>& player_map,
                             const Tensor<T>& bbox, int n, const DecoderConfig& cfg,
                             int image_width, int image_height);

}  // namespace fnb
