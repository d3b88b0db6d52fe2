#include "footandball/decode.hpp"

#include <algorithm>
#include <cmath>

#include "footandball/errors.hpp"

namespace fnb {

void DecoderConfig::validate() const {
  if (!(theta_ball >= 0 && theta_ball <= 1)) throw ConfigError("decoder.theta_ball must be in [0, 1]");
  if (!(theta_player >= 0 && theta_player <= 1)) {
    throw ConfigError("decoder.theta_player must be in [0, 1]");
  }
  if (k_ball != 4) throw ConfigError("decoder.k_ball must match the model ball stride (4)");
  if (k_player != 16) throw ConfigError("decoder.k_player must match the model player stride (16)");
  if (nms_window < 3 || nms_window % 2 == 0) {
    throw ConfigError("decoder.nms_window must be odd and >= 3, got " + std::to_string(nms_window));
  }
}

PixelPoint cell_to_pixel(int i, int j, int k) {
  return {static_cast<int>(std::floor(k * (i + 0.5))), static_cast<int>(std::floor(k * (j + 0.5)))};
}

template <typename T>
ScoreGrid grid_from(const Tensor<T>& t, int n, int c) {
  const Shape& s = t.shape();
  ScoreGrid g;
  g.rows = s.h;
  g.cols = s.w;
  const T* p = t.plane(n, c);
  g.values.assign(p, p + s.plane());
  return g;
}

std::vector<Peak> nms_local_maxima(const ScoreGrid& grid, int window, double threshold) {
  if (window < 1 || window % 2 == 0) throw ConfigError("nms window must be odd");
  const int r = window / 2;
  std::vector<Peak> peaks;
  for (int j = 0; j < grid.rows; ++j) {
    for (int i = 0; i < grid.cols; ++i) {
      const double s = grid.at(j, i);
      if (!(s >= threshold)) continue;
      bool keep = true;
      for (int y = std::max(0, j - r); keep && y <= std::min(grid.rows - 1, j + r); ++y) {
        for (int x = std::max(0, i - r); x <= std::min(grid.cols - 1, i + r); ++x) {
          if (y == j && x == i) continue;
          const double o = grid.at(y, x);
          const bool earlier = y < j || (y == j && x < i);
          if (o > s || (o == s && earlier)) {
            keep = false;
            break;
          }
        }
      }
      if (keep) peaks.push_back({i, j, s});
    }
  }
  return peaks;
}

namespace {

bool inside(double x, double y, int w, int h) { return x >= 0 && y >= 0 && x < w && y < h; }

template <typename D>
void sort_by_score(std::vector<D>& v) {
  std::stable_sort(v.begin(), v.end(), [](const D& a, const D& b) { return a.score > b.score; });
}

}  // namespace

std::vector<BallDetection> decode_ball(const ScoreGrid& ball_map, const DecoderConfig& cfg,
                                       int image_width, int image_height) {
  std::vector<BallDetection> out;
  if (cfg.ball_mode == BallMode::kSingleBest) {
    bool found = false;
    BallDetection best{0, 0, 0};
    for (int j = 0; j < ball_map.rows; ++j) {
      for (int i = 0; i < ball_map.cols; ++i) {
        const PixelPoint p = cell_to_pixel(i, j, cfg.k_ball);
        if (!inside(p.x, p.y, image_width, image_height)) continue;
        const double s = ball_map.at(j, i);
        if (!found || s > best.score) {
          best = {static_cast<double>(p.x), static_cast<double>(p.y), s};
          found = true;
        }
      }
    }
    if (found && best.score >= cfg.theta_ball) out.push_back(best);
    return out;
  }
  for (const Peak& pk : nms_local_maxima(ball_map, cfg.nms_window, cfg.theta_ball)) {
    const PixelPoint p = cell_to_pixel(pk.i, pk.j, cfg.k_ball);
    if (!inside(p.x, p.y, image_width, image_height)) continue;
    out.push_back({static_cast<double>(p.x), static_cast<double>(p.y), pk.score});
  }
  sort_by_score(out);
  return out;
}

std::vector<PlayerDetection> decode_players(const ScoreGrid& player_map,
                                            const std::vector<ScoreGrid>& bbox,
                                            const DecoderConfig& cfg, int image_width,
                                            int image_height) {
  if (bbox.size() != 4) throw ShapeError("decode_players: expected 4 box channels");
  for (const auto& b : bbox) {
    if (b.rows != player_map.rows || b.cols != player_map.cols) {
      throw ShapeError("decode_players: box grid does not match the player map");
    }
  }
  std::vector<PlayerDetection> out;
  const double W = image_width, H = image_height;
  for (const Peak& pk : nms_local_maxima(player_map, cfg.nms_window, cfg.theta_player)) {
    const double k = cfg.k_player;
    PlayerDetection d;
    d.cx = std::floor(k * (pk.i + 0.5) + bbox[0].at(pk.j, pk.i) * W);
    d.cy = std::floor(k * (pk.j + 0.5) + bbox[1].at(pk.j, pk.i) * H);
    d.bw = std::floor(bbox[2].at(pk.j, pk.i) * W);
    d.bh = std::floor(bbox[3].at(pk.j, pk.i) * H);
    d.score = pk.score;
    if (d.bw <= 0 || d.bh <= 0 || !inside(d.cx, d.cy, image_width, image_height)) continue;
    out.push_back(d);
  }
  sort_by_score(out);
  return out;
}

PlayerDetection clip_to_image(const PlayerDetection& d, int image_width, int image_height) {
  const double bw = std::max(0.0, d.bw), bh = std::max(0.0, d.bh);
  const double x0 = std::clamp(d.cx - bw / 2, 0.0, static_cast<double>(image_width));
  const double x1 = std::clamp(d.cx + bw / 2, 0.0, static_cast<double>(image_width));
  const double y0 = std::clamp(d.cy - bh / 2, 0.0, static_cast<double>(image_height));
  const double y1 = std::clamp(d.cy + bh / 2, 0.0, static_cast<double>(image_height));
  return {(x0 + x1) / 2, (y0 + y1) / 2, x1 - x0, y1 - y0, d.score};
}

template <typename T>
FrameDetections decode_frame(const Tensor<T>& ball_map, const Tensor<T>& player_map,
                             const Tensor<T>& bbox, int n, const DecoderConfig& cfg,
                             int image_width, int image_height) {
  if (bbox.shape().c != 4) throw ShapeError("decode_frame: box tensor " + bbox.shape().str() + " needs 4 channels");
  FrameDetections f;
  f.balls = decode_ball(grid_from(ball_map, n, 0), cfg, image_width, image_height);
  std::vector<ScoreGrid> channels;
  for (int c = 0; c < 4; ++c) channels.push_back(grid_from(bbox, n, c));
  f.players = decode_players(grid_from(player_map, n, 0), channels, cfg, image_width, image_height);
  return f;
}

template ScoreGrid grid_from<float>(const Tensor<float>&, int, int);
template ScoreGrid grid_from<double>(const Tensor<double>&, int, int);
template FrameDetections decode_frame<float>(const Tensor<float>&, const Tensor<float>&,
                                             const Tensor<float>&, int, const DecoderConfig&, int, int);
template FrameDetections decode_frame<double>(const Tensor<double>&, const Tensor<double>&,
                                              const Tensor<double>&, int, const DecoderConfig&, int,
                                              int);

}  // namespace fnb
