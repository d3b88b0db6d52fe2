#pragma once

// Brute-force reference implementations shared by the unit tests and the
// acceptance binary. They favor obviousness over speed.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <utility>
#include <vector>

#include "footandball/decode.hpp"
#include "footandball/loss.hpp"
#include "footandball/rng.hpp"

namespace fnb::oracle {

inline ScoreGrid random_grid(Rng& rng, int rows, int cols, bool quantized) {
  ScoreGrid g;
  g.rows = rows;
  g.cols = cols;
  g.values.resize(static_cast<std::size_t>(rows) * cols);
  for (auto& v : g.values) v = quantized ? rng.range(0, 5) / 5.0 : rng.uniform();
  return g;
}

// A cell survives iff (score, -row_major_index) is the lexicographic maximum
// of its window.
inline std::vector<Peak> nms(const ScoreGrid& g, int window, double threshold) {
  const int r = window / 2;
  std::vector<Peak> out;
  for (int j = 0; j < g.rows; ++j) {
    for (int i = 0; i < g.cols; ++i) {
      if (g.at(j, i) < threshold) continue;
      std::pair<double, long> best{-1.0, 0};
      for (int y = j - r; y <= j + r; ++y)
        for (int x = i - r; x <= i + r; ++x) {
          if (y < 0 || x < 0 || y >= g.rows || x >= g.cols) continue;
          best = std::max(best, std::pair<double, long>{g.at(y, x), -static_cast<long>(y * g.cols + x)});
        }
      if (best.second == -static_cast<long>(j * g.cols + i)) out.push_back({i, j, g.at(j, i)});
    }
  }
  return out;
}

inline std::vector<BallDetection> decode_ball(const ScoreGrid& g, const DecoderConfig& cfg, int W, int H) {
  std::vector<BallDetection> want;
  if (cfg.ball_mode == BallMode::kSingleBest) {
    std::vector<std::pair<std::pair<double, long>, BallDetection>> cells;
    for (int j = 0; j < g.rows; ++j)
      for (int i = 0; i < g.cols; ++i) {
        const double x = std::floor(4 * (i + 0.5)), y = std::floor(4 * (j + 0.5));
        if (x < W && y < H) cells.push_back({{g.at(j, i), -(j * g.cols + i)}, {x, y, g.at(j, i)}});
      }
    if (!cells.empty()) {
      const auto best = *std::max_element(cells.begin(), cells.end(),
                                           [](const auto& a, const auto& b) { return a.first < b.first; });
      if (best.second.score >= cfg.theta_ball) want.push_back(best.second);
    }
  } else {
    for (const Peak& p : nms(g, cfg.nms_window, cfg.theta_ball)) {
      const double x = std::floor(4 * (p.i + 0.5)), y = std::floor(4 * (p.j + 0.5));
      if (x < W && y < H) want.push_back({x, y, p.score});
    }
    std::stable_sort(want.begin(), want.end(), [](const auto& a, const auto& b) { return a.score > b.score; });
  }
  return want;
}

inline std::vector<PlayerDetection> decode_players(const ScoreGrid& g, const std::vector<ScoreGrid>& box,
                                                   const DecoderConfig& cfg, int W, int H) {
  std::vector<PlayerDetection> want;
  for (const Peak& p : nms(g, cfg.nms_window, cfg.theta_player)) {
    PlayerDetection d{std::floor(16 * (p.i + 0.5) + box[0].at(p.j, p.i) * W),
                      std::floor(16 * (p.j + 0.5) + box[1].at(p.j, p.i) * H), std::floor(box[2].at(p.j, p.i) * W),
                      std::floor(box[3].at(p.j, p.i) * H), p.score};
    if (d.bw > 0 && d.bh > 0 && d.cx >= 0 && d.cy >= 0 && d.cx < W && d.cy < H) want.push_back(d);
  }
  std::stable_sort(want.begin(), want.end(), [](const auto& a, const auto& b) { return a.score > b.score; });
  return want;
}

// For every recall level k/10, scans all ranking prefixes with exact
// rational comparisons and keeps the best precision as a fraction.
inline double prefix_ap(const std::vector<bool>& ranked_tp, std::size_t total_gt) {
  double sum = 0;
  for (std::size_t k = 0; k <= 10; ++k) {
    std::size_t best_num = 0, best_den = 1;
    for (std::size_t len = 1; len <= ranked_tp.size(); ++len) {
      const std::size_t tp = std::count(ranked_tp.begin(), ranked_tp.begin() + len, true);
      if (10 * tp < k * total_gt) continue;  // recall below k/10
      if (tp * best_den > best_num * len) {
        best_num = tp;
        best_den = len;
      }
    }
    sum += static_cast<double>(best_num) / best_den;
  }
  return sum / 11.0;
}

inline std::vector<NegativeCandidate> random_candidates(Rng& rng, std::size_t n, bool ties) {
  std::vector<NegativeCandidate> c;
  std::vector<std::size_t> idx(n * 2);
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
  rng.shuffle(idx.begin(), idx.end());
  for (std::size_t i = 0; i < n; ++i) c.push_back({idx[i], ties ? rng.range(0, 4) * 0.25 : rng.uniform(0, 5)});
  return c;
}

// Full sort by (loss desc, index asc), take the prefix, return sorted indices.
inline std::vector<std::size_t> mined(std::vector<NegativeCandidate> c, std::size_t k) {
  std::sort(c.begin(), c.end(), [](const auto& a, const auto& b) {
    return a.loss != b.loss ? a.loss > b.loss : a.index < b.index;
  });
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < std::min(k, c.size()); ++i) out.push_back(c[i].index);
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace fnb::oracle
