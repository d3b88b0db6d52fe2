#pragma once

// Greedy detection-to-ground-truth matching and 11-point interpolated AP.

#include <array>
#include <optional>
#include <string>
#include <vector>

#include "footandball/dataset.hpp"
#include "footandball/decode.hpp"
#include "footandball/model.hpp"

namespace fnb {

struct MatchConfig {
  double player_iou_threshold = 0.5;
  double ball_distance_tolerance = 5.0;

  void validate() const;
};

/// Corner-format box.
struct Box {
  double x0, y0, x1, y1;
};

Box box_from_center(double cx, double cy, double bw, double bh);
double iou(const Box& a, const Box& b);

struct RankedMatch {
  double score;
  bool tp;
};

struct FrameMatch {
  std::vector<RankedMatch> matches;  // in detection order
  std::size_t unmatched_gt = 0;
};

/// Detections must be sorted by descending score. Each detection in turn
/// takes the unmatched ground truth with the highest IoU (players, IoU must
/// exceed the threshold) or the nearest one (balls, distance within the
/// tolerance); equal candidates go to the lower ground-truth index.
FrameMatch match_players(const std::vector<PlayerDetection>& dets, const std::vector<std::array<double, 4>>& gt,
                         const MatchConfig& cfg);
FrameMatch match_balls(const std::vector<BallDetection>& dets, const std::vector<std::array<double, 2>>& gt,
                       const MatchConfig& cfg);

struct PRCurve {
  std::vector<RankedMatch> ranked;  // descending score, stable
  std::size_t total_gt = 0;
  std::vector<double> precision;    // per ranking prefix
  std::vector<double> recall;
  std::array<double, 11> interpolated{};  // p(r) for r = 0, 0.1, ..., 1
};

/// Pools matches (stable sort by descending score) and fills the curve.
PRCurve make_curve(std::vector<RankedMatch> matches, std::size_t total_gt);

/// Mean of the 11 interpolated precisions; absent when there is no ground
/// truth.
std::optional<double> average_precision(const PRCurve& curve);

struct APReport {
  std::optional<double> ball_ap;
  std::optional<double> player_ap;
  std::optional<double> map;
  std::size_t frames = 0;
  std::size_t ball_gt = 0;
  std::size_t player_gt = 0;
  std::size_t ball_detections = 0;
  std::size_t player_detections = 0;
  PRCurve ball;
  PRCurve player;
  MatchConfig match;
};

/// Scores precomputed detections against ground truth.
APReport evaluate_detections(const std::vector<FrameDetections>& dets, const std::vector<GroundTruthFrame>& gt,
                             const MatchConfig& match);

/// The decoder config used for evaluation: every ball local maximum and
/// thresholds at 0, so the whole ranking is scored.
DecoderConfig ranking_decoder(DecoderConfig base);

/// Runs inference and decoding over the dataset (frames are zero-padded to
/// multiples of 32) and scores the result.
template <typename T>
APReport evaluate(const Dataset& ds, NetworkWeights<T>& weights, const DecoderConfig& decoder,
                  const MatchConfig& match, std::vector<FrameDetections>* detections = nullptr);

/// Machine-readable report with stable key names.
std::string report_to_json(const APReport& report, int indent = 2);

}  // namespace fnb
