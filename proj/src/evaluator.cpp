#include "footandball/evaluator.hpp"

#include <algorithm>
#include <cmath>

#include "footandball/errors.hpp"
#include "json.hpp"

namespace fnb {

void MatchConfig::validate() const {
  if (!(player_iou_threshold > 0 && player_iou_threshold <= 1)) {
    throw ConfigError("match.player_iou_threshold must be in (0, 1]");
  }
  if (!(ball_distance_tolerance > 0)) throw ConfigError("match.ball_distance_tolerance must be > 0");
}

Box box_from_center(double cx, double cy, double bw, double bh) {
  return {cx - bw / 2, cy - bh / 2, cx + bw / 2, cy + bh / 2};
}

double iou(const Box& a, const Box& b) {
  const double iw = std::max(0.0, std::min(a.x1, b.x1) - std::max(a.x0, b.x0));
  const double ih = std::max(0.0, std::min(a.y1, b.y1) - std::max(a.y0, b.y0));
  const double inter = iw * ih;
  const double area_a = std::max(0.0, a.x1 - a.x0) * std::max(0.0, a.y1 - a.y0);
  const double area_b = std::max(0.0, b.x1 - b.x0) * std::max(0.0, b.y1 - b.y0);
  const double uni = area_a + area_b - inter;
  return uni > 0 ? inter / uni : 0.0;
}

FrameMatch match_players(const std::vector<PlayerDetection>& dets, const std::vector<std::array<double, 4>>& gt,
                         const MatchConfig& cfg) {
  FrameMatch fm;
  std::vector<bool> used(gt.size(), false);
  for (const auto& d : dets) {
    const Box db = box_from_center(d.cx, d.cy, d.bw, d.bh);
    int best = -1;
    double best_iou = 0;
    for (std::size_t g = 0; g < gt.size(); ++g) {
      if (used[g]) continue;
      const double v = iou(db, box_from_center(gt[g][0], gt[g][1], gt[g][2], gt[g][3]));
      if (v > cfg.player_iou_threshold && (best < 0 || v > best_iou)) {
        best = static_cast<int>(g);
        best_iou = v;
      }
    }
    if (best >= 0) used[best] = true;
    fm.matches.push_back({d.score, best >= 0});
  }
  fm.unmatched_gt = static_cast<std::size_t>(std::count(used.begin(), used.end(), false));
  return fm;
}

FrameMatch match_balls(const std::vector<BallDetection>& dets, const std::vector<std::array<double, 2>>& gt,
                       const MatchConfig& cfg) {
  FrameMatch fm;
  std::vector<bool> used(gt.size(), false);
  for (const auto& d : dets) {
    int best = -1;
    double best_dist = 0;
    for (std::size_t g = 0; g < gt.size(); ++g) {
      if (used[g]) continue;
      const double dist = std::hypot(d.x - gt[g][0], d.y - gt[g][1]);
      if (dist <= cfg.ball_distance_tolerance && (best < 0 || dist < best_dist)) {
        best = static_cast<int>(g);
        best_dist = dist;
      }
    }
    if (best >= 0) used[best] = true;
    fm.matches.push_back({d.score, best >= 0});
  }
  fm.unmatched_gt = static_cast<std::size_t>(std::count(used.begin(), used.end(), false));
  return fm;
}

PRCurve make_curve(std::vector<RankedMatch> matches, std::size_t total_gt) {
  PRCurve c;
  std::stable_sort(matches.begin(), matches.end(),
                   [](const RankedMatch& a, const RankedMatch& b) { return a.score > b.score; });
  c.ranked = std::move(matches);
  c.total_gt = total_gt;
  std::size_t tp = 0;
  std::vector<std::size_t> tps;
  for (std::size_t i = 0; i < c.ranked.size(); ++i) {
    tp += c.ranked[i].tp;
    tps.push_back(tp);
    c.precision.push_back(static_cast<double>(tp) / (i + 1));
    c.recall.push_back(total_gt ? static_cast<double>(tp) / total_gt : 0.0);
  }
  // Recall comparisons in integers: tp / total >= k / 10  <=>  10 tp >= k total.
  for (int k = 0; k <= 10; ++k) {
    double best = 0;
    for (std::size_t i = 0; i < tps.size(); ++i) {
      if (total_gt > 0 && 10 * tps[i] >= static_cast<std::size_t>(k) * total_gt) best = std::max(best, c.precision[i]);
    }
    c.interpolated[k] = best;
  }
  return c;
}

std::optional<double> average_precision(const PRCurve& curve) {
  if (curve.total_gt == 0) return std::nullopt;
  double s = 0;
  for (double p : curve.interpolated) s += p;
  return s / 11.0;
}

APReport evaluate_detections(const std::vector<FrameDetections>& dets, const std::vector<GroundTruthFrame>& gt,
                             const MatchConfig& match) {
  match.validate();
  if (dets.size() != gt.size()) throw ShapeError("evaluate: detection and ground-truth frame counts differ");
  if (gt.empty()) throw ConfigError("evaluation split is empty");
  APReport r;
  r.match = match;
  r.frames = gt.size();
  std::vector<RankedMatch> balls, players;
  for (std::size_t f = 0; f < gt.size(); ++f) {
    auto bm = match_balls(dets[f].balls, gt[f].balls, match);
    auto pm = match_players(dets[f].players, gt[f].players, match);
    balls.insert(balls.end(), bm.matches.begin(), bm.matches.end());
    players.insert(players.end(), pm.matches.begin(), pm.matches.end());
    r.ball_gt += gt[f].balls.size();
    r.player_gt += gt[f].players.size();
    r.ball_detections += dets[f].balls.size();
    r.player_detections += dets[f].players.size();
  }
  r.ball = make_curve(std::move(balls), r.ball_gt);
  r.player = make_curve(std::move(players), r.player_gt);
  r.ball_ap = average_precision(r.ball);
  r.player_ap = average_precision(r.player);
  if (r.ball_ap && r.player_ap) {
    r.map = (*r.ball_ap + *r.player_ap) / 2;
  } else if (r.ball_ap || r.player_ap) {
    r.map = r.ball_ap ? r.ball_ap : r.player_ap;
  }
  return r;
}

DecoderConfig ranking_decoder(DecoderConfig base) {
  base.ball_mode = BallMode::kAllCandidates;
  base.theta_ball = 0;
  base.theta_player = 0;
  return base;
}

template <typename T>
APReport evaluate(const Dataset& ds, NetworkWeights<T>& weights, const DecoderConfig& decoder,
                  const MatchConfig& match, std::vector<FrameDetections>* detections) {
  match.validate();
  if (ds.size() == 0) throw ConfigError("evaluation split is empty");
  const DecoderConfig dc = ranking_decoder(decoder);
  dc.validate();
  std::vector<FrameDetections> dets;
  std::vector<GroundTruthFrame> gts;
  for (std::size_t i = 0; i < ds.size(); ++i) {
    const Image padded = pad_image(ds.images[i], kInputAlignment);
    const auto out = infer(weights, to_tensor<T>({&padded}));
    dets.push_back(decode_frame(out.ball_map.value(), out.player_map.value(), out.bbox.value(), 0, dc,
                                ds.images[i].width, ds.images[i].height));
    gts.push_back(ds.records[i].gt);
  }
  APReport r = evaluate_detections(dets, gts, match);
  if (detections) *detections = std::move(dets);
  return r;
}

template APReport evaluate<float>(const Dataset&, NetworkWeights<float>&, const DecoderConfig&, const MatchConfig&,
                                  std::vector<FrameDetections>*);
template APReport evaluate<double>(const Dataset&, NetworkWeights<double>&, const DecoderConfig&, const MatchConfig&,
                                   std::vector<FrameDetections>*);

namespace {

nlohmann::json optional_number(const std::optional<double>& v) {
  return v ? nlohmann::json(*v) : nlohmann::json(nullptr);
}

nlohmann::json curve_json(const PRCurve& c) {
  nlohmann::json j;
  j["total_gt"] = c.total_gt;
  j["detections"] = c.ranked.size();
  j["true_positives"] = std::count_if(c.ranked.begin(), c.ranked.end(), [](const RankedMatch& m) { return m.tp; });
  nlohmann::json pts = nlohmann::json::array();
  for (int k = 0; k <= 10; ++k) pts.push_back({{"recall", k / 10.0}, {"precision", c.interpolated[k]}});
  j["interpolated_precision"] = pts;
  return j;
}

}  // namespace

std::string report_to_json(const APReport& r, int indent) {
  nlohmann::json j;
  j["ball_ap"] = optional_number(r.ball_ap);
  j["player_ap"] = optional_number(r.player_ap);
  j["map"] = optional_number(r.map);
  j["frames"] = r.frames;
  j["ball_gt"] = r.ball_gt;
  j["player_gt"] = r.player_gt;
  j["ball_detections"] = r.ball_detections;
  j["player_detections"] = r.player_detections;
  j["match"] = {{"player_iou_threshold", r.match.player_iou_threshold},
                {"ball_distance_tolerance", r.match.ball_distance_tolerance}};
  j["ball_curve"] = curve_json(r.ball);
  j["player_curve"] = curve_json(r.player);
  return j.dump(indent);
}

}  // namespace fnb
