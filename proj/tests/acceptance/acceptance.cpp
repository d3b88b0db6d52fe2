// Acceptance checks. Prints one PASS/FAIL line per criterion and exits
// non-zero if any fails. Pass criterion numbers to run a subset.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <iterator>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <unistd.h>

#include "footandball/evaluator.hpp"
#include "footandball/footandball.h"
#include "footandball/gradcheck.hpp"
#include "footandball/trainer.hpp"
#include "json.hpp"
#include "oracles.hpp"

using namespace fnb;
using nlohmann::json;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;

  void fail(const std::string& why) {
    if (pass) detail.clear();
    pass = false;
    detail += (detail.empty() ? "" : "; ") + why;
  }
};

std::filesystem::path scratch_dir(const std::string& tag) {
  const auto p = std::filesystem::temp_directory_path() / ("fnb_accept_" + tag + "_" + std::to_string(::getpid()));
  std::filesystem::remove_all(p);
  std::filesystem::create_directories(p);
  return p;
}

std::string read_bytes(const std::filesystem::path& p) {
  std::ifstream f(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(f), std::istreambuf_iterator<char>()};
}

Tensor<double> random_tensor(Shape s, Rng& rng, double lo = -1, double hi = 1) {
  Tensor<double> t(s);
  for (auto& v : t.data()) v = rng.uniform(lo, hi);
  return t;
}

// Fixed random 1x1 projection to one channel, sigmoid, sum: a scalar readout
// with a non-uniform upstream gradient.
Var<double> readout(Tape<double>& tape, const Var<double>& v) {
  Rng rng(99);
  Tensor<double> w(Shape{1, v.shape().c, 1, 1});
  for (auto& x : w.data()) x = rng.uniform(-1.5, 1.5);
  const Var<double> wv = tape.leaf(w, false);
  const Var<double> bv = tape.leaf(Tensor<double>(Shape{1, 1, 1, 1}), false);
  return ops::sum(tape, ops::sigmoid(tape, ops::conv2d(tape, v, wv, bv)));
}

// ---- 1 -------------------------------------------------------------------

Outcome gradient_correctness() {
  Outcome o;
  Rng rng(1);
  GradCheckOptions opt;  // step 1e-4, tolerance 1e-4
  double worst = 0;
  std::size_t checked = 0, skipped = 0;
  auto record = [&](const char* what, const GradCheckReport& r) {
    worst = std::max(worst, r.max_rel_error);
    checked += r.checked;
    skipped += r.skipped_kinks;
    if (!r.passed) o.fail(std::string(what) + " " + r.worst);
  };
  auto shape = [&](bool even) {
    Shape s{rng.range(1, 2), rng.range(1, 3), rng.range(2, 6), rng.range(2, 6)};
    if (even) s.h += s.h % 2, s.w += s.w % 2;
    return s;
  };

  for (int t = 0; t < 5; ++t) {
    const int k = t % 2 ? 3 : 1;
    const Shape s = shape(false);
    record("conv2d", grad_check(
                         [](Tape<double>& tape, const std::vector<Var<double>>& v) {
                           return readout(tape, ops::conv2d(tape, v[0], v[1], v[2]));
                         },
                         {random_tensor(s, rng), random_tensor(Shape{2, s.c, k, k}, rng),
                          random_tensor(Shape{1, 2, 1, 1}, rng)},
                         opt));
    record("maxpool2x2", grad_check([](Tape<double>& tape, const Var<double>& x) {
                           return readout(tape, ops::maxpool2x2(tape, x));
                         }, random_tensor(shape(true), rng), opt));
    for (Mode mode : {Mode::kTrain, Mode::kEval}) {
      Shape b = shape(false);
      b.h = std::max(b.h, 3);
      record(mode == Mode::kTrain ? "batchnorm(train)" : "batchnorm(eval)",
             grad_check(
                 [&](Tape<double>& tape, const std::vector<Var<double>>& v) {
                   std::vector<double> m(b.c, 0.1), var(b.c, 1.3);
                   return readout(tape, ops::batchnorm(tape, v[0], v[1], v[2], std::span<double>(m),
                                                       std::span<double>(var), mode));
                 },
                 {random_tensor(b, rng, -2, 2), random_tensor(Shape{1, b.c, 1, 1}, rng, 0.5, 1.5),
                  random_tensor(Shape{1, b.c, 1, 1}, rng)},
                 opt));
      record(mode == Mode::kTrain ? "batchnorm_relu(train)" : "batchnorm_relu(eval)",
             grad_check(
                 [&](Tape<double>& tape, const std::vector<Var<double>>& v) {
                   std::vector<double> m(b.c, 0.1), var(b.c, 1.3);
                   return readout(tape, ops::batchnorm_relu(tape, v[0], v[1], v[2], std::span<double>(m),
                                                            std::span<double>(var), mode));
                 },
                 {random_tensor(b, rng, -2, 2), random_tensor(Shape{1, b.c, 1, 1}, rng, 0.5, 1.5),
                  random_tensor(Shape{1, b.c, 1, 1}, rng)},
                 opt));
    }
    record("relu", grad_check([](Tape<double>& tape, const Var<double>& x) { return readout(tape, ops::relu(tape, x)); },
                              random_tensor(shape(false), rng, -3, 3), opt));
    record("sigmoid", grad_check([](Tape<double>& tape, const Var<double>& x) {
                        return readout(tape, ops::sigmoid(tape, x));
                      }, random_tensor(shape(false), rng, -3, 3), opt));
    record("upsample2x", grad_check([](Tape<double>& tape, const Var<double>& x) {
                           return readout(tape, ops::upsample2x(tape, x));
                         }, random_tensor(shape(false), rng), opt));
    const Shape a = shape(false);
    record("add", grad_check(
                      [](Tape<double>& tape, const std::vector<Var<double>>& v) {
                        return readout(tape, ops::add(tape, v[0], v[1]));
                      },
                      {random_tensor(a, rng), random_tensor(a, rng)}, opt));
    Shape l = shape(false);
    l.c = 1;
    std::vector<CellLabel> cells;
    for (std::size_t i = 0; i < l.numel(); ++i)
      if (rng.chance(0.7)) cells.push_back({i, rng.chance(0.4)});
    if (cells.empty()) cells.push_back({0, true});
    record("bce_with_logits", grad_check([&](Tape<double>& tape, const Var<double>& x) {
                                return ops::bce_with_logits(tape, x, cells);
                              }, random_tensor(l, rng, -6, 6), opt));
    l.c = 4;
    std::vector<RegressionCell> reg;
    for (int y = 0; y < l.h; ++y)
      for (int x = 0; x < l.w; ++x) {
        RegressionCell c{0, y, x, {}};
        for (auto& v : c.target) v = rng.uniform(-3, 3);
        reg.push_back(c);
      }
    record("smooth_l1", grad_check([&](Tape<double>& tape, const Var<double>& x) {
                          return ops::smooth_l1(tape, x, reg);
                        }, random_tensor(l, rng, -3, 3), opt));
  }

  // Full network loss on a 1x3x64x64 synthetic frame, train mode, every
  // parameter tensor sampled.
  SynthSpec spec;
  spec.width = spec.height = 64;
  spec.players_min = spec.players_max = 1;
  const SynthFrame frame = synth_frame(spec, 5, 0);
  const NetworkWeights<double> base = build_network<double>(ModelConfig{}, 5);
  const Tensor<double> image = to_tensor<double>({&frame.image});
  const TargetAssignment targets = build_targets(frame.record.gt, 64, 64, {16, 16}, {4, 4});
  std::vector<std::size_t> trainable;
  std::vector<Tensor<double>> inputs = {image};
  for (std::size_t i = 0; i < base.params().size(); ++i) {
    if (base.params()[i].kind != ParamKind::kTrainable) continue;
    trainable.push_back(i);
    inputs.push_back(base.params()[i].tensor);
  }
  GradCheckOptions net_opt = opt;
  net_opt.max_coords_per_input = 6;
  // Biases feeding a train-mode batch norm have exactly zero gradient; the
  // central difference of a loss near 100 carries ~1e-10 of rounding noise.
  net_opt.abs_floor = 1e-5;
  const auto r = grad_check(
      [&](Tape<double>& tape, const std::vector<Var<double>>& v) {
        NetworkWeights<double> w = base;  // train mode updates running statistics
        std::vector<Var<double>> params;
        for (const auto& p : w.params()) params.push_back(tape.leaf(p.tensor, false));
        for (std::size_t k = 0; k < trainable.size(); ++k) params[trainable[k]] = v[k + 1];
        const auto out = forward(tape, w, params, v[0], Mode::kTrain);
        return total_loss(tape, out, {targets}, LossWeights{}).total;
      },
      inputs, net_opt);
  record("network", r);
  char buf[160];
  std::snprintf(buf, sizeof(buf), "%zu coordinates (%zu on the full network), max rel err %.2e, %zu kink skips",
                checked, r.checked, worst, skipped);
  if (o.pass) o.detail = buf;
  return o;
}

// ---- 2 -------------------------------------------------------------------

std::size_t conv_params(int in, int out, int k, bool bn) {
  return static_cast<std::size_t>(out) * in * k * k + out + (bn ? 2 * out : 0);
}

Outcome architecture() {
  Outcome o;
  // frozen hand sum of the default architecture
  const std::size_t hand = conv_params(3, 16, 3, true) + conv_params(16, 32, 3, true) + 3 * conv_params(32, 32, 3, true) +
                           conv_params(32, 64, 3, true) + 2 * conv_params(64, 64, 3, true) +
                           conv_params(64, 32, 3, true) + 2 * conv_params(32, 32, 1, false) +
                           conv_params(64, 32, 1, false) + 3 * conv_params(32, 32, 3, true) +
                           2 * conv_params(32, 1, 3, false) + conv_params(32, 4, 3, false);
  auto w = build_network<float>(ModelConfig{}, 1);
  const std::size_t n = w.trainable_count();
  if (hand != 178246) o.fail("hand sum " + std::to_string(hand));
  if (n != hand) o.fail("built network has " + std::to_string(n) + " parameters");
  if (n < 150000 || n > 220000) o.fail("count outside [150k, 220k]");
  const auto out = infer(w, Tensor<float>(Shape{1, 3, 1088, 1920}, 0.5f));
  auto dims = [](const Var<float>& v) {
    return std::to_string(v.shape().c) + "x" + std::to_string(v.shape().w) + "x" + std::to_string(v.shape().h);
  };
  if (out.ball_map.shape() != Shape{1, 1, 272, 480}) o.fail("ball map " + dims(out.ball_map));
  if (out.player_map.shape() != Shape{1, 1, 68, 120}) o.fail("player map " + dims(out.player_map));
  if (out.bbox.shape() != Shape{1, 4, 68, 120}) o.fail("bbox map " + dims(out.bbox));
  if (o.pass) o.detail = std::to_string(n) + " parameters; 1920x1088 -> ball 480x272, player 120x68";
  return o;
}

// ---- 3 -------------------------------------------------------------------

Outcome decode_oracles() {
  Outcome o;
  Rng rng(3);
  int mismatches = 0;
  for (int t = 0; t < 200; ++t) {
    const int window = 3 + 2 * static_cast<int>(rng.below(3));
    const double thr = t % 3 == 0 ? 0.0 : rng.uniform(0, 0.8);
    const ScoreGrid g = oracle::random_grid(rng, rng.range(1, 17), rng.range(1, 17), t % 2 == 0);
    const auto a = nms_local_maxima(g, window, thr), b = oracle::nms(g, window, thr);
    bool same = a.size() == b.size();
    for (std::size_t k = 0; same && k < a.size(); ++k) same = a[k].i == b[k].i && a[k].j == b[k].j;
    mismatches += !same;
  }
  if (mismatches) o.fail(std::to_string(mismatches) + "/200 NMS maps differ");

  mismatches = 0;
  for (int t = 0; t < 200; ++t) {
    DecoderConfig cfg;
    cfg.ball_mode = t % 2 ? BallMode::kAllCandidates : BallMode::kSingleBest;
    cfg.theta_ball = rng.uniform(0, 0.9);
    const ScoreGrid g = oracle::random_grid(rng, rng.range(1, 12), rng.range(1, 12), t % 4 < 2);
    const int W = rng.range(1, g.cols * 4), H = rng.range(1, g.rows * 4);
    const auto a = decode_ball(g, cfg, W, H), b = oracle::decode_ball(g, cfg, W, H);
    bool same = a.size() == b.size();
    for (std::size_t k = 0; same && k < a.size(); ++k) same = a[k].x == b[k].x && a[k].y == b[k].y && a[k].score == b[k].score;
    mismatches += !same;
  }
  if (mismatches) o.fail(std::to_string(mismatches) + "/200 ball maps differ");

  mismatches = 0;
  for (int t = 0; t < 200; ++t) {
    DecoderConfig cfg;
    cfg.theta_player = rng.uniform(0, 0.9);
    const int rows = rng.range(1, 8), cols = rng.range(1, 8);
    const ScoreGrid g = oracle::random_grid(rng, rows, cols, t % 2 == 0);
    std::vector<ScoreGrid> box;
    for (int c = 0; c < 4; ++c) {
      ScoreGrid b = oracle::random_grid(rng, rows, cols, false);
      for (auto& v : b.values) v = c < 2 ? (v - 0.5) * 0.1 : v * 0.3;
      box.push_back(b);
    }
    const int W = rng.range(8, cols * 16), H = rng.range(8, rows * 16);
    const auto a = decode_players(g, box, cfg, W, H), b = oracle::decode_players(g, box, cfg, W, H);
    bool same = a.size() == b.size();
    for (std::size_t k = 0; same && k < a.size(); ++k)
      same = a[k].cx == b[k].cx && a[k].cy == b[k].cy && a[k].bw == b[k].bw && a[k].bh == b[k].bh;
    mismatches += !same;
  }
  if (mismatches) o.fail(std::to_string(mismatches) + "/200 player maps differ");

  // encode -> decode round trip
  double worst = 0;
  std::size_t boxes = 0;
  for (int t = 0; t < 200; ++t) {
    const int W = 32 * rng.range(2, 12), H = 32 * rng.range(2, 12);
    const GridSize pg{H / 16, W / 16}, bg{H / 4, W / 4};
    GroundTruthFrame gt;
    std::vector<std::pair<int, int>> used;
    for (int k = 0; k < 6; ++k) {
      const double cx = rng.uniform(0, W - 1e-6), cy = rng.uniform(0, H - 1e-6);
      const int ci = static_cast<int>(cx / 16), cj = static_cast<int>(cy / 16);
      bool clash = false;
      for (auto [ui, uj] : used) clash |= std::max(std::abs(ui - ci), std::abs(uj - cj)) < 2;
      if (clash) continue;
      used.push_back({ci, cj});
      gt.players.push_back({cx, cy, rng.uniform(4, 60), rng.uniform(8, 90)});
    }
    const TargetAssignment ta = build_targets(gt, W, H, bg, pg);
    ScoreGrid pm{pg.rows, pg.cols, std::vector<double>(pg.cells(), 0.0)};
    std::vector<ScoreGrid> box(4, pm);
    for (std::size_t cell : ta.player_pos) pm.values[cell] = 1.0;
    for (const auto& [cell, v] : ta.bbox_targets)
      for (int c = 0; c < 4; ++c) box[c].values[cell] = v[c];
    const auto dets = decode_players(pm, box, DecoderConfig{}, W, H);
    if (dets.size() != gt.players.size()) {
      o.fail("round trip lost a player");
      break;
    }
    for (const auto& p : gt.players) {
      double best = 1e9;
      for (const auto& d : dets)
        best = std::min(best, std::max({std::abs(d.cx - p[0]), std::abs(d.cy - p[1]), std::abs(d.bw - p[2]),
                                        std::abs(d.bh - p[3])}));
      worst = std::max(worst, best);
      ++boxes;
    }
  }
  if (worst > 1.0) o.fail("round trip error " + std::to_string(worst) + " px");
  if (o.pass) {
    char buf[128];
    std::snprintf(buf, sizeof(buf), "600 maps match brute force; %zu boxes round-trip within %.2f px", boxes, worst);
    o.detail = buf;
  }
  return o;
}

// ---- 4 -------------------------------------------------------------------

Outcome ap_oracle() {
  Outcome o;
  Rng rng(4);
  int mismatches = 0;
  for (int t = 0; t < 100; ++t) {
    const std::size_t n = rng.below(21);
    std::vector<RankedMatch> m;
    std::size_t tps = 0;
    for (std::size_t i = 0; i < n; ++i) {
      const bool tp = rng.chance(0.5);
      tps += tp;
      m.push_back({rng.uniform(), tp});
    }
    const std::size_t total = tps + rng.below(6) + (tps == 0 ? 1 : 0);
    std::vector<RankedMatch> sorted = m;
    std::stable_sort(sorted.begin(), sorted.end(), [](const auto& a, const auto& b) { return a.score > b.score; });
    std::vector<bool> ranked;
    for (const auto& r : sorted) ranked.push_back(r.tp);
    const auto ap = average_precision(make_curve(m, total));
    mismatches += !ap || *ap != oracle::prefix_ap(ranked, total);
  }
  if (mismatches) o.fail(std::to_string(mismatches) + "/100 sets differ from the prefix oracle");
  const auto hand = average_precision(make_curve({{0.9, true}, {0.8, false}, {0.7, true}}, 2));
  if (!hand || std::abs(*hand - 28.0 / 33.0) > 1e-12) o.fail("[TP,FP,TP] with 2 GT is not 28/33");
  if (o.pass) {
    char buf[128];
    std::snprintf(buf, sizeof(buf), "100 sets exact; [TP,FP,TP]/2 GT = %.15f", *hand);
    o.detail = buf;
  }
  return o;
}

// ---- 5 -------------------------------------------------------------------

Outcome overfit() {
  Outcome o;
  constexpr int kEpochs = 200;
  std::string detail;
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    const auto dir = scratch_dir("overfit" + std::to_string(seed));
    synth_generate(SynthSpec{}, 8, seed, dir);
    const Dataset ds = load_dataset(dir / "annotations.jsonl");
    auto w = build_network<float>(ModelConfig{}, seed);
    TrainConfig cfg;
    cfg.epochs = cfg.lr_drop_epoch = kEpochs;
    cfg.batch_size = 8;
    cfg.augment = false;
    cfg.seed = seed;
    TrainState state;
    const auto t0 = std::chrono::steady_clock::now();
    const auto logs = train(w, ds, cfg, state);
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const APReport rep = evaluate(ds, w, DecoderConfig{}, MatchConfig{});
    std::filesystem::remove_all(dir);
    const double ratio = logs.back().loss.total / logs.front().loss.total;
    const double ball = rep.ball_ap.value_or(0), player = rep.player_ap.value_or(0);
    char buf[160];
    std::snprintf(buf, sizeof(buf), "seed %llu: ball AP %.3f, player AP %.3f, loss ratio %.4f, %.0f s",
                  static_cast<unsigned long long>(seed), ball, player, ratio, secs);
    detail += (detail.empty() ? "" : "; ") + std::string(buf);
    if (ball < 0.95 || player < 0.95 || !(ratio < 0.05)) o.fail(buf);
  }
  if (o.pass) o.detail = detail;
  return o;
}

// ---- 6 -------------------------------------------------------------------

Outcome mining_invariant() {
  Outcome o;
  Rng rng(6);
  int bad = 0;
  for (int t = 0; t < 1000; ++t) {
    const std::size_t n = rng.below(60);
    const auto cands = oracle::random_candidates(rng, n, t % 2 == 0);
    const std::size_t n_pos = 1 + rng.below(25);
    const auto got = hard_negative_mining(cands, n_pos, MiningConfig{});
    bool ok = got.size() == std::min(3 * n_pos, n) && got == oracle::mined(cands, got.size());
    const std::set<std::size_t> in(got.begin(), got.end());
    double min_in = INFINITY, max_out = -INFINITY;
    for (const auto& c : cands) (in.count(c.index) ? min_in : max_out) =
        in.count(c.index) ? std::min(min_in, c.loss) : std::max(max_out, c.loss);
    if (!got.empty() && got.size() < n) ok = ok && max_out <= min_in;
    bad += !ok;
  }
  if (bad) o.fail(std::to_string(bad) + "/1000 assignments violate the invariant");
  else o.detail = "1000 assignments: size min(3 n_pos, available), no excluded loss above an included one";
  return o;
}

// ---- 7 / 8 (through the C API) -------------------------------------------

bool run(const char* command, const json& cfg, std::string* summary = nullptr) {
  char* out = nullptr;
  const fnb_status st = fnb_run_command(command, cfg.dump().c_str(), nullptr, nullptr, summary ? &out : nullptr);
  if (out) {
    *summary = out;
    fnb_string_free(out);
  }
  if (st != FNB_OK) std::fprintf(stderr, "%s: %s: %s\n", command, fnb_status_name(st), fnb_last_error());
  return st == FNB_OK;
}

Outcome determinism() {
  Outcome o;
  const auto root = scratch_dir("determinism");
  const std::string data = (root / "data").string();
  if (!run("synth", {{"output", data}, {"frames", 6}, {"seed", 7}, {"synth", {{"width", 160}, {"height", 128}}}})) {
    o.fail("synth failed");
    return o;
  }
  // two identical runs that differ only in the kernel thread count
  const int threads = 4;
  for (int k : {0, 1}) {
    const std::string run_dir = (root / ("run" + std::to_string(k))).string();
    json train = {{"dataset", data + "/annotations.jsonl"},
                  {"output", run_dir},
                  {"threads", k == 0 ? threads : 1},
                  {"train", {{"epochs", 3}, {"lr_drop_epoch", 2}, {"batch_size", 3}, {"checkpoint_every", 1}, {"seed", 11}}}};
    json detect = {{"weights", run_dir + "/final.fnbw"}, {"input", data}, {"output", run_dir + "/dets.jsonl"},
                   {"decoder", {{"theta_ball", 0.0}, {"theta_player", 0.0}, {"ball_mode", "all-candidates"}}}};
    if (!run("train", train) || !run("detect", detect)) {
      o.fail("run " + std::to_string(k) + " failed");
      return o;
    }
  }
  fnb_set_num_threads(0);
  int files = 0;
  for (const char* f : {"epoch_0001.fnbw", "epoch_0001.fnbo", "epoch_0002.fnbw", "epoch_0002.fnbo", "final.fnbw",
                        "final.fnbo", "loss_log.tsv", "dets.jsonl"}) {
    const std::string a = read_bytes(root / "run0" / f), b = read_bytes(root / "run1" / f);
    if (a.empty() || a != b) o.fail(std::string(f) + " differs");
    ++files;
  }
  std::filesystem::remove_all(root);
  if (o.pass) {
    o.detail = std::to_string(files) + " checkpoint, log and detection files bit-identical across two runs (" +
               std::to_string(threads) + " and 1 kernel threads)";
  }
  return o;
}

Outcome throughput() {
  Outcome o;
  std::string detail;
  for (auto [w, h] : {std::pair{1920, 1088}, std::pair{960, 544}}) {
    std::string summary;
    if (!run("bench", {{"bench", {{"width", w}, {"height", h}, {"warmup", 3}, {"iterations", 5}}}}, &summary)) {
      o.fail("bench " + std::to_string(w) + "x" + std::to_string(h) + " failed");
      continue;
    }
    const json j = json::parse(summary);
    for (const char* key : {"fps", "median_ms", "p95_ms", "parameter_count"})
      if (!j.contains(key)) o.fail(std::string("bench report lacks ") + key);
    char buf[160];
    std::snprintf(buf, sizeof(buf), "%dx%d %.2f FPS (median %.1f ms, p95 %.1f ms)", w, h, j.value("fps", 0.0),
                  j.value("median_ms", 0.0), j.value("p95_ms", 0.0));
    detail += (detail.empty() ? "" : "; ") + std::string(buf);
    if (j.value("parameter_count", 0) != 178246) o.fail("bench reports a wrong parameter count");
  }
  if (o.pass) o.detail = detail + "; " + std::to_string(fnb_num_threads()) + " threads";
  return o;
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria = {
      {"gradient correctness", gradient_correctness},
      {"architecture conformance", architecture},
      {"decode oracles", decode_oracles},
      {"AP oracle", ap_oracle},
      {"end-to-end overfit", overfit},
      {"hard-negative-mining invariant", mining_invariant},
      {"determinism", determinism},
      {"throughput report", throughput},
  };
  std::set<int> only;
  for (int i = 1; i < argc; ++i) only.insert(std::atoi(argv[i]));
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const int id = static_cast<int>(i) + 1;
    if (!only.empty() && !only.count(id)) continue;
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o.fail(std::string("exception: ") + e.what());
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::printf("[%s] %d %s (%.1f s): %s\n", o.pass ? "PASS" : "FAIL", id, criteria[i].first, secs, o.detail.c_str());
    std::fflush(stdout);
    failed += !o.pass;
  }
  return failed ? 1 : 0;
}
