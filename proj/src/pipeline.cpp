#include "footandball/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <set>

#include "binary_io.hpp"
#include "footandball/errors.hpp"
#include "footandball/parallel.hpp"
#include "footandball/rng.hpp"
#include "json.hpp"

namespace fnb {

using json = nlohmann::json;

namespace {

// Reads fields of one JSON object and rejects the ones nobody asked for.
class Section {
 public:
  Section(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError("config field '" + where() + "' must be an object");
  }

  template <typename T>
  void get(const std::string& key, T& out) {
    auto it = j_.find(key);
    if (it == j_.end()) return;
    seen_.insert(key);
    const std::string name = full(key);
    const json& v = *it;
    if constexpr (std::is_same_v<T, bool>) {
      if (!v.is_boolean()) throw ConfigError("config field '" + name + "' must be a boolean");
      out = v.get<bool>();
    } else if constexpr (std::is_same_v<T, std::string>) {
      if (!v.is_string()) throw ConfigError("config field '" + name + "' must be a string");
      out = v.get<std::string>();
    } else if constexpr (std::is_same_v<T, std::uint64_t>) {
      if (!v.is_number_integer() || v.get<long long>() < 0) {
        throw ConfigError("config field '" + name + "' must be a non-negative integer");
      }
      out = v.get<std::uint64_t>();
    } else if constexpr (std::is_integral_v<T>) {
      if (!v.is_number_integer()) throw ConfigError("config field '" + name + "' must be an integer");
      const long long x = v.get<long long>();
      if (x < std::numeric_limits<T>::min() || x > std::numeric_limits<T>::max()) {
        throw ConfigError("config field '" + name + "' is out of range");
      }
      out = static_cast<T>(x);
    } else {
      if (!v.is_number()) throw ConfigError("config field '" + name + "' must be a number");
      out = v.get<double>();
    }
  }

  template <typename E>
  void get_enum(const std::string& key, E& out, std::initializer_list<std::pair<const char*, E>> names) {
    std::string s;
    if (!j_.contains(key)) return;
    get(key, s);
    std::string allowed;
    for (const auto& [n, e] : names) {
      if (s == n) {
        out = e;
        return;
      }
      allowed += (allowed.empty() ? "" : ", ") + std::string(n);
    }
    throw ConfigError("config field '" + full(key) + "' must be one of: " + allowed);
  }

  bool has(const std::string& key) const { return j_.contains(key); }

  /// Nested object; an absent key yields an empty section.
  Section child(const std::string& key) {
    static const json kEmpty = json::object();
    auto it = j_.find(key);
    if (it == j_.end()) return Section(kEmpty, full(key));
    seen_.insert(key);
    return Section(*it, full(key));
  }

  void finish() const {
    for (const auto& [key, value] : j_.items()) {
      if (!seen_.count(key)) throw ConfigError("unknown config field '" + full(key) + "'");
    }
  }

 private:
  std::string where() const { return path_.empty() ? "<root>" : path_; }
  std::string full(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

  const json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

const std::initializer_list<std::pair<const char*, BallMode>> kBallModes = {
    {"single-best", BallMode::kSingleBest}, {"all-candidates", BallMode::kAllCandidates}};
const std::initializer_list<std::pair<const char*, LossNormalization>> kNormalizations = {
    {"batch", LossNormalization::kBatch}, {"positives", LossNormalization::kPositives}};
const std::initializer_list<std::pair<const char*, SplitMode>> kSplitModes = {
    {"random", SplitMode::kRandom}, {"by-sequence", SplitMode::kBySequence}};
const std::initializer_list<std::pair<const char*, BoundsPolicy>> kBounds = {
    {"drop", BoundsPolicy::kDrop}, {"clip", BoundsPolicy::kClip}};

template <typename E>
std::string enum_name(E e, std::initializer_list<std::pair<const char*, E>> names) {
  for (const auto& [n, v] : names)
    if (v == e) return n;
  return "?";
}

const std::set<std::string> kCommands = {"synth", "train", "detect", "eval", "bench"};

}  // namespace

RunConfig parse_run_config(const std::string& command, const std::string& json_text) {
  if (!kCommands.count(command)) throw ConfigError("unknown command '" + command + "'");
  json j;
  try {
    j = json_text.empty() ? json::object() : json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  RunConfig c;
  c.command = command;
  Section root(j, "");
  std::string cmd = command;
  root.get("command", cmd);
  if (cmd != command) throw ConfigError("config field 'command' is '" + cmd + "' but the command is '" + command + "'");
  root.get("threads", c.threads);
  root.get("dataset", c.dataset);
  root.get("weights", c.weights);
  root.get("input", c.input);
  root.get("output", c.output);
  root.get("resume", c.resume);
  root.get("dump_maps", c.dump_maps);
  root.get("frames", c.frames);
  root.get("seed", c.seed);
  root.get_enum("bounds_policy", c.bounds, kBounds);

  c.model_given = root.has("model");
  {
    Section s = root.child("model");
    s.get("lateral_channels", c.model.lateral_channels);
    s.get("head_hidden_channels", c.model.head_hidden_channels);
    s.get("topdown_enabled", c.model.topdown_enabled);
    s.finish();
  }
  {
    Section s = root.child("train");
    TrainConfig& t = c.train;
    s.get("lr0", t.lr0);
    s.get("lr_drop_epoch", t.lr_drop_epoch);
    s.get("lr_drop_factor", t.lr_drop_factor);
    s.get("epochs", t.epochs);
    s.get("batch_size", t.batch_size);
    s.get("seed", t.seed);
    s.get("checkpoint_every", t.checkpoint_every);
    s.get("augment", t.augment);
    s.get("bn_recalibration", t.bn_recalibration);
    Section a = s.child("adam");
    a.get("beta1", t.adam.beta1);
    a.get("beta2", t.adam.beta2);
    a.get("eps", t.adam.eps);
    a.finish();
    s.finish();
  }
  {
    Section s = root.child("loss");
    LossWeights& l = c.train.loss;
    s.get("alpha_ball", l.alpha_ball);
    s.get("alpha_player", l.alpha_player);
    s.get_enum("normalization", l.normalization, kNormalizations);
    s.get("negative_ratio", l.mining.ratio);
    std::uint64_t floor = l.mining.empty_floor;
    s.get("empty_frame_negatives", floor);
    l.mining.empty_floor = floor;
    s.finish();
  }
  {
    Section s = root.child("augmentation");
    AugmentationSpec& a = c.train.augmentation;
    s.get("scale_min", a.scale_min);
    s.get("scale_max", a.scale_max);
    s.get("crop_width", a.crop_width);
    s.get("crop_height", a.crop_height);
    s.get("crop_attempts", a.crop_attempts);
    s.get("hflip_prob", a.hflip_prob);
    s.get("brightness", a.brightness);
    s.get("contrast", a.contrast);
    s.get("saturation", a.saturation);
    s.get("hue_degrees", a.hue_degrees);
    s.get("photometric_prob", a.photometric_prob);
    s.finish();
  }
  {
    Section s = root.child("split");
    s.get("fraction", c.split.fraction);
    s.get_enum("mode", c.split.mode, kSplitModes);
    s.get("seed", c.split.seed);
    s.finish();
  }
  {
    Section s = root.child("decoder");
    s.get("theta_ball", c.decoder.theta_ball);
    s.get("theta_player", c.decoder.theta_player);
    s.get("nms_window", c.decoder.nms_window);
    s.get_enum("ball_mode", c.decoder.ball_mode, kBallModes);
    s.finish();
  }
  {
    Section s = root.child("match");
    s.get("player_iou_threshold", c.match.player_iou_threshold);
    s.get("ball_distance_tolerance", c.match.ball_distance_tolerance);
    s.finish();
  }
  {
    Section s = root.child("synth");
    SynthSpec& y = c.synth;
    s.get("width", y.width);
    s.get("height", y.height);
    s.get("ball_radius_min", y.ball_radius_min);
    s.get("ball_radius_max", y.ball_radius_max);
    s.get("balls_min", y.balls_min);
    s.get("balls_max", y.balls_max);
    s.get("players_min", y.players_min);
    s.get("players_max", y.players_max);
    s.get("player_width_min", y.player_width_min);
    s.get("player_width_max", y.player_width_max);
    s.get("player_height_min", y.player_height_min);
    s.get("player_height_max", y.player_height_max);
    s.get("player_cell_separation", y.player_cell_separation);
    s.get("occlusion_probability", y.occlusion_probability);
    s.get("sequence_length", y.sequence_length);
    s.finish();
  }
  {
    Section s = root.child("bench");
    s.get("width", c.bench.width);
    s.get("height", c.bench.height);
    s.get("warmup", c.bench.warmup);
    s.get("iterations", c.bench.iterations);
    s.get("seed", c.bench.seed);
    s.finish();
  }
  root.finish();

  if (c.threads < 0) throw ConfigError("config field 'threads' must be >= 0");
  c.model.validate();
  c.decoder.validate();
  c.match.validate();
  if (command == "train") {
    c.train.validate();
    if (!(c.split.fraction > 0 && c.split.fraction <= 1)) throw ConfigError("config field 'split.fraction' must be in (0, 1]");
  }
  if (command == "synth") {
    c.synth.validate();
    if (c.frames < 1) throw ConfigError("config field 'frames' must be >= 1");
  }
  if (command == "bench") {
    if (c.bench.warmup < 3) throw ConfigError("config field 'bench.warmup' must be >= 3");
    if (c.bench.iterations < 1) throw ConfigError("config field 'bench.iterations' must be >= 1");
    if (c.bench.width < 1 || c.bench.height < 1) throw ConfigError("config fields 'bench.width'/'bench.height' must be >= 1");
  }
  return c;
}

std::string resolved_config_json(const RunConfig& c) {
  json j;
  j["command"] = c.command;
  j["threads"] = c.threads;
  j["dataset"] = c.dataset;
  j["weights"] = c.weights;
  j["input"] = c.input;
  j["output"] = c.output;
  j["resume"] = c.resume;
  j["dump_maps"] = c.dump_maps;
  j["frames"] = c.frames;
  j["seed"] = c.seed;
  j["bounds_policy"] = enum_name(c.bounds, kBounds);
  j["model"] = {{"lateral_channels", c.model.lateral_channels},
                {"head_hidden_channels", c.model.head_hidden_channels},
                {"topdown_enabled", c.model.topdown_enabled}};
  const TrainConfig& t = c.train;
  j["train"] = {{"lr0", t.lr0},
                {"lr_drop_epoch", t.lr_drop_epoch},
                {"lr_drop_factor", t.lr_drop_factor},
                {"epochs", t.epochs},
                {"batch_size", t.batch_size},
                {"seed", t.seed},
                {"checkpoint_every", t.checkpoint_every},
                {"augment", t.augment},
                {"bn_recalibration", t.bn_recalibration},
                {"adam", {{"beta1", t.adam.beta1}, {"beta2", t.adam.beta2}, {"eps", t.adam.eps}}}};
  j["loss"] = {{"alpha_ball", t.loss.alpha_ball},
               {"alpha_player", t.loss.alpha_player},
               {"normalization", enum_name(t.loss.normalization, kNormalizations)},
               {"negative_ratio", t.loss.mining.ratio},
               {"empty_frame_negatives", t.loss.mining.empty_floor}};
  const AugmentationSpec& a = t.augmentation;
  j["augmentation"] = {{"scale_min", a.scale_min},     {"scale_max", a.scale_max},
                       {"crop_width", a.crop_width},   {"crop_height", a.crop_height},
                       {"crop_attempts", a.crop_attempts}, {"hflip_prob", a.hflip_prob},
                       {"brightness", a.brightness},   {"contrast", a.contrast},
                       {"saturation", a.saturation},   {"hue_degrees", a.hue_degrees},
                       {"photometric_prob", a.photometric_prob}};
  j["split"] = {{"fraction", c.split.fraction}, {"mode", enum_name(c.split.mode, kSplitModes)}, {"seed", c.split.seed}};
  j["decoder"] = {{"theta_ball", c.decoder.theta_ball},
                  {"theta_player", c.decoder.theta_player},
                  {"nms_window", c.decoder.nms_window},
                  {"ball_mode", enum_name(c.decoder.ball_mode, kBallModes)}};
  j["match"] = {{"player_iou_threshold", c.match.player_iou_threshold},
                {"ball_distance_tolerance", c.match.ball_distance_tolerance}};
  const SynthSpec& y = c.synth;
  j["synth"] = {{"width", y.width},
                {"height", y.height},
                {"ball_radius_min", y.ball_radius_min},
                {"ball_radius_max", y.ball_radius_max},
                {"balls_min", y.balls_min},
                {"balls_max", y.balls_max},
                {"players_min", y.players_min},
                {"players_max", y.players_max},
                {"player_width_min", y.player_width_min},
                {"player_width_max", y.player_width_max},
                {"player_height_min", y.player_height_min},
                {"player_height_max", y.player_height_max},
                {"player_cell_separation", y.player_cell_separation},
                {"occlusion_probability", y.occlusion_probability},
                {"sequence_length", y.sequence_length}};
  j["bench"] = {{"width", c.bench.width},
                {"height", c.bench.height},
                {"warmup", c.bench.warmup},
                {"iterations", c.bench.iterations},
                {"seed", c.bench.seed}};
  return j.dump(2);
}

std::string detections_to_json(const std::string& frame, int width, int height, const FrameDetections& d) {
  json j;
  j["frame"] = frame;
  j["width"] = width;
  j["height"] = height;
  j["balls"] = json::array();
  for (const auto& b : d.balls) j["balls"].push_back({{"x", b.x}, {"y", b.y}, {"score", b.score}});
  j["players"] = json::array();
  for (const auto& p : d.players) {
    const PlayerDetection c = clip_to_image(p, width, height);
    j["players"].push_back({{"cx", c.cx}, {"cy", c.cy}, {"bw", c.bw}, {"bh", c.bh}, {"score", c.score}});
  }
  return j.dump();
}

namespace {

void write_text(const std::filesystem::path& path, const std::string& text) {
  detail::write_file_bytes(path, std::vector<std::uint8_t>(text.begin(), text.end()));
}

void require(const std::string& value, const char* field) {
  if (value.empty()) throw ConfigError(std::string("config field '") + field + "' is required");
}

void ensure_dir(const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create directory " + dir.string() + ": " + ec.message());
}

void check_model(const RunConfig& cfg, const ModelConfig& loaded) {
  if (cfg.model_given && !(cfg.model == loaded)) {
    throw ConfigError("model config does not match the weight file " + cfg.weights);
  }
}

CommandResult run_synth(const RunConfig& cfg, const LogFn& log) {
  require(cfg.output, "output");
  const auto records = synth_generate(cfg.synth, cfg.frames, cfg.seed, cfg.output);
  write_text(std::filesystem::path(cfg.output) / "config.json", resolved_config_json(cfg) + "\n");
  log("wrote " + std::to_string(records.size()) + " frames to " + cfg.output);
  return {};
}

std::string strip_checkpoint_ext(std::string s) {
  for (const char* ext : {".fnbw", ".fnbo"}) {
    const std::string e = ext;
    if (s.size() > e.size() && s.compare(s.size() - e.size(), e.size(), e) == 0) return s.substr(0, s.size() - e.size());
  }
  return s;
}

void write_manifest(const std::filesystem::path& path, const Dataset& ds, const std::vector<std::size_t>& idx) {
  std::vector<AnnotationRecord> out;
  for (std::size_t i : idx) {
    AnnotationRecord r = ds.records[i];
    r.frame = std::filesystem::absolute(ds.root / r.frame).lexically_normal().string();
    out.push_back(std::move(r));
  }
  write_annotations(path, out);
}

CommandResult run_train(const RunConfig& cfg, const LogFn& log) {
  require(cfg.dataset, "dataset");
  require(cfg.output, "output");
  const std::filesystem::path out(cfg.output);
  ensure_dir(out);
  Dataset all = load_dataset(cfg.dataset, cfg.bounds, log);
  if (all.size() == 0) throw ConfigError("dataset " + cfg.dataset + " has no frames");

  std::vector<std::size_t> train_idx, eval_idx;
  if (cfg.split.fraction < 1) {
    const Split s = split_dataset(all.records, cfg.split.fraction, cfg.split.mode, cfg.split.seed);
    train_idx = s.train;
    eval_idx = s.eval;
  } else {
    for (std::size_t i = 0; i < all.size(); ++i) train_idx.push_back(i);
  }
  write_manifest(out / "split_train.jsonl", all, train_idx);
  write_manifest(out / "split_eval.jsonl", all, eval_idx);
  write_text(out / "config.json", resolved_config_json(cfg) + "\n");
  const Dataset train_set = subset(all, train_idx);

  NetworkWeights<Scalar> weights;
  TrainState state;
  const bool resuming = !cfg.resume.empty();
  if (resuming) {
    const std::string stem = strip_checkpoint_ext(cfg.resume);
    weights = load_weights<Scalar>(stem + ".fnbw");
    check_model(cfg, weights.config());
    state = load_train_state(stem + ".fnbo", weights);
    log("resuming from " + stem + " at epoch " + std::to_string(state.next_epoch));
  } else if (!cfg.weights.empty()) {
    weights = load_weights<Scalar>(cfg.weights);
    check_model(cfg, weights.config());
    log("starting from " + cfg.weights + " with a fresh optimizer");
  } else {
    weights = build_network<Scalar>(cfg.model, cfg.train.seed);
  }

  std::ofstream loss_log(out / "loss_log.tsv", resuming ? std::ios::app : std::ios::trunc);
  if (!loss_log) throw IoError("cannot write " + (out / "loss_log.tsv").string());
  TrainHooks hooks;
  hooks.checkpoint_dir = out;
  hooks.log = log;
  hooks.on_epoch = [&](const EpochLog& e) {
    const std::string line = format_epoch_log(e);
    loss_log << line << "\n" << std::flush;
    log("epoch " + line);
  };
  train(weights, train_set, cfg.train, state, hooks);

  CommandResult r;
  if (!eval_idx.empty()) {
    const Dataset eval_set = subset(all, eval_idx);
    const APReport rep = evaluate(eval_set, weights, cfg.decoder, cfg.match);
    r.summary = report_to_json(rep);
    write_text(out / "eval_report.json", r.summary + "\n");
  }
  log("wrote " + (out / "final.fnbw").string());
  return r;
}

std::vector<std::filesystem::path> list_frames(const std::string& input) {
  const std::filesystem::path p(input);
  std::vector<std::filesystem::path> frames;
  if (std::filesystem::is_directory(p)) {
    for (const auto& e : std::filesystem::directory_iterator(p)) {
      if (!e.is_regular_file()) continue;
      std::string ext = e.path().extension().string();
      std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char ch) { return std::tolower(ch); });
      if (ext == ".ppm" || ext == ".png") frames.push_back(e.path());
    }
    std::sort(frames.begin(), frames.end());
  } else if (std::filesystem::is_regular_file(p)) {
    for (const auto& r : load_annotations(p)) frames.push_back(p.parent_path() / r.frame);
  } else {
    throw IoError("input " + input + " does not exist");
  }
  if (frames.empty()) throw IoError("no frames found in " + input);
  return frames;
}

Image map_image(const Tensor<Scalar>& map) {
  const Shape& s = map.shape();
  Image im(s.w, s.h);
  for (int y = 0; y < s.h; ++y)
    for (int x = 0; x < s.w; ++x)
      for (int c = 0; c < 3; ++c) im.at(c, y, x) = static_cast<float>(map.at(0, 0, y, x));
  return im;
}

CommandResult run_detect(const RunConfig& cfg, const LogFn& log) {
  require(cfg.weights, "weights");
  require(cfg.input, "input");
  require(cfg.output, "output");
  NetworkWeights<Scalar> weights = load_weights<Scalar>(cfg.weights);
  check_model(cfg, weights.config());
  const auto frames = list_frames(cfg.input);
  if (!cfg.dump_maps.empty()) ensure_dir(cfg.dump_maps);
  write_text(cfg.output + ".config.json", resolved_config_json(cfg) + "\n");
  std::string text;
  CommandResult r;
  for (const auto& path : frames) {
    const std::string name = path.filename().string();
    try {
      const Image im = load_image(path);
      const Image padded = pad_image(im, kInputAlignment);
      const auto out = infer(weights, to_tensor<Scalar>({&padded}));
      const FrameDetections d = decode_frame(out.ball_map.value(), out.player_map.value(), out.bbox.value(), 0,
                                             cfg.decoder, im.width, im.height);
      text += detections_to_json(name, im.width, im.height, d) + "\n";
      if (!cfg.dump_maps.empty()) {
        const std::string stem = path.stem().string();
        save_ppm(std::filesystem::path(cfg.dump_maps) / (stem + "_ball.ppm"), map_image(out.ball_map.value()));
        save_ppm(std::filesystem::path(cfg.dump_maps) / (stem + "_player.ppm"), map_image(out.player_map.value()));
      }
    } catch (const Error& e) {
      ++r.failures;
      text += json({{"frame", name}, {"error", e.what()}}).dump() + "\n";
      log("frame " + name + " failed: " + e.what());
    }
  }
  write_text(cfg.output, text);
  log("wrote detections for " + std::to_string(frames.size() - r.failures) + " of " + std::to_string(frames.size()) +
      " frames to " + cfg.output);
  return r;
}

CommandResult run_eval(const RunConfig& cfg, const LogFn& log) {
  require(cfg.dataset, "dataset");
  require(cfg.weights, "weights");
  NetworkWeights<Scalar> weights = load_weights<Scalar>(cfg.weights);
  check_model(cfg, weights.config());
  const Dataset ds = load_dataset(cfg.dataset, cfg.bounds, log);
  const APReport rep = evaluate(ds, weights, cfg.decoder, cfg.match);
  CommandResult r;
  r.summary = report_to_json(rep);
  if (!cfg.output.empty()) {
    write_text(cfg.output, r.summary + "\n");
    write_text(cfg.output + ".config.json", resolved_config_json(cfg) + "\n");
  }
  return r;
}

CommandResult run_bench(const RunConfig& cfg, const LogFn& log) {
  NetworkWeights<Scalar> weights;
  if (!cfg.weights.empty()) {
    weights = load_weights<Scalar>(cfg.weights);
    check_model(cfg, weights.config());
  } else {
    weights = build_network<Scalar>(cfg.model, cfg.bench.seed);
  }
  Rng rng(cfg.bench.seed);
  Image im(cfg.bench.width, cfg.bench.height);
  for (float& v : im.data) v = static_cast<float>(rng.uniform());
  const Image padded = pad_image(im, kInputAlignment);
  const Tensor<Scalar> x = to_tensor<Scalar>({&padded});
  std::vector<double> ms;
  for (int it = 0; it < cfg.bench.warmup + cfg.bench.iterations; ++it) {
    const auto t0 = std::chrono::steady_clock::now();
    const auto out = infer(weights, x);
    const FrameDetections d = decode_frame(out.ball_map.value(), out.player_map.value(), out.bbox.value(), 0,
                                           cfg.decoder, im.width, im.height);
    const double dt = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
    if (it >= cfg.bench.warmup) ms.push_back(dt);
    (void)d;
  }
  std::vector<double> sorted = ms;
  std::sort(sorted.begin(), sorted.end());
  const std::size_t n = sorted.size();
  double mean = 0;
  for (double v : ms) mean += v;
  mean /= n;
  const double median = n % 2 ? sorted[n / 2] : (sorted[n / 2 - 1] + sorted[n / 2]) / 2;
  const double p95 = sorted[static_cast<std::size_t>(std::ceil(0.95 * n)) - 1];
  json j;
  j["width"] = im.width;
  j["height"] = im.height;
  j["padded_width"] = padded.width;
  j["padded_height"] = padded.height;
  j["warmup"] = cfg.bench.warmup;
  j["iterations"] = cfg.bench.iterations;
  j["threads"] = num_threads();
  j["mean_ms"] = mean;
  j["median_ms"] = median;
  j["p95_ms"] = p95;
  j["fps"] = 1000.0 / mean;
  j["median_fps"] = 1000.0 / median;
  j["parameter_count"] = weights.trainable_count();
  CommandResult r;
  r.summary = j.dump(2);
  if (!cfg.output.empty()) {
    write_text(cfg.output, r.summary + "\n");
    write_text(cfg.output + ".config.json", resolved_config_json(cfg) + "\n");
  }
  log("bench " + std::to_string(im.width) + "x" + std::to_string(im.height) + ": median " + std::to_string(median) +
      " ms");
  return r;
}

}  // namespace

CommandResult run_command(const RunConfig& cfg, const LogFn& log_in) {
  const LogFn log = log_in ? log_in : [](const std::string&) {};
  if (cfg.threads > 0) set_num_threads(cfg.threads);
  if (cfg.command == "synth") return run_synth(cfg, log);
  if (cfg.command == "train") return run_train(cfg, log);
  if (cfg.command == "detect") return run_detect(cfg, log);
  if (cfg.command == "eval") return run_eval(cfg, log);
  if (cfg.command == "bench") return run_bench(cfg, log);
  throw ConfigError("unknown command '" + cfg.command + "'");
}

}  // namespace fnb
