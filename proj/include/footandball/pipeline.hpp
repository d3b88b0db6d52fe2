#pragma once

// Run configuration and the synth / train / detect / eval / bench commands
// behind the CLI and the C API.

#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>

#include "footandball/dataset.hpp"
#include "footandball/decode.hpp"
#include "footandball/evaluator.hpp"
#include "footandball/model.hpp"
#include "footandball/trainer.hpp"

namespace fnb {

struct SplitConfig {
  /// Fraction of frames used for training; 1 trains on everything.
  double fraction = 1.0;
  SplitMode mode = SplitMode::kRandom;
  std::uint64_t seed = 0;
};

struct BenchConfig {
  int width = 1920;
  int height = 1088;
  int warmup = 3;
  int iterations = 10;
  std::uint64_t seed = 0;
};

/// Everything a command needs. Paths are used as given (relative to the
/// working directory).
struct RunConfig {
  std::string command;
  int threads = 0;  // 0: FNB_NUM_THREADS or hardware concurrency
  std::string dataset;  // annotation file
  std::string weights;  // weight file
  std::string input;    // detect: image directory or annotation file
  std::string output;   // file or directory depending on the command
  std::string resume;   // train: checkpoint stem or .fnbw/.fnbo path
  std::string dump_maps;  // detect: directory for confidence-map images
  int frames = 8;       // synth
  std::uint64_t seed = 0;
  BoundsPolicy bounds = BoundsPolicy::kDrop;
  bool model_given = false;  // a "model" section was supplied explicitly
  ModelConfig model;
  TrainConfig train;
  SplitConfig split;
  DecoderConfig decoder;
  MatchConfig match;
  SynthSpec synth;
  BenchConfig bench;
};

/// Parses a JSON run config for `command`. Unknown or mistyped fields raise
/// ConfigError naming the field path (e.g. "train.epochs").
RunConfig parse_run_config(const std::string& command, const std::string& json_text);

/// Fully resolved config (all defaults filled in) as JSON. Parsing it back
/// yields the same RunConfig.
std::string resolved_config_json(const RunConfig& cfg);

using LogFn = std::function<void(const std::string&)>;

/// Status of a command that ran to completion but had per-item failures.
struct CommandResult {
  std::size_t failures = 0;
  std::string summary;  // JSON (eval report, bench report) or empty
};

CommandResult run_command(const RunConfig& cfg, const LogFn& log);

/// JSON line for one frame of detect output (players clipped to the image).
std::string detections_to_json(const std::string& frame, int width, int height, const FrameDetections& d);

}  // namespace fnb
