// fnb: command-line front end. Builds a run config from an optional JSON file
// plus flags (flags win) and hands it to the library's C interface.

#include <cstdio>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "footandball/footandball.h"
#include "json.hpp"

using nlohmann::json;

namespace {

// A flag bound to a JSON pointer in the run config; applied only when given.
struct Override {
  std::string pointer;
  std::function<json()> value;
  CLI::Option* option;
};

class Flags {
 public:
  explicit Flags(CLI::App* app) : app_(app) {}

  template <typename T>
  void add(const std::string& name, const std::string& pointer, const std::string& help) {
    auto slot = std::make_shared<T>();
    CLI::Option* opt = app_->add_option(name, *slot, help);
    overrides_.push_back({pointer, [slot] { return json(*slot); }, opt});
  }

  void flag(const std::string& name, const std::string& pointer, const std::string& help) {
    auto slot = std::make_shared<bool>(false);
    CLI::Option* opt = app_->add_flag(name, *slot, help);
    overrides_.push_back({pointer, [slot] { return json(*slot); }, opt});
  }

  void apply(json& cfg) const {
    for (const auto& o : overrides_)
      if (o.option->count() > 0) cfg[json::json_pointer(o.pointer)] = o.value();
  }

 private:
  CLI::App* app_;
  std::vector<Override> overrides_;
};

void log_line(const char* line, void*) {
  std::fprintf(stderr, "%s\n", line);
  std::fflush(stderr);
}

json read_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config file '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  try {
    json j = json::parse(ss.str());
    if (!j.is_object()) throw std::runtime_error("config file '" + path + "' must hold a JSON object");
    return j;
  } catch (const json::parse_error& e) {
    throw std::runtime_error("config file '" + path + "': " + e.what());
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"FootAndBall ball and player detector"};
  app.require_subcommand(1);

  struct Command {
    CLI::App* app;
    std::unique_ptr<Flags> flags;
    std::string config_path;
    bool print_config = false;
  };
  std::vector<Command> commands;
  commands.reserve(5);  // references returned by make() must stay valid
  auto make = [&](const char* name, const char* help) -> Command& {
    Command c;
    c.app = app.add_subcommand(name, help);
    c.flags = std::make_unique<Flags>(c.app);
    commands.push_back(std::move(c));
    Command& ref = commands.back();
    ref.app->add_option("-c,--config", ref.config_path, "JSON run config; flags override its fields");
    ref.app->add_flag("--print-config", ref.print_config, "print the resolved config and exit");
    ref.flags->add<int>("--threads", "/threads", "worker threads (0 = default)");
    ref.flags->add<std::uint64_t>("--seed", "/seed", "random seed");
    return ref;
  };

  {
    Command& c = make("synth", "generate a synthetic annotated dataset");
    c.flags->add<std::string>("-o,--output", "/output", "output directory");
    c.flags->add<int>("-n,--frames", "/frames", "number of frames");
    c.flags->add<int>("--width", "/synth/width", "frame width");
    c.flags->add<int>("--height", "/synth/height", "frame height");
  }
  {
    Command& c = make("train", "train a model on an annotated dataset");
    c.flags->add<std::string>("-d,--dataset", "/dataset", "annotation file (JSONL)");
    c.flags->add<std::string>("-o,--output", "/output", "run directory for checkpoints and logs");
    c.flags->add<std::string>("-w,--weights", "/weights", "initial weights");
    c.flags->add<std::string>("--resume", "/resume", "checkpoint stem to resume from");
    c.flags->add<int>("--epochs", "/train/epochs", "number of epochs");
    c.flags->add<int>("--batch-size", "/train/batch_size", "mini-batch size");
    c.flags->add<double>("--lr", "/train/lr0", "initial learning rate");
    c.flags->add<int>("--lr-drop-epoch", "/train/lr_drop_epoch", "epoch at which the learning rate drops");
    c.flags->add<int>("--checkpoint-every", "/train/checkpoint_every", "epochs between checkpoints (0 = final only)");
    c.flags->add<bool>("--augment", "/train/augment", "enable augmentation (true/false)");
    c.flags->add<double>("--split-fraction", "/split/fraction", "fraction of frames used for training");
  }
  {
    Command& c = make("detect", "run detection on a directory of frames or an annotation file");
    c.flags->add<std::string>("-w,--weights", "/weights", "model weights");
    c.flags->add<std::string>("-i,--input", "/input", "frame directory or annotation file");
    c.flags->add<std::string>("-o,--output", "/output", "detections file (JSONL)");
    c.flags->add<double>("--theta-ball", "/decoder/theta_ball", "ball confidence threshold");
    c.flags->add<double>("--theta-player", "/decoder/theta_player", "player confidence threshold");
    c.flags->add<std::string>("--ball-mode", "/decoder/ball_mode", "single-best or all-candidates");
    c.flags->add<std::string>("--dump-maps", "/dump_maps", "directory for confidence map images");
  }
  {
    Command& c = make("eval", "evaluate a model against annotations");
    c.flags->add<std::string>("-w,--weights", "/weights", "model weights");
    c.flags->add<std::string>("-d,--dataset", "/dataset", "annotation file (JSONL)");
    c.flags->add<std::string>("-o,--output", "/output", "report file (JSON)");
  }
  {
    Command& c = make("bench", "measure inference latency and throughput");
    c.flags->add<std::string>("-w,--weights", "/weights", "model weights (default: random init)");
    c.flags->add<int>("--width", "/bench/width", "frame width");
    c.flags->add<int>("--height", "/bench/height", "frame height");
    c.flags->add<int>("--warmup", "/bench/warmup", "untimed iterations");
    c.flags->add<int>("--iterations", "/bench/iterations", "timed iterations");
    c.flags->add<std::string>("-o,--output", "/output", "report file (JSON)");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : FNB_ERR_CONFIG;
  }

  for (Command& c : commands) {
    if (!c.app->parsed()) continue;
    const std::string name = c.app->get_name();
    json cfg = json::object();
    try {
      if (!c.config_path.empty()) cfg = read_config(c.config_path);
    } catch (const std::exception& e) {
      std::fprintf(stderr, "fnb %s: %s\n", name.c_str(), e.what());
      return FNB_ERR_CONFIG;
    }
    c.flags->apply(cfg);
    const std::string text = cfg.dump();

    char* out = nullptr;
    fnb_status st = c.print_config ? fnb_resolve_config(name.c_str(), text.c_str(), &out)
                                   : fnb_run_command(name.c_str(), text.c_str(), log_line, nullptr, &out);
    if (out) {
      std::printf("%s\n", out);
      fnb_string_free(out);
    }
    if (st != FNB_OK)
      std::fprintf(stderr, "fnb %s: %s: %s\n", name.c_str(), fnb_status_name(st), fnb_last_error());
    return st;
  }
  return FNB_ERR_INTERNAL;
}
