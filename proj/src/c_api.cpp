#include "footandball/footandball.h"

#include <cstring>
#include <string>

#include "footandball/dataset.hpp"
#include "footandball/decode.hpp"
#include "footandball/errors.hpp"
#include "footandball/model.hpp"
#include "footandball/parallel.hpp"
#include "footandball/pipeline.hpp"
#include "json.hpp"

struct fnb_model {
  fnb::NetworkWeights<fnb::Scalar> weights;
};

struct fnb_detections {
  fnb::FrameDetections dets;
  int width = 0;
  int height = 0;
};

namespace {

thread_local std::string g_last_error;

fnb_status status_of(fnb::ErrorKind k) {
  switch (k) {
    case fnb::ErrorKind::kConfig: return FNB_ERR_CONFIG;
    case fnb::ErrorKind::kIo: return FNB_ERR_IO;
    case fnb::ErrorKind::kFormat: return FNB_ERR_FORMAT;
    case fnb::ErrorKind::kShape: return FNB_ERR_SHAPE;
    case fnb::ErrorKind::kNumeric: return FNB_ERR_NUMERIC;
    case fnb::ErrorKind::kTape: return FNB_ERR_INTERNAL;
  }
  return FNB_ERR_INTERNAL;
}

template <typename F>
fnb_status guarded(F&& f) {
  g_last_error.clear();
  try {
    return f();
  } catch (const fnb::Error& e) {
    g_last_error = e.what();
    return status_of(e.kind());
  } catch (const std::bad_alloc&) {
    g_last_error = "out of memory";
    return FNB_ERR_INTERNAL;
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return FNB_ERR_INTERNAL;
  }
}

fnb_status invalid(const char* what) {
  g_last_error = what;
  return FNB_ERR_INVALID_ARGUMENT;
}

char* dup_string(const std::string& s) {
  char* p = static_cast<char*>(std::malloc(s.size() + 1));
  if (!p) throw std::bad_alloc();
  std::memcpy(p, s.c_str(), s.size() + 1);
  return p;
}

// Parses a section object through the run-config parser so that field
// validation and error messages are shared with the CLI.
fnb::RunConfig parse_section(const char* section, const char* json_text) {
  if (!json_text || !*json_text) return fnb::parse_run_config("detect", "");
  nlohmann::json inner;
  try {
    inner = nlohmann::json::parse(json_text);
  } catch (const nlohmann::json::parse_error& e) {
    throw fnb::ConfigError(std::string(section) + " config is not valid JSON: " + e.what());
  }
  nlohmann::json outer;
  outer[section] = inner;
  return fnb::parse_run_config("detect", outer.dump());
}

fnb_status detect(fnb_model* model, const fnb::Image& im, const char* decoder_json, fnb_detections** out) {
  const fnb::RunConfig rc = parse_section("decoder", decoder_json);
  const fnb::Image padded = fnb::pad_image(im, fnb::kInputAlignment);
  const auto o = fnb::infer(model->weights, fnb::to_tensor<fnb::Scalar>({&padded}));
  auto d = std::make_unique<fnb_detections>();
  d->dets = fnb::decode_frame(o.ball_map.value(), o.player_map.value(), o.bbox.value(), 0, rc.decoder, im.width,
                              im.height);
  d->width = im.width;
  d->height = im.height;
  *out = d.release();
  return FNB_OK;
}

}  // namespace

extern "C" {

const char* fnb_last_error(void) { return g_last_error.c_str(); }

const char* fnb_status_name(fnb_status s) {
  switch (s) {
    case FNB_OK: return "ok";
    case FNB_ERR_CONFIG: return "config error";
    case FNB_ERR_IO: return "I/O error";
    case FNB_ERR_FORMAT: return "format error";
    case FNB_ERR_SHAPE: return "shape error";
    case FNB_ERR_NUMERIC: return "numeric error";
    case FNB_ERR_INTERNAL: return "internal error";
    case FNB_ERR_INVALID_ARGUMENT: return "invalid argument";
    case FNB_ERR_PARTIAL: return "partial failure";
  }
  return "unknown status";
}

const char* fnb_version(void) { return "1.0.0"; }

void fnb_set_num_threads(int n) { fnb::set_num_threads(n); }
int fnb_num_threads(void) { return fnb::num_threads(); }

void fnb_string_free(char* s) { std::free(s); }

fnb_status fnb_model_create(const char* model_config_json, uint64_t seed, fnb_model** out) {
  if (!out) return invalid("fnb_model_create: out is NULL");
  return guarded([&] {
    const fnb::RunConfig rc = parse_section("model", model_config_json);
    auto m = std::make_unique<fnb_model>();
    m->weights = fnb::build_network<fnb::Scalar>(rc.model, seed);
    *out = m.release();
    return FNB_OK;
  });
}

fnb_status fnb_model_load(const char* path, fnb_model** out) {
  if (!path || !out) return invalid("fnb_model_load: NULL argument");
  return guarded([&] {
    auto m = std::make_unique<fnb_model>();
    m->weights = fnb::load_weights<fnb::Scalar>(path);
    *out = m.release();
    return FNB_OK;
  });
}

fnb_status fnb_model_save(const fnb_model* model, const char* path) {
  if (!model || !path) return invalid("fnb_model_save: NULL argument");
  return guarded([&] {
    fnb::save_weights(model->weights, path);
    return FNB_OK;
  });
}

void fnb_model_free(fnb_model* model) { delete model; }

size_t fnb_model_parameter_count(const fnb_model* model) { return model ? model->weights.trainable_count() : 0; }

fnb_status fnb_detect_rgb(fnb_model* model, const float* rgb, int width, int height, const char* decoder_json,
                          fnb_detections** out) {
  if (!model || !rgb || !out) return invalid("fnb_detect_rgb: NULL argument");
  if (width <= 0 || height <= 0) return invalid("fnb_detect_rgb: width and height must be positive");
  return guarded([&] {
    fnb::Image im(width, height);
    std::memcpy(im.data.data(), rgb, im.data.size() * sizeof(float));
    return detect(model, im, decoder_json, out);
  });
}

fnb_status fnb_detect_image(fnb_model* model, const char* path, const char* decoder_json, fnb_detections** out) {
  if (!model || !path || !out) return invalid("fnb_detect_image: NULL argument");
  return guarded([&] { return detect(model, fnb::load_image(path), decoder_json, out); });
}

size_t fnb_detections_ball_count(const fnb_detections* d) { return d ? d->dets.balls.size() : 0; }

fnb_status fnb_detections_ball(const fnb_detections* d, size_t i, double* x, double* y, double* score) {
  if (!d || i >= d->dets.balls.size()) return invalid("fnb_detections_ball: index out of range");
  const auto& b = d->dets.balls[i];
  if (x) *x = b.x;
  if (y) *y = b.y;
  if (score) *score = b.score;
  return FNB_OK;
}

size_t fnb_detections_player_count(const fnb_detections* d) { return d ? d->dets.players.size() : 0; }

fnb_status fnb_detections_player(const fnb_detections* d, size_t i, double* cx, double* cy, double* bw, double* bh,
                                 double* score) {
  if (!d || i >= d->dets.players.size()) return invalid("fnb_detections_player: index out of range");
  const auto p = fnb::clip_to_image(d->dets.players[i], d->width, d->height);
  if (cx) *cx = p.cx;
  if (cy) *cy = p.cy;
  if (bw) *bw = p.bw;
  if (bh) *bh = p.bh;
  if (score) *score = p.score;
  return FNB_OK;
}

fnb_status fnb_detections_to_json(const fnb_detections* d, const char* frame_name, char** out) {
  if (!d || !out) return invalid("fnb_detections_to_json: NULL argument");
  return guarded([&] {
    *out = dup_string(fnb::detections_to_json(frame_name ? frame_name : "", d->width, d->height, d->dets));
    return FNB_OK;
  });
}

void fnb_detections_free(fnb_detections* d) { delete d; }

fnb_status fnb_run_command(const char* command, const char* config_json, fnb_log_fn log, void* user, char** summary) {
  if (!command) return invalid("fnb_run_command: command is NULL");
  if (summary) *summary = nullptr;
  return guarded([&] {
    const fnb::RunConfig rc = fnb::parse_run_config(command, config_json ? config_json : "");
    fnb::LogFn fn;
    if (log) fn = [log, user](const std::string& line) { log(line.c_str(), user); };
    const fnb::CommandResult r = fnb::run_command(rc, fn);
    if (summary && !r.summary.empty()) *summary = dup_string(r.summary);
    if (r.failures > 0) {
      g_last_error = std::to_string(r.failures) + " item(s) failed";
      return FNB_ERR_PARTIAL;
    }
    return FNB_OK;
  });
}

fnb_status fnb_resolve_config(const char* command, const char* config_json, char** out) {
  if (!command || !out) return invalid("fnb_resolve_config: NULL argument");
  return guarded([&] {
    *out = dup_string(fnb::resolved_config_json(fnb::parse_run_config(command, config_json ? config_json : "")));
    return FNB_OK;
  });
}

}  // extern "C"
