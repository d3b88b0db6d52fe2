#include "footandball/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

#include "json.hpp"

#include "binary_io.hpp"
#include "footandball/errors.hpp"
#include "footandball/rng.hpp"

#ifdef FNB_WITH_PNG
#include <png.h>
#endif

namespace fnb {

using json = nlohmann::json;

namespace {

// Reads one whitespace-delimited PPM header token, skipping comments.
std::string header_token(const std::vector<std::uint8_t>& b, std::size_t& pos, const std::string& name) {
  while (pos < b.size()) {
    if (b[pos] == '#') {
      while (pos < b.size() && b[pos] != '\n') ++pos;
    } else if (std::isspace(b[pos])) {
      ++pos;
    } else {
      break;
    }
  }
  std::string tok;
  while (pos < b.size() && !std::isspace(b[pos]) && b[pos] != '#') tok.push_back(static_cast<char>(b[pos++]));
  if (tok.empty()) throw FormatError(name + ": truncated PPM header");
  return tok;
}

int header_int(const std::vector<std::uint8_t>& b, std::size_t& pos, const std::string& name,
               const char* field) {
  const std::string tok = header_token(b, pos, name);
  if (tok.size() > 9 || !std::all_of(tok.begin(), tok.end(), [](char c) { return std::isdigit(c); })) {
    throw FormatError(name + ": bad PPM " + field + " \"" + tok + "\"");
  }
  return std::stoi(tok);
}

#ifdef FNB_WITH_PNG
Image decode_png(const std::filesystem::path& path) {
  png_image img{};
  img.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_file(&img, path.string().c_str())) {
    throw FormatError(path.string() + ": cannot decode PNG: " + img.message);
  }
  img.format = PNG_FORMAT_RGB;
  std::vector<std::uint8_t> buf(PNG_IMAGE_SIZE(img));
  if (!png_image_finish_read(&img, nullptr, buf.data(), 0, nullptr)) {
    throw FormatError(path.string() + ": cannot decode PNG: " + img.message);
  }
  Image out(static_cast<int>(img.width), static_cast<int>(img.height));
  const std::size_t hw = static_cast<std::size_t>(out.width) * out.height;
  for (std::size_t i = 0; i < hw; ++i)
    for (int c = 0; c < 3; ++c) out.data[c * hw + i] = buf[3 * i + c] / 255.0f;
  return out;
}
#endif

}  // namespace

Image decode_ppm(const std::vector<std::uint8_t>& bytes, const std::string& name) {
  if (bytes.size() < 2 || bytes[0] != 'P' || bytes[1] != '6') {
    throw FormatError(name + ": not a binary PPM (P6) image");
  }
  std::size_t pos = 2;
  const int w = header_int(bytes, pos, name, "width");
  const int h = header_int(bytes, pos, name, "height");
  const int maxval = header_int(bytes, pos, name, "maxval");
  if (w <= 0 || h <= 0) throw FormatError(name + ": empty PPM image");
  if (maxval != 255) throw FormatError(name + ": only 8-bit PPM (maxval 255) is supported, got " + std::to_string(maxval));
  if (pos >= bytes.size() || !std::isspace(bytes[pos])) throw FormatError(name + ": truncated PPM header");
  ++pos;
  const std::size_t hw = static_cast<std::size_t>(w) * h;
  if (bytes.size() - pos < 3 * hw) {
    throw FormatError(name + ": truncated PPM pixel data (" + std::to_string(bytes.size() - pos) + " of " +
                      std::to_string(3 * hw) + " bytes)");
  }
  Image img(w, h);
  const std::uint8_t* p = bytes.data() + pos;
  for (std::size_t i = 0; i < hw; ++i)
    for (int c = 0; c < 3; ++c) img.data[c * hw + i] = p[3 * i + c] / 255.0f;
  return img;
}

std::vector<std::uint8_t> encode_ppm(const Image& image) {
  const std::string header = "P6\n" + std::to_string(image.width) + " " + std::to_string(image.height) + "\n255\n";
  std::vector<std::uint8_t> out(header.begin(), header.end());
  const std::size_t hw = static_cast<std::size_t>(image.width) * image.height;
  out.reserve(out.size() + 3 * hw);
  for (std::size_t i = 0; i < hw; ++i) {
    for (int c = 0; c < 3; ++c) {
      const float v = std::clamp(image.data[c * hw + i], 0.0f, 1.0f);
      out.push_back(static_cast<std::uint8_t>(std::lround(v * 255.0f)));
    }
  }
  return out;
}

void save_ppm(const std::filesystem::path& path, const Image& image) {
  detail::write_file_bytes(path, encode_ppm(image));
}

std::string supported_image_formats() {
#ifdef FNB_WITH_PNG
  return "PPM (P6), PNG";
#else
  return "PPM (P6)";
#endif
}

Image load_image(const std::filesystem::path& path) {
  const auto bytes = detail::read_file_bytes(path);
  if (bytes.size() >= 2 && bytes[0] == 'P' && bytes[1] == '6') return decode_ppm(bytes, path.string());
  static const std::uint8_t kPng[8] = {0x89, 'P', 'N', 'G', '\r', '\n', 0x1a, '\n'};
  if (bytes.size() >= 8 && std::equal(kPng, kPng + 8, bytes.begin())) {
#ifdef FNB_WITH_PNG
    return decode_png(path);
#else
    throw FormatError(path.string() + ": PNG support not built in; supported formats: " + supported_image_formats());
#endif
  }
  throw FormatError(path.string() + ": unsupported image format; supported formats: " + supported_image_formats());
}

Image pad_image(const Image& image, int multiple) {
  const int w = (image.width + multiple - 1) / multiple * multiple;
  const int h = (image.height + multiple - 1) / multiple * multiple;
  if (w == image.width && h == image.height) return image;
  Image out(w, h);
  for (int c = 0; c < 3; ++c)
    for (int y = 0; y < image.height; ++y)
      std::copy_n(&image.data[(static_cast<std::size_t>(c) * image.height + y) * image.width], image.width,
                  &out.at(c, y, 0));
  return out;
}

template <typename T>
Tensor<T> to_tensor(const std::vector<const Image*>& images) {
  if (images.empty()) throw ShapeError("to_tensor: no images");
  const int w = images[0]->width, h = images[0]->height;
  Tensor<T> t(Shape{static_cast<int>(images.size()), 3, h, w});
  for (std::size_t n = 0; n < images.size(); ++n) {
    const Image& im = *images[n];
    if (im.width != w || im.height != h) {
      throw ShapeError("to_tensor: image " + std::to_string(im.width) + "x" + std::to_string(im.height) +
                       " differs from " + std::to_string(w) + "x" + std::to_string(h));
    }
    std::copy(im.data.begin(), im.data.end(), t.plane(static_cast<int>(n), 0));
  }
  return t;
}

template Tensor<float> to_tensor<float>(const std::vector<const Image*>&);
template Tensor<double> to_tensor<double>(const std::vector<const Image*>&);

namespace {

template <std::size_t N>
std::vector<std::array<double, N>> parse_points(const json& v, const std::string& where, const char* field) {
  if (!v.is_array()) throw FormatError(where + ": \"" + field + "\" must be an array");
  std::vector<std::array<double, N>> out;
  for (const auto& item : v) {
    if (!item.is_array() || item.size() != N) {
      throw FormatError(where + ": every entry of \"" + field + "\" must have " + std::to_string(N) + " numbers");
    }
    std::array<double, N> a{};
    for (std::size_t k = 0; k < N; ++k) {
      if (!item[k].is_number()) throw FormatError(where + ": non-numeric value in \"" + field + "\"");
      a[k] = item[k].get<double>();
      if (!std::isfinite(a[k])) throw FormatError(where + ": non-finite value in \"" + field + "\"");
    }
    out.push_back(a);
  }
  return out;
}

}  // namespace

AnnotationRecord parse_annotation(const std::string& line, const std::string& where, const WarningSink& warn) {
  json j;
  try {
    j = json::parse(line);
  } catch (const json::parse_error& e) {
    throw FormatError(where + ": malformed JSON: " + e.what());
  }
  if (!j.is_object()) throw FormatError(where + ": expected a JSON object");
  AnnotationRecord r;
  for (const auto& [key, value] : j.items()) {
    if (key == "frame") {
      if (!value.is_string() || value.get<std::string>().empty()) {
        throw FormatError(where + ": \"frame\" must be a non-empty string");
      }
      r.frame = value.get<std::string>();
    } else if (key == "balls") {
      r.gt.balls = parse_points<2>(value, where, "balls");
    } else if (key == "players") {
      r.gt.players = parse_points<4>(value, where, "players");
    } else if (key == "sequence") {
      if (value.is_string()) {
        r.sequence = value.get<std::string>();
      } else if (value.is_number_integer()) {
        r.sequence = std::to_string(value.get<long long>());
      } else {
        throw FormatError(where + ": \"sequence\" must be a string or integer");
      }
    } else if (warn) {
      warn(where + ": ignoring unknown field \"" + key + "\"");
    }
  }
  if (r.frame.empty()) throw FormatError(where + ": missing \"frame\"");
  return r;
}

std::string format_annotation(const AnnotationRecord& record) {
  json j;
  j["frame"] = record.frame;
  if (!record.sequence.empty()) j["sequence"] = record.sequence;
  j["balls"] = json::array();
  for (const auto& b : record.gt.balls) j["balls"].push_back({b[0], b[1]});
  j["players"] = json::array();
  for (const auto& p : record.gt.players) j["players"].push_back({p[0], p[1], p[2], p[3]});
  return j.dump();
}

std::vector<AnnotationRecord> load_annotations(const std::filesystem::path& path, const WarningSink& warn) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open annotation file " + path.string());
  std::vector<AnnotationRecord> out;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (std::all_of(line.begin(), line.end(), [](unsigned char c) { return std::isspace(c); })) continue;
    out.push_back(parse_annotation(line, path.string() + ":" + std::to_string(lineno), warn));
  }
  return out;
}

void write_annotations(const std::filesystem::path& path, const std::vector<AnnotationRecord>& records) {
  std::string text;
  for (const auto& r : records) text += format_annotation(r) + "\n";
  detail::write_file_bytes(path, std::vector<std::uint8_t>(text.begin(), text.end()));
}

Dataset load_dataset(const std::filesystem::path& annotations, BoundsPolicy policy, const WarningSink& warn) {
  Dataset ds;
  ds.root = annotations.parent_path();
  ds.records = load_annotations(annotations, warn);
  ds.images.reserve(ds.records.size());
  for (auto& r : ds.records) {
    const std::filesystem::path p = ds.root / r.frame;
    if (!std::filesystem::exists(p)) throw IoError("missing image file " + p.string());
    ds.images.push_back(load_image(p));
    const double W = ds.images.back().width, H = ds.images.back().height;
    auto note = [&](const std::string& what) {
      if (warn) warn(r.frame + ": " + what + (policy == BoundsPolicy::kClip ? " (clipped)" : " (dropped)"));
    };
    std::vector<std::array<double, 2>> balls;
    for (auto b : r.gt.balls) {
      if (b[0] >= 0 && b[1] >= 0 && b[0] < W && b[1] < H) {
        balls.push_back(b);
        continue;
      }
      note("ball outside the image");
      if (policy == BoundsPolicy::kClip) {
        balls.push_back({std::clamp(b[0], 0.0, W - 1), std::clamp(b[1], 0.0, H - 1)});
      }
    }
    std::vector<std::array<double, 4>> players;
    for (auto p : r.gt.players) {
      const bool center_ok = p[0] >= 0 && p[1] >= 0 && p[0] < W && p[1] < H;
      if (center_ok && p[2] > 0 && p[3] > 0) {
        players.push_back(p);
        continue;
      }
      note("player box outside the image or with non-positive size");
      if (policy == BoundsPolicy::kClip && p[2] > 0 && p[3] > 0) {
        players.push_back({std::clamp(p[0], 0.0, W - 1), std::clamp(p[1], 0.0, H - 1), p[2], p[3]});
      }
    }
    r.gt.balls = std::move(balls);
    r.gt.players = std::move(players);
  }
  return ds;
}

Dataset subset(const Dataset& ds, const std::vector<std::size_t>& indices) {
  Dataset out;
  out.root = ds.root;
  for (std::size_t i : indices) {
    out.records.push_back(ds.records.at(i));
    out.images.push_back(ds.images.at(i));
  }
  return out;
}

void SynthSpec::validate() const {
  auto need = [](bool ok, const std::string& what) {
    if (!ok) throw ConfigError("synth: " + what);
  };
  need(width >= 32 && height >= 32, "width and height must be >= 32");
  need(ball_radius_min > 0 && ball_radius_max >= ball_radius_min, "invalid ball radius range");
  need(balls_min >= 0 && balls_max >= balls_min, "invalid ball count range");
  need(players_min >= 0 && players_max >= players_min, "invalid player count range");
  need(player_width_min > 0 && player_width_max >= player_width_min, "invalid player width range");
  need(player_height_min > 0 && player_height_max >= player_height_min, "invalid player height range");
  need(player_width_max + 4 < width && player_height_max + 4 < height, "players do not fit in the frame");
  need(2 * ball_radius_max + 4 < std::min(width, height), "balls do not fit in the frame");
  need(player_cell_separation >= 0, "player_cell_separation must be >= 0");
  need(occlusion_probability >= 0 && occlusion_probability <= 1, "occlusion_probability must be in [0, 1]");
  need(sequence_length >= 0, "sequence_length must be >= 0");
}

namespace {

struct Rgb {
  float r, g, b;
};

void blend(Image& im, int x, int y, Rgb c, float alpha) {
  if (x < 0 || y < 0 || x >= im.width || y >= im.height) return;
  float* ch[3] = {&im.at(0, y, x), &im.at(1, y, x), &im.at(2, y, x)};
  const float v[3] = {c.r, c.g, c.b};
  for (int k = 0; k < 3; ++k) *ch[k] = (1 - alpha) * *ch[k] + alpha * v[k];
}

void fill_rect(Image& im, int x0, int y0, int x1, int y1, Rgb c) {
  for (int y = std::max(0, y0); y < std::min(im.height, y1); ++y)
    for (int x = std::max(0, x0); x < std::min(im.width, x1); ++x) blend(im, x, y, c, 1.0f);
}

void render_background(Image& im, Rng& rng) {
  const double stripe = rng.uniform(16, 40);
  const bool vertical = rng.chance(0.5);
  const Rgb base{static_cast<float>(rng.uniform(0.12, 0.22)), static_cast<float>(rng.uniform(0.42, 0.58)),
                 static_cast<float>(rng.uniform(0.12, 0.22))};
  for (int y = 0; y < im.height; ++y) {
    for (int x = 0; x < im.width; ++x) {
      const int band = static_cast<int>((vertical ? x : y) / stripe);
      const float shade = (band % 2 ? 1.08f : 0.94f) * static_cast<float>(1.0 + 0.04 * rng.normal());
      im.at(0, y, x) = std::clamp(base.r * shade, 0.0f, 1.0f);
      im.at(1, y, x) = std::clamp(base.g * shade, 0.0f, 1.0f);
      im.at(2, y, x) = std::clamp(base.b * shade, 0.0f, 1.0f);
    }
  }
}

// Torso, head and shorts inside the box; arms and legs reach the box edges.
void render_player(Image& im, const std::array<double, 4>& box, Rng& rng) {
  static const Rgb kJerseys[] = {{0.85f, 0.1f, 0.1f}, {0.1f, 0.2f, 0.85f}, {0.95f, 0.85f, 0.1f},
                                 {0.05f, 0.05f, 0.05f}, {0.5f, 0.75f, 0.95f}, {0.95f, 0.5f, 0.1f}};
  const Rgb jersey = kJerseys[rng.below(std::size(kJerseys))];
  const Rgb shorts{0.08f, 0.08f, 0.1f};
  const Rgb skin{static_cast<float>(rng.uniform(0.45, 0.9)), static_cast<float>(rng.uniform(0.3, 0.65)),
                 static_cast<float>(rng.uniform(0.2, 0.5))};
  const int x0 = static_cast<int>(std::lround(box[0] - box[2] / 2));
  const int x1 = static_cast<int>(std::lround(box[0] + box[2] / 2));
  const int y0 = static_cast<int>(std::lround(box[1] - box[3] / 2));
  const int y1 = static_cast<int>(std::lround(box[1] + box[3] / 2));
  const int w = x1 - x0, h = y1 - y0;
  const int head = std::max(3, h / 6);
  const int tx0 = x0 + w / 4, tx1 = x1 - w / 4;
  const int torso_end = y0 + head + h * 2 / 5;
  const int shorts_end = torso_end + h / 8;
  const int hx = (x0 + x1) / 2;
  fill_rect(im, hx - head / 2, y0, hx - head / 2 + head, y0 + head, skin);
  fill_rect(im, tx0, y0 + head, tx1, torso_end, jersey);
  fill_rect(im, tx0, torso_end, tx1, shorts_end, shorts);
  // Arms: jittered strips from the torso to the box sides.
  for (int y = y0 + head + 1; y < y0 + head + h / 3; ++y) {
    const int reach_l = x0 + static_cast<int>(rng.below(2));
    const int reach_r = x1 - static_cast<int>(rng.below(2));
    fill_rect(im, reach_l, y, tx0, y + 1, skin);
    fill_rect(im, tx1, y, reach_r, y + 1, skin);
  }
  // Legs: two strips from the shorts to the bottom edge.
  const int leg_w = std::max(1, w / 6);
  for (int y = shorts_end; y < y1; ++y) {
    const int jl = static_cast<int>(rng.below(2)), jr = static_cast<int>(rng.below(2));
    fill_rect(im, tx0 + jl, y, tx0 + jl + leg_w, y + 1, skin);
    fill_rect(im, tx1 - leg_w - jr, y, tx1 - jr, y + 1, skin);
  }
}

// Anti-aliased disk by 4x4 supersampling; the pixel (x, y) covers
// [x, x + 1) x [y, y + 1), so its center sits at (x + 0.5, y + 0.5).
void render_ball(Image& im, double cx, double cy, double r) {
  const Rgb white{0.96f, 0.96f, 0.94f};
  for (int y = static_cast<int>(cy - r) - 1; y <= static_cast<int>(cy + r) + 1; ++y) {
    for (int x = static_cast<int>(cx - r) - 1; x <= static_cast<int>(cx + r) + 1; ++x) {
      int inside = 0;
      for (int sy = 0; sy < 4; ++sy)
        for (int sx = 0; sx < 4; ++sx) {
          const double px = x + (sx + 0.5) / 4, py = y + (sy + 0.5) / 4;
          if ((px - cx) * (px - cx) + (py - cy) * (py - cy) <= r * r) ++inside;
        }
      if (inside) blend(im, x, y, white, inside / 16.0f);
    }
  }
}

bool overlaps(const std::array<double, 4>& box, double cx, double cy, double margin) {
  return std::fabs(cx - box[0]) < box[2] / 2 + margin && std::fabs(cy - box[1]) < box[3] / 2 + margin;
}

}  // namespace

SynthFrame synth_frame(const SynthSpec& spec, std::uint64_t seed, int index) {
  spec.validate();
  Rng rng = Rng::derive(seed, static_cast<std::uint64_t>(index), 0x5f17);
  SynthFrame f;
  f.image = Image(spec.width, spec.height);
  render_background(f.image, rng);
  char name[32];
  std::snprintf(name, sizeof(name), "frame_%05d.ppm", index);
  f.record.frame = name;
  if (spec.sequence_length > 0) f.record.sequence = "seq" + std::to_string(index / spec.sequence_length);

  const int n_players = rng.range(spec.players_min, spec.players_max);
  std::vector<std::array<double, 4>> players;
  for (int p = 0, attempts = 0; p < n_players && attempts < 1000; ++attempts) {
    const int bw = rng.range(spec.player_width_min, spec.player_width_max);
    const int bh = rng.range(spec.player_height_min, spec.player_height_max);
    // Integer corners keep the drawn extent equal to the annotated box.
    const int x0 = rng.range(2, spec.width - bw - 2);
    const int y0 = rng.range(2, spec.height - bh - 2);
    const std::array<double, 4> box{x0 + bw / 2.0, y0 + bh / 2.0, static_cast<double>(bw), static_cast<double>(bh)};
    bool ok = true;
    for (const auto& o : players) {
      const int di = std::abs(static_cast<int>(box[0] / 16) - static_cast<int>(o[0] / 16));
      const int dj = std::abs(static_cast<int>(box[1] / 16) - static_cast<int>(o[1] / 16));
      if (std::max(di, dj) < spec.player_cell_separation) ok = false;
    }
    if (!ok) continue;
    players.push_back(box);
    ++p;
  }

  const int n_balls = rng.range(spec.balls_min, spec.balls_max);
  std::vector<std::array<double, 3>> balls;
  std::vector<bool> occluded;
  for (int b = 0, attempts = 0; b < n_balls && attempts < 1000; ++attempts) {
    const double r = rng.uniform(spec.ball_radius_min, spec.ball_radius_max);
    const double cx = rng.uniform(r + 2, spec.width - r - 2);
    const double cy = rng.uniform(r + 2, spec.height - r - 2);
    const bool occlude = !players.empty() && rng.chance(spec.occlusion_probability);
    bool ok = true;
    bool touches = false;
    for (const auto& o : players) {
      if (overlaps(o, cx, cy, r + 2)) ok = false;
      if (overlaps(o, cx, cy, 0) == false && overlaps(o, cx, cy, r * 0.8)) touches = true;
    }
    for (const auto& o : balls) {
      if (std::hypot(cx - o[0], cy - o[1]) < r + o[2] + 8) ok = false;
    }
    if (occlude ? !touches : !ok) continue;
    balls.push_back({cx, cy, r});
    occluded.push_back(occlude);
    ++b;
  }
  // Occluded balls are drawn first so players cover them partly.
  for (std::size_t b = 0; b < balls.size(); ++b)
    if (occluded[b]) render_ball(f.image, balls[b][0], balls[b][1], balls[b][2]);
  for (const auto& p : players) render_player(f.image, p, rng);
  for (std::size_t b = 0; b < balls.size(); ++b)
    if (!occluded[b]) render_ball(f.image, balls[b][0], balls[b][1], balls[b][2]);

  // Annotations use pixel-index coordinates: pixel x spans [x, x + 1).
  for (const auto& b : balls) f.record.gt.balls.push_back({b[0] - 0.5, b[1] - 0.5});
  for (const auto& p : players) f.record.gt.players.push_back({p[0] - 0.5, p[1] - 0.5, p[2], p[3]});
  return f;
}

std::vector<AnnotationRecord> synth_generate(const SynthSpec& spec, int n, std::uint64_t seed,
                                             const std::filesystem::path& out_dir) {
  spec.validate();
  if (n <= 0) throw ConfigError("synth: frame count must be positive");
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) throw IoError("cannot create " + out_dir.string() + ": " + ec.message());
  std::vector<AnnotationRecord> records;
  for (int i = 0; i < n; ++i) {
    SynthFrame f = synth_frame(spec, seed, i);
    save_ppm(out_dir / f.record.frame, f.image);
    records.push_back(std::move(f.record));
  }
  write_annotations(out_dir / "annotations.jsonl", records);
  return records;
}

Split split_dataset(const std::vector<AnnotationRecord>& records, double fraction, SplitMode mode,
                    std::uint64_t seed) {
  if (!(fraction > 0 && fraction < 1)) throw ConfigError("split fraction must be in (0, 1)");
  const std::size_t n = records.size();
  if (n < 2) throw ConfigError("split needs at least 2 frames, got " + std::to_string(n));
  std::vector<std::vector<std::size_t>> groups;
  if (mode == SplitMode::kRandom) {
    for (std::size_t i = 0; i < n; ++i) groups.push_back({i});
  } else {
    for (std::size_t i = 0; i < n; ++i) {
      const bool joins = i > 0 && !records[i].sequence.empty() && records[i].sequence == records[i - 1].sequence;
      if (joins) {
        groups.back().push_back(i);
      } else {
        groups.push_back({i});
      }
    }
    if (groups.size() < 2) throw ConfigError("by-sequence split needs at least 2 sequences");
  }
  Rng rng(seed);
  rng.shuffle(groups.begin(), groups.end());
  const std::size_t want = std::clamp<std::size_t>(static_cast<std::size_t>(std::llround(fraction * n)), 1, n - 1);
  Split s;
  std::size_t g = 0;
  for (; g < groups.size() && s.train.size() < want; ++g) {
    s.train.insert(s.train.end(), groups[g].begin(), groups[g].end());
  }
  if (g == groups.size()) {  // keep the evaluation side non-empty
    --g;
    s.train.resize(s.train.size() - groups[g].size());
  }
  for (; g < groups.size(); ++g) s.eval.insert(s.eval.end(), groups[g].begin(), groups[g].end());
  std::sort(s.train.begin(), s.train.end());
  std::sort(s.eval.begin(), s.eval.end());
  return s;
}

}  // namespace fnb
