#pragma once

// Frames, annotations, the synthetic scene generator and dataset splits.
//
// Annotation file: one JSON object per line,
//   {"frame": "img_0001.ppm", "balls": [[x, y]], "players": [[cx, cy, bw, bh]]}
// in pixels with the origin at the top-left corner. An optional "sequence"
// string groups frames for by-sequence splitting. Frame paths are relative to
// the annotation file's directory.

#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "footandball/loss.hpp"
#include "footandball/tensor.hpp"

namespace fnb {

/// Planar RGB image with values in [0, 1].
struct Image {
  int width = 0;
  int height = 0;
  std::vector<float> data;  // 3 * height * width

  Image() = default;
  Image(int w, int h, float fill = 0.0f)
      : width(w), height(h), data(static_cast<std::size_t>(3) * w * h, fill) {}

  float& at(int c, int y, int x) { return data[(static_cast<std::size_t>(c) * height + y) * width + x]; }
  float at(int c, int y, int x) const { return data[(static_cast<std::size_t>(c) * height + y) * width + x]; }
  bool operator==(const Image&) const = default;
};

/// Binary PPM (P6, maxval 255).
Image decode_ppm(const std::vector<std::uint8_t>& bytes, const std::string& name);
/// Values are clamped to [0, 1] and rounded to 8 bits.
std::vector<std::uint8_t> encode_ppm(const Image& image);
void save_ppm(const std::filesystem::path& path, const Image& image);

/// PPM always; PNG when built with FNB_WITH_PNG. Unsupported formats raise a
/// FormatError listing the supported ones.
Image load_image(const std::filesystem::path& path);
std::string supported_image_formats();

/// Zero-pads on the right and bottom up to the next multiple of `multiple`.
Image pad_image(const Image& image, int multiple);

/// Stacks equally sized images into an (n, 3, h, w) tensor.
template <typename T>
Tensor<T> to_tensor(const std::vector<const Image*>& images);

struct AnnotationRecord {
  std::string frame;
  std::string sequence;  // empty when absent
  GroundTruthFrame gt;

  bool operator==(const AnnotationRecord&) const = default;
};

using WarningSink = std::function<void(const std::string&)>;

/// Parses one annotation line; `where` prefixes error messages.
AnnotationRecord parse_annotation(const std::string& line, const std::string& where,
                                  const WarningSink& warn = {});
std::string format_annotation(const AnnotationRecord& record);

std::vector<AnnotationRecord> load_annotations(const std::filesystem::path& path,
                                               const WarningSink& warn = {});
void write_annotations(const std::filesystem::path& path, const std::vector<AnnotationRecord>& records);

enum class BoundsPolicy { kClip, kDrop };

struct Dataset {
  std::filesystem::path root;
  std::vector<AnnotationRecord> records;
  std::vector<Image> images;

  std::size_t size() const { return records.size(); }
};

/// Loads the annotation file and every referenced image, then validates the
/// annotations against the image bounds. Balls outside the frame and players
/// whose center is outside (or whose size is not positive) are clipped or
/// dropped per `policy`, with a warning.
Dataset load_dataset(const std::filesystem::path& annotations, BoundsPolicy policy = BoundsPolicy::kDrop,
                     const WarningSink& warn = {});

/// Subset of a dataset by frame index.
Dataset subset(const Dataset& ds, const std::vector<std::size_t>& indices);

struct SynthSpec {
  int width = 256;
  int height = 256;
  double ball_radius_min = 4;
  double ball_radius_max = 10;
  int balls_min = 1;
  int balls_max = 1;
  int players_min = 2;
  int players_max = 4;
  int player_width_min = 10;
  int player_width_max = 20;
  int player_height_min = 24;
  int player_height_max = 44;
  /// Minimum Chebyshev distance between player-grid cells of two players.
  int player_cell_separation = 2;
  double occlusion_probability = 0.0;
  /// Frames per sequence; 0 leaves the "sequence" field out.
  int sequence_length = 0;

  void validate() const;
};

struct SynthFrame {
  Image image;
  AnnotationRecord record;
};

/// Renders frame `index` of the dataset for `seed`.
SynthFrame synth_frame(const SynthSpec& spec, std::uint64_t seed, int index);

/// Writes frame_NNNNN.ppm files and annotations.jsonl into out_dir.
std::vector<AnnotationRecord> synth_generate(const SynthSpec& spec, int n, std::uint64_t seed,
                                             const std::filesystem::path& out_dir);

enum class SplitMode { kRandom, kBySequence };

struct Split {
  std::vector<std::size_t> train;
  std::vector<std::size_t> eval;
};

/// Disjoint, exhaustive split with round(fraction * n) training frames
/// (random) or whole sequences until the fraction is reached (by-sequence).
/// Consecutive frames sharing a "sequence" value form one group; frames
/// without one are their own group.
Split split_dataset(const std::vector<AnnotationRecord>& records, double fraction, SplitMode mode,
                    std::uint64_t seed);

}  // namespace fnb
