#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>

#include "footandball/dataset.hpp"
#include "test_util.hpp"

using namespace fnb;
using fnb::test::TempDir;

namespace {

void write_text(const std::filesystem::path& p, const std::string& s) {
  std::ofstream f(p, std::ios::binary);
  f << s;
}

std::vector<std::uint8_t> ppm_bytes(const std::string& header, std::size_t pixels) {
  std::vector<std::uint8_t> b(header.begin(), header.end());
  for (std::size_t i = 0; i < pixels; ++i) b.push_back(static_cast<std::uint8_t>(i * 37));
  return b;
}

}  // namespace

TEST(Ppm, RoundTripOfEightBitValuesIsExact) {
  Rng rng(400);
  Image im(7, 5);
  for (auto& v : im.data) v = rng.range(0, 255) / 255.0f;
  const Image back = decode_ppm(encode_ppm(im), "mem");
  EXPECT_EQ(back, im);
}

TEST(Ppm, ClampsOutOfRangeValues) {
  Image im(2, 1);
  im.at(0, 0, 0) = -0.5f;
  im.at(1, 0, 1) = 1.7f;
  const Image back = decode_ppm(encode_ppm(im), "mem");
  EXPECT_EQ(back.at(0, 0, 0), 0.0f);
  EXPECT_EQ(back.at(1, 0, 1), 1.0f);
}

TEST(Ppm, HeaderCommentsAreSkipped) {
  const auto b = ppm_bytes("P6\n# made by hand\n2 1\n255\n", 6);
  const Image im = decode_ppm(b, "c.ppm");
  EXPECT_EQ(im.width, 2);
  EXPECT_EQ(im.height, 1);
  EXPECT_NEAR(im.at(0, 0, 1), 111 / 255.0f, 1e-7);
}

TEST(Ppm, MalformedInputsAreFormatErrors) {
  EXPECT_THROW(decode_ppm(ppm_bytes("P3\n2 1\n255\n", 6), "a"), FormatError);
  EXPECT_THROW(decode_ppm(ppm_bytes("P6\n2 1\n65535\n", 12), "a"), FormatError);
  EXPECT_THROW(decode_ppm(ppm_bytes("P6\n2 1\n255\n", 5), "a"), FormatError);
  EXPECT_THROW(decode_ppm(ppm_bytes("P6\n2", 0), "a"), FormatError);
  EXPECT_THROW(decode_ppm(ppm_bytes("P6\n0 1\n255\n", 0), "a"), FormatError);
  try {
    decode_ppm(ppm_bytes("P6\n2 2\n255\n", 3), "short.ppm");
    FAIL();
  } catch (const FormatError& e) {
    EXPECT_NE(std::string(e.what()).find("short.ppm"), std::string::npos);
  }
}

TEST(LoadImage, UnsupportedFormatListsSupportedOnes) {
  TempDir dir("img");
  write_text(dir / "x.jpg", "not an image");
  try {
    load_image(dir / "x.jpg");
    FAIL();
  } catch (const FormatError& e) {
    EXPECT_NE(std::string(e.what()).find(supported_image_formats()), std::string::npos);
  }
  EXPECT_THROW(load_image(dir / "missing.ppm"), IoError);
}

TEST(PadImage, ZeroPadsRightAndBottom) {
  Image im(33, 10, 0.5f);
  const Image p = pad_image(im, 32);
  EXPECT_EQ(p.width, 64);
  EXPECT_EQ(p.height, 32);
  EXPECT_EQ(p.at(2, 9, 32), 0.5f);
  EXPECT_EQ(p.at(2, 9, 33), 0.0f);
  EXPECT_EQ(p.at(0, 10, 0), 0.0f);
  EXPECT_EQ(pad_image(Image(64, 32), 32).width, 64);
}

TEST(ToTensor, StacksPlanarImages) {
  Image a(2, 2, 0.25f), b(2, 2, 0.75f);
  const auto t = to_tensor<float>({&a, &b});
  EXPECT_EQ(t.shape(), (Shape{2, 3, 2, 2}));
  EXPECT_EQ(t.at(1, 2, 1, 1), 0.75f);
  Image c(3, 2);
  EXPECT_THROW(to_tensor<float>({&a, &c}), ShapeError);
}

TEST(Annotations, ParseAndFormatRoundTrip) {
  const auto r = parse_annotation(R"({"frame":"a.ppm","sequence":"s1","balls":[[1.5,2]],"players":[[10,20,5,8]]})", "t");
  EXPECT_EQ(r.frame, "a.ppm");
  EXPECT_EQ(r.sequence, "s1");
  ASSERT_EQ(r.gt.balls.size(), 1u);
  EXPECT_DOUBLE_EQ(r.gt.balls[0][0], 1.5);
  EXPECT_DOUBLE_EQ(r.gt.players[0][3], 8);
  EXPECT_EQ(parse_annotation(format_annotation(r), "t"), r);
  const auto e = parse_annotation(R"({"frame":"b.ppm"})", "t");
  EXPECT_TRUE(e.gt.balls.empty());
  EXPECT_TRUE(e.gt.players.empty());
}

TEST(Annotations, UnknownFieldWarnsMalformedThrows) {
  std::vector<std::string> warnings;
  parse_annotation(R"({"frame":"a.ppm","extra":1})", "f:3", [&](const std::string& w) { warnings.push_back(w); });
  ASSERT_EQ(warnings.size(), 1u);
  EXPECT_NE(warnings[0].find("extra"), std::string::npos);
  EXPECT_THROW(parse_annotation(R"({"frame":"a.ppm","balls":[[1]]})", "t"), FormatError);
  EXPECT_THROW(parse_annotation(R"({"frame":"a.ppm","balls":[["x",1]]})", "t"), FormatError);
  EXPECT_THROW(parse_annotation(R"({"balls":[]})", "t"), FormatError);
  EXPECT_THROW(parse_annotation("[1,2]", "t"), FormatError);
}

TEST(Annotations, FileErrorsCarryLineNumbers) {
  TempDir dir("ann");
  write_text(dir / "a.jsonl", "{\"frame\":\"a.ppm\"}\n\n{\"frame\":\"b.ppm\"\n");
  try {
    load_annotations(dir / "a.jsonl");
    FAIL();
  } catch (const FormatError& e) {
    EXPECT_NE(std::string(e.what()).find("a.jsonl:3"), std::string::npos) << e.what();
  }
  EXPECT_THROW(load_annotations(dir / "none.jsonl"), IoError);
}

TEST(LoadDataset, BoundsPolicyClipOrDrop) {
  TempDir dir("ds");
  save_ppm(dir / "f.ppm", Image(32, 16));
  write_text(dir / "a.jsonl",
             R"({"frame":"f.ppm","balls":[[5,5],[40,3]],"players":[[10,8,4,4],[10,30,4,4],[5,5,0,3]]})"
             "\n");
  std::vector<std::string> warnings;
  auto warn = [&](const std::string& w) { warnings.push_back(w); };
  const Dataset d = load_dataset(dir / "a.jsonl", BoundsPolicy::kDrop, warn);
  EXPECT_EQ(d.records[0].gt.balls.size(), 1u);
  EXPECT_EQ(d.records[0].gt.players.size(), 1u);
  EXPECT_EQ(warnings.size(), 3u);
  const Dataset c = load_dataset(dir / "a.jsonl", BoundsPolicy::kClip);
  ASSERT_EQ(c.records[0].gt.balls.size(), 2u);
  EXPECT_DOUBLE_EQ(c.records[0].gt.balls[1][0], 31);
  ASSERT_EQ(c.records[0].gt.players.size(), 2u);
  EXPECT_DOUBLE_EQ(c.records[0].gt.players[1][1], 15);
}

TEST(LoadDataset, MissingImageIsAnIoError) {
  TempDir dir("ds_missing");
  write_text(dir / "a.jsonl", R"({"frame":"nope.ppm"})" "\n");
  EXPECT_THROW(load_dataset(dir / "a.jsonl"), IoError);
}

TEST(Synth, DeterministicPerSeedAndIndex) {
  SynthSpec spec;
  const auto a = synth_frame(spec, 3, 5);
  const auto b = synth_frame(spec, 3, 5);
  const auto c = synth_frame(spec, 4, 5);
  EXPECT_EQ(a.image, b.image);
  EXPECT_EQ(a.record, b.record);
  EXPECT_FALSE(a.image == c.image);
  EXPECT_EQ(a.record.frame, "frame_00005.ppm");
}

TEST(Synth, RespectsCountsSizesAndSeparation) {
  SynthSpec spec;
  for (int i = 0; i < 40; ++i) {
    const auto f = synth_frame(spec, 9, i);
    const auto& gt = f.record.gt;
    EXPECT_EQ(gt.balls.size(), 1u);
    EXPECT_GE(gt.players.size(), 2u);
    EXPECT_LE(gt.players.size(), 4u);
    for (std::size_t p = 0; p < gt.players.size(); ++p) {
      EXPECT_GE(gt.players[p][2], 10);
      EXPECT_LE(gt.players[p][3], 44);
      for (std::size_t q = 0; q < p; ++q) {
        const int di = std::abs(int((gt.players[p][0] + 0.5) / 16) - int((gt.players[q][0] + 0.5) / 16));
        const int dj = std::abs(int((gt.players[p][1] + 0.5) / 16) - int((gt.players[q][1] + 0.5) / 16));
        EXPECT_GE(std::max(di, dj), 2);
      }
    }
  }
}

TEST(Synth, BallAnnotationIsTheRenderedCentroid) {
  SynthSpec spec;
  for (int i = 0; i < 20; ++i) {
    const auto f = synth_frame(spec, 21, i);
    const auto& b = f.record.gt.balls[0];
    double sw = 0, sx = 0, sy = 0;
    for (int y = int(b[1]) - 12; y <= int(b[1]) + 12; ++y)
      for (int x = int(b[0]) - 12; x <= int(b[0]) + 12; ++x) {
        if (x < 0 || y < 0 || x >= f.image.width || y >= f.image.height) continue;
        const float m = std::min({f.image.at(0, y, x), f.image.at(1, y, x), f.image.at(2, y, x)});
        if (m < 0.55f) continue;  // white ball pixels only
        sw += m;
        sx += m * x;
        sy += m * y;
      }
    ASSERT_GT(sw, 0);
    EXPECT_NEAR(sx / sw, b[0], 0.3) << "frame " << i;
    EXPECT_NEAR(sy / sw, b[1], 0.3) << "frame " << i;
  }
}

TEST(Synth, PlayerBoxMatchesDrawnExtent) {
  SynthSpec spec;
  const auto f = synth_frame(spec, 22, 0);
  const auto& p = f.record.gt.players[0];
  // annotated box in pixel-index coordinates: columns [cx - bw/2 + 0.5, cx + bw/2 - 0.5]
  const int x0 = static_cast<int>(std::lround(p[0] + 0.5 - p[2] / 2));
  const int y0 = static_cast<int>(std::lround(p[1] + 0.5 - p[3] / 2));
  const int y1 = y0 + static_cast<int>(p[3]) - 1;
  // head at the top row, legs reach the bottom row, nothing drawn just outside
  auto non_grass = [&](int x, int y) { return f.image.at(0, y, x) > 0.3f || f.image.at(2, y, x) > 0.3f; };
  bool top = false, bottom = false, above = false;
  for (int x = x0; x < x0 + static_cast<int>(p[2]); ++x) {
    top |= non_grass(x, y0);
    bottom |= non_grass(x, y1);
    above |= non_grass(x, y0 - 1);
  }
  EXPECT_TRUE(top);
  EXPECT_TRUE(bottom);
  EXPECT_FALSE(above);
}

TEST(Synth, GenerateWritesLoadableDataset) {
  TempDir dir("synth");
  SynthSpec spec;
  spec.width = 96;
  spec.height = 64;
  spec.sequence_length = 2;
  const auto recs = synth_generate(spec, 3, 1, dir.path());
  const Dataset d = load_dataset(dir / "annotations.jsonl");
  ASSERT_EQ(d.size(), 3u);
  EXPECT_EQ(d.records[2].sequence, "seq1");
  EXPECT_EQ(d.images[0], decode_ppm(encode_ppm(synth_frame(spec, 1, 0).image), "mem"));  // 8-bit storage
  EXPECT_EQ(d.records, recs);
}

TEST(Synth, InvalidSpecIsAConfigError) {
  SynthSpec s;
  s.players_min = 5;
  EXPECT_THROW(s.validate(), ConfigError);
  s = SynthSpec{};
  s.width = 16;
  EXPECT_THROW(s.validate(), ConfigError);
}

TEST(Split, RandomIsDisjointExhaustiveAndSized) {
  std::vector<AnnotationRecord> recs(23);
  for (double frac : {0.1, 0.3, 0.5, 0.8, 0.95}) {
    const Split s = split_dataset(recs, frac, SplitMode::kRandom, 7);
    std::set<std::size_t> all(s.train.begin(), s.train.end());
    for (auto e : s.eval) EXPECT_TRUE(all.insert(e).second);
    EXPECT_EQ(all.size(), 23u);
    EXPECT_EQ(s.train.size(), static_cast<std::size_t>(std::lround(frac * 23)));
  }
  EXPECT_EQ(split_dataset(recs, 0.5, SplitMode::kRandom, 7).train, split_dataset(recs, 0.5, SplitMode::kRandom, 7).train);
  EXPECT_NE(split_dataset(recs, 0.5, SplitMode::kRandom, 7).train, split_dataset(recs, 0.5, SplitMode::kRandom, 8).train);
  for (double bad : {0.0, 1.0, 1.5}) EXPECT_THROW(split_dataset(recs, bad, SplitMode::kRandom, 7), ConfigError);
}

TEST(Split, BySequenceKeepsGroupsTogether) {
  std::vector<AnnotationRecord> recs(20);
  for (int i = 0; i < 20; ++i) recs[i].sequence = "s" + std::to_string(i / 4);
  const Split s = split_dataset(recs, 0.5, SplitMode::kBySequence, 3);
  std::set<std::string> train_seqs, eval_seqs;
  for (auto i : s.train) train_seqs.insert(recs[i].sequence);
  for (auto i : s.eval) eval_seqs.insert(recs[i].sequence);
  for (const auto& q : train_seqs) EXPECT_EQ(eval_seqs.count(q), 0u);
  EXPECT_EQ(s.train.size() + s.eval.size(), 20u);
  EXPECT_EQ(s.train.size() % 4, 0u);
}
