#include <gtest/gtest.h>

#include <cstring>
#include <fstream>

#include "mdepth/config.hpp"
#include "mdepth/io.hpp"
#include "test_util.hpp"

namespace mdepth {
namespace {

class TempDir : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("mdepth_io_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }
  fs::path dir_;
};

ImageBuffer quantized_image(Rng& rng, int h, int w, int c, int levels) {
  std::vector<double> data(static_cast<std::size_t>(h) * w * c);
  for (double& v : data) v = rng.uniform_int(0, levels) / static_cast<double>(levels);
  return ImageBuffer(h, w, c, data);
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

using Images = TempDir;

TEST_F(Images, PngRoundTrips) {
  Rng rng(1);
  for (int c : {1, 3}) {
    const ImageBuffer img8 = quantized_image(rng, 5, 7, c, 255);
    write_png(dir_ / "a.png", img8, 8);
    EXPECT_EQ(read_image(dir_ / "a.png"), img8);
    const ImageBuffer img16 = quantized_image(rng, 5, 7, c, 65535);
    write_png(dir_ / "b.png", img16, 16);
    EXPECT_EQ(read_image(dir_ / "b.png"), img16);
  }
}

TEST_F(Images, PnmRoundTrips) {
  Rng rng(2);
  const ImageBuffer rgb = quantized_image(rng, 4, 6, 3, 255);
  write_image(dir_ / "a.ppm", rgb);
  EXPECT_EQ(read_image(dir_ / "a.ppm"), rgb);
  const ImageBuffer gray = quantized_image(rng, 4, 6, 1, 255);
  write_image(dir_ / "a.pgm", gray);
  EXPECT_EQ(read_image(dir_ / "a.pgm"), gray);
}

TEST_F(Images, BadInputRejected) {
  EXPECT_THROW(read_image(dir_ / "missing.png"), InputError);
  std::ofstream(dir_ / "junk.png") << "not an image";
  EXPECT_THROW(read_image(dir_ / "junk.png"), InputError);
  EXPECT_THROW(write_png(dir_ / "x.png", ImageBuffer::filled(2, 2, 1, 0.5), 12), std::invalid_argument);
}

using FloatMaps = TempDir;

TEST_F(FloatMaps, BitExactForFloatValues) {
  Rng rng(3);
  Grid<double> g(9, 4);
  for (std::size_t i = 0; i < g.size(); ++i) g[i] = static_cast<float>(rng.uniform(-100, 100));
  g[0] = 0.0;
  write_float_map(dir_ / "d.fmap", g);
  EXPECT_EQ(read_float_map(dir_ / "d.fmap"), g);
  const std::string bytes = slurp(dir_ / "d.fmap");
  EXPECT_EQ(bytes.size(), 8u + 8u + 4u * 36u);
  EXPECT_EQ(bytes.substr(0, 8), "MDFMAP01");
  EXPECT_EQ(static_cast<unsigned char>(bytes[8]), 9u);  // little-endian height
}

TEST_F(FloatMaps, RejectsBadFiles) {
  std::ofstream(dir_ / "bad.fmap", std::ios::binary) << "MDFMAPXX12345678";
  EXPECT_THROW(read_float_map(dir_ / "bad.fmap"), InputError);
  write_float_map(dir_ / "ok.fmap", Grid<double>(3, 3, 1.0));
  fs::resize_file(dir_ / "ok.fmap", 20);
  EXPECT_THROW(read_float_map(dir_ / "ok.fmap"), InputError);
}

TEST(Json, IntrinsicsAndPoseRoundTrip) {
  const Intrinsics k = make_intrinsics(101.25, 99.5, 31.0, 23.75, 64, 48);
  const Json jk = to_json(k);
  EXPECT_EQ(jk.at("fx").get<double>(), 101.25);
  EXPECT_EQ(intrinsics_from_json(jk), k);
  PoseSE3 p;
  p.rotation = Eigen::Vector3d(0.1, -0.2, 0.3);
  p.translation = Eigen::Vector3d(1.0 / 3.0, 2, -3);
  const Json jp = to_json(p);
  EXPECT_EQ(jp.at("convention"), "target_to_support");
  const PoseSE3 q = pose_from_json(jp);
  EXPECT_EQ(q.rotation, p.rotation);
  EXPECT_EQ(q.translation, p.translation);
}

TEST(Json, StrictKeysAndConvention) {
  Json k = to_json(make_intrinsics(10, 10, 5, 5, 10, 10));
  k["skew"] = 0.0;
  EXPECT_THROW(intrinsics_from_json(k), InputError);
  Json p = to_json(PoseSE3::identity());
  p["convention"] = "support_to_target";
  EXPECT_THROW(pose_from_json(p), InputError);
  Json bad = to_json(make_intrinsics(10, 10, 5, 5, 10, 10));
  bad["cx"] = 11.0;
  EXPECT_THROW(intrinsics_from_json(bad), std::exception);
}

TEST(Json, SceneStateRoundTrip) {
  Rng rng(4);
  SceneState s = SceneState::initial(3, 5, {-2, 1}, DepthRange{0.5, 50});
  for (std::size_t i = 0; i < s.logits.size(); ++i) s.logits[i] = rng.normal();
  s.poses[1] = test::random_pose(rng, 0.1, 0.5);
  s.intrinsics_raw[2] = 0.125;
  const SceneState t = scene_state_from_json(to_json(s));
  EXPECT_EQ(t.logits, s.logits);
  EXPECT_EQ(t.offsets, s.offsets);
  EXPECT_EQ(t.poses[1].params(), s.poses[1].params());
  EXPECT_EQ(t.intrinsics_raw, s.intrinsics_raw);
  EXPECT_EQ(t.range.near, 0.5);
  EXPECT_EQ(to_json(t).dump(), to_json(s).dump());
}

TEST(Json, AugmentRecordRoundTrip) {
  Rng rng(5);
  AugmentPolicy p;
  p.flip = p.color_jitter = p.randaugment = p.cutout = p.ar_aug = 1.0;
  const AugmentRecord r = sample_policy(rng, p, 96, 128);
  EXPECT_EQ(augment_record_from_json(to_json(r)), r);
  EXPECT_EQ(augment_record_from_json(to_json(AugmentRecord{})), AugmentRecord{});
}

using JsonFiles = TempDir;

TEST_F(JsonFiles, SortedAndStable) {
  Json j;
  j["zeta"] = 1;
  j["alpha"] = {{"b", 2}, {"a", 1}};
  write_json(dir_ / "x.json", j);
  const std::string text = slurp(dir_ / "x.json");
  EXPECT_LT(text.find("alpha"), text.find("zeta"));
  EXPECT_LT(text.find("\"a\""), text.find("\"b\""));
  EXPECT_EQ(text.back(), '\n');
  EXPECT_EQ(read_json(dir_ / "x.json"), j);
  std::ofstream(dir_ / "bad.json") << "{";
  EXPECT_THROW(read_json(dir_ / "bad.json"), InputError);
}

TEST(Csv, Rfc4180Quoting) {
  EXPECT_EQ(csv_field("plain"), "plain");
  EXPECT_EQ(csv_field("a,b"), "\"a,b\"");
  EXPECT_EQ(csv_field("say \"hi\""), "\"say \"\"hi\"\"\"");
  EXPECT_EQ(csv_field("two\nlines"), "\"two\nlines\"");
  EXPECT_EQ(csv_row({"a", "b,c", ""}), "a,\"b,c\",\r\n");
}

TEST(Csv, NumbersRoundTrip) {
  Rng rng(6);
  for (int i = 0; i < 200; ++i) {
    const double v = rng.normal() * std::pow(10.0, rng.uniform_int(-20, 20));
    EXPECT_EQ(std::stod(format_number(v)), v);
  }
  EXPECT_EQ(format_number(0.5), "0.5");
  EXPECT_EQ(format_number(3.0), "3");
}

TEST(Csv, LossTraceLayout) {
  const std::vector<std::string> header = loss_trace_header(2);
  EXPECT_EQ(header.front(), "iteration");
  LossReport r;
  r.argmin_histogram = {3, 4};
  EXPECT_EQ(loss_trace_row(7, r).size(), header.size());
  EXPECT_EQ(loss_trace_row(7, r).front(), "7");
}

using Manifests = TempDir;

TEST_F(Manifests, RelativePathsAndDefaults) {
  const ImageBuffer img = ImageBuffer::filled(4, 4, 1, 0.5);
  fs::create_directories(dir_ / "frames");
  for (const char* n : {"a.png", "b.png", "c.png"}) write_png(dir_ / "frames" / n, img);
  Json m;
  m["frames"] = {"frames/a.png", "frames/b.png", "frames/c.png"};
  m["scene_id"] = "demo";
  write_json(dir_ / "manifest.json", m);
  const SequenceManifest man = read_manifest(dir_ / "manifest.json");
  EXPECT_EQ(man.frames.size(), 3u);
  EXPECT_EQ(man.target_index(), 1);
  EXPECT_EQ(man.frame_rate, 10.0);
  EXPECT_TRUE(fs::exists(man.frames[2]));
  EXPECT_EQ(to_json(man, dir_).at("frames")[0], "frames/a.png");

  m["frames"] = {"frames/a.png", "frames/missing.png"};
  write_json(dir_ / "bad.json", m);
  EXPECT_THROW(read_manifest(dir_ / "bad.json"), InputError);
  m["frames"] = {"frames/a.png"};
  write_json(dir_ / "one.json", m);
  EXPECT_THROW(read_manifest(dir_ / "one.json"), InputError);
  m["frames"] = {"frames/a.png", "frames/b.png"};
  m["fps"] = 30;
  write_json(dir_ / "typo.json", m);
  EXPECT_THROW(read_manifest(dir_ / "typo.json"), InputError);
}

TEST(Config, DefaultsMatchLibrary) {
  const AppConfig c = parse_config(Json::object());
  EXPECT_EQ(c.optimizer.iterations, OptimizerConfig{}.iterations);
  EXPECT_EQ(c.optimizer.loss.ssim_weight, 0.85);
  EXPECT_EQ(c.augment.randaugment, 0.3);
  EXPECT_EQ(c.augment.cutout, 0.3);
  EXPECT_EQ(c.augment.ar_aug, 0.7);
  EXPECT_EQ(c.eval.delta_threshold, 1.25);
  EXPECT_EQ(c.eval.fscore_threshold, 0.10);
  EXPECT_GE(c.effective_jobs(), 1);
}

TEST(Config, RoundTripsThroughJson) {
  Json j = Json::parse(R"({
    "seed": 17, "jobs": 2,
    "optimizer": {"iterations": 300, "learning_rates": {"pose": 0.002}, "pyramid_levels": 2,
                  "offset_mode": "randomized", "offset_range": [1, 2], "intrinsics_mode": "learned",
                  "depth_range": {"near": 1, "far": 100}},
    "loss": {"smoothness_weight": 0.01},
    "augment": {"flip": 0.25, "jitter": {"hue": 0.05}, "cutout_area": [0.05, 0.2]},
    "eval": {"align": "median", "max_depth": 80},
    "synthetic": {"surface": "step", "width": 64},
    "gradcheck": {"scenes": 4}
  })");
  const AppConfig c = parse_config(j);
  EXPECT_EQ(c.seed, 17u);
  EXPECT_EQ(c.optimizer.learning_rates.pose, 0.002);
  EXPECT_EQ(c.optimizer.intrinsics_mode, IntrinsicsMode::learned);
  EXPECT_EQ(c.offset_mode, OffsetMode::randomized);
  EXPECT_EQ(c.augment.jitter.hue, 0.05);
  EXPECT_EQ(c.eval.max_depth, 80.0);
  EXPECT_EQ(c.synthetic.surface, SurfaceKind::step);
  EXPECT_EQ(c.gradcheck.scenes, 4);
  EXPECT_EQ(to_json(parse_config(to_json(c))), to_json(c));
}

TEST(Config, RejectsInvalidDocuments) {
  const auto rejects = [](const char* text) {
    EXPECT_THROW(parse_config(Json::parse(text)), ConfigError) << text;
  };
  rejects(R"({"optimizer": {"iterations": 0}})");
  rejects(R"({"optimizer": {"iteratons": 10}})");
  rejects(R"({"optimiser": {}})");
  rejects(R"({"optimizer": {"intrinsics_mode": "auto"}})");
  rejects(R"({"optimizer": {"iterations": "many"}})");
  rejects(R"({"augment": {"cutout": 1.5}})");
  rejects(R"({"augment": {"jitter": {"gamma": 0.1}}})");
  rejects(R"({"eval": {"max_depth": "far"}})");
  rejects(R"({"loss": {"ssim_weight": 2}})");
  rejects(R"({"jobs": -1})");
  try {
    parse_config(Json::parse(R"({"optimizer": {"learning_rates": {"depth": 1}}})"));
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("learning_rates"), std::string::npos) << e.what();
  }
}

}  // namespace
}  // namespace mdepth
