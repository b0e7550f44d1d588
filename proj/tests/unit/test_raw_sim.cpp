#include <gtest/gtest.h>

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "dcam/classical_isp.hpp"
#include "dcam/dataset.hpp"
#include "dcam/error.hpp"
#include "dcam/image_io.hpp"
#include "dcam/raw_io.hpp"
#include "dcam/raw_sim.hpp"
#include "dcam/scenes.hpp"
#include "test_util.hpp"

namespace dcam {
namespace {

using test::constant_image;
using test::random_image;

double measured_snr(const Image& noisy, const Image& clean) {
  double s = 0.0, e = 0.0;
  for (std::size_t i = 0; i < clean.data().size(); ++i) {
    const double r = clean.data()[i];
    const double d = noisy.data()[i] - r;
    s += r * r;
    e += d * d;
  }
  return 10.0 * std::log10(s / e);
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream f(p, std::ios::binary);
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

TEST(Exposure, ScalesAndClips) {
  const Image img = constant_image(4, 4, ColorState::LinearDevice, 0.25f, 0.6f, 0.1f);
  const Image a = apply_exposure(img, 2.0);
  EXPECT_FLOAT_EQ(a.at(0, 0, 0), 0.5f);
  EXPECT_FLOAT_EQ(a.at(1, 0, 0), 1.0f);
  EXPECT_FLOAT_EQ(a.at(2, 0, 0), 0.2f);
  EXPECT_THROW(apply_exposure(img, 0.0), InvalidArgumentError);
  EXPECT_THROW(apply_exposure(random_image(2, 2, ColorState::GammaSRGB, 1), 1.0), StateMismatchError);
}

TEST(Exposure, MonotoneInGain) {
  const Image img = random_image(16, 16, ColorState::LinearDevice, 5);
  const Image lo = apply_exposure(img, 0.7);
  const Image hi = apply_exposure(img, 1.6);
  for (std::size_t i = 0; i < img.data().size(); ++i) EXPECT_LE(lo.data()[i], hi.data()[i]);
}

TEST(ShotNoise, SigmaFromSnr) {
  EXPECT_NEAR(shot_noise_sigma(25.0), 0.056234, 1e-6);
  EXPECT_NEAR(shot_noise_sigma(30.0), 0.031623, 1e-6);
}

TEST(ShotNoise, MeasuredSnrMatchesTarget) {
  const Image clean = constant_image(256, 256, ColorState::LinearDevice, 0.5f, 0.5f, 0.5f);
  for (double target : {25.0, 30.0}) {
    const Image noisy = add_shot_noise(clean, target, 17);
    EXPECT_NEAR(measured_snr(noisy, clean), target, 0.3) << target;
  }
}

TEST(ShotNoise, DeterministicAndInfiniteIsIdentity) {
  const Image clean = random_image(32, 32, ColorState::LinearDevice, 3, 0.1f, 0.9f);
  EXPECT_EQ(add_shot_noise(clean, 25.0, 5), add_shot_noise(clean, 25.0, 5));
  EXPECT_NE(add_shot_noise(clean, 25.0, 5), add_shot_noise(clean, 25.0, 6));
  EXPECT_EQ(add_shot_noise(clean, std::numeric_limits<double>::infinity(), 5), clean);
}

TEST(Fpn, ZeroAmplitudeIsZeroAndFieldIsReproducible) {
  FpnParams off{};
  off.row_amp = off.col_amp = off.gauss_sigma = 0.0;
  for (float v : make_fpn_field(24, 16, off).data) EXPECT_EQ(v, 0.0f);
  FpnParams p{};
  p.seed = 9;
  EXPECT_EQ(make_fpn_field(24, 16, p), make_fpn_field(24, 16, p));
}

TEST(Fpn, RowComponentFollowsSinusoid) {
  FpnParams p{};
  p.col_amp = 0.0;
  p.gauss_sigma = 0.0;
  p.row_amp = 0.01;
  const Plane f = make_fpn_field(8, 64, p);
  for (int y = 0; y < 64; ++y) {
    EXPECT_NEAR(f.at(y, 0), 0.01 * std::sin(2 * M_PI * p.row_freq * y), 1e-6);
    EXPECT_EQ(f.at(y, 0), f.at(y, 7));
  }
}

TEST(Fpn, SharedAcrossFramesOfOneSensor) {
  SimMeta meta;
  meta.fpn = FpnParams{};
  meta.fpn->seed = 4;
  meta.fpn->row_amp = meta.fpn->col_amp = 0.02;
  const Image a = constant_image(32, 32, ColorState::GammaSRGB, 0.5f, 0.5f, 0.5f);
  const auto r1 = simulate_raw(a, meta, CfaPattern::bayer_rggb());
  const auto r2 = simulate_raw(a, meta, CfaPattern::bayer_rggb());
  EXPECT_EQ(r1.raw, r2.raw);
}

TEST(Mosaic, SamplesCfaChannel) {
  const Image img = random_image(6, 6, ColorState::LinearDevice, 2);
  for (const auto& cfa : {CfaPattern::bayer_rggb(), CfaPattern::xtrans()}) {
    const RawFrame raw = mosaic(img, cfa);
    for (int y = 0; y < 6; ++y) {
      for (int x = 0; x < 6; ++x) EXPECT_EQ(raw.at(y, x), img.at(cfa.channel_at(y, x), y, x));
    }
  }
  EXPECT_THROW(mosaic(random_image(5, 6, ColorState::LinearDevice, 1), CfaPattern::bayer_rggb()), ShapeError);
  EXPECT_THROW(mosaic(random_image(8, 8, ColorState::LinearDevice, 1), CfaPattern::xtrans()), ShapeError);
}

TEST(Mosaic, AchromaticRoundTripThroughDemosaic) {
  Image img(8, 8, ColorState::LinearDevice);
  Rng rng(3);
  for (int y = 0; y < 8; ++y) {
    for (int x = 0; x < 8; ++x) {
      const float v = static_cast<float>(rng.uniform());
      for (int c = 0; c < 3; ++c) img.at(c, y, x) = v;
    }
  }
  const RawFrame raw = mosaic(img, CfaPattern::bayer_rggb());
  const RawFrame again = mosaic(demosaic_bilinear(raw), CfaPattern::bayer_rggb());
  EXPECT_TRUE(std::equal(raw.mosaic().begin(), raw.mosaic().end(), again.mosaic().begin()));
}

TEST(Defects, CountIsRoundedFraction) {
  EXPECT_EQ(defect_count(1e-4, 240 * 220), 5u);
  EXPECT_EQ(defect_count(1e-4, 64 * 64), 0u);
  EXPECT_EQ(defect_count(0.5, 3), 2u);  // 1.5 rounds up
}

TEST(Defects, AltersExactlyTheRecordedSites) {
  RawFrame raw = mosaic(random_image(240, 220, ColorState::LinearDevice, 8), CfaPattern::bayer_rggb());
  // Clip some sites to the rails so stuck values could coincide with them.
  for (std::size_t i = 0; i < raw.size(); i += 7) raw.mosaic()[i] = (i % 2) ? 1.0f : 0.0f;
  const RawFrame bad = inject_defects(raw, 1e-4, 21);
  ASSERT_EQ(bad.meta.defects.size(), 5u);
  std::size_t changed = 0;
  for (std::size_t i = 0; i < raw.size(); ++i) changed += raw.mosaic()[i] != bad.mosaic()[i];
  EXPECT_EQ(changed, 5u);
  std::set<std::uint32_t> sites;
  for (const auto& d : bad.meta.defects) {
    sites.insert(d.index);
    EXPECT_TRUE(d.value == 0.0f || d.value == 1.0f);
    EXPECT_EQ(bad.mosaic()[d.index], d.value);
  }
  EXPECT_EQ(sites.size(), 5u);
  EXPECT_EQ(inject_defects(raw, 1e-4, 21), bad);
  EXPECT_THROW(inject_defects(raw, 1.5, 1), InvalidArgumentError);
}

TEST(Simulate, DegeneratePipelineIsMosaicOfDegamma) {
  const Image clean = random_image(16, 12, ColorState::GammaSRGB, 12);
  const auto res = simulate_raw(clean, SimMeta{}, CfaPattern::bayer_rggb());
  const RawFrame expected = mosaic(srgb_degamma(clean).with_state(ColorState::LinearDevice), CfaPattern::bayer_rggb());
  for (std::size_t i = 0; i < expected.size(); ++i) EXPECT_FLOAT_EQ(res.raw.mosaic()[i], expected.mosaic()[i]);
  for (std::size_t i = 0; i < clean.data().size(); ++i) EXPECT_NEAR(res.ground_truth.data()[i], clean.data()[i], 1e-6);
}

TEST(Simulate, ExposureIsLinear) {
  const Image clean = random_image(16, 12, ColorState::GammaSRGB, 13);
  SimMeta half;
  half.exposure_gain = 0.5;
  const auto a = simulate_raw(clean, SimMeta{}, CfaPattern::bayer_rggb());
  const auto b = simulate_raw(clean, half, CfaPattern::bayer_rggb());
  for (std::size_t i = 0; i < a.raw.size(); ++i) EXPECT_NEAR(b.raw.mosaic()[i], 0.5f * a.raw.mosaic()[i], 1e-7);
}

SimMeta full_meta() {
  SimMeta m;
  m.illuminant = Illuminant(1.2, 1.0, 0.8);
  m.device_matrix = default_device_matrix();
  m.exposure_gain = 2.0;
  m.shot_snr_db = 25.0;
  m.noise_seed = 77;
  m.fpn = FpnParams{};
  m.fpn->seed = 78;
  m.defect_seed = 79;
  m.defect_fraction = 1e-3;
  return m;
}

TEST(Simulate, FullPipelineIsBitIdenticalOnRerun) {
  const Image clean = generate_scene(48, 48, 5, SceneKind::Textured);
  const auto a = simulate_raw(clean, full_meta(), CfaPattern::bayer_rggb());
  const auto b = simulate_raw(clean, full_meta(), CfaPattern::bayer_rggb());
  EXPECT_EQ(a.raw, b.raw);
  EXPECT_EQ(a.ground_truth, b.ground_truth);
  for (float v : a.raw.mosaic()) {
    EXPECT_GE(v, 0.0f);
    EXPECT_LE(v, 1.0f);
  }
}

TEST(RawIo, RoundTripPreservesMetadataAndQuantizedSamples) {
  test::TempDir dir("rawio");
  const auto res = simulate_raw(generate_scene(24, 24, 2, SceneKind::Smooth), full_meta(), CfaPattern::xtrans());
  const auto sidecar = write_raw(dir.path() / "frame", res.raw);
  const RawFrame back = read_raw(sidecar);
  EXPECT_EQ(back.cfa(), res.raw.cfa());
  EXPECT_EQ(back.meta, res.raw.meta);
  for (std::size_t i = 0; i < back.size(); ++i) EXPECT_NEAR(back.mosaic()[i], res.raw.mosaic()[i], 0.5 / 65535 + 1e-7);
  // Re-reading is exact.
  write_raw(dir.path() / "again", back);
  EXPECT_EQ(read_raw(dir.path() / "again.json"), back);
}

TEST(Scenes, PureFunctionOfArguments) {
  EXPECT_EQ(generate_scene(32, 16, 1, SceneKind::Smooth), generate_scene(32, 16, 1, SceneKind::Smooth));
  EXPECT_NE(generate_scene(32, 16, 1, SceneKind::Smooth), generate_scene(32, 16, 2, SceneKind::Smooth));
  const Image s = generate_scene(32, 16, 1, SceneKind::Textured);
  EXPECT_EQ(s.state(), ColorState::GammaSRGB);
  for (float v : s.data()) {
    EXPECT_GE(v, 0.0f);
    EXPECT_LE(v, 1.0f);
  }
}

TEST(Dataset, SplitArithmetic) {
  EXPECT_EQ(split_counts(1700, {15, 1, 1}), (std::array<std::size_t, 3>{1500, 100, 100}));
  EXPECT_EQ(split_counts(288, {200, 48, 40}), (std::array<std::size_t, 3>{200, 48, 40}));
}

TEST(Dataset, OneSourceFourCropsGivesTwentyFourFrames) {
  test::TempDir dir("dataset");
  write_scene_corpus(dir.path() / "src", 1, 96, 96, 3, SceneKind::Smooth);
  DatasetConfig cfg;
  cfg.crop_width = 32;
  cfg.crop_height = 32;
  cfg.seed = 5;
  const auto res = build_dataset(dir.path() / "src", dir.path() / "out", cfg);
  EXPECT_EQ(res.manifest.entries.size(), 24u);
  const Manifest loaded = load_manifest(res.manifest_path);
  EXPECT_EQ(loaded.entries, res.manifest.entries);
  const auto first = slurp(res.manifest_path);
  const auto again = build_dataset(dir.path() / "src", dir.path() / "out2", cfg);
  EXPECT_EQ(slurp(again.manifest_path), first);
  auto samples = [](const ManifestEntry& e) { return slurp(std::filesystem::path(e.raw_path).replace_extension(".raw16")); };
  EXPECT_EQ(samples(res.manifest.entries[3]), samples(again.manifest.entries[3]));
}

TEST(Dataset, EmptySourceIsAnErrorUnreadableIsAWarning) {
  test::TempDir dir("dataset_bad");
  std::filesystem::create_directories(dir.path() / "src");
  EXPECT_THROW(build_dataset(dir.path() / "src", dir.path() / "out", DatasetConfig{}), InvalidArgumentError);
  std::ofstream(dir.path() / "src" / "broken.ppm") << "not an image";
  write_scene_corpus(dir.path() / "src", 1, 64, 64, 1, SceneKind::Smooth);
  DatasetConfig cfg;
  cfg.crop_width = cfg.crop_height = 32;
  cfg.crops = 1;
  const auto res = build_dataset(dir.path() / "src", dir.path() / "out", cfg);
  EXPECT_EQ(res.warnings.size(), 1u);
  EXPECT_EQ(res.manifest.entries.size(), 6u);
}

}  // namespace
}  // namespace dcam
