#include <gtest/gtest.h>

#include <cmath>

#include "dcam/classical_isp.hpp"
#include "dcam/error.hpp"
#include "dcam/eval.hpp"
#include "dcam/filters.hpp"
#include "dcam/scenes.hpp"
#include "test_util.hpp"

namespace dcam {
namespace {

using test::constant_image;
using test::random_image;

double angle_deg(const Illuminant& a, const Vec3& b) {
  const auto& e = a.rgb();
  const double nb = std::sqrt(b[0] * b[0] + b[1] * b[1] + b[2] * b[2]);
  double d = (e[0] * b[0] + e[1] * b[1] + e[2] * b[2]) / nb;
  return std::acos(std::min(1.0, d)) * 180.0 / M_PI;
}

RawFrame constant_raw(int w, int h, float v, const CfaPattern& cfa = CfaPattern::bayer_rggb()) {
  RawFrame raw(w, h, cfa);
  for (float& s : raw.mosaic()) s = v;
  return raw;
}

TEST(DefectCorrection, CleanSmoothFrameUnchanged) {
  const Image scene = srgb_degamma(generate_scene(64, 64, 2, SceneKind::Smooth)).with_state(ColorState::LinearDevice);
  const RawFrame raw = mosaic(scene, CfaPattern::bayer_rggb());
  EXPECT_TRUE(detect_defects(raw).empty());
  EXPECT_EQ(correct_defects(raw), raw);
}

TEST(DefectCorrection, StuckPixelReplacedByNeighbourhood) {
  RawFrame raw = constant_raw(16, 16, 0.2f);
  raw.at(7, 6) = 1.0f;
  const auto flagged = detect_defects(raw);
  ASSERT_EQ(flagged.size(), 1u);
  EXPECT_EQ(flagged[0], 7u * 16u + 6u);
  EXPECT_FLOAT_EQ(correct_defects(raw).at(7, 6), 0.2f);
}

TEST(Wiener, ZeroNoiseIsIdentityAndConstantUnchanged) {
  RawFrame raw(12, 10, CfaPattern::bayer_rggb());
  Rng rng(4);
  for (float& v : raw.mosaic()) v = static_cast<float>(rng.uniform());
  EXPECT_EQ(wiener_denoise(raw, 5, 0.0), raw);
  const RawFrame flat = constant_raw(12, 10, 0.3f);
  EXPECT_EQ(wiener_denoise(flat, 5, 0.01), flat);
  EXPECT_EQ(wiener_denoise(flat), flat);
  EXPECT_THROW(wiener_denoise(raw, 4), InvalidArgumentError);
}

TEST(Wiener, HandComputedWindow) {
  // Red site (4,4): its 5x5 same-channel neighbourhood is the 3x3 grid of
  // red sites at offsets {-2,0,2}.
  RawFrame raw = constant_raw(10, 10, 0.5f);
  const float vals[9] = {0.1f, 0.2f, 0.3f, 0.4f, 0.9f, 0.6f, 0.7f, 0.8f, 0.5f};
  int k = 0;
  for (int dy : {-2, 0, 2}) {
    for (int dx : {-2, 0, 2}) raw.at(4 + dy, 4 + dx) = vals[k++];
  }
  double mu = 0;
  for (float v : vals) mu += v;
  mu /= 9;
  double var = 0;
  for (float v : vals) var += (v - mu) * (v - mu);
  var /= 9;
  const double nv = 0.02;
  const double expected = mu + (var - nv) / var * (0.9 - mu);
  EXPECT_NEAR(wiener_denoise(raw, 5, nv).at(4, 4), expected, 1e-6);
  // Noise above the local variance collapses to the local mean.
  EXPECT_NEAR(wiener_denoise(raw, 5, 1.0).at(4, 4), mu, 1e-6);
}

TEST(Minkowski, ConstantImageAnyP) {
  const Image img = constant_image(8, 8, ColorState::LinearDevice, 0.4f, 0.2f, 0.1f);
  for (double p : {1.0, 2.0, 6.0, kInfinityNorm}) {
    EXPECT_LT(angle_deg(estimate_illuminant_minkowski(img, p), {0.4, 0.2, 0.1}), 1e-4) << p;
  }
}

TEST(Minkowski, WhitePatchIsChannelMaxima) {
  Image img = random_image(8, 8, ColorState::LinearDevice, 3, 0.0f, 0.2f);
  img.at(0, 1, 1) = 0.9f;
  img.at(1, 2, 5) = 0.5f;
  img.at(2, 7, 0) = 0.3f;
  EXPECT_LT(angle_deg(estimate_illuminant_minkowski(img, kInfinityNorm), {0.9, 0.5, 0.3}), 1e-4);
}

TEST(Minkowski, ZeroChannelIsDegenerate) {
  Image img(2, 1, ColorState::LinearDevice);
  img.at(0, 0, 0) = 1.0f;
  img.at(1, 0, 1) = 1.0f;
  EXPECT_THROW(estimate_illuminant_minkowski(img, 6.0), DegenerateInputError);
  img.at(2, 0, 0) = 1.0f;
  // Now every channel has p-mean (1/2)^(1/6).
  EXPECT_LT(angle_deg(estimate_illuminant_minkowski(img, 6.0), {1, 1, 1}), 1e-4);
  EXPECT_THROW(estimate_illuminant_minkowski(Image(4, 4, ColorState::LinearDevice), 1.0), DegenerateInputError);
}

TEST(Minkowski, ScaleInvariantDirection) {
  const Image img = random_image(16, 16, ColorState::LinearDevice, 7, 0.05f, 0.5f);
  const Image scaled = apply_gains(img, {1.7, 1.7, 1.7});
  for (double p : {1.0, 6.0, kInfinityNorm}) {
    const auto a = estimate_illuminant_minkowski(img, p).rgb();
    const auto b = estimate_illuminant_minkowski(scaled, p).rgb();
    for (int c = 0; c < 3; ++c) EXPECT_NEAR(a[static_cast<std::size_t>(c)], b[static_cast<std::size_t>(c)], 1e-6);
  }
}

TEST(Minkowski, ConvergesTowardWhitePatchAsPGrows) {
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    // Per-channel gain and tonal skew: value = g_c * u^k_c.
    Rng rng(100 + seed);
    Image img(32, 32, ColorState::LinearDevice);
    for (int c = 0; c < 3; ++c) {
      const double g = rng.uniform(0.3, 1.0), k = rng.uniform(0.5, 3.0);
      for (float& v : img.plane(c)) v = static_cast<float>(g * std::pow(rng.uniform(), k));
    }
    const auto inf = estimate_illuminant_minkowski(img, kInfinityNorm).rgb();
    double prev = 1e9;
    for (double p : {1.0, 2.0, 6.0, 64.0}) {
      const auto e = estimate_illuminant_minkowski(img, p).rgb();
      const double d = std::hypot(e[0] - inf[0], e[1] - inf[1], e[2] - inf[2]);
      EXPECT_LT(d, prev) << "seed " << seed << " p " << p;
      prev = d;
    }
  }
}

TEST(GrayEdge, ConstantIsDegenerateAchromaticRampIsNeutral) {
  EXPECT_THROW(estimate_illuminant_gray_edge(constant_image(8, 8, ColorState::LinearDevice, .3f, .3f, .3f)),
               DegenerateInputError);
  Image ramp(16, 16, ColorState::LinearDevice);
  for (int c = 0; c < 3; ++c) {
    for (int y = 0; y < 16; ++y) {
      for (int x = 0; x < 16; ++x) ramp.at(c, y, x) = 0.05f * static_cast<float>(x);
    }
  }
  EXPECT_LT(angle_deg(estimate_illuminant_gray_edge(ramp), {1, 1, 1}), 1e-4);
}

TEST(GrayEdge, GradientsInOneChannelOnlyAreDegenerate) {
  Image img = constant_image(8, 8, ColorState::LinearDevice, 0.0f, 0.5f, 0.5f);
  for (int y = 0; y < 8; ++y) {
    for (int x = 0; x < 8; ++x) img.at(0, y, x) = 0.1f * static_cast<float>(x);
  }
  EXPECT_THROW(estimate_illuminant_gray_edge(img), DegenerateInputError);
}

TEST(GrayEdge, BruteForceOnSmallTwoSlopeRamp) {
  // Unsmoothed (sigma 0) central differences with reflective borders.
  Image img(4, 4, ColorState::LinearDevice);
  for (int y = 0; y < 4; ++y) {
    for (int x = 0; x < 4; ++x) {
      img.at(0, y, x) = 0.1f * static_cast<float>(x);
      img.at(1, y, x) = 0.05f * static_cast<float>(y);
      img.at(2, y, x) = 0.02f * static_cast<float>(x + y);
    }
  }
  Vec3 sums{};
  for (int c = 0; c < 3; ++c) {
    for (int y = 0; y < 4; ++y) {
      for (int x = 0; x < 4; ++x) {
        const double gx = 0.5 * (img.at(c, y, reflect_index(x + 1, 4)) - img.at(c, y, reflect_index(x - 1, 4)));
        const double gy = 0.5 * (img.at(c, reflect_index(y + 1, 4), x) - img.at(c, reflect_index(y - 1, 4), x));
        sums[static_cast<std::size_t>(c)] += std::hypot(gx, gy);
      }
    }
  }
  EXPECT_LT(angle_deg(estimate_illuminant_gray_edge(img, 1.0, 0.0), sums), 1e-4);
}

TEST(Bilinear, ConstantAndNativeSamples) {
  const Image c = demosaic_bilinear(constant_raw(8, 8, 0.37f));
  for (float v : c.data()) EXPECT_FLOAT_EQ(v, 0.37f);
  RawFrame raw(10, 8, CfaPattern::bayer_rggb());
  Rng rng(2);
  for (float& v : raw.mosaic()) v = static_cast<float>(rng.uniform());
  for (const Image& out : {demosaic_bilinear(raw), demosaic_malvar(raw)}) {
    EXPECT_EQ(out.state(), ColorState::LinearDevice);
    for (int y = 0; y < 8; ++y) {
      for (int x = 0; x < 10; ++x) EXPECT_EQ(out.at(raw.channel_at(y, x), y, x), raw.at(y, x));
    }
  }
}

TEST(Bilinear, HorizontalRampExactAwayFromBorders) {
  Image ramp(16, 12, ColorState::LinearDevice);
  for (int c = 0; c < 3; ++c) {
    for (int y = 0; y < 12; ++y) {
      for (int x = 0; x < 16; ++x) ramp.at(c, y, x) = 0.03f * static_cast<float>(x) + 0.1f * static_cast<float>(c);
    }
  }
  const Image out = demosaic_bilinear(mosaic(ramp, CfaPattern::bayer_rggb()));
  for (int c = 0; c < 3; ++c) {
    for (int y = 1; y < 11; ++y) {
      for (int x = 1; x < 15; ++x) EXPECT_NEAR(out.at(c, y, x), ramp.at(c, y, x), 1e-6);
    }
  }
}

TEST(Demosaic, XTransUnsupported) {
  const RawFrame raw = constant_raw(12, 12, 0.5f, CfaPattern::xtrans());
  EXPECT_THROW(demosaic_bilinear(raw), UnsupportedCfaError);
  EXPECT_THROW(demosaic_malvar(raw), UnsupportedCfaError);
}

TEST(Malvar, ConstantMosaicGivesConstant) {
  const Image out = demosaic_malvar(constant_raw(12, 12, 0.42f));
  for (float v : out.data()) EXPECT_NEAR(v, 0.42f, 1e-6);
}

TEST(Malvar, ImpulseResponseMatchesKernelTable) {
  // Red impulse of height d on a 0.5 pedestal, at red site (6,6).
  const float base = 0.5f, d = 0.2f;
  RawFrame raw = constant_raw(14, 14, base);
  raw.at(6, 6) += d;
  const Image out = demosaic_malvar(raw);
  // G at the impulse site: centre tap 4/8 of the G-at-R kernel.
  EXPECT_NEAR(out.at(1, 6, 6), base + d * 4 / 8, 1e-6);
  // G at the red sites two away: the -1/8 arms.
  EXPECT_NEAR(out.at(1, 6, 8), base - d / 8, 1e-6);
  EXPECT_NEAR(out.at(1, 4, 6), base - d / 8, 1e-6);
  // R at the neighbouring greens: 4/8 along the red row or column.
  EXPECT_NEAR(out.at(0, 6, 7), base + d * 4 / 8, 1e-6);
  EXPECT_NEAR(out.at(0, 7, 6), base + d * 4 / 8, 1e-6);
  // R at the diagonal blue sites: 2/8.
  EXPECT_NEAR(out.at(0, 7, 7), base + d * 2 / 8, 1e-6);
  EXPECT_NEAR(out.at(0, 5, 5), base + d * 2 / 8, 1e-6);
  // B at the diagonal blue sites is native.
  EXPECT_FLOAT_EQ(out.at(2, 7, 7), base);
  // B at the impulse site: 6/8 centre tap of the B-at-R kernel.
  EXPECT_NEAR(out.at(2, 6, 6), base + d * 6 / 8, 1e-6);
  // Outside the 5x5 support.
  EXPECT_FLOAT_EQ(out.at(0, 6, 9), base);
}

TEST(Pipeline, StageOrderAndOracleFlags) {
  const auto sim = simulate_raw(generate_scene(32, 32, 4, SceneKind::Smooth), SimMeta{}, CfaPattern::bayer_rggb());
  const auto res = run_classical_pipeline(sim.raw, PipelineConfig{});
  std::vector<std::string> names;
  for (const auto& s : res.provenance) names.push_back(s.name);
  EXPECT_EQ(names, (std::vector<std::string>{"correct_defects", "wiener_denoise", "demosaic", "exposure",
                                             "white_balance", "color_matrix", "gamma"}));
  const auto oracle = run_classical_pipeline(sim.raw, PipelineConfig::oracle());
  EXPECT_EQ(oracle.provenance[3].params.at("mode"), "oracle");
  EXPECT_EQ(oracle.provenance[4].params.at("method"), "oracle");
  EXPECT_EQ(oracle.image.state(), ColorState::GammaSRGB);
}

TEST(Pipeline, OracleClosedLoopOnSmoothScene) {
  const Image clean = generate_scene(64, 64, 9, SceneKind::Smooth);
  SimMeta meta;
  meta.exposure_gain = 0.5;
  meta.illuminant = Illuminant(1.25, 1.0, 0.8);
  const auto sim = simulate_raw(clean, meta, CfaPattern::bayer_rggb());
  const auto res = run_classical_pipeline(sim.raw, PipelineConfig::oracle());
  EXPECT_GE(psnr(res.image, sim.ground_truth), 35.0);
  EXPECT_LT(angular_error(res.scene_illuminant, meta.illuminant), 1e-6);
}

TEST(PipelineConfigFile, ParsesAndRejects) {
  auto kv = KeyValueConfig::parse("demosaic = \"bilinear\"\nwb = \"white-patch\"\nexposure = \"oracle\"\n");
  const auto cfg = PipelineConfig::from_config(kv);
  EXPECT_EQ(cfg.demosaic, DemosaicMethod::Bilinear);
  EXPECT_EQ(cfg.illuminant, IlluminantMethod::WhitePatch);
  EXPECT_EQ(cfg.exposure, ExposureMode::Oracle);
  EXPECT_THROW(PipelineConfig::from_config(KeyValueConfig::parse("demosaic = \"ahd\"\n")), InvalidArgumentError);
}

TEST(IlluminantSpaces, DeviceSceneRoundTrip) {
  const Matrix3 m = default_device_matrix();
  const Illuminant scene(1.2, 1.0, 0.7);
  const auto back = device_to_scene_illuminant(scene_to_device_illuminant(scene, m), m);
  EXPECT_LT(angular_error(back, scene), 1e-6);
}

}  // namespace
}  // namespace dcam
