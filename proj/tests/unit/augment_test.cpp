#include <gtest/gtest.h>

#include "fixtures.hpp"
#include "oracles.hpp"
#include "sdeval/audio/wav.hpp"
#include "sdeval/augment/apply.hpp"

using namespace sdeval;
using namespace sdeval::augment;
using audio::AudioBuffer;
namespace fs = std::filesystem;

namespace {

PluginRegistry fake_registry() {
  const std::string py = "python3", codec = SDEVAL_FAKE_CODEC;
  return PluginRegistry::from_json(json{{"plugins",
                                         {{"lossless", {{"encode", {py, codec, "copy", "{input}", "{output}"}}}},
                                          {"crush", {{"encode", {py, codec, "quantize", "6", "{input}", "{output}"}}}},
                                          {"packed",
                                           {{"encode", {py, codec, "pack", "{input}", "{output}"}},
                                            {"decode", {py, codec, "unpack", "{rate}", "{input}", "{output}"}},
                                            {"ext", "pak"}}},
                                          {"broken", {{"encode", {py, codec, "fail", "{input}", "{output}"}}}},
                                          {"garbled", {{"encode", {py, codec, "garbage", "{input}", "{output}"}}}}}}});
}

}  // namespace

TEST(Noise, MeasuredSnrMatchesRequest) {
  const auto clean = oracle::sine(440.0, 2.0, 16000, 0.3);
  for (double snr : {0.0, 15.0, 25.0, 40.0}) {
    const auto r = add_noise(clean, snr, 99);
    EXPECT_NEAR(audio::measured_snr_db(clean.channel(0), r.audio.channel(0)), snr, 0.05) << snr;
  }
  EXPECT_THROW(add_noise(AudioBuffer::mono(std::vector<float>(100, 0.0f), 16000), 10.0, 1), Error);
}

TEST(Noise, SeedReproduces) {
  const auto clean = oracle::sine(440.0, 0.5, 16000);
  const auto a = add_noise(clean, 20.0, 5).audio, b = add_noise(clean, 20.0, 5).audio, c = add_noise(clean, 20.0, 6).audio;
  EXPECT_TRUE(std::equal(a.channel(0).begin(), a.channel(0).end(), b.channel(0).begin()));
  EXPECT_FALSE(std::equal(a.channel(0).begin(), a.channel(0).end(), c.channel(0).begin()));
}

TEST(SpeechFilter, BandEdges) {
  const int fs = 48000;
  for (double hz : {25.0, 1000.0, 10000.0}) {
    const auto x = oracle::sine(hz, 2.0, fs);
    const auto y = speech_filter(x).audio;
    const double gain = oracle::steady_rms_db(y.channel(0)) - oracle::steady_rms_db(x.channel(0));
    if (hz == 1000.0) {
      EXPECT_NEAR(gain, 0.0, 1.0);
    } else {
      EXPECT_LE(gain, -20.0) << hz;
    }
  }
  for (double edge : {50.0, 7000.0}) {
    const auto x = oracle::sine(edge, 2.0, fs);
    const double gain = oracle::steady_rms_db(speech_filter(x).audio.channel(0)) - oracle::steady_rms_db(x.channel(0));
    EXPECT_NEAR(gain, -1.0, 0.1) << edge;
  }
  const auto low_rate = speech_filter(oracle::sine(1000.0, 1.0, 8000));
  EXPECT_TRUE(low_rate.upper_edge_clipped);
}

TEST(Resample, PreservesToneAndLength) {
  const auto x = oracle::sine(1000.0, 1.0, 16000);
  const auto up = resample(x, 48000);
  EXPECT_EQ(up.sample_rate_hz(), 48000);
  EXPECT_EQ(up.frames(), 48000u);
  EXPECT_NEAR(oracle::dominant_frequency(up.channel(0), 48000, 900, 1100), 1000.0, 1.0);
  EXPECT_NEAR(oracle::steady_rms_db(up.channel(0)), oracle::steady_rms_db(x.channel(0)), 0.1);
  const auto down = resample(up, 16000);
  EXPECT_EQ(down.frames(), 16000u);
  const auto hi = oracle::sine(7000.0, 1.0, 48000);
  EXPECT_LE(oracle::steady_rms_db(resample(hi, 8000).channel(0)), oracle::steady_rms_db(hi.channel(0)) - 40.0);
}

TEST(TimeStretch, DurationAndPitch) {
  const int fs = 16000;
  const auto x = oracle::sine(440.0, 10.0, fs);
  const auto y = time_stretch(x, 1.25);
  EXPECT_NEAR(y.duration_s(), 8.0, 8.0 * 0.02);
  EXPECT_NEAR(oracle::dominant_frequency(y.channel(0), fs, 400, 480), 440.0, 440.0 * 0.02);
  EXPECT_THROW(time_stretch(x, 3.0), Error);
}

TEST(PitchShift, FrequencyAndDuration) {
  const int fs = 16000;
  const auto x = oracle::sine(440.0, 3.0, fs);
  const auto y = pitch_shift(x, 2.0);
  EXPECT_NEAR(y.duration_s(), 3.0, 0.03);
  EXPECT_NEAR(oracle::dominant_frequency(y.channel(0), fs, 400, 560), 493.88, 493.88 * 0.02);
  const auto z = pitch_shift(x, -3.0);
  EXPECT_NEAR(oracle::dominant_frequency(z.channel(0), fs, 300, 480), 440.0 * std::exp2(-0.25), 7.5);
}

TEST(Transcode, LosslessPluginIsBitExact) {
  const auto reg = fake_registry();
  const auto dir = oracle::scratch_dir("tc");
  const auto x = oracle::sine(300.0, 0.25, 16000);
  const auto r = transcode_chain(x, {{"lossless", "", 0}}, dir, reg);
  ASSERT_EQ(r.audio.frames(), x.frames());
  EXPECT_TRUE(std::equal(x.channel(0).begin(), x.channel(0).end(), r.audio.channel(0).begin()));
  EXPECT_EQ(r.provenance.chain(), std::vector<std::string>{"transcode"});
  fs::remove_all(dir);
}

TEST(Transcode, ChainWithDecoderAndRate) {
  const auto reg = fake_registry();
  const auto dir = oracle::scratch_dir("tc");
  const auto x = oracle::sine(300.0, 0.25, 16000);
  const auto r = transcode_chain(x, {{"crush", "", 0}, {"packed", "", 8000}}, dir, reg);
  EXPECT_EQ(r.audio.sample_rate_hz(), 8000);
  EXPECT_EQ(r.provenance.steps.size(), 2u);
  fs::remove_all(dir);
}

TEST(Transcode, FailuresAreTyped) {
  const auto reg = fake_registry();
  const auto dir = oracle::scratch_dir("tc");
  const auto x = oracle::sine(300.0, 0.1, 16000);
  auto code_of = [&](const std::string& plugin) {
    try {
      transcode_chain(x, {{plugin, "", 0}}, dir / plugin, reg);
    } catch (const Error& e) {
      return e.code();
    }
    return ErrorCode::kInvalidArgument;
  };
  EXPECT_EQ(code_of("broken"), ErrorCode::kPluginFailed);
  EXPECT_EQ(code_of("garbled"), ErrorCode::kDecodeFailed);
  EXPECT_EQ(code_of("absent"), ErrorCode::kPluginMissing);
  fs::remove_all(dir);
}

TEST(Plan, DefaultHasEighteenDistinctOperators) {
  const auto plan = default_task2_plan();
  EXPECT_EQ(plan.size(), 18u);
  std::set<std::string> names;
  for (const auto& s : plan) names.insert(s.name);
  EXPECT_EQ(names.size(), 18u);
  const auto back = load_plan(json(plan));
  EXPECT_EQ(back.size(), plan.size());
  EXPECT_EQ(json(back), json(plan));
}

TEST(Apply, DeterministicWithProvenance) {
  const auto x = oracle::sine(440.0, 1.0, 16000);
  for (const auto& spec : default_task2_plan()) {
    if (spec.op == AugmentOp::kCodecChain || spec.op == AugmentOp::kNeuralCodec) continue;
    const auto a = apply_augmentation(spec, x, 42), b = apply_augmentation(spec, x, 42);
    ASSERT_EQ(a.audio.frames(), b.audio.frames()) << spec.name;
    EXPECT_TRUE(std::equal(a.audio.channel(0).begin(), a.audio.channel(0).end(), b.audio.channel(0).begin()));
    EXPECT_EQ(a.provenance.chain(), std::vector<std::string>{to_string(spec.op)});
    EXPECT_TRUE(audio::all_finite(a.audio));
  }
}

TEST(Apply, SampledParametersStayInRange) {
  const auto x = oracle::sine(440.0, 0.5, 16000);
  const auto pitch = fixture::op("pitch", AugmentOp::kPitchShift);
  const auto stretch = fixture::op("stretch", AugmentOp::kTimeStretch);
  const auto noise = fixture::op("noise", AugmentOp::kNoise);
  std::set<double> semis;
  for (std::uint64_t seed = 0; seed < 40; ++seed) {
    const double st = apply_augmentation(pitch, x, seed).provenance.steps[0].params["semitones"];
    semis.insert(st);
    const double sp = apply_augmentation(stretch, x, seed).provenance.steps[0].params["speed_factor"];
    EXPECT_GE(sp, 1.05);
    EXPECT_LE(sp, 1.3);
    const double snr = apply_augmentation(noise, x, seed).provenance.steps[0].params["snr_db"];
    EXPECT_GE(snr, 15.0);
    EXPECT_LE(snr, 40.0);
  }
  EXPECT_EQ(semis, (std::set<double>{-3, -2, -1, 1, 2, 3}));
}

TEST(Apply, CodecWithoutRegistryFails) {
  const auto x = oracle::sine(440.0, 0.1, 16000);
  const auto plan = default_task2_plan();
  try {
    apply_augmentation(plan[0], x, 1);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kPluginMissing);
  }
}
