#include "framelabel/synth.h"

#include <gtest/gtest.h>

#include <cmath>
#include <numeric>

#include "framelabel/errors.h"

namespace framelabel {
namespace {

TEST(SynthConfigTest, DefaultsAreValid) {
  SynthConfig cfg;
  EXPECT_NO_THROW(cfg.check());
  EXPECT_EQ(cfg.num_labels, 12);
  EXPECT_EQ(cfg.feature_dim, 48);
  EXPECT_EQ(cfg.harmonics, 3);
  EXPECT_EQ(cfg.num_pieces, 40);
}

TEST(SynthConfigTest, RejectsInvalidFields) {
  SynthConfig cfg;
  cfg.min_duration_sec = 0.0;
  EXPECT_THROW(cfg.check(), ContractError);
  cfg = {};
  cfg.feature_dim = 8;
  EXPECT_THROW(cfg.check(), ContractError);
  cfg = {};
  cfg.noise_sigma = -1.0;
  EXPECT_THROW(cfg.check(), ContractError);
  cfg = {};
  cfg.note_rate_per_sec = 0.0;
  EXPECT_THROW(cfg.check(), ContractError);
}

TEST(GenerateCorpusTest, EventsStayInsidePiece) {
  SynthConfig cfg;
  cfg.num_pieces = 5;
  cfg.piece_duration_sec = 5.0;
  cfg.note_rate_per_sec = 0.5;
  for (const auto& a : generate_corpus(cfg)) {
    EXPECT_DOUBLE_EQ(a.duration_sec(), 5.0);
    EXPECT_TRUE(validate(a).ok());
    for (const auto& e : a.events()) {
      EXPECT_LE(e.offset_sec, 5.0);
      EXPECT_LT(e.onset_sec, 5.0);
      EXPECT_LE(e.offset_sec - e.onset_sec, cfg.max_duration_sec + 1e-12);
    }
  }
}

TEST(GenerateCorpusTest, Deterministic) {
  SynthConfig cfg;
  cfg.num_pieces = 4;
  EXPECT_EQ(generate_corpus(cfg), generate_corpus(cfg));
  SynthConfig other = cfg;
  other.seed = 2;
  EXPECT_NE(generate_corpus(cfg), generate_corpus(other));
}

TEST(GenerateCorpusTest, PoissonMeanEventCount) {
  SynthConfig cfg;
  cfg.num_pieces = 100;
  cfg.num_labels = 12;
  cfg.note_rate_per_sec = 2.0;
  cfg.piece_duration_sec = 30.0;
  const auto corpus = generate_corpus(cfg);
  double total = 0.0;
  for (const auto& a : corpus) total += static_cast<double>(a.size());
  const double mean = total / corpus.size();
  // Poisson(60): standard error of the mean over 100 pieces is sqrt(60)/10.
  EXPECT_NEAR(mean, 60.0, 3.0 * std::sqrt(60.0) / 10.0);
}

TEST(GenerateCorpusTest, TimesAreOffGrid) {
  SynthConfig cfg;
  cfg.num_pieces = 2;
  int on_grid = 0;
  int total = 0;
  for (const auto& a : generate_corpus(cfg)) {
    for (const auto& e : a.events()) {
      const double frames = e.onset_sec * 100.0;
      on_grid += std::abs(frames - std::round(frames)) < 1e-9;
      ++total;
    }
  }
  EXPECT_EQ(on_grid, 0) << "of " << total;
}

TEST(LabelTemplateTest, HarmonicLayout) {
  SynthConfig cfg;  // K=12, B=48, H=3
  auto t0 = label_template(cfg, 0);
  EXPECT_EQ(t0[0], 1.0);
  EXPECT_EQ(t0[1], 0.5);
  EXPECT_DOUBLE_EQ(t0[2], 1.0 / 3.0);
  auto t5 = label_template(cfg, 5);
  // Base bin 20: harmonics at 20, 41; the third (62) falls outside.
  EXPECT_EQ(t5[20], 1.0);
  EXPECT_EQ(t5[41], 0.5);
  EXPECT_EQ(std::accumulate(t5.begin(), t5.end(), 0.0), 1.5);
}

TEST(RenderFeaturesTest, SilenceIsZeroWithoutNoise) {
  SynthConfig cfg;
  cfg.noise_sigma = 0.0;
  Annotation a({}, 12, 1.0);
  auto f = render_features(a, FrameGrid(100.0, 100), cfg, 1);
  for (double v : f.values()) EXPECT_EQ(v, 0.0);
}

TEST(RenderFeaturesTest, SingleLabelRowsEqualTemplate) {
  SynthConfig cfg;
  cfg.noise_sigma = 0.0;
  cfg.harmonics = 1;
  Annotation a({{0.1, 0.25, 4}}, 12, 0.5);
  auto f = render_features(a, FrameGrid(100.0, 50), cfg, 1);
  const auto tpl = label_template(cfg, 4);
  for (long t = 0; t < 50; ++t) {
    const double centre = (t + 0.5) * 0.01;
    const bool active = centre >= 0.1 && centre < 0.25;
    for (int b = 0; b < cfg.feature_dim; ++b) {
      EXPECT_EQ(f.row(t)[b], active ? tpl[b] : 0.0) << t << "," << b;
    }
  }
}

TEST(RenderFeaturesTest, AdjacentFramesInsideNoteAreIdentical) {
  SynthConfig cfg;
  cfg.noise_sigma = 0.0;
  Annotation a({{0.1, 0.5, 2}, {0.3, 0.45, 7}}, 12, 0.5);
  auto f = render_features(a, FrameGrid(100.0, 50), cfg, 1);
  for (int b = 0; b < cfg.feature_dim; ++b) EXPECT_EQ(f.row(15)[b], f.row(16)[b]);
  // Piecewise constant within each set of simultaneously active labels.
  for (long t = 31; t < 44; ++t) {
    for (int b = 0; b < cfg.feature_dim; ++b) EXPECT_EQ(f.row(t)[b], f.row(30)[b]);
  }
}

TEST(RenderFeaturesTest, EnergyIsSumOfTemplateEnergies) {
  SynthConfig cfg;
  cfg.noise_sigma = 0.0;
  // Labels 1 and 6 have disjoint template bins.
  Annotation a({{0.0, 0.5, 1}, {0.0, 0.5, 6}}, 12, 0.5);
  auto f = render_features(a, FrameGrid(100.0, 50), cfg, 1);
  auto energy = [](auto v) {
    double e = 0.0;
    for (double x : v) e += x * x;
    return e;
  };
  const double expected = energy(label_template(cfg, 1)) + energy(label_template(cfg, 6));
  EXPECT_NEAR(energy(f.row(20)), expected, 1e-12);
}

TEST(RenderFeaturesTest, NoiseIsSeededAndFinite) {
  SynthConfig cfg;
  Annotation a({{0.1, 0.3, 0}}, 12, 0.5);
  auto f1 = render_features(a, FrameGrid(100.0, 50), cfg, 3);
  auto f2 = render_features(a, FrameGrid(100.0, 50), cfg, 3);
  auto f3 = render_features(a, FrameGrid(100.0, 50), cfg, 4);
  EXPECT_EQ(f1, f2);
  EXPECT_NE(f1, f3);
  for (double v : f1.values()) EXPECT_TRUE(std::isfinite(v));
}

TEST(RenderFeaturesTest, ShortGridIsContractError) {
  SynthConfig cfg;
  Annotation a({{0.1, 0.3, 0}}, 12, 1.0);
  EXPECT_THROW(render_features(a, FrameGrid(100.0, 50), cfg, 1), ContractError);
}

}  // namespace
}  // namespace framelabel
