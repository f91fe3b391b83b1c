#include "framelabel/trainer.h"

#include <gtest/gtest.h>

#include <cmath>
#include <numeric>
#include <random>

#include "framelabel/errors.h"
#include "support/oracles.h"

namespace framelabel {
namespace {

using LF = LabelingFunction;

FeatureMatrix ramp_features(long frames, int dim, double fps = 100.0) {
  FeatureMatrix f(FrameGrid(fps, frames), dim);
  for (long t = 0; t < frames; ++t) {
    for (int b = 0; b < dim; ++b) f.row(t)[b] = static_cast<double>(t * dim + b + 1);
  }
  return f;
}

Dataset random_dataset(std::mt19937_64& rng, std::size_t n, int dim, int labels) {
  Dataset d;
  d.input_dim = dim;
  d.num_labels = labels;
  for (std::size_t i = 0; i < n * dim; ++i) {
    d.inputs.push_back(2.0 * testing::unit_real(rng) - 1.0);
  }
  for (std::size_t i = 0; i < n * labels; ++i) d.targets.push_back(rng() % 2);
  return d;
}

// Two clusters on either side of the plane x0 = 0; label = [x0 > 0].
Dataset separable_dataset(std::uint64_t seed, std::size_t n) {
  std::mt19937_64 rng(seed);
  Dataset d;
  d.input_dim = 2;
  d.num_labels = 1;
  for (std::size_t i = 0; i < n; ++i) {
    const bool positive = i % 2 == 0;
    const double x0 = (positive ? 1.0 : -1.0) * (0.5 + testing::unit_real(rng));
    const double x1 = 4.0 * testing::unit_real(rng) - 2.0;
    d.inputs.insert(d.inputs.end(), {x0, x1});
    d.targets.push_back(positive ? 1 : 0);
  }
  return d;
}

TrainConfig quick_config(int epochs) {
  TrainConfig cfg = TrainConfig::defaults();
  cfg.epochs = epochs;
  cfg.lr_schedule = TrainConfig::step_schedule(epochs);
  return cfg;
}

// ---------------------------------------------------------------------------
// make_examples
// ---------------------------------------------------------------------------

TEST(MakeExamplesTest, SingleFrameIsMostlyPadding) {
  auto feat = ramp_features(1, 3);
  LabelMatrix labels(FrameGrid(100.0, 1), 2);
  labels.set(0, 1);
  Dataset d = make_examples(feat, labels, 5);
  ASSERT_EQ(d.size(), 1u);
  EXPECT_EQ(d.input_dim, 15);
  auto x = d.input(0);
  for (int i = 0; i < 15; ++i) {
    if (i >= 6 && i < 9) {
      EXPECT_EQ(x[i], feat.row(0)[i - 6]);
    } else {
      EXPECT_EQ(x[i], 0.0);
    }
  }
  EXPECT_EQ(d.target(0)[1], 1);
}

TEST(MakeExamplesTest, NoContextReproducesRows) {
  auto feat = ramp_features(10, 4);
  LabelMatrix labels(FrameGrid(100.0, 10), 3);
  Dataset d = make_examples(feat, labels, 1);
  ASSERT_EQ(d.size(), 10u);
  for (long t = 0; t < 10; ++t) {
    for (int b = 0; b < 4; ++b) EXPECT_EQ(d.input(t)[b], feat.row(t)[b]);
  }
}

TEST(MakeExamplesTest, ConstantInteriorWindow) {
  FeatureMatrix feat(FrameGrid(100.0, 9), 2);
  for (long t = 0; t < 9; ++t) {
    feat.row(t)[0] = 0.25;
    feat.row(t)[1] = -1.0;
  }
  LabelMatrix labels(FrameGrid(100.0, 9), 1);
  Dataset d = make_examples(feat, labels, 5);
  auto x = d.input(4);
  for (int c = 0; c < 5; ++c) {
    EXPECT_EQ(x[2 * c], 0.25);
    EXPECT_EQ(x[2 * c + 1], -1.0);
  }
}

TEST(MakeExamplesTest, ShapeMismatch) {
  auto feat = ramp_features(10, 4);
  EXPECT_THROW(make_examples(feat, LabelMatrix(FrameGrid(100.0, 9), 3), 3),
               ContractError);
  EXPECT_THROW(make_examples(feat, LabelMatrix(FrameGrid(50.0, 10), 3), 3),
               ContractError);
  EXPECT_THROW(make_examples(feat, LabelMatrix(FrameGrid(100.0, 10), 3), 4),
               ContractError);
}

// ---------------------------------------------------------------------------
// Loss and gradient
// ---------------------------------------------------------------------------

TEST(GradientTest, MatchesCentralFiniteDifferences) {
  std::mt19937_64 rng(61);
  const Dataset data = random_dataset(rng, 32, 20, 5);
  ModelParams params = ModelParams::initial(20, 5, 3);
  for (double& w : params.weights) w *= 50.0;  // move away from the origin
  for (double& b : params.bias) b = testing::unit_real(rng) - 0.5;
  std::vector<std::size_t> all(data.size());
  std::iota(all.begin(), all.end(), 0);
  ModelParams grad;
  loss_and_gradient(params, data, all, grad);

  const double h = 1e-4;
  for (int trial = 0; trial < 10; ++trial) {
    const bool is_bias = trial % 4 == 3;
    std::vector<double>& vec = is_bias ? params.bias : params.weights;
    const std::size_t i = rng() % vec.size();
    const double saved = vec[i];
    vec[i] = saved + h;
    const double up = mean_loss(params, data);
    vec[i] = saved - h;
    const double down = mean_loss(params, data);
    vec[i] = saved;
    const double numeric = (up - down) / (2 * h);
    const double analytic = is_bias ? grad.bias[i] : grad.weights[i];
    const double rel = std::abs(analytic - numeric) /
                       std::max({std::abs(analytic), std::abs(numeric), 1e-12});
    EXPECT_LE(rel, 1e-5) << (is_bias ? "bias " : "weight ") << i;
  }
}

TEST(GradientTest, LossAgreesWithMeanLoss) {
  std::mt19937_64 rng(62);
  const Dataset data = random_dataset(rng, 10, 6, 3);
  const ModelParams params = ModelParams::initial(6, 3, 9);
  std::vector<std::size_t> all(data.size());
  std::iota(all.begin(), all.end(), 0);
  ModelParams grad;
  EXPECT_NEAR(loss_and_gradient(params, data, all, grad), mean_loss(params, data), 1e-12);
  EXPECT_NEAR(mean_loss(ModelParams::zeros(6, 3), data), std::log(2.0), 1e-12);
}

// ---------------------------------------------------------------------------
// train
// ---------------------------------------------------------------------------

TEST(TrainTest, ZeroEpochsReturnsInitialisation) {
  const Dataset data = separable_dataset(1, 40);
  TrainConfig cfg = quick_config(0);
  cfg.seed = 17;
  auto result = train(data, data, cfg);
  EXPECT_EQ(result.params, ModelParams::initial(2, 1, 17));
  EXPECT_TRUE(result.history.epochs.empty());
}

TEST(TrainTest, InitialisationIsSmallGaussianWithZeroBias) {
  auto p = ModelParams::initial(200, 10, 5);
  double sum_sq = 0.0;
  for (double w : p.weights) sum_sq += w * w;
  EXPECT_NEAR(std::sqrt(sum_sq / p.weights.size()), 0.01, 0.001);
  for (double b : p.bias) EXPECT_EQ(b, 0.0);
}

TEST(TrainTest, SeparableToyReachesPerfectTrainingScore) {
  const Dataset data = separable_dataset(2, 200);
  // The plane x0 = 0 separates the clusters by construction.
  for (std::size_t i = 0; i < data.size(); ++i) {
    EXPECT_EQ(data.input(i)[0] > 0.0, data.target(i)[0] == 1);
  }
  auto result = train(data, separable_dataset(3, 50), quick_config(30));
  EXPECT_EQ(result.history.final_train.fmeasure, 1.0);
  EXPECT_EQ(prf(dataset_counts(result.params, separable_dataset(3, 50), 0.5)).fmeasure, 1.0);
}

TEST(TrainTest, LossNonIncreasingAtSmallRate) {
  std::mt19937_64 rng(63);
  Dataset data = separable_dataset(4, 120);
  TrainConfig cfg = quick_config(15);
  cfg.learning_rate = 1e-3;
  auto result = train(data, data, cfg);
  ASSERT_EQ(result.history.epochs.size(), 15u);
  for (std::size_t e = 1; e < result.history.epochs.size(); ++e) {
    EXPECT_LE(result.history.epochs[e].train_loss,
              result.history.epochs[e - 1].train_loss);
  }
}

TEST(TrainTest, StepScheduleHalvesTwice) {
  TrainConfig cfg = quick_config(20);
  cfg.learning_rate = 0.4;
  EXPECT_DOUBLE_EQ(cfg.rate_for_epoch(0), 0.4);
  EXPECT_DOUBLE_EQ(cfg.rate_for_epoch(11), 0.4);
  EXPECT_DOUBLE_EQ(cfg.rate_for_epoch(12), 0.2);
  EXPECT_DOUBLE_EQ(cfg.rate_for_epoch(17), 0.1);
  auto result = train(separable_dataset(5, 20), separable_dataset(6, 20), cfg);
  EXPECT_DOUBLE_EQ(result.history.epochs[19].learning_rate, 0.1);
}

TEST(TrainTest, Deterministic) {
  const Dataset data = separable_dataset(7, 64);
  auto a = train(data, data, quick_config(5));
  auto b = train(data, data, quick_config(5));
  EXPECT_EQ(a.params, b.params);
}

TEST(TrainTest, DivergenceIsReported) {
  Dataset data = separable_dataset(8, 32);
  for (double& x : data.inputs) x *= 1e200;
  TrainConfig cfg = quick_config(3);
  cfg.learning_rate = 1e200;
  try {
    train(data, data, cfg);
    FAIL() << "expected DivergenceError";
  } catch (const DivergenceError& e) {
    EXPECT_EQ(e.epoch(), 0);
    EXPECT_NE(std::string(e.what()).find("batch"), std::string::npos);
  }
}

TEST(TrainTest, RejectsInvalidInputs) {
  const Dataset data = separable_dataset(9, 8);
  EXPECT_THROW(train(Dataset{}, data, quick_config(1)), ContractError);
  TrainConfig even = quick_config(1);
  even.context = 4;
  EXPECT_THROW(train(data, data, even), ContractError);
  TrainConfig bad_threshold = quick_config(1);
  bad_threshold.threshold = 1.0;
  EXPECT_THROW(train(data, data, bad_threshold), ContractError);
}

// ---------------------------------------------------------------------------
// predict
// ---------------------------------------------------------------------------

TEST(PredictTest, ZeroModelPredictsEverythingAtHalfThreshold) {
  auto feat = ramp_features(6, 2);
  auto m = predict(ModelParams::zeros(6, 4), feat, 3, 0.5);
  EXPECT_EQ(m.count_active(), 24u);
}

TEST(PredictTest, LargeNegativeBiasPredictsNothing) {
  auto feat = ramp_features(6, 2);
  auto params = ModelParams::zeros(6, 4);
  for (double& b : params.bias) b = -1e3;
  EXPECT_EQ(predict(params, feat, 3, 0.5).count_active(), 0u);
}

TEST(PredictTest, ReproducesFinalTrainingScore) {
  SynthConfig synth;
  synth.num_pieces = 1;
  synth.piece_duration_sec = 10.0;
  const Annotation a = generate_corpus(synth)[0];
  const FrameGrid grid = FrameGrid::covering(31.25, a.duration_sec());
  const FeatureMatrix feat = render_features(a, grid, synth, 5);
  const LabelMatrix labels = rasterize(a, grid, LF::kA, 0);
  const Dataset data = make_examples(feat, labels, 5);
  TrainConfig cfg = quick_config(4);
  auto result = train(data, data, cfg);
  const auto r = prf(framewise_counts(predict(result.params, feat, 5, 0.5), labels));
  EXPECT_EQ(r.counts, result.history.final_train.counts);
  EXPECT_EQ(r.fmeasure, result.history.final_train.fmeasure);
}

TEST(PredictTest, RaisingThresholdTradesRecallForPrecision) {
  SynthConfig synth;
  synth.num_pieces = 1;
  synth.piece_duration_sec = 10.0;
  synth.noise_sigma = 0.5;
  const Annotation a = generate_corpus(synth)[0];
  const FrameGrid grid = FrameGrid::covering(31.25, a.duration_sec());
  const FeatureMatrix feat = render_features(a, grid, synth, 6);
  const LabelMatrix labels = rasterize(a, grid, LF::kA, 0);
  const Dataset data = make_examples(feat, labels, 5);
  auto result = train(data, data, quick_config(2));
  double last_recall = 2.0;
  double last_precision = -1.0;
  for (double threshold : {0.1, 0.3, 0.5, 0.7, 0.9}) {
    auto r = prf(framewise_counts(predict(result.params, feat, 5, threshold), labels));
    if (!r.precision_defined) break;
    EXPECT_LE(r.recall, last_recall);
    EXPECT_GE(r.precision, last_precision - 1e-12) << threshold;
    last_recall = r.recall;
    last_precision = r.precision;
  }
}

// ---------------------------------------------------------------------------
// run_sensitivity_experiment
// ---------------------------------------------------------------------------

ExperimentConfig small_experiment() {
  ExperimentConfig cfg;
  cfg.synth.num_pieces = 10;
  cfg.synth.piece_duration_sec = 10.0;
  cfg.train = quick_config(4);
  cfg.seeds = {1};
  return cfg;
}

TEST(ExperimentTest, DuplicateFunctionsGiveIdenticalRows) {
  ExperimentConfig cfg = small_experiment();
  cfg.fns = {LF::kA, LF::kA};
  auto table = run_sensitivity_experiment(cfg);
  ASSERT_EQ(table.rows.size(), 2u);
  EXPECT_EQ(table.rows[0].result.counts, table.rows[1].result.counts);
  EXPECT_EQ(table.rows[0].result.fmeasure, table.rows[1].result.fmeasure);
  EXPECT_EQ(table.rows[0].split, "test");
}

TEST(ExperimentTest, ParallelCellsMatchSerial) {
  ExperimentConfig cfg = small_experiment();
  cfg.fns = {LF::kA, LF::kF};
  cfg.seeds = {1, 2};
  auto serial = run_sensitivity_experiment(cfg);
  cfg.jobs = 3;
  auto parallel = run_sensitivity_experiment(cfg);
  ASSERT_EQ(serial.rows.size(), 4u);
  for (std::size_t i = 0; i < 4; ++i) {
    EXPECT_EQ(serial.rows[i].fn, parallel.rows[i].fn);
    EXPECT_EQ(serial.rows[i].seed, parallel.rows[i].seed);
    EXPECT_EQ(serial.rows[i].result.counts, parallel.rows[i].result.counts);
  }
  EXPECT_EQ(serial.rows[0].fn, LF::kA);
  EXPECT_EQ(serial.rows[1].seed, 2u);
}

TEST(ExperimentTest, NoiselessReferenceTrainingScoresHigh) {
  ExperimentConfig cfg = small_experiment();
  cfg.synth.noise_sigma = 0.0;
  cfg.fns = {LF::kA};
  cfg.train = quick_config(10);
  auto table = run_sensitivity_experiment(cfg);
  EXPECT_GE(table.mean_fmeasure(LF::kA), 0.95);
}

TEST(ExperimentTest, RejectsEmptyInputs) {
  ExperimentConfig cfg = small_experiment();
  cfg.fns.clear();
  EXPECT_THROW(run_sensitivity_experiment(cfg), ContractError);
  cfg = small_experiment();
  cfg.synth.num_pieces = 2;
  EXPECT_THROW(run_sensitivity_experiment(cfg), ContractError);
}

TEST(ExperimentTest, DivergenceNamesCell) {
  ExperimentConfig cfg = small_experiment();
  cfg.fns = {LF::kE};
  cfg.seeds = {4};
  cfg.synth.noise_sigma = 1e200;
  cfg.train.learning_rate = 1e200;
  try {
    run_sensitivity_experiment(cfg);
    FAIL() << "expected DivergenceError";
  } catch (const DivergenceError& e) {
    const std::string what = e.what();
    EXPECT_NE(what.find("labeling function e"), std::string::npos);
    EXPECT_NE(what.find("seed 4"), std::string::npos);
  }
}

}  // namespace
}  // namespace framelabel
