#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "framelabel/label_matrix.h"
#include "framelabel/metrics.h"
#include "framelabel/quantize.h"
#include "framelabel/synth.h"

namespace framelabel {

// Flattened context windows with their target label rows.
struct Dataset {
  int input_dim = 0;
  int num_labels = 0;
  std::vector<double> inputs;         // size() x input_dim
  std::vector<std::uint8_t> targets;  // size() x num_labels

  std::size_t size() const {
    return num_labels == 0 ? 0 : targets.size() / num_labels;
  }
  std::span<const double> input(std::size_t i) const {
    return {inputs.data() + i * input_dim, static_cast<std::size_t>(input_dim)};
  }
  std::span<const std::uint8_t> target(std::size_t i) const {
    return {targets.data() + i * num_labels,
            static_cast<std::size_t>(num_labels)};
  }
  // Appends all examples of `other`; dimensions must agree.
  void append(const Dataset& other);
};

// Window of `context` rows centred on `t`, zero-padded at the edges.
void context_window(const FeatureMatrix& feat, long t, int context,
                    std::span<double> out);

Dataset make_examples(const FeatureMatrix& feat, const LabelMatrix& labels,
                      int context);

// Linear layer with sigmoid outputs. weights is input_dim x num_labels,
// row-major.
struct ModelParams {
  int input_dim = 0;
  int num_labels = 0;
  std::vector<double> weights;
  std::vector<double> bias;

  static ModelParams zeros(int input_dim, int num_labels);
  // Weights ~ N(0, 0.01^2), zero bias.
  static ModelParams initial(int input_dim, int num_labels, std::uint64_t seed);

  bool operator==(const ModelParams&) const = default;
};

struct TrainConfig {
  int batch_size = 8;
  double learning_rate = 0.5;
  double momentum = 0.9;
  // (epoch, multiplier): from `epoch` on the rate is multiplied by
  // `multiplier`; entries compound.
  std::vector<std::pair<int, double>> lr_schedule;
  int epochs = 20;
  int context = 5;
  double threshold = 0.5;
  std::uint64_t seed = 1;

  // Halve the rate at 60% and 85% of the epochs.
  static std::vector<std::pair<int, double>> step_schedule(int epochs);
  static TrainConfig defaults();
  double rate_for_epoch(int epoch) const;
  void check() const;
};

struct EpochStats {
  int epoch = 0;
  double learning_rate = 0.0;
  double train_loss = 0.0;
  double valid_loss = 0.0;
};

struct TrainHistory {
  std::vector<EpochStats> epochs;
  // Thresholded predictions of the final model on the training set.
  EvalResult final_train;
};

struct TrainResult {
  ModelParams params;
  TrainHistory history;
};

// Mean binary cross-entropy over all examples and labels.
double mean_loss(const ModelParams& params, const Dataset& data);
// Loss and gradient over the examples listed in `indices`.
double loss_and_gradient(const ModelParams& params, const Dataset& data,
                         std::span<const std::size_t> indices,
                         ModelParams& grad);

TrainResult train(const Dataset& train_set, const Dataset& valid_set,
                  const TrainConfig& cfg);

LabelMatrix predict(const ModelParams& params, const FeatureMatrix& feat,
                    int context, double threshold);
// Thresholded predictions on a dataset's inputs scored against its targets.
EvalCounts dataset_counts(const ModelParams& params, const Dataset& data,
                          double threshold);

struct ExperimentConfig {
  SynthConfig synth;
  TrainConfig train = TrainConfig::defaults();
  std::vector<LabelingFunction> fns{LabelingFunction::kA,
                                    LabelingFunction::kE,
                                    LabelingFunction::kF};
  std::vector<std::uint64_t> seeds{1, 2, 3};
  double train_fps = 31.25;
  EvalProtocol protocol;
  int jobs = 1;
};

struct ExperimentRow {
  LabelingFunction fn;
  std::uint64_t seed;
  std::string split;
  EvalResult result;
};

struct ExperimentTable {
  std::vector<ExperimentRow> rows;

  // Mean f-measure per labeling function, in first-appearance order.
  std::vector<std::pair<LabelingFunction, double>> mean_fmeasure() const;
  double mean_fmeasure(LabelingFunction fn) const;
};

// Trains one model per (fn, seed) on labels from fn and scores its test-set
// predictions against the reference protocol. For a given seed, corpus,
// split, features and initialisation are shared across fns.
ExperimentTable run_sensitivity_experiment(const ExperimentConfig& cfg);

}  // namespace framelabel
