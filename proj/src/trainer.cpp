#include "framelabel/trainer.h"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <mutex>
#include <numeric>
#include <random>
#include <string>
#include <thread>

#include "framelabel/errors.h"

namespace framelabel {

void Dataset::append(const Dataset& other) {
  if (other.size() == 0) return;
  if (size() == 0 && inputs.empty()) {
    input_dim = other.input_dim;
    num_labels = other.num_labels;
  }
  if (other.input_dim != input_dim || other.num_labels != num_labels) {
    throw ContractError("cannot append datasets of different shapes");
  }
  inputs.insert(inputs.end(), other.inputs.begin(), other.inputs.end());
  targets.insert(targets.end(), other.targets.begin(), other.targets.end());
}

void context_window(const FeatureMatrix& feat, long t, int context,
                    std::span<double> out) {
  const int half = context / 2;
  const int dim = feat.dim();
  for (int c = 0; c < context; ++c) {
    const long src = t - half + c;
    auto dst = out.subspan(static_cast<std::size_t>(c) * dim, dim);
    if (src < 0 || src >= feat.num_frames()) {
      std::fill(dst.begin(), dst.end(), 0.0);
    } else {
      auto row = feat.row(src);
      std::copy(row.begin(), row.end(), dst.begin());
    }
  }
}

Dataset make_examples(const FeatureMatrix& feat, const LabelMatrix& labels,
                      int context) {
  if (context < 1 || context % 2 == 0) {
    throw ContractError("context must be a positive odd number of frames");
  }
  if (feat.num_frames() != labels.num_frames() ||
      feat.grid().fps() != labels.grid().fps()) {
    throw ContractError("features and labels must share frame count and rate");
  }
  Dataset d;
  d.input_dim = context * feat.dim();
  d.num_labels = labels.num_labels();
  const long frames = feat.num_frames();
  d.inputs.resize(static_cast<std::size_t>(frames) * d.input_dim);
  d.targets.resize(static_cast<std::size_t>(frames) * d.num_labels);
  for (long t = 0; t < frames; ++t) {
    context_window(feat, t, context,
                   {d.inputs.data() + static_cast<std::size_t>(t) * d.input_dim,
                    static_cast<std::size_t>(d.input_dim)});
    std::copy_n(labels.row(t), d.num_labels,
                d.targets.begin() + static_cast<std::ptrdiff_t>(t) * d.num_labels);
  }
  return d;
}

ModelParams ModelParams::zeros(int input_dim, int num_labels) {
  ModelParams p;
  p.input_dim = input_dim;
  p.num_labels = num_labels;
  p.weights.assign(static_cast<std::size_t>(input_dim) * num_labels, 0.0);
  p.bias.assign(num_labels, 0.0);
  return p;
}

ModelParams ModelParams::initial(int input_dim, int num_labels,
                                 std::uint64_t seed) {
  ModelParams p = zeros(input_dim, num_labels);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> init(0.0, 0.01);
  for (double& w : p.weights) w = init(rng);
  return p;
}

std::vector<std::pair<int, double>> TrainConfig::step_schedule(int epochs) {
  return {{static_cast<int>(std::ceil(0.60 * epochs)), 0.5},
          {static_cast<int>(std::ceil(0.85 * epochs)), 0.5}};
}

TrainConfig TrainConfig::defaults() {
  TrainConfig cfg;
  cfg.lr_schedule = step_schedule(cfg.epochs);
  return cfg;
}

double TrainConfig::rate_for_epoch(int epoch) const {
  double rate = learning_rate;
  for (const auto& [start, multiplier] : lr_schedule) {
    if (epoch >= start) rate *= multiplier;
  }
  return rate;
}

void TrainConfig::check() const {
  auto fail = [](const std::string& what) {
    throw ContractError("invalid train config: " + what);
  };
  if (batch_size < 1) fail("batch_size must be >= 1");
  if (context < 1 || context % 2 == 0) fail("context must be odd and >= 1");
  if (!(threshold > 0.0 && threshold < 1.0)) fail("threshold must lie in (0, 1)");
  if (epochs < 0) fail("epochs must be >= 0");
  if (!(learning_rate > 0.0)) fail("learning_rate must be > 0");
  if (!(momentum >= 0.0 && momentum < 1.0)) fail("momentum must lie in [0, 1)");
}

namespace {

double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

// Binary cross-entropy on the logit, stable for large |z|.
double bce_with_logit(double z, double y) {
  return std::max(z, 0.0) - y * z + std::log1p(std::exp(-std::abs(z)));
}

void logits(const ModelParams& p, std::span<const double> x,
            std::vector<double>& z) {
  z.assign(p.bias.begin(), p.bias.end());
  const int k_count = p.num_labels;
  for (int d = 0; d < p.input_dim; ++d) {
    const double xd = x[d];
    if (xd == 0.0) continue;
    const double* w = p.weights.data() + static_cast<std::size_t>(d) * k_count;
    for (int k = 0; k < k_count; ++k) z[k] += xd * w[k];
  }
}

void check_shapes(const ModelParams& p, const Dataset& data) {
  if (p.input_dim != data.input_dim || p.num_labels != data.num_labels) {
    throw ContractError("model and dataset shapes differ");
  }
}

}  // namespace

double mean_loss(const ModelParams& params, const Dataset& data) {
  check_shapes(params, data);
  if (data.size() == 0) return 0.0;
  std::vector<double> z;
  double total = 0.0;
  for (std::size_t i = 0; i < data.size(); ++i) {
    logits(params, data.input(i), z);
    auto y = data.target(i);
    for (int k = 0; k < data.num_labels; ++k) total += bce_with_logit(z[k], y[k]);
  }
  return total / (static_cast<double>(data.size()) * data.num_labels);
}

double loss_and_gradient(const ModelParams& params, const Dataset& data,
                         std::span<const std::size_t> indices,
                         ModelParams& grad) {
  check_shapes(params, data);
  if (grad.input_dim != params.input_dim || grad.num_labels != params.num_labels) {
    grad = ModelParams::zeros(params.input_dim, params.num_labels);
  } else {
    std::fill(grad.weights.begin(), grad.weights.end(), 0.0);
    std::fill(grad.bias.begin(), grad.bias.end(), 0.0);
  }
  if (indices.empty()) return 0.0;
  const int k_count = params.num_labels;
  const double scale = 1.0 / (static_cast<double>(indices.size()) * k_count);
  std::vector<double> z;
  std::vector<double> dz(k_count);
  double total = 0.0;
  for (std::size_t i : indices) {
    auto x = data.input(i);
    auto y = data.target(i);
    logits(params, x, z);
    for (int k = 0; k < k_count; ++k) {
      total += bce_with_logit(z[k], y[k]);
      dz[k] = (sigmoid(z[k]) - y[k]) * scale;
      grad.bias[k] += dz[k];
    }
    for (int d = 0; d < params.input_dim; ++d) {
      const double xd = x[d];
      if (xd == 0.0) continue;
      double* g = grad.weights.data() + static_cast<std::size_t>(d) * k_count;
      for (int k = 0; k < k_count; ++k) g[k] += xd * dz[k];
    }
  }
  return total * scale;
}

EvalCounts dataset_counts(const ModelParams& params, const Dataset& data,
                          double threshold) {
  check_shapes(params, data);
  EvalCounts c;
  std::vector<double> z;
  for (std::size_t i = 0; i < data.size(); ++i) {
    logits(params, data.input(i), z);
    auto y = data.target(i);
    for (int k = 0; k < data.num_labels; ++k) {
      const bool p = sigmoid(z[k]) >= threshold;
      c.tp += p && y[k];
      c.fp += p && !y[k];
      c.fn += !p && y[k];
    }
  }
  return c;
}

TrainResult train(const Dataset& train_set, const Dataset& valid_set,
                  const TrainConfig& cfg) {
  cfg.check();
  if (train_set.size() == 0 || valid_set.size() == 0) {
    throw ContractError("training and validation sets must be non-empty");
  }
  if (train_set.input_dim != valid_set.input_dim ||
      train_set.num_labels != valid_set.num_labels) {
    throw ContractError("training and validation sets differ in shape");
  }

  TrainResult result;
  ModelParams& params = result.params;
  params = ModelParams::initial(train_set.input_dim, train_set.num_labels,
                                cfg.seed);
  ModelParams velocity = ModelParams::zeros(params.input_dim, params.num_labels);
  ModelParams lookahead = params;
  ModelParams grad;

  std::vector<std::size_t> order(train_set.size());
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 shuffle_rng(cfg.seed ^ 0x5DEECE66DULL);
  const double mu = cfg.momentum;

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    const double rate = cfg.rate_for_epoch(epoch);
    std::shuffle(order.begin(), order.end(), shuffle_rng);
    long batch = 0;
    for (std::size_t start = 0; start < order.size();
         start += cfg.batch_size, ++batch) {
      const std::size_t end = std::min(order.size(), start + cfg.batch_size);
      // Nesterov: gradient at params + mu * velocity.
      for (std::size_t i = 0; i < params.weights.size(); ++i) {
        lookahead.weights[i] = params.weights[i] + mu * velocity.weights[i];
      }
      for (std::size_t i = 0; i < params.bias.size(); ++i) {
        lookahead.bias[i] = params.bias[i] + mu * velocity.bias[i];
      }
      const double loss = loss_and_gradient(
          lookahead, train_set,
          std::span<const std::size_t>(order).subspan(start, end - start),
          grad);
      if (!std::isfinite(loss)) {
        throw DivergenceError("non-finite training loss at epoch " +
                                  std::to_string(epoch) + ", batch " +
                                  std::to_string(batch),
                              epoch, batch);
      }
      for (std::size_t i = 0; i < params.weights.size(); ++i) {
        velocity.weights[i] = mu * velocity.weights[i] - rate * grad.weights[i];
        params.weights[i] += velocity.weights[i];
      }
      for (std::size_t i = 0; i < params.bias.size(); ++i) {
        velocity.bias[i] = mu * velocity.bias[i] - rate * grad.bias[i];
        params.bias[i] += velocity.bias[i];
      }
    }
    EpochStats stats{epoch, rate, mean_loss(params, train_set),
                     mean_loss(params, valid_set)};
    if (!std::isfinite(stats.train_loss)) {
      throw DivergenceError("non-finite training loss after epoch " +
                                std::to_string(epoch),
                            epoch, batch);
    }
    result.history.epochs.push_back(stats);
  }
  result.history.final_train =
      prf(dataset_counts(params, train_set, cfg.threshold));
  return result;
}

LabelMatrix predict(const ModelParams& params, const FeatureMatrix& feat,
                    int context, double threshold) {
  if (params.input_dim != context * feat.dim()) {
    throw ContractError("model input size does not match context x features");
  }
  LabelMatrix out(feat.grid(), params.num_labels);
  std::vector<double> window(params.input_dim);
  std::vector<double> z;
  for (long t = 0; t < feat.num_frames(); ++t) {
    context_window(feat, t, context, window);
    logits(params, window, z);
    for (int k = 0; k < params.num_labels; ++k) {
      if (sigmoid(z[k]) >= threshold) out.set(t, k);
    }
  }
  return out;
}

std::vector<std::pair<LabelingFunction, double>>
ExperimentTable::mean_fmeasure() const {
  std::vector<std::pair<LabelingFunction, double>> means;
  std::vector<int> counts;
  for (const auto& row : rows) {
    auto it = std::find_if(means.begin(), means.end(),
                           [&](const auto& m) { return m.first == row.fn; });
    if (it == means.end()) {
      means.emplace_back(row.fn, 0.0);
      counts.push_back(0);
      it = std::prev(means.end());
    }
    const auto idx = static_cast<std::size_t>(it - means.begin());
    it->second += row.result.fmeasure;
    ++counts[idx];
  }
  for (std::size_t i = 0; i < means.size(); ++i) means[i].second /= counts[i];
  return means;
}

double ExperimentTable::mean_fmeasure(LabelingFunction fn) const {
  for (const auto& [f, mean] : mean_fmeasure()) {
    if (f == fn) return mean;
  }
  throw ContractError(std::string("no rows for labeling function ") +
                      to_char(fn));
}

namespace {

struct PreparedSeed {
  std::vector<Annotation> corpus;
  std::vector<FeatureMatrix> features;
  std::size_t train_end = 0;
  std::size_t valid_end = 0;
};

PreparedSeed prepare_seed(const ExperimentConfig& cfg, std::uint64_t seed) {
  SynthConfig synth = cfg.synth;
  synth.seed = seed;
  PreparedSeed prepared;
  prepared.corpus = generate_corpus(synth);
  const std::size_t n = prepared.corpus.size();
  prepared.train_end = n * 6 / 10;
  prepared.valid_end = n * 8 / 10;
  if (prepared.train_end == 0 || prepared.valid_end == prepared.train_end ||
      prepared.valid_end == n) {
    throw ContractError("corpus of " + std::to_string(n) +
                        " pieces is too small for a 60/20/20 split");
  }
  for (std::size_t i = 0; i < n; ++i) {
    const FrameGrid grid =
        FrameGrid::covering(cfg.train_fps, prepared.corpus[i].duration_sec());
    // Noise stream distinct from the piece's event stream.
    prepared.features.push_back(render_features(
        prepared.corpus[i], grid, synth, piece_seed(seed, i) ^ 0xA5A5A5A5ULL));
  }
  return prepared;
}

Dataset labelled_range(const ExperimentConfig& cfg, const PreparedSeed& p,
                       LabelingFunction fn, std::uint64_t seed,
                       std::size_t begin, std::size_t end) {
  Dataset data;
  for (std::size_t i = begin; i < end; ++i) {
    const LabelMatrix labels = rasterize(p.corpus[i], p.features[i].grid(), fn,
                                         piece_seed(seed, i));
    data.append(make_examples(p.features[i], labels, cfg.train.context));
  }
  return data;
}

ExperimentRow run_cell(const ExperimentConfig& cfg, const PreparedSeed& p,
                       LabelingFunction fn, std::uint64_t seed) {
  TrainConfig train_cfg = cfg.train;
  train_cfg.seed = seed;
  const Dataset train_set = labelled_range(cfg, p, fn, seed, 0, p.train_end);
  const Dataset valid_set =
      labelled_range(cfg, p, fn, seed, p.train_end, p.valid_end);
  TrainResult trained;
  try {
    trained = train(train_set, valid_set, train_cfg);
  } catch (const DivergenceError& e) {
    throw DivergenceError(std::string("labeling function ") + to_char(fn) +
                              ", seed " + std::to_string(seed) + ": " +
                              e.what(),
                          e.epoch(), e.batch());
  }
  EvalCounts counts;
  for (std::size_t i = p.valid_end; i < p.corpus.size(); ++i) {
    const LabelMatrix pred = predict(trained.params, p.features[i],
                                     train_cfg.context, train_cfg.threshold);
    counts += protocol_counts(pred, p.corpus[i], cfg.protocol);
  }
  return {fn, seed, "test", prf(counts)};
}

}  // namespace

ExperimentTable run_sensitivity_experiment(const ExperimentConfig& cfg) {
  if (cfg.fns.empty()) throw ContractError("no labeling functions given");
  if (cfg.seeds.empty()) throw ContractError("no seeds given");
  cfg.synth.check();
  cfg.train.check();

  std::vector<PreparedSeed> prepared;
  prepared.reserve(cfg.seeds.size());
  for (std::uint64_t seed : cfg.seeds) prepared.push_back(prepare_seed(cfg, seed));

  // Rows ordered by fn, then seed, whatever the scheduling.
  const std::size_t cells = cfg.fns.size() * cfg.seeds.size();
  std::vector<ExperimentRow> rows(cells);
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto worker = [&] {
    for (std::size_t c = next++; c < cells; c = next++) {
      const std::size_t f = c / cfg.seeds.size();
      const std::size_t s = c % cfg.seeds.size();
      try {
        rows[c] = run_cell(cfg, prepared[s], cfg.fns[f], cfg.seeds[s]);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
        next = cells;
      }
    }
  };
  const int jobs = std::max(1, std::min<int>(cfg.jobs, static_cast<int>(cells)));
  if (jobs == 1) {
    worker();
  } else {
    std::vector<std::jthread> threads;
    for (int j = 0; j < jobs; ++j) threads.emplace_back(worker);
  }
  if (failure) std::rethrow_exception(failure);
  return {std::move(rows)};
}

}  // namespace framelabel
