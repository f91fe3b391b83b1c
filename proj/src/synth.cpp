#include "framelabel/synth.h"

#include <algorithm>
#include <cmath>
#include <random>
#include <string>

#include "framelabel/errors.h"

namespace framelabel {

void SynthConfig::check() const {
  auto fail = [](const std::string& what) {
    throw ContractError("invalid synth config: " + what);
  };
  if (num_pieces < 1) fail("num_pieces must be >= 1");
  if (!(piece_duration_sec > 0.0)) fail("piece_duration_sec must be > 0");
  if (num_labels < 1) fail("num_labels must be >= 1");
  if (!(note_rate_per_sec > 0.0)) fail("note_rate_per_sec must be > 0");
  if (!(min_duration_sec > 0.0)) fail("min_duration_sec must be > 0");
  if (max_duration_sec < min_duration_sec) {
    fail("max_duration_sec must be >= min_duration_sec");
  }
  if (feature_dim < num_labels) fail("feature_dim must be >= num_labels");
  if (!(noise_sigma >= 0.0)) fail("noise_sigma must be >= 0");
  if (harmonics < 1) fail("harmonics must be >= 1");
}

FeatureMatrix::FeatureMatrix(FrameGrid grid, int dim) : grid_(grid), dim_(dim) {
  if (dim < 1) throw ContractError("feature dimension must be >= 1");
  values_.assign(static_cast<std::size_t>(grid.num_frames()) * dim, 0.0);
}

std::uint64_t piece_seed(std::uint64_t corpus_seed, std::size_t index) {
  std::seed_seq seq{static_cast<std::uint32_t>(corpus_seed),
                    static_cast<std::uint32_t>(corpus_seed >> 32),
                    static_cast<std::uint32_t>(index),
                    static_cast<std::uint32_t>(index >> 32)};
  std::uint32_t out[2];
  seq.generate(out, out + 2);
  return (std::uint64_t{out[0]} << 32) | out[1];
}

std::vector<Annotation> generate_corpus(const SynthConfig& cfg) {
  cfg.check();
  std::vector<Annotation> corpus;
  corpus.reserve(cfg.num_pieces);
  for (int p = 0; p < cfg.num_pieces; ++p) {
    std::mt19937_64 rng(piece_seed(cfg.seed, p));
    std::exponential_distribution<double> gap(cfg.note_rate_per_sec);
    std::uniform_int_distribution<int> label(0, cfg.num_labels - 1);
    std::uniform_real_distribution<double> length(cfg.min_duration_sec,
                                                  cfg.max_duration_sec);
    std::vector<NoteEvent> events;
    double t = gap(rng);
    while (t < cfg.piece_duration_sec) {
      const int k = label(rng);
      const double d = length(rng);
      events.push_back({t, std::min(t + d, cfg.piece_duration_sec), k});
      t += gap(rng);
    }
    corpus.emplace_back(std::move(events), cfg.num_labels,
                        cfg.piece_duration_sec);
  }
  return corpus;
}

std::vector<double> label_template(const SynthConfig& cfg, int label) {
  std::vector<double> tpl(cfg.feature_dim, 0.0);
  const long base = static_cast<long>(label) * cfg.feature_dim / cfg.num_labels;
  for (int h = 1; h <= cfg.harmonics; ++h) {
    const long bin = (base + 1) * h - 1;
    if (bin >= cfg.feature_dim) break;
    tpl[bin] = 1.0 / h;
  }
  return tpl;
}

FeatureMatrix render_features(const Annotation& a, const FrameGrid& grid,
                              const SynthConfig& cfg,
                              std::uint64_t noise_seed) {
  if (grid.duration_sec() + 1e-9 < a.duration_sec()) {
    throw ContractError("frame grid (" + std::to_string(grid.duration_sec()) +
                        " s) shorter than the annotation (" +
                        std::to_string(a.duration_sec()) + " s)");
  }
  if (a.num_labels() > cfg.num_labels) {
    throw ContractError("annotation has more labels than the synth config");
  }
  const long frames = grid.num_frames();
  const double dt = grid.dt();
  const int labels = a.num_labels();

  std::vector<std::uint8_t> active(static_cast<std::size_t>(frames) * labels, 0);
  for (const auto& e : a.events()) {
    long t = std::max(0L, static_cast<long>(std::floor(e.onset_sec / dt - 0.5)));
    while (t < frames && (t + 0.5) * dt < e.onset_sec) ++t;
    for (; t < frames && (t + 0.5) * dt < e.offset_sec; ++t) {
      active[static_cast<std::size_t>(t) * labels + e.label] = 1;
    }
  }

  std::vector<std::vector<double>> templates;
  for (int k = 0; k < labels; ++k) templates.push_back(label_template(cfg, k));

  FeatureMatrix features(grid, cfg.feature_dim);
  std::mt19937_64 rng(noise_seed);
  std::normal_distribution<double> noise(0.0, cfg.noise_sigma);
  for (long t = 0; t < frames; ++t) {
    auto row = features.row(t);
    for (int k = 0; k < labels; ++k) {
      if (!active[static_cast<std::size_t>(t) * labels + k]) continue;
      for (int b = 0; b < cfg.feature_dim; ++b) row[b] += templates[k][b];
    }
    if (cfg.noise_sigma > 0.0) {
      for (double& v : row) v += noise(rng);
    }
  }
  return features;
}

}  // namespace framelabel
