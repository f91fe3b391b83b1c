#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "framelabel/annotation.h"
#include "framelabel/label_matrix.h"

namespace framelabel {

struct SynthConfig {
  int num_pieces = 40;
  double piece_duration_sec = 30.0;
  int num_labels = 12;
  double note_rate_per_sec = 2.0;
  double min_duration_sec = 0.1;
  double max_duration_sec = 1.0;
  int feature_dim = 48;
  double noise_sigma = 0.1;
  int harmonics = 3;
  std::uint64_t seed = 1;

  // Throws ContractError naming the first invalid field.
  void check() const;
};

// T x feature_dim real matrix aligned with a frame grid.
class FeatureMatrix {
 public:
  FeatureMatrix(FrameGrid grid, int dim);

  const FrameGrid& grid() const { return grid_; }
  long num_frames() const { return grid_.num_frames(); }
  int dim() const { return dim_; }

  std::span<double> row(long t) {
    return {values_.data() + static_cast<std::size_t>(t) * dim_,
            static_cast<std::size_t>(dim_)};
  }
  std::span<const double> row(long t) const {
    return {values_.data() + static_cast<std::size_t>(t) * dim_,
            static_cast<std::size_t>(dim_)};
  }
  const std::vector<double>& values() const { return values_; }

  bool operator==(const FeatureMatrix&) const = default;

 private:
  FrameGrid grid_;
  int dim_;
  std::vector<double> values_;
};

// Seed used for piece `index` of a corpus generated with `corpus_seed`.
std::uint64_t piece_seed(std::uint64_t corpus_seed, std::size_t index);

// One annotation per piece: Poisson onsets, uniform labels and durations,
// offsets truncated at the piece end.
std::vector<Annotation> generate_corpus(const SynthConfig& cfg);

// Spectral template of label k: 1/h at bin (floor(k*B/K) + 1)*h - 1 for
// harmonics h = 1..H inside the feature range.
std::vector<double> label_template(const SynthConfig& cfg, int label);

// Row t is the sum of templates of labels sounding at the frame centre
// (t + 0.5) * dt plus N(0, sigma^2) noise drawn from `noise_seed`.
FeatureMatrix render_features(const Annotation& a, const FrameGrid& grid,
                              const SynthConfig& cfg,
                              std::uint64_t noise_seed);

}  // namespace framelabel
