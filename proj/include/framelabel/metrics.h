#pragma once

#include <cstdint>
#include <map>

#include "framelabel/annotation.h"
#include "framelabel/label_matrix.h"
#include "framelabel/quantize.h"

namespace framelabel {

// Totals over all (frame, label) cells.
struct EvalCounts {
  std::uint64_t tp = 0;
  std::uint64_t fp = 0;
  std::uint64_t fn = 0;

  EvalCounts& operator+=(const EvalCounts& o) {
    tp += o.tp;
    fp += o.fp;
    fn += o.fn;
    return *this;
  }
  bool operator==(const EvalCounts&) const = default;
};

struct EvalResult {
  double precision = 0.0;
  double recall = 0.0;
  double fmeasure = 0.0;
  EvalCounts counts;
  // False when the corresponding ratio was 0/0 and reported as 0.
  bool precision_defined = false;
  bool recall_defined = false;
  bool fmeasure_defined = false;
};

EvalCounts framewise_counts(const LabelMatrix& pred, const LabelMatrix& ref);
EvalResult prf(const EvalCounts& c);

// Sample-and-hold: target row t copies source row
// min(floor(t * src_fps / dst_fps), T_src - 1).
LabelMatrix resample(const LabelMatrix& m, const FrameGrid& target);
// Keeps the first min(T, floor(seconds * fps)) rows.
LabelMatrix truncate(const LabelMatrix& m, double seconds);

struct DisagreementStats {
  std::uint64_t differing_frames = 0;
  double rate = 0.0;
  // Signed frame shift (b minus a) -> number of events. Events whose boundary
  // did not move are counted in unshifted_* instead.
  std::map<long, std::uint64_t> onset_shift_histogram;
  std::map<long, std::uint64_t> offset_shift_histogram;
  std::uint64_t unshifted_onsets = 0;
  std::uint64_t unshifted_offsets = 0;
};

// Cellwise comparison only; histograms stay empty.
DisagreementStats disagreement(const LabelMatrix& a, const LabelMatrix& b);
// Cellwise comparison plus per-event boundary shifts between the two
// rasterisations of `events` recorded in `rec_a` and `rec_b`.
DisagreementStats disagreement(const LabelMatrix& a, const LabelMatrix& b,
                               const Annotation& events,
                               const RasterRecord& rec_a,
                               const RasterRecord& rec_b);

// Model-free ceiling: fn labels scored against the A labels on the same grid.
EvalResult noise_ceiling(const Annotation& a, const FrameGrid& grid,
                         LabelingFunction fn, std::uint64_t seed);

// Reference grid and window used when scoring predictions.
struct EvalProtocol {
  double ref_fps = 100.0;
  double window_sec = 30.0;
  LabelingFunction ref_fn = LabelingFunction::kA;
  std::uint64_t ref_seed = 0;
};

LabelMatrix reference_labels(const Annotation& a, const EvalProtocol& protocol);

// Resamples `pred` onto `ref`'s grid, truncates both to the window and counts.
EvalCounts protocol_counts(const LabelMatrix& pred, const LabelMatrix& ref,
                           double window_sec);
EvalCounts protocol_counts(const LabelMatrix& pred, const Annotation& a,
                           const EvalProtocol& protocol = {});

}  // namespace framelabel
