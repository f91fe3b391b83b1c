#include "framelabel/metrics.h"

#include <algorithm>
#include <cmath>
#include <string>

#include "framelabel/errors.h"

namespace framelabel {

namespace {

void require_same_shape(const LabelMatrix& a, const LabelMatrix& b) {
  if (a.num_frames() != b.num_frames() || a.num_labels() != b.num_labels()) {
    throw ContractError(
        "matrix shapes differ: " + std::to_string(a.num_frames()) + "x" +
        std::to_string(a.num_labels()) + " vs " +
        std::to_string(b.num_frames()) + "x" + std::to_string(b.num_labels()));
  }
  if (a.grid().fps() != b.grid().fps()) {
    throw ContractError("matrix frame rates differ: " +
                        std::to_string(a.grid().fps()) + " vs " +
                        std::to_string(b.grid().fps()));
  }
}

}  // namespace

EvalCounts framewise_counts(const LabelMatrix& pred, const LabelMatrix& ref) {
  require_same_shape(pred, ref);
  EvalCounts c;
  const auto& p = pred.cells();
  const auto& r = ref.cells();
  for (std::size_t i = 0; i < p.size(); ++i) {
    c.tp += p[i] & r[i];
    c.fp += p[i] & (r[i] ^ 1);
    c.fn += (p[i] ^ 1) & r[i];
  }
  return c;
}

EvalResult prf(const EvalCounts& c) {
  EvalResult r;
  r.counts = c;
  const double tp = static_cast<double>(c.tp);
  if (c.tp + c.fp > 0) {
    r.precision = tp / static_cast<double>(c.tp + c.fp);
    r.precision_defined = true;
  }
  if (c.tp + c.fn > 0) {
    r.recall = tp / static_cast<double>(c.tp + c.fn);
    r.recall_defined = true;
  }
  if (r.precision + r.recall > 0.0) {
    r.fmeasure = 2.0 * r.precision * r.recall / (r.precision + r.recall);
    r.fmeasure_defined = true;
  }
  return r;
}

LabelMatrix resample(const LabelMatrix& m, const FrameGrid& target) {
  if (m.num_frames() < 1 || m.cells().empty()) {
    throw ContractError("cannot resample an empty matrix");
  }
  LabelMatrix out(target, m.num_labels());
  const long src_frames = m.num_frames();
  const double ratio = m.grid().fps() / target.fps();
  const bool same_rate = m.grid().fps() == target.fps();
  for (long t = 0; t < target.num_frames(); ++t) {
    long s = same_rate ? t : static_cast<long>(std::floor(t * ratio));
    s = std::min(s, src_frames - 1);
    const std::uint8_t* row = m.row(s);
    for (int k = 0; k < m.num_labels(); ++k) {
      if (row[k]) out.set(t, k);
    }
  }
  return out;
}

LabelMatrix truncate(const LabelMatrix& m, double seconds) {
  if (!(seconds > 0.0)) throw ContractError("truncation window must be positive");
  const double limit = std::floor(seconds * m.grid().fps());
  const long keep = limit >= static_cast<double>(m.num_frames())
                        ? m.num_frames()
                        : static_cast<long>(limit);
  if (keep == m.num_frames()) return m;
  if (keep < 1) {
    throw ContractError("truncation window shorter than one frame");
  }
  LabelMatrix out(FrameGrid(m.grid().fps(), keep), m.num_labels());
  for (long t = 0; t < keep; ++t) {
    for (int k = 0; k < m.num_labels(); ++k) {
      if (m.at(t, k)) out.set(t, k);
    }
  }
  return out;
}

DisagreementStats disagreement(const LabelMatrix& a, const LabelMatrix& b) {
  require_same_shape(a, b);
  DisagreementStats s;
  const auto& x = a.cells();
  const auto& y = b.cells();
  for (std::size_t i = 0; i < x.size(); ++i) s.differing_frames += x[i] != y[i];
  s.rate = static_cast<double>(s.differing_frames) /
           static_cast<double>(x.size());
  return s;
}

DisagreementStats disagreement(const LabelMatrix& a, const LabelMatrix& b,
                               const Annotation& events,
                               const RasterRecord& rec_a,
                               const RasterRecord& rec_b) {
  DisagreementStats s = disagreement(a, b);
  if (rec_a.size() != events.size() || rec_b.size() != events.size()) {
    throw ContractError("raster records do not match the annotation's " +
                        std::to_string(events.size()) + " events");
  }
  for (std::size_t i = 0; i < events.size(); ++i) {
    const long onset_shift = rec_b[i].t_s - rec_a[i].t_s;
    const long offset_shift = rec_b[i].t_e - rec_a[i].t_e;
    if (onset_shift == 0) {
      ++s.unshifted_onsets;
    } else {
      ++s.onset_shift_histogram[onset_shift];
    }
    if (offset_shift == 0) {
      ++s.unshifted_offsets;
    } else {
      ++s.offset_shift_histogram[offset_shift];
    }
  }
  return s;
}

EvalResult noise_ceiling(const Annotation& a, const FrameGrid& grid,
                         LabelingFunction fn, std::uint64_t seed) {
  const LabelMatrix labels = rasterize(a, grid, fn, seed);
  const LabelMatrix reference = rasterize(a, grid, LabelingFunction::kA, 0);
  return prf(framewise_counts(labels, reference));
}

LabelMatrix reference_labels(const Annotation& a, const EvalProtocol& protocol) {
  const FrameGrid grid = FrameGrid::covering(protocol.ref_fps, a.duration_sec());
  return rasterize(a, grid, protocol.ref_fn, protocol.ref_seed);
}

EvalCounts protocol_counts(const LabelMatrix& pred, const LabelMatrix& ref,
                           double window_sec) {
  const LabelMatrix on_ref_grid = resample(pred, ref.grid());
  return framewise_counts(truncate(on_ref_grid, window_sec),
                          truncate(ref, window_sec));
}

EvalCounts protocol_counts(const LabelMatrix& pred, const Annotation& a,
                           const EvalProtocol& protocol) {
  return protocol_counts(pred, reference_labels(a, protocol),
                         protocol.window_sec);
}

}  // namespace framelabel
