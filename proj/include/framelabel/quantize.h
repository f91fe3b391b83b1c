#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "framelabel/annotation.h"
#include "framelabel/label_matrix.h"

namespace framelabel {

// The six ways of turning a continuous interval into frame indices.
//   A: round both ends        B: ceil both ends       C: floor both ends
//   D: floor onset, onset + floored duration
//   E: A, both ends shifted by one shared draw in {-1, 0, 1}
//   F: A, each end shifted by its own draw in {-1, 0, 1}
enum class LabelingFunction { kA, kB, kC, kD, kE, kF };

inline constexpr LabelingFunction kAllLabelingFunctions[] = {
    LabelingFunction::kA, LabelingFunction::kB, LabelingFunction::kC,
    LabelingFunction::kD, LabelingFunction::kE, LabelingFunction::kF};

bool is_random(LabelingFunction fn);
char to_char(LabelingFunction fn);
// Accepts 'a'..'f' in either case; nullopt otherwise.
std::optional<LabelingFunction> labeling_function_from_string(
    const std::string& name);

// Source of frame shifts in {-1, 0, 1} for kinds E and F.
class ShiftSource {
 public:
  virtual ~ShiftSource() = default;
  virtual int next_shift() = 0;
};

// Counter-based stream: draw i is a pure function of (seed, fn, i).
class CounterShiftStream final : public ShiftSource {
 public:
  CounterShiftStream(std::uint64_t seed, LabelingFunction fn);
  int next_shift() override;
  std::uint64_t draws() const { return counter_; }

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

// Replays a fixed sequence of shifts, cycling when exhausted. Test hook for
// forcing draws.
class FixedShifts final : public ShiftSource {
 public:
  explicit FixedShifts(std::vector<int> shifts);
  int next_shift() override;

 private:
  std::vector<int> shifts_;
  std::size_t next_ = 0;
};

struct QuantizedInterval {
  long t_s = 0;
  long t_e = 0;
  // Signed quantisation errors before any random shift or clamping.
  double eps_s = 0.0;
  double eps_e = 0.0;
  bool clamped = false;
  bool degenerate = false;

  bool operator==(const QuantizedInterval&) const = default;
};

// `shifts` must be non-null exactly for kinds E and F. E consumes one draw,
// F consumes two (onset then offset).
QuantizedInterval quantize_interval(LabelingFunction fn, double onset_sec,
                                    double offset_sec, double dt,
                                    ShiftSource* shifts = nullptr);

// Per-event quantised indices in annotation order, kept by rasterize.
using RasterRecord = std::vector<QuantizedInterval>;

// Sets frames [t_s, t_e) of each event's label. Random kinds draw from a
// CounterShiftStream keyed by (seed, fn); seed is ignored for A-D.
LabelMatrix rasterize(const Annotation& a, const FrameGrid& grid,
                      LabelingFunction fn, std::uint64_t seed,
                      RasterRecord* record = nullptr);
// As above with an explicit shift source (may be null for A-D).
LabelMatrix rasterize_with(const Annotation& a, const FrameGrid& grid,
                           LabelingFunction fn, ShiftSource* shifts,
                           RasterRecord* record = nullptr);

}  // namespace framelabel
