#include "framelabel/quantize.h"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <string>
#include <utility>

#include "framelabel/errors.h"

namespace framelabel {

bool is_random(LabelingFunction fn) {
  return fn == LabelingFunction::kE || fn == LabelingFunction::kF;
}

char to_char(LabelingFunction fn) {
  return static_cast<char>('a' + static_cast<int>(fn));
}

std::optional<LabelingFunction> labeling_function_from_string(
    const std::string& name) {
  if (name.size() != 1) return std::nullopt;
  const char c = static_cast<char>(std::tolower(static_cast<unsigned char>(name[0])));
  if (c < 'a' || c > 'f') return std::nullopt;
  return static_cast<LabelingFunction>(c - 'a');
}

namespace {

constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ULL;

std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

}  // namespace

CounterShiftStream::CounterShiftStream(std::uint64_t seed, LabelingFunction fn)
    : key_(mix64(seed ^ mix64(static_cast<std::uint64_t>(fn) + 1))) {}

int CounterShiftStream::next_shift() {
  const std::uint64_t x = mix64(key_ + kGolden * ++counter_);
  // Multiply-shift maps the top 32 bits uniformly onto {0, 1, 2}.
  return static_cast<int>(((x >> 32) * 3) >> 32) - 1;
}

FixedShifts::FixedShifts(std::vector<int> shifts) : shifts_(std::move(shifts)) {
  if (shifts_.empty()) throw ContractError("FixedShifts needs at least one value");
  for (int s : shifts_) {
    if (s < -1 || s > 1) throw ContractError("shift must lie in {-1, 0, 1}");
  }
}

int FixedShifts::next_shift() {
  const int s = shifts_[next_];
  next_ = (next_ + 1) % shifts_.size();
  return s;
}

QuantizedInterval quantize_interval(LabelingFunction fn, double onset_sec,
                                    double offset_sec, double dt,
                                    ShiftSource* shifts) {
  if (!(offset_sec > onset_sec)) {
    throw ContractError("interval must satisfy onset < offset");
  }
  if (!(onset_sec >= 0.0)) throw ContractError("onset must be non-negative");
  if (!(dt > 0.0)) throw ContractError("frame length must be positive");
  if (is_random(fn) && shifts == nullptr) {
    throw ContractError(std::string("labeling function ") + to_char(fn) +
                        " needs a random stream");
  }

  const double s = onset_sec / dt;
  const double e = offset_sec / dt;
  double ts = 0.0;
  double te = 0.0;
  switch (fn) {
    case LabelingFunction::kB:
      ts = std::ceil(s);
      te = std::ceil(e);
      break;
    case LabelingFunction::kC:
      ts = std::floor(s);
      te = std::floor(e);
      break;
    case LabelingFunction::kD:
      ts = std::floor(s);
      te = ts + std::floor((offset_sec - onset_sec) / dt);
      break;
    case LabelingFunction::kA:
    case LabelingFunction::kE:
    case LabelingFunction::kF:
      ts = std::floor(s + 0.5);
      te = std::floor(e + 0.5);
      break;
  }

  QuantizedInterval q;
  q.eps_s = ts * dt - onset_sec;
  q.eps_e = te * dt - offset_sec;
  q.t_s = static_cast<long>(ts);
  q.t_e = static_cast<long>(te);
  if (fn == LabelingFunction::kE) {
    const int r = shifts->next_shift();
    q.t_s += r;
    q.t_e += r;
  } else if (fn == LabelingFunction::kF) {
    q.t_s += shifts->next_shift();
    q.t_e += shifts->next_shift();
  }
  if (q.t_s < 0) {
    q.t_s = 0;
    q.clamped = true;
  }
  if (q.t_e < 0) {
    q.t_e = 0;
    q.clamped = true;
  }
  q.degenerate = q.t_e <= q.t_s;
  return q;
}

LabelMatrix rasterize_with(const Annotation& a, const FrameGrid& grid,
                           LabelingFunction fn, ShiftSource* shifts,
                           RasterRecord* record) {
  for (const auto& e : a.events()) {
    if (e.label < 0 || e.label >= a.num_labels()) {
      throw ContractError("event label " + std::to_string(e.label) +
                          " outside [0, " + std::to_string(a.num_labels()) +
                          ")");
    }
  }
  LabelMatrix m(grid, a.num_labels());
  if (record) {
    record->clear();
    record->reserve(a.size());
  }
  const long frames = grid.num_frames();
  for (const auto& e : a.events()) {
    const QuantizedInterval q =
        quantize_interval(fn, e.onset_sec, e.offset_sec, grid.dt(), shifts);
    if (record) record->push_back(q);
    const long end = std::min(q.t_e, frames);
    for (long t = q.t_s; t < end; ++t) m.set(t, e.label);
  }
  return m;
}

LabelMatrix rasterize(const Annotation& a, const FrameGrid& grid,
                      LabelingFunction fn, std::uint64_t seed,
                      RasterRecord* record) {
  if (!is_random(fn)) return rasterize_with(a, grid, fn, nullptr, record);
  CounterShiftStream stream(seed, fn);
  return rasterize_with(a, grid, fn, &stream, record);
}

}  // namespace framelabel
