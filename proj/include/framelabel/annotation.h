#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace framelabel {

// One labelled interval in continuous time.
struct NoteEvent {
  double onset_sec = 0.0;
  double offset_sec = 0.0;
  int label = 0;

  bool operator==(const NoteEvent&) const = default;
};

// Ordering used by Annotation: (onset, label), ties broken by offset.
bool event_less(const NoteEvent& a, const NoteEvent& b);

// Maps MIDI pitches onto label indices. The default covers the 88 piano keys
// starting at A0 (MIDI 21).
struct PitchMapping {
  int pitch_offset = 21;
  int num_labels = 88;

  int label_for(int pitch) const { return pitch - pitch_offset; }
  bool contains(int pitch) const {
    return pitch >= pitch_offset && pitch < pitch_offset + num_labels;
  }
};

// High-resolution interval annotation of one piece. Events are kept sorted;
// construction does not validate, see validate().
class Annotation {
 public:
  Annotation() = default;
  Annotation(std::vector<NoteEvent> events, int num_labels,
             double duration_sec);

  // duration_sec defaults to the latest offset.
  static Annotation from_events(std::vector<NoteEvent> events, int num_labels);

  const std::vector<NoteEvent>& events() const { return events_; }
  int num_labels() const { return num_labels_; }
  double duration_sec() const { return duration_sec_; }
  std::size_t size() const { return events_.size(); }
  bool empty() const { return events_.empty(); }

  bool operator==(const Annotation&) const = default;

 private:
  std::vector<NoteEvent> events_;
  int num_labels_ = 88;
  double duration_sec_ = 0.0;
};

struct Violation {
  enum class Kind { kUnsorted, kNonPositiveDuration, kNegativeOnset,
                    kLabelOutOfRange, kPastDuration, kNonFinite };
  Kind kind;
  std::size_t event_index;
  std::string message;
};

struct ValidationReport {
  std::vector<Violation> violations;

  bool ok() const { return violations.empty(); }
};

// Lists every invariant violation of `a`. Never throws.
ValidationReport validate(const Annotation& a);
// Same checks over a raw event sequence (sortedness included).
ValidationReport validate_events(std::span<const NoteEvent> events,
                                 int num_labels, double duration_sec);

// MAPS-style ground truth text: header "OnsetTime OffsetTime MidiPitch"
// followed by one whitespace-separated event per line.
Annotation parse_tsv(std::string_view text, const PitchMapping& mapping = {});
// Inverse of parse_tsv; times printed with 6 fractional digits.
std::string to_tsv(const Annotation& a, const PitchMapping& mapping = {});

// Standard MIDI File, format 0 or 1, metrical time division.
Annotation parse_midi(std::span<const std::uint8_t> bytes,
                      const PitchMapping& mapping = {});

namespace smf {

// Reads a variable-length quantity starting at `pos` and advances `pos` past
// it. Throws FormatError on truncation or when longer than four bytes.
std::uint32_t read_variable_length(std::span<const std::uint8_t> bytes,
                                   std::size_t& pos);

// Microseconds per quarter note from a three-byte Set Tempo payload.
std::uint32_t tempo_from_payload(std::span<const std::uint8_t> payload);

}  // namespace smf

// Reads a .tsv/.txt or .mid/.midi file, choosing the parser by extension.
Annotation load_annotation(const std::string& path,
                           const PitchMapping& mapping = {});

}  // namespace framelabel
