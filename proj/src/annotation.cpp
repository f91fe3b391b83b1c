#include "framelabel/annotation.h"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <deque>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <map>
#include <sstream>
#include <utility>

#include "framelabel/errors.h"

namespace framelabel {

bool event_less(const NoteEvent& a, const NoteEvent& b) {
  if (a.onset_sec != b.onset_sec) return a.onset_sec < b.onset_sec;
  if (a.label != b.label) return a.label < b.label;
  return a.offset_sec < b.offset_sec;
}

Annotation::Annotation(std::vector<NoteEvent> events, int num_labels,
                       double duration_sec)
    : events_(std::move(events)),
      num_labels_(num_labels),
      duration_sec_(duration_sec) {
  std::stable_sort(events_.begin(), events_.end(), event_less);
}

Annotation Annotation::from_events(std::vector<NoteEvent> events,
                                   int num_labels) {
  double duration = 0.0;
  for (const auto& e : events) duration = std::max(duration, e.offset_sec);
  return Annotation(std::move(events), num_labels, duration);
}

ValidationReport validate_events(std::span<const NoteEvent> events,
                                 int num_labels, double duration_sec) {
  ValidationReport report;
  auto add = [&](Violation::Kind kind, std::size_t i, std::string msg) {
    report.violations.push_back({kind, i, "event " + std::to_string(i) +
                                              ": " + std::move(msg)});
  };
  for (std::size_t i = 0; i < events.size(); ++i) {
    const NoteEvent& e = events[i];
    if (!std::isfinite(e.onset_sec) || !std::isfinite(e.offset_sec)) {
      add(Violation::Kind::kNonFinite, i, "non-finite time");
      continue;
    }
    if (i > 0 && event_less(e, events[i - 1])) {
      add(Violation::Kind::kUnsorted, i, "out of order");
    }
    if (e.onset_sec < 0.0) {
      add(Violation::Kind::kNegativeOnset, i, "negative onset");
    }
    if (e.offset_sec <= e.onset_sec) {
      add(Violation::Kind::kNonPositiveDuration, i, "offset <= onset");
    }
    if (e.label < 0 || e.label >= num_labels) {
      add(Violation::Kind::kLabelOutOfRange, i,
          "label " + std::to_string(e.label) + " outside [0, " +
              std::to_string(num_labels) + ")");
    }
    if (e.offset_sec > duration_sec) {
      add(Violation::Kind::kPastDuration, i, "offset past duration");
    }
  }
  return report;
}

ValidationReport validate(const Annotation& a) {
  return validate_events(a.events(), a.num_labels(), a.duration_sec());
}

// ---------------------------------------------------------------------------
// TSV
// ---------------------------------------------------------------------------

namespace {

std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t')) ++i;
    std::size_t start = i;
    while (i < line.size() && line[i] != ' ' && line[i] != '\t') ++i;
    if (i > start) fields.push_back(line.substr(start, i - start));
  }
  return fields;
}

double parse_number(std::string_view field, std::size_t line_no) {
  double value = 0.0;
  const char* first = field.data();
  const char* last = field.data() + field.size();
  if (!field.empty() && *first == '+') ++first;
  auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc() || ptr != last || !std::isfinite(value)) {
    throw FormatError("line " + std::to_string(line_no) +
                      ": not a number: '" + std::string(field) + "'");
  }
  return value;
}

}  // namespace

Annotation parse_tsv(std::string_view text, const PitchMapping& mapping) {
  std::vector<NoteEvent> events;
  bool seen_header = false;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line_no == 1 && line.starts_with("\xEF\xBB\xBF")) line.remove_prefix(3);

    auto fields = split_fields(line);
    if (!seen_header) {
      if (fields.size() != 3 || fields[0] != "OnsetTime" ||
          fields[1] != "OffsetTime" || fields[2] != "MidiPitch") {
        throw FormatError(
            "line 1: expected header 'OnsetTime OffsetTime MidiPitch'");
      }
      seen_header = true;
      continue;
    }
    if (fields.empty()) continue;
    if (fields.size() != 3) {
      throw FormatError("line " + std::to_string(line_no) +
                        ": expected 3 fields, got " +
                        std::to_string(fields.size()));
    }
    double onset = parse_number(fields[0], line_no);
    double offset = parse_number(fields[1], line_no);
    double pitch_value = parse_number(fields[2], line_no);
    if (pitch_value != std::floor(pitch_value)) {
      throw FormatError("line " + std::to_string(line_no) +
                        ": pitch is not an integer");
    }
    if (pitch_value < mapping.pitch_offset ||
        pitch_value >= mapping.pitch_offset + mapping.num_labels) {
      throw RangeError("line " + std::to_string(line_no) + ": pitch " +
                       std::string(fields[2]) + " outside [" +
                       std::to_string(mapping.pitch_offset) + ", " +
                       std::to_string(mapping.pitch_offset +
                                      mapping.num_labels - 1) +
                       "]");
    }
    if (onset < 0.0) {
      throw ValidationError("line " + std::to_string(line_no) +
                            ": negative onset");
    }
    if (offset <= onset) {
      throw ValidationError("line " + std::to_string(line_no) +
                            ": offset must be greater than onset");
    }
    events.push_back(
        {onset, offset, mapping.label_for(static_cast<int>(pitch_value))});
  }
  if (!seen_header) throw FormatError("line 1: missing header");
  return Annotation::from_events(std::move(events), mapping.num_labels);
}

std::string to_tsv(const Annotation& a, const PitchMapping& mapping) {
  std::string out = "OnsetTime\tOffsetTime\tMidiPitch\n";
  char buf[96];
  for (const auto& e : a.events()) {
    std::snprintf(buf, sizeof buf, "%.6f\t%.6f\t%d\n", e.onset_sec,
                  e.offset_sec, e.label + mapping.pitch_offset);
    out += buf;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Standard MIDI File
// ---------------------------------------------------------------------------

namespace smf {

std::uint32_t read_variable_length(std::span<const std::uint8_t> bytes,
                                   std::size_t& pos) {
  std::uint32_t value = 0;
  for (int i = 0; i < 4; ++i) {
    if (pos >= bytes.size()) {
      throw FormatError("truncated variable-length quantity");
    }
    std::uint8_t b = bytes[pos++];
    value = (value << 7) | (b & 0x7F);
    if ((b & 0x80) == 0) return value;
  }
  throw FormatError("variable-length quantity longer than 4 bytes");
}

std::uint32_t tempo_from_payload(std::span<const std::uint8_t> payload) {
  if (payload.size() != 3) {
    throw FormatError("Set Tempo payload must be 3 bytes");
  }
  return (std::uint32_t{payload[0]} << 16) | (std::uint32_t{payload[1]} << 8) |
         std::uint32_t{payload[2]};
}

}  // namespace smf

namespace {

std::uint32_t read_be(std::span<const std::uint8_t> bytes, std::size_t pos,
                      int n) {
  if (pos + n > bytes.size()) throw FormatError("unexpected end of file");
  std::uint32_t v = 0;
  for (int i = 0; i < n; ++i) v = (v << 8) | bytes[pos + i];
  return v;
}

struct RawNote {
  std::uint64_t on_tick;
  std::uint64_t off_tick;
  int pitch;
};

struct TempoChange {
  std::uint64_t tick;
  std::uint32_t usec_per_quarter;
};

// Piecewise-constant tempo map integrated over ticks.
class TempoMap {
 public:
  TempoMap(std::vector<TempoChange> changes, int ppqn) : ppqn_(ppqn) {
    std::stable_sort(changes.begin(), changes.end(),
                     [](const auto& a, const auto& b) { return a.tick < b.tick; });
    segments_.push_back({0, 0.0, 500000});
    for (const auto& c : changes) {
      Segment& last = segments_.back();
      double start = last.start_sec + seconds_in(last, c.tick - last.tick);
      if (c.tick == last.tick) {
        last.usec_per_quarter = c.usec_per_quarter;
      } else {
        segments_.push_back({c.tick, start, c.usec_per_quarter});
      }
    }
  }

  double seconds_at(std::uint64_t tick) const {
    auto it = std::upper_bound(
        segments_.begin(), segments_.end(), tick,
        [](std::uint64_t t, const Segment& s) { return t < s.tick; });
    const Segment& s = *std::prev(it);
    return s.start_sec + seconds_in(s, tick - s.tick);
  }

 private:
  struct Segment {
    std::uint64_t tick;
    double start_sec;
    std::uint32_t usec_per_quarter;
  };

  double seconds_in(const Segment& s, std::uint64_t ticks) const {
    return static_cast<double>(ticks) * s.usec_per_quarter /
           (1e6 * static_cast<double>(ppqn_));
  }

  int ppqn_;
  std::vector<Segment> segments_;
};

void parse_track(std::span<const std::uint8_t> data, int track_index,
                 std::vector<RawNote>& notes,
                 std::vector<TempoChange>& tempos) {
  std::size_t pos = 0;
  std::uint64_t tick = 0;
  std::uint8_t running = 0;
  // FIFO of pending note-on ticks per (channel, pitch).
  std::map<std::pair<int, int>, std::deque<std::uint64_t>> pending;

  while (pos < data.size()) {
    tick += smf::read_variable_length(data, pos);
    if (pos >= data.size()) throw FormatError("event missing after delta time");
    std::uint8_t status = data[pos];
    if (status & 0x80) {
      ++pos;
    } else {
      if (running == 0) throw FormatError("running status without status byte");
      status = running;
    }

    if (status == 0xFF) {
      if (pos >= data.size()) throw FormatError("truncated meta event");
      std::uint8_t type = data[pos++];
      std::uint32_t len = smf::read_variable_length(data, pos);
      if (pos + len > data.size()) throw FormatError("truncated meta event");
      auto payload = data.subspan(pos, len);
      pos += len;
      if (type == 0x51) tempos.push_back({tick, smf::tempo_from_payload(payload)});
      if (type == 0x2F) break;
      // Meta events cancel running status.
      running = 0;
      continue;
    }
    if (status == 0xF0 || status == 0xF7) {
      std::uint32_t len = smf::read_variable_length(data, pos);
      if (pos + len > data.size()) throw FormatError("truncated sysex event");
      pos += len;
      running = 0;
      continue;
    }
    if (status >= 0xF0) {
      throw FormatError("unexpected system message 0x" +
                        std::to_string(status) + " in track");
    }

    running = status;
    const int kind = status & 0xF0;
    const int channel = status & 0x0F;
    const int n_data = (kind == 0xC0 || kind == 0xD0) ? 1 : 2;
    if (pos + n_data > data.size()) throw FormatError("truncated channel event");
    const std::uint8_t d1 = data[pos];
    const std::uint8_t d2 = n_data == 2 ? data[pos + 1] : 0;
    pos += n_data;

    const bool note_on = kind == 0x90 && d2 > 0;
    const bool note_off = kind == 0x80 || (kind == 0x90 && d2 == 0);
    if (note_on) {
      pending[{channel, d1}].push_back(tick);
    } else if (note_off) {
      auto it = pending.find({channel, d1});
      // Unmatched note-offs are ignored.
      if (it == pending.end() || it->second.empty()) continue;
      notes.push_back({it->second.front(), tick, d1});
      it->second.pop_front();
    }
  }

  std::string dangling;
  for (const auto& [key, ticks] : pending) {
    for (std::size_t i = 0; i < ticks.size(); ++i) {
      if (!dangling.empty()) dangling += ", ";
      dangling += std::to_string(key.second);
    }
  }
  if (!dangling.empty()) {
    throw ValidationError("track " + std::to_string(track_index) +
                          ": note-on without note-off for pitch(es) " +
                          dangling);
  }
}

}  // namespace

Annotation parse_midi(std::span<const std::uint8_t> bytes,
                      const PitchMapping& mapping) {
  if (bytes.size() < 14 || bytes[0] != 'M' || bytes[1] != 'T' ||
      bytes[2] != 'h' || bytes[3] != 'd') {
    throw FormatError("missing MThd header");
  }
  const std::uint32_t header_len = read_be(bytes, 4, 4);
  if (header_len < 6) throw FormatError("MThd length must be at least 6");
  const std::uint32_t format = read_be(bytes, 8, 2);
  const std::uint32_t num_tracks = read_be(bytes, 10, 2);
  const std::uint32_t division = read_be(bytes, 12, 2);
  if (format == 2) throw UnsupportedError("MIDI format 2 is not supported");
  if (format > 2) throw FormatError("unknown MIDI format " + std::to_string(format));
  if (division & 0x8000) throw UnsupportedError("SMPTE time division is not supported");
  if (division == 0) throw FormatError("time division of zero ticks");

  std::vector<RawNote> notes;
  std::vector<TempoChange> tempos;
  std::size_t pos = 8 + header_len;
  for (std::uint32_t track = 0; track < num_tracks; ++track) {
    if (pos + 8 > bytes.size()) {
      throw FormatError("missing track " + std::to_string(track));
    }
    if (bytes[pos] != 'M' || bytes[pos + 1] != 'T' || bytes[pos + 2] != 'r' ||
        bytes[pos + 3] != 'k') {
      throw FormatError("expected MTrk chunk for track " + std::to_string(track));
    }
    const std::uint32_t len = read_be(bytes, pos + 4, 4);
    if (pos + 8 + len > bytes.size()) {
      throw FormatError("track " + std::to_string(track) + " is truncated");
    }
    parse_track(bytes.subspan(pos + 8, len), static_cast<int>(track), notes,
                tempos);
    pos += 8 + len;
  }

  const TempoMap tempo_map(std::move(tempos), static_cast<int>(division));
  std::vector<NoteEvent> events;
  events.reserve(notes.size());
  for (const auto& n : notes) {
    if (!mapping.contains(n.pitch)) {
      throw RangeError("pitch " + std::to_string(n.pitch) +
                       " outside the label range");
    }
    const double on = tempo_map.seconds_at(n.on_tick);
    const double off = tempo_map.seconds_at(n.off_tick);
    if (off <= on) {
      throw ValidationError("zero-length note at tick " +
                            std::to_string(n.on_tick) + " for pitch " +
                            std::to_string(n.pitch));
    }
    events.push_back({on, off, mapping.label_for(n.pitch)});
  }
  return Annotation::from_events(std::move(events), mapping.num_labels);
}

Annotation load_annotation(const std::string& path,
                           const PitchMapping& mapping) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open " + path);
  std::string content((std::istreambuf_iterator<char>(in)),
                      std::istreambuf_iterator<char>());
  const std::string ext = std::filesystem::path(path).extension().string();
  try {
    if (ext == ".mid" || ext == ".midi" || ext == ".MID") {
      auto data = reinterpret_cast<const std::uint8_t*>(content.data());
      return parse_midi({data, content.size()}, mapping);
    }
    return parse_tsv(content, mapping);
  } catch (const FormatError& e) {
    throw FormatError(path + ": " + e.what());
  } catch (const RangeError& e) {
    throw RangeError(path + ": " + e.what());
  } catch (const ValidationError& e) {
    throw ValidationError(path + ": " + e.what());
  } catch (const UnsupportedError& e) {
    throw UnsupportedError(path + ": " + e.what());
  }
}

}  // namespace framelabel
