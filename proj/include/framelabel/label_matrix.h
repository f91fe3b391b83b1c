#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

namespace framelabel {

// A discretisation of time into num_frames frames of length dt = 1/fps.
class FrameGrid {
 public:
  FrameGrid(double fps, long num_frames);

  // Smallest grid at `fps` whose frames cover [0, duration_sec); at least one
  // frame.
  static FrameGrid covering(double fps, double duration_sec);

  double fps() const { return fps_; }
  double dt() const { return dt_; }
  long num_frames() const { return num_frames_; }
  double duration_sec() const { return static_cast<double>(num_frames_) * dt_; }

  bool operator==(const FrameGrid&) const = default;

 private:
  double fps_;
  double dt_;
  long num_frames_;
};

// Binary T x K frame-by-label indicator matrix, row-major.
class LabelMatrix {
 public:
  LabelMatrix(FrameGrid grid, int num_labels);

  const FrameGrid& grid() const { return grid_; }
  long num_frames() const { return grid_.num_frames(); }
  int num_labels() const { return num_labels_; }

  bool at(long t, int k) const { return cells_[index(t, k)] != 0; }
  void set(long t, int k, bool value = true) {
    cells_[index(t, k)] = value ? 1 : 0;
  }
  const std::uint8_t* row(long t) const { return &cells_[index(t, 0)]; }
  const std::vector<std::uint8_t>& cells() const { return cells_; }
  std::size_t count_active() const;

  bool operator==(const LabelMatrix&) const = default;

 private:
  std::size_t index(long t, int k) const {
    return static_cast<std::size_t>(t) * static_cast<std::size_t>(num_labels_) +
           static_cast<std::size_t>(k);
  }

  FrameGrid grid_;
  int num_labels_;
  std::vector<std::uint8_t> cells_;
};

}  // namespace framelabel
