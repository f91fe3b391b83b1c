#include "framelabel/label_matrix.h"

#include <algorithm>
#include <cmath>
#include <string>

#include "framelabel/errors.h"

namespace framelabel {

FrameGrid::FrameGrid(double fps, long num_frames)
    : fps_(fps), dt_(1.0 / fps), num_frames_(num_frames) {
  if (!(fps > 0.0) || !std::isfinite(fps)) {
    throw ContractError("frame rate must be positive, got " +
                        std::to_string(fps));
  }
  if (num_frames < 1) {
    throw ContractError("frame grid needs at least one frame");
  }
}

FrameGrid FrameGrid::covering(double fps, double duration_sec) {
  if (!(fps > 0.0)) throw ContractError("frame rate must be positive");
  const double frames = std::ceil(duration_sec * fps);
  return FrameGrid(fps, std::max(1L, static_cast<long>(frames)));
}

LabelMatrix::LabelMatrix(FrameGrid grid, int num_labels)
    : grid_(grid), num_labels_(num_labels) {
  if (num_labels < 1) throw ContractError("label matrix needs at least one label");
  cells_.assign(static_cast<std::size_t>(grid.num_frames()) *
                    static_cast<std::size_t>(num_labels),
                0);
}

std::size_t LabelMatrix::count_active() const {
  return static_cast<std::size_t>(std::count(cells_.begin(), cells_.end(), 1));
}

}  // namespace framelabel
