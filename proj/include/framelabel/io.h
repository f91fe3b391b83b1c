#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

#include "json.hpp"

#include "framelabel/label_matrix.h"
#include "framelabel/metrics.h"
#include "framelabel/quantize.h"
#include "framelabel/synth.h"
#include "framelabel/trainer.h"

namespace framelabel::io {

// Metadata stored next to a label matrix CSV.
struct LabelMatrixMeta {
  double fps = 0.0;
  long num_frames = 0;
  int num_labels = 0;
  std::string labeling_function;  // "a".."f", or "model" for predictions
  std::uint64_t seed = 0;
};

// T lines of K comma-separated 0/1 values.
std::string label_matrix_csv(const LabelMatrix& m);
// One-line JSON object terminated by a newline.
std::string label_matrix_sidecar(const LabelMatrixMeta& meta);
LabelMatrixMeta parse_label_matrix_sidecar(std::string_view text);
LabelMatrix parse_label_matrix_csv(std::string_view text,
                                   const LabelMatrixMeta& meta);

std::string feature_matrix_csv(const FeatureMatrix& f);
std::string feature_matrix_sidecar(const FeatureMatrix& f);

// "<dir>/<stem>.json" for "<dir>/<stem>.csv".
std::string sidecar_path(const std::string& csv_path);

// Reads a label matrix CSV together with its sidecar. A missing or
// incomplete sidecar raises ContractError naming the sidecar path.
std::pair<LabelMatrix, LabelMatrixMeta> load_label_matrix(
    const std::string& csv_path);

std::string read_file(const std::string& path);
// Writes via a temporary file in the same directory, then renames.
void write_file_atomic(const std::string& path, std::string_view content);
std::string sha256_hex(std::string_view bytes);

// Fixed-precision formatting shared by every CSV writer.
std::string format_real(double v);

// Header and row of the evaluation CSV.
std::string eval_csv_header();
std::string eval_csv_row(const std::string& piece, const std::string& fn,
                         std::uint64_t seed, double fps, const EvalResult& r);

std::string experiment_csv(const ExperimentTable& table);
nlohmann::ordered_json experiment_summary(const ExperimentTable& table);

nlohmann::ordered_json to_json(const SynthConfig& cfg);
nlohmann::ordered_json to_json(const TrainConfig& cfg);
nlohmann::ordered_json to_json(const ExperimentConfig& cfg);
nlohmann::ordered_json to_json(const DisagreementStats& stats);
// Missing keys keep the values already in `cfg`; unknown keys raise
// FormatError.
void merge_json(const nlohmann::json& j, SynthConfig& cfg);
void merge_json(const nlohmann::json& j, TrainConfig& cfg);
void merge_json(const nlohmann::json& j, ExperimentConfig& cfg);

}  // namespace framelabel::io
