#include "framelabel/io.h"

#include <openssl/evp.h>

#include <cerrno>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <system_error>

#include "framelabel/errors.h"

namespace framelabel::io {

namespace fs = std::filesystem;
using nlohmann::json;
using nlohmann::ordered_json;

std::string format_real(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

std::string label_matrix_csv(const LabelMatrix& m) {
  std::string out;
  out.reserve(static_cast<std::size_t>(m.num_frames()) * m.num_labels() * 2);
  for (long t = 0; t < m.num_frames(); ++t) {
    const std::uint8_t* row = m.row(t);
    for (int k = 0; k < m.num_labels(); ++k) {
      if (k) out += ',';
      out += row[k] ? '1' : '0';
    }
    out += '\n';
  }
  return out;
}

std::string label_matrix_sidecar(const LabelMatrixMeta& meta) {
  ordered_json j;
  j["fps"] = meta.fps;
  j["num_frames"] = meta.num_frames;
  j["num_labels"] = meta.num_labels;
  j["labeling_function"] = meta.labeling_function;
  j["seed"] = meta.seed;
  return j.dump() + "\n";
}

LabelMatrixMeta parse_label_matrix_sidecar(std::string_view text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw FormatError(std::string("sidecar is not valid JSON: ") + e.what());
  }
  LabelMatrixMeta meta;
  try {
    meta.fps = j.at("fps").get<double>();
    meta.num_frames = j.at("num_frames").get<long>();
    meta.num_labels = j.at("num_labels").get<int>();
    meta.labeling_function = j.value("labeling_function", std::string{});
    meta.seed = j.value("seed", std::uint64_t{0});
  } catch (const json::exception& e) {
    throw ContractError(std::string("sidecar lacks frame metadata: ") + e.what());
  }
  return meta;
}

LabelMatrix parse_label_matrix_csv(std::string_view text,
                                   const LabelMatrixMeta& meta) {
  LabelMatrix m(FrameGrid(meta.fps, meta.num_frames), meta.num_labels);
  long t = 0;
  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(pos, end - pos);
    pos = end + 1;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.empty()) continue;
    if (t >= meta.num_frames) {
      throw FormatError("label matrix has more rows than the sidecar's " +
                        std::to_string(meta.num_frames));
    }
    int k = 0;
    for (std::size_t i = 0; i < line.size(); i += 2, ++k) {
      if (k >= meta.num_labels || (line[i] != '0' && line[i] != '1') ||
          (i + 1 < line.size() && line[i + 1] != ',')) {
        throw FormatError("row " + std::to_string(t + 1) +
                          ": expected " + std::to_string(meta.num_labels) +
                          " comma-separated 0/1 values");
      }
      if (line[i] == '1') m.set(t, k);
    }
    if (k != meta.num_labels) {
      throw FormatError("row " + std::to_string(t + 1) + ": expected " +
                        std::to_string(meta.num_labels) + " columns, got " +
                        std::to_string(k));
    }
    ++t;
  }
  if (t != meta.num_frames) {
    throw FormatError("label matrix has " + std::to_string(t) +
                      " rows, sidecar says " + std::to_string(meta.num_frames));
  }
  return m;
}

std::string feature_matrix_csv(const FeatureMatrix& f) {
  std::string out;
  for (long t = 0; t < f.num_frames(); ++t) {
    auto row = f.row(t);
    for (int b = 0; b < f.dim(); ++b) {
      if (b) out += ',';
      out += format_real(row[b]);
    }
    out += '\n';
  }
  return out;
}

std::string feature_matrix_sidecar(const FeatureMatrix& f) {
  ordered_json j;
  j["fps"] = f.grid().fps();
  j["num_frames"] = f.num_frames();
  j["feature_dim"] = f.dim();
  return j.dump() + "\n";
}

std::string sidecar_path(const std::string& csv_path) {
  fs::path p(csv_path);
  p.replace_extension(".json");
  return p.string();
}

std::pair<LabelMatrix, LabelMatrixMeta> load_label_matrix(
    const std::string& csv_path) {
  const std::string side = sidecar_path(csv_path);
  if (!fs::exists(side)) {
    throw ContractError("missing frame-rate metadata: sidecar " + side +
                        " not found");
  }
  LabelMatrixMeta meta;
  try {
    meta = parse_label_matrix_sidecar(read_file(side));
  } catch (const ContractError& e) {
    throw ContractError(side + ": " + e.what());
  } catch (const FormatError& e) {
    throw FormatError(side + ": " + e.what());
  }
  try {
    return {parse_label_matrix_csv(read_file(csv_path), meta), meta};
  } catch (const FormatError& e) {
    throw FormatError(csv_path + ": " + e.what());
  }
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open " + path);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_file_atomic(const std::string& path, std::string_view content) {
  const fs::path target(path);
  if (target.has_parent_path()) fs::create_directories(target.parent_path());
  fs::path tmp = target;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw FormatError("cannot write " + tmp.string());
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    out.flush();
    if (!out) throw FormatError("failed writing " + tmp.string());
  }
  std::error_code ec;
  fs::rename(tmp, target, ec);
  if (ec) {
    fs::remove(tmp);
    throw FormatError("cannot rename onto " + path + ": " + ec.message());
  }
}

std::string sha256_hex(std::string_view bytes) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), digest, &len, EVP_sha256(),
                 nullptr) != 1) {
    throw Error("SHA-256 computation failed");
  }
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out;
  for (unsigned int i = 0; i < len; ++i) {
    out += kHex[digest[i] >> 4];
    out += kHex[digest[i] & 0xF];
  }
  return out;
}

std::string eval_csv_header() {
  return "piece,fn,seed,fps,tp,fp,fn,precision,recall,fmeasure\n";
}

std::string eval_csv_row(const std::string& piece, const std::string& fn,
                         std::uint64_t seed, double fps, const EvalResult& r) {
  return piece + "," + fn + "," + std::to_string(seed) + "," +
         format_real(fps) + "," + std::to_string(r.counts.tp) + "," +
         std::to_string(r.counts.fp) + "," + std::to_string(r.counts.fn) +
         "," + format_real(r.precision) + "," + format_real(r.recall) + "," +
         format_real(r.fmeasure) + "\n";
}

std::string experiment_csv(const ExperimentTable& table) {
  std::string out = "fn,seed,split,precision,recall,fmeasure\n";
  for (const auto& row : table.rows) {
    out += std::string(1, to_char(row.fn)) + "," + std::to_string(row.seed) +
           "," + row.split + "," + format_real(row.result.precision) + "," +
           format_real(row.result.recall) + "," +
           format_real(row.result.fmeasure) + "\n";
  }
  return out;
}

ordered_json experiment_summary(const ExperimentTable& table) {
  ordered_json summary = ordered_json::object();
  for (const auto& [fn, mean] : table.mean_fmeasure()) {
    ordered_json per_seed = ordered_json::array();
    for (const auto& row : table.rows) {
      if (row.fn == fn) per_seed.push_back(row.result.fmeasure);
    }
    summary[std::string(1, to_char(fn))] = {{"mean_f", mean},
                                            {"per_seed_f", per_seed}};
  }
  return summary;
}

ordered_json to_json(const SynthConfig& cfg) {
  return {{"num_pieces", cfg.num_pieces},
          {"piece_duration_sec", cfg.piece_duration_sec},
          {"num_labels", cfg.num_labels},
          {"note_rate_per_sec", cfg.note_rate_per_sec},
          {"min_duration_sec", cfg.min_duration_sec},
          {"max_duration_sec", cfg.max_duration_sec},
          {"feature_dim", cfg.feature_dim},
          {"noise_sigma", cfg.noise_sigma},
          {"harmonics", cfg.harmonics},
          {"seed", cfg.seed}};
}

ordered_json to_json(const TrainConfig& cfg) {
  ordered_json schedule = ordered_json::array();
  for (const auto& [epoch, mult] : cfg.lr_schedule) {
    schedule.push_back({epoch, mult});
  }
  return {{"batch_size", cfg.batch_size},
          {"learning_rate", cfg.learning_rate},
          {"momentum", cfg.momentum},
          {"lr_schedule", schedule},
          {"epochs", cfg.epochs},
          {"context", cfg.context},
          {"threshold", cfg.threshold},
          {"seed", cfg.seed}};
}

ordered_json to_json(const ExperimentConfig& cfg) {
  ordered_json fns = ordered_json::array();
  for (auto fn : cfg.fns) fns.push_back(std::string(1, to_char(fn)));
  return {{"synth", to_json(cfg.synth)},
          {"train", to_json(cfg.train)},
          {"fns", fns},
          {"seeds", cfg.seeds},
          {"train_fps", cfg.train_fps},
          {"ref_fps", cfg.protocol.ref_fps},
          {"window_sec", cfg.protocol.window_sec}};
}

ordered_json to_json(const DisagreementStats& stats) {
  auto histogram = [](const std::map<long, std::uint64_t>& h) {
    ordered_json j = ordered_json::object();
    for (const auto& [shift, count] : h) j[std::to_string(shift)] = count;
    return j;
  };
  return {{"differing_frames", stats.differing_frames},
          {"frame_rate_of_disagreement", stats.rate},
          {"onset_shift_histogram", histogram(stats.onset_shift_histogram)},
          {"offset_shift_histogram", histogram(stats.offset_shift_histogram)},
          {"unshifted_onsets", stats.unshifted_onsets},
          {"unshifted_offsets", stats.unshifted_offsets}};
}

namespace {

template <typename T>
void take(const json& j, const char* key, T& field) {
  if (j.contains(key)) field = j.at(key).get<T>();
}

void reject_unknown(const json& j, std::initializer_list<const char*> keys,
                    const char* section) {
  for (const auto& item : j.items()) {
    bool known = false;
    for (const char* k : keys) known = known || item.key() == k;
    if (!known) {
      throw FormatError(std::string("unknown key '") + item.key() + "' in " +
                        section + " config");
    }
  }
}

}  // namespace

void merge_json(const json& j, SynthConfig& cfg) {
  reject_unknown(j,
                 {"num_pieces", "piece_duration_sec", "num_labels",
                  "note_rate_per_sec", "min_duration_sec", "max_duration_sec",
                  "feature_dim", "noise_sigma", "harmonics", "seed"},
                 "synth");
  try {
    take(j, "num_pieces", cfg.num_pieces);
    take(j, "piece_duration_sec", cfg.piece_duration_sec);
    take(j, "num_labels", cfg.num_labels);
    take(j, "note_rate_per_sec", cfg.note_rate_per_sec);
    take(j, "min_duration_sec", cfg.min_duration_sec);
    take(j, "max_duration_sec", cfg.max_duration_sec);
    take(j, "feature_dim", cfg.feature_dim);
    take(j, "noise_sigma", cfg.noise_sigma);
    take(j, "harmonics", cfg.harmonics);
    take(j, "seed", cfg.seed);
  } catch (const json::exception& e) {
    throw FormatError(std::string("synth config: ") + e.what());
  }
}

void merge_json(const json& j, TrainConfig& cfg) {
  reject_unknown(j,
                 {"batch_size", "learning_rate", "momentum", "lr_schedule",
                  "epochs", "context", "threshold", "seed"},
                 "train");
  try {
    take(j, "batch_size", cfg.batch_size);
    take(j, "learning_rate", cfg.learning_rate);
    take(j, "momentum", cfg.momentum);
    const bool epochs_given = j.contains("epochs");
    take(j, "epochs", cfg.epochs);
    if (j.contains("lr_schedule")) {
      cfg.lr_schedule.clear();
      for (const auto& entry : j.at("lr_schedule")) {
        cfg.lr_schedule.emplace_back(entry.at(0).get<int>(),
                                     entry.at(1).get<double>());
      }
    } else if (epochs_given) {
      cfg.lr_schedule = TrainConfig::step_schedule(cfg.epochs);
    }
    take(j, "context", cfg.context);
    take(j, "threshold", cfg.threshold);
    take(j, "seed", cfg.seed);
  } catch (const json::exception& e) {
    throw FormatError(std::string("train config: ") + e.what());
  }
}

void merge_json(const json& j, ExperimentConfig& cfg) {
  reject_unknown(j,
                 {"synth", "train", "fns", "seeds", "train_fps", "ref_fps",
                  "window_sec"},
                 "experiment");
  try {
    if (j.contains("synth")) merge_json(j.at("synth"), cfg.synth);
    if (j.contains("train")) merge_json(j.at("train"), cfg.train);
    if (j.contains("fns")) {
      cfg.fns.clear();
      for (const auto& name : j.at("fns")) {
        auto fn = labeling_function_from_string(name.get<std::string>());
        if (!fn) {
          throw FormatError("unknown labeling function '" +
                            name.get<std::string>() + "'");
        }
        cfg.fns.push_back(*fn);
      }
    }
    take(j, "seeds", cfg.seeds);
    take(j, "train_fps", cfg.train_fps);
    take(j, "ref_fps", cfg.protocol.ref_fps);
    take(j, "window_sec", cfg.protocol.window_sec);
  } catch (const json::exception& e) {
    throw FormatError(std::string("experiment config: ") + e.what());
  }
}

}  // namespace framelabel::io
