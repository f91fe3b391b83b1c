#include "framelabel/cli.h"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>

#include "CLI11.hpp"
#include "framelabel/annotation.h"
#include "framelabel/errors.h"
#include "framelabel/io.h"
#include "framelabel/metrics.h"
#include "framelabel/quantize.h"
#include "framelabel/synth.h"
#include "framelabel/trainer.h"
#include "json.hpp"

namespace framelabel::cli {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;
using nlohmann::ordered_json;

class UsageError : public Error {
 public:
  using Error::Error;
};

std::string exact(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

// Collects provenance for one command and writes it next to the outputs.
class Manifest {
 public:
  explicit Manifest(std::string command) : command_(std::move(command)) {}

  void set_args(std::vector<std::string> args) { args_ = std::move(args); }
  void set_config(ordered_json config) { config_ = std::move(config); }
  void add_seed(std::uint64_t seed) { seeds_.push_back(seed); }
  void add_input(const std::string& path, const std::string& content) {
    inputs_[path] = io::sha256_hex(content);
  }
  void add_output(const std::string& path, const std::string& content) {
    io::write_file_atomic(path, content);
    outputs_[fs::path(path).filename().string()] = io::sha256_hex(content);
  }

  void write(const std::string& path) const {
    ordered_json j;
    j["tool"] = "framelabel";
    j["version"] = kToolVersion;
    j["command"] = command_;
    j["args"] = args_;
    j["config"] = config_;
    j["seeds"] = seeds_;
    j["inputs"] = inputs_;
    j["outputs"] = outputs_;
    io::write_file_atomic(path, j.dump(2) + "\n");
  }

 private:
  std::string command_;
  std::vector<std::string> args_;
  ordered_json config_ = ordered_json::object();
  std::vector<std::uint64_t> seeds_;
  std::map<std::string, std::string> inputs_;
  std::map<std::string, std::string> outputs_;
};

LabelingFunction parse_fn(const std::string& name) {
  auto fn = labeling_function_from_string(name);
  if (!fn) {
    throw UsageError("unknown labeling function '" + name +
                     "' (expected one of a, b, c, d, e, f)");
  }
  return *fn;
}

std::string fn_name(LabelingFunction fn) { return std::string(1, to_char(fn)); }

PitchMapping mapping_from(int pitch_offset, int num_labels) {
  if (num_labels < 1) throw UsageError("--num-labels must be >= 1");
  return {pitch_offset, num_labels};
}

// ---------------------------------------------------------------------------

struct RasterizeOptions {
  std::string input;
  double fps = 0.0;
  std::string fn;
  std::optional<std::uint64_t> seed;
  std::string out;
  long frames = 0;
  int pitch_offset = 21;
  int num_labels = 88;
};

int cmd_rasterize(const RasterizeOptions& o, std::ostream& out) {
  const LabelingFunction fn = parse_fn(o.fn);
  if (is_random(fn) && !o.seed) {
    throw UsageError("--seed is required for labeling function " + o.fn);
  }
  if (!(o.fps > 0.0)) throw UsageError("--fps must be positive");
  const std::uint64_t seed = o.seed.value_or(0);
  const std::string content = io::read_file(o.input);
  const Annotation a =
      load_annotation(o.input, mapping_from(o.pitch_offset, o.num_labels));
  const FrameGrid grid = o.frames > 0 ? FrameGrid(o.fps, o.frames)
                                      : FrameGrid::covering(o.fps, a.duration_sec());
  const LabelMatrix m = rasterize(a, grid, fn, seed);

  Manifest manifest("rasterize");
  std::vector<std::string> args{"rasterize", o.input,  "--fps", exact(o.fps),
                                "--fn",      fn_name(fn)};
  if (o.seed) {
    args.insert(args.end(), {"--seed", std::to_string(seed)});
    manifest.add_seed(seed);
  }
  if (o.frames > 0) args.insert(args.end(), {"--frames", std::to_string(o.frames)});
  args.insert(args.end(), {"--pitch-offset", std::to_string(o.pitch_offset),
                           "--num-labels", std::to_string(o.num_labels)});
  manifest.set_args(args);
  manifest.set_config({{"input", o.input},
                       {"fps", o.fps},
                       {"num_frames", grid.num_frames()},
                       {"labeling_function", fn_name(fn)},
                       {"seed", seed},
                       {"pitch_offset", o.pitch_offset},
                       {"num_labels", o.num_labels}});
  manifest.add_input(o.input, content);
  manifest.add_output(o.out + ".csv", io::label_matrix_csv(m));
  manifest.add_output(o.out + ".json",
                      io::label_matrix_sidecar({o.fps, grid.num_frames(),
                                                m.num_labels(), fn_name(fn),
                                                seed}));
  manifest.write(o.out + ".manifest.json");
  out << "wrote " << o.out << ".csv (" << grid.num_frames() << " x "
      << m.num_labels() << ", " << m.count_active() << " active cells)\n";
  return kSuccess;
}

// ---------------------------------------------------------------------------

struct EvalOptions {
  std::vector<std::string> preds;
  std::string ref;
  std::string annotation;
  std::string fn = "a";
  std::uint64_t seed = 0;
  double window_sec = 30.0;
  double ref_fps = 100.0;
  std::string out;
  int pitch_offset = 21;
  int num_labels = 88;
};

int cmd_eval(const EvalOptions& o, std::ostream& out) {
  if (!(o.window_sec > 0.0)) throw UsageError("--window-sec must be positive");
  if (!(o.ref_fps > 0.0)) throw UsageError("--ref-fps must be positive");
  if (o.ref.empty() == o.annotation.empty()) {
    throw UsageError("give exactly one of --ref or --annotation");
  }
  Manifest manifest("eval");
  std::vector<std::string> args{"eval"};
  for (const auto& p : o.preds) args.insert(args.end(), {"--pred", p});

  std::optional<LabelMatrix> reference;
  std::string ref_name;
  if (!o.ref.empty()) {
    manifest.add_input(o.ref, io::read_file(o.ref));
    reference = io::load_label_matrix(o.ref).first;
    ref_name = o.ref;
    args.insert(args.end(), {"--ref", o.ref});
  } else {
    const LabelingFunction fn = parse_fn(o.fn);
    manifest.add_input(o.annotation, io::read_file(o.annotation));
    const Annotation a =
        load_annotation(o.annotation, mapping_from(o.pitch_offset, o.num_labels));
    EvalProtocol protocol{o.ref_fps, o.window_sec, fn, o.seed};
    reference = reference_labels(a, protocol);
    ref_name = o.annotation;
    args.insert(args.end(),
                {"--annotation", o.annotation, "--fn", fn_name(fn), "--seed",
                 std::to_string(o.seed), "--ref-fps", exact(o.ref_fps),
                 "--pitch-offset", std::to_string(o.pitch_offset),
                 "--num-labels", std::to_string(o.num_labels)});
    manifest.add_seed(o.seed);
  }
  args.insert(args.end(), {"--window-sec", exact(o.window_sec)});
  manifest.set_args(args);
  manifest.set_config({{"reference", ref_name},
                       {"ref_fps", reference->grid().fps()},
                       {"window_sec", o.window_sec},
                       {"preds", o.preds}});

  std::string csv = io::eval_csv_header();
  std::vector<std::pair<std::string, EvalResult>> results;
  for (const auto& path : o.preds) {
    manifest.add_input(path, io::read_file(path));
    const auto [pred, meta] = io::load_label_matrix(path);
    const EvalResult r = prf(protocol_counts(pred, *reference, o.window_sec));
    csv += io::eval_csv_row(fs::path(path).stem().string(),
                            meta.labeling_function, meta.seed, meta.fps, r);
    results.emplace_back(meta.labeling_function, r);
  }

  ordered_json summary = ordered_json::object();
  std::map<std::string, std::vector<double>> by_fn;
  std::vector<std::string> order;
  for (const auto& [fn, r] : results) {
    if (!by_fn.count(fn)) order.push_back(fn);
    by_fn[fn].push_back(r.fmeasure);
  }
  for (const auto& fn : order) {
    double sum = 0.0;
    for (double f : by_fn[fn]) sum += f;
    summary[fn] = {{"mean_f", sum / by_fn[fn].size()}, {"per_piece_f", by_fn[fn]}};
  }

  if (o.out.empty()) {
    out << csv;
    return kSuccess;
  }
  manifest.add_output(o.out + ".csv", csv);
  manifest.add_output(o.out + ".summary.json", summary.dump(2) + "\n");
  manifest.write(o.out + ".manifest.json");
  out << csv;
  return kSuccess;
}

// ---------------------------------------------------------------------------

struct DisagreeOptions {
  std::string input;
  double fps = 100.0;
  std::string fn_a = "a";
  std::string fn_b;
  std::optional<std::uint64_t> seed_a;
  std::optional<std::uint64_t> seed_b;
  long frames = 0;
  std::string out;
  int pitch_offset = 21;
  int num_labels = 88;
};

int cmd_disagree(const DisagreeOptions& o, std::ostream& out) {
  const LabelingFunction fa = parse_fn(o.fn_a);
  const LabelingFunction fb = parse_fn(o.fn_b);
  if (is_random(fa) && !o.seed_a) throw UsageError("--seed-a is required for fn " + o.fn_a);
  if (is_random(fb) && !o.seed_b) throw UsageError("--seed-b is required for fn " + o.fn_b);
  if (!(o.fps > 0.0)) throw UsageError("--fps must be positive");
  const std::string content = io::read_file(o.input);
  const Annotation a =
      load_annotation(o.input, mapping_from(o.pitch_offset, o.num_labels));
  const FrameGrid grid = o.frames > 0 ? FrameGrid(o.fps, o.frames)
                                      : FrameGrid::covering(o.fps, a.duration_sec());
  RasterRecord rec_a;
  RasterRecord rec_b;
  const LabelMatrix ma = rasterize(a, grid, fa, o.seed_a.value_or(0), &rec_a);
  const LabelMatrix mb = rasterize(a, grid, fb, o.seed_b.value_or(0), &rec_b);
  const DisagreementStats stats = disagreement(ma, mb, a, rec_a, rec_b);

  ordered_json j = io::to_json(stats);
  const std::string text = j.dump(2) + "\n";
  if (o.out.empty()) {
    out << text;
    return kSuccess;
  }
  Manifest manifest("disagree");
  std::vector<std::string> args{"disagree", o.input, "--fps", exact(o.fps),
                                "--fn-a", fn_name(fa), "--fn-b", fn_name(fb)};
  if (o.seed_a) args.insert(args.end(), {"--seed-a", std::to_string(*o.seed_a)});
  if (o.seed_b) args.insert(args.end(), {"--seed-b", std::to_string(*o.seed_b)});
  if (o.frames > 0) args.insert(args.end(), {"--frames", std::to_string(o.frames)});
  args.insert(args.end(), {"--pitch-offset", std::to_string(o.pitch_offset),
                           "--num-labels", std::to_string(o.num_labels)});
  manifest.set_args(args);
  manifest.set_config({{"input", o.input},
                       {"fps", o.fps},
                       {"num_frames", grid.num_frames()},
                       {"fn_a", fn_name(fa)},
                       {"fn_b", fn_name(fb)},
                       {"seed_a", o.seed_a.value_or(0)},
                       {"seed_b", o.seed_b.value_or(0)}});
  if (o.seed_a) manifest.add_seed(*o.seed_a);
  if (o.seed_b) manifest.add_seed(*o.seed_b);
  manifest.add_input(o.input, content);
  manifest.add_output(o.out + ".json", text);
  manifest.write(o.out + ".manifest.json");
  out << text;
  return kSuccess;
}

// ---------------------------------------------------------------------------

// Loads a config file; a manifest's embedded "config" is used when present.
json load_config(const std::string& path, std::string& content) {
  content = io::read_file(path);
  json j;
  try {
    j = json::parse(content);
  } catch (const json::exception& e) {
    throw FormatError(path + ": invalid JSON: " + e.what());
  }
  if (j.contains("config") && j.contains("command")) return j.at("config");
  return j;
}

std::vector<std::uint64_t> parse_seeds(const std::string& list) {
  std::vector<std::uint64_t> seeds;
  std::stringstream ss(list);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    try {
      std::size_t used = 0;
      seeds.push_back(std::stoull(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw UsageError("invalid seed '" + item + "'");
    }
  }
  if (seeds.empty()) throw UsageError("no seeds given");
  return seeds;
}

std::vector<LabelingFunction> parse_fns(const std::string& list) {
  std::vector<LabelingFunction> fns;
  std::stringstream ss(list);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) fns.push_back(parse_fn(item));
  }
  if (fns.empty()) throw UsageError("no labeling functions given");
  return fns;
}

struct SynthOptions {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<int> pieces;
  double fps = 31.25;
  std::string out_dir;
};

int cmd_synth(const SynthOptions& o, std::ostream& out) {
  if (!(o.fps > 0.0)) throw UsageError("--fps must be positive");
  SynthConfig cfg;
  Manifest manifest("synth");
  std::vector<std::string> args{"synth"};
  if (!o.config.empty()) {
    std::string content;
    json j = load_config(o.config, content);
    if (j.contains("synth")) j = j.at("synth");
    io::merge_json(j, cfg);
    manifest.add_input(o.config, content);
    args.insert(args.end(), {"--config", o.config});
  }
  if (o.seed) cfg.seed = *o.seed;
  if (o.pieces) cfg.num_pieces = *o.pieces;
  cfg.check();
  args.insert(args.end(), {"--seed", std::to_string(cfg.seed), "--pieces",
                           std::to_string(cfg.num_pieces), "--fps", exact(o.fps)});
  manifest.set_args(args);
  manifest.set_config({{"synth", io::to_json(cfg)}, {"fps", o.fps}});
  manifest.add_seed(cfg.seed);

  const auto corpus = generate_corpus(cfg);
  ordered_json pieces = ordered_json::array();
  const PitchMapping mapping{21, cfg.num_labels};
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    char id[32];
    std::snprintf(id, sizeof id, "piece_%03zu", i);
    const std::string base = (fs::path(o.out_dir) / id).string();
    const FrameGrid grid = FrameGrid::covering(o.fps, corpus[i].duration_sec());
    const std::uint64_t noise_seed = piece_seed(cfg.seed, i) ^ 0xA5A5A5A5ULL;
    const FeatureMatrix feat = render_features(corpus[i], grid, cfg, noise_seed);
    manifest.add_output(base + ".tsv", to_tsv(corpus[i], mapping));
    manifest.add_output(base + ".features.csv", io::feature_matrix_csv(feat));
    manifest.add_output(base + ".features.json", io::feature_matrix_sidecar(feat));
    pieces.push_back({{"id", id},
                      {"seed", piece_seed(cfg.seed, i)},
                      {"noise_seed", noise_seed},
                      {"annotation", std::string(id) + ".tsv"},
                      {"features", std::string(id) + ".features.csv"},
                      {"num_events", corpus[i].size()}});
  }
  ordered_json corpus_json{{"synth", io::to_json(cfg)},
                           {"fps", o.fps},
                           {"pitch_offset", 21},
                           {"pieces", pieces}};
  const std::string corpus_path = (fs::path(o.out_dir) / "corpus.json").string();
  manifest.add_output(corpus_path, corpus_json.dump(2) + "\n");
  manifest.write((fs::path(o.out_dir) / "manifest.json").string());
  out << "wrote " << corpus.size() << " pieces to " << o.out_dir << "\n";
  return kSuccess;
}

// ---------------------------------------------------------------------------

struct ExperimentOptions {
  std::string config;
  std::string fns;
  std::string seeds;
  std::optional<int> epochs;
  std::optional<int> pieces;
  std::optional<double> train_fps;
  std::optional<double> window_sec;
  std::optional<double> ref_fps;
  int jobs = 1;
  std::string out;
};

int cmd_experiment(const ExperimentOptions& o, std::ostream& out) {
  ExperimentConfig cfg;
  Manifest manifest("experiment");
  if (!o.config.empty()) {
    std::string content;
    io::merge_json(load_config(o.config, content), cfg);
    manifest.add_input(o.config, content);
  }
  if (!o.fns.empty()) cfg.fns = parse_fns(o.fns);
  if (!o.seeds.empty()) cfg.seeds = parse_seeds(o.seeds);
  if (o.epochs) {
    if (*o.epochs < 0) throw UsageError("--epochs must be >= 0");
    cfg.train.epochs = *o.epochs;
    cfg.train.lr_schedule = TrainConfig::step_schedule(*o.epochs);
  }
  if (o.pieces) cfg.synth.num_pieces = *o.pieces;
  if (o.train_fps) cfg.train_fps = *o.train_fps;
  if (o.window_sec) cfg.protocol.window_sec = *o.window_sec;
  if (o.ref_fps) cfg.protocol.ref_fps = *o.ref_fps;
  if (!(cfg.train_fps > 0.0) || !(cfg.protocol.ref_fps > 0.0)) {
    throw UsageError("frame rates must be positive");
  }
  if (!(cfg.protocol.window_sec > 0.0)) throw UsageError("--window-sec must be positive");
  if (o.jobs < 1) throw UsageError("--jobs must be >= 1");
  cfg.jobs = o.jobs;

  const ExperimentTable table = run_sensitivity_experiment(cfg);

  const ordered_json config = io::to_json(cfg);
  manifest.set_config(config);
  manifest.set_args({"experiment", "--config", "<manifest>"});
  for (auto seed : cfg.seeds) manifest.add_seed(seed);
  manifest.add_output(o.out + ".csv", io::experiment_csv(table));
  manifest.add_output(o.out + ".summary.json",
                      io::experiment_summary(table).dump(2) + "\n");
  manifest.write(o.out + ".manifest.json");

  for (const auto& [fn, mean] : table.mean_fmeasure()) {
    out << "fn " << to_char(fn) << ": mean F = " << io::format_real(mean) << "\n";
  }
  return kSuccess;
}

// ---------------------------------------------------------------------------

int cmd_inspect(const std::string& path, int pitch_offset, int num_labels,
                std::ostream& out) {
  const std::string ext = fs::path(path).extension().string();
  if (ext == ".csv") {
    const auto [m, meta] = io::load_label_matrix(path);
    out << "label matrix " << path << "\n"
        << "  frames: " << m.num_frames() << " at " << io::format_real(meta.fps)
        << " fps (" << io::format_real(m.grid().duration_sec()) << " s)\n"
        << "  labels: " << m.num_labels() << "\n"
        << "  labeling function: " << meta.labeling_function
        << ", seed " << meta.seed << "\n"
        << "  active cells: " << m.count_active() << " ("
        << io::format_real(static_cast<double>(m.count_active()) /
                           static_cast<double>(m.cells().size()))
        << ")\n";
    return kSuccess;
  }
  const Annotation a = load_annotation(path, mapping_from(pitch_offset, num_labels));
  std::vector<std::size_t> per_label(a.num_labels(), 0);
  double min_len = 0.0;
  double max_len = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const auto& e = a.events()[i];
    ++per_label[e.label];
    const double len = e.offset_sec - e.onset_sec;
    min_len = i == 0 ? len : std::min(min_len, len);
    max_len = std::max(max_len, len);
  }
  const auto report = validate(a);
  out << "annotation " << path << "\n"
      << "  events: " << a.size() << "\n"
      << "  labels: " << a.num_labels() << "\n"
      << "  duration: " << io::format_real(a.duration_sec()) << " s\n"
      << "  note length: " << io::format_real(min_len) << " .. "
      << io::format_real(max_len) << " s\n"
      << "  used labels:";
  for (int k = 0; k < a.num_labels(); ++k) {
    if (per_label[k]) out << " " << k << ":" << per_label[k];
  }
  out << "\n  violations: " << report.violations.size() << "\n";
  for (const auto& v : report.violations) out << "    " << v.message << "\n";
  return kSuccess;
}

void add_mapping_options(CLI::App* cmd, int& pitch_offset, int& num_labels) {
  cmd->add_option("--pitch-offset", pitch_offset,
                  "MIDI pitch mapped to label 0")->capture_default_str();
  cmd->add_option("--num-labels", num_labels, "Number of labels K")
      ->capture_default_str();
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out,
        std::ostream& err) {
  CLI::App app{"Framewise label quantisation and label-noise experiments",
               "framelabel"};
  app.require_subcommand(1);
  app.set_version_flag("--version", kToolVersion);

  RasterizeOptions ro;
  std::uint64_t raster_seed = 0;
  auto* rasterize_cmd =
      app.add_subcommand("rasterize", "Convert an annotation to a label matrix");
  rasterize_cmd->add_option("input", ro.input, ".tsv or .mid annotation")
      ->required();
  rasterize_cmd->add_option("--fps", ro.fps, "Frame rate")->required();
  rasterize_cmd->add_option("--fn", ro.fn, "Labeling function a..f")->required();
  auto* seed_opt = rasterize_cmd->add_option("--seed", raster_seed,
                                             "Seed for random labeling functions");
  rasterize_cmd->add_option("--frames", ro.frames,
                            "Frame count (default: cover the annotation)");
  rasterize_cmd->add_option("--out", ro.out, "Output prefix")->required();
  add_mapping_options(rasterize_cmd, ro.pitch_offset, ro.num_labels);

  EvalOptions eo;
  auto* eval_cmd = app.add_subcommand("eval", "Score predictions framewise");
  eval_cmd->add_option("--pred", eo.preds, "Predicted label matrix CSV")
      ->required();
  eval_cmd->add_option("--ref", eo.ref, "Reference label matrix CSV");
  eval_cmd->add_option("--annotation", eo.annotation,
                       "Annotation to build the reference from");
  eval_cmd->add_option("--fn", eo.fn, "Reference labeling function")
      ->capture_default_str();
  eval_cmd->add_option("--seed", eo.seed, "Reference seed")->capture_default_str();
  eval_cmd->add_option("--window-sec", eo.window_sec, "Evaluation window")
      ->capture_default_str();
  eval_cmd->add_option("--ref-fps", eo.ref_fps, "Reference frame rate")
      ->capture_default_str();
  eval_cmd->add_option("--out", eo.out, "Output prefix (default: stdout only)");
  add_mapping_options(eval_cmd, eo.pitch_offset, eo.num_labels);

  DisagreeOptions dopt;
  std::uint64_t seed_a = 0;
  std::uint64_t seed_b = 0;
  auto* disagree_cmd = app.add_subcommand(
      "disagree", "Compare two labeling functions on one annotation");
  disagree_cmd->add_option("input", dopt.input, ".tsv or .mid annotation")
      ->required();
  disagree_cmd->add_option("--fps", dopt.fps, "Frame rate")->capture_default_str();
  disagree_cmd->add_option("--fn-a", dopt.fn_a, "First labeling function")
      ->capture_default_str();
  disagree_cmd->add_option("--fn-b", dopt.fn_b, "Second labeling function")
      ->required();
  auto* seed_a_opt = disagree_cmd->add_option("--seed-a", seed_a, "Seed for --fn-a");
  auto* seed_b_opt = disagree_cmd->add_option("--seed-b", seed_b, "Seed for --fn-b");
  disagree_cmd->add_option("--frames", dopt.frames, "Frame count");
  disagree_cmd->add_option("--out", dopt.out, "Output prefix");
  add_mapping_options(disagree_cmd, dopt.pitch_offset, dopt.num_labels);

  SynthOptions so;
  std::uint64_t synth_seed = 0;
  int synth_pieces = 0;
  auto* synth_cmd = app.add_subcommand("synth", "Generate a synthetic corpus");
  synth_cmd->add_option("--config", so.config, "JSON synth config");
  auto* synth_seed_opt = synth_cmd->add_option("--seed", synth_seed, "Corpus seed");
  auto* synth_pieces_opt =
      synth_cmd->add_option("--pieces", synth_pieces, "Number of pieces");
  synth_cmd->add_option("--fps", so.fps, "Feature frame rate")->capture_default_str();
  synth_cmd->add_option("--out-dir", so.out_dir, "Output directory")->required();

  ExperimentOptions xo;
  int x_epochs = 0;
  int x_pieces = 0;
  double x_train_fps = 0.0;
  double x_window = 0.0;
  double x_ref_fps = 0.0;
  auto* experiment_cmd =
      app.add_subcommand("experiment", "Run the label-noise sensitivity experiment");
  experiment_cmd->add_option("--config", xo.config,
                             "JSON experiment config or a previous manifest");
  experiment_cmd->add_option("--fns", xo.fns, "Comma-separated labeling functions");
  experiment_cmd->add_option("--seeds", xo.seeds, "Comma-separated seeds");
  auto* epochs_opt = experiment_cmd->add_option("--epochs", x_epochs, "Training epochs");
  auto* pieces_opt = experiment_cmd->add_option("--pieces", x_pieces, "Corpus size");
  auto* train_fps_opt =
      experiment_cmd->add_option("--train-fps", x_train_fps, "Training frame rate");
  auto* window_opt =
      experiment_cmd->add_option("--window-sec", x_window, "Evaluation window");
  auto* ref_fps_opt =
      experiment_cmd->add_option("--ref-fps", x_ref_fps, "Reference frame rate");
  experiment_cmd->add_option("--jobs", xo.jobs, "Parallel cells")->capture_default_str();
  experiment_cmd->add_option("--out", xo.out, "Output prefix")->required();

  std::string inspect_path;
  int inspect_offset = 21;
  int inspect_labels = 88;
  auto* inspect_cmd = app.add_subcommand("inspect", "Print annotation or matrix stats");
  inspect_cmd->add_option("input", inspect_path, "Annotation or label matrix CSV")
      ->required();
  add_mapping_options(inspect_cmd, inspect_offset, inspect_labels);

  std::string rerun_manifest;
  std::string rerun_out;
  auto* rerun_cmd =
      app.add_subcommand("rerun", "Repeat a command from its manifest");
  rerun_cmd->add_option("manifest", rerun_manifest, "Manifest JSON")->required();
  rerun_cmd->add_option("--out", rerun_out, "Output prefix or directory")
      ->required();

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kSuccess;
  } catch (const CLI::CallForVersion&) {
    out << kToolVersion << "\n";
    return kSuccess;
  } catch (const CLI::ParseError& e) {
    err << "usage error: " << e.what() << "\n";
    return kUsage;
  }

  try {
    if (*rasterize_cmd) {
      if (*seed_opt) ro.seed = raster_seed;
      return cmd_rasterize(ro, out);
    }
    if (*eval_cmd) return cmd_eval(eo, out);
    if (*disagree_cmd) {
      if (*seed_a_opt) dopt.seed_a = seed_a;
      if (*seed_b_opt) dopt.seed_b = seed_b;
      return cmd_disagree(dopt, out);
    }
    if (*synth_cmd) {
      if (*synth_seed_opt) so.seed = synth_seed;
      if (*synth_pieces_opt) so.pieces = synth_pieces;
      return cmd_synth(so, out);
    }
    if (*experiment_cmd) {
      if (*epochs_opt) xo.epochs = x_epochs;
      if (*pieces_opt) xo.pieces = x_pieces;
      if (*train_fps_opt) xo.train_fps = x_train_fps;
      if (*window_opt) xo.window_sec = x_window;
      if (*ref_fps_opt) xo.ref_fps = x_ref_fps;
      return cmd_experiment(xo, out);
    }
    if (*inspect_cmd) {
      return cmd_inspect(inspect_path, inspect_offset, inspect_labels, out);
    }
    if (*rerun_cmd) {
      const json m = json::parse(io::read_file(rerun_manifest));
      const std::string command = m.at("command").get<std::string>();
      std::vector<std::string> replay;
      if (command == "experiment") {
        replay = {"experiment", "--config", rerun_manifest};
      } else {
        replay = m.at("args").get<std::vector<std::string>>();
      }
      replay.insert(replay.end(),
                    {command == "synth" ? "--out-dir" : "--out", rerun_out});
      return run(replay, out, err);
    }
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << "\n";
    return kUsage;
  } catch (const FormatError& e) {
    err << "error: " << e.what() << "\n";
    return kInputOutput;
  } catch (const RangeError& e) {
    err << "error: " << e.what() << "\n";
    return kInputOutput;
  } catch (const ValidationError& e) {
    err << "error: " << e.what() << "\n";
    return kInputOutput;
  } catch (const UnsupportedError& e) {
    err << "error: " << e.what() << "\n";
    return kInputOutput;
  } catch (const fs::filesystem_error& e) {
    err << "error: " << e.what() << "\n";
    return kInputOutput;
  } catch (const json::exception& e) {
    err << "error: " << e.what() << "\n";
    return kInputOutput;
  } catch (const DivergenceError& e) {
    err << "diverged: " << e.what() << "\n";
    return kRuntime;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kRuntime;
  }
  return kUsage;
}

}  // namespace framelabel::cli
