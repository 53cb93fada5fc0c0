#include "wevbg/cli.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <functional>
#include <numeric>
#include <ostream>
#include <sstream>
#include <utility>

#include <fmt/format.h>

#include "CLI11.hpp"
#include "wevbg/errors.hpp"
#include "wevbg/evalkit.hpp"
#include "wevbg/io.hpp"
#include "wevbg/parallel.hpp"
#include "wevbg/scene.hpp"
#include "wevbg/segmenter.hpp"
#include "wevbg/streamstats.hpp"
#include "wevbg/theory.hpp"

namespace wevbg {

namespace fs = std::filesystem;

BlockShape parse_block_shape(const std::string& text) {
  auto number = [&](std::string_view s) {
    Index v = 0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (s.empty() || ec != std::errc{} || ptr != s.data() + s.size() || v < 1) {
      fail(ErrorKind::ConfigError, "block size must be N or HxW with positive integers, got '" + text + "'");
    }
    return v;
  };
  const auto x = text.find('x');
  if (x == std::string::npos) {
    const Index n = number(text);
    return {n, n};
  }
  return {number(std::string_view(text).substr(0, x)), number(std::string_view(text).substr(x + 1))};
}

BlockShape RunConfig::block_shape() const { return parse_block_shape(block); }

void RunConfig::validate() const {
  block_shape();
  Selection::parse(selection);
  if (!(tau >= 0.0)) fail(ErrorKind::ConfigError, "threshold must be non-negative");
  if (input.empty()) fail(ErrorKind::ConfigError, "an input path is required");
}

namespace {

// Files produced by a command are buffered and written only after the whole
// computation succeeded.
class PendingOutputs {
 public:
  void add(fs::path path, std::string bytes) { files_.emplace_back(std::move(path), std::move(bytes)); }

  void commit() const {
    for (const auto& [path, bytes] : files_) {
      if (path.has_parent_path()) fs::create_directories(path.parent_path());
      std::ofstream out(path, std::ios::binary);
      out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
      if (!out) fail(ErrorKind::NotFound, "cannot write " + path.string());
    }
  }

 private:
  std::vector<std::pair<fs::path, std::string>> files_;
};

template <typename Writer>
std::string render(Writer&& write) {
  std::ostringstream out;
  write(out);
  return std::move(out).str();
}

std::string pgm_bytes(const Image& image) {
  return render([&](std::ostream& o) { write_pgm(o, image); });
}

std::string frame_name(std::string_view stem, std::size_t index, std::size_t count) {
  const std::size_t width = std::max<std::size_t>(4, std::to_string(count == 0 ? 0 : count - 1).size());
  return fmt::format("{}_{:0{}d}.pgm", stem, index, width);
}

// Validation runs first; anything it throws maps to exit code 1. It returns
// the computation, whose failures map to exit code 2.
int staged(std::ostream& err, const std::function<std::function<void()>()>& prepare) {
  std::function<void()> compute;
  try {
    compute = prepare();
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
  try {
    compute();
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}

// A directory of PGM/PNG frames (labels from --labels or <dir>/labels.csv),
// a directory holding sequence.csv, or a sequence CSV file.
FrameSequence load_input(const fs::path& input, const std::string& pattern, const std::optional<fs::path>& labels) {
  FrameSequence seq;
  fs::path default_labels;
  if (fs::is_regular_file(input)) {
    seq = read_sequence_csv(input);
  } else if (fs::is_directory(input) && pattern == "*" && fs::is_regular_file(input / "sequence.csv")) {
    seq = read_sequence_csv(input / "sequence.csv");
  } else {
    seq = load_frames(input, pattern);
    default_labels = input / "labels.csv";
  }
  if (labels) {
    seq.labels = load_labels(*labels, seq.size());
  } else if (!seq.labels && !default_labels.empty() && fs::is_regular_file(default_labels)) {
    seq.labels = load_labels(default_labels, seq.size());
  }
  seq.validate();
  return seq;
}

std::size_t basis_size(const FrameSequence& seq, BlockShape block) {
  return std::min(seq.size(), static_cast<std::size_t>(block.pixels()));
}

double mean_of(const std::vector<double>& v) {
  return v.empty() ? 0.0 : std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

std::pair<Index, Index> parse_pair(const std::string& text, std::string_view what) {
  const auto comma = text.find(',');
  auto number = [&](std::string_view s) {
    Index v = 0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (s.empty() || ec != std::errc{} || ptr != s.data() + s.size() || v < 0) {
      fail(ErrorKind::ConfigError, std::string(what) + " must be two non-negative integers 'a,b', got '" + text + "'");
    }
    return v;
  };
  if (comma == std::string::npos) number("");
  return {number(std::string_view(text).substr(0, comma)), number(std::string_view(text).substr(comma + 1))};
}

void add_input_options(CLI::App* cmd, RunConfig& cfg, bool labels) {
  cmd->add_option("--input", cfg.input, "Frame directory, or a sequence CSV")->required();
  cmd->add_option("--pattern", cfg.pattern, "Glob for frame file names (sorted by name)")->capture_default_str();
  if (labels) {
    cmd->add_option_function<std::string>(
        "--labels", [&cfg](const std::string& p) { cfg.labels = p; }, "Labels CSV (default: <input>/labels.csv)");
  }
}

// ---- synth ---------------------------------------------------------------

struct SynthOptions {
  std::string kind = "two-class";
  fs::path out;
  std::uint64_t seed = 7;
  Index dim = 2;
  std::size_t n_bg = 92;
  std::size_t n_fg = 29;
  double mu_bg = 0.3;
  double mu_fg = 0.7;
  double sigma_bg = 0.01;
  double sigma_fg = 0.2;
  std::string order = "shuffle";
  SceneParams scene;
};

int run_synth(const SynthOptions& o, std::ostream& out, std::ostream& err) {
  return staged(err, [&]() -> std::function<void()> {
    if (o.out.empty()) fail(ErrorKind::ConfigError, "--out is required");
    if (o.kind == "two-class") {
      const auto params = TwoClassParams::isotropic(o.dim, o.mu_bg, o.mu_fg, o.sigma_bg, o.sigma_fg, o.n_bg, o.n_fg, o.seed);
      params.validate();
      const ArrivalOrder order = parse_arrival_order(o.order);
      return [&o, &out, params, order] {
        const FrameSequence seq = synth_two_class(params, order);
        PendingOutputs files;
        files.add(o.out / "sequence.csv", render([&](std::ostream& s) { write_sequence_csv(s, seq); }));
        files.add(o.out / "labels.csv", render([&](std::ostream& s) { write_labels(s, *seq.labels); }));
        files.commit();
        out << fmt::format("wrote {} samples (D={}, {} bg / {} fg) to {}\n", seq.size(), params.dim(), params.n_b,
                           params.n_f, (o.out / "sequence.csv").string());
      };
    }
    if (o.kind == "scene") {
      SceneParams params = o.scene;
      params.seed = o.seed;
      params.validate();
      return [&o, &out, params] {
        const Scene scene = synth_scene(params);
        PendingOutputs files;
        const fs::path frames_dir = o.out / "frames";
        for (std::size_t i = 0; i < scene.seq.size(); ++i) {
          files.add(frames_dir / frame_name("frame", i, scene.seq.size()), pgm_bytes(scene.seq.frames[i]));
        }
        files.add(frames_dir / "labels.csv", render([&](std::ostream& s) { write_labels(s, *scene.seq.labels); }));
        files.add(o.out / "background.pgm", pgm_bytes(scene.background));
        files.add(o.out / "objects.csv", render([&](std::ostream& s) {
                    s << "frame,row,col,side\n";
                    for (std::size_t i = 0; i < scene.objects.size(); ++i) {
                      if (const auto& b = scene.objects[i]) s << i << ',' << b->row << ',' << b->col << ',' << b->side << '\n';
                    }
                  }));
        files.commit();
        out << fmt::format("wrote {} frames ({}x{}, object side {}) to {}\n", scene.seq.size(), params.height,
                           params.width, object_side(params), frames_dir.string());
      };
    }
    fail(ErrorKind::ConfigError, "unknown --kind '" + o.kind + "' (two-class|scene)");
  });
}

// ---- perturb -------------------------------------------------------------

int run_perturb(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
  return staged(err, [&]() -> std::function<void()> {
    if (cfg.output.empty()) fail(ErrorKind::ConfigError, "--out is required");
    auto seq = std::make_shared<FrameSequence>(load_input(cfg.input, cfg.pattern, cfg.labels));
    if (!seq->labels) fail(ErrorKind::LabelError, "perturb needs labels (--labels or <input>/labels.csv)");
    if (seq->size() < kDriftWarmup) {
      fail(ErrorKind::InsufficientData, fmt::format("need at least {} frames", kDriftWarmup));
    }
    return [&cfg, &out, seq] {
      const auto records = drift_experiment(*seq);
      PendingOutputs files;
      files.add(cfg.output, render([&](std::ostream& s) { write_drift_csv(s, records); }));
      files.commit();
      std::vector<double> bg, fg;
      for (const auto& r : records) (r.label == FrameLabel::Background ? bg : fg).push_back(r.delta_norm);
      out << fmt::format("{} drift rows; mean ||v-v'|| bg={:.6g} fg={:.6g}\n", records.size(), mean_of(bg), mean_of(fg));
    };
  });
}

// ---- model ---------------------------------------------------------------

int run_model(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
  return staged(err, [&]() -> std::function<void()> {
    cfg.validate();
    if (cfg.output.empty()) fail(ErrorKind::ConfigError, "--out is required");
    const Selection selection = Selection::parse(cfg.selection);
    auto seq = std::make_shared<FrameSequence>(load_input(cfg.input, cfg.pattern, cfg.labels));
    if (seq->size() < 2) fail(ErrorKind::InsufficientData, "training needs at least two frames");
    const BlockGrid grid = tile_blocks(seq->height(), seq->width(), cfg.block_shape());
    selection.positions(basis_size(*seq, grid.block));
    return [&cfg, &out, seq, grid, selection] {
      const auto models = train_block_models(*seq, grid, selection);
      save_model_set(cfg.output, grid, models);
      out << fmt::format("trained {} block models ({}x{}, {}) on {} frames into {}\n", models.size(),
                         grid.block.height, grid.block.width, selection.to_string(), seq->size(), cfg.output.string());
    };
  });
}

// ---- segment -------------------------------------------------------------

int run_segment(const RunConfig& cfg, const fs::path& models_dir, std::ostream& out, std::ostream& err) {
  return staged(err, [&]() -> std::function<void()> {
    if (cfg.output.empty()) fail(ErrorKind::ConfigError, "--out is required");
    if (!(cfg.tau >= 0.0)) fail(ErrorKind::ConfigError, "--tau must be non-negative");
    auto set = std::make_shared<ModelSet>(load_model_set(models_dir));
    auto seq = std::make_shared<FrameSequence>(load_input(cfg.input, cfg.pattern, std::nullopt));
    if (seq->height() != set->grid.frame_height || seq->width() != set->grid.frame_width) {
      fail(ErrorKind::DimensionError, fmt::format("frames are {}x{} but the models were trained on {}x{}", seq->height(),
                                                  seq->width(), set->grid.frame_height, set->grid.frame_width));
    }
    return [&cfg, &out, set, seq] {
      std::vector<SegmentationResult> results(seq->size());
      parallel_for(seq->size(), [&](std::size_t i) {
        results[i] = segment_frame(set->models, set->grid, seq->frames[i], cfg.tau);
      });
      PendingOutputs files;
      std::ostringstream summary;
      summary << "frame_index,source,foreground_pixels,foreground_fraction\n";
      std::size_t total = 0;
      for (std::size_t i = 0; i < results.size(); ++i) {
        const auto& r = results[i];
        files.add(cfg.output / frame_name("background", i, results.size()), pgm_bytes(r.background));
        files.add(cfg.output / frame_name("residual", i, results.size()), pgm_bytes(r.residual));
        files.add(cfg.output / frame_name("mask", i, results.size()),
                  render([&](std::ostream& s) {
                    Image m(r.mask.height, r.mask.width);
                    for (std::size_t p = 0; p < r.mask.bits.size(); ++p) m.pixels[p] = r.mask.bits[p] ? 1.0 : 0.0;
                    write_pgm(s, m);
                  }));
        const std::size_t count = r.mask.count();
        total += count;
        summary << i << ',' << fs::path(seq->sources[i]).filename().string() << ',' << count << ','
                << fmt::format("{}", static_cast<double>(count) / static_cast<double>(r.mask.bits.size())) << '\n';
      }
      files.add(cfg.output / "segment.csv", std::move(summary).str());
      files.commit();
      out << fmt::format("segmented {} frames at tau={} ({} foreground pixels) into {}\n", results.size(), cfg.tau,
                         total, cfg.output.string());
    };
  });
}

// ---- eval ----------------------------------------------------------------

struct EvalOptions {
  std::string selections = "strongest:1,strongest:7,all,weakest:7,weakest:1";
  std::optional<fs::path> gt;
  std::optional<fs::path> holdout;
  std::string holdout_pattern = "*";
};

int run_eval(const RunConfig& cfg, const EvalOptions& o, std::ostream& out, std::ostream& err) {
  return staged(err, [&]() -> std::function<void()> {
    if (cfg.output.empty()) fail(ErrorKind::ConfigError, "--out is required");
    const BlockShape block = cfg.block_shape();
    const auto selections = parse_selection_list(o.selections);
    if (selections.empty()) fail(ErrorKind::SelectionError, "--selections is empty");
    auto seq = std::make_shared<FrameSequence>(load_input(cfg.input, cfg.pattern, cfg.labels));
    if (seq->size() < 2) fail(ErrorKind::InsufficientData, "training needs at least two frames");
    const BlockGrid grid = tile_blocks(seq->height(), seq->width(), block);
    for (const auto& s : selections) s.positions(basis_size(*seq, block));

    Image gt;
    if (o.gt) {
      gt = read_image(*o.gt);
      if (gt.height != seq->height() || gt.width != seq->width()) {
        fail(ErrorKind::DimensionError, "ground-truth image size differs from the frames");
      }
    } else {
      if (!seq->labels) fail(ErrorKind::LabelError, "eval needs labels or --gt for the ground-truth background");
      gt = build_ground_truth(*seq);
    }
    std::shared_ptr<FrameSequence> holdout;
    if (o.holdout) {
      holdout = std::make_shared<FrameSequence>(load_input(*o.holdout, o.holdout_pattern, std::nullopt));
      if (holdout->height() != seq->height() || holdout->width() != seq->width()) {
        fail(ErrorKind::DimensionError, "holdout frames differ in size from the training frames");
      }
    }

    return [&cfg, &out, seq, grid, selections, gt, holdout] {
      EvalReport report;
      if (holdout) {
        const auto bases = train_block_bases(*seq, grid);
        std::vector<SelectionModels> models;
        for (const auto& s : selections) models.push_back({s, build_block_models(bases, s, grid)});
        report = holdout_eval(models, grid, *holdout, gt);
      } else {
        report = sweep_selections(*seq, grid, selections, gt);
      }
      PendingOutputs files;
      files.add(cfg.output, render([&](std::ostream& s) { write_eval_csv(s, report); }));
      files.commit();
      out << "selection,mean_recon_rmse_255,mean_bg_rmse_255\n";
      for (const auto& s : selections) {
        out << fmt::format("{},{:.4f},{:.4f}\n", s.to_string(), 255.0 * mean_of(report.recon_column(s)),
                           255.0 * mean_of(report.bg_column(s)));
      }
    };
  });
}

// ---- theory --------------------------------------------------------------

struct TheoryOptions {
  std::string mode = "bound";
  fs::path out;
  std::uint64_t seed = 7;
  std::size_t trials = 10000;
  Index dim = 5;
  std::size_t samples = 12;
  double scale = 0.01;
  std::size_t n_bg = 92;
  std::size_t n_fg = 29;
  double mu_bg = 0.3;
  double mu_fg = 0.7;
  double sigma_bg = 0.01;
  double sigma_fg = 0.2;
};

int run_theory(const TheoryOptions& o, std::ostream& out, std::ostream& err) {
  return staged(err, [&]() -> std::function<void()> {
    if (o.out.empty()) fail(ErrorKind::ConfigError, "--out is required");
    if (o.trials == 0) fail(ErrorKind::ConfigError, "--trials must be positive");
    auto emit = [&o, &out](const std::vector<SummaryRow>& rows) {
      PendingOutputs files;
      files.add(o.out, render([&](std::ostream& s) { write_summary_csv(s, rows); }));
      files.commit();
      for (const auto& r : rows) {
        out << fmt::format("{:<28} {:>14.6g} +- {:<12.3g} bound {:<12.6g} {}\n", r.metric, r.estimate, r.std_error,
                           r.bound, r.pass ? "pass" : "FAIL");
      }
    };
    if (o.mode == "bound") {
      if (o.dim < 2) fail(ErrorKind::ConfigError, "--dim must be at least 2");
      if (o.samples == 0) fail(ErrorKind::ConfigError, "--samples must be positive");
      if (!(o.scale > 0.0)) fail(ErrorKind::ConfigError, "--scale must be positive");
      return [&o, emit] {
        Rng rng(o.seed);
        const SymMatrix a = random_scatter_matrix(o.dim, o.samples, rng);
        emit(perturbation_bound_summary(a, o.trials, o.scale, derive_seed(o.seed, 1)));
      };
    }
    if (o.mode == "chain") {
      const auto params = TwoClassParams::isotropic(o.dim, o.mu_bg, o.mu_fg, o.sigma_bg, o.sigma_fg, o.n_bg, o.n_fg, o.seed);
      params.validate();
      return [&o, &err, emit, params] {
        const auto report = check_expectation_chain(params, o.trials);
        if (report.regime_warning) err << "warning: n_bg != n_fg; the balanced-history bounds may not apply\n";
        emit(report.rows);
      };
    }
    fail(ErrorKind::ConfigError, "unknown --mode '" + o.mode + "' (bound|chain)");
  });
}

// ---- subspace ------------------------------------------------------------

struct SubspaceOptions {
  std::string origin = "0,0";
  std::string pair = "1,2";
  std::size_t grid = 10;
};

int run_subspace(const RunConfig& cfg, const SubspaceOptions& o, std::ostream& out, std::ostream& err) {
  return staged(err, [&]() -> std::function<void()> {
    if (cfg.output.empty()) fail(ErrorKind::ConfigError, "--out is required");
    const BlockShape block = cfg.block_shape();
    const auto [row, col] = parse_pair(o.origin, "--block-origin");
    std::optional<std::pair<std::size_t, std::size_t>> pair;
    if (o.pair != "weakest") {
      const auto [i, j] = parse_pair(o.pair, "--pair");
      if (i < 1 || j < 1 || i == j) fail(ErrorKind::SelectionError, "--pair needs two distinct 1-based components");
      pair = {static_cast<std::size_t>(i), static_cast<std::size_t>(j)};
    }
    if (o.grid < 2) fail(ErrorKind::ConfigError, "--grid must be at least 2");
    auto seq = std::make_shared<FrameSequence>(load_input(cfg.input, cfg.pattern, cfg.labels));
    if (seq->size() < 2) fail(ErrorKind::InsufficientData, "need at least two frames");
    if (row + block.height > seq->height() || col + block.width > seq->width()) {
      fail(ErrorKind::InvalidBlockSize, "block at the given origin does not fit in the frame");
    }
    if (pair && std::max(pair->first, pair->second) > basis_size(*seq, block)) {
      fail(ErrorKind::SelectionError, "--pair exceeds the basis size");
    }
    const BlockOrigin origin{row, col};
    return [&cfg, &o, &out, seq, block, origin, pair] {
      const Matrix samples = block_samples(*seq, origin, block);
      const Vector mean = column_mean(samples);
      const EigenBasis basis = eigenbasis_from_centered(samples.colwise() - mean, mean);
      const auto components = pair ? *pair : weakest_nonzero_pair(basis);

      FrameSequence cropped;
      cropped.labels = seq->labels;
      for (std::size_t f = 0; f < seq->size(); ++f) {
        cropped.frames.push_back(Image::from_vector(block.height, block.width, samples.col(static_cast<Index>(f))));
        cropped.sources.push_back(seq->sources[f]);
      }
      const auto points = subspace_grid(cropped, basis, components, o.grid);
      PendingOutputs files;
      files.add(cfg.output, render([&](std::ostream& s) { write_subspace_csv(s, points); }));
      files.commit();
      out << fmt::format("components ({}, {}) of block ({}, {})", components.first, components.second, origin.row,
                         origin.col);
      if (seq->labels) {
        out << fmt::format(": spread bg={:.6g} fg={:.6g}", class_spread(points, FrameLabel::Background),
                           class_spread(points, FrameLabel::Foreground));
      }
      out << '\n';
    };
  });
}

}  // namespace

int cli_dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Eigenbackground modelling with weakest-eigenvector subspaces", "wevbg"};
  app.require_subcommand(1, 1);
  app.fallthrough(false);

  RunConfig cfg;
  SynthOptions synth;
  EvalOptions eval;
  TheoryOptions theory;
  SubspaceOptions subspace;
  fs::path models_dir;

  auto* synth_cmd = app.add_subcommand("synth", "Write a synthetic labeled sequence");
  synth_cmd->add_option("--kind", synth.kind, "two-class | scene")->capture_default_str();
  synth_cmd->add_option("--out", synth.out, "Output directory")->required();
  synth_cmd->add_option("--seed", synth.seed)->capture_default_str();
  synth_cmd->add_option("--dim", synth.dim, "two-class: sample dimension")->capture_default_str();
  synth_cmd->add_option("--n-bg", synth.n_bg, "two-class: background samples")->capture_default_str();
  synth_cmd->add_option("--n-fg", synth.n_fg, "two-class: foreground samples")->capture_default_str();
  synth_cmd->add_option("--mu-bg", synth.mu_bg)->capture_default_str();
  synth_cmd->add_option("--mu-fg", synth.mu_fg)->capture_default_str();
  synth_cmd->add_option("--sigma-bg", synth.sigma_bg)->capture_default_str();
  synth_cmd->add_option("--sigma-fg", synth.sigma_fg)->capture_default_str();
  synth_cmd->add_option("--order", synth.order, "shuffle | interleaved | given")->capture_default_str();
  synth_cmd->add_option("--height", synth.scene.height, "scene: frame height")->capture_default_str();
  synth_cmd->add_option("--width", synth.scene.width, "scene: frame width")->capture_default_str();
  synth_cmd->add_option("--frames", synth.scene.frames, "scene: frame count")->capture_default_str();
  synth_cmd->add_option("--object-frames", synth.scene.object_frames, "scene: frames showing the object")
      ->capture_default_str();
  synth_cmd->add_option("--object-area", synth.scene.object_area, "scene: object area fraction")->capture_default_str();
  synth_cmd->add_option("--object-intensity", synth.scene.object_intensity)->capture_default_str();
  synth_cmd->add_option("--noise", synth.scene.noise_sigma, "scene: per-pixel noise deviation")->capture_default_str();

  auto* perturb_cmd = app.add_subcommand("perturb", "Dominant-eigenvector drift per arriving frame (CSV)");
  add_input_options(perturb_cmd, cfg, true);
  perturb_cmd->add_option("--out", cfg.output, "Drift CSV path")->required();

  auto* model_cmd = app.add_subcommand("model", "Train and save per-block base models");
  add_input_options(model_cmd, cfg, false);
  model_cmd->add_option("--block", cfg.block, "Block size N or HxW")->capture_default_str();
  model_cmd->add_option("--selection", cfg.selection, "strongest:k | weakest:k | idx:1,3,30 | all")
      ->capture_default_str();
  model_cmd->add_option("--out", cfg.output, "Model directory")->required();

  auto* segment_cmd = app.add_subcommand("segment", "Apply saved models: backgrounds, residuals, masks");
  segment_cmd->add_option("--models", models_dir, "Model directory written by `model`")->required();
  add_input_options(segment_cmd, cfg, false);
  segment_cmd->add_option("--tau", cfg.tau, "Foreground threshold on |frame - background|")->capture_default_str();
  segment_cmd->add_option("--out", cfg.output, "Output directory")->required();

  auto* eval_cmd = app.add_subcommand("eval", "RMSE of each selection against the ground-truth background");
  add_input_options(eval_cmd, cfg, true);
  eval_cmd->add_option("--block", cfg.block, "Block size N or HxW")->capture_default_str();
  eval_cmd->add_option("--selections", eval.selections, "Comma-separated selections")->capture_default_str();
  eval_cmd->add_option_function<std::string>(
      "--gt", [&eval](const std::string& p) { eval.gt = p; }, "Ground-truth image (default: mean of bg frames)");
  eval_cmd->add_option_function<std::string>(
      "--holdout", [&eval](const std::string& p) { eval.holdout = p; }, "Evaluate on these frames instead");
  eval_cmd->add_option("--holdout-pattern", eval.holdout_pattern)->capture_default_str();
  eval_cmd->add_option("--out", cfg.output, "Eval CSV path")->required();

  auto* theory_cmd = app.add_subcommand("theory", "Monte-Carlo checks of the perturbation bound / expectation chain");
  theory_cmd->add_option("--mode", theory.mode, "bound | chain")->capture_default_str();
  theory_cmd->add_option("--out", theory.out, "Summary CSV path")->required();
  theory_cmd->add_option("--seed", theory.seed)->capture_default_str();
  theory_cmd->add_option("--trials", theory.trials)->capture_default_str();
  theory_cmd->add_option("--dim", theory.dim)->capture_default_str();
  theory_cmd->add_option("--samples", theory.samples, "bound: samples in the random scatter matrix")
      ->capture_default_str();
  theory_cmd->add_option("--scale", theory.scale, "bound: ||y||^2 relative to lambda_max")->capture_default_str();
  theory_cmd->add_option("--n-bg", theory.n_bg)->capture_default_str();
  theory_cmd->add_option("--n-fg", theory.n_fg)->capture_default_str();
  theory_cmd->add_option("--mu-bg", theory.mu_bg)->capture_default_str();
  theory_cmd->add_option("--mu-fg", theory.mu_fg)->capture_default_str();
  theory_cmd->add_option("--sigma-bg", theory.sigma_bg)->capture_default_str();
  theory_cmd->add_option("--sigma-fg", theory.sigma_fg)->capture_default_str();

  auto* subspace_cmd = app.add_subcommand("subspace", "Project one block's frames onto two eigenvectors (CSV)");
  add_input_options(subspace_cmd, cfg, true);
  subspace_cmd->add_option("--block", cfg.block, "Block size N or HxW")->capture_default_str();
  subspace_cmd->add_option("--block-origin", subspace.origin, "row,col of the block")->capture_default_str();
  subspace_cmd->add_option("--pair", subspace.pair, "i,j (1-based) or 'weakest'")->capture_default_str();
  subspace_cmd->add_option("--grid", subspace.grid, "Lattice vertices per side")->capture_default_str();
  subspace_cmd->add_option("--out", cfg.output, "Subspace CSV path")->required();

  std::vector<const char*> argv;
  argv.reserve(args.size());
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp& e) {
    app.exit(e, out, err);
    return 0;
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    const auto parsed = app.get_subcommands();
    err << (parsed.empty() ? app.help() : parsed.front()->help());
    return 1;
  }

  if (synth_cmd->parsed()) return run_synth(synth, out, err);
  if (perturb_cmd->parsed()) return run_perturb(cfg, out, err);
  if (model_cmd->parsed()) return run_model(cfg, out, err);
  if (segment_cmd->parsed()) return run_segment(cfg, models_dir, out, err);
  if (eval_cmd->parsed()) return run_eval(cfg, eval, out, err);
  if (theory_cmd->parsed()) return run_theory(theory, out, err);
  if (subspace_cmd->parsed()) return run_subspace(cfg, subspace, out, err);
  return 1;
}

}  // namespace wevbg
