#include "fsdag/checkpoint.hpp"
#include "fsdag/config.hpp"
#include "fsdag/dataset.hpp"
#include "fsdag/errors.hpp"
#include "fsdag/experiment.hpp"
#include "fsdag/gradcheck_suite.hpp"
#include "fsdag/log.hpp"
#include "fsdag/metrics.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <iomanip>
#include <iostream>
#include <optional>

namespace fs = std::filesystem;
using namespace fsdag;

namespace {

ExperimentConfig load_config(const std::optional<fs::path>& path) {
  if (!path) return parse_config_text("{}");
  return parse_config(*path);
}

/// "<grandparent>_<parent>_<stem>" of a checkpoint path, used as an output folder name.
std::string run_label(const fs::path& p) {
  std::string label = p.stem().string();
  fs::path dir = p.parent_path();
  for (int i = 0; i < 2 && !dir.filename().empty() && dir.filename() != "." && dir.filename() != ".."; ++i) {
    label = dir.filename().string() + "_" + label;
    dir = dir.parent_path();
  }
  return label;
}

int cmd_gen_data(const std::optional<fs::path>& spec_path, const std::optional<std::uint64_t>& seed, const fs::path& out) {
  GenerationSpec spec = spec_path ? parse_generation_spec(*spec_path) : default_config().data.generate;
  if (seed) spec.seed = *seed;
  const Dataset d = generate_dataset(spec);
  write_dataset(d, out);
  ExperimentConfig snapshot = default_config();
  snapshot.data.generate = spec;
  snapshot.model.image_size = spec.shape.image_size;
  snapshot.model.num_landmarks = spec.shape.num_landmarks;
  write_config_snapshot(snapshot, out);
  std::cout << "wrote " << d.total() << " samples to " << out.string() << '\n';
  return 0;
}

int cmd_pretrain(const ExperimentConfig& cfg) {
  const Dataset data = load_dataset(cfg);
  const fs::path dir = cfg.output_dir / "pretrain" / ("seed-" + std::to_string(cfg.seed));
  write_config_snapshot(cfg, dir);
  const TrainedRun run = run_pretrain(cfg, data, cfg.seed);
  write_checkpoint(run.checkpoint, dir / "model.ckpt");
  write_history(run.history, dir / "history.json");
  std::cout << "checkpoint " << (dir / "model.ckpt").string() << " (selected epoch " << run.history.selected_epoch
            << (run.history.converged ? "" : ", not converged") << ")\n";
  return 0;
}

int cmd_train_ssl(ExperimentConfig cfg, const fs::path& pretrained_path, const std::optional<std::string>& strategy) {
  if (strategy) {
    try {
      cfg.train.strategy = parse_strategy(*strategy);
    } catch (const std::invalid_argument& e) {
      throw ValidationError(e.what());
    }
  }
  const Checkpoint pretrained = read_checkpoint(pretrained_path);
  const Dataset data = load_dataset(cfg);
  const fs::path dir = cfg.output_dir / to_string(cfg.train.strategy) / ("seed-" + std::to_string(cfg.seed));
  write_config_snapshot(cfg, dir);
  const TrainedRun run = run_strategy(cfg, data, pretrained, cfg.train.strategy, cfg.seed);
  write_checkpoint(run.checkpoint, dir / "model.ckpt");
  write_history(run.history, dir / "history.json");
  std::cout << "checkpoint " << (dir / "model.ckpt").string() << " (" << run.history.labeled_steps << " labeled / "
            << run.history.unlabeled_steps << " unlabeled steps)\n";
  return 0;
}

const std::vector<Sample>& split_named(const Dataset& d, const std::string& split) {
  if (split == "test") return d.test;
  if (split == "validation") return d.validation;
  if (split == "train_labeled") return d.train_labeled;
  throw ValidationError("unknown evaluation split '" + split + "'");
}

int cmd_eval(const ExperimentConfig& cfg, const fs::path& ckpt_path, const std::string& split) {
  const Checkpoint ckpt = read_checkpoint(ckpt_path);
  const Dataset data = load_dataset(cfg);
  const fs::path dir = cfg.output_dir / "eval" / run_label(ckpt_path);
  write_config_snapshot(cfg, dir);
  ReportRow row{ckpt_path.string(), cfg.seed, evaluate_checkpoint(ckpt, split_named(data, split), cfg.eval, cfg.precision),
                true};
  const fs::path json = emit_report({row}, dir / "report");
  std::cout << format_report_table({row}) << "report " << json.string() << '\n';
  return 0;
}

int cmd_overlay(const ExperimentConfig& cfg, const fs::path& ckpt_path, const std::optional<std::int64_t>& count) {
  const Checkpoint ckpt = read_checkpoint(ckpt_path);
  const Dataset data = load_dataset(cfg);
  const std::size_t n = std::min<std::size_t>(data.test.size(), static_cast<std::size_t>(count.value_or(cfg.eval.overlay_count)));
  const std::vector<Sample> samples(data.test.begin(), data.test.begin() + static_cast<std::ptrdiff_t>(n));
  const fs::path dir = cfg.output_dir / "overlay" / run_label(ckpt_path);
  write_config_snapshot(cfg, dir);
  const auto pred = predict_checkpoint(ckpt, samples, cfg.precision);
  for (std::size_t i = 0; i < n; ++i) {
    emit_overlay(samples[i], pred[i], *samples[i].landmarks, dir / (samples[i].id + ".svg"));
  }
  std::cout << "wrote " << n << " overlays to " << dir.string() << '\n';
  return 0;
}

int cmd_gradcheck(int instances, std::uint64_t seed) {
  bool ok = true;
  for (const GradCheckEntry& e : run_gradcheck_suite(instances, seed)) {
    const bool pass = e.max_rel_error <= kGradCheckTolerance && e.checked > 0;
    ok = ok && pass;
    std::cout << std::left << std::setw(28) << e.name << std::right << " max_rel_error " << std::scientific
              << std::setprecision(3) << e.max_rel_error << std::defaultfloat << "  checked " << e.checked << "  skipped "
              << e.skipped << (pass ? "" : "  FAIL") << '\n';
  }
  return ok ? 0 : 1;
}

int cmd_reproduce(const ExperimentConfig& cfg, int jobs) {
  const Dataset data = load_dataset(cfg);
  const fs::path dir = cfg.output_dir / "reproduce";
  write_config_snapshot(cfg, dir);
  const std::vector<ReportRow> rows = reproduce_table(cfg, data, jobs, dir);
  std::cout << format_report_table(rows) << "report " << (dir / "report.json").string() << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Few-shot landmark localization with adaptive-graph models and mean-teacher training"};
  app.require_subcommand(1);

  std::optional<fs::path> config_path;
  auto add_config = [&](CLI::App* sub) { sub->add_option("-c,--config", config_path, "Experiment config (JSON)"); };

  std::optional<fs::path> spec_path;
  std::optional<std::uint64_t> gen_seed;
  fs::path gen_out;
  CLI::App* gen = app.add_subcommand("gen-data", "Generate a synthetic dataset");
  gen->add_option("--spec", spec_path, "Generation spec (JSON)");
  gen->add_option("--seed", gen_seed, "Generator seed (overrides the spec)");
  gen->add_option("--out", gen_out, "Output dataset directory")->required();

  std::optional<std::uint64_t> run_seed;
  CLI::App* pre = app.add_subcommand("pretrain", "Supervised training on the labeled split");
  add_config(pre);
  pre->add_option("--seed", run_seed, "Run seed (overrides the config)");

  fs::path pretrained_path;
  std::optional<std::string> strategy;
  CLI::App* ssl = app.add_subcommand("train-ssl", "Semi-supervised training from a pre-trained checkpoint");
  add_config(ssl);
  ssl->add_option("--pretrained", pretrained_path, "Pre-trained checkpoint")->required();
  ssl->add_option("--strategy", strategy, "Strategy (overrides train.strategy)");
  ssl->add_option("--seed", run_seed, "Run seed (overrides the config)");

  fs::path ckpt_path;
  std::string split = "test";
  CLI::App* ev = app.add_subcommand("eval", "Evaluate a checkpoint and write a report");
  add_config(ev);
  ev->add_option("--checkpoint", ckpt_path, "Checkpoint to evaluate")->required();
  ev->add_option("--split", split, "test | validation | train_labeled");

  std::optional<std::int64_t> overlay_count;
  CLI::App* ov = app.add_subcommand("overlay", "Write SVG overlays for test images");
  add_config(ov);
  ov->add_option("--checkpoint", ckpt_path, "Checkpoint to visualize")->required();
  ov->add_option("--count", overlay_count, "Number of test images");

  int instances = 50;
  std::uint64_t gc_seed = 0;
  CLI::App* gc = app.add_subcommand("gradcheck", "Finite-difference gradient verification suite");
  gc->add_option("--instances", instances, "Random instances per check")->check(CLI::PositiveNumber);
  gc->add_option("--seed", gc_seed, "Seed for the random instances");

  int jobs = 1;
  CLI::App* rep = app.add_subcommand("reproduce-table", "Run every strategy over every seed and write a report");
  add_config(rep);
  rep->add_option("--jobs", jobs, "Concurrent runs")->check(CLI::PositiveNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "usage error: " << e.what() << "\nrun with --help for usage\n";
    return 2;
  }

  try {
    if (gen->parsed()) return cmd_gen_data(spec_path, gen_seed, gen_out);
    if (gc->parsed()) return cmd_gradcheck(instances, gc_seed);
    ExperimentConfig cfg = load_config(config_path);
    if (run_seed) {
      cfg.seed = *run_seed;
      cfg.pretrain.rng_seed = cfg.train.rng_seed = cfg.seed;
    }
    if (pre->parsed()) return cmd_pretrain(cfg);
    if (ssl->parsed()) return cmd_train_ssl(cfg, pretrained_path, strategy);
    if (ev->parsed()) return cmd_eval(cfg, ckpt_path, split);
    if (ov->parsed()) return cmd_overlay(cfg, ckpt_path, overlay_count);
    if (rep->parsed()) return cmd_reproduce(cfg, jobs);
  } catch (const ValidationError& e) {
    std::cerr << "validation error: " << e.what() << '\n';
    return 1;
  } catch (const VersionError& e) {
    std::cerr << "version error: " << e.what() << '\n';
    return 1;
  } catch (const FormatError& e) {
    std::cerr << "format error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 2;
}
