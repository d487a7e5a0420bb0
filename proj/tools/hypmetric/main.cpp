// hypmetric: generate data, estimate delta, train, evaluate, sweep and export.

#include "commands.hpp"

#include "hypml/error.hpp"
#include "hypml/parallel.hpp"

#include <CLI11.hpp>

#include <iostream>

namespace {

using namespace hypmetric;

int exit_code(hypml::ErrorKind kind) {
  switch (kind) {
    case hypml::ErrorKind::Config:
      return 2;
    case hypml::ErrorKind::Data:
    case hypml::ErrorKind::Domain:
      return 3;
    case hypml::ErrorKind::Numerical:
      return 4;
  }
  return 1;
}

/// Options shared by train and sweep that map onto RunConfig overrides.
void add_run_options(CLI::App& cmd, std::string& config_path, Overrides& ov) {
  cmd.add_option("--config", config_path, "JSON run configuration; flags override its values")
      ->check(CLI::ExistingFile);
  cmd.add_option("--data", ov.data, "dataset file (.csv or binary)");
  cmd.add_option("--out", ov.out, "output directory");
  cmd.add_option("--metric", ov.metric, "hyperbolic or spherical");
  cmd.add_option("--c", ov.curvature, "ball curvature");
  cmd.add_option("--tau", ov.tau, "softmax temperature");
  cmd.add_option("--r", ov.clip_radius, "feature clipping radius");
  cmd.add_option("--lr", ov.lr, "learning rate");
  cmd.add_option("--wd", ov.weight_decay, "decoupled weight decay");
  cmd.add_option("--grad-clip", ov.grad_clip, "global gradient norm limit");
  cmd.add_option("--steps", ov.steps, "optimizer steps (total, including resumed ones)");
  cmd.add_option("--classes", ov.batch_classes, "classes per batch");
  cmd.add_option("--per-class", ov.samples_per_class, "samples per class in a batch");
  cmd.add_option("--head-dim", ov.head_dim, "projection head output size");
  cmd.add_option("--encoder", ov.encoder, "mlp or vit")->check(CLI::IsMember({"mlp", "vit"}));
  cmd.add_option("--seed", ov.seed, "run seed");
  cmd.add_option("--augment", ov.augment, "shift/flip augmentation for image inputs");
}

RunConfig make_config(const std::string& path, const Overrides& ov) {
  return path.empty() ? parse_run_config(nlohmann::json::object(), ov) : load_run_config(path, ov);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Hyperbolic metric learning toolkit"};
  app.require_subcommand(1);
  app.fallthrough();  // global flags may follow the subcommand

  unsigned threads = 1;
  std::string report_path;
  bool quiet = false;
  app.add_option("--threads", threads, "worker threads (0 = all cores)")->envname("HYPMETRIC_THREADS");
  app.add_option("--report", report_path, "also write the report to this file");
  app.add_flag("-q,--quiet", quiet, "no progress output on stderr");

  GenOptions gen;
  auto* gen_cmd = app.add_subcommand("gen", "generate a synthetic tree-structured dataset");
  gen_cmd->add_option("--branching", gen.spec.branching, "children per node");
  gen_cmd->add_option("--depth", gen.spec.depth, "tree depth; leaves are classes");
  gen_cmd->add_option("--per-leaf", gen.spec.per_leaf, "samples per class");
  gen_cmd->add_option("--sigma", gen.spec.sigma, "within-class noise");
  gen_cmd->add_option("--dim", gen.spec.dim, "feature dimension");
  gen_cmd->add_option("--seed", gen.spec.seed, "generator seed");
  gen_cmd->add_option("--root-step", gen.spec.root_step, "length of the first edge below the root");
  gen_cmd->add_option("-o,--output", gen.output, "output file (.csv or binary)")->required();

  DeltaOptions delta;
  std::string delta_metric = "euclidean";
  auto* delta_cmd = app.add_subcommand("delta", "estimate delta-hyperbolicity and a curvature");
  delta_cmd->add_option("-i,--input", delta.data, "dataset file")->required();
  delta_cmd->add_option("--checkpoint", delta.checkpoint, "measure encoder outputs of this model");
  delta_cmd->add_option("--split", delta.split, "all, train or test")->check(CLI::IsMember({"all", "train", "test"}));
  delta_cmd->add_option("--metric", delta_metric, "euclidean or cosine")
      ->check(CLI::IsMember({"euclidean", "cosine"}));
  delta_cmd->add_option("--sample-size", delta.sample_size, "points drawn per estimate");
  delta_cmd->add_option("--seed", delta.seed, "first sampling seed");
  delta_cmd->add_option("--seeds", delta.seeds, "number of subsamples to average");
  delta_cmd->add_flag("--class-means", delta.class_means, "use one mean point per class");
  delta_cmd->add_flag("--all-basepoints", delta.all_basepoints, "maximize over every basepoint (<= 256 points)");

  TrainOptions train;
  std::string train_config;
  Overrides train_ov;
  auto* train_cmd = app.add_subcommand("train", "train an encoder and projection head");
  add_run_options(*train_cmd, train_config, train_ov);
  train_cmd->add_option("--resume", train.resume, "continue from a checkpoint");
  train_cmd->add_option("--log-every", train.progress.every, "progress interval in steps");

  EvalOptions ev;
  std::string head_metric_name;
  auto* eval_cmd = app.add_subcommand("eval", "Recall@K of a trained model");
  eval_cmd->add_option("--checkpoint", ev.checkpoint, "model checkpoint")->required();
  eval_cmd->add_option("--data", ev.data, "dataset (queries when --gallery is given)")
      ->required();
  eval_cmd->add_option("--gallery", ev.gallery, "separate gallery dataset");
  eval_cmd->add_option("--split", ev.split, "all, train or test")->check(CLI::IsMember({"all", "train", "test"}));
  eval_cmd->add_option("--ks", ev.ks, "K values")->delimiter(',');
  eval_cmd->add_option("--head-metric", head_metric_name, "expected head metric; must match training");

  SweepOptions sweep;
  std::string sweep_config;
  Overrides sweep_ov;
  auto* sweep_cmd = app.add_subcommand("sweep", "Recall@1 over one hyperparameter");
  add_run_options(*sweep_cmd, sweep_config, sweep_ov);
  sweep_cmd->add_option("--param", sweep.param, "c, head_dim or batch_classes")
      ->required()
      ->check(CLI::IsMember({"c", "head_dim", "batch_classes"}));
  sweep_cmd->add_option("--values", sweep.values, "values to try (default: standard grid)")->delimiter(',');
  sweep_cmd->add_option("--seeds", sweep.seeds, "runs per value");

  ExportOptions ex;
  auto* export_cmd = app.add_subcommand("export", "write embeddings as a dataset file");
  export_cmd->add_option("--checkpoint", ex.checkpoint, "model checkpoint")->required();
  export_cmd->add_option("--data", ex.data, "dataset file")->required();
  export_cmd->add_option("--space", ex.space, "encoder or head")->check(CLI::IsMember({"encoder", "head"}));
  export_cmd->add_option("--split", ex.split, "all, train or test")->check(CLI::IsMember({"all", "train", "test"}));
  export_cmd->add_option("-o,--output", ex.output, "output file")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    hypml::set_max_threads(threads);
    Report report = [&]() -> Report {
      if (*gen_cmd) return cmd_gen(gen);
      if (*delta_cmd) {
        delta.metric = delta_metric == "cosine" ? hypml::delta::PointMetric::Cosine : hypml::delta::PointMetric::Euclidean;
        return cmd_delta(delta);
      }
      if (*train_cmd) {
        train.config = make_config(train_config, train_ov);
        train.progress.quiet = quiet;
        return cmd_train(train);
      }
      if (*eval_cmd) {
        if (!head_metric_name.empty()) ev.head_metric = head_metric_name;
        return cmd_eval(ev);
      }
      if (*sweep_cmd) {
        sweep.base = make_config(sweep_config, sweep_ov);
        sweep.progress.quiet = quiet;
        return cmd_sweep(sweep);
      }
      return cmd_export(ex);
    }();
    report.write(std::cout);
    if (!report_path.empty()) report.save(report_path);
  } catch (const hypml::Error& e) {
    std::cerr << "hypmetric: " << hypml::to_string(e.kind()) << ": " << e.what() << "\n";
    return exit_code(e.kind());
  } catch (const std::exception& e) {
    std::cerr << "hypmetric: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
