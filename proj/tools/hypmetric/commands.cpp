#include "commands.hpp"

#include "hypml/checkpoint.hpp"
#include "hypml/error.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <numeric>

namespace hypmetric {

using hypml::ErrorKind;
using hypml::Matrix;
using hypml::fail;
using hypml::require;
namespace data = hypml::data;
namespace eval = hypml::eval;
namespace fs = std::filesystem;

namespace {

std::string dataset_hash(const data::VectorDataset& ds, std::uint64_t seed) {
  std::uint64_t h = fnv1a(ds.labels.data(), ds.labels.size() * sizeof(hypml::Label), seed);
  return hex64(fnv1a(ds.features.data(), static_cast<std::size_t>(ds.features.size()) * sizeof(double), h));
}

std::uint64_t text_hash(const std::string& text) { return fnv1a(text.data(), text.size()); }

void write_sidecar(const std::string& output, const Report& report) { report.save(output + ".meta"); }

void add_recalls(Report& report, const eval::RetrievalMetrics& m) {
  for (const auto& [k, value] : m.recall_at) {
    report.add("recall").set("space", m.space).set("metric", m.metric).set("k", k).set("value", value);
  }
}

double mean_of(const std::vector<double>& v) { return std::accumulate(v.begin(), v.end(), 0.0) / v.size(); }

/// Sample standard deviation; 0 for a single value.
double sd_of(const std::vector<double>& v) {
  if (v.size() < 2) return 0.0;
  const double mu = mean_of(v);
  double ss = 0.0;
  for (double x : v) ss += (x - mu) * (x - mu);
  return std::sqrt(ss / static_cast<double>(v.size() - 1));
}

std::string curvature_text(const std::optional<double>& c) { return c ? format_double(*c) : "inf"; }

void log_step(const Progress& progress, const hypml::training::StepRecord& r, std::uint64_t total) {
  if (progress.quiet || progress.every == 0) return;
  if (r.step % progress.every == 0 || r.step == total) {
    std::cerr << "step " << r.step << "/" << total << " loss=" << r.loss << " grad_norm=" << r.grad_norm << "\n";
  }
}

}  // namespace

DataSplits split_classes(const data::VectorDataset& ds) {
  const auto split = data::alternate_split(ds.labels);
  return {data::select_classes(ds, split.train_classes), data::select_classes(ds, split.test_classes)};
}

data::VectorDataset pick_split(const data::VectorDataset& ds, const std::string& split) {
  if (split == "all") return ds;
  if (split == "train") return split_classes(ds).train;
  if (split == "test") return split_classes(ds).test;
  fail(ErrorKind::Config, "unknown split '" + split + "' (expected all, train or test)");
}

eval::RetrievalMetric head_metric(const hypml::loss::LossConfig& loss) {
  if (loss.metric == hypml::loss::Metric::Spherical) return eval::RetrievalMetric::cosine();
  return eval::RetrievalMetric::hyperbolic(loss.curvature, loss.clip_radius);
}

Evaluation evaluate(const hypml::Model& model, const hypml::loss::LossConfig& loss, const data::VectorDataset& ds,
                    const std::vector<int>& ks) {
  const auto pass = model.forward(ds.features);
  Evaluation out;
  out.encoder = eval::recall_at_k(pass.features, ds.labels, ks, eval::RetrievalMetric::cosine());
  out.encoder.space = "encoder";
  out.head = eval::recall_at_k(pass.head_out, ds.labels, ks, head_metric(loss));
  out.head.space = "head";
  return out;
}

Experiment run_experiment(const RunConfig& cfg, const data::VectorDataset& ds,
                          const hypml::training::StepCallback& on_step) {
  const DataSplits splits = split_classes(ds);
  Experiment exp{hypml::training::init_state(resolve_model(cfg, ds.dim()), cfg.train), {}, {}};
  exp.trace = hypml::training::train(splits.train, exp.state, cfg.train.steps, on_step);
  exp.evaluation = evaluate(exp.state.model, cfg.train.loss, splits.test, cfg.ks);
  return exp;
}

// ---------------------------------------------------------------------------

Report cmd_gen(const GenOptions& opts) {
  require(!opts.output.empty(), ErrorKind::Config, "gen needs an output path (-o)");
  const auto& s = opts.spec;
  s.validate();
  const nlohmann::json spec_doc = {{"branching", s.branching}, {"depth", s.depth},   {"per_leaf", s.per_leaf},
                                   {"sigma", s.sigma},         {"dim", s.dim},       {"seed", s.seed},
                                   {"root_step", s.root_step}};
  const auto tree = data::gen_tree_dataset(s);
  data::save_dataset(opts.output, tree.data);

  Report report("gen", hex64(text_hash(spec_doc.dump())));
  report.add("dataset")
      .set("path", opts.output)
      .set("samples", static_cast<std::int64_t>(tree.data.size()))
      .set("dim", static_cast<std::int64_t>(tree.data.dim()))
      .set("classes", static_cast<std::int64_t>(tree.prototypes.rows()))
      .set("train_classes", static_cast<std::int64_t>(tree.split.train_classes.size()))
      .set("test_classes", static_cast<std::int64_t>(tree.split.test_classes.size()))
      .set("content_hash", dataset_hash(tree.data, 0));
  report.add("spec")
      .set("branching", s.branching)
      .set("depth", s.depth)
      .set("per_leaf", s.per_leaf)
      .set("sigma", s.sigma)
      .set("dim", s.dim)
      .set("seed", s.seed)
      .set("root_step", s.root_step);
  write_sidecar(opts.output, report);
  return report;
}

Report cmd_delta(const DeltaOptions& opts) {
  require(opts.seeds >= 1, ErrorKind::Config, "--seeds must be at least 1");
  data::VectorDataset ds = pick_split(data::load_dataset(opts.data), opts.split);
  std::string space = "input";
  if (!opts.checkpoint.empty()) {
    const auto state = hypml::training::load_checkpoint(opts.checkpoint);
    ds.features = state.model.encode(ds.features);
    space = "encoder";
  }
  if (opts.class_means) ds = data::class_means(ds);

  const std::string metric = opts.metric == hypml::delta::PointMetric::Euclidean ? "euclidean" : "cosine";
  const nlohmann::json settings = {{"checkpoint", !opts.checkpoint.empty()}, {"split", opts.split},
                                   {"class_means", opts.class_means},       {"metric", metric},
                                   {"sample_size", opts.sample_size},       {"seed", opts.seed},
                                   {"seeds", opts.seeds},                   {"all_basepoints", opts.all_basepoints}};
  Report report("delta", dataset_hash(ds, text_hash(settings.dump())));
  report.add("input")
      .set("path", opts.data)
      .set("space", space)
      .set("split", opts.split)
      .set("class_means", opts.class_means)
      .set("points", static_cast<std::int64_t>(ds.size()))
      .set("metric", metric);

  std::vector<double> rel;
  for (int i = 0; i < opts.seeds; ++i) {
    const std::uint64_t seed = opts.seed + static_cast<std::uint64_t>(i);
    const auto r = hypml::delta::delta_of_embeddings(ds.features, opts.metric, opts.sample_size, seed,
                                                     opts.all_basepoints);
    rel.push_back(r.delta_rel);
    report.add("delta")
        .set("seed", seed)
        .set("sample_size", static_cast<std::uint64_t>(r.sample_size))
        .set("basepoint", static_cast<std::uint64_t>(r.basepoint_index))
        .set("delta", r.delta)
        .set("diameter", r.diameter)
        .set("delta_rel", r.delta_rel)
        .set("c_recommended", curvature_text(r.c_recommended));
  }
  if (opts.seeds > 1) {
    report.add("summary")
        .set("seeds", opts.seeds)
        .set("delta_rel_mean", mean_of(rel))
        .set("delta_rel_sd", sd_of(rel))
        .set("c_recommended", curvature_text(hypml::delta::recommended_curvature(mean_of(rel))));
  }
  return report;
}

Report cmd_train(const TrainOptions& opts) {
  const RunConfig& cfg = opts.config;
  require(!cfg.data.empty(), ErrorKind::Config, "train needs a dataset (--data or \"data\" in the config)");
  const data::VectorDataset ds = data::load_dataset(cfg.data);
  const std::string hash = config_hash(cfg, ds);
  const DataSplits splits = split_classes(ds);

  hypml::training::ModelState state = [&] {
    if (opts.resume.empty()) return hypml::training::init_state(resolve_model(cfg, ds.dim()), cfg.train);
    hypml::training::CheckpointInfo info;
    auto resumed = hypml::training::load_checkpoint(opts.resume, &info);
    require(info.config_hash == hash, ErrorKind::Config,
            "checkpoint " + opts.resume + " was written by config " + info.config_hash + ", current config is " +
                hash);
    require(resumed.step <= cfg.train.steps, ErrorKind::Config,
            "checkpoint is at step " + std::to_string(resumed.step) + ", beyond the requested " +
                std::to_string(cfg.train.steps) + " steps");
    resumed.config.steps = cfg.train.steps;
    return resumed;
  }();

  const std::uint64_t start = state.step;
  const auto trace = hypml::training::train(splits.train, state, cfg.train.steps - start,
                                            [&](const auto& r) { log_step(opts.progress, r, cfg.train.steps); });
  const Evaluation ev = evaluate(state.model, cfg.train.loss, splits.test, cfg.ks);

  hypml::training::CheckpointInfo info{hash, {}};
  for (const auto* m : {&ev.encoder, &ev.head}) {
    for (const auto& [k, v] : m->recall_at) info.metrics[m->space + ".recall@" + std::to_string(k)] = v;
  }

  fs::create_directories(cfg.out);
  const std::string checkpoint = (fs::path(cfg.out) / "checkpoint.hypc").string();
  const std::string trace_path = (fs::path(cfg.out) / "trace.tsv").string();
  hypml::training::save_checkpoint(checkpoint, state, info);
  {
    std::ofstream out(trace_path, std::ios::binary);
    require(static_cast<bool>(out), ErrorKind::Data, "cannot write " + trace_path);
    out << "# config_hash=" << hash << "\nstep\tloss\tgrad_norm\n";
    for (const auto& r : trace) out << r.step << "\t" << format_double(r.loss) << "\t" << format_double(r.grad_norm) << "\n";
  }
  {
    std::ofstream out((fs::path(cfg.out) / "config.json").string(), std::ios::binary);
    out << to_json(cfg).dump(2) << "\n";
  }

  Report report("train", hash);
  report.add("run")
      .set("data", cfg.data)
      .set("metric", std::string(hypml::loss::to_string(cfg.train.loss.metric)))
      .set("start_step", start)
      .set("steps", state.step)
      .set("checkpoint", checkpoint)
      .set("trace", trace_path);
  if (!trace.empty()) {
    const std::size_t tail = std::min<std::size_t>(10, trace.size());
    double last = 0.0;
    for (std::size_t i = trace.size() - tail; i < trace.size(); ++i) last += trace[i].loss;
    report.add("loss").set("first", trace.front().loss).set("last10_mean", last / static_cast<double>(tail));
  }
  report.add("split")
      .set("train_samples", static_cast<std::int64_t>(splits.train.size()))
      .set("test_samples", static_cast<std::int64_t>(splits.test.size()));
  add_recalls(report, ev.encoder);
  add_recalls(report, ev.head);
  report.save((fs::path(cfg.out) / "report.txt").string());
  return report;
}

Report cmd_eval(const EvalOptions& opts) {
  hypml::training::CheckpointInfo info;
  const auto state = hypml::training::load_checkpoint(opts.checkpoint, &info);
  const auto& loss = state.config.loss;
  if (opts.head_metric) {
    const auto requested = hypml::loss::parse_metric(*opts.head_metric);
    require(requested == loss.metric, ErrorKind::Config,
            "head was trained with the " + std::string(hypml::loss::to_string(loss.metric)) +
                " metric; evaluating it with " + std::string(hypml::loss::to_string(requested)) +
                " is not supported");
  }

  Report report("eval", info.config_hash);
  if (opts.gallery.empty()) {
    const data::VectorDataset ds = pick_split(data::load_dataset(opts.data), opts.split);
    const Evaluation ev = evaluate(state.model, loss, ds, opts.ks);
    report.add("input").set("data", opts.data).set("split", opts.split).set("queries",
                                                                            static_cast<std::int64_t>(ds.size()));
    add_recalls(report, ev.encoder);
    add_recalls(report, ev.head);
    return report;
  }

  const data::VectorDataset queries = data::load_dataset(opts.data);
  const data::VectorDataset gallery = data::load_dataset(opts.gallery);
  const auto q = state.model.forward(queries.features);
  const auto g = state.model.forward(gallery.features);
  auto enc = eval::query_gallery_recall(q.features, queries.labels, g.features, gallery.labels, opts.ks,
                                        eval::RetrievalMetric::cosine());
  enc.space = "encoder";
  auto head = eval::query_gallery_recall(q.head_out, queries.labels, g.head_out, gallery.labels, opts.ks,
                                         head_metric(loss));
  head.space = "head";
  report.add("input")
      .set("queries_path", opts.data)
      .set("gallery_path", opts.gallery)
      .set("queries", static_cast<std::int64_t>(queries.size()))
      .set("gallery", static_cast<std::int64_t>(gallery.size()));
  add_recalls(report, enc);
  add_recalls(report, head);
  return report;
}

RunConfig with_sweep_value(RunConfig cfg, const std::string& param, double value) {
  auto integral = [&](const char* what) {
    require(value >= 1.0 && value == std::floor(value), ErrorKind::Config,
            std::string(what) + " sweep values must be positive integers");
    return static_cast<long long>(value);
  };
  if (param == "c") {
    cfg.train.loss.curvature = value;
  } else if (param == "head_dim") {
    cfg.model.head_dim = integral("head_dim");
  } else if (param == "batch_classes") {
    cfg.train.batch_classes = static_cast<int>(integral("batch_classes"));
  } else {
    fail(ErrorKind::Config, "unknown sweep parameter '" + param + "' (expected c, head_dim or batch_classes)");
  }
  cfg.train.validate();
  return cfg;
}

std::vector<double> default_sweep_values(const std::string& param) {
  if (param == "c") return {0.01, 0.05, 0.1, 0.3, 0.5, 1.0};
  if (param == "head_dim") return {16, 32, 64, 128};
  if (param == "batch_classes") return {4, 8, 16, 32};
  fail(ErrorKind::Config, "unknown sweep parameter '" + param + "' (expected c, head_dim or batch_classes)");
}

std::vector<SweepRow> run_sweep(const RunConfig& base, const data::VectorDataset& ds, const std::string& param,
                                const std::vector<double>& values, int seeds, const Progress& progress) {
  require(seeds >= 1, ErrorKind::Config, "--seeds must be at least 1");
  std::vector<SweepRow> rows;
  for (double value : values) {
    for (int i = 0; i < seeds; ++i) {
      RunConfig cfg = with_sweep_value(base, param, value);
      cfg.train.seed = base.train.seed + static_cast<std::uint64_t>(i);
      const Experiment exp = run_experiment(cfg, ds);
      rows.push_back({value, cfg.train.seed, exp.evaluation.head.at(1)});
      if (!progress.quiet) {
        std::cerr << param << "=" << format_double(value) << " seed=" << cfg.train.seed
                  << " recall@1=" << rows.back().recall_at_1 << "\n";
      }
    }
  }
  return rows;
}

Report cmd_sweep(const SweepOptions& opts) {
  require(!opts.base.data.empty(), ErrorKind::Config, "sweep needs a dataset (--data or \"data\" in the config)");
  const data::VectorDataset ds = data::load_dataset(opts.base.data);
  const std::vector<double> values = opts.values.empty() ? default_sweep_values(opts.param) : opts.values;
  RunConfig keyed = opts.base;
  keyed.ks = {1};
  const std::string hash = hex64(fnv1a(opts.param.data(), opts.param.size(),
                                       std::stoull(config_hash(keyed, ds), nullptr, 16)));

  const auto rows = run_sweep(opts.base, ds, opts.param, values, opts.seeds, opts.progress);
  Report report("sweep", hash);
  report.add("sweep").set("param", opts.param).set("seeds", opts.seeds).set("steps", opts.base.train.steps);
  for (const SweepRow& r : rows) {
    report.add("run").set("param", opts.param).set("value", r.value).set("seed", r.seed).set("recall@1", r.recall_at_1);
  }
  for (double value : values) {
    std::vector<double> recalls;
    for (const SweepRow& r : rows) {
      if (r.value == value) recalls.push_back(r.recall_at_1);
    }
    report.add("summary")
        .set("param", opts.param)
        .set("value", value)
        .set("runs", static_cast<std::int64_t>(recalls.size()))
        .set("mean", mean_of(recalls))
        .set("sd", sd_of(recalls));
  }
  return report;
}

Report cmd_export(const ExportOptions& opts) {
  require(!opts.output.empty(), ErrorKind::Config, "export needs an output path (-o)");
  require(opts.space == "encoder" || opts.space == "head", ErrorKind::Config,
          "unknown space '" + opts.space + "' (expected encoder or head)");
  hypml::training::CheckpointInfo info;
  const auto state = hypml::training::load_checkpoint(opts.checkpoint, &info);
  const data::VectorDataset ds = pick_split(data::load_dataset(opts.data), opts.split);

  data::VectorDataset out;
  out.labels = ds.labels;
  std::string geometry = "euclidean";
  if (opts.space == "encoder") {
    out.features = state.model.encode(ds.features);
  } else {
    const auto metric = head_metric(state.config.loss);
    out.features = eval::prepare(state.model.project(ds.features), metric);
    geometry = metric.kind == eval::RetrievalMetric::Kind::Hyperbolic ? "poincare_ball" : "unit_sphere";
  }
  data::save_dataset(opts.output, out);

  Report report("export", info.config_hash);
  report.add("export")
      .set("path", opts.output)
      .set("space", opts.space)
      .set("split", opts.split)
      .set("geometry", geometry)
      .set("curvature", state.config.loss.curvature)
      .set("samples", static_cast<std::int64_t>(out.size()))
      .set("dim", static_cast<std::int64_t>(out.dim()))
      .set("content_hash", dataset_hash(out, 0));
  write_sidecar(opts.output, report);
  return report;
}

}  // namespace hypmetric
