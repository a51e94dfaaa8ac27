// SPDX-License-Identifier: Apache-2.0
#include <atomic>
#include <cmath>
#include <cstdint>
#include <exception>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <memory>
#include <string>
#include <thread>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "gatclust/graph_io.hpp"
#include "gatclust/metrics.hpp"
#include "gatclust/proximity.hpp"
#include "gatclust/selftrain.hpp"
#include "gatclust/trainer.hpp"

namespace {

namespace fs = std::filesystem;
using nlohmann::json;
using namespace gatclust;

struct CommonOpts {
  std::string manifest;
  std::string config;
  std::string out = "runs";
  std::string seeds = "0,1,2,3,4";
  int jobs = 1;
  bool export_distributions = false;
  bool export_proximity = false;

  // Flag overrides, applied only when the flag was given.
  double gamma = 0.0;
  int t_order = 0;
  int embed_dim = 0;
  int hidden_dim = 0;
  int k = 0;
  int pretrain_epochs = 0;
  int joint_iters = 0;
  int update_interval = 0;
  double lr_pretrain = 0.0;
  double lr_joint = 0.0;
  std::string optimizer;
  std::string sigma;
  std::string attention;
  std::string normalization;
  double weight_decay = 0.0;
  double dropout = 0.0;
  bool sampled_loss = false;
  int kmeans_restarts = 0;
  bool validate_distributions = false;
};

void add_common(CLI::App* sub, CommonOpts& o, bool manifest_required) {
  auto* m = sub->add_option("--manifest", o.manifest, "Dataset manifest JSON");
  if (manifest_required) m->required();
  sub->add_option("--config", o.config, "Training config JSON; flags override its values");
  sub->add_option("--out", o.out, "Output directory");
  sub->add_option("--seeds", o.seeds, "Comma list and/or a..b ranges, e.g. 0,1,2 or 0..4");
  sub->add_option("--jobs", o.jobs, "Parallel seed workers")->check(CLI::PositiveNumber);
  sub->add_option("--gamma", o.gamma, "Clustering coefficient");
  sub->add_option("--t-order", o.t_order, "Proximity order t");
  sub->add_option("--embed-dim", o.embed_dim, "Embedding width");
  sub->add_option("--hidden-dim", o.hidden_dim, "Hidden width");
  sub->add_option("--k", o.k, "Cluster count (default: class count from labels)");
  sub->add_option("--pretrain-epochs", o.pretrain_epochs, "Reconstruction-only epochs");
  sub->add_option("--iters", o.joint_iters, "Joint iterations");
  sub->add_option("--update-interval", o.update_interval, "Target refresh interval T");
  sub->add_option("--lr-pretrain", o.lr_pretrain, "Pretraining learning rate");
  sub->add_option("--lr-joint", o.lr_joint, "Joint-phase learning rate");
  sub->add_option("--optimizer", o.optimizer, "adam or sgd");
  sub->add_option("--sigma", o.sigma, "lrelu-identity, lrelu-lrelu, identity-identity");
  sub->add_option("--attention", o.attention, "per-layer or shared-input");
  sub->add_option("--normalization", o.normalization, "none, row-sum, l2-row");
  sub->add_option("--weight-decay", o.weight_decay, "L2 penalty on the network weights");
  sub->add_option("--dropout", o.dropout, "Hidden-layer drop probability");
  sub->add_flag("--sampled-loss", o.sampled_loss, "Subsample reconstruction pairs per step");
  sub->add_option("--kmeans-restarts", o.kmeans_restarts, "Center initialization restarts");
  sub->add_flag("--validate-distributions", o.validate_distributions,
                "Check alpha/Q/P row sums and KL sign every iteration");
  sub->add_flag("--export-distributions", o.export_distributions, "Also write q.tsv and p.tsv");
  sub->add_flag("--export-proximity", o.export_proximity, "Also write proximity.tsv");
}

TrainConfig build_config(const CLI::App* sub, const CommonOpts& o) {
  TrainConfig cfg;
  if (!o.config.empty()) cfg = TrainConfig::from_json_file(o.config);
  if (sub->count("--gamma")) cfg.gamma = o.gamma;
  if (sub->count("--t-order")) cfg.t_order = o.t_order;
  if (sub->count("--embed-dim")) cfg.embed_dim = o.embed_dim;
  if (sub->count("--hidden-dim")) cfg.hidden_dim = o.hidden_dim;
  if (sub->count("--k")) cfg.k = o.k;
  if (sub->count("--pretrain-epochs")) cfg.pretrain_epochs = o.pretrain_epochs;
  if (sub->count("--iters")) cfg.joint_iters = o.joint_iters;
  if (sub->count("--update-interval")) cfg.update_interval = o.update_interval;
  if (sub->count("--lr-pretrain")) cfg.lr_pretrain = o.lr_pretrain;
  if (sub->count("--lr-joint")) cfg.lr_joint = o.lr_joint;
  if (sub->count("--optimizer")) cfg.optimizer = o.optimizer;
  if (sub->count("--sigma")) cfg.sigma = o.sigma;
  if (sub->count("--attention")) cfg.attention = o.attention;
  if (sub->count("--normalization")) cfg.normalization = o.normalization;
  if (sub->count("--weight-decay")) cfg.weight_decay = o.weight_decay;
  if (sub->count("--dropout")) cfg.dropout = o.dropout;
  if (sub->count("--sampled-loss")) cfg.sampled_loss = o.sampled_loss;
  if (sub->count("--kmeans-restarts")) cfg.kmeans_restarts = o.kmeans_restarts;
  if (sub->count("--validate-distributions")) {
    cfg.validate_distributions = o.validate_distributions;
  }
  cfg.validate();
  return cfg;
}

std::vector<std::uint64_t> parse_seeds(const std::string& text) {
  std::vector<std::uint64_t> seeds;
  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t comma = text.find(',', pos);
    if (comma == std::string::npos) comma = text.size();
    const std::string token = text.substr(pos, comma - pos);
    pos = comma + 1;
    if (token.empty()) continue;
    const std::size_t dots = token.find("..");
    try {
      if (dots == std::string::npos) {
        seeds.push_back(std::stoull(token));
      } else {
        const std::uint64_t lo = std::stoull(token.substr(0, dots));
        const std::uint64_t hi = std::stoull(token.substr(dots + 2));
        if (hi < lo) throw std::invalid_argument("backwards range");
        for (std::uint64_t s = lo; s <= hi; ++s) seeds.push_back(s);
      }
    } catch (const std::exception&) {
      throw std::runtime_error("cli: bad seed list '" + text + "'");
    }
  }
  if (seeds.empty()) throw std::runtime_error("cli: empty seed list");
  return seeds;
}

Graph load_dataset(const std::string& manifest_path, const TrainConfig& cfg) {
  DatasetManifest manifest = DatasetManifest::from_json_file(manifest_path);
  if (!cfg.normalization.empty()) {
    manifest.normalization = normalization_from_string(cfg.normalization);
  }
  return load_graph(manifest);
}

struct SeedResult {
  std::uint64_t seed = 0;
  bool has_metrics = false;
  IterationMetrics final_metrics;
  double wall_seconds = 0.0;
};

// Runs tasks 0..count-1 on `jobs` workers; any task exception is rethrown.
void run_parallel(int jobs, std::size_t count, const std::function<void(std::size_t)>& task) {
  if (jobs <= 1 || count <= 1) {
    for (std::size_t i = 0; i < count; ++i) task(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::exception_ptr> errors(count);
  std::vector<std::thread> workers;
  const int n_workers = std::min<std::size_t>(static_cast<std::size_t>(jobs), count);
  workers.reserve(static_cast<std::size_t>(n_workers));
  for (int w = 0; w < n_workers; ++w) {
    workers.emplace_back([&]() {
      for (std::size_t i = next.fetch_add(1); i < count; i = next.fetch_add(1)) {
        try {
          task(i);
        } catch (...) {
          errors[i] = std::current_exception();
        }
      }
    });
  }
  for (std::thread& t : workers) t.join();
  for (const std::exception_ptr& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

SeedResult run_fit_seed(const Graph& g, TrainConfig cfg, std::uint64_t seed, const fs::path& dir,
                        bool pretrain_only, bool export_distributions, bool export_proximity) {
  cfg.seed = seed;
  fs::create_directories(dir);
  Trainer trainer(g, cfg);

  if (pretrain_only) {
    trainer.pretrain();
  } else {
    trainer.fit();
  }

  trainer.record().to_json_file((dir / "run.json").string());
  trainer.embedding();
  trainer.model().export_embedding((dir / "embedding.tsv").string());
  trainer.save_checkpoint((dir / "checkpoint.bin").string());
  if (!pretrain_only) {
    save_labels((dir / "labels.txt").string(), trainer.record().final_labels);
    if (export_distributions) {
      save_distribution((dir / "q.tsv").string(), trainer.cluster().q);
      save_distribution((dir / "p.tsv").string(), trainer.cluster().p);
    }
  }
  if (export_proximity) {
    gatclust::export_proximity(trainer.proximity(), (dir / "proximity.tsv").string());
  }

  SeedResult result;
  result.seed = seed;
  result.wall_seconds = trainer.record().wall_seconds;
  if (!pretrain_only && !trainer.record().metrics.empty()) {
    result.has_metrics = true;
    result.final_metrics = trainer.record().metrics.back();
  }
  return result;
}

double mean_of(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return v.empty() ? 0.0 : s / static_cast<double>(v.size());
}

double stddev_of(const std::vector<double>& v) {
  if (v.size() < 2) return 0.0;
  const double m = mean_of(v);
  double s = 0.0;
  for (double x : v) s += (x - m) * (x - m);
  return std::sqrt(s / static_cast<double>(v.size() - 1));
}

json aggregate_json(const std::vector<SeedResult>& results) {
  std::vector<double> acc, nmi, fscore, ari;
  for (const SeedResult& r : results) {
    if (!r.has_metrics) continue;
    acc.push_back(r.final_metrics.acc);
    nmi.push_back(r.final_metrics.nmi);
    fscore.push_back(r.final_metrics.fscore);
    ari.push_back(r.final_metrics.ari);
  }
  json j;
  j["seeds"] = json::array();
  for (const SeedResult& r : results) {
    json row{{"seed", r.seed}, {"wall_seconds", r.wall_seconds}};
    if (r.has_metrics) {
      row["acc"] = r.final_metrics.acc;
      row["nmi"] = r.final_metrics.nmi;
      row["fscore"] = r.final_metrics.fscore;
      row["ari"] = r.final_metrics.ari;
    }
    j["seeds"].push_back(row);
  }
  if (!acc.empty()) {
    j["mean"] = json{{"acc", mean_of(acc)},
                     {"nmi", mean_of(nmi)},
                     {"fscore", mean_of(fscore)},
                     {"ari", mean_of(ari)}};
    j["stddev"] = json{{"acc", stddev_of(acc)},
                       {"nmi", stddev_of(nmi)},
                       {"fscore", stddev_of(fscore)},
                       {"ari", stddev_of(ari)}};
  }
  return j;
}

void print_aggregate(const std::vector<SeedResult>& results) {
  char line[256];
  for (const SeedResult& r : results) {
    if (r.has_metrics) {
      std::snprintf(line, sizeof(line),
                    "seed %llu: acc %.4f  nmi %.4f  fscore %.4f  ari %.4f  (%.1fs)",
                    static_cast<unsigned long long>(r.seed), r.final_metrics.acc,
                    r.final_metrics.nmi, r.final_metrics.fscore, r.final_metrics.ari,
                    r.wall_seconds);
    } else {
      std::snprintf(line, sizeof(line), "seed %llu: done (%.1fs)",
                    static_cast<unsigned long long>(r.seed), r.wall_seconds);
    }
    std::cout << line << '\n';
  }
  const json agg = aggregate_json(results);
  if (agg.contains("mean")) {
    std::snprintf(line, sizeof(line),
                  "mean:   acc %.4f  nmi %.4f  fscore %.4f  ari %.4f",
                  agg["mean"]["acc"].get<double>(), agg["mean"]["nmi"].get<double>(),
                  agg["mean"]["fscore"].get<double>(), agg["mean"]["ari"].get<double>());
    std::cout << line << '\n';
    std::snprintf(line, sizeof(line),
                  "stddev: acc %.4f  nmi %.4f  fscore %.4f  ari %.4f",
                  agg["stddev"]["acc"].get<double>(), agg["stddev"]["nmi"].get<double>(),
                  agg["stddev"]["fscore"].get<double>(), agg["stddev"]["ari"].get<double>());
    std::cout << line << '\n';
  }
}

int cmd_train(const CLI::App* sub, const CommonOpts& opts, bool pretrain_only,
              const std::string& resume_path) {
  const TrainConfig cfg = build_config(sub, opts);
  const Graph g = load_dataset(opts.manifest, cfg);
  const fs::path out(opts.out);

  if (!resume_path.empty()) {
    auto trainer = Trainer::resume(g, resume_path);
    if (sub->count("--iters")) trainer->set_joint_iters(opts.joint_iters);
    const std::uint64_t seed = trainer->config().seed;
    const fs::path dir = out / ("seed-" + std::to_string(seed));
    fs::create_directories(dir);
    if (pretrain_only) {
      trainer->pretrain();
    } else {
      trainer->fit();
    }
    trainer->record().to_json_file((dir / "run.json").string());
    trainer->embedding();
    trainer->model().export_embedding((dir / "embedding.tsv").string());
    trainer->save_checkpoint((dir / "checkpoint.bin").string());
    if (!pretrain_only) {
      save_labels((dir / "labels.txt").string(), trainer->record().final_labels);
    }
    SeedResult r;
    r.seed = seed;
    r.wall_seconds = trainer->record().wall_seconds;
    if (!pretrain_only && !trainer->record().metrics.empty()) {
      r.has_metrics = true;
      r.final_metrics = trainer->record().metrics.back();
    }
    print_aggregate({r});
    return 0;
  }

  const std::vector<std::uint64_t> seeds = parse_seeds(opts.seeds);
  std::vector<SeedResult> results(seeds.size());
  run_parallel(opts.jobs, seeds.size(), [&](std::size_t i) {
    const fs::path dir = out / ("seed-" + std::to_string(seeds[i]));
    results[i] = run_fit_seed(g, cfg, seeds[i], dir, pretrain_only, opts.export_distributions,
                              opts.export_proximity);
  });

  print_aggregate(results);
  fs::create_directories(out);
  std::ofstream agg((out / "aggregate.json").string());
  if (!agg) throw std::runtime_error("cli: cannot write aggregate.json");
  agg << aggregate_json(results).dump(2) << '\n';
  return 0;
}

int cmd_evaluate(const std::string& pred_path, const std::string& truth_path,
                 const std::string& json_out) {
  const std::vector<std::int32_t> pred = load_labels(pred_path);
  const std::vector<std::int32_t> truth = load_labels(truth_path);
  if (pred.size() != truth.size()) {
    throw std::runtime_error("metrics: prediction and truth files differ in length");
  }
  const MetricsReport report = evaluate_clustering(pred, truth);
  std::cout << report.to_table();
  if (!json_out.empty()) {
    std::ofstream out(json_out);
    if (!out) throw std::runtime_error("cli: cannot write " + json_out);
    out << report.to_json() << '\n';
  }
  return 0;
}

int cmd_export_embedding(const std::string& manifest_path, const std::string& checkpoint,
                         const std::string& out_file) {
  // The checkpoint carries the config; normalization must match what the
  // checkpointed run saw, so it is taken from its config echo.
  std::ifstream probe(checkpoint, std::ios::binary);
  if (!probe) throw std::runtime_error("cli: cannot open checkpoint " + checkpoint);
  probe.close();

  DatasetManifest manifest = DatasetManifest::from_json_file(manifest_path);
  Graph g = load_graph(manifest);
  auto trainer = Trainer::resume(g, checkpoint);
  if (!trainer->config().normalization.empty() &&
      trainer->config().normalization != to_string(g.normalization)) {
    manifest.normalization = normalization_from_string(trainer->config().normalization);
    g = load_graph(manifest);
    trainer = Trainer::resume(g, checkpoint);
  }
  trainer->embedding();
  trainer->model().export_embedding(out_file);
  std::cout << "wrote " << out_file << '\n';
  return 0;
}

int cmd_sweep(const CLI::App* sub, const CommonOpts& opts, std::vector<int> dims) {
  if (dims.empty()) dims = {4, 16, 64, 256, 1024};
  const TrainConfig base = build_config(sub, opts);
  const Graph g = load_dataset(opts.manifest, base);
  const std::vector<std::uint64_t> seeds = parse_seeds(opts.seeds);
  const fs::path out(opts.out);

  struct Cell {
    int dim;
    std::uint64_t seed;
  };
  std::vector<Cell> cells;
  for (int d : dims) {
    for (std::uint64_t s : seeds) cells.push_back({d, s});
  }
  std::vector<SeedResult> results(cells.size());
  run_parallel(opts.jobs, cells.size(), [&](std::size_t i) {
    TrainConfig cfg = base;
    cfg.embed_dim = cells[i].dim;
    const fs::path dir =
        out / ("dim-" + std::to_string(cells[i].dim)) / ("seed-" + std::to_string(cells[i].seed));
    results[i] = run_fit_seed(g, cfg, cells[i].seed, dir, false, false, false);
  });

  json table = json::array();
  std::cout << "dim     acc(mean)  acc(std)   nmi(mean)  nmi(std)\n";
  char line[160];
  for (std::size_t d = 0; d < dims.size(); ++d) {
    std::vector<double> acc, nmi;
    for (std::size_t i = 0; i < cells.size(); ++i) {
      if (cells[i].dim != dims[d] || !results[i].has_metrics) continue;
      acc.push_back(results[i].final_metrics.acc);
      nmi.push_back(results[i].final_metrics.nmi);
    }
    std::snprintf(line, sizeof(line), "%-7d %-10.4f %-10.4f %-10.4f %-10.4f", dims[d],
                  mean_of(acc), stddev_of(acc), mean_of(nmi), stddev_of(nmi));
    std::cout << line << '\n';
    table.push_back(json{{"dim", dims[d]},
                         {"acc_mean", mean_of(acc)},
                         {"acc_std", stddev_of(acc)},
                         {"nmi_mean", mean_of(nmi)},
                         {"nmi_std", stddev_of(nmi)}});
  }
  fs::create_directories(out);
  std::ofstream fout((out / "sweep.json").string());
  if (!fout) throw std::runtime_error("cli: cannot write sweep.json");
  fout << table.dump(2) << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Graph attention autoencoder clustering"};
  app.require_subcommand(1);

  CommonOpts fit_opts, pre_opts, sweep_opts;
  std::string resume_path;
  std::string pred_path, truth_path, eval_json;
  std::string ee_manifest, ee_checkpoint, ee_out = "embedding.tsv";
  std::vector<int> sweep_dims;

  CLI::App* fit = app.add_subcommand("fit", "Pretrain, initialize centers, joint optimize");
  add_common(fit, fit_opts, true);
  fit->add_option("--resume", resume_path, "Continue from a checkpoint");

  CLI::App* pre = app.add_subcommand("pretrain", "Reconstruction-only training");
  pre_opts.seeds = "0";
  add_common(pre, pre_opts, true);

  CLI::App* eval = app.add_subcommand("evaluate", "Score predicted labels against ground truth");
  eval->add_option("pred", pred_path, "Predicted labels, one id per line")->required();
  eval->add_option("truth", truth_path, "Ground-truth labels")->required();
  eval->add_option("--json", eval_json, "Also write the report as JSON");

  CLI::App* ee = app.add_subcommand("export-embedding", "Embedding of a checkpointed model");
  ee->add_option("--manifest", ee_manifest, "Dataset manifest JSON")->required();
  ee->add_option("--checkpoint", ee_checkpoint, "Checkpoint file")->required();
  ee->add_option("--out", ee_out, "Output TSV path");

  CLI::App* sweep = app.add_subcommand("sweep", "Embedding-width study");
  sweep_opts.seeds = "0,1,2";
  add_common(sweep, sweep_opts, true);
  sweep->add_option("--dims", sweep_dims, "Embedding widths to try")->delimiter(',');

  CLI11_PARSE(app, argc, argv);

  try {
    if (fit->parsed()) return cmd_train(fit, fit_opts, false, resume_path);
    if (pre->parsed()) return cmd_train(pre, pre_opts, true, "");
    if (eval->parsed()) return cmd_evaluate(pred_path, truth_path, eval_json);
    if (ee->parsed()) return cmd_export_embedding(ee_manifest, ee_checkpoint, ee_out);
    if (sweep->parsed()) return cmd_sweep(sweep, sweep_opts, sweep_dims);
  } catch (const std::exception& e) {
    std::cerr << "gatclust: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
