// SPDX-License-Identifier: Apache-2.0
#include "gatclust/trainer.hpp"

#include <chrono>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "gatclust/metrics.hpp"
#include "json.hpp"

namespace gatclust {

namespace {

using nlohmann::json;

[[noreturn]] void fail(const std::string& msg) {
  throw std::runtime_error("trainer: " + msg);
}

json config_to_json(const TrainConfig& c) {
  return json{{"gamma", c.gamma},
              {"t_order", c.t_order},
              {"update_interval", c.update_interval},
              {"pretrain_epochs", c.pretrain_epochs},
              {"joint_iters", c.joint_iters},
              {"lr_pretrain", c.lr_pretrain},
              {"lr_joint", c.lr_joint},
              {"seed", c.seed},
              {"hidden_dim", c.hidden_dim},
              {"embed_dim", c.embed_dim},
              {"k", c.k},
              {"optimizer", c.optimizer},
              {"sigma", c.sigma},
              {"attention", c.attention},
              {"normalization", c.normalization},
              {"weight_decay", c.weight_decay},
              {"dropout", c.dropout},
              {"sampled_loss", c.sampled_loss},
              {"kmeans_restarts", c.kmeans_restarts},
              {"validate_distributions", c.validate_distributions}};
}

TrainConfig config_from_json(const json& j) {
  if (!j.is_object()) fail("config must be a JSON object");
  TrainConfig c;
  for (const auto& [key, value] : j.items()) {
    try {
      if (key == "gamma") {
        c.gamma = value.get<double>();
      } else if (key == "t_order") {
        c.t_order = value.get<int>();
      } else if (key == "update_interval") {
        c.update_interval = value.get<int>();
      } else if (key == "pretrain_epochs") {
        c.pretrain_epochs = value.get<int>();
      } else if (key == "joint_iters") {
        c.joint_iters = value.get<int>();
      } else if (key == "lr_pretrain") {
        c.lr_pretrain = value.get<double>();
      } else if (key == "lr_joint") {
        c.lr_joint = value.get<double>();
      } else if (key == "seed") {
        c.seed = value.get<std::uint64_t>();
      } else if (key == "hidden_dim") {
        c.hidden_dim = value.get<int>();
      } else if (key == "embed_dim") {
        c.embed_dim = value.get<int>();
      } else if (key == "k") {
        c.k = value.get<int>();
      } else if (key == "optimizer") {
        c.optimizer = value.get<std::string>();
      } else if (key == "sigma") {
        c.sigma = value.get<std::string>();
      } else if (key == "attention") {
        c.attention = value.get<std::string>();
      } else if (key == "normalization") {
        c.normalization = value.get<std::string>();
      } else if (key == "weight_decay") {
        c.weight_decay = value.get<double>();
      } else if (key == "dropout") {
        c.dropout = value.get<double>();
      } else if (key == "sampled_loss") {
        c.sampled_loss = value.get<bool>();
      } else if (key == "kmeans_restarts") {
        c.kmeans_restarts = value.get<int>();
      } else if (key == "validate_distributions") {
        c.validate_distributions = value.get<bool>();
      } else {
        fail("unknown config field '" + key + "'");
      }
    } catch (const json::exception&) {
      fail("config field '" + key + "' has the wrong type");
    }
  }
  return c;
}

void write_doubles(std::ostream& out, const Mat& m) {
  out.write(reinterpret_cast<const char*>(m.data()),
            static_cast<std::streamsize>(m.size()) * static_cast<std::streamsize>(sizeof(double)));
}

void read_doubles(std::istream& in, Mat& m, const std::string& path) {
  const auto bytes = static_cast<std::streamsize>(m.size()) *
                     static_cast<std::streamsize>(sizeof(double));
  in.read(reinterpret_cast<char*>(m.data()), bytes);
  if (in.gcount() != bytes) fail("truncated checkpoint " + path);
}

}  // namespace

void TrainConfig::validate() const {
  if (!(gamma >= 0.0)) fail("gamma must be nonnegative");
  if (t_order < 1) fail("t_order must be at least 1");
  if (update_interval < 1) fail("update_interval must be at least 1");
  if (pretrain_epochs < 0) fail("pretrain_epochs must be nonnegative");
  if (joint_iters < 1) fail("joint_iters must be at least 1");
  if (!(lr_pretrain > 0.0) || !(lr_joint > 0.0)) fail("learning rates must be positive");
  if (hidden_dim < 1 || embed_dim < 1) fail("layer widths must be positive");
  if (k < 0) fail("k must be nonnegative");
  if (optimizer != "adam" && optimizer != "sgd") fail("optimizer must be 'adam' or 'sgd'");
  sigma_mode_from_string(sigma);
  attention_mode_from_string(attention);
  if (!normalization.empty()) normalization_from_string(normalization);
  if (!(weight_decay >= 0.0)) fail("weight_decay must be nonnegative");
  if (dropout < 0.0 || dropout >= 1.0) fail("dropout must be in [0, 1)");
  if (kmeans_restarts < 1) fail("kmeans_restarts must be at least 1");
}

TrainConfig TrainConfig::from_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail("cannot open config file " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    fail("config file " + path + " is not valid JSON: " + e.what());
  }
  return config_from_json(j);
}

TrainConfig TrainConfig::from_json_text(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    fail(std::string("config text is not valid JSON: ") + e.what());
  }
  return config_from_json(j);
}

std::string TrainConfig::to_json_text() const { return config_to_json(*this).dump(2); }

std::string RunRecord::to_json_text() const {
  json j;
  j["config"] = config_to_json(config);
  j["seed"] = seed;
  j["dataset"] = json{{"n", dataset.n},
                      {"attr_dim", dataset.attr_dim},
                      {"edges", dataset.edges},
                      {"classes", dataset.classes},
                      {"k_used", dataset.k_used},
                      {"attrs_binary", dataset.attrs_binary},
                      {"m_diagonal", dataset.m_diagonal},
                      {"normalization", dataset.normalization}};
  j["pretrain_loss"] = pretrain_loss;
  j["loss_r"] = loss_r;
  j["loss_c"] = loss_c;
  j["loss_total"] = loss_total;
  j["p_update_iters"] = p_update_iters;
  if (!metrics.empty()) {
    json m;
    for (const char* key : {"acc", "nmi", "fscore", "ari"}) m[key] = json::array();
    for (const IterationMetrics& it : metrics) {
      m["acc"].push_back(it.acc);
      m["nmi"].push_back(it.nmi);
      m["fscore"].push_back(it.fscore);
      m["ari"].push_back(it.ari);
    }
    j["metrics"] = m;
    const IterationMetrics& last = metrics.back();
    j["final_metrics"] = json{
        {"acc", last.acc}, {"nmi", last.nmi}, {"fscore", last.fscore}, {"ari", last.ari}};
  }
  j["final_labels"] = final_labels;
  j["wall_seconds"] = wall_seconds;
  return j.dump(2);
}

void RunRecord::to_json_file(const std::string& path) const {
  std::ofstream out(path);
  if (!out) fail("cannot write run record " + path);
  out << to_json_text() << '\n';
  if (!out) fail("failed while writing run record " + path);
}

Trainer::Trainer(const Graph& g, TrainConfig cfg)
    : g_(g), cfg_(std::move(cfg)), rng_(cfg_.seed) {
  cfg_.validate();
  if (g_.n < 1) fail("graph is empty");
  k_ = cfg_.k > 0 ? cfg_.k : g_.num_classes;

  prox_ = build_proximity(g_, cfg_.t_order);
  store_ = make_encoder_params(g_.attributes.cols(), cfg_.hidden_dim, cfg_.embed_dim, rng_);

  EncoderConfig ec;
  ec.hidden_dim = cfg_.hidden_dim;
  ec.embed_dim = cfg_.embed_dim;
  ec.sigma = sigma_mode_from_string(cfg_.sigma);
  ec.attention = attention_mode_from_string(cfg_.attention);
  ec.dropout = cfg_.dropout;
  ec.sampled_loss = cfg_.sampled_loss;
  model_ = std::make_unique<GatAutoencoder>(g_, prox_, ec, store_);

  record_.config = cfg_;
  record_.seed = cfg_.seed;
  record_.dataset.n = g_.n;
  record_.dataset.attr_dim = g_.attr_dim();
  record_.dataset.edges = g_.edge_count();
  record_.dataset.classes = g_.num_classes;
  record_.dataset.k_used = k_;
  record_.dataset.attrs_binary = g_.attrs_binary;
  record_.dataset.normalization = to_string(g_.normalization);
  for (std::int32_t i = 0; i < prox_.m.rows && !record_.dataset.m_diagonal; ++i) {
    for (std::int64_t e = prox_.m.row_ptr[i]; e < prox_.m.row_ptr[i + 1]; ++e) {
      if (prox_.m.col[e] == i) {
        record_.dataset.m_diagonal = true;
        break;
      }
    }
  }
}

void Trainer::apply_weight_decay() {
  if (cfg_.weight_decay <= 0.0) return;
  for (auto& e : store_.entries()) {
    if (e.name == "mu") continue;  // centers are not decayed toward zero
    e.tensor.grad.noalias() += cfg_.weight_decay * e.tensor.value;
  }
}

void Trainer::optimizer_step(double lr) {
  if (cfg_.optimizer == "adam") {
    AdamConfig ac;
    ac.lr = lr;
    store_.step_adam(ac);
  } else {
    store_.step_sgd(lr);
  }
}

void Trainer::pretrain() {
  const auto start = std::chrono::steady_clock::now();
  model_->set_training(true);
  Mat dz(g_.n, cfg_.embed_dim);
  for (long epoch = pretrain_done_; epoch < cfg_.pretrain_epochs; ++epoch) {
    model_->begin_step(rng_);
    store_.zero_grads();
    model_->forward();
    dz.setZero();
    const double loss = model_->reconstruction_loss_and_grad(dz);
    if (!std::isfinite(loss)) {
      fail("non-finite reconstruction loss at pretraining epoch " + std::to_string(epoch));
    }
    model_->backward(dz);
    apply_weight_decay();
    optimizer_step(cfg_.lr_pretrain);
    record_.pretrain_loss.push_back(loss);
    ++pretrain_done_;
  }
  pretrained_ = true;
  record_.wall_seconds +=
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

void Trainer::ensure_clustering() {
  if (clustering_ready_) return;
  if (k_ < 2) fail("joint training needs k >= 2 (got " + std::to_string(k_) + ")");
  if (k_ > g_.n) fail("k exceeds the number of nodes");

  model_->set_training(false);
  const Mat& z = model_->forward();
  KmeansConfig kc;
  kc.restarts = cfg_.kmeans_restarts;
  const Mat centers = kmeans(z, k_, kc, rng_);

  Tensor& mu = store_.add("mu", k_, cfg_.embed_dim);
  mu.value = centers;
  store_.reset_optimizer();  // the joint phase starts with fresh moments
  cluster_.k = k_;
  cluster_.last_p_update = -1;
  clustering_ready_ = true;
}

void Trainer::check_distributions(long iter, double lc) const {
  const auto bad = [&](const std::string& what) {
    fail("distribution invariant violated at iteration " + std::to_string(iter) + ": " + what);
  };
  if (!rows_are_distributions(cluster_.q, 1e-12)) bad("Q rows");
  if (!rows_are_distributions(cluster_.p, 1e-12)) bad("P rows");
  if (lc < -1e-12) bad("negative KL");
  for (const std::vector<double>* alpha : {&model_->alpha0(), &model_->alpha1()}) {
    for (std::int32_t i = 0; i < prox_.m.rows; ++i) {
      double sum = 0.0;
      for (std::int64_t e = prox_.m.row_ptr[i]; e < prox_.m.row_ptr[i + 1]; ++e) {
        if (!((*alpha)[e] >= 0.0)) bad("negative attention weight");
        sum += (*alpha)[e];
      }
      if (std::abs(sum - 1.0) > 1e-12) bad("attention row " + std::to_string(i));
    }
  }
}

void Trainer::joint_step(long iter) {
  model_->set_training(true);
  model_->begin_step(rng_);
  store_.zero_grads();
  const Mat& z = model_->forward();
  Tensor& mu = store_.at("mu");

  cluster_.q = soft_assign(z, mu.value);
  if (iter % cfg_.update_interval == 0) {
    cluster_.p = target_distribution(cluster_.q);
    cluster_.last_p_update = iter;
    record_.p_update_iters.push_back(iter);
  }

  Mat dz = Mat::Zero(g_.n, cfg_.embed_dim);
  const double lr_loss = model_->reconstruction_loss_and_grad(dz);
  double lc = 0.0;
  if (cfg_.gamma > 0.0) {
    lc = clustering_loss_grads(z, mu.value, cluster_.q, cluster_.p, cfg_.gamma, dz, mu.grad);
  } else {
    lc = clustering_loss(cluster_.p, cluster_.q);
  }
  const double total = lr_loss + cfg_.gamma * lc;
  if (!std::isfinite(total)) fail("non-finite loss at iteration " + std::to_string(iter));
  if (cfg_.validate_distributions) check_distributions(iter, lc);

  model_->backward(dz);
  apply_weight_decay();
  optimizer_step(cfg_.lr_joint);

  record_.loss_r.push_back(lr_loss);
  record_.loss_c.push_back(lc);
  record_.loss_total.push_back(total);
  record_.final_labels = hard_labels(cluster_.q);
  if (!g_.labels.empty()) {
    const MetricsReport rep = evaluate_clustering(record_.final_labels, g_.labels);
    record_.metrics.push_back({rep.acc, rep.nmi, rep.fscore, rep.ari});
  }
  ++joint_done_;
}

const RunRecord& Trainer::fit() { return fit_until(cfg_.joint_iters); }

void Trainer::set_joint_iters(int joint_iters) {
  if (joint_iters < 1) fail("joint_iters must be at least 1");
  if (joint_iters < joint_done_) fail("cannot lower joint_iters below completed iterations");
  cfg_.joint_iters = joint_iters;
  record_.config.joint_iters = joint_iters;
}

const RunRecord& Trainer::fit_until(long joint_iters) {
  if (joint_iters > cfg_.joint_iters) fail("fit_until beyond the configured joint_iters");
  const auto start = std::chrono::steady_clock::now();
  if (!pretrained_) pretrain();
  ensure_clustering();
  for (long iter = joint_done_; iter < joint_iters; ++iter) joint_step(iter);
  record_.wall_seconds +=
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return record_;
}

const Mat& Trainer::embedding() {
  model_->set_training(false);
  return model_->forward();
}

void Trainer::save_checkpoint(const std::string& path) const {
  json tensors = json::array();
  for (const auto& e : store_.entries()) {
    tensors.push_back(json{{"name", e.name},
                           {"rows", e.tensor.rows()},
                           {"cols", e.tensor.cols()}});
  }
  json header{{"format", "gatclust-checkpoint"},
              {"version", 1},
              {"endianness", "little"},
              {"nodes", g_.n},
              {"attr_dim", g_.attributes.cols()},
              {"edges", g_.edges.size()},
              {"seed", cfg_.seed},
              {"rng", rng_.serialize()},
              {"adam_step", store_.adam_step_count()},
              {"pretrain_done", pretrain_done_},
              {"pretrained", pretrained_},
              {"joint_done", joint_done_},
              {"clustering_ready", clustering_ready_},
              {"last_p_update", cluster_.last_p_update},
              {"k", k_},
              {"p_rows", cluster_.p.rows()},
              {"p_cols", cluster_.p.cols()},
              {"config", config_to_json(cfg_)},
              {"tensors", tensors}};

  std::ofstream out(path, std::ios::binary);
  if (!out) fail("cannot write checkpoint " + path);
  out << header.dump() << '\n';
  Mat zero;
  for (const auto& e : store_.entries()) {
    write_doubles(out, e.tensor.value);
    if (e.adam.m.size() == 0) {
      zero = Mat::Zero(e.tensor.rows(), e.tensor.cols());
      write_doubles(out, zero);
      write_doubles(out, zero);
    } else {
      write_doubles(out, e.adam.m);
      write_doubles(out, e.adam.v);
    }
  }
  if (cluster_.p.size() > 0) write_doubles(out, cluster_.p);
  if (!out) fail("failed while writing checkpoint " + path);
}

void Trainer::load_payload(const std::string& header_text, std::istream& in,
                           const std::string& path) {
  json header;
  try {
    header = json::parse(header_text);
  } catch (const json::exception&) {
    fail("checkpoint " + path + " has a corrupt header");
  }
  try {
    rng_.deserialize(header.at("rng").get<std::string>());
    pretrain_done_ = header.at("pretrain_done").get<long>();
    pretrained_ = header.at("pretrained").get<bool>();
    joint_done_ = header.at("joint_done").get<long>();
    clustering_ready_ = header.at("clustering_ready").get<bool>();
    k_ = header.at("k").get<int>();
    cluster_.k = clustering_ready_ ? k_ : 0;
    cluster_.last_p_update = header.at("last_p_update").get<long>();

    for (const json& t : header.at("tensors")) {
      const auto name = t.at("name").get<std::string>();
      const auto rows = t.at("rows").get<Eigen::Index>();
      const auto cols = t.at("cols").get<Eigen::Index>();
      if (!store_.contains(name)) store_.add(name, rows, cols);
      auto& entry = *[&]() {
        for (auto& e : store_.entries()) {
          if (e.name == name) return &e;
        }
        fail("checkpoint tensor '" + name + "' not found after insertion");
      }();
      if (entry.tensor.rows() != rows || entry.tensor.cols() != cols) {
        fail("checkpoint tensor '" + name + "' shape does not match the config");
      }
      read_doubles(in, entry.tensor.value, path);
      entry.adam.reset(rows, cols);
      read_doubles(in, entry.adam.m, path);
      read_doubles(in, entry.adam.v, path);
    }
    store_.set_adam_step_count(header.at("adam_step").get<long>());

    const auto p_rows = header.at("p_rows").get<Eigen::Index>();
    const auto p_cols = header.at("p_cols").get<Eigen::Index>();
    if (p_rows > 0 && p_cols > 0) {
      cluster_.p.resize(p_rows, p_cols);
      read_doubles(in, cluster_.p, path);
    }
  } catch (const json::exception&) {
    fail("checkpoint " + path + " is missing header fields");
  }
  in.peek();
  if (!in.eof()) fail("checkpoint " + path + " has trailing bytes");
}

std::unique_ptr<Trainer> Trainer::resume(const Graph& g, const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail("cannot open checkpoint " + path);
  std::string header_text;
  if (!std::getline(in, header_text)) fail("checkpoint " + path + " is empty");

  json header;
  try {
    header = json::parse(header_text);
  } catch (const json::exception&) {
    fail("checkpoint " + path + " has a corrupt header");
  }
  if (header.value("format", "") != "gatclust-checkpoint") {
    fail(path + " is not a checkpoint file");
  }
  if (header.value("version", 0) != 1) fail("unsupported checkpoint version in " + path);

  const auto nodes = header.value("nodes", Eigen::Index{-1});
  const auto attr_dim = header.value("attr_dim", Eigen::Index{-1});
  const auto edges = header.value("edges", std::size_t{0});
  if (nodes != g.n || attr_dim != g.attributes.cols() || edges != g.edges.size()) {
    fail("checkpoint " + path + " was written for a different graph (" + std::to_string(nodes) +
         " nodes, " + std::to_string(attr_dim) + " attributes, " + std::to_string(edges) +
         " edges)");
  }

  const TrainConfig cfg = config_from_json(header.at("config"));
  auto trainer = std::make_unique<Trainer>(g, cfg);
  trainer->load_payload(header_text, in, path);
  return trainer;
}

}  // namespace gatclust
