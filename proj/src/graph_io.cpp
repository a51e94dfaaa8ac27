// SPDX-License-Identifier: Apache-2.0
#include "gatclust/graph_io.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <unordered_map>

#include "json.hpp"

namespace gatclust {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

[[noreturn]] void fail(const std::string& msg) { throw std::runtime_error("graph-io: " + msg); }

std::vector<std::string> split_ws(const std::string& line) {
  std::vector<std::string> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && std::isspace(static_cast<unsigned char>(line[i]))) ++i;
    std::size_t start = i;
    while (i < line.size() && !std::isspace(static_cast<unsigned char>(line[i]))) ++i;
    if (i > start) out.push_back(line.substr(start, i - start));
  }
  return out;
}

bool parse_int(const std::string& s, std::int64_t& out) {
  const char* first = s.data();
  const char* last = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(first, last, out);
  return ec == std::errc() && ptr == last;
}

std::ifstream open_or_fail(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail("cannot open file: " + path);
  return in;
}

}  // namespace

Normalization normalization_from_string(const std::string& s) {
  if (s == "none") return Normalization::None;
  if (s == "row-sum") return Normalization::RowSum;
  if (s == "l2-row") return Normalization::L2Row;
  fail("unknown normalization mode: " + s);
}

std::string to_string(Normalization n) {
  switch (n) {
    case Normalization::None: return "none";
    case Normalization::RowSum: return "row-sum";
    case Normalization::L2Row: return "l2-row";
  }
  fail("unknown normalization enum value");
}

DatasetManifest DatasetManifest::from_json_file(const std::string& path) {
  std::ifstream in = open_or_fail(path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    fail("manifest " + path + " is not valid JSON: " + e.what());
  }
  DatasetManifest m;
  try {
    m.edge_file = j.at("edge_file").get<std::string>();
    m.attr_file = j.at("attr_file").get<std::string>();
    m.label_file = j.value("label_file", std::string());
    m.normalization = normalization_from_string(j.value("normalization", std::string("none")));
  } catch (const json::exception& e) {
    fail("manifest " + path + " is missing fields: " + e.what());
  }
  // Paths resolve relative to the manifest's directory.
  const fs::path base = fs::path(path).parent_path();
  auto resolve = [&](std::string& p) {
    if (!p.empty() && fs::path(p).is_relative()) p = (base / p).string();
  };
  resolve(m.edge_file);
  resolve(m.attr_file);
  resolve(m.label_file);
  return m;
}

void DatasetManifest::to_json_file(const std::string& path) const {
  json j;
  j["edge_file"] = edge_file;
  j["attr_file"] = attr_file;
  if (!label_file.empty()) j["label_file"] = label_file;
  j["normalization"] = to_string(normalization);
  std::ofstream out(path);
  if (!out) fail("cannot write manifest: " + path);
  out << j.dump(2) << '\n';
}

bool Graph::has_edge(std::int32_t i, std::int32_t j) const {
  if (i < 0 || i >= n || j < 0 || j >= n) fail("has_edge: node index out of range");
  const auto& nbrs = adjacency[i];
  return std::binary_search(nbrs.begin(), nbrs.end(), j);
}

void Graph::validate() const {
  if (attributes.rows() != n) fail("attribute matrix row count does not match node count");
  if (!attributes.allFinite()) fail("attribute matrix contains non-finite values");
  if (!labels.empty() && static_cast<std::int32_t>(labels.size()) != n) {
    fail("label count does not match node count");
  }
  for (const auto& [i, j] : edges) {
    if (i < 0 || j < 0 || i >= n || j >= n) fail("edge endpoint out of range");
    if (i >= j) fail("edges must be stored with i < j");
  }
  for (std::size_t e = 1; e < edges.size(); ++e) {
    if (!(edges[e - 1] < edges[e])) fail("edges must be sorted and unique");
  }
}

Graph make_graph(std::int32_t n, std::vector<std::pair<std::int32_t, std::int32_t>> raw_edges,
                 Mat attributes, std::vector<int> labels) {
  Graph g;
  g.n = n;
  g.attributes = std::move(attributes);
  if (g.attributes.rows() != n) fail("attribute matrix must have one row per node");

  std::set<std::pair<std::int32_t, std::int32_t>> dedup;
  for (auto [a, b] : raw_edges) {
    if (a < 0 || a >= n || b < 0 || b >= n) fail("edge endpoint index out of range");
    if (a == b) continue;  // self-loops are not stored
    dedup.insert({std::min(a, b), std::max(a, b)});
  }
  g.edges.assign(dedup.begin(), dedup.end());

  g.adjacency.assign(n, {});
  for (auto [a, b] : g.edges) {
    g.adjacency[a].push_back(b);
    g.adjacency[b].push_back(a);
  }
  for (auto& nbrs : g.adjacency) std::sort(nbrs.begin(), nbrs.end());

  if (!labels.empty()) {
    if (static_cast<std::int32_t>(labels.size()) != n) fail("label count does not match node count");
    // Remap to dense class ids in sorted order of the raw values.
    std::map<int, int> remap;
    for (int v : labels) remap.emplace(v, 0);
    int next = 0;
    for (auto& [raw, dense] : remap) dense = next++;
    g.labels.resize(labels.size());
    for (std::size_t i = 0; i < labels.size(); ++i) g.labels[i] = remap[labels[i]];
    g.num_classes = next;
  }
  g.validate();
  return g;
}

namespace {

Mat read_attr_file(const std::string& path, bool& binary) {
  std::ifstream in = open_or_fail(path);
  std::vector<std::vector<double>> rows;
  std::string line;
  std::size_t line_no = 0;
  std::int64_t width = -1;
  binary = true;
  while (std::getline(in, line)) {
    ++line_no;
    const auto tokens = split_ws(line);
    if (tokens.empty()) continue;
    std::vector<double> row;
    row.reserve(tokens.size());
    for (const std::string& tok : tokens) {
      char* end = nullptr;
      const double v = std::strtod(tok.c_str(), &end);
      if (end != tok.c_str() + tok.size()) {
        fail("attribute file " + path + " line " + std::to_string(line_no) +
             ": malformed value '" + tok + "'");
      }
      if (!std::isfinite(v)) {
        fail("attribute file " + path + " line " + std::to_string(line_no) +
             ": non-finite value");
      }
      if (v != 0.0 && v != 1.0) binary = false;
      row.push_back(v);
    }
    if (width < 0) {
      width = static_cast<std::int64_t>(row.size());
    } else if (width != static_cast<std::int64_t>(row.size())) {
      fail("attribute file " + path + " line " + std::to_string(line_no) +
           ": row-length mismatch (expected " + std::to_string(width) + ", got " +
           std::to_string(row.size()) + ")");
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty()) fail("attribute file " + path + " is empty");
  Mat x(static_cast<Eigen::Index>(rows.size()), width);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::int64_t j = 0; j < width; ++j) x(static_cast<Eigen::Index>(i), j) = rows[i][j];
  }
  return x;
}

struct EdgeList {
  std::vector<std::pair<std::int32_t, std::int32_t>> edges;
  std::vector<std::string> external_ids;  // empty when ids were dense ints
};

EdgeList read_edge_file(const std::string& path, std::int32_t n) {
  std::ifstream in = open_or_fail(path);
  std::string line;
  std::size_t line_no = 0;
  std::vector<std::pair<std::string, std::string>> raw;
  std::vector<std::size_t> raw_lines;
  bool all_int_in_range = true;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line[0] == '#') continue;
    const auto tokens = split_ws(line);
    if (tokens.empty()) continue;
    if (tokens.size() != 2) {
      fail("edge file " + path + " line " + std::to_string(line_no) +
           ": expected 'src<TAB>dst', got " + std::to_string(tokens.size()) + " fields");
    }
    for (const std::string& tok : tokens) {
      std::int64_t v = 0;
      if (!parse_int(tok, v) || v < 0 || v >= n) all_int_in_range = false;
    }
    raw.emplace_back(tokens[0], tokens[1]);
    raw_lines.push_back(line_no);
  }

  EdgeList out;
  if (all_int_in_range) {
    for (const auto& [a, b] : raw) {
      std::int64_t ia = 0, ib = 0;
      parse_int(a, ia);
      parse_int(b, ib);
      out.edges.emplace_back(static_cast<std::int32_t>(ia), static_cast<std::int32_t>(ib));
    }
    return out;
  }

  // External ids: map distinct tokens to dense ids in first-appearance order.
  // Attribute rows must be listed in the same token order.
  std::unordered_map<std::string, std::int32_t> id_of;
  auto intern = [&](const std::string& tok, std::size_t at_line) {
    auto it = id_of.find(tok);
    if (it != id_of.end()) return it->second;
    const auto next = static_cast<std::int32_t>(out.external_ids.size());
    if (next >= n) {
      fail("edge file " + path + " line " + std::to_string(at_line) + ": token '" + tok +
           "' would require more nodes than the attribute file provides (" + std::to_string(n) +
           ")");
    }
    id_of.emplace(tok, next);
    out.external_ids.push_back(tok);
    return next;
  };
  for (std::size_t r = 0; r < raw.size(); ++r) {
    // Sequenced so the first token of a line is interned before the second.
    const std::int32_t a = intern(raw[r].first, raw_lines[r]);
    const std::int32_t b = intern(raw[r].second, raw_lines[r]);
    out.edges.emplace_back(a, b);
  }
  return out;
}

std::vector<int> read_label_file(const std::string& path, std::int32_t n) {
  std::ifstream in = open_or_fail(path);
  std::vector<int> labels;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto tokens = split_ws(line);
    if (tokens.empty()) continue;
    std::int64_t v = 0;
    if (tokens.size() != 1 || !parse_int(tokens[0], v)) {
      fail("label file " + path + " line " + std::to_string(line_no) + ": expected one integer");
    }
    labels.push_back(static_cast<int>(v));
  }
  if (static_cast<std::int32_t>(labels.size()) != n) {
    fail("label file " + path + " has " + std::to_string(labels.size()) + " labels for " +
         std::to_string(n) + " nodes");
  }
  return labels;
}

}  // namespace

Graph load_graph(const DatasetManifest& manifest) {
  bool binary = false;
  Mat x = read_attr_file(manifest.attr_file, binary);
  const auto n = static_cast<std::int32_t>(x.rows());

  EdgeList el = read_edge_file(manifest.edge_file, n);

  std::vector<int> labels;
  if (!manifest.label_file.empty()) labels = read_label_file(manifest.label_file, n);

  x = normalize_attributes(x, manifest.normalization);
  Graph g = make_graph(n, std::move(el.edges), std::move(x), std::move(labels));
  g.attrs_binary = binary;
  g.external_ids = std::move(el.external_ids);
  g.normalization = manifest.normalization;
  return g;
}

void save_graph(const Graph& g, const DatasetManifest& manifest) {
  {
    std::ofstream out(manifest.edge_file);
    if (!out) fail("cannot write edge file: " + manifest.edge_file);
    out << "# src\tdst\n";
    for (const auto& [i, j] : g.edges) out << i << '\t' << j << '\n';
  }
  {
    std::ofstream out(manifest.attr_file);
    if (!out) fail("cannot write attribute file: " + manifest.attr_file);
    out.precision(17);
    for (Eigen::Index i = 0; i < g.attributes.rows(); ++i) {
      for (Eigen::Index j = 0; j < g.attributes.cols(); ++j) {
        if (j) out << ' ';
        out << g.attributes(i, j);
      }
      out << '\n';
    }
  }
  if (!g.labels.empty()) {
    if (manifest.label_file.empty()) fail("graph has labels but manifest names no label file");
    std::ofstream out(manifest.label_file);
    if (!out) fail("cannot write label file: " + manifest.label_file);
    for (int v : g.labels) out << v << '\n';
  }
}

std::vector<std::int32_t> adjacency_row(const Graph& g, std::int32_t i) {
  if (i < 0 || i >= g.n) fail("adjacency_row: node index out of range");
  return g.adjacency[i];
}

Mat normalize_attributes(const Mat& x, Normalization mode) {
  if (!x.allFinite()) fail("normalize_attributes: input contains non-finite values");
  if (mode == Normalization::None) return x;
  Mat out = x;
  for (Eigen::Index i = 0; i < out.rows(); ++i) {
    const double norm = mode == Normalization::RowSum ? out.row(i).cwiseAbs().sum()
                                                      : out.row(i).norm();
    if (norm > 0.0) out.row(i) /= norm;
  }
  return out;
}

void save_id_mapping(const Graph& g, const std::string& path) {
  std::ofstream out(path);
  if (!out) fail("cannot write id mapping: " + path);
  for (std::size_t i = 0; i < g.external_ids.size(); ++i) {
    out << i << '\t' << g.external_ids[i] << '\n';
  }
}

}  // namespace gatclust
