// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "gatclust/dense.hpp"

namespace gatclust {

enum class Normalization { None, RowSum, L2Row };

Normalization normalization_from_string(const std::string& s);
std::string to_string(Normalization n);

// Names the on-disk pieces of one dataset.
struct DatasetManifest {
  std::string edge_file;
  std::string attr_file;
  std::string label_file;  // empty = unlabeled
  Normalization normalization = Normalization::RowSum;

  static DatasetManifest from_json_file(const std::string& path);
  void to_json_file(const std::string& path) const;
};

// An immutable attributed graph. Node ids are dense 0..n-1, edges are
// undirected, deduplicated, and free of self-loops.
struct Graph {
  std::int32_t n = 0;
  std::vector<std::pair<std::int32_t, std::int32_t>> edges;  // i < j, sorted
  Mat attributes;                                            // n x m
  std::vector<int> labels;                                   // empty = unlabeled
  int num_classes = 0;                                       // 0 when unlabeled

  // Adjacency lists (sorted), built at construction.
  std::vector<std::vector<std::int32_t>> adjacency;

  // Loader metadata.
  bool attrs_binary = false;                    // raw attributes were all 0/1
  std::vector<std::string> external_ids;        // empty when ids were dense ints
  Normalization normalization = Normalization::None;

  std::int32_t attr_dim() const { return static_cast<std::int32_t>(attributes.cols()); }
  std::int64_t edge_count() const { return static_cast<std::int64_t>(edges.size()); }
  int degree(std::int32_t i) const { return static_cast<int>(adjacency[i].size()); }
  bool has_edge(std::int32_t i, std::int32_t j) const;
  void validate() const;
};

// Assembles a graph from raw parts (used by tests and generators).
Graph make_graph(std::int32_t n, std::vector<std::pair<std::int32_t, std::int32_t>> raw_edges,
                 Mat attributes, std::vector<int> labels = {});

Graph load_graph(const DatasetManifest& manifest);

// Writes the graph back out in the manifest's file formats.
void save_graph(const Graph& g, const DatasetManifest& manifest);

// Sparse 0/1 adjacency row: sorted indices j with {i, j} an edge.
std::vector<std::int32_t> adjacency_row(const Graph& g, std::int32_t i);

// Row normalization. Zero-norm rows pass through unchanged.
Mat normalize_attributes(const Mat& x, Normalization mode);

// Persists an external-id mapping ("<dense id>\t<token>" per line).
void save_id_mapping(const Graph& g, const std::string& path);

}  // namespace gatclust
