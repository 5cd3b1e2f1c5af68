#pragma once

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <numeric>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "agnn/common.hpp"
#include "agnn/graph.hpp"

namespace agnn {

struct Dataset {
  Graph graph;
  Mat features;             // n x m
  std::vector<int> labels;  // values in [0, r_classes)
  int r_classes = 0;
};

struct Split {
  std::vector<int> train, valid, test;
};

namespace detail {

inline bool is_comment_or_blank(const std::string& line) {
  for (char c : line) {
    if (c == '#') return true;
    if (!std::isspace(static_cast<unsigned char>(c))) return false;
  }
  return true;
}

inline long parse_int(const std::string& tok, const std::string& file,
                      int line_no) {
  std::size_t pos = 0;
  long v = 0;
  try {
    v = std::stol(tok, &pos);
  } catch (const std::exception&) {
    pos = 0;
  }
  if (pos != tok.size())
    throw DataError(file + ":" + std::to_string(line_no) +
                    ": non-numeric token '" + tok + "'");
  return v;
}

inline double parse_double(const std::string& tok, const std::string& file,
                           int line_no) {
  std::size_t pos = 0;
  double v = 0.0;
  try {
    v = std::stod(tok, &pos);
  } catch (const std::exception&) {
    pos = 0;
  }
  if (pos != tok.size())
    throw DataError(file + ":" + std::to_string(line_no) +
                    ": non-numeric token '" + tok + "'");
  return v;
}

inline std::vector<std::string> split_ws(const std::string& line) {
  std::vector<std::string> toks;
  std::istringstream ss(line);
  std::string t;
  while (ss >> t) toks.push_back(t);
  return toks;
}

}  // namespace detail

// Edge list: one "u<TAB>v" pair per line, 0-based indices, '#' comments
// ignored. Returned pairs still contain whatever duplicates/self-loops the
// file had; build_graph canonicalizes.
inline std::vector<std::pair<int, int>> read_edge_list(
    const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open edge file '" + path + "'");
  std::vector<std::pair<int, int>> edges;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (detail::is_comment_or_blank(line)) continue;
    const auto toks = detail::split_ws(line);
    if (toks.size() != 2)
      throw DataError(path + ":" + std::to_string(line_no) +
                      ": expected 'u<TAB>v', got " +
                      std::to_string(toks.size()) + " tokens");
    edges.emplace_back(
        static_cast<int>(detail::parse_int(toks[0], path, line_no)),
        static_cast<int>(detail::parse_int(toks[1], path, line_no)));
  }
  return edges;
}

inline Mat read_features(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open feature file '" + path + "'");
  std::vector<std::vector<double>> rows;
  std::string line;
  int line_no = 0;
  std::size_t width = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (detail::is_comment_or_blank(line)) continue;
    const auto toks = detail::split_ws(line);
    std::vector<double> row;
    row.reserve(toks.size());
    for (const auto& t : toks)
      row.push_back(detail::parse_double(t, path, line_no));
    if (width == 0) width = row.size();
    if (row.size() != width)
      throw DataError(path + ":" + std::to_string(line_no) + ": expected " +
                      std::to_string(width) + " columns, got " +
                      std::to_string(row.size()));
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw DataError(path + ": no feature rows");
  Mat f(rows.size(), width);
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = 0; j < width; ++j) f(i, j) = rows[i][j];
  return f;
}

inline std::vector<int> read_labels(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open label file '" + path + "'");
  std::vector<int> labels;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (detail::is_comment_or_blank(line)) continue;
    const auto toks = detail::split_ws(line);
    if (toks.size() != 1)
      throw DataError(path + ":" + std::to_string(line_no) +
                      ": expected one label per line");
    const long v = detail::parse_int(toks[0], path, line_no);
    if (v < 0)
      throw DataError(path + ":" + std::to_string(line_no) +
                      ": label out of range (negative)");
    labels.push_back(static_cast<int>(v));
  }
  if (labels.empty()) throw DataError(path + ": no labels");
  return labels;
}

// Assembles and validates the three files into one Dataset. R is inferred as
// 1 + max label; every class below R must occur at least once.
inline Dataset load_dataset(const std::string& edges_path,
                            const std::string& features_path,
                            const std::string& labels_path) {
  Dataset d;
  d.features = read_features(features_path);
  d.labels = read_labels(labels_path);
  const int n = static_cast<int>(d.features.rows());
  if (static_cast<int>(d.labels.size()) != n)
    throw DataError("row-count mismatch: '" + features_path + "' has " +
                    std::to_string(n) + " rows but '" + labels_path +
                    "' has " + std::to_string(d.labels.size()));
  d.r_classes = 1 + *std::max_element(d.labels.begin(), d.labels.end());
  std::vector<int> count(d.r_classes, 0);
  for (int y : d.labels) count[y]++;
  for (int c = 0; c < d.r_classes; ++c)
    if (count[c] == 0)
      throw DataError("'" + labels_path + "': class " + std::to_string(c) +
                      " absent");
  try {
    d.graph = build_graph(read_edge_list(edges_path), n);
  } catch (const DataError& e) {
    throw DataError("'" + edges_path + "': " + e.what());
  }
  return d;
}

// Planted-partition benchmark: equal-size class blocks, edge probability
// p_in inside a block and p_out across, features = class mean of magnitude
// feature_signal plus unit Gaussian noise.
inline Dataset generate_sbm(int n, int r_classes, double p_in, double p_out,
                            int m, double feature_signal, std::uint64_t seed) {
  require(r_classes >= 2 && n > 0 && n % r_classes == 0,
          "generate_sbm: n must be a positive multiple of r_classes");
  require(p_out >= 0.0 && p_out <= p_in && p_in <= 1.0,
          "generate_sbm: need 0 <= p_out <= p_in <= 1");
  require(m > 0, "generate_sbm: need m > 0");

  Dataset d;
  d.r_classes = r_classes;
  const int block = n / r_classes;
  d.labels.resize(n);
  for (int i = 0; i < n; ++i) d.labels[i] = i / block;

  Rng rng(seed);
  std::vector<std::pair<int, int>> edges;
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) {
      const double p = d.labels[i] == d.labels[j] ? p_in : p_out;
      if (uniform(rng, 0.0, 1.0) < p) edges.emplace_back(i, j);
    }
  d.graph = build_graph(edges, n);

  // Class means: orthogonal unit directions over coordinate blocks, scaled
  // by feature_signal (coordinates wrap when m < r_classes).
  const int coords = std::max(1, m / r_classes);
  Mat means = Mat::Zero(r_classes, m);
  for (int c = 0; c < r_classes; ++c)
    for (int k = 0; k < coords; ++k)
      means(c, (c * coords + k) % m) =
          feature_signal / std::sqrt(static_cast<double>(coords));

  d.features.resize(n, m);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < m; ++j)
      d.features(i, j) = means(d.labels[i], j) + gaussian(rng);
  return d;
}

// Stratified train split (per_class nodes from each class), then valid and
// test sampled without replacement from the remainder. Requested sizes are
// clipped to availability with a warning, which small synthetic sets hit.
inline Split make_split(const std::vector<int>& labels, int per_class,
                        int n_valid, int n_test, std::uint64_t seed) {
  const int n = static_cast<int>(labels.size());
  const int r = 1 + *std::max_element(labels.begin(), labels.end());
  Rng rng(seed);

  Split split;
  std::vector<char> taken(n, 0);
  for (int c = 0; c < r; ++c) {
    std::vector<int> members;
    for (int i = 0; i < n; ++i)
      if (labels[i] == c) members.push_back(i);
    if (static_cast<int>(members.size()) < per_class)
      throw DataError("make_split: class " + std::to_string(c) + " has only " +
                      std::to_string(members.size()) + " nodes, need " +
                      std::to_string(per_class));
    std::shuffle(members.begin(), members.end(), rng);
    for (int k = 0; k < per_class; ++k) {
      split.train.push_back(members[k]);
      taken[members[k]] = 1;
    }
  }
  std::sort(split.train.begin(), split.train.end());

  std::vector<int> rest;
  for (int i = 0; i < n; ++i)
    if (!taken[i]) rest.push_back(i);
  std::shuffle(rest.begin(), rest.end(), rng);

  const int take_valid = std::min<int>(n_valid, rest.size());
  const int take_test = std::min<int>(n_test, rest.size() - take_valid);
  if (take_valid < n_valid || take_test < n_test)
    std::cerr << "warning: split clipped to " << take_valid << " valid / "
              << take_test << " test (requested " << n_valid << "/" << n_test
              << ")\n";
  split.valid.assign(rest.begin(), rest.begin() + take_valid);
  split.test.assign(rest.begin() + take_valid,
                    rest.begin() + take_valid + take_test);
  std::sort(split.valid.begin(), split.valid.end());
  std::sort(split.test.begin(), split.test.end());
  return split;
}

// Writes content to path via a temp file + rename, so readers never observe
// partial files.
inline void atomic_write_file(const std::string& path,
                              const std::string& content) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot write '" + tmp + "'");
    out << content;
    if (!out) throw DataError("short write to '" + tmp + "'");
  }
  std::filesystem::rename(tmp, path);
}

// The three dataset files, written so that load_dataset round-trips the
// in-memory Dataset exactly ("%.17g" preserves doubles bit for bit).
inline void write_dataset(const Dataset& d, const std::string& dir) {
  std::filesystem::create_directories(dir);
  std::string edges;
  const Csr& a = d.graph.adj;
  for (int i = 0; i < a.n; ++i)
    for (int k = a.row_ptr[i]; k < a.row_ptr[i + 1]; ++k)
      if (i < a.col[k])
        edges += std::to_string(i) + "\t" + std::to_string(a.col[k]) + "\n";
  atomic_write_file(dir + "/edges.tsv", edges);

  std::string feats;
  char buf[64];
  for (Eigen::Index i = 0; i < d.features.rows(); ++i) {
    for (Eigen::Index j = 0; j < d.features.cols(); ++j) {
      std::snprintf(buf, sizeof buf, "%.17g", d.features(i, j));
      feats += buf;
      feats += j + 1 < d.features.cols() ? '\t' : '\n';
    }
  }
  atomic_write_file(dir + "/features.tsv", feats);

  std::string labels;
  for (int y : d.labels) labels += std::to_string(y) + "\n";
  atomic_write_file(dir + "/labels.tsv", labels);
}

}  // namespace agnn
