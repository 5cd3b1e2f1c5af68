#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "agnn/common.hpp"

namespace agnn {

// Compressed sparse row matrix. Every instance in this project is square and
// structurally symmetric; column indices are strictly increasing within a row
// and there are no duplicate entries.
struct Csr {
  int n = 0;
  std::vector<int> row_ptr;  // size n+1
  std::vector<int> col;      // size nnz
  std::vector<double> val;   // size nnz

  int nnz() const { return static_cast<int>(col.size()); }

  Mat dense() const {
    Mat d = Mat::Zero(n, n);
    for (int i = 0; i < n; ++i)
      for (int k = row_ptr[i]; k < row_ptr[i + 1]; ++k) d(i, col[k]) = val[k];
    return d;
  }

  bool has_entry(int i, int j) const {
    auto first = col.begin() + row_ptr[i];
    auto last = col.begin() + row_ptr[i + 1];
    return std::binary_search(first, last, j);
  }
};

// Undirected graph stored as a symmetric CSR adjacency with unit edge values
// and no self-loops. Immutable after construction.
struct Graph {
  int n = 0;
  Csr adj;
};

// a_hat is the self-looped symmetrically normalized adjacency, l_tilde the
// matching Laplacian. Both share one sparsity pattern so that their entrywise
// sum is exactly the identity.
struct NormalizedOperators {
  Csr a_hat;
  Csr l_tilde;
};

// Cumulative multiply-add count of all spmm calls on this thread. Tests use
// it to assert the per-layer cost scales with the edge count.
inline std::uint64_t& spmm_madd_count() {
  thread_local std::uint64_t count = 0;
  return count;
}

// Builds the symmetric adjacency from an edge list. Duplicate pairs and
// self-loops are dropped so that every input yields the one canonical
// adjacency; normalization re-adds the self-loop.
inline Graph build_graph(const std::vector<std::pair<int, int>>& edge_pairs, int n) {
  require(n >= 0, "build_graph: negative node count");
  std::vector<std::pair<int, int>> dir;
  dir.reserve(edge_pairs.size() * 2);
  for (std::size_t k = 0; k < edge_pairs.size(); ++k) {
    auto [u, v] = edge_pairs[k];
    if (u < 0 || u >= n || v < 0 || v >= n)
      throw DataError("edge line " + std::to_string(k + 1) + ": node index (" +
                      std::to_string(u) + ", " + std::to_string(v) +
                      ") out of range for n=" + std::to_string(n));
    if (u == v) continue;
    dir.emplace_back(u, v);
    dir.emplace_back(v, u);
  }
  std::sort(dir.begin(), dir.end());
  dir.erase(std::unique(dir.begin(), dir.end()), dir.end());

  Graph g;
  g.n = n;
  g.adj.n = n;
  g.adj.row_ptr.assign(n + 1, 0);
  for (auto& [u, v] : dir) g.adj.row_ptr[u + 1]++;
  for (int i = 0; i < n; ++i) g.adj.row_ptr[i + 1] += g.adj.row_ptr[i];
  g.adj.col.reserve(dir.size());
  g.adj.val.assign(dir.size(), 1.0);
  for (auto& [u, v] : dir) g.adj.col.push_back(v);  // dir is sorted by (u, v)
  return g;
}

// a_hat = D^{-1/2} (A + I) D^{-1/2}, l_tilde = I - a_hat. The self-loop keeps
// every degree >= 1, so the rescaling never divides by zero. l_tilde is
// materialized on the same pattern because the embedding layer multiplies by
// it every forward pass.
inline NormalizedOperators normalize(const Graph& g) {
  const int n = g.n;
  std::vector<double> inv_sqrt_deg(n);
  for (int i = 0; i < n; ++i) {
    const double deg = 1.0 + (g.adj.row_ptr[i + 1] - g.adj.row_ptr[i]);
    inv_sqrt_deg[i] = 1.0 / std::sqrt(deg);
  }

  NormalizedOperators ops;
  for (Csr* m : {&ops.a_hat, &ops.l_tilde}) {
    m->n = n;
    m->row_ptr.assign(n + 1, 0);
    m->col.reserve(g.adj.nnz() + n);
    m->val.reserve(g.adj.nnz() + n);
  }

  for (int i = 0; i < n; ++i) {
    bool diag_done = false;
    auto push = [&](int j, double a) {
      ops.a_hat.col.push_back(j);
      ops.a_hat.val.push_back(a);
      ops.l_tilde.col.push_back(j);
      ops.l_tilde.val.push_back(i == j ? 1.0 - a : -a);
    };
    for (int k = g.adj.row_ptr[i]; k < g.adj.row_ptr[i + 1]; ++k) {
      const int j = g.adj.col[k];
      if (!diag_done && j > i) {
        push(i, inv_sqrt_deg[i] * inv_sqrt_deg[i]);
        diag_done = true;
      }
      push(j, inv_sqrt_deg[i] * inv_sqrt_deg[j]);
    }
    if (!diag_done) push(i, inv_sqrt_deg[i] * inv_sqrt_deg[i]);
    ops.a_hat.row_ptr[i + 1] = static_cast<int>(ops.a_hat.col.size());
    ops.l_tilde.row_ptr[i + 1] = static_cast<int>(ops.l_tilde.col.size());
  }
  return ops;
}

// Sparse-dense product s * d. Row-sequential with a fixed accumulation order,
// so results are reproducible bit for bit.
inline Mat spmm(const Csr& s, const Mat& d) {
  require(s.n == static_cast<int>(d.rows()),
          "spmm: dimension mismatch (" + std::to_string(s.n) + " vs " +
              std::to_string(d.rows()) + " rows)");
  Mat out = Mat::Zero(s.n, d.cols());
  for (int i = 0; i < s.n; ++i)
    for (int k = s.row_ptr[i]; k < s.row_ptr[i + 1]; ++k)
      out.row(i) += s.val[k] * d.row(s.col[k]);
  spmm_madd_count() += static_cast<std::uint64_t>(s.nnz()) * d.cols();
  return out;
}

// s^T * d, scattering row i of d into output row j for each entry (i, j).
// Needed by the backward pass; coincides with spmm for symmetric operators.
inline Mat spmm_transpose(const Csr& s, const Mat& d) {
  require(s.n == static_cast<int>(d.rows()),
          "spmm_transpose: dimension mismatch");
  Mat out = Mat::Zero(s.n, d.cols());
  for (int i = 0; i < s.n; ++i)
    for (int k = s.row_ptr[i]; k < s.row_ptr[i + 1]; ++k)
      out.row(s.col[k]) += s.val[k] * d.row(i);
  spmm_madd_count() += static_cast<std::uint64_t>(s.nnz()) * d.cols();
  return out;
}

}  // namespace agnn
