#pragma once

// Exact solver for the balanced transportation problem
//
//   min  sum_ij cost(i,j) * flow(i,j)
//   s.t. sum_j flow(i,j) = supply(i),  sum_i flow(i,j) = demand(j),  flow >= 0
//
// using the transportation simplex (MODI / u-v potentials) on a spanning-tree
// basis. Dantzig pricing is used until a run of degenerate pivots is seen,
// after which Bland's rule takes over so the method cannot cycle.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

namespace jobskill::transport {

template <typename Scalar>
struct Solution {
  Scalar cost = 0;
  Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> flow;
  int pivots = 0;
};

namespace detail {

struct Cell {
  int row;
  int col;
};

// Path in the basis tree from node `from` to node `to`. Rows are nodes
// [0, m), columns are nodes [m, m + n). Returns the basic cell indices along
// the path.
inline std::vector<int> tree_path(const std::vector<Cell>& basis, int m, int n, int from, int to) {
  const int nodes = m + n;
  std::vector<std::vector<std::pair<int, int>>> adj(nodes);
  for (int b = 0; b < static_cast<int>(basis.size()); ++b) {
    adj[basis[b].row].push_back({m + basis[b].col, b});
    adj[m + basis[b].col].push_back({basis[b].row, b});
  }
  std::vector<int> parent_cell(nodes, -1), parent_node(nodes, -1);
  std::vector<char> seen(nodes, 0);
  std::vector<int> stack{from};
  seen[from] = 1;
  while (!stack.empty()) {
    int u = stack.back();
    stack.pop_back();
    if (u == to) break;
    for (auto [v, b] : adj[u]) {
      if (seen[v]) continue;
      seen[v] = 1;
      parent_node[v] = u;
      parent_cell[v] = b;
      stack.push_back(v);
    }
  }
  if (!seen[to]) throw std::logic_error("transport: basis is not a spanning tree");
  std::vector<int> path;
  for (int v = to; v != from; v = parent_node[v]) path.push_back(parent_cell[v]);
  std::reverse(path.begin(), path.end());
  return path;
}

}  // namespace detail

template <typename Scalar, typename SupplyVec, typename DemandVec, typename CostMat>
Solution<Scalar> solve(const SupplyVec& supply_in, const DemandVec& demand_in, const CostMat& cost) {
  using detail::Cell;
  const int m = static_cast<int>(supply_in.size());
  const int n = static_cast<int>(demand_in.size());
  if (m == 0 || n == 0) throw std::invalid_argument("transport: empty marginals");
  if (cost.rows() != m || cost.cols() != n) throw std::invalid_argument("transport: cost shape mismatch");

  std::vector<Scalar> supply(m), demand(n);
  for (int i = 0; i < m; ++i) supply[i] = supply_in[i];
  for (int j = 0; j < n; ++j) demand[j] = demand_in[j];

  Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> flow =
      Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>::Zero(m, n);
  std::vector<Cell> basis;
  basis.reserve(m + n - 1);

  // Northwest-corner start. When a row and a column are exhausted together
  // only the row index advances, leaving a zero-flow basic cell so the basis
  // keeps m + n - 1 cells.
  {
    std::vector<Scalar> rs = supply, rd = demand;
    int i = 0, j = 0;
    for (;;) {
      Scalar x = std::min(rs[i], rd[j]);
      x = std::max(x, Scalar(0));
      flow(i, j) = x;
      basis.push_back({i, j});
      rs[i] -= x;
      rd[j] -= x;
      if (i == m - 1 && j == n - 1) break;
      if (j == n - 1 || (i < m - 1 && rs[i] <= rd[j])) {
        ++i;
      } else {
        ++j;
      }
    }
  }

  Scalar scale = 0;
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < n; ++j) scale = std::max(scale, std::abs(cost(i, j)));
  const Scalar tol = std::numeric_limits<Scalar>::epsilon() * 64 * (scale + 1);

  std::vector<Scalar> u(m), v(n);
  std::vector<char> is_basic(static_cast<std::size_t>(m) * n, 0);
  Solution<Scalar> out;
  int degenerate_run = 0;
  const int max_pivots = 50 * (m + n) * (m + n) + 1000;

  for (;;) {
    std::fill(is_basic.begin(), is_basic.end(), 0);
    for (const auto& c : basis) is_basic[static_cast<std::size_t>(c.row) * n + c.col] = 1;

    // Potentials: u_i + v_j = cost(i, j) on every basic cell, u_0 = 0.
    std::vector<char> have_u(m, 0), have_v(n, 0);
    u[0] = 0;
    have_u[0] = 1;
    for (bool changed = true; changed;) {
      changed = false;
      for (const auto& c : basis) {
        if (have_u[c.row] && !have_v[c.col]) {
          v[c.col] = cost(c.row, c.col) - u[c.row];
          have_v[c.col] = 1;
          changed = true;
        } else if (!have_u[c.row] && have_v[c.col]) {
          u[c.row] = cost(c.row, c.col) - v[c.col];
          have_u[c.row] = 1;
          changed = true;
        }
      }
    }

    const bool bland = degenerate_run > m * n;
    int enter_i = -1, enter_j = -1;
    Scalar best = -tol;
    for (int i = 0; i < m && !(bland && enter_i >= 0); ++i) {
      for (int j = 0; j < n; ++j) {
        if (is_basic[static_cast<std::size_t>(i) * n + j]) continue;
        Scalar reduced = cost(i, j) - u[i] - v[j];
        if (reduced < best) {
          best = reduced;
          enter_i = i;
          enter_j = j;
          if (bland) break;
        }
      }
    }
    if (enter_i < 0) break;
    if (++out.pivots > max_pivots) throw std::runtime_error("transport: pivot limit exceeded");

    // Cycle: entering cell (+), then alternating signs along the tree path
    // from column enter_j back to row enter_i.
    auto path = detail::tree_path(basis, m, n, m + enter_j, enter_i);
    Scalar theta = std::numeric_limits<Scalar>::infinity();
    int leaving = -1;
    for (std::size_t k = 0; k < path.size(); k += 2) {
      const Cell& c = basis[path[k]];
      Scalar f = flow(c.row, c.col);
      bool better = f < theta;
      if (!better && f == theta && leaving >= 0) {
        const Cell& l = basis[path[leaving]];
        better = std::tie(c.row, c.col) < std::tie(l.row, l.col);
      }
      if (better) {
        theta = f;
        leaving = static_cast<int>(k);
      }
    }
    theta = std::max(theta, Scalar(0));
    degenerate_run = theta > 0 ? 0 : degenerate_run + 1;

    flow(enter_i, enter_j) += theta;
    for (std::size_t k = 0; k < path.size(); ++k) {
      const Cell& c = basis[path[k]];
      flow(c.row, c.col) += (k % 2 == 0) ? -theta : theta;
    }
    const Cell& out_cell = basis[path[leaving]];
    flow(out_cell.row, out_cell.col) = 0;
    basis[path[leaving]] = {enter_i, enter_j};
  }

  for (int i = 0; i < m; ++i)
    for (int j = 0; j < n; ++j) flow(i, j) = std::max(flow(i, j), Scalar(0));

  Scalar total = 0;
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < n; ++j) total += flow(i, j) * cost(i, j);
  out.cost = total;
  out.flow = std::move(flow);
  return out;
}

}  // namespace jobskill::transport
