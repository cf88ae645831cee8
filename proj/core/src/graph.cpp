#include "gossa/graph.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <stdexcept>
#include <vector>

#include "gossa/rng.hpp"

namespace gossa {

NetworkGraph::NetworkGraph(int node_count, std::vector<Edge> edges,
                           std::optional<std::vector<Eigen::Vector2d>> coordinates)
    : node_count_(node_count), coordinates_(std::move(coordinates)) {
  if (node_count < 1) {
    throw std::invalid_argument("NetworkGraph: node_count must be >= 1");
  }
  if (coordinates_ && static_cast<int>(coordinates_->size()) != node_count) {
    throw std::invalid_argument("NetworkGraph: coordinate count != node_count");
  }
  std::set<Edge> unique;
  for (auto [i, j] : edges) {
    if (i == j) {
      throw std::invalid_argument("NetworkGraph: self-loop edge");
    }
    if (i < 0 || j < 0 || i >= node_count || j >= node_count) {
      throw std::invalid_argument("NetworkGraph: edge references node out of range");
    }
    unique.insert({std::min(i, j), std::max(i, j)});
  }
  edges_.assign(unique.begin(), unique.end());
  adjacency_.assign(node_count_, {});
  for (auto [i, j] : edges_) {
    adjacency_[i].push_back(j);
    adjacency_[j].push_back(i);
  }
}

bool NetworkGraph::is_connected() const {
  if (node_count_ == 1) return true;
  std::vector<char> seen(node_count_, 0);
  std::vector<int> stack{0};
  seen[0] = 1;
  int visited = 1;
  while (!stack.empty()) {
    int v = stack.back();
    stack.pop_back();
    for (int u : adjacency_[v]) {
      if (!seen[u]) {
        seen[u] = 1;
        ++visited;
        stack.push_back(u);
      }
    }
  }
  return visited == node_count_;
}

NetworkGraph NetworkGraph::complete(int n) {
  std::vector<Edge> edges;
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) edges.push_back({i, j});
  return NetworkGraph(n, std::move(edges));
}

NetworkGraph NetworkGraph::path(int n) {
  std::vector<Edge> edges;
  for (int i = 0; i + 1 < n; ++i) edges.push_back({i, i + 1});
  return NetworkGraph(n, std::move(edges));
}

NetworkGraph NetworkGraph::grid(int n) {
  int rows = 1;
  for (int r = static_cast<int>(std::sqrt(static_cast<double>(n))); r >= 1; --r) {
    if (n % r == 0) {
      rows = r;
      break;
    }
  }
  int cols = n / rows;
  std::vector<Edge> edges;
  auto id = [cols](int r, int c) { return r * cols + c; };
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) {
      if (c + 1 < cols) edges.push_back({id(r, c), id(r, c + 1)});
      if (r + 1 < rows) edges.push_back({id(r, c), id(r + 1, c)});
    }
  }
  return NetworkGraph(n, std::move(edges));
}

std::vector<Eigen::Vector2d> draw_uniform_points(int n, double lo, double hi,
                                                 std::uint64_t seed) {
  std::mt19937_64 rng = make_stream(seed, 0, StreamChannel::Layout);
  std::uniform_real_distribution<double> u(lo, hi);
  std::vector<Eigen::Vector2d> pts(n);
  for (auto& p : pts) {
    // x drawn before y; fixed order keeps layouts reproducible
    double x = u(rng);
    double y = u(rng);
    p = Eigen::Vector2d(x, y);
  }
  return pts;
}

NetworkGraph NetworkGraph::geometric_from_points(
    const std::vector<Eigen::Vector2d>& points, double radius) {
  int n = static_cast<int>(points.size());
  std::vector<Edge> edges;
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      if ((points[i] - points[j]).norm() <= radius) edges.push_back({i, j});
    }
  }
  return NetworkGraph(n, std::move(edges), points);
}

NetworkGraph NetworkGraph::geometric(int n, double radius, std::uint64_t seed,
                                     double box_lo, double box_hi) {
  return geometric_from_points(draw_uniform_points(n, box_lo, box_hi, seed), radius);
}

}  // namespace gossa
