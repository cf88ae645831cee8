#pragma once

#include <cstdint>
#include <optional>
#include <utility>
#include <vector>

#include <Eigen/Dense>

namespace gossa {

/// Undirected communication graph over N nodes. Nodes are 0-based internally;
/// config files use 1-based ids. Edges are stored normalized (i < j) and
/// deduplicated. Optional planar coordinates are carried for geometric graphs
/// and the localization problem.
class NetworkGraph {
 public:
  using Edge = std::pair<int, int>;

  NetworkGraph(int node_count, std::vector<Edge> edges,
               std::optional<std::vector<Eigen::Vector2d>> coordinates = std::nullopt);

  int node_count() const { return node_count_; }
  const std::vector<Edge>& edges() const { return edges_; }
  const std::vector<std::vector<int>>& neighbors() const { return adjacency_; }
  const std::optional<std::vector<Eigen::Vector2d>>& coordinates() const {
    return coordinates_;
  }

  bool is_connected() const;

  static NetworkGraph complete(int n);
  static NetworkGraph path(int n);
  /// Near-square grid: rows x cols with rows*cols == n when n is not prime,
  /// otherwise a 1 x n line.
  static NetworkGraph grid(int n);
  /// Random geometric graph: n points drawn uniformly over [box_lo,box_hi]^2
  /// with the given seed, nodes connected when within `radius`.
  static NetworkGraph geometric(int n, double radius, std::uint64_t seed,
                                double box_lo = 0.0, double box_hi = 50.0);
  /// Geometric graph over externally supplied points (e.g. sensor positions).
  static NetworkGraph geometric_from_points(const std::vector<Eigen::Vector2d>& points,
                                            double radius);

 private:
  int node_count_;
  std::vector<Edge> edges_;
  std::vector<std::vector<int>> adjacency_;
  std::optional<std::vector<Eigen::Vector2d>> coordinates_;
};

/// Seeded uniform point cloud over [lo,hi]^2; shared by the sensor layout and
/// the geometric graph generator so that equal seeds give equal point sets.
std::vector<Eigen::Vector2d> draw_uniform_points(int n, double lo, double hi,
                                                 std::uint64_t seed);

}  // namespace gossa
