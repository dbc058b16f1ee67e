#pragma once

#include <cstdint>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "cpdual/types.hpp"

namespace cpdual {

// Undirected connected agent graph. Edges are stored as (i, j) with i < j,
// 0-based.
class Topology {
 public:
  Topology(int p, std::set<std::pair<int, int>> edges);

  static Topology singleton();  // p = 1, no edges; trivially connected

  int agents() const { return p_; }
  const std::set<std::pair<int, int>>& edges() const { return edges_; }
  bool has_edge(int i, int j) const;
  bool has_path_backbone() const;  // (i, i+1) present for all i

 private:
  int p_;
  std::set<std::pair<int, int>> edges_;
};

enum class TopologyKind { Cycle, Path, RandomConnectedWithPath };

Topology build_topology(TopologyKind kind, int p, std::uint64_t seed = 0,
                        double extra_edge_prob = 0.0);

// Edge-list text format: first line "p", then one "i j" pair per line,
// 1-based.
Topology load_topology(const std::string& path);
void save_topology(const Topology& t, const std::string& path);

// Symmetric stochastic averaging weights W = I - w L with the optimal
// constant edge weight w = 2 / (lam_1(L) + lam_{p-1}(L)).
struct MixingMatrix {
  Matrix w;
  double spectral_gap_radius = 0.0;  // spectral radius of W - (1/p) 11^T
};

MixingMatrix mixing_weight(const Topology& t);

enum class AveragingMode { Exact, Gossip };

struct Averager {
  AveragingMode mode = AveragingMode::Exact;
  int gossip_rounds = 50;
  MixingMatrix mixing;  // required for gossip

  static Averager exact() { return {}; }
  static Averager gossip(const Topology& t, int rounds);
};

// Exact mode replicates the arithmetic mean; gossip applies v <- W v for the
// stated rounds. Gossip preserves the network sum up to roundoff.
std::vector<Vector> distributed_average(const std::vector<Vector>& values, const Averager& avg);

// Projection onto the consensus set A_y x A_mu: y parts averaged, mu parts
// averaged then clamped nonnegative. Pass an empty z_mu when there is no mu.
void consensus_project(std::vector<Vector>& z_y, std::vector<Vector>& z_mu, const Averager& avg);

}  // namespace cpdual
