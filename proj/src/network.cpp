#include "cpdual/network.hpp"

#include <Eigen/Eigenvalues>
#include <fstream>
#include <queue>
#include <sstream>

namespace cpdual {

namespace {
bool connected(int p, const std::set<std::pair<int, int>>& edges) {
  if (p == 1) return true;
  std::vector<std::vector<int>> adj(static_cast<std::size_t>(p));
  for (const auto& [i, j] : edges) {
    adj[static_cast<std::size_t>(i)].push_back(j);
    adj[static_cast<std::size_t>(j)].push_back(i);
  }
  std::vector<char> seen(static_cast<std::size_t>(p), 0);
  std::queue<int> q;
  q.push(0);
  seen[0] = 1;
  int count = 1;
  while (!q.empty()) {
    const int u = q.front();
    q.pop();
    for (int v : adj[static_cast<std::size_t>(u)]) {
      if (!seen[static_cast<std::size_t>(v)]) {
        seen[static_cast<std::size_t>(v)] = 1;
        ++count;
        q.push(v);
      }
    }
  }
  return count == p;
}
}  // namespace

Topology::Topology(int p, std::set<std::pair<int, int>> edges) : p_(p), edges_(std::move(edges)) {
  if (p_ < 1) throw ValidationError("topology: needs at least one agent");
  for (const auto& [i, j] : edges_) {
    if (i == j) throw ValidationError("topology: self-loop");
    if (i < 0 || j < 0 || i >= p_ || j >= p_) throw ValidationError("topology: edge out of range");
    if (i >= j) throw ValidationError("topology: edges must be stored as (i, j) with i < j");
  }
  if (!connected(p_, edges_)) throw ValidationError("topology: graph is not connected");
}

Topology Topology::singleton() { return Topology(1, {}); }

bool Topology::has_edge(int i, int j) const {
  if (i > j) std::swap(i, j);
  return edges_.count({i, j}) > 0;
}

bool Topology::has_path_backbone() const {
  for (int i = 0; i + 1 < p_; ++i)
    if (!has_edge(i, i + 1)) return false;
  return true;
}

Topology build_topology(TopologyKind kind, int p, std::uint64_t seed, double extra_edge_prob) {
  if (p < 2) throw ValidationError("build_topology: needs p >= 2");
  std::set<std::pair<int, int>> edges;
  for (int i = 0; i + 1 < p; ++i) edges.insert({i, i + 1});
  switch (kind) {
    case TopologyKind::Path:
      break;
    case TopologyKind::Cycle:
      if (p > 2) edges.insert({0, p - 1});
      break;
    case TopologyKind::RandomConnectedWithPath: {
      NormalSampler rng(seed);
      for (int i = 0; i < p; ++i)
        for (int j = i + 1; j < p; ++j) {
          if (j == i + 1) continue;
          if (rng.uniform01() < extra_edge_prob) edges.insert({i, j});
        }
      break;
    }
  }
  return Topology(p, std::move(edges));
}

Topology load_topology(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("topology: cannot open " + path);
  std::string line;
  int p = 0;
  int line_no = 0;
  std::set<std::pair<int, int>> edges;
  while (std::getline(in, line)) {
    ++line_no;
    std::istringstream ss(line);
    if (line_no == 1) {
      if (!(ss >> p) || p < 1)
        throw ParseError("topology: bad agent count at line 1 of " + path);
      continue;
    }
    int i = 0, j = 0;
    if (line.empty()) continue;
    if (!(ss >> i >> j))
      throw ParseError("topology: bad edge at line " + std::to_string(line_no) + " of " + path);
    if (i < 1 || j < 1 || i > p || j > p)
      throw ParseError("topology: edge index out of range at line " + std::to_string(line_no));
    int a = i - 1, b = j - 1;
    if (a > b) std::swap(a, b);
    if (a == b) throw ParseError("topology: self-loop at line " + std::to_string(line_no));
    edges.insert({a, b});
  }
  return Topology(p, std::move(edges));
}

void save_topology(const Topology& t, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error("topology: cannot write " + path);
  out << t.agents() << "\n";
  for (const auto& [i, j] : t.edges()) out << (i + 1) << " " << (j + 1) << "\n";
}

MixingMatrix mixing_weight(const Topology& t) {
  const int p = t.agents();
  MixingMatrix mm;
  if (p == 1) {
    mm.w = Matrix::Ones(1, 1);
    mm.spectral_gap_radius = 0.0;
    return mm;
  }
  Matrix lap = Matrix::Zero(p, p);
  for (const auto& [i, j] : t.edges()) {
    lap(i, i) += 1.0;
    lap(j, j) += 1.0;
    lap(i, j) -= 1.0;
    lap(j, i) -= 1.0;
  }
  Eigen::SelfAdjointEigenSolver<Matrix> es(lap);
  const Vector ev = es.eigenvalues();  // ascending; ev[0] ~ 0 on connected graphs
  const double lam_small = ev[1];
  const double lam_large = ev[p - 1];
  const double w = 2.0 / (lam_small + lam_large);
  mm.w = Matrix::Identity(p, p) - w * lap;
  Matrix dev = mm.w - Matrix::Constant(p, p, 1.0 / p);
  Eigen::SelfAdjointEigenSolver<Matrix> es2(dev);
  mm.spectral_gap_radius = es2.eigenvalues().cwiseAbs().maxCoeff();
  return mm;
}

Averager Averager::gossip(const Topology& t, int rounds) {
  Averager a;
  a.mode = AveragingMode::Gossip;
  a.gossip_rounds = rounds;
  a.mixing = mixing_weight(t);
  return a;
}

std::vector<Vector> distributed_average(const std::vector<Vector>& values, const Averager& avg) {
  const int p = static_cast<int>(values.size());
  if (p == 0) return {};
  for (const auto& v : values)
    if (v.size() != values.front().size())
      throw DimensionError("distributed_average: agent vectors must share a dimension");
  if (p == 1 || avg.mode == AveragingMode::Exact) {
    Vector mean = Vector::Zero(values.front().size());
    for (const auto& v : values) mean += v;
    mean /= static_cast<double>(p);
    return std::vector<Vector>(static_cast<std::size_t>(p), mean);
  }
  if (avg.mixing.w.rows() != p) throw DimensionError("distributed_average: mixing matrix size");
  // One synchronous round: v_i <- sum_j W_ij v_j, repeated.
  std::vector<Vector> cur = values;
  std::vector<Vector> next(values.size());
  for (int r = 0; r < avg.gossip_rounds; ++r) {
    for (int i = 0; i < p; ++i) {
      Vector acc = Vector::Zero(cur.front().size());
      for (int j = 0; j < p; ++j) {
        const double wij = avg.mixing.w(i, j);
        if (wij != 0.0) acc += wij * cur[static_cast<std::size_t>(j)];
      }
      next[static_cast<std::size_t>(i)] = std::move(acc);
    }
    cur.swap(next);
  }
  return cur;
}

void consensus_project(std::vector<Vector>& z_y, std::vector<Vector>& z_mu, const Averager& avg) {
  z_y = distributed_average(z_y, avg);
  if (!z_mu.empty()) {
    z_mu = distributed_average(z_mu, avg);
    for (auto& m : z_mu) m = m.cwiseMax(0.0);
  }
}

}  // namespace cpdual
