#include "cpdual/config.hpp"

#include <filesystem>
#include <fstream>
#include <sstream>

#include "cpdual/io.hpp"
#include "cpdual/reference.hpp"

namespace cpdual {

namespace {

std::string trim(const std::string& s) {
  const auto begin = s.find_first_not_of(" \t\r");
  if (begin == std::string::npos) return "";
  const auto end = s.find_last_not_of(" \t\r");
  return s.substr(begin, end - begin + 1);
}

[[noreturn]] void fail(const std::string& path, int line, const std::string& what) {
  throw ParseError(path + ":" + std::to_string(line) + ": " + what);
}

double to_double(const std::string& v, const std::string& path, int line) {
  try {
    std::size_t pos = 0;
    const double x = std::stod(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return x;
  } catch (const std::exception&) {
    fail(path, line, "expected a number, got '" + v + "'");
  }
}

long to_long(const std::string& v, const std::string& path, int line) {
  try {
    std::size_t pos = 0;
    const long x = std::stol(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return x;
  } catch (const std::exception&) {
    fail(path, line, "expected an integer, got '" + v + "'");
  }
}

void require_file(const std::string& file, const std::string& key) {
  if (file.empty()) throw ValidationError("config: missing file for " + key);
  if (!std::filesystem::exists(file))
    throw ValidationError("config: referenced file does not exist: " + file);
}

}  // namespace

ExperimentConfig parse_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open config " + path);

  ExperimentConfig cfg;
  std::string section;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') fail(path, line_no, "unterminated section header");
      section = trim(line.substr(1, line.size() - 2));
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) fail(path, line_no, "expected 'key = value'");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty() || value.empty()) fail(path, line_no, "empty key or value");

    auto is = [&](const char* s, const char* k) { return section == s && key == k; };
    if (is("problem", "family")) {
      if (value == "regbp")
        cfg.family = ProblemFamily::RegBp;
      else if (value == "lasso")
        cfg.family = ProblemFamily::Lasso;
      else if (value == "bpdn")
        cfg.family = ProblemFamily::Bpdn;
      else
        fail(path, line_no, "family must be regbp|lasso|bpdn");
    } else if (is("problem", "regularizer")) {
      if (value == "l1")
        cfg.reg_kind = RegularizerKind::L1;
      else if (value == "fused")
        cfg.reg_kind = RegularizerKind::FusedL1;
      else if (value == "group")
        cfg.reg_kind = RegularizerKind::GroupL2;
      else
        fail(path, line_no, "regularizer must be l1|fused|group");
    } else if (is("problem", "lambda")) {
      cfg.lambda = to_double(value, path, line_no);
    } else if (is("problem", "gamma")) {
      cfg.gamma = to_double(value, path, line_no);
    } else if (is("problem", "sigma")) {
      cfg.sigma = to_double(value, path, line_no);
    } else if (is("problem", "alpha")) {
      cfg.problem_alpha = to_double(value, path, line_no);
    } else if (is("problem", "constraint")) {
      if (value == "free")
        cfg.constraint = ConstraintKind::Free;
      else if (value == "nonneg")
        cfg.constraint = ConstraintKind::NonNeg;
      else if (value == "box")
        cfg.constraint = ConstraintKind::Box;
      else if (value == "polyhedron")
        cfg.constraint = ConstraintKind::GeneralPolyhedron;
      else
        fail(path, line_no, "constraint must be free|nonneg|box|polyhedron");
    } else if (is("problem", "C_file")) {
      cfg.c_file = value;
    } else if (is("problem", "d_file")) {
      cfg.d_file = value;
    } else if (is("problem", "box_lower_file")) {
      cfg.box_lower_file = value;
    } else if (is("problem", "box_upper_file")) {
      cfg.box_upper_file = value;
    } else if (is("data", "source")) {
      if (value == "random")
        cfg.random_data = true;
      else if (value == "files")
        cfg.random_data = false;
      else
        fail(path, line_no, "source must be random|files");
    } else if (is("data", "seed")) {
      cfg.seed = static_cast<std::uint64_t>(to_long(value, path, line_no));
    } else if (is("data", "m")) {
      cfg.m = static_cast<int>(to_long(value, path, line_no));
    } else if (is("data", "n")) {
      cfg.n = static_cast<int>(to_long(value, path, line_no));
    } else if (is("data", "A_file")) {
      cfg.a_file = value;
    } else if (is("data", "b_file")) {
      cfg.b_file = value;
    } else if (is("partition", "p")) {
      cfg.p = static_cast<int>(to_long(value, path, line_no));
    } else if (is("partition", "strategy")) {
      if (value == "even")
        cfg.strategy = PartitionStrategy::Even;
      else if (value == "explicit")
        cfg.strategy = PartitionStrategy::Explicit;
      else
        fail(path, line_no, "strategy must be even|explicit");
    } else if (is("partition", "blocks_file")) {
      cfg.blocks_file = value;
    } else if (is("topology", "kind")) {
      if (value == "cycle")
        cfg.topology_kind = TopologyKind::Cycle;
      else if (value == "path")
        cfg.topology_kind = TopologyKind::Path;
      else if (value == "random")
        cfg.topology_kind = TopologyKind::RandomConnectedWithPath;
      else
        fail(path, line_no, "topology kind must be cycle|path|random");
    } else if (is("topology", "seed")) {
      cfg.topology_seed = static_cast<std::uint64_t>(to_long(value, path, line_no));
    } else if (is("topology", "extra_edge_prob")) {
      cfg.extra_edge_prob = to_double(value, path, line_no);
    } else if (is("topology", "edges_file")) {
      cfg.edges_file = value;
    } else if (is("averaging", "mode")) {
      if (value == "exact")
        cfg.averaging = AveragingMode::Exact;
      else if (value == "gossip")
        cfg.averaging = AveragingMode::Gossip;
      else
        fail(path, line_no, "averaging mode must be exact|gossip");
    } else if (is("averaging", "rounds")) {
      cfg.gossip_rounds = static_cast<int>(to_long(value, path, line_no));
    } else if (is("stage1", "tol")) {
      cfg.stage1_tol = to_double(value, path, line_no);
    } else if (is("stage1", "max_iter")) {
      cfg.stage1_max_iter = to_long(value, path, line_no);
    } else if (is("stage1", "eta")) {
      cfg.stage1_eta = to_double(value, path, line_no);
    } else if (is("stage1", "rho")) {
      cfg.stage1_rho = to_double(value, path, line_no);
    } else if (is("stage1", "lambda_relax")) {
      cfg.stage1_lambda_relax = to_double(value, path, line_no);
    } else if (is("stage2", "tol")) {
      cfg.stage2_tol = to_double(value, path, line_no);
    } else if (is("stage2", "max_iter")) {
      cfg.stage2_max_iter = to_long(value, path, line_no);
    } else if (is("stage2", "eta")) {
      cfg.stage2_eta = to_double(value, path, line_no);
    } else if (is("stage2", "rho")) {
      cfg.stage2_rho = to_double(value, path, line_no);
    } else if (is("stage2", "lambda_relax")) {
      cfg.stage2_lambda_relax = to_double(value, path, line_no);
    } else if (is("stage2", "alpha")) {
      cfg.stage2_alpha = to_double(value, path, line_no);
    } else if (is("stage2", "variant")) {
      if (value == "plain")
        cfg.variant = Stage2Variant::Plain;
      else if (value == "scaled")
        cfg.variant = Stage2Variant::Scaled;
      else
        fail(path, line_no, "variant must be plain|scaled");
    } else if (is("output", "dir")) {
      cfg.output_dir = value;
    } else if (is("oracle", "tol")) {
      cfg.oracle_tol = to_double(value, path, line_no);
    } else {
      fail(path, line_no, "unknown key '" + key + "' in section [" + section + "]");
    }
  }

  // Validation that does not need the data files loaded.
  if (!(cfg.stage1_tol > 0.0) || !(cfg.stage2_tol > 0.0) || !(cfg.oracle_tol > 0.0))
    throw ValidationError("config: tolerances must be positive");
  if (cfg.stage1_max_iter < 1 || cfg.stage2_max_iter < 1)
    throw ValidationError("config: iteration caps must be positive");
  if (cfg.p < 1) throw ValidationError("config: p must be at least 1");
  if (cfg.random_data) {
    if (cfg.m < 1 || cfg.n < 1)
      throw ValidationError("config: random data needs positive m and n");
    if (cfg.p > cfg.n) throw ValidationError("config: p exceeds N");
  } else {
    require_file(cfg.a_file, "data.A_file");
    require_file(cfg.b_file, "data.b_file");
  }
  if (cfg.constraint == ConstraintKind::GeneralPolyhedron) {
    require_file(cfg.c_file, "problem.C_file");
    require_file(cfg.d_file, "problem.d_file");
  }
  if (cfg.constraint == ConstraintKind::Box) {
    require_file(cfg.box_lower_file, "problem.box_lower_file");
    require_file(cfg.box_upper_file, "problem.box_upper_file");
  }
  if (cfg.strategy == PartitionStrategy::Explicit) require_file(cfg.blocks_file, "partition.blocks_file");
  if (!cfg.edges_file.empty()) require_file(cfg.edges_file, "topology.edges_file");
  if (cfg.averaging == AveragingMode::Gossip && cfg.gossip_rounds < 1)
    throw ValidationError("config: gossip rounds must be positive");
  return cfg;
}

namespace {

std::vector<std::vector<int>> load_blocks(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open blocks file " + path);
  std::vector<std::vector<int>> blocks;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::istringstream ss(line);
    std::vector<int> blk;
    int idx = 0;
    while (ss >> idx) blk.push_back(idx - 1);  // 1-based on disk
    if (!blk.empty()) blocks.push_back(std::move(blk));
  }
  return blocks;
}

}  // namespace

ExperimentInputs materialize(const ExperimentConfig& cfg) {
  Matrix a;
  Vector b;
  if (cfg.random_data) {
    const double floor = cfg.family == ProblemFamily::Bpdn ? cfg.sigma : 0.0;
    RandomInstance inst = random_instance(cfg.seed, cfg.m, cfg.n, floor);
    a = std::move(inst.a);
    b = std::move(inst.b);
  } else {
    a = load_matrix(cfg.a_file);
    b = load_vector(cfg.b_file);
  }
  const int n = static_cast<int>(a.cols());
  if (cfg.p > n) throw ValidationError("config: p exceeds N");

  ColumnPartition partition = [&] {
    if (cfg.strategy == PartitionStrategy::Explicit) {
      auto blocks = load_blocks(cfg.blocks_file);
      return make_partition(n, static_cast<int>(blocks.size()), PartitionStrategy::Explicit, &blocks);
    }
    return make_partition(n, cfg.p, PartitionStrategy::Even);
  }();

  Topology topology = [&] {
    if (!cfg.edges_file.empty()) return load_topology(cfg.edges_file);
    if (partition.agents() == 1) return Topology::singleton();
    return build_topology(cfg.topology_kind, partition.agents(), cfg.topology_seed,
                          cfg.extra_edge_prob);
  }();

  ConstraintSet constraint = [&] {
    switch (cfg.constraint) {
      case ConstraintKind::Free:
        return ConstraintSet::free();
      case ConstraintKind::NonNeg:
        return ConstraintSet::nonneg();
      case ConstraintKind::Box:
        return ConstraintSet::box(load_vector(cfg.box_lower_file), load_vector(cfg.box_upper_file));
      case ConstraintKind::GeneralPolyhedron:
        return ConstraintSet::polyhedron(load_matrix(cfg.c_file), load_vector(cfg.d_file));
      default:
        throw ValidationError("config: unsupported constraint kind on the CLI");
    }
  }();

  Regularizer reg = [&] {
    switch (cfg.reg_kind) {
      case RegularizerKind::L1:
        return Regularizer::l1(cfg.lambda);
      case RegularizerKind::FusedL1:
        return Regularizer::fused(cfg.lambda, cfg.gamma);
      case RegularizerKind::GroupL2:
        return Regularizer::group_uniform(partition.agents(), cfg.lambda);
    }
    return Regularizer::l1(cfg.lambda);
  }();

  ProblemSpec problem = [&] {
    switch (cfg.family) {
      case ProblemFamily::RegBp:
        return ProblemSpec::regbp(a, b, cfg.problem_alpha, reg, constraint, partition);
      case ProblemFamily::Lasso:
        return ProblemSpec::lasso(a, b, reg, constraint, partition);
      case ProblemFamily::Bpdn:
        return ProblemSpec::bpdn(a, b, cfg.sigma, reg, constraint, partition);
    }
    throw ValidationError("config: unknown family");
  }();

  const Averager avg = cfg.averaging == AveragingMode::Exact
                           ? Averager::exact()
                           : Averager::gossip(topology, cfg.gossip_rounds);

  SchemeParams s1;
  s1.tol = cfg.stage1_tol;
  s1.max_iter = cfg.stage1_max_iter;
  s1.eta = cfg.stage1_eta;
  s1.rho = cfg.stage1_rho;
  if (cfg.stage1_lambda_relax > 0.0) s1.lambda_relax = cfg.stage1_lambda_relax;
  s1.averaging = avg;

  SchemeParams s2;
  s2.tol = cfg.stage2_tol;
  s2.max_iter = cfg.stage2_max_iter;
  s2.eta = cfg.stage2_eta;
  s2.rho = cfg.stage2_rho;
  if (cfg.stage2_lambda_relax > 0.0) s2.lambda_relax = cfg.stage2_lambda_relax;
  s2.averaging = avg;

  TwoStageConfig ts;
  ts.stage1 = s1;
  ts.stage2 = s2;
  ts.alpha = cfg.stage2_alpha;
  ts.variant = cfg.variant;

  return ExperimentInputs{std::move(problem), std::move(partition), std::move(topology), s1, s2, ts};
}

}  // namespace cpdual
