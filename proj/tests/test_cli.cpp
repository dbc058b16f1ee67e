#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "cpdual/experiment.hpp"
#include "cpdual/io.hpp"

using namespace cpdual;
namespace fs = std::filesystem;

namespace {

struct Scratch {
  fs::path dir;
  Scratch() : dir(fs::path("cli_scratch") / std::to_string(counter())) {
    fs::create_directories(dir);
  }
  ~Scratch() { fs::remove_all(dir.parent_path()); }
  static int& counter() {
    static int c = 0;
    ++c;
    return c;
  }
  std::string file(const std::string& name, const std::string& content) const {
    const fs::path p = dir / name;
    std::ofstream out(p);
    out << content;
    return p.string();
  }
  std::string path(const std::string& name) const { return (dir / name).string(); }
};

std::string strip_wall_time(const std::string& path) {
  std::ifstream in(path);
  std::ostringstream out;
  std::string line;
  while (std::getline(in, line))
    if (line.rfind("wall_time", 0) != 0) out << line << "\n";
  return out.str();
}

std::string read_file(const std::string& path) {
  std::ifstream in(path);
  std::ostringstream out;
  out << in.rdbuf();
  return out.str();
}

}  // namespace

TEST_CASE("minimal config fills the documented defaults") {
  Scratch s;
  const std::string cfg = s.file("min.cfg",
                                 "[problem]\n"
                                 "family = lasso\n"
                                 "lambda = 1.8\n"
                                 "[data]\n"
                                 "source = random\n"
                                 "seed = 1\n"
                                 "m = 4\n"
                                 "n = 20\n"
                                 "[partition]\n"
                                 "p = 4\n");
  const ExperimentConfig c = parse_config(cfg);
  CHECK(c.stage2_alpha == doctest::Approx(0.18));
  CHECK(c.averaging == AveragingMode::Exact);
  CHECK(c.stage1_max_iter == 200000);
  CHECK(c.stage2_max_iter == 200000);
  CHECK(c.topology_kind == TopologyKind::Cycle);
  CHECK(c.variant == Stage2Variant::Plain);
}

TEST_CASE("config validation") {
  Scratch s;
  SUBCASE("p exceeding N is rejected") {
    const std::string cfg = s.file("bad_p.cfg",
                                   "[problem]\nfamily = lasso\nlambda = 1\n"
                                   "[data]\nsource = random\nm = 4\nn = 20\n"
                                   "[partition]\np = 21\n");
    CHECK_THROWS_AS(parse_config(cfg), ValidationError);
  }
  SUBCASE("unknown keys carry the line number") {
    const std::string cfg = s.file("bad_key.cfg", "[problem]\nfamily = lasso\nwat = 3\n");
    try {
      parse_config(cfg);
      FAIL("expected ParseError");
    } catch (const ParseError& e) {
      CHECK(std::string(e.what()).find(":3:") != std::string::npos);
    }
  }
  SUBCASE("bad numbers are parse errors") {
    const std::string cfg = s.file("bad_num.cfg", "[problem]\nfamily = lasso\nlambda = abc\n");
    CHECK_THROWS_AS(parse_config(cfg), ParseError);
  }
  SUBCASE("missing referenced files are rejected") {
    const std::string cfg = s.file("missing.cfg",
                                   "[data]\nsource = files\nA_file = nope.txt\nb_file = nope.txt\n");
    CHECK_THROWS_AS(parse_config(cfg), ValidationError);
  }
  SUBCASE("nonpositive tolerances are rejected") {
    const std::string cfg = s.file("bad_tol.cfg",
                                   "[data]\nsource = random\nm = 2\nn = 4\n[stage1]\ntol = 0\n");
    CHECK_THROWS_AS(parse_config(cfg), ValidationError);
  }
}

TEST_CASE("the experiment-scale configuration is accepted") {
  Scratch s;
  const std::string cfg = s.file("big.cfg",
                                 "[problem]\n"
                                 "family = lasso\nregularizer = l1\nlambda = 1.8\nconstraint = free\n"
                                 "[data]\nsource = random\nseed = 42\nm = 10\nn = 400\n"
                                 "[partition]\np = 40\nstrategy = even\n"
                                 "[topology]\nkind = cycle\n"
                                 "[stage1]\ntol = 1e-7\n"
                                 "[stage2]\ntol = 1e-5\nalpha = 0.18\n");
  const ExperimentConfig c = parse_config(cfg);
  CHECK(c.n == 400);
  CHECK(c.p == 40);
  const ExperimentInputs in = materialize(c);
  CHECK(in.problem.m() == 10);
  CHECK(in.partition.agents() == 40);
  CHECK(in.topology.agents() == 40);
}

TEST_CASE("matrix files round trip") {
  Scratch s;
  NormalSampler rng(3);
  const Matrix a = rng.matrix(3, 5);
  save_matrix(a, s.path("a.txt"));
  const Matrix back = load_matrix(s.path("a.txt"));
  CHECK((a - back).lpNorm<Eigen::Infinity>() == 0.0);
  CHECK_THROWS_AS(load_matrix(s.path("void.txt")), ParseError);
  const std::string trunc = s.file("trunc.txt", "2 2\n1.0 2.0\n3.0\n");
  CHECK_THROWS_AS(load_matrix(trunc), ParseError);
}

TEST_CASE("identity smoke experiment reproduces the closed form") {
  Scratch s;
  save_matrix(Matrix::Identity(2, 2), s.path("A.txt"));
  save_vector((Vector(2) << 2.0, 0.0).finished(), s.path("b.txt"));
  const std::string cfg = s.file("smoke.cfg",
                                 "[problem]\nfamily = lasso\nlambda = 1\n"
                                 "[data]\nsource = files\nA_file = " + s.path("A.txt") +
                                     "\nb_file = " + s.path("b.txt") +
                                     "\n"
                                     "[partition]\np = 2\n"
                                     "[topology]\nkind = path\n"
                                     "[stage1]\ntol = 1e-11\n[stage2]\ntol = 1e-11\nalpha = 0.18\n"
                                     "[output]\ndir = " + s.path("out"));
  const ExperimentConfig c = parse_config(cfg);
  CHECK(run_experiment(c) == 0);
  const std::string summary = read_file(s.path("out") + "/summary.txt");
  CHECK(summary.find("status = ok") != std::string::npos);
  CHECK(fs::exists(s.path("out") + "/stage1_trace.csv"));
  CHECK(fs::exists(s.path("out") + "/stage2_trace.csv"));
  CHECK(fs::exists(s.path("out") + "/blocks.txt"));
  CHECK(fs::exists(s.path("out") + "/solution.txt"));

  double j_re = -1.0;
  std::istringstream ss(summary);
  std::string line;
  while (std::getline(ss, line))
    if (line.rfind("j_re = ", 0) == 0) j_re = std::stod(line.substr(7));
  CHECK(j_re >= 0.0);
  CHECK(j_re <= 1e-10);

  // byte-identical reruns modulo wall time
  const std::string first = strip_wall_time(s.path("out") + "/summary.txt");
  CHECK(run_experiment(c) == 0);
  CHECK(strip_wall_time(s.path("out") + "/summary.txt") == first);
}

TEST_CASE("infeasible problems exit nonzero with the failure recorded") {
  Scratch s;
  Matrix a(1, 2);
  a << 1.0, 1.0;
  save_matrix(a, s.path("A.txt"));
  save_vector(Vector::Constant(1, -1.0), s.path("b.txt"));
  const std::string cfg = s.file("bad.cfg",
                                 "[problem]\nfamily = regbp\nlambda = 1\nalpha = 0.5\n"
                                 "constraint = nonneg\n"
                                 "[data]\nsource = files\nA_file = " + s.path("A.txt") +
                                     "\nb_file = " + s.path("b.txt") +
                                     "\n[partition]\np = 2\n[topology]\nkind = path\n"
                                     "[stage2]\ntol = 1e-8\nmax_iter = 60000\n"
                                     "[output]\ndir = " + s.path("out"));
  CHECK(run_experiment(parse_config(cfg)) == 3);
  const std::string summary = read_file(s.path("out") + "/summary.txt");
  CHECK(summary.find("status = failed") != std::string::npos);
  CHECK(summary.find("infeasible") != std::string::npos);
}

TEST_CASE("oracle verb writes the reference value") {
  Scratch s;
  save_matrix(Matrix::Identity(2, 2), s.path("A.txt"));
  save_vector((Vector(2) << 2.0, 0.0).finished(), s.path("b.txt"));
  const std::string cfg = s.file("oracle.cfg",
                                 "[problem]\nfamily = lasso\nlambda = 1\n"
                                 "[data]\nsource = files\nA_file = " + s.path("A.txt") +
                                     "\nb_file = " + s.path("b.txt") +
                                     "\n[partition]\np = 1\n[output]\ndir = " + s.path("out"));
  CHECK(run_oracle(parse_config(cfg)) == 0);
  const std::string summary = read_file(s.path("out") + "/oracle_summary.txt");
  CHECK(summary.find("j_true = 1.5") != std::string::npos);
}

TEST_CASE("alpha sweep reports a flat l1 objective in the exact-regularization range") {
  Scratch s;
  const std::string cfg = s.file("sweep.cfg",
                                 "[problem]\nfamily = regbp\nlambda = 1\nalpha = 0.1\n"
                                 "[data]\nsource = random\nseed = 5\nm = 3\nn = 9\n"
                                 "[partition]\np = 3\n[topology]\nkind = cycle\n"
                                 "[stage2]\ntol = 1e-10\n"
                                 "[output]\ndir = " + s.path("out"));
  CHECK(run_sweep(parse_config(cfg), "alpha", {0.1, 0.05, 0.01}) == 0);
  const std::string summary = read_file(s.path("out") + "/sweep_summary.txt");
  CHECK(summary.find("j_bp_true") != std::string::npos);
  // every swept value must be present with its own objective rows
  CHECK(summary.find("alpha_0.1.j_bp") != std::string::npos);
  CHECK(summary.find("alpha_0.05.j_bp") != std::string::npos);
  CHECK(summary.find("alpha_0.01.j_bp") != std::string::npos);
  CHECK_THROWS_AS(run_sweep(parse_config(cfg), "lambda", {1.0}), ValidationError);
}
