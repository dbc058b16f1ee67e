#include "cpdual/experiment.hpp"

#include <chrono>
#include <filesystem>
#include <fstream>
#include <cstdio>

#include "cpdual/io.hpp"
#include "cpdual/reference.hpp"

namespace cpdual {

namespace {

namespace fs = std::filesystem;

class Summary {
 public:
  void set(const std::string& key, const std::string& value) { rows_.emplace_back(key, value); }
  void set(const std::string& key, double value) { set(key, format_double(value)); }
  void set(const std::string& key, long value) { set(key, std::to_string(value)); }

  void write(const std::string& path) const {
    std::ofstream out(path);
    if (!out) throw Error("cannot write " + path);
    for (const auto& [k, v] : rows_) out << k << " = " << v << "\n";
  }

 private:
  std::vector<std::pair<std::string, std::string>> rows_;
};

const char* family_name(ProblemFamily f) {
  switch (f) {
    case ProblemFamily::RegBp: return "regbp";
    case ProblemFamily::Lasso: return "lasso";
    case ProblemFamily::Bpdn: return "bpdn";
  }
  return "?";
}

const char* reg_name(RegularizerKind k) {
  switch (k) {
    case RegularizerKind::L1: return "l1";
    case RegularizerKind::FusedL1: return "fused";
    case RegularizerKind::GroupL2: return "group";
  }
  return "?";
}

const char* constraint_name(ConstraintKind k) {
  switch (k) {
    case ConstraintKind::Free: return "free";
    case ConstraintKind::NonNeg: return "nonneg";
    case ConstraintKind::Box: return "box";
    case ConstraintKind::GeneralPolyhedron: return "polyhedron";
    case ConstraintKind::DecoupledPolyhedron: return "decoupled";
  }
  return "?";
}

void write_trace(const SolveReport& report, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path);
  out << report.to_csv();
}

void write_blocks(const ColumnPartition& partition, const std::vector<Vector>& blocks,
                  const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path);
  out << "# agent block_size values...\n";
  for (int i = 0; i < partition.agents(); ++i) {
    const auto& blk = blocks[static_cast<std::size_t>(i)];
    out << (i + 1) << " " << blk.size();
    for (Eigen::Index j = 0; j < blk.size(); ++j) out << " " << format_double(blk[j]);
    out << "\n";
  }
}

void describe(Summary& s, const ExperimentConfig& cfg, const ExperimentInputs& in) {
  s.set("family", family_name(cfg.family));
  s.set("regularizer", reg_name(cfg.reg_kind));
  s.set("constraint", constraint_name(cfg.constraint));
  s.set("m", static_cast<long>(in.problem.m()));
  s.set("n", static_cast<long>(in.problem.n()));
  s.set("p", static_cast<long>(in.partition.agents()));
  s.set("seed", static_cast<long>(cfg.seed));
  s.set("lambda", cfg.lambda);
  if (cfg.reg_kind == RegularizerKind::FusedL1) s.set("gamma", cfg.gamma);
  if (cfg.family == ProblemFamily::Bpdn) s.set("sigma", cfg.sigma);
  s.set("alpha", cfg.family == ProblemFamily::RegBp ? cfg.problem_alpha : cfg.stage2_alpha);
  s.set("averaging", cfg.averaging == AveragingMode::Exact ? "exact" : "gossip");
}

}  // namespace

int run_experiment(const ExperimentConfig& cfg) {
  const ExperimentInputs in = materialize(cfg);
  fs::create_directories(cfg.output_dir);
  const std::string dir = cfg.output_dir;
  Summary summary;
  describe(summary, cfg, in);

  const auto t0 = std::chrono::steady_clock::now();
  try {
    double j_dist = 0.0;
    if (cfg.family == ProblemFamily::RegBp) {
      RegBpResult res = solve_regbp_distributed(in.problem, in.partition, in.topology, in.stage2);
      j_dist = in.problem.objective(res.x, in.partition);
      summary.set("status", "ok");
      summary.set("j_dist", j_dist);
      summary.set("feasibility_residual", res.feasibility_residual);
      summary.set("solve_iterations", res.report.iterations);
      summary.set("solve_residual", res.report.final_fixed_point_residual);
      write_trace(res.report, dir + "/solve_trace.csv");
      write_blocks(in.partition, res.blocks, dir + "/blocks.txt");
      save_vector(res.x, dir + "/solution.txt");
    } else {
      TwoStageResult res = solve_two_stage(in.problem, in.partition, in.topology, in.two_stage);
      j_dist = in.problem.objective(res.x, in.partition);
      summary.set("status", "ok");
      summary.set("j_dist", j_dist);
      summary.set("stage1_iterations", res.stage1_report.iterations);
      summary.set("stage1_residual", res.stage1_report.final_fixed_point_residual);
      summary.set("stage2_iterations", res.stage2_report.iterations);
      summary.set("stage2_residual", res.stage2_report.final_fixed_point_residual);
      summary.set("stage2_feasibility", res.stage2_feasibility);
      summary.set("certificate_residual", res.certificate_residual);
      summary.set("primal_residual_norm", (in.problem.a * res.x - in.problem.b).norm());
      if (cfg.variant == Stage2Variant::Scaled) summary.set("stage2_unit_l1", res.stage2_unit_l1);
      if (!res.trivial) {
        write_trace(res.stage1_report, dir + "/stage1_trace.csv");
        write_trace(res.stage2_report, dir + "/stage2_trace.csv");
      }
      write_blocks(in.partition, res.blocks, dir + "/blocks.txt");
      save_vector(res.x, dir + "/solution.txt");
    }

    const OracleReport oracle = solve_centralized(in.problem, in.partition, cfg.oracle_tol);
    summary.set("j_true", oracle.objective);
    summary.set("j_re", relative_error(j_dist, oracle.objective));
    summary.set("oracle_iterations", oracle.iterations);
  } catch (const Error& err) {
    summary.set("status", "failed");
    summary.set("error", err.what());
    if (const auto* nc = dynamic_cast<const EngineNonConvergence*>(&err))
      write_trace(nc->report, dir + "/failed_trace.csv");
    const auto t1 = std::chrono::steady_clock::now();
    summary.set("wall_time_seconds", std::chrono::duration<double>(t1 - t0).count());
    summary.write(dir + "/summary.txt");
    return 3;
  }
  const auto t1 = std::chrono::steady_clock::now();
  summary.set("wall_time_seconds", std::chrono::duration<double>(t1 - t0).count());
  summary.write(dir + "/summary.txt");
  return 0;
}

int run_oracle(const ExperimentConfig& cfg) {
  const ExperimentInputs in = materialize(cfg);
  fs::create_directories(cfg.output_dir);
  Summary summary;
  describe(summary, cfg, in);
  try {
    const OracleReport oracle = solve_centralized(in.problem, in.partition, cfg.oracle_tol);
    summary.set("status", "ok");
    summary.set("j_true", oracle.objective);
    summary.set("oracle_iterations", oracle.iterations);
    summary.set("oracle_tolerance", oracle.tolerance_achieved);
    save_vector(oracle.solution, cfg.output_dir + "/oracle_solution.txt");
  } catch (const Error& err) {
    summary.set("status", "failed");
    summary.set("error", err.what());
    summary.write(cfg.output_dir + "/oracle_summary.txt");
    return 3;
  }
  summary.write(cfg.output_dir + "/oracle_summary.txt");
  return 0;
}

int run_sweep(const ExperimentConfig& cfg, const std::string& param,
              const std::vector<double>& values) {
  if (param != "alpha") throw ValidationError("sweep: only --param alpha is supported");
  if (values.empty()) throw ValidationError("sweep: needs at least one value");
  fs::create_directories(cfg.output_dir);

  // The sweep compares the regularized solutions against the unregularized
  // BP-like optimum.
  const ExperimentInputs base = materialize(cfg);
  Summary sweep;
  describe(sweep, cfg, base);

  double j_bp_true = 0.0;
  bool have_bp = false;
  if (cfg.family == ProblemFamily::RegBp) {
    const OracleReport bp = solve_bp_oracle(base.problem.a, base.problem.b, base.problem.reg,
                                            base.problem.constraint, base.partition, cfg.oracle_tol);
    j_bp_true = bp.objective;
    have_bp = true;
    sweep.set("j_bp_true", j_bp_true);
  }

  int code = 0;
  int idx = 0;
  for (double v : values) {
    ExperimentConfig sub = cfg;
    if (cfg.family == ProblemFamily::RegBp)
      sub.problem_alpha = v;
    else
      sub.stage2_alpha = v;
    sub.output_dir = cfg.output_dir + "/alpha_" + std::to_string(idx);
    const int rc = run_experiment(sub);
    code = std::max(code, rc);

    char tagbuf[32];
    std::snprintf(tagbuf, sizeof(tagbuf), "alpha_%g", v);
    const std::string tag = tagbuf;
    sweep.set(tag + ".value", v);
    if (rc == 0) {
      const ExperimentInputs in = materialize(sub);
      const Vector x = load_vector(sub.output_dir + "/solution.txt");
      const double j_reg = in.problem.objective(x, in.partition);
      const double j_bp = in.problem.reg.value(x, in.partition);
      sweep.set(tag + ".j_reg", j_reg);
      sweep.set(tag + ".j_bp", j_bp);
      if (have_bp && j_bp_true != 0.0)
        sweep.set(tag + ".j_bp_re", relative_error(j_bp, j_bp_true));
    } else {
      sweep.set(tag + ".status", "failed");
    }
    ++idx;
  }
  sweep.write(cfg.output_dir + "/sweep_summary.txt");
  return code;
}

}  // namespace cpdual
