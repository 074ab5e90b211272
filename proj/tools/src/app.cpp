#include "app.hpp"

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "lipreach/bnb.hpp"
#include "lipreach/errors.hpp"
#include "lipreach/lipschitz.hpp"
#include "lipreach/network.hpp"
#include "lipreach/problems.hpp"
#include "lipreach/reach.hpp"
#include "lipreach/records.hpp"
#include "lipreach/svg.hpp"

namespace lipreach::cli {

namespace {

namespace fs = std::filesystem;

constexpr int kUsageError = 64;

int status_exit_code(BnbStatus s) {
  switch (s) {
    case BnbStatus::Converged:
    case BnbStatus::VerifiedNonnegative:
      return 0;
    case BnbStatus::CounterexampleFound:
      return 2;
    case BnbStatus::NodeCapReached:
      return 3;
  }
  return kUsageError;
}

Eigen::VectorXd to_vector(const std::vector<double>& v) {
  Eigen::VectorXd out(static_cast<Eigen::Index>(v.size()));
  for (std::size_t i = 0; i < v.size(); ++i) out[static_cast<Eigen::Index>(i)] = v[i];
  return out;
}

void write_file(const fs::path& path, const std::string& content) {
  std::ofstream out(path);
  if (!out) throw ParseError("cannot write '" + path.string() + "'");
  out << content;
}

// Every emitted record must re-validate against its schema before it lands
// on disk.
void write_records(const fs::path& path, const std::vector<std::string>& lines) {
  std::string all;
  for (const std::string& line : lines) {
    validate_record(line);
    all += line;
    all += '\n';
  }
  write_file(path, all);
}

void write_summary(const fs::path& dir, const std::string& record) {
  validate_record(record);
  write_file(dir / "summary.json", record + "\n");
}

std::vector<Eigen::VectorXd> sample_box(const Rectangle& box, int count, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::vector<Eigen::VectorXd> pts;
  pts.reserve(static_cast<std::size_t>(count));
  for (int j = 0; j < count; ++j) {
    Eigen::VectorXd x(box.dim());
    for (int i = 0; i < box.dim(); ++i) {
      const double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;
      x[i] = box.lower()[i] + (box.upper()[i] - box.lower()[i]) * u;
    }
    pts.push_back(std::move(x));
  }
  return pts;
}

struct SolveOpts {
  double epsilon = 1e-2;
  int kb = 512;
  int kv = 4;
  std::int64_t node_cap = 5000000;
  std::uint64_t seed = 0;
  int samples = 100;
  int threads = 0;  // 0 = all cores; 1 pins the single-threaded reference path
  std::string out;
  bool svg = false;
  bool verify_mode = false;
  bool identity_rotation = false;
  std::string method = "sdp";
};

void add_solver_flags(CLI::App* cmd, SolveOpts& o) {
  cmd->add_option("--epsilon", o.epsilon, "Required optimality gap")
      ->check(CLI::PositiveNumber);
  cmd->add_option("--kb", o.kb, "Nodes branched per iteration")->check(CLI::PositiveNumber);
  cmd->add_option("--kv", o.kv,
                  "Sub-boxes per lower-bound refinement (power of two; 1 disables)");
  cmd->add_option("--node-cap", o.node_cap, "Hard limit on created nodes")
      ->check(CLI::PositiveNumber);
  cmd->add_option("--seed", o.seed, "Seed for sampling");
  cmd->add_option("--samples", o.samples, "Sample count (trajectories / warm points)");
  cmd->add_option("--threads", o.threads,
                  "Worker threads (0 = all cores, 1 = reference path)");
  cmd->add_option("--out", o.out, "Output directory for records and plots");
  cmd->add_flag("--svg", o.svg, "Render SVG plots into the output directory");
  cmd->add_option("--lipschitz-method", o.method, "Certificate method")
      ->check(CLI::IsMember({"sdp", "naive"}));
}

BnbConfig bnb_config(const SolveOpts& o, bool collect_partition) {
  BnbConfig cfg;
  cfg.epsilon = o.epsilon;
  cfg.branch_batch = o.kb;
  cfg.refine_splits = o.kv;
  cfg.node_cap = o.node_cap;
  cfg.verify_mode = o.verify_mode;
  cfg.threads = o.threads;
  cfg.collect_partition = collect_partition;
  cfg.validate();
  return cfg;
}

LipschitzMethod method_from(const std::string& name) {
  return name == "naive" ? LipschitzMethod::NaiveProduct : LipschitzMethod::Sdp;
}

fs::path ensure_out_dir(const std::string& out) {
  fs::path dir(out);
  fs::create_directories(dir);
  return dir;
}

struct LipschitzArgs {
  std::string weights;
  std::vector<double> direction;
  std::vector<double> lower;
  std::vector<double> upper;
};

int do_lipschitz(const LipschitzArgs& a, const SolveOpts& o) {
  const NeuralNetwork net = load_network(a.weights);
  const ObjectiveFunction obj(net, to_vector(a.direction));

  if (a.lower.empty() != a.upper.empty()) {
    throw std::invalid_argument("--lower and --upper must be given together");
  }
  std::optional<PreactivationBounds> pre;
  if (!a.lower.empty() && method_from(o.method) == LipschitzMethod::Sdp) {
    const Rectangle box(to_vector(a.lower), to_vector(a.upper));
    pre = preactivation_intervals(
        net, box, Eigen::MatrixXd::Identity(net.input_dim(), net.input_dim()));
  }
  const LipschitzCertificate cert = method_from(o.method) == LipschitzMethod::Sdp
                                        ? lipschitz_sdp(obj, pre)
                                        : lipschitz_naive(obj);
  const std::string record = certificate_record(cert);
  validate_record(record);
  std::printf("bound=%.17g method=%s warning=%d\n", cert.bound, to_string(cert.method).c_str(),
              cert.solver_warning ? 1 : 0);
  if (!o.out.empty()) {
    const fs::path dir = ensure_out_dir(o.out);
    write_records(dir / "records.jsonl", {record});
    write_summary(dir, record);
  } else {
    std::printf("%s\n", record.c_str());
  }
  return 0;
}

struct VerifyArgs {
  std::string weights;
  std::vector<double> direction;
  std::vector<double> lower;
  std::vector<double> upper;
};

int do_verify(const VerifyArgs& a, const SolveOpts& o) {
  const NeuralNetwork net = load_network(a.weights);
  const ObjectiveFunction obj(net, to_vector(a.direction));
  const Rectangle box(to_vector(a.lower), to_vector(a.upper));

  std::optional<PreactivationBounds> pre;
  if (method_from(o.method) == LipschitzMethod::Sdp) {
    pre = preactivation_intervals(
        net, box, Eigen::MatrixXd::Identity(net.input_dim(), net.input_dim()));
  }
  const LipschitzCertificate cert = method_from(o.method) == LipschitzMethod::Sdp
                                        ? lipschitz_sdp(obj, pre)
                                        : lipschitz_naive(obj);

  const BnbConfig cfg = bnb_config(o, /*collect_partition=*/o.svg);
  const std::vector<Eigen::VectorXd> warm = sample_box(box, o.samples, o.seed);
  const BnbResult res = minimize(obj, box, cert, cfg, warm);

  const std::string record = verify_record(res, o.epsilon);
  validate_record(record);
  std::printf("status=%s blb=%.17g bub=%.17g gap=%.17g nodes=%lld\n",
              to_string(res.status).c_str(), res.best_lower, res.best_upper,
              res.best_upper - res.best_lower,
              static_cast<long long>(res.stats.nodes_created));
  if (!o.out.empty()) {
    const fs::path dir = ensure_out_dir(o.out);
    std::vector<std::string> lines = {record};
    const std::vector<std::string> snapshot = partition_records(res);
    lines.insert(lines.end(), snapshot.begin(), snapshot.end());
    write_records(dir / "records.jsonl", lines);
    write_summary(dir, record);
    if (o.svg) {
      if (box.dim() == 2 && !res.partition.empty()) {
        write_file(dir / "partition.svg", render_partition_svg(res.partition));
      } else {
        std::fprintf(stderr, "note: partition plots need a 2-D box; skipping SVG\n");
      }
    }
  } else {
    std::printf("%s\n", record.c_str());
  }
  return status_exit_code(res.status);
}

struct ReachArgs {
  std::string problem;
  std::vector<int> axes = {0, 1};
  bool no_check_sets = false;
};

int do_reach(const ReachArgs& a, const SolveOpts& o, bool epsilon_set, bool samples_set,
             bool seed_set) {
  ProblemFile pf = load_problem(a.problem);
  if (!pf.dynamics.has_value()) {
    throw std::invalid_argument("'reach' needs a closed-loop problem file");
  }
  const NeuralNetwork net = load_network(pf.weight_path);
  const LinearDynamics& dyn = *pf.dynamics;
  const int n = dyn.state_dim();
  const RotatedRectangle init(Eigen::MatrixXd::Identity(n, n), pf.initial_set);

  ReachConfig rc;
  rc.bnb = bnb_config(o, false);
  rc.bnb.epsilon = epsilon_set ? o.epsilon : pf.epsilon;
  rc.samples = samples_set ? o.samples : pf.samples;
  rc.seed = seed_set ? o.seed : pf.seed;
  rc.identity_rotation = o.identity_rotation;
  rc.lipschitz_method = method_from(o.method);

  const ReachabilityResult r = reach(dyn, net, init, rc);

  for (std::size_t t = 0; t < r.sets.size(); ++t) {
    std::printf("step %zu: volume %.6g\n", t, r.sets[t].volume());
  }
  std::printf("steps=%d solves=%zu node_cap=%d\n", dyn.horizon, r.solves.size(),
              r.any_node_cap ? 1 : 0);

  const std::string summary = reach_summary(dyn, rc, r);
  validate_record(summary);

  std::vector<std::string> lines;
  lines.reserve(r.solves.size() + 8);
  for (const DirectionSolve& s : r.solves) lines.push_back(solve_record(s));
  if (!a.no_check_sets) {
    if (!pf.goal.empty()) {
      const bool ok = contained_in(r.sets.back(), pf.goal);
      lines.push_back(set_check_record("goal", dyn.horizon, ok));
      std::printf("goal check at step %d: %s\n", dyn.horizon, ok ? "certified" : "not certified");
    }
    for (std::size_t k = 0; k < pf.avoid.size(); ++k) {
      for (std::size_t t = 0; t < r.sets.size(); ++t) {
        const bool ok = certified_disjoint(r.sets[t], pf.avoid[k]);
        lines.push_back(set_check_record("avoid[" + std::to_string(k) + "]",
                                         static_cast<int>(t), ok));
        if (!ok) {
          std::printf("avoid region %zu not certified disjoint at step %zu\n", k, t);
        }
      }
    }
  }

  if (!o.out.empty()) {
    const fs::path dir = ensure_out_dir(o.out);
    write_records(dir / "records.jsonl", lines);
    write_summary(dir, summary);
    write_file(dir / "trajectories.csv", trajectories_csv(r.trajectories));
    if (o.svg) {
      if (a.axes.size() != 2) throw std::invalid_argument("--axes needs exactly two indices");
      write_file(dir / "reach.svg",
                 render_reach_svg(r.sets, r.trajectories, a.axes[0], a.axes[1]));
    }
  } else {
    std::printf("%s\n", summary.c_str());
  }
  return r.any_node_cap ? 3 : 0;
}

struct BenchArgs {
  std::string name;
  std::string fixtures = "fixtures";
  bool quick = false;
};

int do_bench_run(const BenchArgs& a, const SolveOpts& o, bool epsilon_set) {
  std::optional<BenchmarkSpec> spec;
  for (const BenchmarkSpec& s : all_benchmarks()) {
    if (s.name == a.name) spec = s;
  }
  if (!spec) throw std::invalid_argument("unknown benchmark '" + a.name + "'");

  BenchOptions opts;
  if (epsilon_set) opts.epsilon = o.epsilon;
  opts.threads = o.threads;
  opts.quick = a.quick;
  opts.method = method_from(o.method);

  const BenchRunResult res = run_benchmark(*spec, a.fixtures, opts);
  int passed = 0;
  for (const PropertyOutcome& p : res.outcomes) {
    std::printf("[%s] %s - %s\n", p.passed ? "PASS" : "FAIL", p.name.c_str(), p.detail.c_str());
    if (p.passed) ++passed;
  }
  std::printf("benchmark %s: %d/%zu properties passed (epsilon=%g)\n", spec->name.c_str(), passed,
              res.outcomes.size(), res.epsilon);

  const std::string summary = bench_summary_record(spec->name, res.outcomes);
  validate_record(summary);
  if (!o.out.empty()) {
    const fs::path dir = ensure_out_dir(o.out);
    std::vector<std::string> lines;
    if (res.reach.has_value()) {
      for (const DirectionSolve& s : res.reach->solves) lines.push_back(solve_record(s));
    }
    for (const DirectionBound& b : res.supports) {
      lines.push_back(verify_record(b.result, res.epsilon));
    }
    write_records(dir / "records.jsonl", lines);
    write_summary(dir, summary);
    if (o.svg && res.reach.has_value()) {
      write_file(dir / "reach.svg",
                 render_reach_svg(res.reach->sets, res.reach->trajectories, 0, 1));
    }
  }
  return res.all_passed() ? 0 : 1;
}

int do_bench_list() {
  for (const BenchmarkSpec& s : all_benchmarks()) {
    std::printf("%s (problem %s, weights %s)\n", s.name.c_str(), s.problem_file.c_str(),
                s.weight_file.c_str());
    for (const std::string& p : s.properties) std::printf("  - %s\n", p.c_str());
  }
  return 0;
}

int do_bench_gen(const std::string& out) {
  const std::string dir = out.empty() ? std::string("fixtures") : out;
  const std::vector<std::string> files = generate_fixtures(dir);
  for (const std::string& f : files) std::printf("wrote %s/%s\n", dir.c_str(), f.c_str());
  return 0;
}

}  // namespace

int run(int argc, char** argv) {
  CLI::App app{"Certified reachable-set over-approximation for neural feedback loops"};
  app.require_subcommand(1);

  LipschitzArgs lip_args;
  SolveOpts lip_opts;
  CLI::App* lip = app.add_subcommand("lipschitz", "Certify a Lipschitz bound for c . f");
  lip->add_option("weights", lip_args.weights, "Weight file (JSON)")->required();
  lip->add_option("--direction", lip_args.direction, "Objective direction c")
      ->required()
      ->delimiter(',');
  lip->add_option("--lower", lip_args.lower, "Box lower corner (enables localization)")
      ->delimiter(',');
  lip->add_option("--upper", lip_args.upper, "Box upper corner")->delimiter(',');
  add_solver_flags(lip, lip_opts);

  VerifyArgs ver_args;
  SolveOpts ver_opts;
  CLI::App* ver = app.add_subcommand("verify", "Minimize c . f over a box with certified bounds");
  ver->add_option("weights", ver_args.weights, "Weight file (JSON)")->required();
  ver->add_option("--direction", ver_args.direction, "Objective direction c")
      ->required()
      ->delimiter(',');
  ver->add_option("--lower", ver_args.lower, "Box lower corner")->required()->delimiter(',');
  ver->add_option("--upper", ver_args.upper, "Box upper corner")->required()->delimiter(',');
  ver->add_flag("--verify-mode", ver_opts.verify_mode,
                "Stop at a sign certificate instead of the gap");
  add_solver_flags(ver, ver_opts);

  ReachArgs reach_args;
  SolveOpts reach_opts;
  CLI::App* rch = app.add_subcommand("reach", "Propagate rotated rectangles through a closed loop");
  rch->add_option("problem", reach_args.problem, "Problem file (JSON)")->required();
  rch->add_option("--axes", reach_args.axes, "Projection axes for the SVG")->delimiter(',');
  rch->add_flag("--identity-rotation", reach_opts.identity_rotation,
                "Axis-aligned rectangles instead of data-driven bases");
  rch->add_flag("--no-check-sets", reach_args.no_check_sets,
                "Skip goal/avoid half-space checks");
  add_solver_flags(rch, reach_opts);

  BenchArgs bench_args;
  SolveOpts bench_opts;
  CLI::App* bench = app.add_subcommand("bench", "Benchmark suite");
  bench->require_subcommand(1);
  CLI::App* bench_run = bench->add_subcommand("run", "Run a named benchmark");
  bench_run->add_option("name", bench_args.name, "Benchmark name")->required();
  bench_run->add_option("--fixtures", bench_args.fixtures, "Fixture directory");
  bench_run->add_flag("--quick", bench_args.quick, "Trim Monte Carlo sample counts");
  add_solver_flags(bench_run, bench_opts);
  CLI::App* bench_list = bench->add_subcommand("list", "List benchmarks");
  std::string gen_out;
  CLI::App* bench_gen = bench->add_subcommand("gen", "Regenerate fixtures");
  bench_gen->add_option("--out", gen_out, "Fixture directory to write");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kUsageError;
  }

  try {
    if (lip->parsed()) return do_lipschitz(lip_args, lip_opts);
    if (ver->parsed()) return do_verify(ver_args, ver_opts);
    if (rch->parsed()) {
      return do_reach(reach_args, reach_opts, rch->count("--epsilon") > 0,
                      rch->count("--samples") > 0, rch->count("--seed") > 0);
    }
    if (bench->parsed()) {
      if (bench_run->parsed()) {
        return do_bench_run(bench_args, bench_opts, bench_run->count("--epsilon") > 0);
      }
      if (bench_list->parsed()) return do_bench_list();
      if (bench_gen->parsed()) return do_bench_gen(gen_out);
    }
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kUsageError;
  }
  return kUsageError;
}

}  // namespace lipreach::cli
