#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "app.hpp"
#include "lipreach/network.hpp"
#include "test_helpers.hpp"

using lipreach::testing::fixture_dir;
using lipreach::testing::vec;
using nlohmann::json;

namespace {

namespace fs = std::filesystem;

int run_cli(std::vector<std::string> args) {
  args.insert(args.begin(), "lipreach");
  std::vector<char*> argv;
  argv.reserve(args.size());
  for (std::string& a : args) argv.push_back(a.data());
  return lipreach::cli::run(static_cast<int>(argv.size()), argv.data());
}

fs::path temp_dir(const char* name) {
  const fs::path dir = fs::temp_directory_path() / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  REQUIRE(in);
  return std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

std::vector<json> read_records(const fs::path& p) {
  std::ifstream in(p);
  REQUIRE(in);
  std::vector<json> out;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty()) out.push_back(json::parse(line));
  }
  return out;
}

/// Saves f(y) = y0 + shift as a weight file and returns its path.
std::string save_coordinate_net(const fs::path& dir, const char* name, double shift) {
  const lipreach::NeuralNetwork net =
      lipreach::testing::affine_identity_net(2, vec({shift, 0.0}));
  const fs::path path = dir / name;
  lipreach::save_network(net, path.string());
  return path.string();
}

const std::string kDiWeights = fixture_dir() + "/double_integrator.json";
const std::string kDiProblem = fixture_dir() + "/double_integrator_problem.json";

}  // namespace

TEST_CASE("usage errors exit with the usage code") {
  CHECK(run_cli({}) == 64);
  CHECK(run_cli({"frobnicate"}) == 64);
  CHECK(run_cli({"lipschitz"}) == 64);                        // missing weights
  CHECK(run_cli({"verify", kDiWeights}) == 64);               // missing box
  CHECK(run_cli({"lipschitz", kDiWeights}) == 64);            // missing direction
  CHECK(run_cli({"lipschitz", kDiWeights, "--direction", "1", "--lipschitz-method",
                 "guess"}) == 64);
  CHECK(run_cli({"reach"}) == 64);
  CHECK(run_cli({"bench"}) == 64);
  CHECK(run_cli({"bench", "run", "unknown_suite"}) == 64);
  CHECK(run_cli({"--help"}) == 0);
}

TEST_CASE("missing inputs produce no partial output") {
  const fs::path out = fs::temp_directory_path() / "lipreach_no_partial";
  fs::remove_all(out);
  CHECK(run_cli({"lipschitz", "/nonexistent.json", "--direction", "1", "--out",
                 out.string()}) == 64);
  CHECK_FALSE(fs::exists(out));
  CHECK(run_cli({"reach", "/nonexistent_problem.json", "--out", out.string()}) == 64);
  CHECK_FALSE(fs::exists(out));
}

TEST_CASE("certificate runs write validated records") {
  const fs::path out = temp_dir("lipreach_cli_lipschitz");
  CHECK(run_cli({"lipschitz", kDiWeights, "--direction", "1", "--out", out.string()}) == 0);
  const auto records = read_records(out / "records.jsonl");
  REQUIRE(records.size() == 1);
  CHECK(records[0].at("kind") == "certificate");
  CHECK(records[0].at("certificate").at("bound").get<double>() > 0.0);
  CHECK(json::parse(slurp(out / "summary.json")).at("kind") == "certificate");

  const fs::path out_naive = temp_dir("lipreach_cli_lipschitz_naive");
  CHECK(run_cli({"lipschitz", kDiWeights, "--direction", "1", "--lipschitz-method", "naive",
                 "--out", out_naive.string()}) == 0);
  const auto naive = read_records(out_naive / "records.jsonl");
  CHECK(naive[0].at("certificate").at("method") == "naive");
  CHECK(naive[0].at("certificate").at("bound").get<double>() >=
        records[0].at("certificate").at("bound").get<double>() * (1.0 - 1e-6));
  fs::remove_all(out);
  fs::remove_all(out_naive);
}

TEST_CASE("box verification converges and renders a partition") {
  const fs::path out = temp_dir("lipreach_cli_verify");
  CHECK(run_cli({"verify", kDiWeights, "--direction", "1", "--lower", "2.5,-0.25", "--upper",
                 "3,0.25", "--epsilon", "0.001", "--svg", "--out", out.string()}) == 0);
  const json summary = json::parse(slurp(out / "summary.json"));
  CHECK(summary.at("kind") == "verify");
  CHECK(summary.at("result").at("status") == "converged");
  CHECK(summary.at("result").at("gap").get<double>() <= 0.001);
  CHECK(fs::exists(out / "partition.svg"));
  const auto records = read_records(out / "records.jsonl");
  CHECK(records.front().at("kind") == "verify");
  bool any_partition = false;
  for (const json& r : records) any_partition |= (r.at("kind") == "partition_rect");
  CHECK(any_partition);
  fs::remove_all(out);
}

TEST_CASE("verification mode maps statuses to exit codes") {
  const fs::path dir = temp_dir("lipreach_cli_toys");
  const std::string positive = save_coordinate_net(dir, "positive.json", 2.0);
  const std::string crossing = save_coordinate_net(dir, "crossing.json", -0.5);

  CHECK(run_cli({"verify", positive, "--direction", "1,0", "--lower", "0,0", "--upper", "1,1",
                 "--verify-mode"}) == 0);

  const fs::path out = dir / "counterexample";
  CHECK(run_cli({"verify", crossing, "--direction", "1,0", "--lower", "0,0", "--upper", "1,1",
                 "--verify-mode", "--out", out.string()}) == 2);
  const json summary = json::parse(slurp(out / "summary.json"));
  CHECK(summary.at("result").at("status") == "counterexample_found");
  CHECK(summary.at("result").at("bub").get<double>() < 0.0);
  CHECK(summary.at("result").at("witness").size() == 2);
  fs::remove_all(dir);
}

TEST_CASE("a tiny node budget reports the cap through the exit code") {
  CHECK(run_cli({"verify", kDiWeights, "--direction", "1", "--lower", "2.5,-0.25", "--upper",
                 "3,0.25", "--epsilon", "1e-9", "--node-cap", "8"}) == 3);
}

TEST_CASE("reach runs write records, summary, trajectories, and plots") {
  const fs::path out = temp_dir("lipreach_cli_reach");
  CHECK(run_cli({"reach", kDiProblem, "--epsilon", "0.05", "--samples", "40", "--svg", "--out",
                 out.string()}) == 0);

  const json summary = json::parse(slurp(out / "summary.json"));
  CHECK(summary.at("kind") == "reach_summary");
  CHECK(summary.at("solve_count") == 20);
  CHECK(summary.at("config").at("epsilon") == 0.05);
  CHECK(summary.at("config").at("samples") == 40);

  const auto records = read_records(out / "records.jsonl");
  int solves = 0;
  for (const json& r : records) solves += (r.at("kind") == "solve") ? 1 : 0;
  CHECK(solves == 20);

  const std::string csv = slurp(out / "trajectories.csv");
  CHECK(csv.rfind("sample,step,x0,x1", 0) == 0);
  CHECK(fs::exists(out / "reach.svg"));
  CHECK(slurp(out / "reach.svg").rfind("<svg", 0) == 0);
  fs::remove_all(out);
}

TEST_CASE("reach rejects open-loop problem files") {
  CHECK(run_cli({"reach", fixture_dir() + "/robotic_arm_problem.json"}) == 64);
}

TEST_CASE("goal and avoid checks emit set-check records") {
  const fs::path dir = temp_dir("lipreach_cli_checks");
  {
    std::ofstream out(dir / "w.json");
    out << R"({"schema_version":1,"activation":"relu","arch":[2,2,1],
      "weights":[[[0,0],[0,0]],[[0,0]]],"biases":[[0,0],[0]]})";
  }
  {
    // Identity dynamics, zero controller: every step set is the initial box.
    std::ofstream out(dir / "p.json");
    out << R"({"schema_version":1,"kind":"closed_loop","weights":"w.json",
      "initial_set":{"lower":[0,0],"upper":[1,1]},
      "dynamics":{"A":[[1,0],[0,1]],"B":[[1],[0]],"c":[0,0],"dt":1.0,"horizon":2},
      "epsilon":0.1,"samples":5,"seed":1,
      "goal":[{"normal":[1,0],"offset":5.0},{"normal":[0,1],"offset":0.5}],
      "avoid":[[{"normal":[-1,0],"offset":-3.0}]]})";
  }
  const fs::path out = dir / "out";
  CHECK(run_cli({"reach", (dir / "p.json").string(), "--out", out.string()}) == 0);

  bool goal_seen = false;
  bool avoid_seen = false;
  for (const json& r : read_records(out / "records.jsonl")) {
    if (r.at("kind") != "set_check") continue;
    if (r.at("target") == "goal") {
      goal_seen = true;
      CHECK(r.at("step") == 2);
      // The second goal constraint (x1 <= 0.5) cannot hold over [0,1]^2.
      CHECK(r.at("certified") == false);
    } else {
      avoid_seen = true;
      CHECK(r.at("certified") == true);  // x0 >= 3 never intersects [0,1+eps]
    }
  }
  CHECK(goal_seen);
  CHECK(avoid_seen);

  const fs::path quiet = dir / "quiet";
  CHECK(run_cli({"reach", (dir / "p.json").string(), "--no-check-sets", "--out",
                 quiet.string()}) == 0);
  for (const json& r : read_records(quiet / "records.jsonl")) {
    CHECK(r.at("kind") != "set_check");
  }
  fs::remove_all(dir);
}

TEST_CASE("thread count changes no record except wall time") {
  const fs::path a = temp_dir("lipreach_cli_threads1");
  const fs::path b = temp_dir("lipreach_cli_threads4");
  CHECK(run_cli({"reach", kDiProblem, "--epsilon", "0.01", "--threads", "1", "--out",
                 a.string()}) == 0);
  CHECK(run_cli({"reach", kDiProblem, "--epsilon", "0.01", "--threads", "4", "--out",
                 b.string()}) == 0);

  auto normalized = [](const fs::path& p) {
    std::vector<std::string> lines;
    for (json r : read_records(p / "records.jsonl")) {
      if (r.contains("result")) r["result"]["stats"]["wall_time_s"] = 0.0;
      lines.push_back(r.dump());
    }
    return lines;
  };
  CHECK(normalized(a) == normalized(b));

  json sa = json::parse(slurp(a / "summary.json"));
  json sb = json::parse(slurp(b / "summary.json"));
  CHECK(sa.at("sets") == sb.at("sets"));
  CHECK(slurp(a / "trajectories.csv") == slurp(b / "trajectories.csv"));
  fs::remove_all(a);
  fs::remove_all(b);
}

TEST_CASE("bench subcommands list, generate, and run") {
  CHECK(run_cli({"bench", "list"}) == 0);

  const fs::path gen = temp_dir("lipreach_cli_gen");
  CHECK(run_cli({"bench", "gen", "--out", gen.string()}) == 0);
  CHECK(fs::exists(gen / "double_integrator.json"));
  CHECK(fs::exists(gen / "quadrotor_problem.json"));
  CHECK(slurp(gen / "robotic_arm.json") ==
        slurp(fs::path(fixture_dir()) / "robotic_arm.json"));
  fs::remove_all(gen);

  const fs::path out = temp_dir("lipreach_cli_bench");
  CHECK(run_cli({"bench", "run", "double_integrator", "--quick", "--epsilon", "0.1",
                 "--fixtures", fixture_dir(), "--out", out.string()}) == 0);
  const json summary = json::parse(slurp(out / "summary.json"));
  CHECK(summary.at("kind") == "bench_summary");
  CHECK(summary.at("all_passed") == true);
  const auto records = read_records(out / "records.jsonl");
  CHECK_FALSE(records.empty());
  fs::remove_all(out);
}
