#include <benchmark/benchmark.h>

#include <random>
#include <string>
#include <vector>

#include "lipreach/bnb.hpp"
#include "lipreach/lipschitz.hpp"
#include "lipreach/network.hpp"
#include "lipreach/reach.hpp"

namespace {

using namespace lipreach;

std::string fixture(const char* name) {
  return std::string(LIPREACH_FIXTURE_DIR) + "/" + name;
}

const NeuralNetwork& di_network() {
  static const NeuralNetwork net = load_network(fixture("double_integrator.json"));
  return net;
}

const NeuralNetwork& quad_network() {
  static const NeuralNetwork net = load_network(fixture("quadrotor.json"));
  return net;
}

Rectangle di_box() {
  Eigen::VectorXd lo(2), hi(2);
  lo << 2.5, -0.25;
  hi << 3.0, 0.25;
  return Rectangle(lo, hi);
}

void forward_pass(benchmark::State& state) {
  const NeuralNetwork& net = state.range(0) == 0 ? di_network() : quad_network();
  const Eigen::VectorXd x = Eigen::VectorXd::Constant(net.input_dim(), 0.5);
  for (auto _ : state) {
    benchmark::DoNotOptimize(net.forward(x));
  }
}
BENCHMARK(forward_pass)->Arg(0)->Arg(1);

void node_bound(benchmark::State& state) {
  const ObjectiveFunction obj(di_network(), Eigen::VectorXd::Ones(1));
  PartitionNode node;
  node.rect = di_box();
  for (auto _ : state) {
    benchmark::DoNotOptimize(bound(node, obj, 3.4, static_cast<int>(state.range(0))));
  }
}
BENCHMARK(node_bound)->Arg(1)->Arg(4);

void global_minimize(benchmark::State& state) {
  const ObjectiveFunction obj(di_network(), Eigen::VectorXd::Ones(1));
  const LipschitzCertificate cert = lipschitz_sdp(obj);
  BnbConfig cfg;
  cfg.epsilon = 1e-3;
  for (auto _ : state) {
    benchmark::DoNotOptimize(minimize(obj, di_box(), cert, cfg));
  }
}
BENCHMARK(global_minimize);

void certificate_search(benchmark::State& state) {
  const NeuralNetwork& net = state.range(0) == 0 ? di_network() : quad_network();
  Eigen::VectorXd c = Eigen::VectorXd::Zero(net.output_dim());
  c[0] = 1.0;
  const ObjectiveFunction obj(net, c);
  for (auto _ : state) {
    benchmark::DoNotOptimize(lipschitz_sdp(obj));
  }
}
BENCHMARK(certificate_search)->Arg(0)->Arg(1);

void naive_certificate(benchmark::State& state) {
  const ObjectiveFunction obj(quad_network(), (Eigen::VectorXd(3) << 1, 0, 0).finished());
  for (auto _ : state) {
    benchmark::DoNotOptimize(lipschitz_naive(obj));
  }
}
BENCHMARK(naive_certificate);

void principal_directions(benchmark::State& state) {
  std::mt19937_64 rng(7);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::vector<Eigen::VectorXd> cloud;
  for (int i = 0; i < 100; ++i) {
    Eigen::VectorXd p(6);
    for (int j = 0; j < 6; ++j) p[j] = gauss(rng);
    cloud.push_back(std::move(p));
  }
  for (auto _ : state) {
    benchmark::DoNotOptimize(pca_directions(cloud));
  }
}
BENCHMARK(principal_directions);

void spectral_norm_64(benchmark::State& state) {
  std::mt19937_64 rng(11);
  std::normal_distribution<double> gauss(0.0, 1.0);
  Eigen::MatrixXd m(64, 64);
  for (Eigen::Index i = 0; i < m.size(); ++i) m(i) = gauss(rng);
  for (auto _ : state) {
    benchmark::DoNotOptimize(spectral_norm(m));
  }
}
BENCHMARK(spectral_norm_64);

}  // namespace

BENCHMARK_MAIN();
