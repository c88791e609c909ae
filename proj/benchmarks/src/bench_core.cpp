#include <benchmark/benchmark.h>

#include "mbrl/env.hpp"
#include "mbrl/models.hpp"
#include "mbrl/nnet.hpp"
#include "mbrl/sac.hpp"
#include "mbrl/uncertainty.hpp"

namespace {

using namespace mbrl;

NetConfig model_net_config(int in, int out, int width, int layers) {
  NetConfig cfg;
  cfg.input_dim = in;
  cfg.output_dim = out;
  cfg.hidden.assign(layers, width);
  return cfg;
}

void BM_NnetForward(benchmark::State& state) {
  const int batch = static_cast<int>(state.range(0));
  DenseNet net(model_net_config(4, 4, 200, 2));
  Rng rng(1);
  net.init_glorot(rng);
  Eigen::MatrixXd x = Eigen::MatrixXd::Random(batch, 4);
  Eigen::MatrixXd mu, ls;
  for (auto _ : state) {
    net.predict(x, mu, ls);
    benchmark::DoNotOptimize(mu.data());
  }
  state.SetItemsProcessed(state.iterations() * batch);
}
BENCHMARK(BM_NnetForward)->Arg(64)->Arg(256)->Arg(2048);

void BM_NnetTrainStep(benchmark::State& state) {
  const int batch = static_cast<int>(state.range(0));
  DenseNet net(model_net_config(4, 4, 200, 2));
  Rng rng(1);
  net.init_glorot(rng);
  AdamState opt(net.param_count(), 1e-3);
  Eigen::MatrixXd x = Eigen::MatrixXd::Random(batch, 4);
  Eigen::MatrixXd y = Eigen::MatrixXd::Random(batch, 4);
  Eigen::VectorXd grad;
  Eigen::MatrixXd d_mu, d_ls;
  for (auto _ : state) {
    const ForwardCache cache = net.forward(x);
    gaussian_nll_batch(cache.mu, cache.ls, y, &d_mu, &d_ls);
    net.backward(cache, d_mu, d_ls, grad);
    opt.update(net.params(), grad);
    benchmark::DoNotOptimize(net.params().data());
  }
  state.SetItemsProcessed(state.iterations() * batch);
}
BENCHMARK(BM_NnetTrainStep)->Arg(64)->Arg(256);

DmdnModel make_bench_model() {
  DenseNet net(model_net_config(4, 4, 200, 2));
  Rng rng(7);
  net.init_glorot(rng);
  DatasetStats stats;
  stats.state_dim = 3;
  stats.action_dim = 1;
  stats.mean = Eigen::VectorXd::Zero(8);
  stats.std = Eigen::VectorXd::Ones(8);
  return DmdnModel(std::move(net), std::move(stats));
}

void BM_ModelSample(benchmark::State& state) {
  const int batch = static_cast<int>(state.range(0));
  const DmdnModel model = make_bench_model();
  Rng rng(3);
  Eigen::MatrixXd s = Eigen::MatrixXd::Random(batch, 3);
  Eigen::MatrixXd a = Eigen::MatrixXd::Random(batch, 1);
  Eigen::MatrixXd s_next;
  Eigen::VectorXd r;
  for (auto _ : state) {
    model.sample_batch(s, a, rng, s_next, r);
    benchmark::DoNotOptimize(s_next.data());
  }
  state.SetItemsProcessed(state.iterations() * batch);
}
BENCHMARK(BM_ModelSample)->Arg(400)->Arg(5000);

void BM_PenaltyMa(benchmark::State& state) {
  const int batch = static_cast<int>(state.range(0));
  const DmdnModel model = make_bench_model();
  Eigen::MatrixXd s = Eigen::MatrixXd::Random(batch, 3);
  Eigen::MatrixXd a = Eigen::MatrixXd::Random(batch, 1);
  for (auto _ : state) {
    Eigen::VectorXd u =
        penalty_batch(model, Heuristic::kSingleSigma, s, a);
    benchmark::DoNotOptimize(u.data());
  }
  state.SetItemsProcessed(state.iterations() * batch);
}
BENCHMARK(BM_PenaltyMa)->Arg(400);

void BM_SacUpdate(benchmark::State& state) {
  const EnvSpec spec = env_spec("pendulum");
  SacConfig cfg;
  cfg.hidden_units = static_cast<int>(state.range(0));
  SacAgent agent(spec, cfg, 11);
  Rng rng(13);
  const int b = cfg.batch_size;
  Eigen::MatrixXd s = Eigen::MatrixXd::Random(b, spec.state_dim);
  Eigen::MatrixXd a = Eigen::MatrixXd::Random(b, spec.action_dim);
  Eigen::MatrixXd sn = Eigen::MatrixXd::Random(b, spec.state_dim);
  Eigen::VectorXd r = Eigen::VectorXd::Random(b);
  Eigen::VectorXd done = Eigen::VectorXd::Zero(b);
  for (auto _ : state) {
    const auto losses = agent.update(s, a, r, sn, done, rng);
    benchmark::DoNotOptimize(losses.q1);
  }
}
BENCHMARK(BM_SacUpdate)->Arg(64)->Arg(256);

}  // namespace

BENCHMARK_MAIN();
