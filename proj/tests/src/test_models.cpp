#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <stdexcept>
#include <vector>

#include "mbrl/dataset.hpp"
#include "mbrl/env.hpp"
#include "mbrl/models.hpp"
#include "mbrl/nnet.hpp"

using namespace mbrl;
namespace fs = std::filesystem;

namespace {

DatasetStats identity_stats(int ds, int da) {
  DatasetStats st;
  st.state_dim = ds;
  st.action_dim = da;
  st.mean = Eigen::VectorXd::Zero(2 * ds + da + 1);
  st.std = Eigen::VectorXd::Ones(2 * ds + da + 1);
  return st;
}

NetConfig dmdn_net_config(int ds, int da) {
  NetConfig cfg;
  cfg.input_dim = ds + da;
  cfg.output_dim = ds + 1;
  cfg.hidden = {4};
  cfg.head_hidden = 3;
  return cfg;
}

// Zero-parameter DMDN: every output channel is N(0, 1) in standardized
// coordinates, i.e. s_next ~ N(s, std_target) + mean_target shift.
DmdnModel zero_dmdn(int ds, int da, DatasetStats st) {
  DenseNet net(dmdn_net_config(ds, da));
  return {std::move(net), std::move(st)};
}

}  // namespace

TEST_CASE("model kind strings round-trip") {
  CHECK(to_string(ModelKind::kDmdn) == "dmdn");
  CHECK(to_string(ModelKind::kDarmdn) == "darmdn");
  CHECK(to_string(ModelKind::kEnsemble) == "ensemble");
  CHECK(model_kind_from_string("dmdn") == ModelKind::kDmdn);
  CHECK(model_kind_from_string("darmdn") == ModelKind::kDarmdn);
  CHECK(model_kind_from_string("ensemble") == ModelKind::kEnsemble);
  CHECK_THROWS_AS(model_kind_from_string("gp"), std::invalid_argument);
}

TEST_CASE("mixture density oracles") {
  Eigen::VectorXd w(2), mu(2), sg(2);
  w << 0.5, 0.5;
  mu << -1.0, 1.0;
  sg << 1.0, 1.0;
  // symmetric mixture at the midpoint: density equals one standard normal
  // at z = 1, cdf is exactly one half
  CHECK(mixture_logpdf(w, mu, sg, 0.0) ==
        doctest::Approx(-1.4189385332046727).epsilon(1e-13));
  CHECK(mixture_cdf(w, mu, sg, 0.0) == doctest::Approx(0.5).epsilon(1e-13));

  Eigen::VectorXd w1(1), mu1(1), sg1(1);
  w1 << 1.0;
  mu1 << 0.0;
  sg1 << 1.0;
  CHECK(mixture_logpdf(w1, mu1, sg1, 1.0) ==
        doctest::Approx(-1.4189385332046727).epsilon(1e-13));
  CHECK(mixture_cdf(w1, mu1, sg1, 1.0) ==
        doctest::Approx(0.8413447460685429).epsilon(1e-13));
}

TEST_CASE("model_input and model_targets standardize channel-wise") {
  DatasetStats st;
  st.state_dim = 1;
  st.action_dim = 1;
  st.mean.resize(4);
  st.mean << 1.0, 2.0, 3.0, 4.0;  // s, a, delta, r
  st.std.resize(4);
  st.std << 2.0, 4.0, 0.5, 10.0;

  Eigen::MatrixXd s(1, 1), a(1, 1), sn(1, 1);
  Eigen::VectorXd r(1);
  s << 5.0;
  a << 10.0;
  sn << 5.5;  // delta = 0.5
  r << -6.0;

  Eigen::MatrixXd in = model_input(s, a, st);
  CHECK(in(0, 0) == doctest::Approx((5.0 - 1.0) / 2.0));
  CHECK(in(0, 1) == doctest::Approx((10.0 - 2.0) / 4.0));
  Eigen::MatrixXd tg = model_targets(s, sn, r, st);
  CHECK(tg(0, 0) == doctest::Approx((0.5 - 3.0) / 0.5));
  CHECK(tg(0, 1) == doctest::Approx((-6.0 - 4.0) / 10.0));
}

TEST_CASE("zero dmdn with shifted stats realizes the documented laws") {
  DatasetStats st = identity_stats(2, 1);
  st.mean(3) = 0.5;   // delta dim 0 mean
  st.std(3) = 2.0;    // delta dim 0 std
  st.mean(5) = -1.0;  // reward mean
  st.std(5) = 3.0;
  DmdnModel m = zero_dmdn(2, 1, st);

  Eigen::MatrixXd s(1, 2), a(1, 1);
  s << 10.0, 20.0;
  a << 0.0;
  Eigen::MatrixXd sn(1, 2);
  sn << 10.5, 20.0;
  Eigen::VectorXd r(1);
  r << -1.0;

  BatchLaws laws = m.dim_laws_batch(s, a, sn, r);
  CHECK(laws.dims() == 3);
  CHECK(laws.weights(0) == doctest::Approx(1.0));
  // s_next dim 0 ~ N(s0 + 0.5, 2), dim 1 ~ N(s1, 1), r ~ N(-1, 3)
  CHECK(laws.mu[0](0, 0) == doctest::Approx(10.5));
  CHECK(laws.sigma[0](0, 0) == doctest::Approx(2.0));
  CHECK(laws.mu[1](0, 0) == doctest::Approx(20.0));
  CHECK(laws.sigma[1](0, 0) == doctest::Approx(1.0));
  CHECK(laws.mu[2](0, 0) == doctest::Approx(-1.0));
  CHECK(laws.sigma[2](0, 0) == doctest::Approx(3.0));

  // change of variables: densities match the raw-space gaussians exactly
  auto [total, per_dim] = m.log_density(s.row(0), a.row(0), sn.row(0), -1.0);
  CHECK(per_dim(0) ==
        doctest::Approx(gaussian_logpdf(10.5, 10.5, 2.0)).epsilon(1e-12));
  CHECK(per_dim(1) ==
        doctest::Approx(gaussian_logpdf(20.0, 20.0, 1.0)).epsilon(1e-12));
  CHECK(per_dim(2) ==
        doctest::Approx(gaussian_logpdf(-1.0, -1.0, 3.0)).epsilon(1e-12));
  CHECK(total == doctest::Approx(per_dim.sum()).epsilon(1e-12));

  // moments agree with the laws
  BatchMoments bm = m.moments_batch(s, a);
  CHECK(bm.members() == 1);
  CHECK(bm.mu[0](0, 0) == doctest::Approx(10.5));
  CHECK(bm.sigma[0](0, 2) == doctest::Approx(3.0));
}

TEST_CASE("dmdn samples in row-major draw order") {
  DmdnModel m = zero_dmdn(2, 1, identity_stats(2, 1));
  Eigen::MatrixXd s(2, 2), a(2, 1);
  s << 1.0, 2.0, 3.0, 4.0;
  a << 0.0, 0.0;

  Rng rng(55), twin(55);
  Eigen::MatrixXd sn;
  Eigen::VectorXd r;
  m.sample_batch(s, a, rng, sn, r);
  for (int i = 0; i < 2; ++i) {
    for (int j = 0; j < 2; ++j)
      CHECK(sn(i, j) == doctest::Approx(s(i, j) + twin.normal()).epsilon(1e-15));
    CHECK(r(i) == doctest::Approx(twin.normal()).epsilon(1e-15));
  }

  // same seed, same draws
  Rng again(55);
  Eigen::MatrixXd sn2;
  Eigen::VectorXd r2;
  m.sample_batch(s, a, again, sn2, r2);
  CHECK(sn2.isApprox(sn, 0.0));
  CHECK(r2.isApprox(r, 0.0));
}

TEST_CASE("darmdn with zero nets samples in dimension-major order") {
  const int ds = 2, da = 1;
  std::vector<DenseNet> nets;
  for (int j = 0; j <= ds; ++j) {
    NetConfig cfg;
    cfg.input_dim = ds + da + j;
    cfg.output_dim = 1;
    cfg.hidden = {3};
    nets.emplace_back(cfg);
  }
  DarmdnModel m(std::move(nets), identity_stats(ds, da));

  Eigen::MatrixXd s(2, 2), a(2, 1);
  s << 1.0, 2.0, 3.0, 4.0;
  a << 0.0, 0.0;
  Rng rng(99), twin(99);
  Eigen::MatrixXd sn;
  Eigen::VectorXd r;
  m.sample_batch(s, a, rng, sn, r);
  // dim 0 rows 0..1, dim 1 rows 0..1, reward rows 0..1
  Eigen::MatrixXd z(2, 3);
  for (int j = 0; j < 3; ++j)
    for (int i = 0; i < 2; ++i) z(i, j) = twin.normal();
  for (int i = 0; i < 2; ++i) {
    CHECK(sn(i, 0) == doctest::Approx(s(i, 0) + z(i, 0)).epsilon(1e-15));
    CHECK(sn(i, 1) == doctest::Approx(s(i, 1) + z(i, 1)).epsilon(1e-15));
    CHECK(r(i) == doctest::Approx(z(i, 2)).epsilon(1e-15));
  }
}

TEST_CASE("darmdn moments chain predicted means, laws condition on truth") {
  // d_s = 1: net 0 predicts the state delta, net 1 the reward. Net 1's
  // trunk reads only its conditioning input y0 through weight w; all other
  // parameters stay zero except the output scale v2.
  const int ds = 1, da = 1;
  const double c0 = 0.7, w = 1.3, v2 = 0.9;

  NetConfig cfg0;
  cfg0.input_dim = 2;
  cfg0.output_dim = 1;
  cfg0.hidden = {1};
  cfg0.head_hidden = 1;
  DenseNet net0(cfg0);
  net0.block("mu.c2")(0, 0) = c0;

  NetConfig cfg1 = cfg0;
  cfg1.input_dim = 3;  // (s, a, y0)
  DenseNet net1(cfg1);
  net1.block("trunk0.W")(0, 2) = w;
  net1.block("mu.V1")(0, 0) = 1.0;
  net1.block("mu.V2")(0, 0) = v2;

  std::vector<DenseNet> nets;
  nets.push_back(std::move(net0));
  nets.push_back(std::move(net1));
  DarmdnModel m(std::move(nets), identity_stats(ds, da));

  Eigen::MatrixXd s(1, 1), a(1, 1);
  s << 2.0;
  a << 0.0;

  // mean chaining: net 1 sees net 0's predicted standardized mean c0
  BatchMoments bm = m.moments_batch(s, a);
  const double chained = v2 * std::tanh(std::tanh(w * c0));
  CHECK(bm.mu[0](0, 0) == doctest::Approx(2.0 + c0).epsilon(1e-12));
  CHECK(bm.mu[0](0, 1) == doctest::Approx(chained).epsilon(1e-12));

  // teacher forcing: the reward law conditions on the true next state
  const double y0_true = -0.4;  // standardized delta of the given s_next
  Eigen::MatrixXd sn(1, 1);
  sn << 2.0 + y0_true;
  Eigen::VectorXd r(1);
  r << 0.0;
  BatchLaws laws = m.dim_laws_batch(s, a, sn, r);
  const double forced = v2 * std::tanh(std::tanh(w * y0_true));
  CHECK(laws.mu[1](0, 0) == doctest::Approx(forced).epsilon(1e-12));
  CHECK(forced != doctest::Approx(chained));
}

TEST_CASE("ensemble needs two members and mixes uniformly") {
  std::vector<DmdnModel> one;
  one.push_back(zero_dmdn(1, 1, identity_stats(1, 1)));
  CHECK_THROWS_AS(EnsembleModel(std::move(one)), std::invalid_argument);

  std::vector<DmdnModel> three;
  for (int l = 0; l < 3; ++l)
    three.push_back(zero_dmdn(1, 1, identity_stats(1, 1)));
  EnsembleModel ens(std::move(three));
  CHECK(ens.member_count() == 3);

  Eigen::MatrixXd s(1, 1), a(1, 1);
  s << 0.0;
  a << 0.0;
  Eigen::MatrixXd sn(1, 1);
  sn << 0.0;
  Eigen::VectorXd r(1);
  r << 0.0;
  BatchLaws laws = ens.dim_laws_batch(s, a, sn, r);
  CHECK(laws.weights.size() == 3);
  CHECK(laws.weights.isApproxToConstant(1.0 / 3.0, 1e-12));
  BatchMoments bm = ens.moments_batch(s, a);
  CHECK(bm.members() == 3);
}

TEST_CASE("ensemble of identical members samples the member law") {
  std::vector<DmdnModel> three;
  for (int l = 0; l < 3; ++l)
    three.push_back(zero_dmdn(1, 1, identity_stats(1, 1)));
  EnsembleModel ens(std::move(three));

  const int n = 10000;
  Eigen::MatrixXd s = Eigen::MatrixXd::Zero(n, 1);
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(n, 1);
  Rng rng(123);
  Eigen::MatrixXd sn;
  Eigen::VectorXd r;
  ens.sample_batch(s, a, rng, sn, r);

  // PIT of the draws against N(0,1) should be uniform: KS well under 0.02
  std::vector<double> pit(n);
  for (int i = 0; i < n; ++i) pit[i] = gaussian_cdf(sn(i, 0), 0.0, 1.0);
  std::sort(pit.begin(), pit.end());
  double ks = 0.0;
  for (int i = 0; i < n; ++i)
    ks = std::max(ks, std::abs((i + 1.0) / n - pit[i]));
  CHECK(ks < 0.02);
}

TEST_CASE("train_model produces the requested family") {
  auto env = make_env("pendulum");
  TransitionDataset ds =
      collect(*env, uniform_random_policy(env->spec()), 300, 11);
  auto [tr, va] = split(ds, 0.2, 1);

  ModelConfig cfg;
  cfg.n_hidden_units = 8;
  cfg.n_hidden_layers = 1;
  cfg.epochs = 2;
  cfg.batch_size = 32;

  SUBCASE("dmdn") {
    cfg.kind = ModelKind::kDmdn;
    TrainedModel tm = train_model(tr, va, cfg, 3);
    CHECK(tm.model->kind() == ModelKind::kDmdn);
    CHECK(tm.model->member_count() == 1);
    CHECK(tm.history.size() == 1);
    CHECK(tm.history[0].val_loss.size() <= 2);
  }
  SUBCASE("darmdn trains one net per output dim") {
    cfg.kind = ModelKind::kDarmdn;
    TrainedModel tm = train_model(tr, va, cfg, 3);
    CHECK(tm.model->kind() == ModelKind::kDarmdn);
    CHECK(tm.history.size() == 4);  // 3 state dims + reward
    auto* dar = dynamic_cast<DarmdnModel*>(tm.model.get());
    REQUIRE(dar != nullptr);
    for (int j = 0; j < 4; ++j)
      CHECK(dar->nets()[j].config().input_dim == 4 + j);
  }
  SUBCASE("ensemble members differ") {
    cfg.kind = ModelKind::kEnsemble;
    cfg.ensemble_members = 3;
    TrainedModel tm = train_model(tr, va, cfg, 3);
    CHECK(tm.model->member_count() == 3);
    CHECK(tm.history.size() == 3);
    auto* ens = dynamic_cast<EnsembleModel*>(tm.model.get());
    REQUIRE(ens != nullptr);
    CHECK_FALSE(ens->members()[0].net().params().isApprox(
        ens->members()[1].net().params(), 0.0));
    CHECK_FALSE(ens->members()[1].net().params().isApprox(
        ens->members()[2].net().params(), 0.0));
  }
  SUBCASE("training is deterministic in the seed") {
    cfg.kind = ModelKind::kDmdn;
    TrainedModel a1 = train_model(tr, va, cfg, 9);
    TrainedModel a2 = train_model(tr, va, cfg, 9);
    auto* m1 = dynamic_cast<DmdnModel*>(a1.model.get());
    auto* m2 = dynamic_cast<DmdnModel*>(a2.model.get());
    CHECK(m1->net().params().isApprox(m2->net().params(), 0.0));
    TrainedModel b = train_model(tr, va, cfg, 10);
    auto* mb = dynamic_cast<DmdnModel*>(b.model.get());
    CHECK_FALSE(m1->net().params().isApprox(mb->net().params(), 0.0));
  }
}

TEST_CASE("model checkpoints round-trip through directories") {
  auto env = make_env("pendulum");
  TransitionDataset ds =
      collect(*env, uniform_random_policy(env->spec()), 200, 13);
  auto [tr, va] = split(ds, 0.2, 2);

  ModelConfig cfg;
  cfg.n_hidden_units = 6;
  cfg.n_hidden_layers = 1;
  cfg.epochs = 1;

  for (ModelKind kind :
       {ModelKind::kDmdn, ModelKind::kDarmdn, ModelKind::kEnsemble}) {
    CAPTURE(to_string(kind));
    cfg.kind = kind;
    TrainedModel tm = train_model(tr, va, cfg, 5);
    const auto dir = (fs::temp_directory_path() /
                      ("mbrl_test_model_" + to_string(kind)))
                         .string();
    fs::remove_all(dir);
    save_model(*tm.model, dir);
    std::unique_ptr<DynamicsModel> back = load_model(dir);
    fs::remove_all(dir);

    CHECK(back->kind() == kind);
    CHECK(back->member_count() == tm.model->member_count());

    // identical sampling streams under the same seed
    Eigen::MatrixXd s = ds.s.topRows(16), a = ds.a.topRows(16);
    Rng r1(21), r2(21);
    Eigen::MatrixXd sn1, sn2;
    Eigen::VectorXd rw1, rw2;
    tm.model->sample_batch(s, a, r1, sn1, rw1);
    back->sample_batch(s, a, r2, sn2, rw2);
    CHECK(sn1.isApprox(sn2, 0.0));
    CHECK(rw1.isApprox(rw2, 0.0));

    // identical densities
    auto [lp1, pd1] = tm.model->log_density(ds.s.row(0), ds.a.row(0),
                                            ds.s_next.row(0), ds.r(0));
    auto [lp2, pd2] = back->log_density(ds.s.row(0), ds.a.row(0),
                                        ds.s_next.row(0), ds.r(0));
    CHECK(lp1 == lp2);
  }
}

TEST_CASE("mixture training beyond one component is rejected") {
  auto env = make_env("pendulum");
  TransitionDataset ds =
      collect(*env, uniform_random_policy(env->spec()), 50, 14);
  auto [tr, va] = split(ds, 0.2, 3);
  ModelConfig cfg;
  cfg.d_mix = 2;
  CHECK_THROWS_AS(train_model(tr, va, cfg, 1), std::invalid_argument);
}
