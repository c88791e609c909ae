#include "mbrl/models.hpp"

#include <cmath>
#include <filesystem>
#include <limits>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "mbrl/io.hpp"

namespace mbrl {

using nlohmann::json;

std::string to_string(ModelKind k) {
  switch (k) {
    case ModelKind::kDmdn: return "dmdn";
    case ModelKind::kDarmdn: return "darmdn";
    case ModelKind::kEnsemble: return "ensemble";
  }
  throw std::logic_error("bad model kind");
}

ModelKind model_kind_from_string(const std::string& s) {
  if (s == "dmdn") return ModelKind::kDmdn;
  if (s == "darmdn") return ModelKind::kDarmdn;
  if (s == "ensemble") return ModelKind::kEnsemble;
  throw std::invalid_argument("unknown model kind: " + s);
}

double mixture_logpdf(const Eigen::VectorXd& w, const Eigen::VectorXd& mu,
                      const Eigen::VectorXd& sigma, double x) {
  double best = -std::numeric_limits<double>::infinity();
  Eigen::VectorXd lp(w.size());
  for (Eigen::Index k = 0; k < w.size(); ++k) {
    lp(k) = std::log(w(k)) + gaussian_logpdf(x, mu(k), sigma(k));
    best = std::max(best, lp(k));
  }
  if (!std::isfinite(best)) return best;
  double acc = 0.0;
  for (Eigen::Index k = 0; k < w.size(); ++k) acc += std::exp(lp(k) - best);
  return best + std::log(acc);
}

double mixture_cdf(const Eigen::VectorXd& w, const Eigen::VectorXd& mu,
                   const Eigen::VectorXd& sigma, double x) {
  double acc = 0.0;
  for (Eigen::Index k = 0; k < w.size(); ++k)
    acc += w(k) * gaussian_cdf(x, mu(k), sigma(k));
  return acc;
}

Eigen::MatrixXd model_input(const Eigen::MatrixXd& s, const Eigen::MatrixXd& a,
                            const DatasetStats& stats) {
  const int ds = stats.state_dim, da = stats.action_dim;
  Eigen::MatrixXd x(s.rows(), ds + da);
  const Eigen::VectorXd ms = stats.mean_s(), ss = stats.std_s();
  const Eigen::VectorXd ma = stats.mean_a(), sa = stats.std_a();
  for (int j = 0; j < ds; ++j)
    x.col(j) = (s.col(j).array() - ms(j)) / ss(j);
  for (int j = 0; j < da; ++j)
    x.col(ds + j) = (a.col(j).array() - ma(j)) / sa(j);
  return x;
}

Eigen::MatrixXd model_targets(const Eigen::MatrixXd& s,
                              const Eigen::MatrixXd& s_next,
                              const Eigen::VectorXd& r,
                              const DatasetStats& stats) {
  const int ds = stats.state_dim;
  Eigen::MatrixXd y(s.rows(), ds + 1);
  const Eigen::VectorXd mt = stats.mean_target(), st = stats.std_target();
  for (int j = 0; j < ds; ++j)
    y.col(j) = ((s_next.col(j) - s.col(j)).array() - mt(j)) / st(j);
  y.col(ds) = (r.array() - mt(ds)) / st(ds);
  return y;
}

namespace {

// Raw-space law of output dim j from standardized head outputs: state dims
// are delta predictions anchored at s, the last dim is the reward.
void raw_law_column(int j, const DatasetStats& stats, const Eigen::MatrixXd& s,
                    const Eigen::Ref<const Eigen::VectorXd>& mu_std,
                    const Eigen::Ref<const Eigen::VectorXd>& ls_std,
                    Eigen::VectorXd& mu_raw, Eigen::VectorXd& sigma_raw) {
  const Eigen::VectorXd mt = stats.mean_target(), st = stats.std_target();
  const int ds = stats.state_dim;
  if (j < ds) {
    mu_raw = (s.col(j).array() + mt(j) + st(j) * mu_std.array()).matrix();
  } else {
    mu_raw = (mt(ds) + st(ds) * mu_std.array()).matrix();
  }
  sigma_raw = (st(j) * ls_std.array().exp()).matrix();
}

void check_finite_sa(const Eigen::MatrixXd& s, const Eigen::MatrixXd& a) {
  if (!s.allFinite() || !a.allFinite())
    throw std::invalid_argument("model: non-finite state or action");
}

}  // namespace

std::vector<MemberMoments> DynamicsModel::moments(
    const Eigen::VectorXd& s, const Eigen::VectorXd& a) const {
  const BatchMoments bm = moments_batch(s.transpose(), a.transpose());
  std::vector<MemberMoments> out(bm.members());
  for (int l = 0; l < bm.members(); ++l) {
    out[l].mu = bm.mu[l].row(0).transpose();
    out[l].sigma = bm.sigma[l].row(0).transpose();
  }
  return out;
}

std::pair<Eigen::VectorXd, double> DynamicsModel::sample(
    const Eigen::VectorXd& s, const Eigen::VectorXd& a, Rng& rng) const {
  Eigen::MatrixXd sn;
  Eigen::VectorXd r;
  sample_batch(s.transpose(), a.transpose(), rng, sn, r);
  return {sn.row(0).transpose(), r(0)};
}

std::pair<double, Eigen::VectorXd> DynamicsModel::log_density(
    const Eigen::VectorXd& s, const Eigen::VectorXd& a,
    const Eigen::VectorXd& s_next, double r) const {
  Eigen::VectorXd rv(1);
  rv << r;
  const BatchLaws laws =
      dim_laws_batch(s.transpose(), a.transpose(), s_next.transpose(), rv);
  Eigen::VectorXd per_dim(laws.dims());
  for (int j = 0; j < laws.dims(); ++j) {
    const double x = j < state_dim() ? s_next(j) : r;
    per_dim(j) = mixture_logpdf(laws.weights, laws.mu[j].row(0).transpose(),
                                laws.sigma[j].row(0).transpose(), x);
  }
  return {per_dim.sum(), per_dim};
}

// ---------------------------------------------------------------------------
// DMDN

DmdnModel::DmdnModel(DenseNet net, DatasetStats stats)
    : net_(std::move(net)), stats_(std::move(stats)) {
  if (net_.config().output_dim != stats_.state_dim + 1)
    throw std::invalid_argument("dmdn: net output dim must be d_s + 1");
}

BatchLaws DmdnModel::dim_laws_batch(const Eigen::MatrixXd& s,
                                    const Eigen::MatrixXd& a,
                                    const Eigen::MatrixXd&,
                                    const Eigen::VectorXd&) const {
  check_finite_sa(s, a);
  Eigen::MatrixXd mu, ls;
  net_.predict(model_input(s, a, stats_), mu, ls);
  const int dims = stats_.state_dim + 1;
  BatchLaws out;
  out.weights = Eigen::VectorXd::Ones(1);
  out.mu.resize(dims);
  out.sigma.resize(dims);
  Eigen::VectorXd m, sg;
  for (int j = 0; j < dims; ++j) {
    raw_law_column(j, stats_, s, mu.col(j), ls.col(j), m, sg);
    out.mu[j] = m;
    out.sigma[j] = sg;
  }
  return out;
}

BatchMoments DmdnModel::moments_batch(const Eigen::MatrixXd& s,
                                      const Eigen::MatrixXd& a) const {
  const BatchLaws laws = dim_laws_batch(s, a, s, Eigen::VectorXd::Zero(s.rows()));
  BatchMoments out;
  out.mu.resize(1);
  out.sigma.resize(1);
  const int dims = laws.dims();
  out.mu[0].resize(s.rows(), dims);
  out.sigma[0].resize(s.rows(), dims);
  for (int j = 0; j < dims; ++j) {
    out.mu[0].col(j) = laws.mu[j].col(0);
    out.sigma[0].col(j) = laws.sigma[j].col(0);
  }
  return out;
}

void DmdnModel::sample_batch(const Eigen::MatrixXd& s, const Eigen::MatrixXd& a,
                             Rng& rng, Eigen::MatrixXd& s_next,
                             Eigen::VectorXd& r) const {
  check_finite_sa(s, a);
  Eigen::MatrixXd mu, ls;
  net_.predict(model_input(s, a, stats_), mu, ls);
  const Eigen::Index b = s.rows();
  const int ds = stats_.state_dim;
  // Standardized draws, row-major order (sample i, then dim j).
  Eigen::MatrixXd y(b, ds + 1);
  for (Eigen::Index i = 0; i < b; ++i)
    for (int j = 0; j <= ds; ++j)
      y(i, j) = mu(i, j) + std::exp(ls(i, j)) * rng.normal();
  const Eigen::VectorXd mt = stats_.mean_target(), st = stats_.std_target();
  s_next.resize(b, ds);
  for (int j = 0; j < ds; ++j)
    s_next.col(j) = s.col(j).array() + mt(j) + st(j) * y.col(j).array();
  r = (mt(ds) + st(ds) * y.col(ds).array()).matrix();
}

PredictiveDistribution DmdnModel::predict(const Eigen::VectorXd& s,
                                          const Eigen::VectorXd& a) const {
  const BatchMoments bm = moments_batch(s.transpose(), a.transpose());
  PredictiveDistribution out;
  out.weights = Eigen::VectorXd::Ones(1);
  out.mu = bm.mu[0];
  out.sigma = bm.sigma[0];
  return out;
}

// ---------------------------------------------------------------------------
// DARMDN

DarmdnModel::DarmdnModel(std::vector<DenseNet> nets, DatasetStats stats)
    : nets_(std::move(nets)), stats_(std::move(stats)) {
  const int dims = stats_.state_dim + 1;
  if (static_cast<int>(nets_.size()) != dims)
    throw std::invalid_argument("darmdn: needs d_s + 1 conditional nets");
  const int base = stats_.state_dim + stats_.action_dim;
  for (int j = 0; j < dims; ++j) {
    if (nets_[j].config().input_dim != base + j ||
        nets_[j].config().output_dim != 1)
      throw std::invalid_argument("darmdn: net " + std::to_string(j) +
                                  " has wrong dimensions");
  }
}

BatchLaws DarmdnModel::dim_laws_batch(const Eigen::MatrixXd& s,
                                      const Eigen::MatrixXd& a,
                                      const Eigen::MatrixXd& s_next,
                                      const Eigen::VectorXd& r) const {
  check_finite_sa(s, a);
  const int ds = stats_.state_dim, da = stats_.action_dim;
  const int dims = ds + 1;
  const Eigen::Index b = s.rows();
  const Eigen::MatrixXd y_true = model_targets(s, s_next, r, stats_);

  Eigen::MatrixXd x(b, ds + da + dims);
  x.leftCols(ds + da) = model_input(s, a, stats_);
  BatchLaws out;
  out.weights = Eigen::VectorXd::Ones(1);
  out.mu.resize(dims);
  out.sigma.resize(dims);
  Eigen::MatrixXd mu, ls;
  Eigen::VectorXd m, sg;
  for (int j = 0; j < dims; ++j) {
    const Eigen::MatrixXd xj = x.leftCols(ds + da + j);
    nets_[j].predict(xj, mu, ls);
    raw_law_column(j, stats_, s, mu.col(0), ls.col(0), m, sg);
    out.mu[j] = m;
    out.sigma[j] = sg;
    // Teacher forcing: condition later dims on the true value of dim j.
    x.col(ds + da + j) = y_true.col(j);
  }
  return out;
}

BatchMoments DarmdnModel::moments_batch(const Eigen::MatrixXd& s,
                                        const Eigen::MatrixXd& a) const {
  check_finite_sa(s, a);
  const int ds = stats_.state_dim, da = stats_.action_dim;
  const int dims = ds + 1;
  const Eigen::Index b = s.rows();

  Eigen::MatrixXd x(b, ds + da + dims);
  x.leftCols(ds + da) = model_input(s, a, stats_);
  BatchMoments out;
  out.mu.assign(1, Eigen::MatrixXd(b, dims));
  out.sigma.assign(1, Eigen::MatrixXd(b, dims));
  Eigen::MatrixXd mu, ls;
  Eigen::VectorXd m, sg;
  for (int j = 0; j < dims; ++j) {
    const Eigen::MatrixXd xj = x.leftCols(ds + da + j);
    nets_[j].predict(xj, mu, ls);
    raw_law_column(j, stats_, s, mu.col(0), ls.col(0), m, sg);
    out.mu[0].col(j) = m;
    out.sigma[0].col(j) = sg;
    x.col(ds + da + j) = mu.col(0);  // chain the standardized means
  }
  return out;
}

void DarmdnModel::sample_batch(const Eigen::MatrixXd& s,
                               const Eigen::MatrixXd& a, Rng& rng,
                               Eigen::MatrixXd& s_next,
                               Eigen::VectorXd& r) const {
  check_finite_sa(s, a);
  const int ds = stats_.state_dim, da = stats_.action_dim;
  const int dims = ds + 1;
  const Eigen::Index b = s.rows();

  Eigen::MatrixXd x(b, ds + da + dims);
  x.leftCols(ds + da) = model_input(s, a, stats_);
  // Ancestral sampling: dimension-major draw order (all rows of dim j, then
  // dim j+1), realized standardized values fed forward.
  Eigen::MatrixXd mu, ls;
  for (int j = 0; j < dims; ++j) {
    const Eigen::MatrixXd xj = x.leftCols(ds + da + j);
    nets_[j].predict(xj, mu, ls);
    for (Eigen::Index i = 0; i < b; ++i)
      x(i, ds + da + j) = mu(i, 0) + std::exp(ls(i, 0)) * rng.normal();
  }
  const Eigen::MatrixXd y = x.rightCols(dims);
  const Eigen::VectorXd mt = stats_.mean_target(), st = stats_.std_target();
  s_next.resize(b, ds);
  for (int j = 0; j < ds; ++j)
    s_next.col(j) = s.col(j).array() + mt(j) + st(j) * y.col(j).array();
  r = (mt(ds) + st(ds) * y.col(ds).array()).matrix();
}

// ---------------------------------------------------------------------------
// Ensemble

EnsembleModel::EnsembleModel(std::vector<DmdnModel> members)
    : members_(std::move(members)) {
  if (members_.size() < 2)
    throw std::invalid_argument("ensemble: needs at least 2 members");
}

BatchLaws EnsembleModel::dim_laws_batch(const Eigen::MatrixXd& s,
                                        const Eigen::MatrixXd& a,
                                        const Eigen::MatrixXd& s_next,
                                        const Eigen::VectorXd& r) const {
  const int d = member_count();
  const int dims = state_dim() + 1;
  BatchLaws out;
  out.weights = Eigen::VectorXd::Constant(d, 1.0 / d);
  out.mu.assign(dims, Eigen::MatrixXd(s.rows(), d));
  out.sigma.assign(dims, Eigen::MatrixXd(s.rows(), d));
  for (int l = 0; l < d; ++l) {
    const BatchLaws ml = members_[l].dim_laws_batch(s, a, s_next, r);
    for (int j = 0; j < dims; ++j) {
      out.mu[j].col(l) = ml.mu[j].col(0);
      out.sigma[j].col(l) = ml.sigma[j].col(0);
    }
  }
  return out;
}

BatchMoments EnsembleModel::moments_batch(const Eigen::MatrixXd& s,
                                          const Eigen::MatrixXd& a) const {
  BatchMoments out;
  for (const auto& m : members_) {
    BatchMoments bm = m.moments_batch(s, a);
    out.mu.push_back(std::move(bm.mu[0]));
    out.sigma.push_back(std::move(bm.sigma[0]));
  }
  return out;
}

void EnsembleModel::sample_batch(const Eigen::MatrixXd& s,
                                 const Eigen::MatrixXd& a, Rng& rng,
                                 Eigen::MatrixXd& s_next,
                                 Eigen::VectorXd& r) const {
  const Eigen::Index b = s.rows();
  const int d = member_count();
  std::vector<int> member_of(b);
  for (Eigen::Index i = 0; i < b; ++i)
    member_of[i] = static_cast<int>(rng.uniform_int(0, d - 1));

  s_next.resize(b, state_dim());
  r.resize(b);
  for (int l = 0; l < d; ++l) {
    std::vector<Eigen::Index> rows;
    for (Eigen::Index i = 0; i < b; ++i)
      if (member_of[i] == l) rows.push_back(i);
    if (rows.empty()) continue;
    Eigen::MatrixXd sl(rows.size(), s.cols()), al(rows.size(), a.cols());
    for (std::size_t k = 0; k < rows.size(); ++k) {
      sl.row(k) = s.row(rows[k]);
      al.row(k) = a.row(rows[k]);
    }
    Eigen::MatrixXd snl;
    Eigen::VectorXd rl;
    members_[l].sample_batch(sl, al, rng, snl, rl);
    for (std::size_t k = 0; k < rows.size(); ++k) {
      s_next.row(rows[k]) = snl.row(k);
      r(rows[k]) = rl(k);
    }
  }
}

// ---------------------------------------------------------------------------
// Training

namespace {
DenseNet make_net(int input_dim, int output_dim, const ModelConfig& cfg,
                  std::uint64_t init_seed) {
  NetConfig nc;
  nc.input_dim = input_dim;
  nc.output_dim = output_dim;
  nc.hidden.assign(cfg.n_hidden_layers, cfg.n_hidden_units);
  nc.activation = cfg.activation;
  nc.heads = HeadMode::kTwoHeads;
  nc.dropout = cfg.dropout;
  DenseNet net(nc);
  Rng rng(init_seed);
  net.init_glorot(rng);
  return net;
}

TrainConfig make_train_config(const ModelConfig& cfg, std::uint64_t seed) {
  TrainConfig tc;
  tc.lr = cfg.lr;
  tc.batch_size = cfg.batch_size;
  tc.epochs = cfg.epochs;
  tc.patience = cfg.patience;
  tc.weight_decay = cfg.weight_decay;
  tc.seed = seed;
  return tc;
}
}  // namespace

TrainedModel train_model(const TransitionDataset& train_set,
                         const TransitionDataset& val_set,
                         const ModelConfig& cfg, std::uint64_t seed) {
  if (cfg.d_mix != 1)
    throw std::invalid_argument(
        "mixture training beyond one component is not implemented");
  const DatasetStats stats = compute_stats(train_set);
  const int ds = stats.state_dim, da = stats.action_dim;
  const Eigen::MatrixXd x_tr = model_input(train_set.s, train_set.a, stats);
  const Eigen::MatrixXd y_tr =
      model_targets(train_set.s, train_set.s_next, train_set.r, stats);
  const Eigen::MatrixXd x_va = model_input(val_set.s, val_set.a, stats);
  const Eigen::MatrixXd y_va =
      model_targets(val_set.s, val_set.s_next, val_set.r, stats);

  TrainedModel out;
  if (cfg.kind == ModelKind::kDmdn) {
    DenseNet net = make_net(ds + da, ds + 1, cfg, derive_seed(seed, "model.init"));
    out.history.push_back(train(net, x_tr, y_tr, x_va, y_va,
                                make_train_config(cfg, derive_seed(seed, "model.train"))));
    out.model = std::make_unique<DmdnModel>(std::move(net), stats);
  } else if (cfg.kind == ModelKind::kDarmdn) {
    std::vector<DenseNet> nets;
    for (int j = 0; j <= ds; ++j) {
      DenseNet net =
          make_net(ds + da + j, 1, cfg, derive_seed(seed, "model.init", j));
      // Teacher forcing: condition on the true standardized targets.
      Eigen::MatrixXd xj_tr(x_tr.rows(), ds + da + j);
      xj_tr << x_tr, y_tr.leftCols(j);
      Eigen::MatrixXd xj_va(x_va.rows(), ds + da + j);
      xj_va << x_va, y_va.leftCols(j);
      out.history.push_back(train(net, xj_tr, y_tr.col(j), xj_va, y_va.col(j),
                                  make_train_config(cfg, derive_seed(seed, "model.train", j))));
      nets.push_back(std::move(net));
    }
    out.model = std::make_unique<DarmdnModel>(std::move(nets), stats);
  } else {
    std::vector<DmdnModel> members;
    for (int l = 0; l < cfg.ensemble_members; ++l) {
      const std::uint64_t member_seed = derive_seed(seed, "ensemble.member", l);
      DenseNet net =
          make_net(ds + da, ds + 1, cfg, derive_seed(member_seed, "model.init"));
      out.history.push_back(
          train(net, x_tr, y_tr, x_va, y_va,
                make_train_config(cfg, derive_seed(member_seed, "model.train"))));
      members.emplace_back(std::move(net), stats);
    }
    out.model = std::make_unique<EnsembleModel>(std::move(members));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Checkpoint bundle

namespace {
json stats_to_json(const DatasetStats& st) {
  json j;
  j["state_dim"] = st.state_dim;
  j["action_dim"] = st.action_dim;
  j["mean"] = std::vector<double>(st.mean.data(), st.mean.data() + st.mean.size());
  j["std"] = std::vector<double>(st.std.data(), st.std.data() + st.std.size());
  return j;
}

DatasetStats stats_from_json(const json& j) {
  DatasetStats st;
  st.state_dim = j.at("state_dim").get<int>();
  st.action_dim = j.at("action_dim").get<int>();
  const auto m = j.at("mean").get<std::vector<double>>();
  const auto s = j.at("std").get<std::vector<double>>();
  st.mean = Eigen::Map<const Eigen::VectorXd>(m.data(), m.size());
  st.std = Eigen::Map<const Eigen::VectorXd>(s.data(), s.size());
  return st;
}

std::vector<std::string> output_order(int ds) {
  std::vector<std::string> order;
  for (int j = 0; j < ds; ++j) order.push_back("s" + std::to_string(j));
  order.push_back("r");
  return order;
}
}  // namespace

void save_model(const DynamicsModel& model, const std::string& dir) {
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  json manifest;
  manifest["format_version"] = 1;
  manifest["kind"] = to_string(model.kind());
  manifest["state_dim"] = model.state_dim();
  manifest["action_dim"] = model.action_dim();
  manifest["output_order"] = output_order(model.state_dim());

  std::vector<std::string> net_files;
  const auto net_path = [&](int i) {
    return "net" + std::to_string(i) + ".bin";
  };
  if (const auto* m = dynamic_cast<const DmdnModel*>(&model)) {
    manifest["stats"] = stats_to_json(m->stats());
    save_net(m->net(), dir + "/" + net_path(0));
    net_files.push_back(net_path(0));
  } else if (const auto* m = dynamic_cast<const DarmdnModel*>(&model)) {
    manifest["stats"] = stats_to_json(m->stats());
    for (std::size_t j = 0; j < m->nets().size(); ++j) {
      save_net(m->nets()[j], dir + "/" + net_path(static_cast<int>(j)));
      net_files.push_back(net_path(static_cast<int>(j)));
    }
  } else if (const auto* m = dynamic_cast<const EnsembleModel*>(&model)) {
    manifest["stats"] = stats_to_json(m->members().front().stats());
    for (std::size_t l = 0; l < m->members().size(); ++l) {
      save_net(m->members()[l].net(), dir + "/" + net_path(static_cast<int>(l)));
      net_files.push_back(net_path(static_cast<int>(l)));
    }
  } else {
    throw std::invalid_argument("save_model: unsupported model implementation");
  }
  manifest["nets"] = net_files;
  io::write_text_file(dir + "/manifest.json", manifest.dump(2) + "\n");
}

std::unique_ptr<DynamicsModel> load_model(const std::string& dir) {
  const json manifest = json::parse(io::read_text_file(dir + "/manifest.json"));
  if (manifest.at("format_version").get<int>() != 1)
    throw std::runtime_error("unsupported model bundle version");
  const ModelKind kind =
      model_kind_from_string(manifest.at("kind").get<std::string>());
  const DatasetStats stats = stats_from_json(manifest.at("stats"));
  const auto files = manifest.at("nets").get<std::vector<std::string>>();

  if (kind == ModelKind::kDmdn) {
    return std::make_unique<DmdnModel>(load_net(dir + "/" + files.at(0)), stats);
  }
  if (kind == ModelKind::kDarmdn) {
    std::vector<DenseNet> nets;
    for (const auto& f : files) nets.push_back(load_net(dir + "/" + f));
    return std::make_unique<DarmdnModel>(std::move(nets), stats);
  }
  std::vector<DmdnModel> members;
  for (const auto& f : files)
    members.emplace_back(load_net(dir + "/" + f), stats);
  return std::make_unique<EnsembleModel>(std::move(members));
}

}  // namespace mbrl
