#include "mbrl/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "mbrl/io.hpp"

namespace mbrl {

using nlohmann::json;

namespace {
constexpr char kDatasetMagic[9] = "MBRLDS1\n";
constexpr int kDatasetFormatVersion = 1;

json envspec_to_json(const EnvSpec& sp) {
  json j;
  j["id"] = sp.id;
  j["state_dim"] = sp.state_dim;
  j["action_dim"] = sp.action_dim;
  j["horizon"] = sp.horizon;
  j["gamma"] = sp.gamma;
  j["action_low"] = std::vector<double>(sp.action_low.data(),
                                        sp.action_low.data() + sp.action_low.size());
  j["action_high"] = std::vector<double>(
      sp.action_high.data(), sp.action_high.data() + sp.action_high.size());
  j["random_ref"] = sp.random_ref;
  j["expert_ref"] = sp.expert_ref;
  return j;
}

EnvSpec envspec_from_json(const json& j) {
  EnvSpec sp;
  sp.id = j.at("id").get<std::string>();
  sp.state_dim = j.at("state_dim").get<int>();
  sp.action_dim = j.at("action_dim").get<int>();
  sp.horizon = j.at("horizon").get<int>();
  sp.gamma = j.at("gamma").get<double>();
  const auto lo = j.at("action_low").get<std::vector<double>>();
  const auto hi = j.at("action_high").get<std::vector<double>>();
  sp.action_low = Eigen::Map<const Eigen::VectorXd>(lo.data(), lo.size());
  sp.action_high = Eigen::Map<const Eigen::VectorXd>(hi.data(), hi.size());
  sp.random_ref = j.at("random_ref").get<double>();
  sp.expert_ref = j.at("expert_ref").get<double>();
  return sp;
}
}  // namespace

Transition TransitionDataset::at(std::size_t i) const {
  Transition t;
  t.s = s.row(i).transpose();
  t.a = a.row(i).transpose();
  t.r = r(static_cast<Eigen::Index>(i));
  t.s_next = s_next.row(i).transpose();
  t.done = done[i] != 0;
  return t;
}

std::vector<std::pair<std::size_t, std::size_t>>
TransitionDataset::episode_ranges() const {
  std::vector<std::pair<std::size_t, std::size_t>> out;
  const std::size_t n = size();
  const std::size_t horizon = static_cast<std::size_t>(spec.horizon);
  std::size_t begin = 0;
  std::size_t count = 0;
  for (std::size_t i = 0; i < n; ++i) {
    ++count;
    if (done[i] != 0 || count == horizon) {
      out.emplace_back(begin, i + 1);
      begin = i + 1;
      count = 0;
    }
  }
  if (begin < n) out.emplace_back(begin, n);
  return out;
}

Policy uniform_random_policy(const EnvSpec& spec) {
  const Eigen::VectorXd lo = spec.action_low;
  const Eigen::VectorXd hi = spec.action_high;
  return [lo, hi](const Eigen::VectorXd&, Rng& rng) {
    Eigen::VectorXd a(lo.size());
    for (Eigen::Index i = 0; i < a.size(); ++i)
      a(i) = rng.uniform(lo(i), hi(i));
    return a;
  };
}

TransitionDataset collect(const Env& env, const Policy& policy,
                          std::size_t n_steps, std::uint64_t seed) {
  if (n_steps == 0) throw std::invalid_argument("collect: n_steps must be >= 1");
  const EnvSpec& sp = env.spec();

  TransitionDataset ds;
  ds.spec = sp;
  ds.regime = "raw";
  ds.behavior_meta_json = "{}";
  ds.s.resize(n_steps, sp.state_dim);
  ds.a.resize(n_steps, sp.action_dim);
  ds.r.resize(n_steps);
  ds.s_next.resize(n_steps, sp.state_dim);
  ds.done.resize(n_steps, 0);

  Rng rng(seed);
  Eigen::VectorXd state = env.reset(rng);
  std::size_t in_episode = 0;
  for (std::size_t i = 0; i < n_steps; ++i) {
    Eigen::VectorXd act = policy(state, rng);
    if (act.size() != sp.action_dim)
      throw std::invalid_argument("collect: policy/env action dim mismatch");
    const StepResult res = env.step(state, act);
    ds.s.row(i) = state.transpose();
    ds.a.row(i) = env.clip_action(act).transpose();
    ds.r(static_cast<Eigen::Index>(i)) = res.reward;
    ds.s_next.row(i) = res.next_state.transpose();
    ds.done[i] = res.done ? 1 : 0;
    ++in_episode;
    if (res.done || in_episode == static_cast<std::size_t>(sp.horizon)) {
      state = env.reset(rng);
      in_episode = 0;
    } else {
      state = res.next_state;
    }
  }
  return ds;
}

namespace {
TransitionDataset take_rows(const TransitionDataset& ds,
                            const std::vector<std::size_t>& idx) {
  TransitionDataset out;
  out.spec = ds.spec;
  out.regime = ds.regime;
  out.behavior_meta_json = ds.behavior_meta_json;
  const auto n = static_cast<Eigen::Index>(idx.size());
  out.s.resize(n, ds.s.cols());
  out.a.resize(n, ds.a.cols());
  out.r.resize(n);
  out.s_next.resize(n, ds.s_next.cols());
  out.done.resize(idx.size());
  for (Eigen::Index k = 0; k < n; ++k) {
    const auto i = idx[static_cast<std::size_t>(k)];
    out.s.row(k) = ds.s.row(i);
    out.a.row(k) = ds.a.row(i);
    out.r(k) = ds.r(static_cast<Eigen::Index>(i));
    out.s_next.row(k) = ds.s_next.row(i);
    out.done[static_cast<std::size_t>(k)] = ds.done[i];
  }
  return out;
}
}  // namespace

std::pair<TransitionDataset, TransitionDataset> split(
    const TransitionDataset& ds, double val_fraction, std::uint64_t seed) {
  if (!(val_fraction > 0.0 && val_fraction < 1.0))
    throw std::invalid_argument("split: val_fraction must be in (0, 1)");
  const std::size_t n = ds.size();
  const auto n_val =
      static_cast<std::size_t>(std::llround(static_cast<double>(n) * val_fraction));
  if (n_val == 0 || n_val >= n)
    throw std::invalid_argument("split: a side would be empty");

  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  Rng rng(derive_seed(seed, "dataset.split"));
  rng.shuffle(perm);

  std::vector<std::size_t> val_idx(perm.begin(), perm.begin() + n_val);
  std::vector<std::size_t> train_idx(perm.begin() + n_val, perm.end());
  std::sort(val_idx.begin(), val_idx.end());
  std::sort(train_idx.begin(), train_idx.end());
  return {take_rows(ds, train_idx), take_rows(ds, val_idx)};
}

DatasetStats compute_stats(const TransitionDataset& ds) {
  if (ds.size() == 0) throw std::invalid_argument("compute_stats: empty dataset");
  const int d_s = static_cast<int>(ds.s.cols());
  const int d_a = static_cast<int>(ds.a.cols());
  const Eigen::Index dim = 2 * d_s + d_a + 1;

  Eigen::MatrixXd chan(ds.s.rows(), dim);
  chan << ds.s, ds.a, (ds.s_next - ds.s), ds.r;

  DatasetStats st;
  st.state_dim = d_s;
  st.action_dim = d_a;
  st.mean = chan.colwise().mean();
  Eigen::VectorXd var =
      (chan.rowwise() - st.mean.transpose()).array().square().colwise().mean();
  st.std = var.array().sqrt().max(1e-8);
  return st;
}

Eigen::VectorXd standardize(const Eigen::VectorXd& x,
                            const Eigen::VectorXd& mean,
                            const Eigen::VectorXd& std) {
  return ((x - mean).array() / std.array()).matrix();
}

Eigen::VectorXd destandardize(const Eigen::VectorXd& x,
                              const Eigen::VectorXd& mean,
                              const Eigen::VectorXd& std) {
  return (x.array() * std.array()).matrix() + mean;
}

TransitionDataset concat(const TransitionDataset& a,
                         const TransitionDataset& b) {
  if (a.spec.id != b.spec.id)
    throw std::invalid_argument("concat: mismatched environments");
  TransitionDataset out;
  out.spec = a.spec;
  out.regime = a.regime;
  out.behavior_meta_json = a.behavior_meta_json;
  const Eigen::Index na = a.s.rows(), nb = b.s.rows();
  out.s.resize(na + nb, a.s.cols());
  out.s << a.s, b.s;
  out.a.resize(na + nb, a.a.cols());
  out.a << a.a, b.a;
  out.r.resize(na + nb);
  out.r << a.r, b.r;
  out.s_next.resize(na + nb, a.s_next.cols());
  out.s_next << a.s_next, b.s_next;
  out.done = a.done;
  out.done.insert(out.done.end(), b.done.begin(), b.done.end());
  return out;
}

void save_dataset(const TransitionDataset& ds, const std::string& path) {
  json header;
  header["format_version"] = kDatasetFormatVersion;
  header["env"] = envspec_to_json(ds.spec);
  header["regime"] = ds.regime;
  header["behavior_meta"] =
      ds.behavior_meta_json.empty() ? json::object() : json::parse(ds.behavior_meta_json);
  header["n"] = ds.size();
  header["state_dim"] = ds.spec.state_dim;
  header["action_dim"] = ds.spec.action_dim;
  const std::string htext = header.dump();

  auto os = io::open_out(path);
  io::write_magic(os, kDatasetMagic);
  io::write_blob(os, htext);
  const std::size_t n = ds.size();
  std::vector<double> row;
  for (std::size_t i = 0; i < n; ++i) {
    row.clear();
    for (Eigen::Index j = 0; j < ds.s.cols(); ++j) row.push_back(ds.s(i, j));
    for (Eigen::Index j = 0; j < ds.a.cols(); ++j) row.push_back(ds.a(i, j));
    row.push_back(ds.r(static_cast<Eigen::Index>(i)));
    for (Eigen::Index j = 0; j < ds.s_next.cols(); ++j)
      row.push_back(ds.s_next(i, j));
    io::write_f64_array(os, row.data(), row.size());
    const char flag = ds.done[i] ? 1 : 0;
    io::write_bytes(os, &flag, 1);
  }
}

TransitionDataset load_dataset(const std::string& path) {
  auto is = io::open_in(path);
  io::expect_magic(is, kDatasetMagic, "dataset");
  const json header = json::parse(io::read_blob(is));
  if (header.at("format_version").get<int>() != kDatasetFormatVersion)
    throw std::runtime_error("unsupported dataset format version");

  TransitionDataset ds;
  ds.spec = envspec_from_json(header.at("env"));
  ds.regime = header.at("regime").get<std::string>();
  ds.behavior_meta_json = header.at("behavior_meta").dump();
  const auto n = header.at("n").get<std::size_t>();
  const int d_s = header.at("state_dim").get<int>();
  const int d_a = header.at("action_dim").get<int>();

  ds.s.resize(n, d_s);
  ds.a.resize(n, d_a);
  ds.r.resize(n);
  ds.s_next.resize(n, d_s);
  ds.done.resize(n);
  std::vector<double> row(static_cast<std::size_t>(2 * d_s + d_a + 1));
  for (std::size_t i = 0; i < n; ++i) {
    io::read_f64_array(is, row.data(), row.size());
    std::size_t k = 0;
    for (int j = 0; j < d_s; ++j) ds.s(i, j) = row[k++];
    for (int j = 0; j < d_a; ++j) ds.a(i, j) = row[k++];
    ds.r(static_cast<Eigen::Index>(i)) = row[k++];
    for (int j = 0; j < d_s; ++j) ds.s_next(i, j) = row[k++];
    char flag;
    io::read_bytes(is, &flag, 1);
    ds.done[i] = flag ? 1 : 0;
  }
  return ds;
}

void export_jsonl(const TransitionDataset& ds, const std::string& path) {
  std::ostringstream out;
  const std::size_t n = ds.size();
  for (std::size_t i = 0; i < n; ++i) {
    json rec;
    rec["s"] = std::vector<double>(ds.s.row(i).begin(), ds.s.row(i).end());
    rec["a"] = std::vector<double>(ds.a.row(i).begin(), ds.a.row(i).end());
    rec["r"] = ds.r(static_cast<Eigen::Index>(i));
    rec["s_next"] =
        std::vector<double>(ds.s_next.row(i).begin(), ds.s_next.row(i).end());
    rec["done"] = ds.done[i] != 0;
    out << rec.dump() << "\n";
  }
  io::write_text_file(path, out.str());
}

}  // namespace mbrl
