#include "cpd/operator.hpp"

#include "cpd/errors.hpp"

#include "byte_io.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <limits>
#include <ostream>
#include <random>
#include <stdexcept>

namespace cpd {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

// --- activations ----------------------------------------------------------------------

double rowdy(double x, const RowdyCoefficients& a) {
  double v = std::tanh(x);
  for (int k = 0; k < kRowdyTerms; ++k) v += a[k] * kRowdyScale * std::sin((k + 1) * kRowdyScale * x);
  return v;
}

double rowdy_dx(double x, const RowdyCoefficients& a) {
  const double t = std::tanh(x);
  double d = 1.0 - t * t;
  for (int k = 0; k < kRowdyTerms; ++k) {
    const double w = (k + 1) * kRowdyScale;
    d += a[k] * kRowdyScale * w * std::cos(w * x);
  }
  return d;
}

double rowdy_da(double x, int k) { return kRowdyScale * std::sin((k + 1) * kRowdyScale * x); }

namespace {

bool rowdy_active(const DenseLayer& layer) {
  return std::any_of(layer.rowdy.begin(), layer.rowdy.end(), [](double a) { return a != 0.0; });
}

MatrixXd activate(const DenseLayer& layer, const MatrixXd& z) {
  switch (layer.activation) {
    case Activation::linear: return z;
    case Activation::tanh: return z.array().tanh().matrix();
    case Activation::rowdy: {
      MatrixXd h = z.array().tanh().matrix();
      if (!rowdy_active(layer)) return h;
      for (int k = 0; k < kRowdyTerms; ++k)
        if (layer.rowdy[k] != 0.0)
          h.array() += layer.rowdy[k] * kRowdyScale * ((k + 1) * kRowdyScale * z.array()).sin();
      return h;
    }
  }
  return z;
}

// dL/dz from dL/dh; also accumulates the rowdy coefficient gradients.
MatrixXd activation_backward(const DenseLayer& layer, const MatrixXd& z, const MatrixXd& h, const MatrixXd& dh,
                             DenseLayer& grad) {
  switch (layer.activation) {
    case Activation::linear: return dh;
    case Activation::tanh: return (dh.array() * (1.0 - h.array().square())).matrix();
    case Activation::rowdy: {
      const Eigen::ArrayXXd t = z.array().tanh();
      Eigen::ArrayXXd deriv = 1.0 - t.square();
      for (int k = 0; k < kRowdyTerms; ++k) {
        const double w = (k + 1) * kRowdyScale;
        const Eigen::ArrayXXd wz = w * z.array();
        grad.rowdy[k] += (dh.array() * kRowdyScale * wz.sin()).sum();
        if (layer.rowdy[k] != 0.0) deriv += layer.rowdy[k] * kRowdyScale * w * wz.cos();
      }
      return (dh.array() * deriv).matrix();
    }
  }
  return dh;
}

// Forward pass. With `mod`, the output of hidden layer l is scaled, column group g by
// column group g, by mod[l].col(g).
void run_mlp(const MlpParams& p, const MatrixXd& x, MlpCache& c, const std::vector<MatrixXd>* mod,
             const std::vector<Index>* offsets) {
  const std::size_t L = p.layers.size();
  if (L == 0) throw std::invalid_argument("empty network");
  if (x.rows() != p.in_dim())
    throw std::invalid_argument("input width " + std::to_string(x.rows()) + " != " + std::to_string(p.in_dim()));
  c.z.resize(L);
  c.h.resize(L);
  c.a.resize(L + 1);
  c.a[0] = x;
  for (std::size_t l = 0; l < L; ++l) {
    const DenseLayer& layer = p.layers[l];
    if (layer.W.cols() != c.a[l].rows()) throw std::invalid_argument("layer " + std::to_string(l) + " width mismatch");
    c.z[l].noalias() = layer.W * c.a[l];
    c.z[l].colwise() += layer.b;
    c.h[l] = activate(layer, c.z[l]);
    if (mod && l + 1 < L) {
      const MatrixXd& m = (*mod)[l];
      c.a[l + 1].resize(c.h[l].rows(), c.h[l].cols());
      for (std::size_t g = 0; g + 1 < offsets->size(); ++g) {
        const Index s = (*offsets)[g], n = (*offsets)[g + 1] - s;
        c.a[l + 1].middleCols(s, n) = (c.h[l].middleCols(s, n).array().colwise() * m.col(g).array()).matrix();
      }
    } else {
      c.a[l + 1] = c.h[l];
    }
  }
}

// Reverse pass for run_mlp. `d` is dL/d(output). extra[l] (optional) is added to the gradient
// of the output of hidden layer l. dmod[l] receives dL/d mod[l].
void back_mlp(const MlpParams& p, const MlpCache& c, MatrixXd d, MlpParams& g, const std::vector<MatrixXd>* mod,
              const std::vector<Index>* offsets, std::vector<MatrixXd>* dmod, const std::vector<MatrixXd>* extra,
              MatrixXd* d_in) {
  const std::size_t L = p.layers.size();
  for (std::size_t l = L; l-- > 0;) {
    if (l + 1 < L) {
      if (extra) d += (*extra)[l];
      if (mod) {
        const MatrixXd& m = (*mod)[l];
        MatrixXd& dm = (*dmod)[l];
        dm.setZero(m.rows(), m.cols());
        for (std::size_t gi = 0; gi + 1 < offsets->size(); ++gi) {
          const Index s = (*offsets)[gi], n = (*offsets)[gi + 1] - s;
          dm.col(gi) = (c.h[l].middleCols(s, n).array() * d.middleCols(s, n).array()).rowwise().sum().matrix();
          d.middleCols(s, n) = (d.middleCols(s, n).array().colwise() * m.col(gi).array()).matrix();
        }
      }
    }
    const MatrixXd dz = activation_backward(p.layers[l], c.z[l], c.h[l], d, g.layers[l]);
    g.layers[l].W.noalias() += dz * c.a[l].transpose();
    g.layers[l].b += dz.rowwise().sum();
    if (l > 0 || d_in) d.noalias() = p.layers[l].W.transpose() * dz;
  }
  if (d_in) *d_in = std::move(d);
}

double unit(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

}  // namespace

// --- networks -------------------------------------------------------------------------

MlpParams MlpParams::make(Index in, const std::vector<Index>& hidden, Index out, Activation act) {
  MlpParams p;
  Index prev = in;
  for (Index w : hidden) {
    p.layers.push_back({MatrixXd::Zero(w, prev), VectorXd::Zero(w), act, {}});
    prev = w;
  }
  p.layers.push_back({MatrixXd::Zero(out, prev), VectorXd::Zero(out), Activation::linear, {}});
  return p;
}

MlpParams MlpParams::zeros_like() const {
  MlpParams z = *this;
  for (auto& l : z.layers) {
    l.W.setZero();
    l.b.setZero();
    l.rowdy.fill(0.0);
  }
  return z;
}

std::size_t MlpParams::parameter_count() const {
  std::size_t n = 0;
  for_each_block([&](const double*, std::size_t len) { n += len; });
  return n;
}

void MlpParams::for_each_block(const std::function<void(double*, std::size_t)>& f) {
  for (auto& l : layers) {
    f(l.W.data(), static_cast<std::size_t>(l.W.size()));
    f(l.b.data(), static_cast<std::size_t>(l.b.size()));
    if (l.activation == Activation::rowdy) f(l.rowdy.data(), l.rowdy.size());
  }
}

void MlpParams::for_each_block(const std::function<void(const double*, std::size_t)>& f) const {
  for (const auto& l : layers) {
    f(l.W.data(), static_cast<std::size_t>(l.W.size()));
    f(l.b.data(), static_cast<std::size_t>(l.b.size()));
    if (l.activation == Activation::rowdy) f(l.rowdy.data(), l.rowdy.size());
  }
}

void glorot_init(MlpParams& params, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  for (auto& l : params.layers) {
    const double limit = std::sqrt(6.0 / static_cast<double>(l.W.rows() + l.W.cols()));
    for (Index j = 0; j < l.W.cols(); ++j)
      for (Index i = 0; i < l.W.rows(); ++i) l.W(i, j) = (2.0 * unit(rng) - 1.0) * limit;
    l.b.setZero();
    l.rowdy.fill(0.0);
  }
}

Eigen::MatrixXd mlp_forward(const MlpParams& params, const Eigen::MatrixXd& x, MlpCache* cache) {
  MlpCache local;
  MlpCache& c = cache ? *cache : local;
  run_mlp(params, x, c, nullptr, nullptr);
  return c.a.back();
}

std::string to_string(Variant v) { return v == Variant::vanilla ? "vanilla" : "fusion"; }

Variant parse_variant(const std::string& text) {
  if (text == "vanilla") return Variant::vanilla;
  if (text == "fusion") return Variant::fusion;
  throw ConfigError("variant", "unknown variant '" + text + "'");
}

Architecture Architecture::defaults(Variant v) {
  if (v == Variant::vanilla) return {5, 100, 200, Activation::tanh};
  return {3, 64, 64, Activation::rowdy};
}

OperatorModel OperatorModel::make(Variant v, const Architecture& arch, Index branch_in, std::uint64_t seed) {
  if (arch.hidden_layers < 1 || arch.width < 1 || arch.latent < 1)
    throw ConfigError("architecture", "layers, width and latent size must be positive");
  OperatorModel m;
  m.variant = v;
  m.latent = arch.latent;
  const std::vector<Index> hidden(static_cast<std::size_t>(arch.hidden_layers), arch.width);
  m.branch = MlpParams::make(branch_in, hidden, 2 * arch.latent, arch.activation);
  m.trunk = MlpParams::make(3, hidden, arch.latent, arch.activation);
  glorot_init(m.branch, seed);
  glorot_init(m.trunk, seed ^ 0x9e3779b97f4a7c15ull);
  return m;
}

void OperatorModel::validate() const {
  if (branch.layers.empty() || trunk.layers.empty()) throw std::invalid_argument("empty subnetwork");
  if (trunk.in_dim() != 3) throw std::invalid_argument("trunk input must be (x, y, tau)");
  if (trunk.out_dim() != latent) throw std::invalid_argument("trunk output must equal the latent size");
  if (branch.out_dim() != 2 * latent) throw std::invalid_argument("branch output must be 2 x latent");
  for (const auto* net : {&branch, &trunk})
    for (std::size_t l = 1; l < net->layers.size(); ++l)
      if (net->layers[l].W.cols() != net->layers[l - 1].W.rows()) throw std::invalid_argument("layer width mismatch");
  if (variant == Variant::fusion) {
    if (branch.layers.size() != trunk.layers.size())
      throw std::invalid_argument("fusion needs equal hidden depth in branch and trunk");
    for (std::size_t l = 0; l + 1 < trunk.layers.size(); ++l)
      if (branch.layers[l].W.rows() != trunk.layers[l].W.rows())
        throw std::invalid_argument("fusion needs equal hidden widths in branch and trunk");
  }
}

// --- forward / backward ---------------------------------------------------------------

namespace {

MatrixXd branch_matrix(const Batch& batch, Index in_dim) {
  MatrixXd x(in_dim, static_cast<Index>(batch.groups()));
  for (std::size_t g = 0; g < batch.groups(); ++g) {
    if (batch.branch_inputs[g].size() != in_dim) throw std::invalid_argument("branch input width mismatch");
    x.col(static_cast<Index>(g)) = batch.branch_inputs[g];
  }
  return x;
}

// S(1) = 1, S(l) = sum of branch hidden outputs 1..l-1.
std::vector<MatrixXd> cumulative_modulation(const std::vector<MatrixXd>& branch_hidden, Index groups) {
  std::vector<MatrixXd> mod(branch_hidden.size());
  mod[0] = MatrixXd::Ones(branch_hidden[0].rows(), groups);
  for (std::size_t l = 1; l < mod.size(); ++l) mod[l] = l == 1 ? branch_hidden[0] : MatrixXd(mod[l - 1] + branch_hidden[l - 1]);
  return mod;
}

Eigen::Matrix2Xd contract(const MatrixXd& B, const MatrixXd& T, const std::vector<Index>& offsets, int p) {
  Eigen::Matrix2Xd u(2, T.cols());
  for (std::size_t g = 0; g + 1 < offsets.size(); ++g) {
    const Index s = offsets[g], n = offsets[g + 1] - s;
    const auto col = static_cast<Index>(g);
    for (int c = 0; c < 2; ++c) u.row(c).segment(s, n).noalias() = B.col(col).segment(c * p, p).transpose() * T.middleCols(s, n);
  }
  return u;
}

void check_batch(const Batch& batch) {
  if (batch.offsets.size() != batch.groups() + 1 || batch.offsets.front() != 0 || batch.offsets.back() != batch.rows())
    throw std::invalid_argument("batch offsets do not match its groups");
}

}  // namespace

Eigen::Matrix2Xd forward(const OperatorModel& model, const Batch& batch, OperatorCache* cache) {
  check_batch(batch);
  OperatorCache local;
  OperatorCache& c = cache ? *cache : local;
  run_mlp(model.branch, branch_matrix(batch, model.branch.in_dim()), c.branch, nullptr, nullptr);
  if (model.variant == Variant::fusion) {
    const std::size_t hidden = model.trunk.layers.size() - 1;
    std::vector<MatrixXd> branch_hidden(c.branch.a.begin() + 1, c.branch.a.begin() + 1 + static_cast<long>(hidden));
    c.modulation = cumulative_modulation(branch_hidden, static_cast<Index>(batch.groups()));
    run_mlp(model.trunk, batch.trunk, c.trunk, &c.modulation, &batch.offsets);
  } else {
    c.modulation.clear();
    run_mlp(model.trunk, batch.trunk, c.trunk, nullptr, nullptr);
  }
  c.prediction = contract(c.branch.a.back(), c.trunk.a.back(), batch.offsets, model.latent);
  return c.prediction;
}

namespace {

Batch single_group(const Eigen::VectorXd& mu, const Eigen::Matrix3Xd& xi) {
  Batch b;
  b.branch_inputs = {mu};
  b.offsets = {0, xi.cols()};
  b.trunk = xi;
  return b;
}

}  // namespace

Eigen::Matrix2Xd deeponet_forward(const OperatorModel& model, const Eigen::VectorXd& mu, const Eigen::Matrix3Xd& xi) {
  if (model.variant != Variant::vanilla) throw std::invalid_argument("deeponet_forward needs a vanilla model");
  if (model.trunk.out_dim() * 2 != model.branch.out_dim()) throw std::invalid_argument("latent size mismatch");
  return forward(model, single_group(mu, xi));
}

Eigen::Matrix2Xd fusion_forward(const OperatorModel& model, const Eigen::VectorXd& mu, const Eigen::Matrix3Xd& xi) {
  if (model.variant != Variant::fusion) throw std::invalid_argument("fusion_forward needs a fusion model");
  model.validate();
  return forward(model, single_group(mu, xi));
}

Eigen::Matrix2Xd fusion_forward_from_branch(const OperatorModel& model, const std::vector<Eigen::VectorXd>& branch_hidden,
                                            const Eigen::VectorXd& branch_out, const Eigen::Matrix3Xd& xi) {
  const std::size_t hidden = model.trunk.layers.size() - 1;
  if (branch_hidden.size() != hidden) throw std::invalid_argument("need one branch activation per trunk hidden layer");
  std::vector<MatrixXd> h;
  for (std::size_t l = 0; l < hidden; ++l) {
    if (branch_hidden[l].size() != model.trunk.layers[l].W.rows()) throw std::invalid_argument("branch width mismatch");
    h.emplace_back(branch_hidden[l]);
  }
  const std::vector<Index> offsets{0, xi.cols()};
  const auto mod = cumulative_modulation(h, 1);
  MlpCache c;
  run_mlp(model.trunk, xi, c, &mod, &offsets);
  return contract(MatrixXd(branch_out), c.a.back(), offsets, model.latent);
}

double mse(const Eigen::Matrix2Xd& prediction, const Eigen::Matrix2Xd& targets) {
  return (prediction - targets).squaredNorm() / static_cast<double>(prediction.size());
}

double backward(const OperatorModel& model, const Batch& batch, Gradients& grads) {
  OperatorCache c;
  const Eigen::Matrix2Xd pred = forward(model, batch, &c);
  if (batch.targets.cols() != pred.cols()) throw std::invalid_argument("targets do not match the batch");
  const Eigen::Matrix2Xd diff = pred - batch.targets;
  const double loss = diff.squaredNorm() / static_cast<double>(diff.size());
  const Eigen::Matrix2Xd du = diff * (2.0 / static_cast<double>(diff.size()));

  grads.branch = model.branch.zeros_like();
  grads.trunk = model.trunk.zeros_like();
  const int p = model.latent;
  const MatrixXd& B = c.branch.a.back();
  const MatrixXd& T = c.trunk.a.back();
  MatrixXd dB = MatrixXd::Zero(B.rows(), B.cols());
  MatrixXd dT(T.rows(), T.cols());
  for (std::size_t g = 0; g + 1 < batch.offsets.size(); ++g) {
    const Index s = batch.offsets[g], n = batch.offsets[g + 1] - s;
    const auto col = static_cast<Index>(g);
    dT.middleCols(s, n).noalias() = B.col(col).segment(0, p) * du.row(0).segment(s, n);
    dT.middleCols(s, n).noalias() += B.col(col).segment(p, p) * du.row(1).segment(s, n);
    for (int comp = 0; comp < 2; ++comp)
      dB.col(col).segment(comp * p, p).noalias() = T.middleCols(s, n) * du.row(comp).segment(s, n).transpose();
  }

  if (model.variant == Variant::fusion) {
    std::vector<MatrixXd> dmod(c.modulation.size());
    back_mlp(model.trunk, c.trunk, std::move(dT), grads.trunk, &c.modulation, &batch.offsets, &dmod, nullptr, nullptr);
    // S(l) = sum_{m < l} a_B(m): each branch hidden output m collects dS(l) for all l > m.
    const std::size_t hidden = dmod.size();
    std::vector<MatrixXd> extra(hidden);
    MatrixXd running = MatrixXd::Zero(dmod[0].rows(), dmod[0].cols());
    for (std::size_t m = hidden; m-- > 0;) {
      extra[m] = running;
      if (m + 1 < hidden) extra[m] += dmod[m + 1];
      running = extra[m];
    }
    back_mlp(model.branch, c.branch, std::move(dB), grads.branch, nullptr, nullptr, nullptr, &extra, nullptr);
  } else {
    back_mlp(model.trunk, c.trunk, std::move(dT), grads.trunk, nullptr, nullptr, nullptr, nullptr, nullptr);
    back_mlp(model.branch, c.branch, std::move(dB), grads.branch, nullptr, nullptr, nullptr, nullptr, nullptr);
  }
  return loss;
}

// --- optimizer ------------------------------------------------------------------------

double LearningRateSchedule::at(long t) const {
  if (kind == Kind::constant) return initial;
  return initial * std::pow(decay_rate, static_cast<double>(t) / decay_steps);
}

void LearningRateSchedule::validate() const {
  if (!(initial > 0)) throw ConfigError("learning_rate", "must be positive");
  if (kind == Kind::exponential) {
    if (!(decay_steps > 0)) throw ConfigError("decay_steps", "must be positive");
    if (!(decay_rate > 0 && decay_rate < 1)) throw ConfigError("decay_rate", "must lie in (0, 1)");
  }
}

namespace {

std::vector<std::pair<double*, std::size_t>> blocks(OperatorModel& m) {
  std::vector<std::pair<double*, std::size_t>> out;
  auto add = [&](double* p, std::size_t n) { out.emplace_back(p, n); };
  m.branch.for_each_block(add);
  m.trunk.for_each_block(add);
  return out;
}

std::vector<std::pair<const double*, std::size_t>> blocks(const Gradients& g) {
  std::vector<std::pair<const double*, std::size_t>> out;
  auto add = [&](const double* p, std::size_t n) { out.emplace_back(p, n); };
  g.branch.for_each_block(add);
  g.trunk.for_each_block(add);
  return out;
}

}  // namespace

Adam::Adam(const OperatorModel& model, AdamConfig config) : config_(config) {
  OperatorModel copy = model;
  for (auto [p, n] : blocks(copy)) {
    m_.push_back(VectorXd::Zero(static_cast<Index>(n)));
    v_.push_back(VectorXd::Zero(static_cast<Index>(n)));
  }
}

void Adam::step(OperatorModel& model, const Gradients& grads, double lr) {
  auto params = blocks(model);
  const auto g = blocks(grads);
  if (params.size() != m_.size() || g.size() != m_.size()) throw std::invalid_argument("optimizer state mismatch");
  ++t_;
  const double c1 = 1.0 - std::pow(config_.beta1, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(config_.beta2, static_cast<double>(t_));
  for (std::size_t k = 0; k < params.size(); ++k) {
    const auto n = static_cast<Index>(params[k].second);
    Eigen::Map<VectorXd> w(params[k].first, n);
    Eigen::Map<const VectorXd> gk(g[k].first, n);
    m_[k] = config_.beta1 * m_[k] + (1.0 - config_.beta1) * gk;
    v_[k] = config_.beta2 * v_[k] + (1.0 - config_.beta2) * gk.cwiseAbs2();
    w.array() -= lr * (m_[k].array() / c1) / ((v_[k].array() / c2).sqrt() + config_.epsilon);
  }
}

// --- training -------------------------------------------------------------------------

void TrainConfig::validate() const {
  if (iterations < 0) throw ConfigError("iterations", "must be non-negative");
  if (log_every <= 0) throw ConfigError("log_every", "must be positive");
  if (batch_mode != BatchMode::full && batch_rows == 0) throw ConfigError("batch_rows", "must be positive");
  if (!(adam.beta1 >= 0 && adam.beta1 < 1) || !(adam.beta2 >= 0 && adam.beta2 < 1) || !(adam.epsilon > 0))
    throw ConfigError("adam", "invalid moment constants");
  schedule.validate();
}

namespace {

// Global row index -> (sample, column), rows of all samples concatenated.
struct RowIndex {
  std::vector<std::size_t> starts;  // prefix sums, size samples + 1

  explicit RowIndex(std::span<const SampleTensors> samples) {
    starts.push_back(0);
    for (const auto& s : samples) starts.push_back(starts.back() + static_cast<std::size_t>(s.trunk.cols()));
  }
  std::size_t total() const { return starts.back(); }
};

Batch gather(std::span<const SampleTensors> samples, const RowIndex& index, std::vector<std::size_t> rows) {
  std::sort(rows.begin(), rows.end());
  Batch b;
  b.trunk.resize(3, static_cast<Index>(rows.size()));
  b.targets.resize(2, static_cast<Index>(rows.size()));
  std::size_t sample = 0;
  for (std::size_t k = 0; k < rows.size(); ++k) {
    const std::size_t r = rows[k];
    bool new_group = k == 0;
    while (r >= index.starts[sample + 1]) {
      ++sample;
      new_group = true;
    }
    if (new_group) {
      if (k > 0) b.offsets.push_back(static_cast<Index>(k));
      b.branch_inputs.push_back(VectorXd::Constant(1, samples[sample].branch));
    }
    const auto col = static_cast<Index>(r - index.starts[sample]);
    b.trunk.col(static_cast<Index>(k)) = samples[sample].trunk.col(col);
    b.targets.col(static_cast<Index>(k)) = samples[sample].targets.col(col);
  }
  b.offsets.push_back(static_cast<Index>(rows.size()));
  return b;
}

std::vector<std::size_t> draw_rows(std::mt19937_64& rng, std::size_t total, std::size_t count) {
  std::vector<std::size_t> rows(count);
  for (auto& r : rows) r = std::min(total - 1, static_cast<std::size_t>(unit(rng) * static_cast<double>(total)));
  return rows;
}

std::vector<std::size_t> all_rows(std::size_t total) {
  std::vector<std::size_t> rows(total);
  for (std::size_t k = 0; k < total; ++k) rows[k] = k;
  return rows;
}

}  // namespace

Batch full_batch(std::span<const SampleTensors> samples) {
  const RowIndex index(samples);
  return gather(samples, index, all_rows(index.total()));
}

TrainResult train(Variant variant, const TrainingTensors& tensors, const TrainConfig& config,
                  const std::function<void(const LossRecord&)>& on_log) {
  config.validate();
  if (tensors.train.empty()) throw ConfigError("train", "no training samples");
  const auto start = std::chrono::steady_clock::now();
  const std::span<const SampleTensors> samples(tensors.train);
  const RowIndex index(samples);

  TrainResult result;
  result.model = OperatorModel::make(variant, config.arch, 1, config.seed);
  result.model.norm = tensors.norm;
  result.model.validate();
  OperatorModel& model = result.model;

  std::mt19937_64 monitor_rng(config.seed * 2 + 1);
  const Batch monitor = config.monitor_rows == 0 || config.monitor_rows >= index.total()
                            ? gather(samples, index, all_rows(index.total()))
                            : gather(samples, index, draw_rows(monitor_rng, index.total(), config.monitor_rows));

  std::mt19937_64 batch_rng(config.seed * 2 + 2);
  Batch fixed;
  const bool resample = config.batch_mode == TrainConfig::BatchMode::minibatch;
  if (config.batch_mode == TrainConfig::BatchMode::full)
    fixed = gather(samples, index, all_rows(index.total()));
  else if (config.batch_mode == TrainConfig::BatchMode::subset)
    fixed = gather(samples, index, draw_rows(batch_rng, index.total(), config.batch_rows));

  Adam adam(model, config.adam);
  Gradients grads;
  for (long it = 0; it < config.iterations; ++it) {
    const Batch batch = resample ? gather(samples, index, draw_rows(batch_rng, index.total(), config.batch_rows)) : Batch{};
    const double loss = backward(model, resample ? batch : fixed, grads);
    if (!std::isfinite(loss)) throw std::runtime_error("non-finite loss at iteration " + std::to_string(it));
    adam.step(model, grads, config.schedule.at(it));
    if ((it + 1) % config.log_every == 0) {
      const LossRecord rec{it + 1, mse(forward(model, monitor), monitor.targets)};
      if (!std::isfinite(rec.mse)) throw std::runtime_error("non-finite loss at iteration " + std::to_string(it + 1));
      result.history.push_back(rec);
      if (on_log) on_log(rec);
    }
  }
  result.final_mse = result.history.empty() || result.history.back().iteration != config.iterations
                         ? mse(forward(model, monitor), monitor.targets)
                         : result.history.back().mse;
  result.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return result;
}

// --- evaluation -----------------------------------------------------------------------

Eigen::Matrix2Xd predict_displacement(const OperatorModel& model, const Trajectory& traj, int tau) {
  const auto& ref = traj.ref_positions();
  const double frac = static_cast<double>(tau) / static_cast<double>(kSnapshotCount - 1);
  Batch b;
  b.branch_inputs = {VectorXd::Constant(1, model.norm.branch(traj.geometry_param))};
  b.trunk.resize(3, static_cast<Index>(ref.size()));
  for (std::size_t i = 0; i < ref.size(); ++i)
    b.trunk.col(static_cast<Index>(i)) = model.norm.trunk(ref[i].x(), ref[i].y(), frac);
  b.offsets = {0, b.trunk.cols()};
  Eigen::Matrix2Xd z = forward(model, b);
  for (Index k = 0; k < z.cols(); ++k) z.col(k) = model.norm.destandardize(z.col(k));
  return z;
}

std::vector<double> relative_l2_over_time(const OperatorModel& model, std::span<const Trajectory> samples) {
  std::vector<double> curve(kSnapshotCount, std::numeric_limits<double>::quiet_NaN());
  for (int tau = 1; tau < kSnapshotCount; ++tau) {
    double num = 0.0, den = 0.0;
    for (const auto& traj : samples) {
      const auto pred = predict_displacement(model, traj, tau);
      const auto& ref = traj.ref_positions();
      const auto& cur = traj.frames[static_cast<std::size_t>(tau)].positions;
      for (std::size_t i = 0; i < ref.size(); ++i) {
        const Eigen::Vector2d u = cur[i] - ref[i];
        num += (pred.col(static_cast<Index>(i)) - u).squaredNorm();
        den += u.squaredNorm();
      }
    }
    curve[static_cast<std::size_t>(tau)] = den > 0 ? std::sqrt(num / den) : std::numeric_limits<double>::quiet_NaN();
  }
  return curve;
}

// --- checkpoints ----------------------------------------------------------------------

namespace {

constexpr char kCheckpointMagic[4] = {'O', 'N', 'E', 'T'};

void put_net(detail::ByteWriter& w, const MlpParams& net) {
  w.put(static_cast<std::uint32_t>(net.layers.size()));
  for (const auto& l : net.layers) {
    w.put(static_cast<std::uint32_t>(l.W.rows()));
    w.put(static_cast<std::uint32_t>(l.W.cols()));
    w.put(static_cast<std::uint8_t>(l.activation));
  }
  for (const auto& l : net.layers) {
    for (Index k = 0; k < l.W.size(); ++k) w.put(l.W.data()[k]);
    for (Index k = 0; k < l.b.size(); ++k) w.put(l.b[k]);
    for (double a : l.rowdy) w.put(a);
  }
}

MlpParams get_net(detail::ByteReader& r) {
  const auto count = r.get<std::uint32_t>();
  if (count == 0 || count > 1000) throw FormatError("implausible layer count");
  MlpParams net;
  for (std::uint32_t k = 0; k < count; ++k) {
    const auto rows = r.get<std::uint32_t>();
    const auto cols = r.get<std::uint32_t>();
    const auto act = r.get<std::uint8_t>();
    if (act > 2 || rows == 0 || cols == 0 || rows > 100000 || cols > 100000) throw FormatError("bad layer shape");
    net.layers.push_back({MatrixXd(rows, cols), VectorXd(rows), static_cast<Activation>(act), {}});
  }
  for (auto& l : net.layers) {
    for (Index k = 0; k < l.W.size(); ++k) l.W.data()[k] = r.get<double>();
    for (Index k = 0; k < l.b.size(); ++k) l.b[k] = r.get<double>();
    for (double& a : l.rowdy) a = r.get<double>();
  }
  return net;
}

}  // namespace

void save_checkpoint(const OperatorModel& model, std::ostream& out) {
  model.validate();
  detail::ByteWriter w;
  w.raw(kCheckpointMagic, 4);
  w.put(kCheckpointVersion);
  w.put(static_cast<std::uint8_t>(model.variant));
  w.put(static_cast<std::uint32_t>(model.latent));
  put_net(w, model.branch);
  put_net(w, model.trunk);
  const auto& n = model.norm;
  w.put(n.branch_min);
  w.put(n.branch_max);
  for (int k = 0; k < 3; ++k) w.put(n.trunk_min(k));
  for (int k = 0; k < 3; ++k) w.put(n.trunk_max(k));
  for (int k = 0; k < 2; ++k) w.put(n.target_mean(k));
  for (int k = 0; k < 2; ++k) w.put(n.target_std(k));
  w.put_crc();
  out.write(reinterpret_cast<const char*>(w.bytes().data()), static_cast<std::streamsize>(w.bytes().size()));
  if (!out) throw FormatError("checkpoint write failed");
}

void save_checkpoint(const OperatorModel& model, const std::filesystem::path& path) {
  auto tmp = path;
  tmp += ".part";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw FormatError("cannot open " + tmp.string());
    save_checkpoint(model, out);
  }
  std::filesystem::rename(tmp, path);
}

OperatorModel load_checkpoint(std::istream& in) {
  const std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (bytes.size() < 12) throw FormatError("checkpoint too short");
  const std::span<const unsigned char> all(bytes);
  detail::ByteReader tail(all.subspan(bytes.size() - 4));
  if (std::memcmp(bytes.data(), kCheckpointMagic, 4) != 0) throw FormatError("not a checkpoint (bad magic)");
  if (tail.get<std::uint32_t>() != detail::crc32_bytes(all.first(bytes.size() - 4)))
    throw ChecksumError("checkpoint checksum mismatch");
  detail::ByteReader r(all.first(bytes.size() - 4));
  r.take(4);
  const auto version = r.get<std::uint32_t>();
  if (version != kCheckpointVersion) throw FormatError("unsupported checkpoint version " + std::to_string(version));
  OperatorModel m;
  const auto variant = r.get<std::uint8_t>();
  if (variant > 1) throw FormatError("unknown variant tag");
  m.variant = static_cast<Variant>(variant);
  m.latent = static_cast<int>(r.get<std::uint32_t>());
  m.branch = get_net(r);
  m.trunk = get_net(r);
  auto& n = m.norm;
  n.branch_min = r.get<double>();
  n.branch_max = r.get<double>();
  for (int k = 0; k < 3; ++k) n.trunk_min(k) = r.get<double>();
  for (int k = 0; k < 3; ++k) n.trunk_max(k) = r.get<double>();
  for (int k = 0; k < 2; ++k) n.target_mean(k) = r.get<double>();
  for (int k = 0; k < 2; ++k) n.target_std(k) = r.get<double>();
  if (r.remaining() != 0) throw FormatError("trailing bytes in checkpoint");
  try {
    m.validate();
  } catch (const std::invalid_argument& e) {
    throw FormatError(std::string("inconsistent checkpoint: ") + e.what());
  }
  return m;
}

OperatorModel load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open " + path.string());
  return load_checkpoint(in);
}

void write_loss_csv(std::ostream& out, std::span<const LossRecord> history) {
  out << "iteration,mse\n";
  out.precision(10);
  for (const auto& r : history) out << r.iteration << ',' << r.mse << '\n';
}

}  // namespace cpd
