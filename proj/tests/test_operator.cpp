#include "doctest.h"

#include "cpd/errors.hpp"
#include "cpd/operator.hpp"

#include "oracles.hpp"

#include <cmath>
#include <random>
#include <sstream>

using namespace cpd;
using namespace cpd::testing;
using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

TEST_CASE("rowdy activation") {
  CHECK(rowdy(0.3, {0, 0}) == doctest::Approx(std::tanh(0.3)));
  CHECK(rowdy(0.0, {0.5, -0.2}) == 0.0);
  const RowdyCoefficients a{0.01, -0.02};
  CHECK(rowdy(0.2, a) == doctest::Approx(std::tanh(0.2) + 0.1 * std::sin(2.0) - 0.2 * std::sin(4.0)));
  const double h = 1e-6;
  for (double x : {-1.3, -0.2, 0.0, 0.45, 2.0}) {
    CHECK(rowdy_dx(x, a) == doctest::Approx((rowdy(x + h, a) - rowdy(x - h, a)) / (2 * h)).epsilon(1e-6));
    for (int k = 0; k < kRowdyTerms; ++k) {
      RowdyCoefficients p = a, q = a;
      p[static_cast<std::size_t>(k)] += h;
      q[static_cast<std::size_t>(k)] -= h;
      CHECK(rowdy_da(x, k) == doctest::Approx((rowdy(x, p) - rowdy(x, q)) / (2 * h)).epsilon(1e-6));
    }
  }
}

TEST_CASE("mlp forward") {
  MlpParams net = MlpParams::make(2, {3}, 1, Activation::tanh);
  net.layers[0].W << 1, 0, 0, 1, 1, 1;
  net.layers[0].b << 0, 0, -1;
  net.layers[1].W << 1, 2, 3;
  net.layers[1].b << 0.5;
  MatrixXd x(2, 1);
  x << 0.5, -0.25;
  const MatrixXd y = mlp_forward(net, x);
  CHECK(y(0, 0) == doctest::Approx(0.5 + std::tanh(0.5) + 2 * std::tanh(-0.25) + 3 * std::tanh(-0.75)));
  CHECK_THROWS_AS(mlp_forward(net, MatrixXd::Zero(3, 1)), std::invalid_argument);
  CHECK(net.parameter_count() == 6 + 3 + 3 + 1);
  auto rowdy_net = MlpParams::make(2, {3, 3}, 1, Activation::rowdy);
  CHECK(rowdy_net.parameter_count() == (6 + 3 + 2) + (9 + 3 + 2) + (3 + 1));
}

TEST_CASE("glorot initialization") {
  auto net = MlpParams::make(100, {100}, 200, Activation::tanh);
  glorot_init(net, 3);
  const double lim0 = std::sqrt(6.0 / 200.0), lim1 = std::sqrt(6.0 / 300.0);
  CHECK(net.layers[0].W.cwiseAbs().maxCoeff() <= lim0);
  CHECK(net.layers[1].W.cwiseAbs().maxCoeff() <= lim1);
  CHECK(net.layers[0].W.cwiseAbs().maxCoeff() > 0.9 * lim0);
  CHECK(std::abs(net.layers[0].W.mean()) < 0.01);
  CHECK(net.layers[0].b.isZero());
  auto again = MlpParams::make(100, {100}, 200, Activation::tanh);
  glorot_init(again, 3);
  CHECK(again.layers[1].W == net.layers[1].W);
}

TEST_CASE("architecture defaults") {
  const auto v = OperatorModel::make(Variant::vanilla, Architecture::defaults(Variant::vanilla), 1, 1);
  CHECK(v.trunk.layers.size() == 6);
  CHECK(v.trunk.layers[0].W.rows() == 100);
  CHECK(v.trunk.out_dim() == 200);
  CHECK(v.branch.out_dim() == 400);
  const auto f = OperatorModel::make(Variant::fusion, Architecture::defaults(Variant::fusion), 1, 1);
  CHECK(f.trunk.layers.size() == 4);
  CHECK(f.trunk.layers[0].activation == Activation::rowdy);
  CHECK(f.branch.out_dim() == 128);
  CHECK_NOTHROW(f.validate());
  CHECK(parse_variant("fusion") == Variant::fusion);
  CHECK_THROWS_AS(parse_variant("other"), ConfigError);
}

TEST_CASE("deeponet with one latent term") {
  // B = (2, 3), T = 3  ->  u = (6, 9)
  Architecture arch{1, 1, 1, Activation::tanh};
  auto m = OperatorModel::make(Variant::vanilla, arch, 1, 1);
  for (auto* net : {&m.branch, &m.trunk})
    for (auto& L : net->layers) {
      L.W.setZero();
      L.b.setZero();
    }
  m.branch.layers.back().b << 2, 3;
  m.trunk.layers.back().b << 3;
  const auto u = deeponet_forward(m, VectorXd::Zero(1), Eigen::Matrix3Xd::Zero(3, 1));
  CHECK(u(0, 0) == 6.0);
  CHECK(u(1, 0) == 9.0);
  CHECK_THROWS_AS(fusion_forward(m, VectorXd::Zero(1), Eigen::Matrix3Xd::Zero(3, 1)), std::invalid_argument);
}

TEST_CASE("forward passes match scalar loops") {
  std::mt19937_64 rng(21);
  std::uniform_real_distribution<double> u(-1, 1);
  for (int trial = 0; trial < 5; ++trial) {
    Eigen::Matrix3Xd xi(3, 17);
    for (Index k = 0; k < xi.size(); ++k) xi.data()[k] = u(rng);
    const VectorXd mu = VectorXd::Constant(1, u(rng));
    const auto v = random_model(Variant::vanilla, 3, 8, 5, 100 + trial);
    CHECK((deeponet_forward(v, mu, xi) - operator_loop(v, mu, xi)).cwiseAbs().maxCoeff() < 1e-12);
    const auto f = random_model(Variant::fusion, 4, 6, 6, 200 + trial);
    CHECK((fusion_forward(f, mu, xi) - operator_loop(f, mu, xi)).cwiseAbs().maxCoeff() < 1e-12);
  }
}

TEST_CASE("fusion modulation examples") {
  std::mt19937_64 rng(4);
  auto f = random_model(Variant::fusion, 3, 4, 4, 9);
  Eigen::Matrix3Xd xi = Eigen::Matrix3Xd::Random(3, 5);
  const VectorXd bout = VectorXd::LinSpaced(8, -1, 1);

  // Branch activations of ones: S = (1, 1, 2).
  std::vector<VectorXd> ones(3, VectorXd::Ones(4));
  auto manual = [&](const std::vector<double>& scale) {
    Eigen::Matrix2Xd out(2, xi.cols());
    for (Index q = 0; q < xi.cols(); ++q) {
      VectorXd a = xi.col(q);
      for (std::size_t l = 0; l < f.trunk.layers.size(); ++l) {
        const auto& L = f.trunk.layers[l];
        VectorXd z = L.W * a + L.b;
        if (l + 1 == f.trunk.layers.size()) {
          a = z;
        } else {
          for (Index j = 0; j < z.size(); ++j) z(j) = act(L, z(j)) * scale[l];
          a = z;
        }
      }
      out(0, q) = bout.head(4).dot(a);
      out(1, q) = bout.tail(4).dot(a);
    }
    return out;
  };
  CHECK((fusion_forward_from_branch(f, ones, bout, xi) - manual({1, 1, 2})).cwiseAbs().maxCoeff() < 1e-12);

  // A zero first branch layer switches off the second trunk layer.
  std::vector<VectorXd> zero_first{VectorXd::Zero(4), VectorXd::Ones(4), VectorXd::Ones(4)};
  CHECK((fusion_forward_from_branch(f, zero_first, bout, xi) - manual({1, 0, 1})).cwiseAbs().maxCoeff() < 1e-12);
  CHECK_THROWS_AS(fusion_forward_from_branch(f, {VectorXd::Ones(4)}, bout, xi), std::invalid_argument);
}

TEST_CASE("batched forward matches per-sample evaluation") {
  const auto f = random_model(Variant::fusion, 3, 6, 5, 33);
  const Batch b = random_batch(3, 7, 2);
  const auto all = forward(f, b);
  for (std::size_t g = 0; g < 3; ++g) {
    const Index s = b.offsets[g], n = b.offsets[g + 1] - s;
    const auto one = fusion_forward(f, b.branch_inputs[g], b.trunk.middleCols(s, n));
    CHECK((all.middleCols(s, n) - one).cwiseAbs().maxCoeff() < 1e-14);
  }
}

TEST_CASE("backward matches finite differences") {
  const Batch b = random_batch(3, 6, 5);
  CHECK(max_fd_error(random_model(Variant::vanilla, 3, 6, 4, 1), b) < 1e-5);
  CHECK(max_fd_error(random_model(Variant::fusion, 3, 6, 4, 2), b) < 1e-5);
  CHECK(max_fd_error(random_model(Variant::fusion, 2, 5, 5, 3, 0.01), b) < 1e-5);
}

TEST_CASE("gradient edge cases") {
  auto m = random_model(Variant::fusion, 2, 5, 4, 8);
  Batch b = random_batch(2, 5, 9);
  b.targets = forward(m, b);
  Gradients g;
  CHECK(backward(m, b, g) == 0.0);
  for (double v : flat_grads(g)) CHECK(v == 0.0);

  // Doubling the residual doubles every gradient.
  Batch b1 = random_batch(2, 5, 9), b2 = b1;
  const auto pred = forward(m, b1);
  b2.targets = pred - 2.0 * (pred - b1.targets);
  Gradients g1, g2;
  const double l1 = backward(m, b1, g1), l2 = backward(m, b2, g2);
  CHECK(l2 == doctest::Approx(4 * l1));
  const auto f1 = flat_grads(g1), f2 = flat_grads(g2);
  for (std::size_t k = 0; k < f1.size(); ++k) CHECK(f2[k] == doctest::Approx(2 * f1[k]).epsilon(1e-9));
}

TEST_CASE("mse") {
  Eigen::Matrix2Xd p(2, 2), t(2, 2);
  p << 1, 2, 3, 4;
  t << 1, 0, 3, 0;
  CHECK(mse(p, t) == doctest::Approx((4.0 + 16.0) / 4.0));
}

TEST_CASE("learning rate schedule") {
  const auto s = LearningRateSchedule::exponential_decay();
  CHECK(s.at(0) == 1e-3);
  CHECK(s.at(2000) == doctest::Approx(9.1e-4));
  CHECK(s.at(4000) == doctest::Approx(1e-3 * 0.91 * 0.91));
  CHECK(LearningRateSchedule::constant_rate(5e-4).at(7000) == 5e-4);
  CHECK_THROWS_AS(LearningRateSchedule::exponential_decay(-1).validate(), ConfigError);
  CHECK_THROWS_AS(LearningRateSchedule::exponential_decay(1e-3, 0).validate(), ConfigError);
}

TEST_CASE("adam first step moves each parameter by the learning rate") {
  auto m = random_model(Variant::vanilla, 2, 4, 3, 5);
  const Batch b = random_batch(2, 4, 1);
  Gradients g;
  backward(m, b, g);
  const auto grads = flat_grads(g);
  auto before_ptrs = flat_params(m);
  std::vector<double> before;
  for (auto* p : before_ptrs) before.push_back(*p);
  Adam opt(m, AdamConfig{});
  opt.step(m, g, 1e-3);
  CHECK(opt.steps() == 1);
  const auto after = flat_params(m);
  for (std::size_t k = 0; k < before.size(); ++k) {
    if (std::abs(grads[k]) < 1e-6) continue;
    CHECK(*after[k] - before[k] == doctest::Approx(-1e-3 * (grads[k] > 0 ? 1 : -1)).epsilon(1e-3));
  }
}

TEST_CASE("constant target toy problem reaches a tiny loss") {
  auto m = OperatorModel::make(Variant::vanilla, Architecture{1, 4, 2, Activation::tanh}, 1, 3);
  Batch b = random_batch(1, 8, 4);
  b.targets.row(0).setConstant(0.3);
  b.targets.row(1).setConstant(-0.2);
  Adam opt(m, AdamConfig{});
  const auto schedule = LearningRateSchedule::constant_rate(1e-2);
  Gradients g;
  double loss = 1.0;
  for (long t = 0; t < 2000 && loss >= 1e-8; ++t) {
    loss = backward(m, b, g);
    opt.step(m, g, schedule.at(t));
  }
  CHECK(mse(forward(m, b), b.targets) < 1e-8);
}

namespace {

// Two samples of a smooth field u = param * (x, -y) * tau on a 5 x 5 patch.
std::vector<Trajectory> toy_trajectories(int count) {
  std::vector<Trajectory> out;
  for (int s = 0; s < count; ++s) {
    Trajectory t;
    t.sample_id = static_cast<std::uint32_t>(s);
    t.geometry_param = 0.5 + 0.5 * s;
    t.domain.width = t.domain.height = 1;
    for (int tau = 0; tau < kSnapshotCount; ++tau) {
      Frame f;
      for (int j = 0; j < 5; ++j)
        for (int i = 0; i < 5; ++i) {
          const Vec2 x(0.25 * i, 0.25 * j);
          f.positions.push_back(x + 1e-3 * t.geometry_param * (tau / 100.0) * Vec2(x.x(), -x.y()));
        }
      t.frames.push_back(std::move(f));
    }
    out.push_back(std::move(t));
  }
  return out;
}

TrainConfig toy_config(Variant v) {
  TrainConfig c;
  c.iterations = 1500;
  c.schedule = LearningRateSchedule::exponential_decay(5e-3, 500, 0.5);
  c.batch_rows = 512;
  c.monitor_rows = 0;
  c.arch = v == Variant::vanilla ? Architecture{2, 16, 8, Activation::tanh} : Architecture{2, 16, 8, Activation::rowdy};
  return c;
}

}  // namespace

TEST_CASE("training converges on a smooth toy operator") {
  const auto trajs = toy_trajectories(3);
  const auto tensors = build_training_tensors(trajs, TrainSplit{{0, 2}, {1}});
  for (auto v : {Variant::vanilla, Variant::fusion}) {
    CAPTURE(to_string(v));
    long logged = 0;
    const auto res = train(v, tensors, toy_config(v), [&](const LossRecord&) { ++logged; });
    CHECK(res.history.size() == 15);
    CHECK(logged == 15);
    CHECK(res.history.back().iteration == 1500);
    CHECK(res.final_mse < 1e-3);
    CHECK(res.history.back().mse < 0.01 * res.history.front().mse);
    const auto err = relative_l2_over_time(res.model, std::span(trajs).first(1));
    REQUIRE(err.size() == kSnapshotCount);
    CHECK(std::isnan(err[0]));
    CHECK(err[100] < 0.05);
  }
}

TEST_CASE("training is deterministic for a fixed seed") {
  const auto trajs = toy_trajectories(2);
  const auto tensors = build_training_tensors(trajs, TrainSplit{{0, 1}, {}});
  TrainConfig c = toy_config(Variant::fusion);
  c.iterations = 200;
  c.batch_mode = TrainConfig::BatchMode::minibatch;
  c.batch_rows = 256;
  c.monitor_rows = 512;
  const auto a = train(Variant::fusion, tensors, c);
  const auto b = train(Variant::fusion, tensors, c);
  std::ostringstream sa, sb;
  save_checkpoint(a.model, sa);
  save_checkpoint(b.model, sb);
  CHECK(sa.str() == sb.str());
  CHECK(a.final_mse == b.final_mse);
  c.seed = 8;
  const auto d = train(Variant::fusion, tensors, c);
  CHECK(d.final_mse != a.final_mse);
}

TEST_CASE("train config validation") {
  TrainConfig c;
  CHECK_NOTHROW(c.validate());
  c.iterations = -1;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = TrainConfig{};
  c.batch_rows = 0;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = TrainConfig{};
  c.log_every = 0;
  CHECK_THROWS_AS(c.validate(), ConfigError);
}

TEST_CASE("relative error examples") {
  const auto trajs = toy_trajectories(1);
  auto tensors = build_training_tensors(toy_trajectories(2), TrainSplit{{0, 1}, {}});
  // A model whose trunk output is zero predicts u = 0: relative error 1 at every tau.
  auto m = OperatorModel::make(Variant::vanilla, Architecture{1, 4, 2, Activation::tanh}, 1, 1);
  m.norm = tensors.norm;
  m.norm.target_mean.setZero();
  for (auto& L : m.trunk.layers) {
    L.W.setZero();
    L.b.setZero();
  }
  const auto err = relative_l2_over_time(m, trajs);
  for (int tau = 1; tau < kSnapshotCount; ++tau) CHECK(err[static_cast<std::size_t>(tau)] == doctest::Approx(1.0));
  const auto pred = predict_displacement(m, trajs[0], 50);
  CHECK(pred.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("checkpoint round trip and corruption") {
  const auto m = random_model(Variant::fusion, 3, 6, 5, 77);
  std::ostringstream out(std::ios::binary);
  save_checkpoint(m, out);
  const std::string bytes = out.str();
  std::istringstream in(bytes, std::ios::binary);
  const auto back = load_checkpoint(in);
  std::ostringstream again(std::ios::binary);
  save_checkpoint(back, again);
  CHECK(again.str() == bytes);
  const Batch b = random_batch(2, 4, 3);
  CHECK((forward(back, b) - forward(m, b)).cwiseAbs().maxCoeff() == 0.0);

  std::string bad = bytes;
  bad[bytes.size() / 2] = static_cast<char>(bad[bytes.size() / 2] ^ 1);
  std::istringstream bin(bad, std::ios::binary);
  CHECK_THROWS_AS(load_checkpoint(bin), ChecksumError);
  std::istringstream trunc(bytes.substr(0, 10), std::ios::binary);
  CHECK_THROWS_AS(load_checkpoint(trunc), FormatError);
  std::istringstream empty(std::string{}, std::ios::binary);
  CHECK_THROWS_AS(load_checkpoint(empty), FormatError);
}

TEST_CASE("loss csv") {
  std::vector<LossRecord> h{{100, 0.5}, {200, 0.25}};
  std::ostringstream out;
  write_loss_csv(out, h);
  CHECK(out.str() == "iteration,mse\n100,0.5\n200,0.25\n");
}
