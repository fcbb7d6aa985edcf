#pragma once

#include "cpd/dataset.hpp"

#include <Eigen/Dense>

#include <array>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

namespace cpd {

enum class Activation : std::uint8_t { tanh = 0, rowdy = 1, linear = 2 };

/// tanh(x) + sum_k a_k * n * sin(k * n * x), k = 1..2, n = 10.
inline constexpr int kRowdyTerms = 2;
inline constexpr double kRowdyScale = 10.0;
using RowdyCoefficients = std::array<double, kRowdyTerms>;

double rowdy(double x, const RowdyCoefficients& a);
/// d rowdy / dx
double rowdy_dx(double x, const RowdyCoefficients& a);
/// d rowdy / d a_k
double rowdy_da(double x, int k);

struct DenseLayer {
  Eigen::MatrixXd W;  // out x in
  Eigen::VectorXd b;
  Activation activation = Activation::tanh;
  RowdyCoefficients rowdy{};  // trainable when activation == rowdy
};

struct MlpParams {
  std::vector<DenseLayer> layers;

  Eigen::Index in_dim() const { return layers.front().W.cols(); }
  Eigen::Index out_dim() const { return layers.back().W.rows(); }
  /// Hidden layers use `hidden`, the last layer is linear.
  static MlpParams make(Eigen::Index in, const std::vector<Eigen::Index>& hidden, Eigen::Index out, Activation act);
  /// Same shapes, every value zero.
  MlpParams zeros_like() const;
  std::size_t parameter_count() const;
  /// Calls f(pointer, length) for W, b and (rowdy layers only) the coefficients of every layer.
  void for_each_block(const std::function<void(double*, std::size_t)>& f);
  void for_each_block(const std::function<void(const double*, std::size_t)>& f) const;
};

/// Glorot-uniform weights, zero biases, zero rowdy coefficients.
void glorot_init(MlpParams& params, std::uint64_t seed);

struct MlpCache {
  std::vector<Eigen::MatrixXd> z;  // pre-activations per layer
  std::vector<Eigen::MatrixXd> h;  // activations (before modulation) per layer
  std::vector<Eigen::MatrixXd> a;  // layer inputs; a[0] is the network input, a.back() the output
};

/// Affine + activation per layer, linear last layer. Throws std::invalid_argument on a
/// width mismatch.
Eigen::MatrixXd mlp_forward(const MlpParams& params, const Eigen::MatrixXd& x, MlpCache* cache = nullptr);

enum class Variant : std::uint8_t { vanilla = 0, fusion = 1 };

std::string to_string(Variant v);
Variant parse_variant(const std::string& text);

struct Architecture {
  int hidden_layers = 5;
  int width = 100;
  int latent = 200;  // p
  Activation activation = Activation::tanh;

  static Architecture defaults(Variant v);
};

/// Branch: parameter vector -> 2p coefficients. Trunk: (x, y, tau) -> p basis values.
/// Prediction u_c = sum_k B[c p + k] T[k], c in {x, y}.
struct OperatorModel {
  Variant variant = Variant::vanilla;
  int latent = 0;
  MlpParams branch;
  MlpParams trunk;
  Normalization norm;

  static OperatorModel make(Variant v, const Architecture& arch, Eigen::Index branch_in, std::uint64_t seed);
  /// Throws std::invalid_argument when shapes are inconsistent with the variant.
  void validate() const;
  std::size_t parameter_count() const { return branch.parameter_count() + trunk.parameter_count(); }
};

/// Query points grouped by sample: group g owns trunk columns [offsets[g], offsets[g + 1]).
struct Batch {
  std::vector<Eigen::VectorXd> branch_inputs;
  std::vector<Eigen::Index> offsets{0};
  Eigen::Matrix3Xd trunk;
  Eigen::Matrix2Xd targets;

  std::size_t groups() const { return branch_inputs.size(); }
  Eigen::Index rows() const { return trunk.cols(); }
};

struct OperatorCache {
  MlpCache branch;  // one column per group
  MlpCache trunk;
  std::vector<Eigen::MatrixXd> modulation;  // fusion: per trunk hidden layer, width x groups
  Eigen::Matrix2Xd prediction;
};

/// Predictions for every row of the batch (targets are ignored).
Eigen::Matrix2Xd forward(const OperatorModel& model, const Batch& batch, OperatorCache* cache = nullptr);

Eigen::Matrix2Xd deeponet_forward(const OperatorModel& model, const Eigen::VectorXd& mu, const Eigen::Matrix3Xd& xi);
Eigen::Matrix2Xd fusion_forward(const OperatorModel& model, const Eigen::VectorXd& mu, const Eigen::Matrix3Xd& xi);
/// Fusion prediction from given branch hidden activations (one per trunk hidden layer) and
/// branch output, bypassing the branch network.
Eigen::Matrix2Xd fusion_forward_from_branch(const OperatorModel& model, const std::vector<Eigen::VectorXd>& branch_hidden,
                                            const Eigen::VectorXd& branch_out, const Eigen::Matrix3Xd& xi);

struct Gradients {
  MlpParams branch;
  MlpParams trunk;
};

/// Mean over rows and components of the squared error.
double mse(const Eigen::Matrix2Xd& prediction, const Eigen::Matrix2Xd& targets);

/// Exact gradient of the batch MSE with respect to every parameter. Returns the loss.
double backward(const OperatorModel& model, const Batch& batch, Gradients& grads);

struct LearningRateSchedule {
  enum class Kind { constant, exponential } kind = Kind::constant;
  double initial = 1e-4;
  double decay_steps = 2000.0;
  double decay_rate = 0.91;

  static LearningRateSchedule constant_rate(double lr) { return {Kind::constant, lr, 2000.0, 0.91}; }
  static LearningRateSchedule exponential_decay(double lr = 1e-3, double steps = 2000.0, double rate = 0.91) {
    return {Kind::exponential, lr, steps, rate};
  }
  /// lr at iteration t (0-based): initial, or initial * rate^(t / steps).
  double at(long t) const;
  void validate() const;
};

struct AdamConfig {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

/// Adam with bias correction over the parameter blocks of a model.
class Adam {
 public:
  Adam(const OperatorModel& model, AdamConfig config);
  /// One update at iteration t (0-based) with learning rate lr.
  void step(OperatorModel& model, const Gradients& grads, double lr);
  long steps() const { return t_; }

 private:
  AdamConfig config_;
  std::vector<Eigen::VectorXd> m_, v_;
  long t_ = 0;
};

struct TrainConfig {
  long iterations = 8000;
  LearningRateSchedule schedule = LearningRateSchedule::exponential_decay();
  AdamConfig adam;
  enum class BatchMode { full, subset, minibatch } batch_mode = BatchMode::minibatch;
  std::size_t batch_rows = 4096;    // subset / minibatch size
  std::size_t monitor_rows = 16384;  // fixed rows scored for the loss history (0: all)
  long log_every = 100;
  std::uint64_t seed = 7;
  Architecture arch;

  void validate() const;
};

struct LossRecord {
  long iteration = 0;  // number of updates applied
  double mse = 0.0;    // on the monitoring rows
};

struct TrainResult {
  OperatorModel model;
  std::vector<LossRecord> history;  // one record per log_every iterations
  double final_mse = 0.0;           // monitoring rows, after the last update
  double seconds = 0.0;
};

/// Deterministic for a fixed seed. Throws std::runtime_error naming the iteration when the
/// loss becomes non-finite.
TrainResult train(Variant variant, const TrainingTensors& tensors, const TrainConfig& config,
                  const std::function<void(const LossRecord&)>& on_log = {});

/// Batch holding every row of the given samples.
Batch full_batch(std::span<const SampleTensors> samples);

/// Pooled relative L2 of the physical displacement at every tau: sqrt(sum |u_pred - u_true|^2
/// / sum |u_true|^2) over all particles of all samples. Entry 0 (tau = 0) is NaN.
std::vector<double> relative_l2_over_time(const OperatorModel& model, std::span<const Trajectory> samples);

/// Physical displacements (cm) predicted for every particle of `traj` at snapshot tau.
Eigen::Matrix2Xd predict_displacement(const OperatorModel& model, const Trajectory& traj, int tau);

inline constexpr std::uint32_t kCheckpointVersion = 1;

void save_checkpoint(const OperatorModel& model, std::ostream& out);
void save_checkpoint(const OperatorModel& model, const std::filesystem::path& path);
OperatorModel load_checkpoint(std::istream& in);
OperatorModel load_checkpoint(const std::filesystem::path& path);

void write_loss_csv(std::ostream& out, std::span<const LossRecord> history);

}  // namespace cpd
