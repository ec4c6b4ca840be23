#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "patsnd/contrastive.hpp"
#include "patsnd/pat.hpp"
#include "patsnd/scoring.hpp"

namespace patsnd {

struct TrainConfig {
  int dim_h = kDefaultDimH;
  int heads = kDefaultHeads;
  int batch_size = 256;
  double learning_rate = 1e-3;
  double l2_lambda = 1e-4;
  int epochs = 10;
  double margin = 1.0;
  std::uint64_t seed = 0;
};

// Flat key-value config file: `key = value`, one per line, '#' comments.
// Accepted keys are exactly the TrainConfig field names (dim_H, heads,
// batch_size, learning_rate, l2_lambda, epochs, margin, seed).
TrainConfig load_train_config(const std::filesystem::path& path);

// Eq. 3 term: max(s_pseudo - s_normal + margin, 0).
double hinge_loss(double s_normal, double s_pseudo, double margin);

// ---------------------------------------------------------------------------
// Trainable parameter plumbing

struct ParamView {
  double* data;
  std::ptrdiff_t size;
};

// Gradient buffers shaped like the trainable parameters.
struct ModelGrad {
  Eigen::MatrixXd proj_weight;
  Eigen::VectorXd proj_bias;
  std::vector<RelationGrad> relations;

  static ModelGrad zeros_like(const Model& model);
  void set_zero();
};

// Views over every trainable parameter, in a fixed order shared with
// grad_views(): projection weight, projection bias, then per relation the
// head weights, head biases, scorer weight, scorer bias.
std::vector<ParamView> param_views(Model& model);
std::vector<ParamView> grad_views(ModelGrad& grad);

double squared_param_norm(const Model& model);

// Adaptive-moment first-order optimizer over flat parameter views.
class AdamOptimizer {
 public:
  explicit AdamOptimizer(double learning_rate, double beta1 = 0.9, double beta2 = 0.999,
                         double epsilon = 1e-8);
  void step(const std::vector<ParamView>& params, const std::vector<ParamView>& grads);

 private:
  double learning_rate_, beta1_, beta2_, epsilon_;
  std::int64_t t_ = 0;
  std::vector<std::vector<double>> m_, v_;
};

// ---------------------------------------------------------------------------
// Objective

// One (normal, pseudo-novel) training pair, encoded against a workspace.
struct EncodedTriplePair {
  int relation_index;
  const EncodedEntity* normal_e1;
  const EncodedEntity* normal_e2;
  const EncodedEntity* pseudo_e1;
  const EncodedEntity* pseudo_e2;
};

struct BatchResult {
  double objective = 0.0;  // mean hinge + l2_lambda * squared param norm
  double hinge_sum = 0.0;  // data term before averaging
};

// Computes the batch objective and, when grad is non-null, accumulates
// analytic gradients for every trainable parameter into grad (which is
// zeroed first). Refreshes the workspace against the model's projection.
BatchResult pair_batch_objective(const Model& model, EncodedWorkspace& workspace,
                                 std::span<const EncodedTriplePair> pairs, double margin,
                                 double l2_lambda, ModelGrad* grad);

// ---------------------------------------------------------------------------
// Training loop

struct EpochLog {
  int epoch = 0;
  double mean_loss = 0.0;
  double wall_seconds = 0.0;
};

struct TrainResult {
  Model model;
  std::vector<EpochLog> log;
};

// End-to-end max-margin training: per epoch regenerate one pseudo-novel
// triple per NORMAL triple, shuffle, minibatch, Adam step on mean hinge plus
// l2. Deterministic given config.seed. Aborts with NumericError on a
// non-finite objective.
TrainResult train(const std::vector<Triple>& train_triples, const KnowledgeBase& kb,
                  std::shared_ptr<const TextEncoder> encoder, const TrainConfig& config);

// Model checkpoint: single versioned binary file; save/load round-trips
// bit-exactly.
void save_checkpoint(const Model& model, const std::filesystem::path& path);
Model load_checkpoint(const std::filesystem::path& path);

void save_training_log(const std::vector<EpochLog>& log, const std::filesystem::path& path);

}  // namespace patsnd
