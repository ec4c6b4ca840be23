#pragma once

#include <cstdint>
#include <string>
#include <unordered_map>
#include <vector>

#include <Eigen/Core>

#include "patsnd/encoder.hpp"
#include "patsnd/errors.hpp"
#include "patsnd/kb.hpp"
#include "patsnd/rng.hpp"

namespace patsnd {

inline constexpr int kDefaultDimH = 300;
inline constexpr int kDefaultHeads = 8;

// Relation-specific parameters: K scalar-logit attention heads over property
// vectors, plus the scorer over the concatenated pair of attended value
// summaries. One independent set per relation, shared between the e1 and e2
// sides of a triple.
struct RelationParams {
  Eigen::MatrixXd head_weight;   // K x dim_h
  Eigen::VectorXd head_bias;     // K
  Eigen::VectorXd scorer_weight; // 2 * dim_h
  double scorer_bias = 0.0;

  int heads() const { return static_cast<int>(head_weight.rows()); }
  int dim_h() const { return static_cast<int>(head_weight.cols()); }

  static RelationParams init(int heads, int dim_h, Rng& rng);
  static RelationParams zeros(int heads, int dim_h);
};

// Property and value matrices for one entity: row i of each holds the hidden
// vectors of the same property-value pair.
struct PropertyMatrices {
  Eigen::MatrixXd properties;  // N x dim_h
  Eigen::MatrixXd values;      // N x dim_h
};

// Per-head logits are scalars: g_i^k = relu(p_i . W_k + b_k); softmax over
// properties per head; heads averaged. Returns alpha_bar (length N,
// non-negative, sums to 1).
Eigen::VectorXd attention_weights(const Eigen::MatrixXd& properties,
                                  const RelationParams& params);

// Weighted value summary h = sum_i alpha_bar_i * v_i. Lies in the convex hull
// of the value rows.
Eigen::VectorXd pat_forward(const Eigen::MatrixXd& properties,
                            const Eigen::MatrixXd& values,
                            const RelationParams& params);

// Scorer: S = [h1 ; h2] . scorer_weight + scorer_bias. Higher S means more
// NORMAL.
double score_from_summaries(const Eigen::VectorXd& h1, const Eigen::VectorXd& h2,
                            const RelationParams& params);

// Forward pass with intermediates retained for backprop.
struct SideForward {
  Eigen::MatrixXd properties;  // N x dim_h
  Eigen::MatrixXd values;      // N x dim_h
  Eigen::MatrixXd logits;      // N x K, pre-relu
  Eigen::MatrixXd alphas;      // N x K, per-head softmax
  Eigen::VectorXd alpha_bar;   // N
  Eigen::VectorXd summary;     // dim_h
};

SideForward pat_forward_cached(Eigen::MatrixXd properties, Eigen::MatrixXd values,
                               const RelationParams& params);

double score_forward(const SideForward& side1, const SideForward& side2,
                     const RelationParams& params);

// Gradient accumulator with the same shapes as RelationParams.
struct RelationGrad {
  Eigen::MatrixXd head_weight;
  Eigen::VectorXd head_bias;
  Eigen::VectorXd scorer_weight;
  double scorer_bias = 0.0;

  static RelationGrad zeros(int heads, int dim_h);
};

// Accumulates d(upstream)/d(params) and d/d(P, V) for one scored triple given
// dS = d(objective)/d(score).
void score_backward(double d_score, const SideForward& side1, const SideForward& side2,
                    const RelationParams& params, RelationGrad& grad,
                    Eigen::MatrixXd& d_properties1, Eigen::MatrixXd& d_values1,
                    Eigen::MatrixXd& d_properties2, Eigen::MatrixXd& d_values2);

// ---------------------------------------------------------------------------
// Model bundle

struct ModelConfig {
  EncoderSpec encoder;
  int dim_h = kDefaultDimH;
  int heads = kDefaultHeads;
  std::vector<std::string> relation_ids;  // catalog order
};

// Projection plus per-relation attention/scorer parameters; everything that
// trains.
struct Model {
  ModelConfig config;
  Projection projection;
  std::vector<RelationParams> relations;  // aligned with config.relation_ids

  static Model init(ModelConfig config, std::uint64_t seed);
  // Rebuilds a model from loaded parts (checkpoint path).
  static Model assemble(ModelConfig config, Projection projection,
                        std::vector<RelationParams> relations);

  int relation_index(const std::string& relation_id) const;
  const RelationParams& relation_params(const std::string& relation_id) const;

 private:
  std::unordered_map<std::string, int> index_;
};

// ---------------------------------------------------------------------------
// Attention report (novelty characterization)

struct RankedPair {
  PropertyValuePair pair;
  double weight = 0.0;  // averaged attention weight
  int rank = 0;         // 1-based, descending weight, ties by original order
};

struct EntityAttention {
  std::string entity_id;
  std::string label;
  std::vector<RankedPair> ranked;
};

struct AttentionReport {
  int instance_id = -1;
  std::string relation_id;
  EntityAttention entity1;
  EntityAttention entity2;
  double novelty_score = 0.0;
};

// Ranks pairs by weight descending; ties keep original pair order.
std::vector<RankedPair> rank_pairs(const std::vector<PropertyValuePair>& pairs,
                                   const Eigen::VectorXd& alpha_bar);

}  // namespace patsnd
