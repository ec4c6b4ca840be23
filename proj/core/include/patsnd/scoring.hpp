#pragma once

#include <memory>
#include <string>
#include <unordered_map>
#include <vector>

#include <Eigen/Core>

#include "patsnd/contrastive.hpp"
#include "patsnd/encoder.hpp"
#include "patsnd/kb.hpp"
#include "patsnd/pat.hpp"

namespace patsnd {

// Interns texts once, holds their frozen encoder features as columns of F,
// and keeps the projected hidden vectors in sync with a (possibly training)
// projection. Gathering columns by index avoids re-encoding and lets the
// projection and its gradient be applied as single matrix products over all
// distinct texts. Not thread-safe; confined to one thread.
class EncodedWorkspace {
 public:
  EncodedWorkspace(std::shared_ptr<const TextEncoder> encoder, int dim_h);

  int intern(const std::string& text);
  std::size_t text_count() const { return texts_.size(); }

  // Recomputes projected = W * F + b for all interned columns.
  void refresh(const Projection& projection);

  // Hidden vector of an interned text (column view after refresh()).
  const Eigen::MatrixXd& projected() const { return projected_; }
  const Eigen::MatrixXd& features() const { return features_; }

  // Gradient accumulation toward the projection, keyed by text column.
  void zero_grad();
  void add_grad(int column, const Eigen::VectorXd& d_hidden);
  // dW += G F^T, db += row sums of G over all columns touched this step.
  void accumulate_projection_grad(Eigen::MatrixXd& d_weight, Eigen::VectorXd& d_bias) const;

  const TextEncoder& encoder() const { return *encoder_; }
  int dim_h() const { return dim_h_; }

 private:
  std::shared_ptr<const TextEncoder> encoder_;
  int dim_h_;
  std::vector<std::string> texts_;
  std::unordered_map<std::string, int> index_;
  Eigen::MatrixXd features_;   // dim_f x capacity (logical size = texts_.size())
  Eigen::MatrixXd projected_;  // dim_h x text_count, valid after refresh()
  Eigen::MatrixXd grad_;       // dim_h x text_count
  bool grad_valid_ = false;
};

// An entity's background encoded as workspace column indices, one pair per
// row of the eventual P/V matrices.
struct EncodedEntity {
  std::string entity_id;
  std::string label;
  std::vector<PropertyValuePair> pairs;
  std::vector<int> property_columns;
  std::vector<int> value_columns;
};

EncodedEntity encode_entity(EncodedWorkspace& workspace, const KnowledgeBase& kb,
                            const std::string& entity_id,
                            std::size_t max_properties = kMaxBackgroundProperties);

// Gathers the entity's hidden-space P and V matrices from a refreshed
// workspace.
PropertyMatrices gather_matrices(const EncodedWorkspace& workspace, const EncodedEntity& entity);

// Scores S(tau) for two raw background lists under the relation's parameters.
double score_triple(const std::vector<PropertyValuePair>& background1,
                    const std::vector<PropertyValuePair>& background2,
                    const std::string& relation_id, const Model& model,
                    const TextEncoder& encoder);

// Inference-time scorer over a fixed model: caches encoded entities, scores
// and explains triples against the KB.
class TripleScorer {
 public:
  TripleScorer(const Model& model, std::shared_ptr<const TextEncoder> encoder,
               const KnowledgeBase& kb);

  // S(tau); higher = more NORMAL.
  double score(const Triple& triple);
  // -S(tau); higher = more novel. This is the value ranked by AUC.
  double novelty_score(const Triple& triple);
  // Both entities' pairs ranked by averaged attention weight.
  AttentionReport explain(const Triple& triple);

  const Model& model() const { return model_; }

 private:
  const EncodedEntity& entity(const std::string& entity_id);
  SideForward forward_side(const EncodedEntity& entity, const RelationParams& params);

  const Model& model_;
  const KnowledgeBase& kb_;
  EncodedWorkspace workspace_;
  std::unordered_map<std::string, EncodedEntity> entities_;
  bool refreshed_ = false;
};

// Builds the encoder described by the model config. Trigram encoders are
// reconstructed from the stored seed; precomputed encoders must be supplied
// by the caller and are validated against the spec.
std::shared_ptr<const TextEncoder> make_encoder(const EncoderSpec& spec);
void check_encoder_matches(const EncoderSpec& spec, const TextEncoder& encoder);

}  // namespace patsnd
