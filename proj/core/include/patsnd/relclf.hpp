#pragma once

#include <filesystem>
#include <memory>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "patsnd/dsbuild.hpp"
#include "patsnd/encoder.hpp"
#include "patsnd/kb.hpp"

namespace patsnd {

struct RelationPrediction {
  std::string relation_id;  // argmax of probabilities, catalog-order ties
  std::vector<std::pair<std::string, double>> probabilities;  // catalog order, sums to 1
};

// Relation source for the scoring pipeline: either the trained classifier or
// gold-label pass-through (oracle mode).
class RelationPredictor {
 public:
  virtual ~RelationPredictor() = default;
  virtual RelationPrediction predict(const FactInstance& instance) const = 0;
};

class OracleRelationPredictor : public RelationPredictor {
 public:
  RelationPrediction predict(const FactInstance& instance) const override;
};

struct ClassifierConfig {
  int batch_size = 256;
  double learning_rate = 1e-3;
  double l2_lambda = 1e-4;
  int epochs = 10;
  std::uint64_t seed = 0;
};

// Entity-marker linear classifier: the text with both spans wrapped in marker
// tokens is encoded by the pooled text encoder, then a single trainable
// linear layer with softmax maps it onto the relation catalog.
struct ClassifierModel {
  EncoderSpec encoder_spec;
  std::vector<std::string> relation_ids;  // catalog order
  Eigen::MatrixXd weight;                 // n_relations x dim_f
  Eigen::VectorXd bias;                   // n_relations
};

// Wraps the entity spans with [E1]...[/E1] / [E2]...[/E2] markers. Spans may
// appear in either order; throws SpanError on out-of-bounds or overlap.
std::string marked_text(const std::string& text, Span e1, Span e2);

// Cross-entropy training over the catalog with a seeded shuffle; instances
// must carry catalog relations (LabelError otherwise). Deterministic given
// config.seed.
ClassifierModel train_relation_classifier(const std::vector<FactInstance>& train,
                                          const TextEncoder& encoder,
                                          const std::vector<RelationDef>& catalog,
                                          const ClassifierConfig& config);

RelationPrediction predict_relation(const ClassifierModel& model, const TextEncoder& encoder,
                                    const std::string& text, Span e1, Span e2);

class ClassifierRelationPredictor : public RelationPredictor {
 public:
  ClassifierRelationPredictor(const ClassifierModel& model, const TextEncoder& encoder)
      : model_(model), encoder_(encoder) {}
  RelationPrediction predict(const FactInstance& instance) const override;

 private:
  const ClassifierModel& model_;
  const TextEncoder& encoder_;
};

struct ClassifierMetrics {
  double accuracy = 0.0;
  double macro_f1 = 0.0;  // averaged over classes present in the gold labels
};

ClassifierMetrics evaluate_classifier(const ClassifierModel& model, const TextEncoder& encoder,
                                      const std::vector<FactInstance>& instances);

void save_classifier(const ClassifierModel& model, const std::filesystem::path& path);
ClassifierModel load_classifier(const std::filesystem::path& path);

}  // namespace patsnd
