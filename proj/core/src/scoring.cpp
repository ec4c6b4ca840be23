#include "patsnd/scoring.hpp"

namespace patsnd {

EncodedWorkspace::EncodedWorkspace(std::shared_ptr<const TextEncoder> encoder, int dim_h)
    : encoder_(std::move(encoder)), dim_h_(dim_h) {
  features_.resize(encoder_->dim_f(), 0);
}

int EncodedWorkspace::intern(const std::string& text) {
  auto it = index_.find(text);
  if (it != index_.end()) return it->second;
  Eigen::VectorXd f = encoder_->encode(text);
  int col = static_cast<int>(texts_.size());
  if (col >= features_.cols()) {
    Eigen::Index grown = std::max<Eigen::Index>(64, features_.cols() * 2);
    features_.conservativeResize(Eigen::NoChange, grown);
  }
  features_.col(col) = f;
  texts_.push_back(text);
  index_.emplace(text, col);
  return col;
}

void EncodedWorkspace::refresh(const Projection& projection) {
  const Eigen::Index n = static_cast<Eigen::Index>(texts_.size());
  projected_.noalias() = projection.weight * features_.leftCols(n);
  projected_.colwise() += projection.bias;
}

void EncodedWorkspace::zero_grad() {
  grad_ = Eigen::MatrixXd::Zero(dim_h_, static_cast<Eigen::Index>(texts_.size()));
  grad_valid_ = true;
}

void EncodedWorkspace::add_grad(int column, const Eigen::VectorXd& d_hidden) {
  grad_.col(column) += d_hidden;
}

void EncodedWorkspace::accumulate_projection_grad(Eigen::MatrixXd& d_weight,
                                                  Eigen::VectorXd& d_bias) const {
  if (!grad_valid_) return;
  const Eigen::Index n = grad_.cols();
  d_weight.noalias() += grad_ * features_.leftCols(n).transpose();
  d_bias.noalias() += grad_.rowwise().sum();
}

EncodedEntity encode_entity(EncodedWorkspace& workspace, const KnowledgeBase& kb,
                            const std::string& entity_id, std::size_t max_properties) {
  const EntityRecord& record = kb.entity(entity_id);
  EncodedEntity encoded;
  encoded.entity_id = entity_id;
  encoded.label = record.label;
  encoded.pairs = kb.background(entity_id, max_properties);
  encoded.property_columns.reserve(encoded.pairs.size());
  encoded.value_columns.reserve(encoded.pairs.size());
  for (const PropertyValuePair& pair : encoded.pairs) {
    encoded.property_columns.push_back(workspace.intern(pair.property_label));
    encoded.value_columns.push_back(workspace.intern(pair.value_text));
  }
  return encoded;
}

PropertyMatrices gather_matrices(const EncodedWorkspace& workspace, const EncodedEntity& entity) {
  const Eigen::Index n = static_cast<Eigen::Index>(entity.pairs.size());
  PropertyMatrices m;
  m.properties.resize(n, workspace.dim_h());
  m.values.resize(n, workspace.dim_h());
  for (Eigen::Index i = 0; i < n; ++i) {
    m.properties.row(i) = workspace.projected().col(entity.property_columns[i]);
    m.values.row(i) = workspace.projected().col(entity.value_columns[i]);
  }
  return m;
}

double score_triple(const std::vector<PropertyValuePair>& background1,
                    const std::vector<PropertyValuePair>& background2,
                    const std::string& relation_id, const Model& model,
                    const TextEncoder& encoder) {
  if (background1.empty() || background2.empty()) {
    throw EmptyPropertyListError("score_triple: empty background list");
  }
  const RelationParams& params = model.relation_params(relation_id);
  auto encode_side = [&](const std::vector<PropertyValuePair>& background) {
    PropertyMatrices m;
    const Eigen::Index n = static_cast<Eigen::Index>(background.size());
    m.properties.resize(n, model.config.dim_h);
    m.values.resize(n, model.config.dim_h);
    for (Eigen::Index i = 0; i < n; ++i) {
      auto [p, v] = encode_pair(encoder, model.projection, background[i]);
      m.properties.row(i) = p;
      m.values.row(i) = v;
    }
    return m;
  };
  PropertyMatrices m1 = encode_side(background1);
  PropertyMatrices m2 = encode_side(background2);
  Eigen::VectorXd h1 = pat_forward(m1.properties, m1.values, params);
  Eigen::VectorXd h2 = pat_forward(m2.properties, m2.values, params);
  return score_from_summaries(h1, h2, params);
}

// ---------------------------------------------------------------------------
// TripleScorer

TripleScorer::TripleScorer(const Model& model, std::shared_ptr<const TextEncoder> encoder,
                           const KnowledgeBase& kb)
    : model_(model), kb_(kb), workspace_(std::move(encoder), model.config.dim_h) {
  check_encoder_matches(model.config.encoder, workspace_.encoder());
}

const EncodedEntity& TripleScorer::entity(const std::string& entity_id) {
  auto it = entities_.find(entity_id);
  if (it != entities_.end()) return it->second;
  EncodedEntity encoded = encode_entity(workspace_, kb_, entity_id);
  refreshed_ = false;  // new columns need projecting
  return entities_.emplace(entity_id, std::move(encoded)).first->second;
}

SideForward TripleScorer::forward_side(const EncodedEntity& encoded,
                                       const RelationParams& params) {
  PropertyMatrices m = gather_matrices(workspace_, encoded);
  return pat_forward_cached(std::move(m.properties), std::move(m.values), params);
}

double TripleScorer::score(const Triple& triple) {
  const RelationParams& params = model_.relation_params(triple.relation_id);
  const EncodedEntity& a = entity(triple.e1);
  const EncodedEntity& b = entity(triple.e2);
  if (!refreshed_) {
    workspace_.refresh(model_.projection);
    refreshed_ = true;
  }
  SideForward s1 = forward_side(a, params);
  SideForward s2 = forward_side(b, params);
  return score_forward(s1, s2, params);
}

double TripleScorer::novelty_score(const Triple& triple) { return -score(triple); }

AttentionReport TripleScorer::explain(const Triple& triple) {
  const RelationParams& params = model_.relation_params(triple.relation_id);
  const EncodedEntity& a = entity(triple.e1);
  const EncodedEntity& b = entity(triple.e2);
  if (!refreshed_) {
    workspace_.refresh(model_.projection);
    refreshed_ = true;
  }
  SideForward s1 = forward_side(a, params);
  SideForward s2 = forward_side(b, params);

  AttentionReport report;
  report.relation_id = triple.relation_id;
  report.novelty_score = -score_forward(s1, s2, params);
  report.entity1 = {a.entity_id, a.label, rank_pairs(a.pairs, s1.alpha_bar)};
  report.entity2 = {b.entity_id, b.label, rank_pairs(b.pairs, s2.alpha_bar)};
  return report;
}

// ---------------------------------------------------------------------------

std::shared_ptr<const TextEncoder> make_encoder(const EncoderSpec& spec) {
  if (spec.kind == EncoderSpec::Kind::kTrigram) {
    return std::make_shared<TrigramHashEncoder>(spec.dim_f, spec.seed, spec.buckets);
  }
  throw InvalidInputError(
      "precomputed encoder cannot be built from a checkpoint spec alone; "
      "supply the embedding table");
}

void check_encoder_matches(const EncoderSpec& spec, const TextEncoder& encoder) {
  if (encoder.dim_f() != spec.dim_f) {
    throw ShapeError("encoder width " + std::to_string(encoder.dim_f()) +
                     " does not match model dim_f " + std::to_string(spec.dim_f));
  }
  if (spec.kind == EncoderSpec::Kind::kTrigram) {
    const auto* trigram = dynamic_cast<const TrigramHashEncoder*>(&encoder);
    if (trigram == nullptr || trigram->seed() != spec.seed ||
        trigram->buckets() != spec.buckets) {
      throw InvalidInputError("encoder does not match the model's trigram encoder spec");
    }
  }
}

}  // namespace patsnd
