#include "patsnd/pat.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace patsnd {

RelationParams RelationParams::init(int heads, int dim_h, Rng& rng) {
  RelationParams p = zeros(heads, dim_h);
  const double head_scale = 1.0 / std::sqrt(static_cast<double>(dim_h));
  for (int k = 0; k < heads; ++k) {
    for (int j = 0; j < dim_h; ++j) {
      p.head_weight(k, j) = rng.uniform(-head_scale, head_scale);
    }
  }
  const double scorer_scale = 1.0 / std::sqrt(2.0 * dim_h);
  for (int j = 0; j < 2 * dim_h; ++j) {
    p.scorer_weight[j] = rng.uniform(-scorer_scale, scorer_scale);
  }
  return p;
}

RelationParams RelationParams::zeros(int heads, int dim_h) {
  RelationParams p;
  p.head_weight = Eigen::MatrixXd::Zero(heads, dim_h);
  p.head_bias = Eigen::VectorXd::Zero(heads);
  p.scorer_weight = Eigen::VectorXd::Zero(2 * dim_h);
  p.scorer_bias = 0.0;
  return p;
}

RelationGrad RelationGrad::zeros(int heads, int dim_h) {
  RelationGrad g;
  g.head_weight = Eigen::MatrixXd::Zero(heads, dim_h);
  g.head_bias = Eigen::VectorXd::Zero(heads);
  g.scorer_weight = Eigen::VectorXd::Zero(2 * dim_h);
  g.scorer_bias = 0.0;
  return g;
}

namespace {

void check_property_input(const Eigen::MatrixXd& properties, const RelationParams& params) {
  if (properties.rows() == 0) {
    throw EmptyPropertyListError("attention over an empty property list");
  }
  if (properties.cols() != params.dim_h()) {
    throw ShapeError("property width " + std::to_string(properties.cols()) +
                     " != dim_h " + std::to_string(params.dim_h()));
  }
}

// Jointly permuting the (P, V) rows must permute the attention weights and
// leave the summary bit-identical, so every reduction that crosses rows runs
// in an order derived from the data itself, never from row positions:
//  - logits come from one GEMV per row (each row's arithmetic is
//    self-contained),
//  - softmax denominators sum the exponentials in ascending value order,
//  - the value mix accumulates rows in a canonical sorted order.

double sorted_sum(Eigen::VectorXd terms) {
  std::sort(terms.data(), terms.data() + terms.size());
  double total = 0.0;
  for (Eigen::Index i = 0; i < terms.size(); ++i) total += terms[i];
  return total;
}

Eigen::MatrixXd row_logits(const Eigen::MatrixXd& properties, const RelationParams& params) {
  const Eigen::Index n = properties.rows();
  Eigen::MatrixXd logits(n, params.heads());
  for (Eigen::Index i = 0; i < n; ++i) {
    logits.row(i) =
        (params.head_weight * properties.row(i).transpose() + params.head_bias).transpose();
  }
  return logits;
}

// Column-wise softmax of relu(logits), numerically shifted by the column max.
void attention_from_logits(const Eigen::MatrixXd& logits, Eigen::MatrixXd& alphas,
                           Eigen::VectorXd& alpha_bar) {
  const Eigen::Index n = logits.rows();
  const Eigen::Index heads = logits.cols();
  alphas.resize(n, heads);
  Eigen::VectorXd e(n);
  for (Eigen::Index k = 0; k < heads; ++k) {
    Eigen::VectorXd g = logits.col(k).cwiseMax(0.0);
    double max_g = g.maxCoeff();
    // Scalar std::exp: SIMD exp kernels round differently between packet and
    // remainder lanes, which would break exact permutation equivariance.
    for (Eigen::Index i = 0; i < n; ++i) e[i] = std::exp(g[i] - max_g);
    alphas.col(k) = e / sorted_sum(e);
  }
  alpha_bar = alphas.rowwise().mean();
}

// Canonical accumulation order for the value mix: by weight, then by value
// row content, then by property row content. Rows that still tie are
// interchangeable, so the sum is permutation-invariant.
std::vector<int> canonical_row_order(const Eigen::VectorXd& alpha_bar,
                                     const Eigen::MatrixXd& values,
                                     const Eigen::MatrixXd& properties) {
  std::vector<int> order(static_cast<std::size_t>(alpha_bar.size()));
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    if (alpha_bar[a] != alpha_bar[b]) return alpha_bar[a] < alpha_bar[b];
    for (Eigen::Index c = 0; c < values.cols(); ++c) {
      if (values(a, c) != values(b, c)) return values(a, c) < values(b, c);
    }
    for (Eigen::Index c = 0; c < properties.cols(); ++c) {
      if (properties(a, c) != properties(b, c)) return properties(a, c) < properties(b, c);
    }
    return false;
  });
  return order;
}

Eigen::VectorXd weighted_value_sum(const Eigen::VectorXd& alpha_bar,
                                   const Eigen::MatrixXd& values,
                                   const Eigen::MatrixXd& properties) {
  Eigen::VectorXd h = Eigen::VectorXd::Zero(values.cols());
  for (int i : canonical_row_order(alpha_bar, values, properties)) {
    h += alpha_bar[i] * values.row(i).transpose();
  }
  return h;
}

}  // namespace

Eigen::VectorXd attention_weights(const Eigen::MatrixXd& properties,
                                  const RelationParams& params) {
  check_property_input(properties, params);
  Eigen::MatrixXd alphas;
  Eigen::VectorXd alpha_bar;
  attention_from_logits(row_logits(properties, params), alphas, alpha_bar);
  return alpha_bar;
}

Eigen::VectorXd pat_forward(const Eigen::MatrixXd& properties,
                            const Eigen::MatrixXd& values,
                            const RelationParams& params) {
  if (properties.rows() != values.rows() || properties.cols() != values.cols()) {
    throw ShapeError("property/value matrices must have matching shapes");
  }
  Eigen::VectorXd alpha_bar = attention_weights(properties, params);
  return weighted_value_sum(alpha_bar, values, properties);
}

double score_from_summaries(const Eigen::VectorXd& h1, const Eigen::VectorXd& h2,
                            const RelationParams& params) {
  const int dim_h = params.dim_h();
  if (h1.size() != dim_h || h2.size() != dim_h) {
    throw ShapeError("summary width mismatch in scorer");
  }
  return h1.dot(params.scorer_weight.head(dim_h)) +
         h2.dot(params.scorer_weight.tail(dim_h)) + params.scorer_bias;
}

SideForward pat_forward_cached(Eigen::MatrixXd properties, Eigen::MatrixXd values,
                               const RelationParams& params) {
  check_property_input(properties, params);
  if (properties.rows() != values.rows() || properties.cols() != values.cols()) {
    throw ShapeError("property/value matrices must have matching shapes");
  }
  SideForward side;
  side.logits = row_logits(properties, params);
  attention_from_logits(side.logits, side.alphas, side.alpha_bar);
  side.summary = weighted_value_sum(side.alpha_bar, values, properties);
  side.properties = std::move(properties);
  side.values = std::move(values);
  return side;
}

double score_forward(const SideForward& side1, const SideForward& side2,
                     const RelationParams& params) {
  return score_from_summaries(side1.summary, side2.summary, params);
}

namespace {

// Backward through one PAT side given d(objective)/d(summary).
void side_backward(const Eigen::VectorXd& d_summary, const SideForward& side,
                   const RelationParams& params, RelationGrad& grad,
                   Eigen::MatrixXd& d_properties, Eigen::MatrixXd& d_values) {
  const Eigen::Index n = side.properties.rows();
  const Eigen::Index heads = side.alphas.cols();

  // h = V^T alpha_bar
  d_values.noalias() += side.alpha_bar * d_summary.transpose();
  Eigen::VectorXd d_alpha_bar = side.values * d_summary;

  // alpha_bar = mean over heads of per-head softmax columns.
  Eigen::VectorXd d_alpha_head = d_alpha_bar / static_cast<double>(heads);
  for (Eigen::Index k = 0; k < heads; ++k) {
    const auto alpha = side.alphas.col(k);
    // Softmax backward: dg = alpha .* (da - (alpha . da))
    double inner = alpha.dot(d_alpha_head);
    Eigen::VectorXd d_g = alpha.array() * (d_alpha_head.array() - inner);
    // relu backward on the pre-activation logits.
    Eigen::VectorXd d_z(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      d_z[i] = side.logits(i, k) > 0.0 ? d_g[i] : 0.0;
    }
    grad.head_weight.row(k).noalias() += d_z.transpose() * side.properties;
    grad.head_bias[k] += d_z.sum();
    d_properties.noalias() += d_z * params.head_weight.row(k);
  }
}

}  // namespace

void score_backward(double d_score, const SideForward& side1, const SideForward& side2,
                    const RelationParams& params, RelationGrad& grad,
                    Eigen::MatrixXd& d_properties1, Eigen::MatrixXd& d_values1,
                    Eigen::MatrixXd& d_properties2, Eigen::MatrixXd& d_values2) {
  const int dim_h = params.dim_h();
  grad.scorer_weight.head(dim_h).noalias() += d_score * side1.summary;
  grad.scorer_weight.tail(dim_h).noalias() += d_score * side2.summary;
  grad.scorer_bias += d_score;
  Eigen::VectorXd d_h1 = d_score * params.scorer_weight.head(dim_h);
  Eigen::VectorXd d_h2 = d_score * params.scorer_weight.tail(dim_h);
  side_backward(d_h1, side1, params, grad, d_properties1, d_values1);
  side_backward(d_h2, side2, params, grad, d_properties2, d_values2);
}

// ---------------------------------------------------------------------------
// Model

Model Model::init(ModelConfig config, std::uint64_t seed) {
  Model m;
  m.config = std::move(config);
  Rng rng(seed);
  m.projection = Projection::init(m.config.dim_h, m.config.encoder.dim_f, rng);
  m.relations.reserve(m.config.relation_ids.size());
  for (std::size_t i = 0; i < m.config.relation_ids.size(); ++i) {
    m.relations.push_back(RelationParams::init(m.config.heads, m.config.dim_h, rng));
    m.index_[m.config.relation_ids[i]] = static_cast<int>(i);
  }
  return m;
}

Model Model::assemble(ModelConfig config, Projection projection,
                      std::vector<RelationParams> relations) {
  if (config.relation_ids.size() != relations.size()) {
    throw ShapeError("model assembly: relation id/parameter count mismatch");
  }
  Model m;
  m.config = std::move(config);
  m.projection = std::move(projection);
  m.relations = std::move(relations);
  for (std::size_t i = 0; i < m.config.relation_ids.size(); ++i) {
    m.index_[m.config.relation_ids[i]] = static_cast<int>(i);
  }
  return m;
}

int Model::relation_index(const std::string& relation_id) const {
  auto it = index_.find(relation_id);
  if (it == index_.end()) {
    throw UnknownRelationError("relation not in model: " + relation_id);
  }
  return it->second;
}

const RelationParams& Model::relation_params(const std::string& relation_id) const {
  return relations[static_cast<std::size_t>(relation_index(relation_id))];
}

// ---------------------------------------------------------------------------
// Attention ranking

std::vector<RankedPair> rank_pairs(const std::vector<PropertyValuePair>& pairs,
                                   const Eigen::VectorXd& alpha_bar) {
  if (static_cast<Eigen::Index>(pairs.size()) != alpha_bar.size()) {
    throw ShapeError("rank_pairs: pair count != weight count");
  }
  std::vector<int> order(pairs.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](int a, int b) { return alpha_bar[a] > alpha_bar[b]; });
  std::vector<RankedPair> ranked;
  ranked.reserve(pairs.size());
  for (std::size_t r = 0; r < order.size(); ++r) {
    ranked.push_back({pairs[static_cast<std::size_t>(order[r])],
                      alpha_bar[order[r]], static_cast<int>(r) + 1});
  }
  return ranked;
}

}  // namespace patsnd
