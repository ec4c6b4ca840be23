#include "patsnd/training.hpp"

#include <chrono>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include <nlohmann/json.hpp>

#include "binser.hpp"
#include "patsnd/io.hpp"

namespace patsnd {

double hinge_loss(double s_normal, double s_pseudo, double margin) {
  if (!std::isfinite(s_normal) || !std::isfinite(s_pseudo) || !std::isfinite(margin)) {
    throw NumericError("hinge_loss: non-finite input");
  }
  return std::max(s_pseudo - s_normal + margin, 0.0);
}

// ---------------------------------------------------------------------------
// Config file

TrainConfig load_train_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config file: " + path.string());
  TrainConfig config;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    std::string flat = normalize_whitespace(line);
    if (flat.empty()) continue;
    auto eq = flat.find('=');
    if (eq == std::string::npos) {
      throw ParseError(path.string() + ":" + std::to_string(line_no) + ": expected key = value");
    }
    std::string key = normalize_whitespace(flat.substr(0, eq));
    std::string value = normalize_whitespace(flat.substr(eq + 1));
    try {
      if (key == "dim_H") config.dim_h = std::stoi(value);
      else if (key == "heads") config.heads = std::stoi(value);
      else if (key == "batch_size") config.batch_size = std::stoi(value);
      else if (key == "learning_rate") config.learning_rate = std::stod(value);
      else if (key == "l2_lambda") config.l2_lambda = std::stod(value);
      else if (key == "epochs") config.epochs = std::stoi(value);
      else if (key == "margin") config.margin = std::stod(value);
      else if (key == "seed") config.seed = std::stoull(value);
      else throw ParseError(path.string() + ":" + std::to_string(line_no) + ": unknown key \"" + key + "\"");
    } catch (const std::invalid_argument&) {
      throw ParseError(path.string() + ":" + std::to_string(line_no) + ": bad value for \"" + key + "\"");
    } catch (const std::out_of_range&) {
      throw ParseError(path.string() + ":" + std::to_string(line_no) + ": value out of range for \"" + key + "\"");
    }
  }
  if (config.dim_h <= 0 || config.heads <= 0 || config.batch_size <= 0 || config.epochs <= 0 ||
      config.learning_rate < 0 || config.l2_lambda < 0 || config.margin < 0) {
    throw InvalidInputError("train config: dimensions and counts must be positive, rates non-negative");
  }
  return config;
}

// ---------------------------------------------------------------------------
// Parameter views

ModelGrad ModelGrad::zeros_like(const Model& model) {
  ModelGrad g;
  g.proj_weight = Eigen::MatrixXd::Zero(model.projection.weight.rows(), model.projection.weight.cols());
  g.proj_bias = Eigen::VectorXd::Zero(model.projection.bias.size());
  g.relations.reserve(model.relations.size());
  for (const RelationParams& r : model.relations) {
    g.relations.push_back(RelationGrad::zeros(r.heads(), r.dim_h()));
  }
  return g;
}

void ModelGrad::set_zero() {
  proj_weight.setZero();
  proj_bias.setZero();
  for (RelationGrad& r : relations) {
    r.head_weight.setZero();
    r.head_bias.setZero();
    r.scorer_weight.setZero();
    r.scorer_bias = 0.0;
  }
}

std::vector<ParamView> param_views(Model& model) {
  std::vector<ParamView> views;
  views.push_back({model.projection.weight.data(), model.projection.weight.size()});
  views.push_back({model.projection.bias.data(), model.projection.bias.size()});
  for (RelationParams& r : model.relations) {
    views.push_back({r.head_weight.data(), r.head_weight.size()});
    views.push_back({r.head_bias.data(), r.head_bias.size()});
    views.push_back({r.scorer_weight.data(), r.scorer_weight.size()});
    views.push_back({&r.scorer_bias, 1});
  }
  return views;
}

std::vector<ParamView> grad_views(ModelGrad& grad) {
  std::vector<ParamView> views;
  views.push_back({grad.proj_weight.data(), grad.proj_weight.size()});
  views.push_back({grad.proj_bias.data(), grad.proj_bias.size()});
  for (RelationGrad& r : grad.relations) {
    views.push_back({r.head_weight.data(), r.head_weight.size()});
    views.push_back({r.head_bias.data(), r.head_bias.size()});
    views.push_back({r.scorer_weight.data(), r.scorer_weight.size()});
    views.push_back({&r.scorer_bias, 1});
  }
  return views;
}

double squared_param_norm(const Model& model) {
  double total = model.projection.weight.squaredNorm() + model.projection.bias.squaredNorm();
  for (const RelationParams& r : model.relations) {
    total += r.head_weight.squaredNorm() + r.head_bias.squaredNorm() +
             r.scorer_weight.squaredNorm() + r.scorer_bias * r.scorer_bias;
  }
  return total;
}

AdamOptimizer::AdamOptimizer(double learning_rate, double beta1, double beta2, double epsilon)
    : learning_rate_(learning_rate), beta1_(beta1), beta2_(beta2), epsilon_(epsilon) {}

void AdamOptimizer::step(const std::vector<ParamView>& params,
                         const std::vector<ParamView>& grads) {
  if (params.size() != grads.size()) {
    throw ShapeError("optimizer: parameter/gradient view count mismatch");
  }
  if (m_.empty()) {
    m_.resize(params.size());
    v_.resize(params.size());
    for (std::size_t i = 0; i < params.size(); ++i) {
      m_[i].assign(static_cast<std::size_t>(params[i].size), 0.0);
      v_[i].assign(static_cast<std::size_t>(params[i].size), 0.0);
    }
  }
  ++t_;
  const double bias1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
  const double bias2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (params[i].size != grads[i].size) {
      throw ShapeError("optimizer: view size mismatch at index " + std::to_string(i));
    }
    double* p = params[i].data;
    const double* g = grads[i].data;
    for (std::ptrdiff_t j = 0; j < params[i].size; ++j) {
      double& m = m_[i][static_cast<std::size_t>(j)];
      double& v = v_[i][static_cast<std::size_t>(j)];
      m = beta1_ * m + (1.0 - beta1_) * g[j];
      v = beta2_ * v + (1.0 - beta2_) * g[j] * g[j];
      const double m_hat = m / bias1;
      const double v_hat = v / bias2;
      p[j] -= learning_rate_ * m_hat / (std::sqrt(v_hat) + epsilon_);
    }
  }
}

// ---------------------------------------------------------------------------
// Objective

namespace {

// Scatters per-row P/V gradients back to the workspace text columns.
void scatter_side_grad(EncodedWorkspace& workspace, const EncodedEntity& entity,
                       const Eigen::MatrixXd& d_properties, const Eigen::MatrixXd& d_values) {
  for (std::size_t i = 0; i < entity.pairs.size(); ++i) {
    workspace.add_grad(entity.property_columns[i],
                       d_properties.row(static_cast<Eigen::Index>(i)).transpose());
    workspace.add_grad(entity.value_columns[i],
                       d_values.row(static_cast<Eigen::Index>(i)).transpose());
  }
}

}  // namespace

BatchResult pair_batch_objective(const Model& model, EncodedWorkspace& workspace,
                                 std::span<const EncodedTriplePair> pairs, double margin,
                                 double l2_lambda, ModelGrad* grad) {
  if (pairs.empty()) throw InvalidInputError("empty training batch");
  workspace.refresh(model.projection);
  if (grad != nullptr) {
    grad->set_zero();
    workspace.zero_grad();
  }
  const double inv_batch = 1.0 / static_cast<double>(pairs.size());
  BatchResult result;
  for (const EncodedTriplePair& pair : pairs) {
    const RelationParams& params = model.relations[static_cast<std::size_t>(pair.relation_index)];
    auto forward = [&](const EncodedEntity& entity) {
      PropertyMatrices m = gather_matrices(workspace, entity);
      return pat_forward_cached(std::move(m.properties), std::move(m.values), params);
    };
    SideForward pos1 = forward(*pair.normal_e1);
    SideForward pos2 = forward(*pair.normal_e2);
    SideForward neg1 = forward(*pair.pseudo_e1);
    SideForward neg2 = forward(*pair.pseudo_e2);
    const double s_normal = score_forward(pos1, pos2, params);
    const double s_pseudo = score_forward(neg1, neg2, params);
    const double loss = hinge_loss(s_normal, s_pseudo, margin);
    result.hinge_sum += loss;
    if (grad != nullptr && loss > 0.0) {
      RelationGrad& rel_grad = grad->relations[static_cast<std::size_t>(pair.relation_index)];
      auto backward = [&](double d_score, const SideForward& s1, const SideForward& s2,
                          const EncodedEntity& e1, const EncodedEntity& e2) {
        Eigen::MatrixXd dp1 = Eigen::MatrixXd::Zero(s1.properties.rows(), s1.properties.cols());
        Eigen::MatrixXd dv1 = Eigen::MatrixXd::Zero(s1.values.rows(), s1.values.cols());
        Eigen::MatrixXd dp2 = Eigen::MatrixXd::Zero(s2.properties.rows(), s2.properties.cols());
        Eigen::MatrixXd dv2 = Eigen::MatrixXd::Zero(s2.values.rows(), s2.values.cols());
        score_backward(d_score, s1, s2, params, rel_grad, dp1, dv1, dp2, dv2);
        scatter_side_grad(workspace, e1, dp1, dv1);
        scatter_side_grad(workspace, e2, dp2, dv2);
      };
      backward(-inv_batch, pos1, pos2, *pair.normal_e1, *pair.normal_e2);
      backward(+inv_batch, neg1, neg2, *pair.pseudo_e1, *pair.pseudo_e2);
    }
  }
  result.objective = result.hinge_sum * inv_batch;
  if (l2_lambda > 0.0) {
    result.objective += l2_lambda * squared_param_norm(model);
  }
  if (grad != nullptr) {
    workspace.accumulate_projection_grad(grad->proj_weight, grad->proj_bias);
    if (l2_lambda > 0.0) {
      // d/dtheta of l2_lambda * ||theta||^2
      const double c = 2.0 * l2_lambda;
      grad->proj_weight += c * model.projection.weight;
      grad->proj_bias += c * model.projection.bias;
      for (std::size_t i = 0; i < model.relations.size(); ++i) {
        const RelationParams& r = model.relations[i];
        RelationGrad& g = grad->relations[i];
        g.head_weight += c * r.head_weight;
        g.head_bias += c * r.head_bias;
        g.scorer_weight += c * r.scorer_weight;
        g.scorer_bias += c * r.scorer_bias;
      }
    }
  }
  return result;
}

// ---------------------------------------------------------------------------
// Training loop

TrainResult train(const std::vector<Triple>& train_triples, const KnowledgeBase& kb,
                  std::shared_ptr<const TextEncoder> encoder, const TrainConfig& config) {
  if (train_triples.empty()) throw InvalidInputError("train: empty training set");
  if (kb.relations().empty()) throw InvalidInputError("train: KB has no relation catalog");
  for (const Triple& t : train_triples) {
    if (t.label != TripleLabel::kNormal) {
      throw InvalidInputError("train: training triples must all be NORMAL");
    }
    if (!kb.has_relation(t.relation_id)) {
      throw UnknownRelationError("train: relation not in catalog: " + t.relation_id);
    }
  }

  ModelConfig model_config;
  model_config.encoder = encoder->spec();
  model_config.dim_h = config.dim_h;
  model_config.heads = config.heads;
  for (const RelationDef& r : kb.relations()) model_config.relation_ids.push_back(r.relation_id);

  Rng rng(config.seed);
  Model model = Model::init(std::move(model_config), rng.next_u64());
  EncodedWorkspace workspace(std::move(encoder), config.dim_h);

  std::unordered_map<std::string, EncodedEntity> entities;
  auto encoded = [&](const std::string& id) -> const EncodedEntity* {
    auto it = entities.find(id);
    if (it == entities.end()) {
      it = entities.emplace(id, encode_entity(workspace, kb, id)).first;
    }
    return &it->second;
  };

  AdamOptimizer optimizer(config.learning_rate);
  std::vector<ParamView> params = param_views(model);
  ModelGrad grad = ModelGrad::zeros_like(model);
  std::vector<ParamView> grads = grad_views(grad);

  TrainResult result;
  std::vector<std::size_t> order(train_triples.size());
  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    const auto epoch_start = std::chrono::steady_clock::now();
    std::vector<Triple> negatives = generate_epoch_negatives(train_triples, kb, rng);
    std::iota(order.begin(), order.end(), std::size_t{0});
    rng.shuffle(order);

    double epoch_hinge_sum = 0.0;
    std::vector<EncodedTriplePair> batch;
    batch.reserve(static_cast<std::size_t>(config.batch_size));
    for (std::size_t start = 0; start < order.size();
         start += static_cast<std::size_t>(config.batch_size)) {
      const std::size_t end =
          std::min(order.size(), start + static_cast<std::size_t>(config.batch_size));
      batch.clear();
      for (std::size_t i = start; i < end; ++i) {
        const Triple& pos = train_triples[order[i]];
        const Triple& neg = negatives[order[i]];
        batch.push_back({model.relation_index(pos.relation_id), encoded(pos.e1),
                         encoded(pos.e2), encoded(neg.e1), encoded(neg.e2)});
      }
      BatchResult br =
          pair_batch_objective(model, workspace, batch, config.margin, config.l2_lambda, &grad);
      if (!std::isfinite(br.objective)) {
        throw NumericError("train: non-finite objective at epoch " + std::to_string(epoch) +
                           ", batch starting at pair " + std::to_string(start));
      }
      epoch_hinge_sum += br.hinge_sum;
      optimizer.step(params, grads);
    }

    const double wall =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - epoch_start).count();
    result.log.push_back(
        {epoch, epoch_hinge_sum / static_cast<double>(train_triples.size()), wall});
  }
  result.model = std::move(model);
  return result;
}

// ---------------------------------------------------------------------------
// Checkpointing

namespace {
constexpr char kModelMagic[8] = {'P', 'A', 'T', 'S', 'N', 'D', 'M', '1'};
constexpr std::uint32_t kModelVersion = 1;
}  // namespace

void save_checkpoint(const Model& model, const std::filesystem::path& path) {
  std::ostringstream buf(std::ios::binary);
  binser::Writer w(buf);
  w.magic(kModelMagic);
  w.u32(kModelVersion);
  w.u8(static_cast<std::uint8_t>(model.config.encoder.kind));
  w.u32(static_cast<std::uint32_t>(model.config.encoder.dim_f));
  w.u64(model.config.encoder.seed);
  w.u32(static_cast<std::uint32_t>(model.config.encoder.buckets));
  w.u32(static_cast<std::uint32_t>(model.config.dim_h));
  w.u32(static_cast<std::uint32_t>(model.config.heads));
  w.u32(static_cast<std::uint32_t>(model.config.relation_ids.size()));
  for (const std::string& rid : model.config.relation_ids) w.str(rid);
  w.mat(model.projection.weight);
  w.vec(model.projection.bias);
  for (const RelationParams& r : model.relations) {
    w.mat(r.head_weight);
    w.vec(r.head_bias);
    w.vec(r.scorer_weight);
    w.f64(r.scorer_bias);
  }
  write_file_atomic(path, buf.str());
}

Model load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open checkpoint: " + path.string());
  binser::Reader r(in, "checkpoint " + path.string());
  r.expect_magic(kModelMagic);
  const std::uint32_t version = r.u32();
  if (version != kModelVersion) {
    throw CheckpointError("checkpoint " + path.string() + ": incompatible version " +
                          std::to_string(version));
  }
  ModelConfig config;
  config.encoder.kind = static_cast<EncoderSpec::Kind>(r.u8());
  config.encoder.dim_f = static_cast<int>(r.u32());
  config.encoder.seed = r.u64();
  config.encoder.buckets = static_cast<int>(r.u32());
  config.dim_h = static_cast<int>(r.u32());
  config.heads = static_cast<int>(r.u32());
  const std::uint32_t n_relations = r.u32();
  for (std::uint32_t i = 0; i < n_relations; ++i) config.relation_ids.push_back(r.str());
  Projection projection;
  projection.weight = r.mat();
  projection.bias = r.vec();
  std::vector<RelationParams> relations;
  relations.reserve(n_relations);
  for (std::uint32_t i = 0; i < n_relations; ++i) {
    RelationParams rel;
    rel.head_weight = r.mat();
    rel.head_bias = r.vec();
    rel.scorer_weight = r.vec();
    rel.scorer_bias = r.f64();
    if (rel.head_weight.rows() != config.heads || rel.head_weight.cols() != config.dim_h ||
        rel.scorer_weight.size() != 2 * config.dim_h) {
      throw CheckpointError("checkpoint " + path.string() + ": parameter shape mismatch");
    }
    relations.push_back(std::move(rel));
  }
  return Model::assemble(std::move(config), std::move(projection), std::move(relations));
}

void save_training_log(const std::vector<EpochLog>& log, const std::filesystem::path& path) {
  std::ostringstream out;
  for (const EpochLog& entry : log) {
    nlohmann::json record = {
        {"epoch", entry.epoch}, {"mean_loss", entry.mean_loss}, {"wall_seconds", entry.wall_seconds}};
    out << record.dump() << "\n";
  }
  write_file_atomic(path, out.str());
}

}  // namespace patsnd
