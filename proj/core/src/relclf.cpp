#include "patsnd/relclf.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>
#include <unordered_map>

#include "binser.hpp"
#include "patsnd/io.hpp"
#include "patsnd/rng.hpp"
#include "patsnd/training.hpp"

namespace patsnd {

RelationPrediction OracleRelationPredictor::predict(const FactInstance& instance) const {
  if (instance.relation_id.empty()) {
    throw LabelError("oracle relation mode requires gold relation labels");
  }
  RelationPrediction prediction;
  prediction.relation_id = instance.relation_id;
  prediction.probabilities = {{instance.relation_id, 1.0}};
  return prediction;
}

std::string marked_text(const std::string& text, Span e1, Span e2) {
  const int n = static_cast<int>(text.size());
  for (Span s : {e1, e2}) {
    if (s.start < 0 || s.end > n || s.start >= s.end) {
      throw SpanError("entity span [" + std::to_string(s.start) + ", " + std::to_string(s.end) +
                      ") out of bounds for text of length " + std::to_string(n));
    }
  }
  const Span& first = e1.start <= e2.start ? e1 : e2;
  const Span& second = e1.start <= e2.start ? e2 : e1;
  if (second.start < first.end) throw SpanError("entity spans overlap");
  const bool e1_first = e1.start <= e2.start;
  const char* open_first = e1_first ? "[E1] " : "[E2] ";
  const char* close_first = e1_first ? " [/E1]" : " [/E2]";
  const char* open_second = e1_first ? "[E2] " : "[E1] ";
  const char* close_second = e1_first ? " [/E2]" : " [/E1]";
  std::string out;
  out.reserve(text.size() + 24);
  out.append(text, 0, static_cast<std::size_t>(first.start));
  out += open_first;
  out.append(text, static_cast<std::size_t>(first.start),
             static_cast<std::size_t>(first.end - first.start));
  out += close_first;
  out.append(text, static_cast<std::size_t>(first.end),
             static_cast<std::size_t>(second.start - first.end));
  out += open_second;
  out.append(text, static_cast<std::size_t>(second.start),
             static_cast<std::size_t>(second.end - second.start));
  out += close_second;
  out.append(text, static_cast<std::size_t>(second.end), std::string::npos);
  return out;
}

namespace {

// Softmax probabilities in catalog order; argmax ties resolved by the lowest
// catalog index.
RelationPrediction prediction_from_logits(const Eigen::VectorXd& logits,
                                          const std::vector<std::string>& relation_ids) {
  Eigen::VectorXd shifted = logits.array() - logits.maxCoeff();
  Eigen::VectorXd probs = shifted.array().exp();
  probs /= probs.sum();
  RelationPrediction prediction;
  int best = 0;
  for (int i = 0; i < probs.size(); ++i) {
    prediction.probabilities.emplace_back(relation_ids[static_cast<std::size_t>(i)], probs[i]);
    if (probs[i] > probs[best]) best = i;
  }
  prediction.relation_id = relation_ids[static_cast<std::size_t>(best)];
  return prediction;
}

}  // namespace

ClassifierModel train_relation_classifier(const std::vector<FactInstance>& train,
                                          const TextEncoder& encoder,
                                          const std::vector<RelationDef>& catalog,
                                          const ClassifierConfig& config) {
  if (train.empty()) throw InvalidInputError("classifier training set is empty");
  if (catalog.empty()) throw InvalidInputError("classifier needs a non-empty relation catalog");

  std::unordered_map<std::string, int> relation_index;
  std::vector<std::string> relation_ids;
  for (const RelationDef& r : catalog) {
    relation_index.emplace(r.relation_id, static_cast<int>(relation_ids.size()));
    relation_ids.push_back(r.relation_id);
  }

  const int n_classes = static_cast<int>(relation_ids.size());
  const int dim_f = encoder.dim_f();
  const Eigen::Index n = static_cast<Eigen::Index>(train.size());

  // Encoder outputs are frozen, so features are computed once up front.
  Eigen::MatrixXd features(dim_f, n);
  std::vector<int> labels(train.size());
  for (Eigen::Index i = 0; i < n; ++i) {
    const FactInstance& instance = train[static_cast<std::size_t>(i)];
    auto it = relation_index.find(instance.relation_id);
    if (it == relation_index.end()) {
      throw LabelError("training instance carries a relation outside the catalog: " +
                       instance.relation_id);
    }
    labels[static_cast<std::size_t>(i)] = it->second;
    features.col(i) =
        encoder.encode(marked_text(instance.text, instance.e1.span, instance.e2.span));
  }

  ClassifierModel model;
  model.encoder_spec = encoder.spec();
  model.relation_ids = relation_ids;
  model.weight = Eigen::MatrixXd::Zero(n_classes, dim_f);
  model.bias = Eigen::VectorXd::Zero(n_classes);

  Rng rng(config.seed);
  AdamOptimizer optimizer(config.learning_rate);
  std::vector<ParamView> params = {{model.weight.data(), model.weight.size()},
                                   {model.bias.data(), model.bias.size()}};
  Eigen::MatrixXd d_weight = Eigen::MatrixXd::Zero(n_classes, dim_f);
  Eigen::VectorXd d_bias = Eigen::VectorXd::Zero(n_classes);
  std::vector<ParamView> grads = {{d_weight.data(), d_weight.size()},
                                  {d_bias.data(), d_bias.size()}};

  std::vector<std::size_t> order(train.size());
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    rng.shuffle(order);
    for (std::size_t start = 0; start < order.size();
         start += static_cast<std::size_t>(config.batch_size)) {
      const std::size_t end =
          std::min(order.size(), start + static_cast<std::size_t>(config.batch_size));
      const double inv_batch = 1.0 / static_cast<double>(end - start);
      d_weight.setZero();
      d_bias.setZero();
      for (std::size_t i = start; i < end; ++i) {
        const Eigen::Index col = static_cast<Eigen::Index>(order[i]);
        Eigen::VectorXd logits = model.weight * features.col(col) + model.bias;
        Eigen::VectorXd shifted = logits.array() - logits.maxCoeff();
        Eigen::VectorXd probs = shifted.array().exp();
        probs /= probs.sum();
        probs[labels[order[i]]] -= 1.0;  // d(cross-entropy)/d(logits)
        d_weight.noalias() += inv_batch * probs * features.col(col).transpose();
        d_bias.noalias() += inv_batch * probs;
      }
      if (config.l2_lambda > 0.0) {
        d_weight += 2.0 * config.l2_lambda * model.weight;
        d_bias += 2.0 * config.l2_lambda * model.bias;
      }
      optimizer.step(params, grads);
    }
  }
  return model;
}

RelationPrediction predict_relation(const ClassifierModel& model, const TextEncoder& encoder,
                                    const std::string& text, Span e1, Span e2) {
  Eigen::VectorXd f = encoder.encode(marked_text(text, e1, e2));
  if (f.size() != model.weight.cols()) {
    throw ShapeError("encoder width does not match classifier checkpoint");
  }
  Eigen::VectorXd logits = model.weight * f + model.bias;
  return prediction_from_logits(logits, model.relation_ids);
}

RelationPrediction ClassifierRelationPredictor::predict(const FactInstance& instance) const {
  return predict_relation(model_, encoder_, instance.text, instance.e1.span, instance.e2.span);
}

ClassifierMetrics evaluate_classifier(const ClassifierModel& model, const TextEncoder& encoder,
                                      const std::vector<FactInstance>& instances) {
  if (instances.empty()) throw InvalidInputError("classifier evaluation set is empty");
  std::unordered_map<std::string, int> index;
  for (std::size_t i = 0; i < model.relation_ids.size(); ++i) {
    index.emplace(model.relation_ids[i], static_cast<int>(i));
  }
  const int n_classes = static_cast<int>(model.relation_ids.size());
  std::vector<int> tp(n_classes, 0), fp(n_classes, 0), fn(n_classes, 0);
  std::vector<bool> present(n_classes, false);
  int correct = 0;
  for (const FactInstance& instance : instances) {
    auto it = index.find(instance.relation_id);
    if (it == index.end()) {
      throw LabelError("evaluation instance carries a relation outside the catalog: " +
                       instance.relation_id);
    }
    const int gold = it->second;
    present[static_cast<std::size_t>(gold)] = true;
    RelationPrediction pred =
        predict_relation(model, encoder, instance.text, instance.e1.span, instance.e2.span);
    const int hyp = index.at(pred.relation_id);
    if (hyp == gold) {
      ++correct;
      ++tp[static_cast<std::size_t>(gold)];
    } else {
      ++fp[static_cast<std::size_t>(hyp)];
      ++fn[static_cast<std::size_t>(gold)];
    }
  }
  ClassifierMetrics metrics;
  metrics.accuracy = static_cast<double>(correct) / static_cast<double>(instances.size());
  double f1_sum = 0.0;
  int f1_count = 0;
  for (int c = 0; c < n_classes; ++c) {
    if (!present[static_cast<std::size_t>(c)]) continue;
    const double tp_c = tp[static_cast<std::size_t>(c)];
    const double precision = tp_c + fp[static_cast<std::size_t>(c)] > 0
                                 ? tp_c / (tp_c + fp[static_cast<std::size_t>(c)])
                                 : 0.0;
    const double recall = tp_c + fn[static_cast<std::size_t>(c)] > 0
                              ? tp_c / (tp_c + fn[static_cast<std::size_t>(c)])
                              : 0.0;
    f1_sum += precision + recall > 0 ? 2.0 * precision * recall / (precision + recall) : 0.0;
    ++f1_count;
  }
  metrics.macro_f1 = f1_count > 0 ? f1_sum / f1_count : 0.0;
  return metrics;
}

// ---------------------------------------------------------------------------
// Checkpoint

namespace {
constexpr char kClassifierMagic[8] = {'P', 'A', 'T', 'S', 'N', 'D', 'C', '1'};
constexpr std::uint32_t kClassifierVersion = 1;
}  // namespace

void save_classifier(const ClassifierModel& model, const std::filesystem::path& path) {
  std::ostringstream buf(std::ios::binary);
  binser::Writer w(buf);
  w.magic(kClassifierMagic);
  w.u32(kClassifierVersion);
  w.u8(static_cast<std::uint8_t>(model.encoder_spec.kind));
  w.u32(static_cast<std::uint32_t>(model.encoder_spec.dim_f));
  w.u64(model.encoder_spec.seed);
  w.u32(static_cast<std::uint32_t>(model.encoder_spec.buckets));
  w.u32(static_cast<std::uint32_t>(model.relation_ids.size()));
  for (const std::string& rid : model.relation_ids) w.str(rid);
  w.mat(model.weight);
  w.vec(model.bias);
  write_file_atomic(path, buf.str());
}

ClassifierModel load_classifier(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open classifier checkpoint: " + path.string());
  binser::Reader r(in, "classifier checkpoint " + path.string());
  r.expect_magic(kClassifierMagic);
  const std::uint32_t version = r.u32();
  if (version != kClassifierVersion) {
    throw CheckpointError("classifier checkpoint " + path.string() + ": incompatible version " +
                          std::to_string(version));
  }
  ClassifierModel model;
  model.encoder_spec.kind = static_cast<EncoderSpec::Kind>(r.u8());
  model.encoder_spec.dim_f = static_cast<int>(r.u32());
  model.encoder_spec.seed = r.u64();
  model.encoder_spec.buckets = static_cast<int>(r.u32());
  const std::uint32_t n_relations = r.u32();
  for (std::uint32_t i = 0; i < n_relations; ++i) model.relation_ids.push_back(r.str());
  model.weight = r.mat();
  model.bias = r.vec();
  if (model.weight.rows() != static_cast<Eigen::Index>(n_relations) ||
      model.bias.size() != static_cast<Eigen::Index>(n_relations)) {
    throw CheckpointError("classifier checkpoint " + path.string() + ": shape mismatch");
  }
  return model;
}

}  // namespace patsnd
