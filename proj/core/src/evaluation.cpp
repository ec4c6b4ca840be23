#include "patsnd/evaluation.hpp"

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <numeric>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include <nlohmann/json.hpp>

#include "patsnd/io.hpp"

namespace patsnd {

using nlohmann::json;

double auc(std::span<const double> novelty_scores, std::span<const TripleLabel> labels) {
  if (novelty_scores.size() != labels.size()) {
    throw InvalidInputError("auc: score/label count mismatch");
  }
  std::int64_t n_novel = 0;
  std::int64_t n_normal = 0;
  for (TripleLabel label : labels) {
    if (label == TripleLabel::kNovel) ++n_novel;
    else if (label == TripleLabel::kNormal) ++n_normal;
    else throw InvalidInputError("auc: labels must be NORMAL or NOVEL");
  }
  if (n_novel == 0 || n_normal == 0) {
    throw UndefinedMetricError("auc undefined: both classes must be present");
  }

  std::vector<std::size_t> order(novelty_scores.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return novelty_scores[a] < novelty_scores[b];
  });

  // Twice the rank sum of positives stays integral under average tie ranks,
  // which keeps the statistic exact.
  std::int64_t twice_rank_sum = 0;
  std::size_t i = 0;
  while (i < order.size()) {
    std::size_t j = i;
    while (j + 1 < order.size() &&
           novelty_scores[order[j + 1]] == novelty_scores[order[i]]) {
      ++j;
    }
    // Ranks i+1 .. j+1 share the average rank; doubled it is (i+1) + (j+1).
    const std::int64_t twice_avg_rank = static_cast<std::int64_t>(i + 1 + j + 1);
    for (std::size_t k = i; k <= j; ++k) {
      if (labels[order[k]] == TripleLabel::kNovel) twice_rank_sum += twice_avg_rank;
    }
    i = j + 1;
  }
  const std::int64_t numerator = twice_rank_sum - n_novel * (n_novel + 1);
  return static_cast<double>(numerator) / static_cast<double>(2 * n_novel * n_normal);
}

namespace {

bool top_n_hit(const std::vector<RankedPair>& ranked, const std::vector<std::string>& keys,
               int top_n) {
  const int limit = std::min<int>(top_n, static_cast<int>(ranked.size()));
  for (int i = 0; i < limit; ++i) {
    const std::string& pid = ranked[static_cast<std::size_t>(i)].pair.property_id;
    if (std::find(keys.begin(), keys.end(), pid) != keys.end()) return true;
  }
  return false;
}

const KeyPropertyAnnotation& annotation_for(
    const std::unordered_map<int, const KeyPropertyAnnotation*>& by_id, int instance_id) {
  auto it = by_id.find(instance_id);
  if (it == by_id.end()) {
    throw AlignmentError("no key-property annotation for instance " +
                         std::to_string(instance_id));
  }
  return *it->second;
}

std::unordered_map<int, const KeyPropertyAnnotation*> index_annotations(
    const std::vector<KeyPropertyAnnotation>& annotations) {
  std::unordered_map<int, const KeyPropertyAnnotation*> by_id;
  for (const KeyPropertyAnnotation& a : annotations) {
    if (a.key_properties_e1.empty() || a.key_properties_e2.empty()) {
      throw InvalidInputError("annotation for instance " + std::to_string(a.instance_id) +
                              " has an empty key property set");
    }
    if (!by_id.emplace(a.instance_id, &a).second) {
      throw DuplicateKeyError("duplicate annotation for instance " +
                              std::to_string(a.instance_id));
    }
  }
  return by_id;
}

}  // namespace

double ncs(const std::vector<AttentionReport>& reports,
           const std::vector<KeyPropertyAnnotation>& annotations, int top_n) {
  if (reports.empty()) throw InvalidInputError("ncs: no reports");
  if (top_n < 1) throw InvalidInputError("ncs: top_n must be >= 1");
  auto by_id = index_annotations(annotations);
  double total = 0.0;
  for (const AttentionReport& report : reports) {
    const KeyPropertyAnnotation& ann = annotation_for(by_id, report.instance_id);
    double score = 0.0;
    if (top_n_hit(report.entity1.ranked, ann.key_properties_e1, top_n)) score += 0.5;
    if (top_n_hit(report.entity2.ranked, ann.key_properties_e2, top_n)) score += 0.5;
    total += score;
  }
  return total / static_cast<double>(reports.size());
}

double random_ncs_baseline(const std::vector<AttentionReport>& reports,
                           const std::vector<KeyPropertyAnnotation>& annotations, int top_n,
                           Rng& rng, int trials) {
  if (trials < 1) throw InvalidInputError("random_ncs_baseline: trials must be >= 1");
  if (reports.empty()) throw InvalidInputError("random_ncs_baseline: no reports");
  if (top_n < 1) throw InvalidInputError("random_ncs_baseline: top_n must be >= 1");
  auto by_id = index_annotations(annotations);

  auto shuffled_hit = [&](const std::vector<RankedPair>& ranked,
                          const std::vector<std::string>& keys) {
    std::vector<const std::string*> pids;
    pids.reserve(ranked.size());
    for (const RankedPair& rp : ranked) pids.push_back(&rp.pair.property_id);
    rng.shuffle(pids);
    const int limit = std::min<int>(top_n, static_cast<int>(pids.size()));
    for (int i = 0; i < limit; ++i) {
      if (std::find(keys.begin(), keys.end(), *pids[static_cast<std::size_t>(i)]) != keys.end()) {
        return true;
      }
    }
    return false;
  };

  double total = 0.0;
  for (int t = 0; t < trials; ++t) {
    for (const AttentionReport& report : reports) {
      const KeyPropertyAnnotation& ann = annotation_for(by_id, report.instance_id);
      double score = 0.0;
      if (shuffled_hit(report.entity1.ranked, ann.key_properties_e1)) score += 0.5;
      if (shuffled_hit(report.entity2.ranked, ann.key_properties_e2)) score += 0.5;
      total += score;
    }
  }
  return total / (static_cast<double>(trials) * static_cast<double>(reports.size()));
}

EvalResult evaluate(const std::vector<FactInstance>& instances, TripleScorer& scorer,
                    const RelationPredictor& predictor,
                    const std::vector<KeyPropertyAnnotation>& annotations,
                    const EvalOptions& options) {
  if (instances.empty()) throw InvalidInputError("evaluate: empty test set");
  EvalResult result;
  result.scores.reserve(instances.size());
  std::vector<TripleLabel> labels;
  labels.reserve(instances.size());

  std::unordered_set<int> annotated_ids;
  for (const KeyPropertyAnnotation& a : annotations) annotated_ids.insert(a.instance_id);

  for (std::size_t i = 0; i < instances.size(); ++i) {
    const FactInstance& instance = instances[i];
    const std::string relation = predictor.predict(instance).relation_id;
    Triple triple{instance.e1.entity_id, relation, instance.e2.entity_id, instance.label};
    result.scores.push_back(scorer.novelty_score(triple));
    result.relations_used.push_back(relation);
    labels.push_back(instance.label);
    if (instance.label == TripleLabel::kNovel) ++result.n_novel;
    else ++result.n_normal;
    if (annotated_ids.count(static_cast<int>(i)) != 0) {
      AttentionReport report = scorer.explain(triple);
      report.instance_id = static_cast<int>(i);
      result.reports.push_back(std::move(report));
    }
  }
  result.auc = auc(result.scores, labels);

  if (!result.reports.empty()) {
    Rng rng(options.seed);
    for (int top_n : options.ncs_top_ns) {
      result.ncs[top_n] = ncs(result.reports, annotations, top_n);
      if (options.random_trials > 0) {
        result.ncs_random[top_n] =
            random_ncs_baseline(result.reports, annotations, top_n, rng, options.random_trials);
      }
    }
  }
  return result;
}

// ---------------------------------------------------------------------------
// Annotation and report files

std::vector<KeyPropertyAnnotation> load_annotations(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open annotations: " + path.string());
  std::vector<KeyPropertyAnnotation> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    json obj = json::parse(line, nullptr, false);
    if (obj.is_discarded() || !obj.contains("instance") || !obj.contains("key_props_e1") ||
        !obj.contains("key_props_e2")) {
      throw ParseError(path.string() + ":" + std::to_string(line_no) +
                       ": expected {\"instance\", \"key_props_e1\", \"key_props_e2\"}");
    }
    KeyPropertyAnnotation ann;
    ann.instance_id = obj["instance"].get<int>();
    for (const json& p : obj["key_props_e1"]) ann.key_properties_e1.push_back(p.get<std::string>());
    for (const json& p : obj["key_props_e2"]) ann.key_properties_e2.push_back(p.get<std::string>());
    if (ann.key_properties_e1.empty() || ann.key_properties_e2.empty()) {
      throw ParseError(path.string() + ":" + std::to_string(line_no) +
                       ": key property sets must be non-empty");
    }
    out.push_back(std::move(ann));
  }
  return out;
}

void save_annotations(const std::filesystem::path& path,
                      const std::vector<KeyPropertyAnnotation>& annotations) {
  std::ostringstream out;
  for (const KeyPropertyAnnotation& ann : annotations) {
    json obj = {{"instance", ann.instance_id},
                {"key_props_e1", ann.key_properties_e1},
                {"key_props_e2", ann.key_properties_e2}};
    out << obj.dump() << "\n";
  }
  write_file_atomic(path, out.str());
}

namespace {

json entity_attention_to_json(const EntityAttention& entity) {
  json ranked = json::array();
  for (const RankedPair& rp : entity.ranked) {
    ranked.push_back({{"rank", rp.rank},
                      {"property_id", rp.pair.property_id},
                      {"property_label", rp.pair.property_label},
                      {"value", rp.pair.value_text},
                      {"weight_pct", rp.weight * 100.0}});
  }
  return {{"id", entity.entity_id}, {"label", entity.label}, {"pairs", ranked}};
}

}  // namespace

std::string report_to_json(const AttentionReport& report) {
  json obj = {{"instance", report.instance_id},
              {"relation", report.relation_id},
              {"novelty_score", report.novelty_score},
              {"e1", entity_attention_to_json(report.entity1)},
              {"e2", entity_attention_to_json(report.entity2)}};
  return obj.dump(2);
}

void write_reports(const std::vector<AttentionReport>& reports,
                   const std::filesystem::path& directory) {
  std::filesystem::create_directories(directory);
  for (const AttentionReport& report : reports) {
    const std::filesystem::path file =
        directory / ("instance_" + std::to_string(report.instance_id) + ".json");
    write_file_atomic(file, report_to_json(report));
  }
}

}  // namespace patsnd
