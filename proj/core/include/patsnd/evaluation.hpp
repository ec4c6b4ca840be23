#pragma once

#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "patsnd/dsbuild.hpp"
#include "patsnd/pat.hpp"
#include "patsnd/relclf.hpp"
#include "patsnd/rng.hpp"
#include "patsnd/scoring.hpp"

namespace patsnd {

// Area under the ROC curve over novelty scores (higher = more novel) with
// NOVEL as the positive class: the fraction of (novel, normal) pairs where
// the novel score is strictly higher, ties counted 0.5. Computed via average
// ranks with exact integer arithmetic, so it matches brute-force pair
// counting bit-for-bit. Throws UndefinedMetricError unless both classes are
// present.
double auc(std::span<const double> novelty_scores, std::span<const TripleLabel> labels);

// Human-annotated properties that explain why an instance is novel.
struct KeyPropertyAnnotation {
  int instance_id = -1;
  std::vector<std::string> key_properties_e1;
  std::vector<std::string> key_properties_e2;
};

// Novelty Characterization Score: per instance, 0.5 credit when any key
// property of e1 appears among the top-N ranked properties of e1, plus 0.5
// likewise for e2; averaged over instances. Reports and annotations are
// matched by instance id; a report without an annotation is an alignment
// error.
double ncs(const std::vector<AttentionReport>& reports,
           const std::vector<KeyPropertyAnnotation>& annotations, int top_n);

// NCS of a random ranker: per trial each entity's property list is uniformly
// shuffled before taking the top-N; returns the mean over trials.
double random_ncs_baseline(const std::vector<AttentionReport>& reports,
                           const std::vector<KeyPropertyAnnotation>& annotations, int top_n,
                           Rng& rng, int trials);

struct EvalOptions {
  std::vector<int> ncs_top_ns = {1, 2, 3};
  int random_trials = 0;  // 0 disables the random baseline
  std::uint64_t seed = 0;
};

struct EvalResult {
  double auc = 0.0;
  std::map<int, double> ncs;         // top-N -> score, when annotations given
  std::map<int, double> ncs_random;  // top-N -> baseline, when trials > 0
  std::vector<double> scores;        // per-instance novelty scores
  std::vector<std::string> relations_used;
  std::vector<AttentionReport> reports;  // for annotated instances
  int n_normal = 0;
  int n_novel = 0;
};

// Full evaluation pass: relation prediction (classifier or oracle), novelty
// scoring, AUC, and NCS plus attention reports for annotated instances.
// Instance ids are the 0-based positions in `instances`.
EvalResult evaluate(const std::vector<FactInstance>& instances, TripleScorer& scorer,
                    const RelationPredictor& predictor,
                    const std::vector<KeyPropertyAnnotation>& annotations,
                    const EvalOptions& options);

// Annotations: JSON Lines {"instance": int, "key_props_e1": [...], "key_props_e2": [...]}
std::vector<KeyPropertyAnnotation> load_annotations(const std::filesystem::path& path);
void save_annotations(const std::filesystem::path& path,
                      const std::vector<KeyPropertyAnnotation>& annotations);

// One JSON document per report: entity labels plus ranked pairs with
// weights as percentages.
std::string report_to_json(const AttentionReport& report);
void write_reports(const std::vector<AttentionReport>& reports,
                   const std::filesystem::path& directory);

}  // namespace patsnd
