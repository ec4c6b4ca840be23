// patsnd: command-line pipeline for knowledge-grounded semantic novelty
// detection. Subcommands: build-kb, build-dataset, train-relclf, train,
// score, explain, evaluate, gen-synthetic.
//
// Exit codes: 0 success, 1 runtime/data error, 2 usage error.

#include <cstdlib>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "patsnd/dsbuild.hpp"
#include "patsnd/encoder.hpp"
#include "patsnd/errors.hpp"
#include "patsnd/evaluation.hpp"
#include "patsnd/io.hpp"
#include "patsnd/kb.hpp"
#include "patsnd/relclf.hpp"
#include "patsnd/scoring.hpp"
#include "patsnd/synthetic.hpp"
#include "patsnd/training.hpp"

namespace {

using nlohmann::json;
using namespace patsnd;

struct EncoderFlags {
  std::string kind = "fallback";  // fallback | pretrained
  std::string embeddings;        // table path for pretrained
  int dim_f = kDefaultFallbackDimF;
  std::uint64_t seed = kDefaultEncoderSeed;
};

void add_encoder_flags(CLI::App* cmd, EncoderFlags& flags) {
  cmd->add_option("--encoder", flags.kind, "Text encoder: fallback|pretrained")
      ->check(CLI::IsMember({"fallback", "pretrained"}));
  cmd->add_option("--embeddings", flags.embeddings,
                  "Precomputed embedding table (JSON Lines), required for --encoder pretrained");
  cmd->add_option("--encoder-dim", flags.dim_f, "Fallback encoder output width");
  cmd->add_option("--encoder-seed", flags.seed, "Fallback encoder projection seed");
}

std::filesystem::path cache_path_for(const std::string& fingerprint) {
  const char* dir = std::getenv("PAT_SND_CACHE_DIR");
  if (dir == nullptr || *dir == '\0') return {};
  std::string name = fingerprint;
  for (char& c : name) {
    if (c == '/' || c == '\\' || c == ':' || c == ' ') c = '_';
  }
  return std::filesystem::path(dir) / (name + ".cache");
}

// Attaches the shared cache, restoring a persisted one when PAT_SND_CACHE_DIR
// is set. Returns the path to persist back to (empty when disabled).
std::filesystem::path attach_cache(const std::shared_ptr<TextEncoder>& encoder) {
  auto cache = std::make_shared<EmbeddingCache>();
  const std::filesystem::path path = cache_path_for(encoder->fingerprint());
  if (!path.empty() && std::filesystem::exists(path)) {
    cache->load(path, encoder->fingerprint());
  }
  encoder->set_cache(cache);
  return path;
}

void persist_cache(const TextEncoder& encoder, const std::filesystem::path& path) {
  if (path.empty() || !encoder.cache()) return;
  encoder.cache()->save(path, encoder.fingerprint());
}

std::shared_ptr<TextEncoder> build_encoder(const EncoderFlags& flags) {
  if (flags.kind == "pretrained") {
    if (flags.embeddings.empty()) {
      throw InvalidInputError("--encoder pretrained requires --embeddings");
    }
    return std::make_shared<PrecomputedEncoder>(flags.embeddings);
  }
  return std::make_shared<TrigramHashEncoder>(flags.dim_f, flags.seed);
}

// Rebuilds the encoder a checkpoint was trained with.
std::shared_ptr<TextEncoder> encoder_for_spec(const EncoderSpec& spec,
                                              const EncoderFlags& flags) {
  if (spec.kind == EncoderSpec::Kind::kTrigram) {
    return std::make_shared<TrigramHashEncoder>(spec.dim_f, spec.seed, spec.buckets);
  }
  if (flags.embeddings.empty()) {
    throw InvalidInputError(
        "model was trained with a precomputed encoder; supply --embeddings");
  }
  auto encoder = std::make_shared<PrecomputedEncoder>(flags.embeddings);
  check_encoder_matches(spec, *encoder);
  return encoder;
}

KnowledgeBase load_kb_with_relations(const std::string& kb_path,
                                     const std::string& relations_path) {
  KnowledgeBase kb = load_kb(kb_path);
  if (!relations_path.empty()) {
    kb.set_relations(load_relations(relations_path));
  }
  return kb;
}

std::unique_ptr<RelationPredictor> make_predictor(bool oracle, const std::string& relclf_path,
                                                  const ClassifierModel*& classifier_out,
                                                  std::unique_ptr<ClassifierModel>& classifier,
                                                  const TextEncoder& encoder) {
  if (oracle) {
    classifier_out = nullptr;
    return std::make_unique<OracleRelationPredictor>();
  }
  if (relclf_path.empty()) {
    throw InvalidInputError("supply --relclf CHECKPOINT or --oracle-relations");
  }
  classifier = std::make_unique<ClassifierModel>(load_classifier(relclf_path));
  classifier_out = classifier.get();
  return std::make_unique<ClassifierRelationPredictor>(*classifier, encoder);
}

// ---------------------------------------------------------------------------
// Subcommand bodies

int run_build_kb(const std::string& kb_path, const std::string& relations_path,
                 const std::string& out_path) {
  KnowledgeBase kb = load_kb_with_relations(kb_path, relations_path);
  std::size_t pair_total = 0;
  std::size_t pair_max = 0;
  for (const std::string& id : kb.entity_ids()) {
    const std::size_t n = kb.entity(id).pairs.size();
    pair_total += n;
    pair_max = std::max(pair_max, n);
  }
  json summary = {{"entities", kb.entity_count()},
                  {"relations", kb.relations().size()},
                  {"pairs_total", pair_total},
                  {"pairs_max_per_entity", pair_max}};
  if (out_path.empty()) {
    std::cout << summary.dump(2) << "\n";
  } else {
    write_file_atomic(out_path, summary.dump(2) + "\n");
  }
  return 0;
}

int run_build_dataset(const std::string& corpus_path, const std::string& kr_path,
                      const std::string& out_train, const std::string& out_pool,
                      double fraction, std::uint64_t seed, const std::string& from_xml,
                      const std::string& xml_relation, const std::string& xml_label,
                      const std::string& out_instances, const std::string& out_kb) {
  if (!from_xml.empty()) {
    XmlImportResult imported = import_annotation_xml(
        from_xml, xml_relation,
        xml_label.empty() ? TripleLabel::kNovel : triple_label_from_string(xml_label));
    if (out_instances.empty()) {
      throw InvalidInputError("--from-xml requires --out for the converted instances");
    }
    save_instances(out_instances, imported.instances);
    if (!out_kb.empty()) {
      KnowledgeBase additions;
      for (EntityRecord& rec : imported.entities) additions.add_entity(std::move(rec));
      save_kb(out_kb, additions);
    }
    std::cout << "imported " << imported.instances.size() << " instances, "
              << imported.entities.size() << " entities\n";
    return 0;
  }
  if (corpus_path.empty() || kr_path.empty()) {
    throw InvalidInputError("build-dataset needs --corpus and --kr-triples (or --from-xml)");
  }
  std::vector<CorpusSentence> corpus = load_corpus(corpus_path);
  std::vector<Triple> kr = load_kr_triples(kr_path);
  std::vector<FactInstance> instances = align(corpus, kr);
  Rng rng(seed);
  SplitResult result = split(instances, rng, fraction);
  if (result.warning) std::cerr << "warning: " << *result.warning << "\n";
  if (out_train.empty() || out_pool.empty()) {
    throw InvalidInputError("build-dataset needs --out-train and --out-pool");
  }
  save_instances(out_train, result.train);
  save_instances(out_pool, result.test_pool);
  std::cout << "aligned " << instances.size() << " instances; train " << result.train.size()
            << ", test pool " << result.test_pool.size() << " (fraction "
            << result.achieved_fraction << ")\n";
  return 0;
}

int run_train_relclf(const std::string& dataset_path, const std::string& relations_path,
                     const std::string& config_path, const std::string& out_path,
                     std::optional<std::uint64_t> seed, const EncoderFlags& encoder_flags,
                     const std::string& eval_dataset, const std::string& metrics_out) {
  std::vector<FactInstance> train_set = load_instances(dataset_path);
  std::vector<RelationDef> catalog = load_relations(relations_path);
  std::shared_ptr<TextEncoder> encoder = build_encoder(encoder_flags);
  const std::filesystem::path cache_file = attach_cache(encoder);

  ClassifierConfig config;
  if (!config_path.empty()) {
    TrainConfig tc = load_train_config(config_path);
    config.batch_size = tc.batch_size;
    config.learning_rate = tc.learning_rate;
    config.l2_lambda = tc.l2_lambda;
    config.epochs = tc.epochs;
    config.seed = tc.seed;
  }
  if (seed) config.seed = *seed;

  ClassifierModel model = train_relation_classifier(train_set, *encoder, catalog, config);
  save_classifier(model, out_path);

  json metrics;
  ClassifierMetrics train_metrics = evaluate_classifier(model, *encoder, train_set);
  metrics["train"] = {{"accuracy", train_metrics.accuracy}, {"macro_f1", train_metrics.macro_f1}};
  if (!eval_dataset.empty()) {
    ClassifierMetrics eval_metrics =
        evaluate_classifier(model, *encoder, load_instances(eval_dataset));
    metrics["eval"] = {{"accuracy", eval_metrics.accuracy}, {"macro_f1", eval_metrics.macro_f1}};
  }
  if (!metrics_out.empty()) {
    write_file_atomic(metrics_out, metrics.dump(2) + "\n");
  }
  std::cout << metrics.dump(2) << "\n";
  persist_cache(*encoder, cache_file);
  return 0;
}

int run_train(const std::string& dataset_path, const std::string& kb_path,
              const std::string& relations_path, const std::string& config_path,
              const std::string& out_path, const std::string& log_path,
              std::optional<std::uint64_t> seed, const EncoderFlags& encoder_flags) {
  KnowledgeBase kb = load_kb_with_relations(kb_path, relations_path);
  if (kb.relations().empty()) {
    throw InvalidInputError("train requires a relation catalog (--relations)");
  }
  std::vector<FactInstance> instances = load_instances(dataset_path);
  for (const FactInstance& instance : instances) {
    if (instance.label != TripleLabel::kNormal) {
      throw LabelError("training data must contain only NORMAL instances");
    }
  }
  std::vector<Triple> triples = extract_triples(instances);

  TrainConfig config;
  if (!config_path.empty()) config = load_train_config(config_path);
  if (seed) config.seed = *seed;

  std::shared_ptr<TextEncoder> encoder = build_encoder(encoder_flags);
  const std::filesystem::path cache_file = attach_cache(encoder);

  TrainResult result = train(triples, kb, encoder, config);
  save_checkpoint(result.model, out_path);
  if (!log_path.empty()) save_training_log(result.log, log_path);
  for (const EpochLog& entry : result.log) {
    std::cout << "epoch " << entry.epoch << ": mean_loss " << entry.mean_loss << " ("
              << entry.wall_seconds << "s)\n";
  }
  persist_cache(*encoder, cache_file);
  return 0;
}

int run_score(const std::string& dataset_path, const std::string& kb_path,
              const std::string& relations_path, const std::string& checkpoint_path,
              const std::string& relclf_path, bool oracle, const std::string& out_path,
              const EncoderFlags& encoder_flags) {
  KnowledgeBase kb = load_kb_with_relations(kb_path, relations_path);
  std::vector<FactInstance> instances = load_instances(dataset_path);
  Model model = load_checkpoint(checkpoint_path);
  std::shared_ptr<TextEncoder> encoder = encoder_for_spec(model.config.encoder, encoder_flags);
  const std::filesystem::path cache_file = attach_cache(encoder);
  TripleScorer scorer(model, encoder, kb);

  const ClassifierModel* classifier = nullptr;
  std::unique_ptr<ClassifierModel> classifier_storage;
  std::unique_ptr<RelationPredictor> predictor =
      make_predictor(oracle, relclf_path, classifier, classifier_storage, *encoder);

  std::ostringstream out;
  for (std::size_t i = 0; i < instances.size(); ++i) {
    const FactInstance& instance = instances[i];
    const std::string relation = predictor->predict(instance).relation_id;
    Triple triple{instance.e1.entity_id, relation, instance.e2.entity_id, instance.label};
    json record = {{"index", i},
                   {"e1", instance.e1.entity_id},
                   {"e2", instance.e2.entity_id},
                   {"relation", relation},
                   {"novelty_score", scorer.novelty_score(triple)},
                   {"label", to_string(instance.label)}};
    out << record.dump() << "\n";
  }
  if (out_path.empty()) {
    std::cout << out.str();
  } else {
    write_file_atomic(out_path, out.str());
  }
  persist_cache(*encoder, cache_file);
  return 0;
}

int run_explain(const std::string& dataset_path, const std::string& kb_path,
                const std::string& relations_path, const std::string& checkpoint_path,
                const std::string& relclf_path, bool oracle, const std::string& out_dir,
                const EncoderFlags& encoder_flags) {
  KnowledgeBase kb = load_kb_with_relations(kb_path, relations_path);
  std::vector<FactInstance> instances = load_instances(dataset_path);
  Model model = load_checkpoint(checkpoint_path);
  std::shared_ptr<TextEncoder> encoder = encoder_for_spec(model.config.encoder, encoder_flags);
  const std::filesystem::path cache_file = attach_cache(encoder);
  TripleScorer scorer(model, encoder, kb);

  const ClassifierModel* classifier = nullptr;
  std::unique_ptr<ClassifierModel> classifier_storage;
  std::unique_ptr<RelationPredictor> predictor =
      make_predictor(oracle, relclf_path, classifier, classifier_storage, *encoder);

  std::vector<AttentionReport> reports;
  reports.reserve(instances.size());
  for (std::size_t i = 0; i < instances.size(); ++i) {
    const FactInstance& instance = instances[i];
    const std::string relation = predictor->predict(instance).relation_id;
    Triple triple{instance.e1.entity_id, relation, instance.e2.entity_id, instance.label};
    AttentionReport report = scorer.explain(triple);
    report.instance_id = static_cast<int>(i);
    reports.push_back(std::move(report));
  }
  write_reports(reports, out_dir);
  std::cout << "wrote " << reports.size() << " reports to " << out_dir << "\n";
  persist_cache(*encoder, cache_file);
  return 0;
}

int run_evaluate(const std::string& dataset_path, const std::string& kb_path,
                 const std::string& relations_path, const std::string& checkpoint_path,
                 const std::string& relclf_path, bool oracle,
                 const std::string& annotations_path, int top_n, int random_trials,
                 std::uint64_t seed, const std::string& out_path,
                 const std::string& reports_dir, const EncoderFlags& encoder_flags) {
  KnowledgeBase kb = load_kb_with_relations(kb_path, relations_path);
  std::vector<FactInstance> instances = load_instances(dataset_path);
  Model model = load_checkpoint(checkpoint_path);
  std::shared_ptr<TextEncoder> encoder = encoder_for_spec(model.config.encoder, encoder_flags);
  const std::filesystem::path cache_file = attach_cache(encoder);
  TripleScorer scorer(model, encoder, kb);

  const ClassifierModel* classifier = nullptr;
  std::unique_ptr<ClassifierModel> classifier_storage;
  std::unique_ptr<RelationPredictor> predictor =
      make_predictor(oracle, relclf_path, classifier, classifier_storage, *encoder);

  std::vector<KeyPropertyAnnotation> annotations;
  if (!annotations_path.empty()) annotations = load_annotations(annotations_path);

  EvalOptions options;
  options.seed = seed;
  options.random_trials = random_trials;
  for (int n = 1; n <= std::max(3, top_n); ++n) options.ncs_top_ns.clear();
  for (int n = 1; n <= std::max(3, top_n); ++n) options.ncs_top_ns.push_back(n);

  EvalResult result = evaluate(instances, scorer, *predictor, annotations, options);

  json doc = {{"auc", result.auc},
              {"n_normal", result.n_normal},
              {"n_novel", result.n_novel},
              {"seed", seed}};
  if (!result.ncs.empty()) {
    json ncs_doc = json::object();
    for (const auto& [n, value] : result.ncs) ncs_doc[std::to_string(n)] = value;
    doc["ncs"] = ncs_doc;
  }
  if (!result.ncs_random.empty()) {
    json rnd_doc = json::object();
    for (const auto& [n, value] : result.ncs_random) rnd_doc[std::to_string(n)] = value;
    doc["ncs_random"] = rnd_doc;
  }
  if (out_path.empty()) {
    std::cout << doc.dump(2) << "\n";
  } else {
    write_file_atomic(out_path, doc.dump(2) + "\n");
    std::cout << doc.dump(2) << "\n";
  }
  if (!reports_dir.empty()) write_reports(result.reports, reports_dir);
  persist_cache(*encoder, cache_file);
  return 0;
}

int run_gen_synthetic(const std::string& out_dir, std::uint64_t seed, int entities_per_type,
                      int train_instances, int test_normal, int test_novel) {
  SyntheticConfig config;
  config.seed = seed;
  config.entities_per_type = entities_per_type;
  config.train_instances = train_instances;
  config.test_normal = test_normal;
  config.test_novel = test_novel;
  SyntheticBenchmark bench = generate_synthetic(config);
  write_synthetic(bench, out_dir);
  std::cout << "wrote benchmark to " << out_dir << ": " << bench.kb.entity_count()
            << " entities, " << bench.kb.relations().size() << " relations, "
            << bench.train.size() << " train, " << bench.test.size() << " test\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Knowledge-grounded semantic novelty detection over entity pairs"};
  app.require_subcommand(1);

  int exit_code = 0;

  // build-kb
  auto* build_kb_cmd = app.add_subcommand("build-kb", "Validate and index a KB file");
  struct {
    std::string kb, relations, out;
    std::uint64_t seed = 0;
  } bk;
  build_kb_cmd->add_option("--kb", bk.kb, "Entity KB (JSON Lines)")->required();
  build_kb_cmd->add_option("--relations", bk.relations, "Relation catalog (JSON Lines)");
  build_kb_cmd->add_option("--out", bk.out, "Summary output path (default: stdout)");
  build_kb_cmd->add_option("--seed", bk.seed, "Unused; accepted for uniformity");
  build_kb_cmd->callback([&] { exit_code = run_build_kb(bk.kb, bk.relations, bk.out); });

  // build-dataset
  auto* build_ds_cmd =
      app.add_subcommand("build-dataset", "Align a corpus with KR triples and split, or import XML annotations");
  struct {
    std::string corpus, kr, out_train, out_pool, from_xml, xml_relation, xml_label, out, out_kb;
    double fraction = 0.2;
    std::uint64_t seed = 0;
  } bd;
  build_ds_cmd->add_option("--corpus", bd.corpus, "Corpus sentences (JSON Lines)");
  build_ds_cmd->add_option("--kr-triples", bd.kr, "KR triples (JSON Lines)");
  build_ds_cmd->add_option("--out-train", bd.out_train, "Training instances output");
  build_ds_cmd->add_option("--out-pool", bd.out_pool, "Test pool instances output");
  build_ds_cmd->add_option("--fraction", bd.fraction, "Test pool fraction (default 0.2)");
  build_ds_cmd->add_option("--seed", bd.seed, "Split seed");
  build_ds_cmd->add_option("--from-xml", bd.from_xml, "Import an XML annotation file instead");
  build_ds_cmd->add_option("--relation", bd.xml_relation, "Default relation for XML instances");
  build_ds_cmd->add_option("--label", bd.xml_label, "Default label for XML instances (NOVEL)");
  build_ds_cmd->add_option("--out", bd.out, "Converted instances output (XML mode)");
  build_ds_cmd->add_option("--out-kb", bd.out_kb, "KB additions output (XML mode)");
  build_ds_cmd->callback([&] {
    exit_code = run_build_dataset(bd.corpus, bd.kr, bd.out_train, bd.out_pool, bd.fraction,
                                  bd.seed, bd.from_xml, bd.xml_relation, bd.xml_label, bd.out,
                                  bd.out_kb);
  });

  // train-relclf
  auto* train_rc_cmd = app.add_subcommand("train-relclf", "Train the relation classifier");
  struct {
    std::string dataset, relations, config, out, eval_dataset, metrics_out;
    std::optional<std::uint64_t> seed;
    EncoderFlags encoder;
  } trc;
  train_rc_cmd->add_option("--dataset", trc.dataset, "Labeled instances (JSON Lines)")->required();
  train_rc_cmd->add_option("--relations", trc.relations, "Relation catalog")->required();
  train_rc_cmd->add_option("--config", trc.config, "Training config file");
  train_rc_cmd->add_option("--out", trc.out, "Classifier checkpoint output")->required();
  train_rc_cmd->add_option("--seed", trc.seed, "Training seed (overrides config)");
  train_rc_cmd->add_option("--eval-dataset", trc.eval_dataset, "Held-out instances for metrics");
  train_rc_cmd->add_option("--metrics-out", trc.metrics_out, "Metrics JSON output");
  add_encoder_flags(train_rc_cmd, trc.encoder);
  train_rc_cmd->callback([&] {
    exit_code = run_train_relclf(trc.dataset, trc.relations, trc.config, trc.out, trc.seed,
                                 trc.encoder, trc.eval_dataset, trc.metrics_out);
  });

  // train
  auto* train_cmd = app.add_subcommand("train", "Train the novelty scorer");
  struct {
    std::string dataset, kb, relations, config, out, log;
    std::optional<std::uint64_t> seed;
    EncoderFlags encoder;
  } tr;
  train_cmd->add_option("--dataset", tr.dataset, "NORMAL training instances")->required();
  train_cmd->add_option("--kb", tr.kb, "Entity KB")->required();
  train_cmd->add_option("--relations", tr.relations, "Relation catalog")->required();
  train_cmd->add_option("--config", tr.config, "Training config file");
  train_cmd->add_option("--out", tr.out, "Model checkpoint output")->required();
  train_cmd->add_option("--log", tr.log, "Per-epoch training log (JSON Lines)");
  train_cmd->add_option("--seed", tr.seed, "Training seed (overrides config)");
  add_encoder_flags(train_cmd, tr.encoder);
  train_cmd->callback([&] {
    exit_code = run_train(tr.dataset, tr.kb, tr.relations, tr.config, tr.out, tr.log, tr.seed,
                          tr.encoder);
  });

  // score / explain / evaluate share flags
  struct ScoreArgs {
    std::string dataset, kb, relations, checkpoint, relclf, out, out_dir, annotations, reports_dir;
    bool oracle = false;
    int top_n = 3;
    int random_trials = 0;
    std::uint64_t seed = 0;
    EncoderFlags encoder;
  };

  auto* score_cmd = app.add_subcommand("score", "Emit novelty scores for instances");
  static ScoreArgs sc;
  score_cmd->add_option("--dataset", sc.dataset, "Instances to score")->required();
  score_cmd->add_option("--kb", sc.kb, "Entity KB")->required();
  score_cmd->add_option("--relations", sc.relations, "Relation catalog");
  score_cmd->add_option("--checkpoint", sc.checkpoint, "Model checkpoint")->required();
  score_cmd->add_option("--relclf", sc.relclf, "Relation classifier checkpoint");
  score_cmd->add_flag("--oracle-relations", sc.oracle, "Use gold relation labels");
  score_cmd->add_option("--out", sc.out, "Scores output (JSON Lines; default stdout)");
  score_cmd->add_option("--seed", sc.seed, "Unused; accepted for uniformity");
  add_encoder_flags(score_cmd, sc.encoder);
  score_cmd->callback([&] {
    exit_code = run_score(sc.dataset, sc.kb, sc.relations, sc.checkpoint, sc.relclf, sc.oracle,
                          sc.out, sc.encoder);
  });

  auto* explain_cmd = app.add_subcommand("explain", "Emit attention reports for instances");
  static ScoreArgs ex;
  explain_cmd->add_option("--dataset", ex.dataset, "Instances to explain")->required();
  explain_cmd->add_option("--kb", ex.kb, "Entity KB")->required();
  explain_cmd->add_option("--relations", ex.relations, "Relation catalog");
  explain_cmd->add_option("--checkpoint", ex.checkpoint, "Model checkpoint")->required();
  explain_cmd->add_option("--relclf", ex.relclf, "Relation classifier checkpoint");
  explain_cmd->add_flag("--oracle-relations", ex.oracle, "Use gold relation labels");
  explain_cmd->add_option("--out-dir", ex.out_dir, "Report directory")->required();
  explain_cmd->add_option("--seed", ex.seed, "Unused; accepted for uniformity");
  add_encoder_flags(explain_cmd, ex.encoder);
  explain_cmd->callback([&] {
    exit_code = run_explain(ex.dataset, ex.kb, ex.relations, ex.checkpoint, ex.relclf, ex.oracle,
                            ex.out_dir, ex.encoder);
  });

  auto* eval_cmd = app.add_subcommand("evaluate", "Compute AUC and NCS over a labeled test set");
  static ScoreArgs ev;
  eval_cmd->add_option("--dataset", ev.dataset, "Labeled test instances")->required();
  eval_cmd->add_option("--kb", ev.kb, "Entity KB")->required();
  eval_cmd->add_option("--relations", ev.relations, "Relation catalog");
  eval_cmd->add_option("--checkpoint", ev.checkpoint, "Model checkpoint")->required();
  eval_cmd->add_option("--relclf", ev.relclf, "Relation classifier checkpoint");
  eval_cmd->add_flag("--oracle-relations", ev.oracle, "Use gold relation labels");
  eval_cmd->add_option("--annotations", ev.annotations, "Key-property annotations (JSON Lines)");
  eval_cmd->add_option("--top-n", ev.top_n, "Largest NCS top-N to report (default 3)");
  eval_cmd->add_option("--random-trials", ev.random_trials,
                       "Shuffles for the random NCS baseline (0 = off)");
  eval_cmd->add_option("--seed", ev.seed, "Seed for the random baseline");
  eval_cmd->add_option("--out", ev.out, "Evaluation JSON output (default stdout)");
  eval_cmd->add_option("--reports-dir", ev.reports_dir, "Directory for attention reports");
  add_encoder_flags(eval_cmd, ev.encoder);
  eval_cmd->callback([&] {
    exit_code = run_evaluate(ev.dataset, ev.kb, ev.relations, ev.checkpoint, ev.relclf, ev.oracle,
                             ev.annotations, ev.top_n, ev.random_trials, ev.seed, ev.out,
                             ev.reports_dir, ev.encoder);
  });

  // gen-synthetic
  auto* gen_cmd = app.add_subcommand("gen-synthetic", "Generate the synthetic benchmark");
  struct {
    std::string out_dir;
    std::uint64_t seed = 7;
    int entities_per_type = 30;
    int train_instances = 2000;
    int test_normal = 200;
    int test_novel = 200;
  } gs;
  gen_cmd->add_option("--out-dir", gs.out_dir, "Benchmark output directory")->required();
  gen_cmd->add_option("--seed", gs.seed, "Generator seed");
  gen_cmd->add_option("--entities-per-type", gs.entities_per_type, "Entities per type (default 30)");
  gen_cmd->add_option("--train-instances", gs.train_instances, "Training instances (default 2000)");
  gen_cmd->add_option("--test-normal", gs.test_normal, "NORMAL test instances (default 200)");
  gen_cmd->add_option("--test-novel", gs.test_novel, "NOVEL test instances (default 200)");
  gen_cmd->callback([&] {
    exit_code = run_gen_synthetic(gs.out_dir, gs.seed, gs.entities_per_type, gs.train_instances,
                                  gs.test_normal, gs.test_novel);
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return exit_code;
}
