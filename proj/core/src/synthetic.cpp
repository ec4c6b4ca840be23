#include "patsnd/synthetic.hpp"

#include <array>
#include <cstdio>
#include <unordered_set>

namespace patsnd {

namespace {

struct TypeSpec {
  const char* name;        // internal type key
  const char* type_value;  // "instance of" value text
};

// 12 entity types; indexes are referenced by the relation table below.
constexpr std::array<TypeSpec, 12> kTypes = {{
    {"sitcom", "television sitcom series"},
    {"actor", "stage and screen performer"},
    {"film", "feature length film"},
    {"director", "film and television director"},
    {"song", "recorded musical composition"},
    {"composer", "orchestral music composer"},
    {"city", "chartered municipality"},
    {"politician", "elected public official"},
    {"device", "patented mechanical device"},
    {"scientist", "laboratory research scientist"},
    {"athlete", "professional league athlete"},
    {"club", "competitive sports club"},
}};

struct RelationSpec {
  const char* rid;
  const char* label;
  const char* description;
  int e1_type;
  int e2_type;
  // Template with {1} and {2} placeholders; carries a relation-specific
  // keyword so relations are recoverable from text.
  const char* text_template;
};

constexpr std::array<RelationSpec, 6> kRelations = {{
    {"P161", "cast member", "actor in the subject production", 0, 1,
     "{1} stars {2} in a recurring role this season."},
    {"P57", "director", "director of the film or series", 2, 3,
     "{1} was directed by {2} over two hectic years."},
    {"P86", "composer", "author of the musical score", 4, 5,
     "The score of {1} was composed by {2} for the premiere."},
    {"P6", "head of government", "head of the municipal executive", 6, 7,
     "{1} is governed by mayor {2} since the last election."},
    {"P61", "discoverer or inventor", "who invented or first described the subject", 8, 9,
     "{1} was invented by {2} after a decade of experiments."},
    {"P54", "member of sports team", "sports club the athlete plays for", 10, 11,
     "{1} signed with {2} on a record transfer fee."},
}};

constexpr std::array<std::pair<const char*, const char*>, 3> kNoiseProperties = {{
    {"P9001", "registry code"},
    {"P9002", "catalog number"},
    {"P9003", "archive reference"},
}};

std::string entity_id(int index) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "E%04d", index);
  return buf;
}

std::string entity_label(int index) {
  char buf[24];
  std::snprintf(buf, sizeof buf, "Entity %04d", index);
  return buf;
}

std::string random_token(Rng& rng) {
  static constexpr char kAlphabet[] = "abcdefghijklmnopqrstuvwxyz0123456789";
  std::string token = "X-";
  for (int i = 0; i < 8; ++i) {
    token.push_back(kAlphabet[rng.uniform_index(sizeof(kAlphabet) - 1)]);
  }
  return token;
}

// Fills in the template and records the label spans.
FactInstance make_instance(const RelationSpec& relation, const std::string& e1_id,
                           const std::string& e1_label, const std::string& e2_id,
                           const std::string& e2_label, TripleLabel label) {
  const std::string tmpl = relation.text_template;
  FactInstance instance;
  const auto pos1 = tmpl.find("{1}");
  const auto pos2 = tmpl.find("{2}");
  std::string text = tmpl;
  // {1} precedes {2} in every template.
  text.replace(pos2, 3, e2_label);
  text.replace(pos1, 3, e1_label);
  const int start1 = static_cast<int>(pos1);
  const int end1 = start1 + static_cast<int>(e1_label.size());
  const int shift = static_cast<int>(e1_label.size()) - 3;
  const int start2 = static_cast<int>(pos2) + shift;
  const int end2 = start2 + static_cast<int>(e2_label.size());
  instance.text = std::move(text);
  instance.e1 = {e1_id, {start1, end1}};
  instance.e2 = {e2_id, {start2, end2}};
  instance.relation_id = relation.rid;
  instance.label = label;
  return instance;
}

}  // namespace

SyntheticBenchmark generate_synthetic(const SyntheticConfig& config) {
  if (config.entities_per_type < 2) {
    throw InvalidInputError("gen-synthetic: need at least 2 entities per type");
  }
  const int per_type = config.entities_per_type;
  const int n_types = static_cast<int>(kTypes.size());
  Rng rng(config.seed);

  SyntheticBenchmark bench;

  // Entities: per type, `per_type` of them, with the type carried by the
  // "instance of" property plus a few pure-noise properties.
  std::vector<std::vector<int>> by_type(static_cast<std::size_t>(n_types));
  int next_id = 0;
  for (int t = 0; t < n_types; ++t) {
    for (int i = 0; i < per_type; ++i, ++next_id) {
      by_type[static_cast<std::size_t>(t)].push_back(next_id);
      std::vector<RawProperty> props;
      props.push_back({kTypePropertyId, "instance of", {kTypes[static_cast<std::size_t>(t)].type_value}});
      for (int k = 0; k < config.noise_properties; ++k) {
        const auto& [pid, plabel] = kNoiseProperties[static_cast<std::size_t>(k) % kNoiseProperties.size()];
        props.push_back({pid, plabel, {random_token(rng)}});
      }
      bench.kb.add_entity(
          make_entity_record(entity_id(next_id), entity_label(next_id), "", props));
    }
  }

  std::vector<RelationDef> catalog;
  for (const RelationSpec& r : kRelations) {
    catalog.push_back({r.rid, r.label, r.description});
  }
  bench.kb.set_relations(std::move(catalog));

  // NORMAL pool: all compatible (relation, e1, e2) combinations, shuffled;
  // train and normal-test draws are disjoint by construction.
  struct Combo {
    int relation;
    int e1;
    int e2;
  };
  std::vector<Combo> combos;
  combos.reserve(static_cast<std::size_t>(kRelations.size()) *
                 static_cast<std::size_t>(per_type) * static_cast<std::size_t>(per_type));
  for (int r = 0; r < static_cast<int>(kRelations.size()); ++r) {
    for (int a : by_type[static_cast<std::size_t>(kRelations[static_cast<std::size_t>(r)].e1_type)]) {
      for (int b : by_type[static_cast<std::size_t>(kRelations[static_cast<std::size_t>(r)].e2_type)]) {
        combos.push_back({r, a, b});
      }
    }
  }
  const std::size_t needed =
      static_cast<std::size_t>(config.train_instances) + static_cast<std::size_t>(config.test_normal);
  if (combos.size() < needed) {
    throw InvalidInputError("gen-synthetic: not enough compatible entity pairs; increase entities_per_type");
  }
  rng.shuffle(combos);

  auto emit_normal = [&](const Combo& combo) {
    const RelationSpec& rel = kRelations[static_cast<std::size_t>(combo.relation)];
    return make_instance(rel, entity_id(combo.e1), entity_label(combo.e1), entity_id(combo.e2),
                         entity_label(combo.e2), TripleLabel::kNormal);
  };
  std::size_t cursor = 0;
  for (int i = 0; i < config.train_instances; ++i, ++cursor) {
    bench.train.push_back(emit_normal(combos[cursor]));
  }
  std::vector<FactInstance> test;
  for (int i = 0; i < config.test_normal; ++i, ++cursor) {
    test.push_back(emit_normal(combos[cursor]));
  }

  // NOVEL: replace one side of a compatible pair with an entity of a wrong
  // type, so the instance violates the compatibility table by construction.
  std::unordered_set<std::string> seen_novel;
  while (static_cast<int>(seen_novel.size()) < config.test_novel) {
    const int r = static_cast<int>(rng.uniform_index(kRelations.size()));
    const RelationSpec& rel = kRelations[static_cast<std::size_t>(r)];
    const bool corrupt_e1 = rng.coin();
    const int good_type = corrupt_e1 ? rel.e1_type : rel.e2_type;
    int wrong_type = static_cast<int>(rng.uniform_index(static_cast<std::size_t>(n_types - 1)));
    if (wrong_type >= good_type) ++wrong_type;
    const auto& wrong_pool = by_type[static_cast<std::size_t>(wrong_type)];
    const int imposter = wrong_pool[rng.uniform_index(wrong_pool.size())];
    const auto& e1_pool = by_type[static_cast<std::size_t>(rel.e1_type)];
    const auto& e2_pool = by_type[static_cast<std::size_t>(rel.e2_type)];
    const int e1 = corrupt_e1 ? imposter : e1_pool[rng.uniform_index(e1_pool.size())];
    const int e2 = corrupt_e1 ? e2_pool[rng.uniform_index(e2_pool.size())] : imposter;
    const std::string key = std::to_string(r) + ":" + std::to_string(e1) + ":" + std::to_string(e2);
    if (!seen_novel.insert(key).second) continue;
    test.push_back(make_instance(rel, entity_id(e1), entity_label(e1), entity_id(e2),
                                 entity_label(e2), TripleLabel::kNovel));
  }

  rng.shuffle(test);
  bench.test = std::move(test);
  for (std::size_t i = 0; i < bench.test.size(); ++i) {
    if (bench.test[i].label == TripleLabel::kNovel) {
      bench.annotations.push_back(
          {static_cast<int>(i), {kTypePropertyId}, {kTypePropertyId}});
    }
  }
  return bench;
}

void write_synthetic(const SyntheticBenchmark& benchmark, const std::filesystem::path& directory) {
  std::filesystem::create_directories(directory);
  save_kb(directory / "kb.jsonl", benchmark.kb);
  save_relations(directory / "relations.jsonl", benchmark.kb.relations());
  save_instances(directory / "train.jsonl", benchmark.train);
  save_instances(directory / "test.jsonl", benchmark.test);
  save_annotations(directory / "annotations.jsonl", benchmark.annotations);
}

}  // namespace patsnd
