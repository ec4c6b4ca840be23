#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "patsnd/contrastive.hpp"
#include "patsnd/kb.hpp"
#include "patsnd/rng.hpp"

namespace patsnd {

// Half-open character offsets [start, end).
struct Span {
  int start = 0;
  int end = 0;
  bool operator==(const Span&) const = default;
};

struct Mention {
  std::string entity_id;
  Span span;
};

struct CorpusSentence {
  std::string text;
  std::vector<Mention> mentions;
};

struct EntityMention {
  std::string entity_id;
  Span span;
};

// One labeled factual text about an entity pair; the canonical dataset unit.
struct FactInstance {
  std::string text;
  EntityMention e1;
  EntityMention e2;
  std::string relation_id;
  TripleLabel label = TripleLabel::kNormal;
};

Triple to_triple(const FactInstance& instance);
// Unique (e1, relation, e2) keys in first-seen order.
std::vector<Triple> extract_triples(const std::vector<FactInstance>& instances);

// Throws SpanError when spans are out of bounds or overlap.
void validate_sentence(const CorpusSentence& sentence);

// Distant supervision: for each ordered entity pair co-occurring in a
// sentence, emit one NORMAL instance when the pair matches exactly one KR
// relation; pairs matching several relations are dropped as ambiguous.
// Output order follows corpus order; spans point at each entity's first
// mention.
std::vector<FactInstance> align(const std::vector<CorpusSentence>& corpus,
                                const std::vector<Triple>& kr_triples);

struct SplitResult {
  std::vector<FactInstance> train;
  std::vector<FactInstance> test_pool;
  double achieved_fraction = 0.0;
  std::optional<std::string> warning;
};

// Splits so that no text and no unordered entity pair crosses the parts:
// greedy assignment of connected components (instances linked by shared text
// or shared unordered pair), deterministic given the rng seed. When the
// requested fraction is unattainable the achieved fraction is reported with a
// warning instead of failing.
SplitResult split(const std::vector<FactInstance>& instances, Rng& rng,
                  double test_pool_fraction);

// ---------------------------------------------------------------------------
// File formats

// Corpus: JSON Lines {"text": str, "mentions": [{"id", "start", "end"}]}
std::vector<CorpusSentence> load_corpus(const std::filesystem::path& path);

// Instances: JSON Lines {"text", "e1": {"id","start","end"}, "e2": {...},
// "relation", "label"}
std::vector<FactInstance> load_instances(const std::filesystem::path& path);
void save_instances(const std::filesystem::path& path,
                    const std::vector<FactInstance>& instances);

// KR triples: JSON Lines {"e1": str, "relation": str, "e2": str}
std::vector<Triple> load_kr_triples(const std::filesystem::path& path);
void save_kr_triples(const std::filesystem::path& path, const std::vector<Triple>& triples);

// Importer for the XML annotation format: <instance> elements carrying a
// <text> with inline <e1>/<e2> spans, per-entity blocks with id, label,
// description and a "pid || plabel || value" property list (JSON-style arrays
// for multi-valued properties). Relation and label may come from optional
// <relation>/<label> elements or the supplied defaults. Produces instances in
// the canonical format plus the annotated entities for KB inclusion.
struct XmlImportResult {
  std::vector<FactInstance> instances;
  std::vector<EntityRecord> entities;
};
XmlImportResult import_annotation_xml(const std::filesystem::path& path,
                                      const std::string& default_relation = "",
                                      TripleLabel default_label = TripleLabel::kNovel);

}  // namespace patsnd
