#pragma once

#include <cstddef>
#include <filesystem>
#include <string>
#include <unordered_map>
#include <vector>

#include "patsnd/errors.hpp"
#include "patsnd/rng.hpp"

namespace patsnd {

// Property ids reserved for the pseudo-pairs injected at load time.
inline constexpr const char* kLabelPropertyId = "label";
inline constexpr const char* kDescriptionPropertyId = "description";

// Cap on the background list returned per entity; keeps attention tensors
// bounded. Pseudo-pairs come first and survive truncation.
inline constexpr std::size_t kMaxBackgroundProperties = 64;

struct PropertyValuePair {
  std::string property_id;
  std::string property_label;
  std::string value_text;

  bool operator==(const PropertyValuePair&) const = default;
};

struct EntityRecord {
  std::string entity_id;
  std::string label;
  std::string description;  // may be empty
  // Full pair list: label pseudo-pair, description pseudo-pair (when the
  // description is non-empty), then source properties in file order with
  // multi-valued properties expanded one pair per value.
  std::vector<PropertyValuePair> pairs;
};

struct RelationDef {
  std::string relation_id;
  std::string label;
  std::string description;
};

// Immutable after load; safe for concurrent reads.
class KnowledgeBase {
 public:
  void add_entity(EntityRecord record);
  void set_relations(std::vector<RelationDef> relations);

  bool has_entity(const std::string& entity_id) const;
  const EntityRecord& entity(const std::string& entity_id) const;
  std::size_t entity_count() const { return order_.size(); }
  // Entity ids in insertion order.
  const std::vector<std::string>& entity_ids() const { return order_; }

  const std::vector<RelationDef>& relations() const { return relations_; }
  bool has_relation(const std::string& relation_id) const;
  const RelationDef& relation(const std::string& relation_id) const;

  // Full pair list for the entity, pseudo-pairs first, truncated to
  // max_properties entries.
  std::vector<PropertyValuePair> background(
      const std::string& entity_id,
      std::size_t max_properties = kMaxBackgroundProperties) const;

  // Uniform draw over all entity ids; deterministic given the rng seed.
  const std::string& sample_entity(Rng& rng) const;

 private:
  std::vector<std::string> order_;
  std::unordered_map<std::string, EntityRecord> entities_;
  std::vector<RelationDef> relations_;
  std::unordered_map<std::string, std::size_t> relation_index_;
};

// Builds an EntityRecord from raw parts: prepends the label/description
// pseudo-pairs and expands each (pid, plabel, values) group into one pair per
// value, preserving source order.
struct RawProperty {
  std::string pid;
  std::string plabel;
  std::vector<std::string> values;
};
EntityRecord make_entity_record(std::string entity_id, std::string label,
                                std::string description,
                                const std::vector<RawProperty>& properties);

// Loads the JSON Lines KB file, one entity per line:
//   {"id": str, "label": str, "description": str,
//    "properties": [{"pid": str, "plabel": str, "values": [str, ...]}]}
KnowledgeBase load_kb(const std::filesystem::path& path);

// Loads the JSON Lines relation catalog: {"rid": str, "label": str, "description": str}
std::vector<RelationDef> load_relations(const std::filesystem::path& path);

void save_kb(const std::filesystem::path& path, const KnowledgeBase& kb);
void save_relations(const std::filesystem::path& path, const std::vector<RelationDef>& relations);

}  // namespace patsnd
