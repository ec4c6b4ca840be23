#include "patsnd/kb.hpp"

#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "patsnd/io.hpp"

namespace patsnd {

using nlohmann::json;

void KnowledgeBase::add_entity(EntityRecord record) {
  if (entities_.count(record.entity_id) != 0) {
    throw DuplicateKeyError("duplicate entity id: " + record.entity_id);
  }
  order_.push_back(record.entity_id);
  entities_.emplace(record.entity_id, std::move(record));
}

void KnowledgeBase::set_relations(std::vector<RelationDef> relations) {
  std::unordered_map<std::string, std::size_t> index;
  for (std::size_t i = 0; i < relations.size(); ++i) {
    if (!index.emplace(relations[i].relation_id, i).second) {
      throw DuplicateKeyError("duplicate relation id: " + relations[i].relation_id);
    }
  }
  relations_ = std::move(relations);
  relation_index_ = std::move(index);
}

bool KnowledgeBase::has_entity(const std::string& entity_id) const {
  return entities_.count(entity_id) != 0;
}

const EntityRecord& KnowledgeBase::entity(const std::string& entity_id) const {
  auto it = entities_.find(entity_id);
  if (it == entities_.end()) {
    throw MissingEntityError("entity not in KB: " + entity_id);
  }
  return it->second;
}

bool KnowledgeBase::has_relation(const std::string& relation_id) const {
  return relation_index_.count(relation_id) != 0;
}

const RelationDef& KnowledgeBase::relation(const std::string& relation_id) const {
  auto it = relation_index_.find(relation_id);
  if (it == relation_index_.end()) {
    throw UnknownRelationError("relation not in catalog: " + relation_id);
  }
  return relations_[it->second];
}

std::vector<PropertyValuePair> KnowledgeBase::background(
    const std::string& entity_id, std::size_t max_properties) const {
  const EntityRecord& rec = entity(entity_id);
  std::size_t n = std::min(rec.pairs.size(), max_properties);
  return std::vector<PropertyValuePair>(rec.pairs.begin(), rec.pairs.begin() + n);
}

const std::string& KnowledgeBase::sample_entity(Rng& rng) const {
  if (order_.empty()) throw EmptyKbError("cannot sample from an empty KB");
  return order_[rng.uniform_index(order_.size())];
}

EntityRecord make_entity_record(std::string entity_id, std::string label,
                                std::string description,
                                const std::vector<RawProperty>& properties) {
  EntityRecord rec;
  rec.entity_id = std::move(entity_id);
  rec.label = std::move(label);
  rec.description = std::move(description);
  rec.pairs.push_back({kLabelPropertyId, kLabelPropertyId, rec.label});
  if (!rec.description.empty()) {
    rec.pairs.push_back({kDescriptionPropertyId, kDescriptionPropertyId, rec.description});
  }
  for (const RawProperty& prop : properties) {
    for (const std::string& value : prop.values) {
      rec.pairs.push_back({prop.pid, prop.plabel, value});
    }
  }
  return rec;
}

namespace {

// Parses one JSONL file, calling fn(line_number, parsed). Line numbers are
// 1-based; blank lines are skipped.
template <typename Fn>
void for_each_jsonl(const std::filesystem::path& path, Fn&& fn) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open file: " + path.string());
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    json parsed = json::parse(line, nullptr, false);
    if (parsed.is_discarded()) {
      throw ParseError(path.string() + ":" + std::to_string(line_no) + ": invalid JSON");
    }
    fn(line_no, parsed);
  }
}

std::string require_string(const json& obj, const char* key,
                           const std::filesystem::path& path, std::size_t line_no) {
  auto it = obj.find(key);
  if (it == obj.end() || !it->is_string()) {
    throw ParseError(path.string() + ":" + std::to_string(line_no) +
                     ": missing or non-string field \"" + key + "\"");
  }
  return it->get<std::string>();
}

}  // namespace

KnowledgeBase load_kb(const std::filesystem::path& path) {
  KnowledgeBase kb;
  for_each_jsonl(path, [&](std::size_t line_no, const json& obj) {
    if (!obj.is_object()) {
      throw ParseError(path.string() + ":" + std::to_string(line_no) + ": expected a JSON object");
    }
    std::string id = require_string(obj, "id", path, line_no);
    std::string label = require_string(obj, "label", path, line_no);
    std::string description = obj.value("description", std::string());
    std::vector<RawProperty> props;
    if (auto it = obj.find("properties"); it != obj.end()) {
      if (!it->is_array()) {
        throw ParseError(path.string() + ":" + std::to_string(line_no) +
                         ": \"properties\" must be an array");
      }
      for (const json& p : *it) {
        RawProperty raw;
        raw.pid = require_string(p, "pid", path, line_no);
        raw.plabel = require_string(p, "plabel", path, line_no);
        auto vit = p.find("values");
        if (vit == p.end() || !vit->is_array()) {
          throw ParseError(path.string() + ":" + std::to_string(line_no) +
                           ": property \"" + raw.pid + "\" missing \"values\" array");
        }
        for (const json& v : *vit) {
          if (!v.is_string()) {
            throw ParseError(path.string() + ":" + std::to_string(line_no) +
                             ": non-string value under property \"" + raw.pid + "\"");
          }
          raw.values.push_back(v.get<std::string>());
        }
        props.push_back(std::move(raw));
      }
    }
    kb.add_entity(make_entity_record(std::move(id), std::move(label),
                                     std::move(description), props));
  });
  return kb;
}

std::vector<RelationDef> load_relations(const std::filesystem::path& path) {
  std::vector<RelationDef> out;
  std::unordered_map<std::string, std::size_t> seen;
  for_each_jsonl(path, [&](std::size_t line_no, const json& obj) {
    RelationDef def;
    def.relation_id = require_string(obj, "rid", path, line_no);
    def.label = require_string(obj, "label", path, line_no);
    def.description = obj.value("description", std::string());
    if (!seen.emplace(def.relation_id, line_no).second) {
      throw DuplicateKeyError(path.string() + ":" + std::to_string(line_no) +
                              ": duplicate relation id: " + def.relation_id);
    }
    out.push_back(std::move(def));
  });
  return out;
}

void save_kb(const std::filesystem::path& path, const KnowledgeBase& kb) {
  std::ostringstream out;
  for (const std::string& id : kb.entity_ids()) {
    const EntityRecord& rec = kb.entity(id);
    json props = json::array();
    // Re-group expanded pairs (skipping pseudo-pairs) back into one property
    // object per consecutive pid run, mirroring the input format.
    for (std::size_t i = 0; i < rec.pairs.size();) {
      const PropertyValuePair& pv = rec.pairs[i];
      if (pv.property_id == kLabelPropertyId || pv.property_id == kDescriptionPropertyId) {
        ++i;
        continue;
      }
      json values = json::array();
      std::size_t j = i;
      while (j < rec.pairs.size() && rec.pairs[j].property_id == pv.property_id &&
             rec.pairs[j].property_label == pv.property_label) {
        values.push_back(rec.pairs[j].value_text);
        ++j;
      }
      props.push_back({{"pid", pv.property_id}, {"plabel", pv.property_label}, {"values", values}});
      i = j;
    }
    json obj = {{"id", rec.entity_id},
                {"label", rec.label},
                {"description", rec.description},
                {"properties", props}};
    out << obj.dump() << "\n";
  }
  write_file_atomic(path, out.str());
}

void save_relations(const std::filesystem::path& path, const std::vector<RelationDef>& relations) {
  std::ostringstream out;
  for (const RelationDef& def : relations) {
    json obj = {{"rid", def.relation_id}, {"label", def.label}, {"description", def.description}};
    out << obj.dump() << "\n";
  }
  write_file_atomic(path, out.str());
}

}  // namespace patsnd
