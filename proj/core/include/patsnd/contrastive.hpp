#pragma once

#include <string>
#include <unordered_set>
#include <vector>

#include "patsnd/kb.hpp"
#include "patsnd/rng.hpp"

namespace patsnd {

enum class TripleLabel { kNormal, kPseudoNovel, kNovel };

const char* to_string(TripleLabel label);
TripleLabel triple_label_from_string(const std::string& text);

// The scored unit: two entities and their relation.
struct Triple {
  std::string e1;
  std::string relation_id;
  std::string e2;
  TripleLabel label = TripleLabel::kNormal;

  bool same_key(const Triple& other) const {
    return e1 == other.e1 && relation_id == other.relation_id && e2 == other.e2;
  }
};

// Membership set over (e1, relation, e2), ignoring labels.
class TripleSet {
 public:
  TripleSet() = default;
  explicit TripleSet(const std::vector<Triple>& triples);

  void insert(const Triple& t);
  bool contains(const Triple& t) const;
  std::size_t size() const { return keys_.size(); }

 private:
  static std::string key(const Triple& t);
  std::unordered_set<std::string> keys_;
};

inline constexpr int kMaxCorruptionAttempts = 100;

// Replaces one entity slot (side chosen uniformly) with a random KB entity
// distinct from both originals. When filter_train_set is set, corruptions that
// collide with a known-normal triple are rejected and resampled. Throws
// CorruptionExhaustedError after kMaxCorruptionAttempts failed draws.
Triple corrupt(const Triple& triple, const KnowledgeBase& kb, const TripleSet& train_set,
               Rng& rng, bool filter_train_set = true);

// One pseudo-novel triple per NORMAL input, freshly sampled on every call.
std::vector<Triple> generate_epoch_negatives(const std::vector<Triple>& train_triples,
                                             const KnowledgeBase& kb, Rng& rng,
                                             bool filter_train_set = true);

}  // namespace patsnd
