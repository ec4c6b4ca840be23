#include "patsnd/contrastive.hpp"

#include "patsnd/errors.hpp"

namespace patsnd {

const char* to_string(TripleLabel label) {
  switch (label) {
    case TripleLabel::kNormal: return "NORMAL";
    case TripleLabel::kPseudoNovel: return "PSEUDO_NOVEL";
    case TripleLabel::kNovel: return "NOVEL";
  }
  return "NORMAL";
}

TripleLabel triple_label_from_string(const std::string& text) {
  if (text == "NORMAL") return TripleLabel::kNormal;
  if (text == "PSEUDO_NOVEL") return TripleLabel::kPseudoNovel;
  if (text == "NOVEL") return TripleLabel::kNovel;
  throw LabelError("unknown label: " + text);
}

TripleSet::TripleSet(const std::vector<Triple>& triples) {
  for (const Triple& t : triples) insert(t);
}

std::string TripleSet::key(const Triple& t) {
  std::string k;
  k.reserve(t.e1.size() + t.relation_id.size() + t.e2.size() + 2);
  k += t.e1;
  k += '\x1f';
  k += t.relation_id;
  k += '\x1f';
  k += t.e2;
  return k;
}

void TripleSet::insert(const Triple& t) { keys_.insert(key(t)); }

bool TripleSet::contains(const Triple& t) const { return keys_.count(key(t)) != 0; }

Triple corrupt(const Triple& triple, const KnowledgeBase& kb, const TripleSet& train_set,
               Rng& rng, bool filter_train_set) {
  if (triple.label != TripleLabel::kNormal) {
    throw InvalidInputError("corrupt: input triple must be NORMAL");
  }
  if (kb.entity_count() < 3) {
    throw EmptyKbError("corrupt: KB must contain at least 3 entities");
  }
  for (int attempt = 0; attempt < kMaxCorruptionAttempts; ++attempt) {
    const bool replace_e1 = rng.coin();
    const std::string& replacement = kb.sample_entity(rng);
    if (replacement == triple.e1 || replacement == triple.e2) continue;
    Triple corrupted = triple;
    (replace_e1 ? corrupted.e1 : corrupted.e2) = replacement;
    if (filter_train_set && train_set.contains(corrupted)) continue;
    corrupted.label = TripleLabel::kPseudoNovel;
    return corrupted;
  }
  throw CorruptionExhaustedError("corrupt: no valid corruption found for (" + triple.e1 +
                                 ", " + triple.relation_id + ", " + triple.e2 + ") after " +
                                 std::to_string(kMaxCorruptionAttempts) + " attempts");
}

std::vector<Triple> generate_epoch_negatives(const std::vector<Triple>& train_triples,
                                             const KnowledgeBase& kb, Rng& rng,
                                             bool filter_train_set) {
  TripleSet train_set(train_triples);
  std::vector<Triple> negatives;
  negatives.reserve(train_triples.size());
  for (const Triple& t : train_triples) {
    negatives.push_back(corrupt(t, kb, train_set, rng, filter_train_set));
  }
  return negatives;
}

}  // namespace patsnd
