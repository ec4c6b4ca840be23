#include <doctest.h>

#include <cmath>
#include <map>

#include "patsnd/kb.hpp"
#include "patsnd/rng.hpp"
#include "test_util.hpp"

using namespace patsnd;

TEST_CASE("load_kb: empty file yields empty KB") {
  testutil::TempPath file("kb_empty");
  file.write("");
  KnowledgeBase kb = load_kb(file.path());
  CHECK(kb.entity_count() == 0);
}

TEST_CASE("load_kb: multi-valued properties expand one pair per value") {
  testutil::TempPath file("kb_multi");
  file.write(R"({"id":"Q317521","label":"Elon Musk","description":"business magnate",)"
             R"("properties":[{"pid":"P106","plabel":"occupation",)"
             R"("values":["inventor","programmer","engineer","entrepreneur"]}]})"
             "\n");
  KnowledgeBase kb = load_kb(file.path());
  const EntityRecord& rec = kb.entity("Q317521");
  // label + description pseudo-pairs, then 4 occupation pairs
  REQUIRE(rec.pairs.size() == 6);
  CHECK(rec.pairs[0].property_id == "label");
  CHECK(rec.pairs[0].value_text == "Elon Musk");
  CHECK(rec.pairs[1].property_id == "description");
  CHECK(rec.pairs[1].value_text == "business magnate");
  int occupations = 0;
  for (const PropertyValuePair& pv : rec.pairs) {
    if (pv.property_id == "P106") {
      CHECK(pv.property_label == "occupation");
      ++occupations;
    }
  }
  CHECK(occupations == 4);
  CHECK(rec.pairs[5].value_text == "entrepreneur");
}

TEST_CASE("load_kb: entity with no properties keeps only pseudo-pairs") {
  testutil::TempPath file("kb_bare");
  file.write(R"({"id":"e1","label":"X","description":"Y","properties":[]})" "\n");
  KnowledgeBase kb = load_kb(file.path());
  const EntityRecord& rec = kb.entity("e1");
  REQUIRE(rec.pairs.size() == 2);
  CHECK(rec.pairs[0] == PropertyValuePair{"label", "label", "X"});
  CHECK(rec.pairs[1] == PropertyValuePair{"description", "description", "Y"});
}

TEST_CASE("load_kb: empty description pseudo-pair is omitted") {
  testutil::TempPath file("kb_nodesc");
  file.write(R"({"id":"e1","label":"X","description":"","properties":[]})" "\n");
  KnowledgeBase kb = load_kb(file.path());
  REQUIRE(kb.entity("e1").pairs.size() == 1);
  CHECK(kb.entity("e1").pairs[0].property_id == "label");
}

TEST_CASE("load_kb: malformed line reports its line number") {
  testutil::TempPath file("kb_bad");
  file.write(R"({"id":"e1","label":"X","description":"","properties":[]})" "\n"
             "this is not json\n");
  CHECK_THROWS_WITH_AS(load_kb(file.path()), doctest::Contains(":2:"), ParseError);
}

TEST_CASE("load_kb: duplicate entity id rejected") {
  testutil::TempPath file("kb_dup");
  file.write(R"({"id":"e1","label":"X","description":"","properties":[]})" "\n"
             R"({"id":"e1","label":"X2","description":"","properties":[]})" "\n");
  CHECK_THROWS_AS(load_kb(file.path()), DuplicateKeyError);
}

TEST_CASE("load_kb is pure: same file loads to equal structure") {
  testutil::TempPath file("kb_pure");
  file.write(R"({"id":"e1","label":"X","description":"d","properties":)"
             R"([{"pid":"P1","plabel":"p","values":["v1","v2"]}]})" "\n"
             R"({"id":"e2","label":"Y","description":"","properties":[]})" "\n");
  KnowledgeBase kb1 = load_kb(file.path());
  KnowledgeBase kb2 = load_kb(file.path());
  REQUIRE(kb1.entity_count() == kb2.entity_count());
  CHECK(kb1.entity_ids() == kb2.entity_ids());
  for (const std::string& id : kb1.entity_ids()) {
    CHECK(kb1.entity(id).pairs == kb2.entity(id).pairs);
  }
}

TEST_CASE("background: contains the declared property pair") {
  testutil::TempPath file("kb_musk");
  file.write(R"({"id":"Q317521","label":"Elon Musk","description":"business magnate",)"
             R"("properties":[{"pid":"P106","plabel":"occupation","values":["entrepreneur"]}]})"
             "\n");
  KnowledgeBase kb = load_kb(file.path());
  auto pairs = kb.background("Q317521");
  bool found = false;
  for (const PropertyValuePair& pv : pairs) {
    if (pv.property_label == "occupation" && pv.value_text == "entrepreneur") found = true;
  }
  CHECK(found);
  CHECK(pairs.front().property_id == "label");
}

TEST_CASE("background: zero declared properties yields the two pseudo-pairs") {
  KnowledgeBase kb;
  kb.add_entity(make_entity_record("e", "Label", "Desc", {}));
  CHECK(kb.background("e").size() == 2);
}

TEST_CASE("background: truncates to max_properties keeping pseudo-pairs first") {
  std::vector<RawProperty> props;
  for (int i = 0; i < 100; ++i) {
    props.push_back({"P" + std::to_string(i), "prop " + std::to_string(i), {"v"}});
  }
  KnowledgeBase kb;
  kb.add_entity(make_entity_record("e", "Label", "Desc", props));
  auto pairs = kb.background("e", 64);
  REQUIRE(pairs.size() == 64);
  CHECK(pairs[0].property_id == "label");
  CHECK(pairs[1].property_id == "description");
  CHECK(pairs[2].property_id == "P0");
}

TEST_CASE("background: unknown entity raises missing-entity error") {
  KnowledgeBase kb;
  CHECK_THROWS_AS(kb.background("ghost"), MissingEntityError);
}

TEST_CASE("pair expansion count equals sum of value-list lengths plus pseudo-pairs") {
  Rng rng(99);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<RawProperty> props;
    std::size_t value_total = 0;
    const std::size_t n_props = rng.uniform_index(6);
    for (std::size_t p = 0; p < n_props; ++p) {
      RawProperty prop{"P" + std::to_string(p), "prop", {}};
      const std::size_t n_values = 1 + rng.uniform_index(4);
      for (std::size_t v = 0; v < n_values; ++v) prop.values.push_back("v" + std::to_string(v));
      value_total += n_values;
      props.push_back(std::move(prop));
    }
    const bool with_desc = rng.coin();
    EntityRecord rec = make_entity_record("e", "L", with_desc ? "D" : "", props);
    const std::size_t pseudo = with_desc ? 2 : 1;
    CHECK(rec.pairs.size() == value_total + pseudo);
    CHECK(rec.pairs[0].property_id == "label");
  }
}

TEST_CASE("sample_entity: singleton KB returns its only entity") {
  KnowledgeBase kb;
  kb.add_entity(testutil::simple_entity("only", "Only"));
  Rng rng(1);
  CHECK(kb.sample_entity(rng) == "only");
}

TEST_CASE("sample_entity: empty KB raises") {
  KnowledgeBase kb;
  Rng rng(1);
  CHECK_THROWS_AS(kb.sample_entity(rng), EmptyKbError);
}

TEST_CASE("sample_entity: same seed gives identical sequences") {
  KnowledgeBase kb = testutil::tiny_kb();
  Rng rng1(42), rng2(42);
  for (int i = 0; i < 100; ++i) {
    CHECK(kb.sample_entity(rng1) == kb.sample_entity(rng2));
  }
}

TEST_CASE("sample_entity: uniform over 4 entities within 3 sigma") {
  KnowledgeBase kb;
  for (int i = 0; i < 4; ++i) {
    kb.add_entity(testutil::simple_entity("e" + std::to_string(i), "E"));
  }
  Rng rng(7);
  std::map<std::string, int> counts;
  const int draws = 10000;
  for (int i = 0; i < draws; ++i) ++counts[kb.sample_entity(rng)];
  // Binomial(10000, 1/4): sigma = sqrt(n p (1-p)) ~ 43.3
  const double expected = draws / 4.0;
  const double three_sigma = 3.0 * std::sqrt(draws * 0.25 * 0.75);
  REQUIRE(counts.size() == 4);
  for (const auto& [id, count] : counts) {
    CHECK(std::abs(count - expected) <= three_sigma);
  }
}

TEST_CASE("relation catalog: lookup and duplicate detection") {
  KnowledgeBase kb;
  kb.set_relations({{"P161", "cast member", ""}, {"P57", "director", ""}});
  CHECK(kb.has_relation("P161"));
  CHECK_FALSE(kb.has_relation("P999"));
  CHECK(kb.relation("P57").label == "director");
  CHECK_THROWS_AS(kb.relation("P999"), UnknownRelationError);
  CHECK_THROWS_AS(kb.set_relations({{"r", "x", ""}, {"r", "y", ""}}), DuplicateKeyError);
}

TEST_CASE("relation catalog file round-trip") {
  testutil::TempPath file("rels");
  save_relations(file.path(), {{"P161", "cast member", "actor in the subject production"}});
  auto rels = load_relations(file.path());
  REQUIRE(rels.size() == 1);
  CHECK(rels[0].relation_id == "P161");
  CHECK(rels[0].description == "actor in the subject production");
}

TEST_CASE("save_kb/load_kb round-trip preserves pair structure") {
  KnowledgeBase kb;
  kb.add_entity(make_entity_record("e1", "Label One", "desc",
                                   {{"P1", "alpha", {"x", "y"}}, {"P2", "beta", {"z"}}}));
  testutil::TempPath file("kb_rt");
  save_kb(file.path(), kb);
  KnowledgeBase reloaded = load_kb(file.path());
  CHECK(reloaded.entity("e1").pairs == kb.entity("e1").pairs);
}
