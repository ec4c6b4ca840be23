#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "patsnd/dsbuild.hpp"
#include "patsnd/evaluation.hpp"
#include "patsnd/kb.hpp"

namespace patsnd {

// Seeded benchmark: typed entities whose "instance of" property encodes the
// type, a fixed relation -> (type, type) compatibility table, NORMAL
// instances that respect it, NOVEL test instances that violate it, and
// type-property key annotations for the NOVEL instances. Each relation's text
// template carries a distinctive keyword so the relation classifier is
// trainable from the text alone.
struct SyntheticConfig {
  int entities_per_type = 30;
  int train_instances = 2000;
  int test_normal = 200;
  int test_novel = 200;
  int noise_properties = 3;
  std::uint64_t seed = 7;
};

struct SyntheticBenchmark {
  KnowledgeBase kb;  // relation catalog included
  std::vector<FactInstance> train;
  std::vector<FactInstance> test;
  std::vector<KeyPropertyAnnotation> annotations;  // NOVEL test instances
};

// Property id carrying the entity type in the benchmark.
inline constexpr const char* kTypePropertyId = "P31";

SyntheticBenchmark generate_synthetic(const SyntheticConfig& config);

// Writes kb.jsonl, relations.jsonl, train.jsonl, test.jsonl and
// annotations.jsonl into the directory.
void write_synthetic(const SyntheticBenchmark& benchmark,
                     const std::filesystem::path& directory);

}  // namespace patsnd
