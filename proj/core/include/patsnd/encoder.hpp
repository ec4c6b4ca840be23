#pragma once

#include <cstdint>
#include <filesystem>
#include <list>
#include <memory>
#include <mutex>
#include <string>
#include <string_view>
#include <unordered_map>

#include <Eigen/Core>

#include "patsnd/errors.hpp"
#include "patsnd/kb.hpp"

namespace patsnd {

inline constexpr std::size_t kDefaultCacheCapacity = 1'000'000;
inline constexpr int kDefaultFallbackDimF = 256;
inline constexpr int kDefaultTrigramBuckets = 4096;
inline constexpr std::uint64_t kDefaultEncoderSeed = 1771;

// Identifies an encoder configuration inside checkpoints so inference can
// rebuild (trigram) or validate (precomputed) the encoder it was trained with.
struct EncoderSpec {
  enum class Kind : std::uint8_t { kTrigram = 0, kPrecomputed = 1 };
  Kind kind = Kind::kTrigram;
  int dim_f = kDefaultFallbackDimF;
  std::uint64_t seed = kDefaultEncoderSeed;  // trigram only
  int buckets = kDefaultTrigramBuckets;      // trigram only

  bool operator==(const EncoderSpec&) const = default;
};

// Thread-safe LRU cache from exact text to its encoded vector. A hit returns
// the stored vector bit-identically.
class EmbeddingCache {
 public:
  explicit EmbeddingCache(std::size_t capacity = kDefaultCacheCapacity);

  bool lookup(const std::string& text, Eigen::VectorXd* out) const;
  void insert(const std::string& text, const Eigen::VectorXd& vec);
  std::size_t size() const;
  std::size_t capacity() const { return capacity_; }

  // Binary persistence: (text hash, vector) records under a versioned magic
  // header stamped with the producing encoder's fingerprint.
  void save(const std::filesystem::path& path, const std::string& fingerprint) const;
  void load(const std::filesystem::path& path, const std::string& fingerprint);

  // Secondary lookup for vectors restored from disk (keyed by text hash).
  bool lookup_persisted(const std::string& text, Eigen::VectorXd* out) const;

 private:
  struct Entry {
    std::string text;
    Eigen::VectorXd vec;
  };
  void touch(std::list<Entry>::iterator it) const;

  std::size_t capacity_;
  mutable std::mutex mutex_;
  mutable std::list<Entry> lru_;  // front = most recent
  std::unordered_map<std::string, std::list<Entry>::iterator> index_;
  std::unordered_map<std::uint64_t, Eigen::VectorXd> persisted_;
};

// Pooled text encoder contract: deterministic, fixed output width dim_f,
// finite entries. Frozen — encoder outputs never train.
class TextEncoder {
 public:
  virtual ~TextEncoder() = default;

  int dim_f() const { return dim_f_; }

  // Identifies the encoder configuration; persisted caches must match.
  virtual std::string fingerprint() const = 0;

  virtual EncoderSpec spec() const = 0;

  // Whitespace-normalizes, validates non-empty, then encodes (cached).
  Eigen::VectorXd encode(const std::string& text) const;

  void set_cache(std::shared_ptr<EmbeddingCache> cache) { cache_ = std::move(cache); }
  const std::shared_ptr<EmbeddingCache>& cache() const { return cache_; }

 protected:
  explicit TextEncoder(int dim_f) : dim_f_(dim_f) {}
  virtual Eigen::VectorXd encode_impl(const std::string& normalized) const = 0;

 private:
  int dim_f_;
  std::shared_ptr<EmbeddingCache> cache_;
};

// Deterministic fallback encoder: a hashed character-trigram bag projected by
// a fixed seeded random matrix to dim_f, L2-normalized. Enables fully offline
// training and tests.
class TrigramHashEncoder : public TextEncoder {
 public:
  explicit TrigramHashEncoder(int dim_f = kDefaultFallbackDimF,
                              std::uint64_t seed = kDefaultEncoderSeed,
                              int buckets = kDefaultTrigramBuckets);

  std::string fingerprint() const override;
  EncoderSpec spec() const override {
    return {EncoderSpec::Kind::kTrigram, dim_f(), seed_, buckets_};
  }
  std::uint64_t seed() const { return seed_; }
  int buckets() const { return buckets_; }

 protected:
  Eigen::VectorXd encode_impl(const std::string& normalized) const override;

 private:
  std::uint64_t seed_;
  int buckets_;
  Eigen::MatrixXd projection_;  // dim_f x buckets, fixed at construction
};

// Encoder backed by a table of precomputed embeddings (e.g. pooled
// transformer vectors exported by an external tool). JSON Lines input:
//   {"text": str, "vector": [float, ...]}
// Lookup is by whitespace-normalized text; a miss is an error.
class PrecomputedEncoder : public TextEncoder {
 public:
  explicit PrecomputedEncoder(const std::filesystem::path& table_path);

  std::string fingerprint() const override;
  EncoderSpec spec() const override {
    return {EncoderSpec::Kind::kPrecomputed, dim_f(), 0, 0};
  }
  std::size_t table_size() const { return table_.size(); }

 protected:
  Eigen::VectorXd encode_impl(const std::string& normalized) const override;

 private:
  static int probe_dim(const std::filesystem::path& table_path);
  std::unordered_map<std::string, Eigen::VectorXd> table_;
  std::uint64_t table_hash_ = 0;
};

// Trainable linear map from encoder space (dim_f) into model hidden space
// (dim_h); shared across properties, values, and relations.
struct Projection {
  Eigen::MatrixXd weight;  // dim_h x dim_f
  Eigen::VectorXd bias;    // dim_h

  static Projection init(int dim_h, int dim_f, Rng& rng);
  Eigen::VectorXd apply(const Eigen::VectorXd& feature) const;
  int dim_h() const { return static_cast<int>(weight.rows()); }
  int dim_f() const { return static_cast<int>(weight.cols()); }
};

// Encodes a property-value pair into hidden-space feature vectors
// (p, v) = (project(encode(property_label)), project(encode(value_text))).
std::pair<Eigen::VectorXd, Eigen::VectorXd> encode_pair(const TextEncoder& encoder,
                                                        const Projection& projection,
                                                        const PropertyValuePair& pair);

// FNV-1a, used for trigram bucketing and persisted-cache keys.
std::uint64_t fnv1a64(std::string_view data);

}  // namespace patsnd
