#include "patsnd/encoder.hpp"

#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

#include <nlohmann/json.hpp>

#include "binser.hpp"
#include "patsnd/io.hpp"

namespace patsnd {

using nlohmann::json;

std::uint64_t fnv1a64(std::string_view data) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : data) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

// ---------------------------------------------------------------------------
// EmbeddingCache

EmbeddingCache::EmbeddingCache(std::size_t capacity) : capacity_(capacity) {}

void EmbeddingCache::touch(std::list<Entry>::iterator it) const {
  lru_.splice(lru_.begin(), lru_, it);
}

bool EmbeddingCache::lookup(const std::string& text, Eigen::VectorXd* out) const {
  std::lock_guard<std::mutex> lock(mutex_);
  auto it = index_.find(text);
  if (it == index_.end()) return false;
  touch(it->second);
  *out = it->second->vec;
  return true;
}

void EmbeddingCache::insert(const std::string& text, const Eigen::VectorXd& vec) {
  std::lock_guard<std::mutex> lock(mutex_);
  auto it = index_.find(text);
  if (it != index_.end()) {
    touch(it->second);
    return;
  }
  lru_.push_front({text, vec});
  index_[text] = lru_.begin();
  if (index_.size() > capacity_) {
    index_.erase(lru_.back().text);
    lru_.pop_back();
  }
}

std::size_t EmbeddingCache::size() const {
  std::lock_guard<std::mutex> lock(mutex_);
  return index_.size();
}

bool EmbeddingCache::lookup_persisted(const std::string& text, Eigen::VectorXd* out) const {
  std::lock_guard<std::mutex> lock(mutex_);
  auto it = persisted_.find(fnv1a64(text));
  if (it == persisted_.end()) return false;
  *out = it->second;
  return true;
}

namespace {
constexpr char kCacheMagic[8] = {'P', 'A', 'T', 'S', 'N', 'D', 'E', 'C'};
constexpr std::uint32_t kCacheVersion = 1;
}  // namespace

void EmbeddingCache::save(const std::filesystem::path& path, const std::string& fingerprint) const {
  std::ostringstream buf(std::ios::binary);
  binser::Writer w(buf);
  w.magic(kCacheMagic);
  w.u32(kCacheVersion);
  w.str(fingerprint);
  std::lock_guard<std::mutex> lock(mutex_);
  w.u64(index_.size());
  for (const Entry& e : lru_) {
    w.u64(fnv1a64(e.text));
    w.vec(e.vec);
  }
  write_file_atomic(path, buf.str());
}

void EmbeddingCache::load(const std::filesystem::path& path, const std::string& fingerprint) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open cache file: " + path.string());
  binser::Reader r(in, "embedding cache " + path.string());
  r.expect_magic(kCacheMagic);
  std::uint32_t version = r.u32();
  if (version != kCacheVersion) {
    throw CheckpointError("embedding cache " + path.string() + ": unsupported version " +
                          std::to_string(version));
  }
  std::string stored = r.str();
  if (stored != fingerprint) {
    throw CheckpointError("embedding cache " + path.string() +
                          ": encoder fingerprint mismatch (cache: " + stored + ")");
  }
  std::uint64_t count = r.u64();
  std::unordered_map<std::uint64_t, Eigen::VectorXd> restored;
  restored.reserve(count);
  for (std::uint64_t i = 0; i < count; ++i) {
    std::uint64_t hash = r.u64();
    restored.emplace(hash, r.vec());
  }
  std::lock_guard<std::mutex> lock(mutex_);
  persisted_ = std::move(restored);
}

// ---------------------------------------------------------------------------
// TextEncoder

Eigen::VectorXd TextEncoder::encode(const std::string& text) const {
  std::string normalized = normalize_whitespace(text);
  if (normalized.empty()) {
    throw InvalidInputError("encode: text empty after whitespace normalization");
  }
  Eigen::VectorXd out;
  if (cache_) {
    if (cache_->lookup(text, &out)) return out;
    if (cache_->lookup_persisted(text, &out)) {
      cache_->insert(text, out);
      return out;
    }
  }
  out = encode_impl(normalized);
  if (!out.allFinite()) {
    throw NumericError("encode: non-finite output for text: " + normalized);
  }
  if (cache_) cache_->insert(text, out);
  return out;
}

// ---------------------------------------------------------------------------
// TrigramHashEncoder

TrigramHashEncoder::TrigramHashEncoder(int dim_f, std::uint64_t seed, int buckets)
    : TextEncoder(dim_f), seed_(seed), buckets_(buckets) {
  if (dim_f <= 0 || buckets <= 0) {
    throw InvalidInputError("TrigramHashEncoder: dim_f and buckets must be positive");
  }
  // Fixed random projection, reproducible from the seed alone.
  Rng rng(seed);
  projection_.resize(dim_f, buckets);
  const double scale = 1.0 / std::sqrt(static_cast<double>(buckets));
  for (int c = 0; c < buckets; ++c) {
    for (int r = 0; r < dim_f; ++r) {
      projection_(r, c) = rng.uniform(-scale, scale);
    }
  }
}

std::string TrigramHashEncoder::fingerprint() const {
  std::ostringstream os;
  os << "trigram/f=" << dim_f() << "/seed=" << seed_ << "/buckets=" << buckets_;
  return os.str();
}

Eigen::VectorXd TrigramHashEncoder::encode_impl(const std::string& normalized) const {
  // Pad with boundary spaces so one-character texts still yield a trigram.
  std::string padded = " " + normalized + " ";
  // Ordered map keeps the accumulation order fixed, so results are
  // bit-reproducible for permuted trigram discovery order.
  std::map<int, double> counts;
  for (std::size_t i = 0; i + 3 <= padded.size(); ++i) {
    std::uint64_t h = fnv1a64(std::string_view(padded).substr(i, 3));
    counts[static_cast<int>(h % static_cast<std::uint64_t>(buckets_))] += 1.0;
  }
  double norm_sq = 0.0;
  for (const auto& [bucket, count] : counts) norm_sq += count * count;
  const double inv_norm = 1.0 / std::sqrt(norm_sq);
  Eigen::VectorXd out = Eigen::VectorXd::Zero(dim_f());
  for (const auto& [bucket, count] : counts) {
    out += (count * inv_norm) * projection_.col(bucket);
  }
  // Unit norm keeps downstream pre-activations on a common scale.
  double n = out.norm();
  if (n > 0.0) out /= n;
  return out;
}

// ---------------------------------------------------------------------------
// PrecomputedEncoder

int PrecomputedEncoder::probe_dim(const std::filesystem::path& table_path) {
  std::ifstream in(table_path);
  if (!in) throw IoError("cannot open embedding table: " + table_path.string());
  std::string line;
  while (std::getline(in, line)) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    json obj = json::parse(line, nullptr, false);
    if (obj.is_discarded() || !obj.contains("vector") || !obj["vector"].is_array()) {
      throw ParseError(table_path.string() + ":1: expected {\"text\", \"vector\"} records");
    }
    return static_cast<int>(obj["vector"].size());
  }
  throw ParseError(table_path.string() + ": empty embedding table");
}

PrecomputedEncoder::PrecomputedEncoder(const std::filesystem::path& table_path)
    : TextEncoder(probe_dim(table_path)) {
  std::ifstream in(table_path);
  if (!in) throw IoError("cannot open embedding table: " + table_path.string());
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    json obj = json::parse(line, nullptr, false);
    if (obj.is_discarded() || !obj.contains("text") || !obj.contains("vector")) {
      throw ParseError(table_path.string() + ":" + std::to_string(line_no) +
                       ": expected {\"text\", \"vector\"} records");
    }
    const json& vec = obj["vector"];
    if (!vec.is_array() || static_cast<int>(vec.size()) != dim_f()) {
      throw ParseError(table_path.string() + ":" + std::to_string(line_no) +
                       ": vector width differs from first record");
    }
    Eigen::VectorXd v(dim_f());
    for (int i = 0; i < dim_f(); ++i) v[i] = vec[i].get<double>();
    std::string key = normalize_whitespace(obj["text"].get<std::string>());
    table_[key] = std::move(v);
    table_hash_ ^= fnv1a64(key);
  }
}

std::string PrecomputedEncoder::fingerprint() const {
  std::ostringstream os;
  os << "precomputed/f=" << dim_f() << "/n=" << table_.size() << "/h=" << table_hash_;
  return os.str();
}

Eigen::VectorXd PrecomputedEncoder::encode_impl(const std::string& normalized) const {
  auto it = table_.find(normalized);
  if (it == table_.end()) {
    throw InvalidInputError("precomputed encoder: no embedding for text: " + normalized);
  }
  return it->second;
}

// ---------------------------------------------------------------------------
// Projection

Projection Projection::init(int dim_h, int dim_f, Rng& rng) {
  Projection p;
  p.weight.resize(dim_h, dim_f);
  const double scale = 1.0 / std::sqrt(static_cast<double>(dim_f));
  for (int c = 0; c < dim_f; ++c) {
    for (int r = 0; r < dim_h; ++r) {
      p.weight(r, c) = rng.uniform(-scale, scale);
    }
  }
  p.bias = Eigen::VectorXd::Zero(dim_h);
  return p;
}

Eigen::VectorXd Projection::apply(const Eigen::VectorXd& feature) const {
  if (feature.size() != weight.cols()) {
    throw ShapeError("projection: feature width " + std::to_string(feature.size()) +
                     " != dim_f " + std::to_string(weight.cols()));
  }
  return weight * feature + bias;
}

std::pair<Eigen::VectorXd, Eigen::VectorXd> encode_pair(const TextEncoder& encoder,
                                                        const Projection& projection,
                                                        const PropertyValuePair& pair) {
  return {projection.apply(encoder.encode(pair.property_label)),
          projection.apply(encoder.encode(pair.value_text))};
}

}  // namespace patsnd
