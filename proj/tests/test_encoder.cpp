#include <doctest.h>

#include <cstring>
#include <thread>

#include "patsnd/encoder.hpp"
#include "test_util.hpp"

using namespace patsnd;

TEST_CASE("encode_pooled: deterministic and correctly shaped") {
  TrigramHashEncoder encoder(64, 11);
  Eigen::VectorXd a = encoder.encode("instance of");
  Eigen::VectorXd b = encoder.encode("instance of");
  CHECK(a.size() == 64);
  CHECK(a == b);
  CHECK(a.allFinite());
}

TEST_CASE("encode_pooled: empty-after-normalization input rejected") {
  TrigramHashEncoder encoder(32, 11);
  CHECK_THROWS_AS(encoder.encode(""), InvalidInputError);
  CHECK_THROWS_AS(encoder.encode("   \t\n "), InvalidInputError);
  CHECK_NOTHROW(encoder.encode("x"));
}

TEST_CASE("encode_pooled: whitespace runs normalize to one representation") {
  TrigramHashEncoder encoder(32, 11);
  CHECK(encoder.encode("cast  member") == encoder.encode(" cast member "));
}

TEST_CASE("fallback encoder separates unrelated strings") {
  TrigramHashEncoder encoder;
  Eigen::VectorXd a = encoder.encode("politician");
  Eigen::VectorXd b = encoder.encode("chess variant");
  const double cosine = a.dot(b) / (a.norm() * b.norm());
  CHECK(cosine < 0.99);
}

TEST_CASE("fallback encoder: same seed same vectors, different seed different") {
  TrigramHashEncoder e1(64, 5), e2(64, 5), e3(64, 6);
  CHECK(e1.encode("occupation") == e2.encode("occupation"));
  CHECK(e1.encode("occupation") != e3.encode("occupation"));
}

TEST_CASE("cache hit returns bit-identical vector") {
  auto cache = std::make_shared<EmbeddingCache>(16);
  TrigramHashEncoder encoder(32, 11);
  encoder.set_cache(cache);
  Eigen::VectorXd fresh = encoder.encode("cast member");
  CHECK(cache->size() == 1);
  Eigen::VectorXd hit = encoder.encode("cast member");
  CHECK(std::memcmp(fresh.data(), hit.data(), sizeof(double) * 32) == 0);
}

TEST_CASE("cache evicts least-recently-used beyond capacity") {
  EmbeddingCache cache(2);
  Eigen::VectorXd v = Eigen::VectorXd::Ones(4);
  cache.insert("a", v);
  cache.insert("b", v);
  Eigen::VectorXd out;
  CHECK(cache.lookup("a", &out));  // refresh "a"
  cache.insert("c", v);            // evicts "b"
  CHECK(cache.size() == 2);
  CHECK_FALSE(cache.lookup("b", &out));
  CHECK(cache.lookup("a", &out));
  CHECK(cache.lookup("c", &out));
}

TEST_CASE("cache persistence round-trips through a versioned file") {
  testutil::TempPath file("cache");
  TrigramHashEncoder encoder(32, 11);
  Eigen::VectorXd original;
  {
    auto cache = std::make_shared<EmbeddingCache>();
    encoder.set_cache(cache);
    original = encoder.encode("cast member");
    cache->save(file.path(), encoder.fingerprint());
  }
  {
    auto cache = std::make_shared<EmbeddingCache>();
    cache->load(file.path(), encoder.fingerprint());
    Eigen::VectorXd restored;
    REQUIRE(cache->lookup_persisted("cast member", &restored));
    CHECK(std::memcmp(original.data(), restored.data(), sizeof(double) * 32) == 0);
    // Mismatched fingerprint is refused.
    EmbeddingCache other;
    TrigramHashEncoder different(32, 12);
    CHECK_THROWS_AS(other.load(file.path(), different.fingerprint()), CheckpointError);
  }
}

TEST_CASE("cache is safe under concurrent encode calls") {
  auto cache = std::make_shared<EmbeddingCache>();
  TrigramHashEncoder encoder(32, 11);
  encoder.set_cache(cache);
  std::vector<std::thread> workers;
  for (int t = 0; t < 4; ++t) {
    workers.emplace_back([&encoder, t] {
      for (int i = 0; i < 200; ++i) {
        encoder.encode("text " + std::to_string((i + t) % 50));
      }
    });
  }
  for (std::thread& w : workers) w.join();
  CHECK(cache->size() == 50);
}

TEST_CASE("projection: zero weight and bias maps to zero vectors") {
  TrigramHashEncoder encoder(8, 3);
  Projection projection;
  projection.weight = Eigen::MatrixXd::Zero(4, 8);
  projection.bias = Eigen::VectorXd::Zero(4);
  auto [p, v] = encode_pair(encoder, projection, {"P1", "occupation", "entrepreneur"});
  CHECK(p.isZero());
  CHECK(v.isZero());
  CHECK(p.size() == 4);
  CHECK(v.size() == 4);
}

TEST_CASE("projection: equal property labels give equal property vectors") {
  TrigramHashEncoder encoder(16, 3);
  Rng rng(5);
  Projection projection = Projection::init(6, 16, rng);
  auto [p1, v1] = encode_pair(encoder, projection, {"P1", "occupation", "entrepreneur"});
  auto [p2, v2] = encode_pair(encoder, projection, {"P1", "occupation", "politician"});
  CHECK(p1 == p2);
  CHECK(v1 != v2);
}

TEST_CASE("projection: hand-computed 2x3 matrix product") {
  Projection projection;
  projection.weight.resize(2, 3);
  projection.weight << 1, 2, 3,
                       4, 5, 6;
  projection.bias.resize(2);
  projection.bias << 0.5, -1;
  Eigen::VectorXd f(3);
  f << 1, -1, 2;
  // W f = (1-2+6, 4-5+12) = (5, 11); plus bias -> (5.5, 10)
  Eigen::VectorXd h = projection.weight * f + projection.bias;
  CHECK(h[0] == doctest::Approx(5.5).epsilon(1e-12));
  CHECK(h[1] == doctest::Approx(10.0).epsilon(1e-12));
  CHECK(projection.apply(f) == h);
}

TEST_CASE("projection: width mismatch raises shape error") {
  Projection projection;
  projection.weight = Eigen::MatrixXd::Zero(2, 3);
  projection.bias = Eigen::VectorXd::Zero(2);
  CHECK_THROWS_AS(projection.apply(Eigen::VectorXd::Zero(4)), ShapeError);
}

TEST_CASE("precomputed encoder: lookup, dimension checks, and misses") {
  testutil::TempPath file("embtable");
  file.write(R"({"text": "alpha", "vector": [1.0, 2.0, 3.0]})" "\n"
             R"({"text": "beta  two", "vector": [0.5, 0.0, -1.0]})" "\n");
  PrecomputedEncoder encoder(file.path());
  CHECK(encoder.dim_f() == 3);
  CHECK(encoder.table_size() == 2);
  Eigen::VectorXd v = encoder.encode("alpha");
  CHECK(v[1] == 2.0);
  // Lookup is whitespace-normalized.
  CHECK(encoder.encode("beta two")[0] == 0.5);
  CHECK_THROWS_AS(encoder.encode("gamma"), InvalidInputError);
}
