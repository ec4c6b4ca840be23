#include <doctest.h>

#include <cmath>

#include "patsnd/pat.hpp"
#include "patsnd/scoring.hpp"
#include "test_util.hpp"

using namespace patsnd;

namespace {

RelationParams random_params(int heads, int dim_h, std::uint64_t seed) {
  Rng rng(seed);
  return RelationParams::init(heads, dim_h, rng);
}

Eigen::MatrixXd random_matrix(Eigen::Index rows, Eigen::Index cols, Rng& rng,
                              double scale = 1.0) {
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index c = 0; c < cols; ++c) {
    for (Eigen::Index r = 0; r < rows; ++r) m(r, c) = rng.uniform(-scale, scale);
  }
  return m;
}

// The N=2 / dim_h=2 / K=1 oracle fixture: W=(1,0), b=0, p1=(1,0), p2=(0,1).
// Logits relu -> (1, 0); softmax -> (e/(e+1), 1/(e+1)).
RelationParams oracle_params() {
  RelationParams params = RelationParams::zeros(1, 2);
  params.head_weight << 1, 0;
  return params;
}

Eigen::MatrixXd oracle_properties() {
  Eigen::MatrixXd p(2, 2);
  p << 1, 0,
       0, 1;
  return p;
}

constexpr double kAlpha1 = 0.7310585786300049;  // e / (e + 1)
constexpr double kAlpha2 = 0.2689414213699951;  // 1 / (e + 1)

}  // namespace

TEST_CASE("attention_weights: singleton list gets weight 1 for any params") {
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    RelationParams params = random_params(4, 5, seed);
    Eigen::MatrixXd p = Eigen::MatrixXd::Random(1, 5);
    Eigen::VectorXd alpha = attention_weights(p, params);
    REQUIRE(alpha.size() == 1);
    CHECK(alpha[0] == doctest::Approx(1.0).epsilon(1e-12));
  }
}

TEST_CASE("attention_weights: identical property rows give the uniform distribution") {
  RelationParams params = random_params(3, 4, 9);
  Eigen::MatrixXd p(5, 4);
  Eigen::RowVectorXd row = Eigen::RowVectorXd::Random(4);
  for (int i = 0; i < 5; ++i) p.row(i) = row;
  Eigen::VectorXd alpha = attention_weights(p, params);
  for (int i = 0; i < 5; ++i) CHECK(alpha[i] == doctest::Approx(0.2).epsilon(1e-9));
}

TEST_CASE("attention_weights: hand-computed two-property softmax") {
  Eigen::VectorXd alpha = attention_weights(oracle_properties(), oracle_params());
  CHECK(alpha[0] == doctest::Approx(kAlpha1).epsilon(1e-12));
  CHECK(alpha[1] == doctest::Approx(kAlpha2).epsilon(1e-12));
}

TEST_CASE("attention_weights: empty property list raises") {
  RelationParams params = random_params(2, 3, 1);
  Eigen::MatrixXd empty(0, 3);
  CHECK_THROWS_AS(attention_weights(empty, params), EmptyPropertyListError);
}

TEST_CASE("pat_forward: single pair returns its value vector") {
  RelationParams params = random_params(4, 3, 17);
  Eigen::MatrixXd p = Eigen::MatrixXd::Random(1, 3);
  Eigen::MatrixXd v(1, 3);
  v << 0.3, -1.2, 4.5;
  Eigen::VectorXd h = pat_forward(p, v, params);
  CHECK(h.isApprox(v.row(0).transpose(), 1e-12));
}

TEST_CASE("pat_forward: equal value rows are a fixed point of the attention mix") {
  RelationParams params = random_params(2, 4, 23);
  Eigen::MatrixXd p = Eigen::MatrixXd::Random(6, 4);
  Eigen::MatrixXd v(6, 4);
  Eigen::RowVectorXd value = Eigen::RowVectorXd::Random(4);
  for (int i = 0; i < 6; ++i) v.row(i) = value;
  Eigen::VectorXd h = pat_forward(p, v, params);
  CHECK(h.isApprox(value.transpose(), 1e-9));
}

TEST_CASE("pat_forward: hand-computed fixture mixes unit basis values") {
  Eigen::MatrixXd v(2, 2);
  v << 1, 0,
       0, 1;
  Eigen::VectorXd h = pat_forward(oracle_properties(), v, oracle_params());
  CHECK(h[0] == doctest::Approx(kAlpha1).epsilon(1e-12));
  CHECK(h[1] == doctest::Approx(kAlpha2).epsilon(1e-12));
}

TEST_CASE("pat_forward: row mismatch raises shape error") {
  RelationParams params = random_params(1, 2, 3);
  CHECK_THROWS_AS(pat_forward(Eigen::MatrixXd::Random(3, 2), Eigen::MatrixXd::Random(2, 2), params),
                  ShapeError);
}

TEST_CASE("scorer: zero scorer weight returns the bias for every input") {
  RelationParams params = random_params(2, 3, 10);
  params.scorer_weight.setZero();
  params.scorer_bias = -2.25;
  for (int i = 0; i < 5; ++i) {
    Eigen::VectorXd h1 = Eigen::VectorXd::Random(3);
    Eigen::VectorXd h2 = Eigen::VectorXd::Random(3);
    CHECK(score_from_summaries(h1, h2, params) == doctest::Approx(-2.25).epsilon(1e-12));
  }
}

TEST_CASE("scorer: swapping sides changes the score when the halves differ") {
  RelationParams params = random_params(2, 3, 11);
  Eigen::VectorXd h1 = Eigen::VectorXd::Random(3);
  Eigen::VectorXd h2 = Eigen::VectorXd::Random(3);
  const double forward = score_from_summaries(h1, h2, params);
  const double swapped = score_from_summaries(h2, h1, params);
  CHECK(forward != swapped);
}

TEST_CASE("scorer: hand fixture with unit scorer weight sums both summaries to 2") {
  // Both sides mix unit basis vectors, so each summary sums to 1 by
  // convexity; with scorer weight all-ones and zero bias S = 2.
  RelationParams params = oracle_params();
  params.scorer_weight = Eigen::VectorXd::Ones(4);
  Eigen::MatrixXd v(2, 2);
  v << 1, 0,
       0, 1;
  Eigen::VectorXd h = pat_forward(oracle_properties(), v, params);
  const double score = score_from_summaries(h, h, params);
  CHECK(score == doctest::Approx(2.0).epsilon(1e-9));
}

TEST_CASE("property test: alpha in [0,1], sums to 1, h in convex hull, permutation equivariant") {
  Rng rng(20260809);
  for (int trial = 0; trial < 200; ++trial) {
    const int heads = 1 + static_cast<int>(rng.uniform_index(4));
    const int dim_h = 2 + static_cast<int>(rng.uniform_index(5));
    const int n = 1 + static_cast<int>(rng.uniform_index(6));
    RelationParams params = random_params(heads, dim_h, rng.next_u64());
    Eigen::MatrixXd p = random_matrix(n, dim_h, rng, 2.0);
    Eigen::MatrixXd v = random_matrix(n, dim_h, rng, 2.0);

    Eigen::VectorXd alpha = attention_weights(p, params);
    REQUIRE(alpha.size() == n);
    double sum = 0.0;
    for (int i = 0; i < n; ++i) {
      CHECK(alpha[i] >= 0.0);
      CHECK(alpha[i] <= 1.0);
      sum += alpha[i];
    }
    CHECK(std::abs(sum - 1.0) <= 1e-6);

    Eigen::VectorXd h = pat_forward(p, v, params);
    for (int c = 0; c < dim_h; ++c) {
      CHECK(h[c] >= v.col(c).minCoeff() - 1e-9);
      CHECK(h[c] <= v.col(c).maxCoeff() + 1e-9);
    }

    // Joint permutation of rows permutes alpha identically, h unchanged.
    std::vector<int> perm(static_cast<std::size_t>(n));
    std::iota(perm.begin(), perm.end(), 0);
    rng.shuffle(perm);
    Eigen::MatrixXd pp(n, dim_h), pv(n, dim_h);
    for (int i = 0; i < n; ++i) {
      pp.row(i) = p.row(perm[static_cast<std::size_t>(i)]);
      pv.row(i) = v.row(perm[static_cast<std::size_t>(i)]);
    }
    Eigen::VectorXd alpha_perm = attention_weights(pp, params);
    for (int i = 0; i < n; ++i) {
      CHECK(alpha_perm[i] == alpha[perm[static_cast<std::size_t>(i)]]);
    }
    Eigen::VectorXd h_perm = pat_forward(pp, pv, params);
    CHECK(h_perm == h);
  }
}

// ---------------------------------------------------------------------------
// Triple-level scoring against a KB

namespace {

KnowledgeBase typed_kb() {
  KnowledgeBase kb;
  kb.add_entity(testutil::simple_entity("show", "The Breakfast Club", "television sitcom"));
  kb.add_entity(testutil::simple_entity("actor", "John Doe", "screen actor"));
  kb.add_entity(testutil::simple_entity("ceo", "Jane Roe", "technology executive"));
  kb.set_relations({{"P161", "cast member", ""}});
  return kb;
}

Model tiny_model(const KnowledgeBase& kb, const TextEncoder& encoder, std::uint64_t seed) {
  ModelConfig config;
  config.encoder = encoder.spec();
  config.dim_h = 8;
  config.heads = 2;
  for (const RelationDef& r : kb.relations()) config.relation_ids.push_back(r.relation_id);
  return Model::init(std::move(config), seed);
}

}  // namespace

TEST_CASE("score_triple: deterministic given params and inputs") {
  KnowledgeBase kb = typed_kb();
  auto encoder = std::make_shared<TrigramHashEncoder>(16, 4);
  Model model = tiny_model(kb, *encoder, 5);
  auto b1 = kb.background("show");
  auto b2 = kb.background("actor");
  const double s1 = score_triple(b1, b2, "P161", model, *encoder);
  const double s2 = score_triple(b1, b2, "P161", model, *encoder);
  CHECK(s1 == s2);

  TripleScorer scorer(model, encoder, kb);
  Triple triple{"show", "P161", "actor", TripleLabel::kNormal};
  CHECK(scorer.score(triple) == doctest::Approx(s1).epsilon(1e-12));
  CHECK(scorer.score(triple) == scorer.score(triple));
}

TEST_CASE("score_triple: empty background and unknown relation raise") {
  KnowledgeBase kb = typed_kb();
  auto encoder = std::make_shared<TrigramHashEncoder>(16, 4);
  Model model = tiny_model(kb, *encoder, 5);
  auto b = kb.background("show");
  CHECK_THROWS_AS(score_triple({}, b, "P161", model, *encoder), EmptyPropertyListError);
  CHECK_THROWS_AS(score_triple(b, b, "P999", model, *encoder), UnknownRelationError);

  TripleScorer scorer(model, encoder, kb);
  CHECK_THROWS_AS(scorer.score({"show", "P999", "actor", TripleLabel::kNormal}),
                  UnknownRelationError);
  CHECK_THROWS_AS(scorer.score({"show", "P161", "ghost", TripleLabel::kNormal}),
                  MissingEntityError);
}

TEST_CASE("novelty_score is the negated score and preserves reverse ordering") {
  KnowledgeBase kb = typed_kb();
  auto encoder = std::make_shared<TrigramHashEncoder>(16, 4);
  Model model = tiny_model(kb, *encoder, 5);
  TripleScorer scorer(model, encoder, kb);
  Triple normal{"show", "P161", "actor", TripleLabel::kNormal};
  Triple odd{"show", "P161", "ceo", TripleLabel::kNovel};
  CHECK(scorer.novelty_score(normal) == doctest::Approx(-scorer.score(normal)).epsilon(1e-12));
  const bool score_order = scorer.score(normal) < scorer.score(odd);
  const bool novelty_order = scorer.novelty_score(normal) > scorer.novelty_score(odd);
  CHECK(score_order == novelty_order);
}

TEST_CASE("explain: singleton entity pair ranks at 1 with weight 1") {
  KnowledgeBase kb;
  kb.add_entity(make_entity_record("a", "Alpha", "", {}));  // label pair only
  kb.add_entity(make_entity_record("b", "Beta", "", {}));
  kb.set_relations({{"r", "rel", ""}});
  auto encoder = std::make_shared<TrigramHashEncoder>(16, 4);
  Model model = tiny_model(kb, *encoder, 5);
  TripleScorer scorer(model, encoder, kb);
  AttentionReport report = scorer.explain({"a", "r", "b", TripleLabel::kNormal});
  REQUIRE(report.entity1.ranked.size() == 1);
  CHECK(report.entity1.ranked[0].rank == 1);
  CHECK(report.entity1.ranked[0].weight == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(report.entity1.ranked[0].pair.property_id == "label");
}

TEST_CASE("explain: weights re-sum to 1 per entity and ranks are 1..N") {
  KnowledgeBase kb = typed_kb();
  auto encoder = std::make_shared<TrigramHashEncoder>(16, 4);
  Model model = tiny_model(kb, *encoder, 5);
  TripleScorer scorer(model, encoder, kb);
  AttentionReport report = scorer.explain({"show", "P161", "actor", TripleLabel::kNormal});
  CHECK(report.relation_id == "P161");
  for (const EntityAttention* side : {&report.entity1, &report.entity2}) {
    double sum = 0.0;
    int expected_rank = 1;
    double last_weight = 2.0;
    for (const RankedPair& rp : side->ranked) {
      CHECK(rp.rank == expected_rank++);
      CHECK(rp.weight <= last_weight + 1e-12);
      last_weight = rp.weight;
      sum += rp.weight;
    }
    CHECK(std::abs(sum - 1.0) <= 1e-6);
  }
  // Report score matches the scorer's novelty orientation.
  CHECK(report.novelty_score ==
        doctest::Approx(scorer.novelty_score({"show", "P161", "actor", TripleLabel::kNormal}))
            .epsilon(1e-12));
}

TEST_CASE("rank_pairs: ties break by original pair order") {
  std::vector<PropertyValuePair> pairs = {
      {"P1", "first", "v"}, {"P2", "second", "v"}, {"P3", "third", "v"}};
  Eigen::VectorXd weights(3);
  weights << 0.25, 0.5, 0.25;
  auto ranked = rank_pairs(pairs, weights);
  CHECK(ranked[0].pair.property_id == "P2");
  CHECK(ranked[1].pair.property_id == "P1");  // tie with P3, original order wins
  CHECK(ranked[2].pair.property_id == "P3");
}

TEST_CASE("checkpoint config: model round-trips relation index") {
  KnowledgeBase kb = typed_kb();
  auto encoder = std::make_shared<TrigramHashEncoder>(16, 4);
  Model model = tiny_model(kb, *encoder, 5);
  CHECK(model.relation_index("P161") == 0);
  CHECK_THROWS_AS(model.relation_index("nope"), UnknownRelationError);
}
