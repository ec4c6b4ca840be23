#pragma once

// Finite-difference gradient checking for the full training objective
// (attention, scorer, projection, hinge, l2). Shared between the unit tests
// and the acceptance suite.

#include <cmath>
#include <deque>
#include <memory>
#include <string>
#include <vector>

#include "patsnd/encoder.hpp"
#include "patsnd/pat.hpp"
#include "patsnd/rng.hpp"
#include "patsnd/scoring.hpp"
#include "patsnd/training.hpp"

namespace gradcheck {

struct Fixture {
  patsnd::KnowledgeBase kb;
  std::shared_ptr<patsnd::TrigramHashEncoder> encoder;
  patsnd::Model model;
  std::unique_ptr<patsnd::EncodedWorkspace> workspace;
  std::deque<patsnd::EncodedEntity> entities;  // stable addresses
  std::vector<patsnd::EncodedTriplePair> pairs;
  double margin = 1.0;
  double l2_lambda = 0.0;

  double objective() {
    return patsnd::pair_batch_objective(model, *workspace, pairs, margin, l2_lambda, nullptr)
        .objective;
  }
};

// relu and hinge are piecewise linear; a fixture whose pre-activations or
// hinge argument sit within `margin` of a kink would make central differences
// meaningless, so such draws are rejected by the builder.
inline bool away_from_kinks(Fixture& fixture, double kink_margin) {
  fixture.workspace->refresh(fixture.model.projection);
  for (const patsnd::EncodedTriplePair& pair : fixture.pairs) {
    const patsnd::RelationParams& params =
        fixture.model.relations[static_cast<std::size_t>(pair.relation_index)];
    auto forward = [&](const patsnd::EncodedEntity& entity) {
      patsnd::PropertyMatrices m = patsnd::gather_matrices(*fixture.workspace, entity);
      return patsnd::pat_forward_cached(std::move(m.properties), std::move(m.values), params);
    };
    patsnd::SideForward pos1 = forward(*pair.normal_e1);
    patsnd::SideForward pos2 = forward(*pair.normal_e2);
    patsnd::SideForward neg1 = forward(*pair.pseudo_e1);
    patsnd::SideForward neg2 = forward(*pair.pseudo_e2);
    for (const patsnd::SideForward* side : {&pos1, &pos2, &neg1, &neg2}) {
      if (side->logits.cwiseAbs().minCoeff() < kink_margin) return false;
    }
    const double s_normal = patsnd::score_forward(pos1, pos2, params);
    const double s_pseudo = patsnd::score_forward(neg1, neg2, params);
    if (std::abs(s_pseudo - s_normal + fixture.margin) < kink_margin) return false;
  }
  return true;
}

// Builds a random small fixture (1-3 relations, 4-6 entities with 1-4
// property pairs, 1-3 training pairs), retrying until it sits away from the
// relu/hinge kinks.
inline Fixture make_fixture(std::uint64_t seed) {
  patsnd::Rng rng(seed);
  for (int attempt = 0; attempt < 64; ++attempt) {
    Fixture fixture;
    const int dim_f = 6 + static_cast<int>(rng.uniform_index(5));
    const int dim_h = 3 + static_cast<int>(rng.uniform_index(3));
    const int heads = 1 + static_cast<int>(rng.uniform_index(3));
    const int n_relations = 1 + static_cast<int>(rng.uniform_index(2));
    const int n_entities = 4 + static_cast<int>(rng.uniform_index(3));

    fixture.encoder = std::make_shared<patsnd::TrigramHashEncoder>(dim_f, rng.next_u64(), 512);

    std::vector<std::string> ids;
    for (int e = 0; e < n_entities; ++e) {
      const std::string id = "entity" + std::to_string(e);
      std::vector<patsnd::RawProperty> props;
      const int n_props = static_cast<int>(rng.uniform_index(3));
      for (int p = 0; p < n_props; ++p) {
        props.push_back({"P" + std::to_string(p),
                         "prop " + std::to_string(rng.uniform_index(8)),
                         {"value " + std::to_string(rng.uniform_index(12))}});
      }
      fixture.kb.add_entity(patsnd::make_entity_record(
          id, "label " + std::to_string(rng.uniform_index(10)), "", props));
      ids.push_back(id);
    }
    std::vector<patsnd::RelationDef> catalog;
    for (int r = 0; r < n_relations; ++r) {
      catalog.push_back({"R" + std::to_string(r), "relation " + std::to_string(r), ""});
    }
    fixture.kb.set_relations(std::move(catalog));

    patsnd::ModelConfig config;
    config.encoder = fixture.encoder->spec();
    config.dim_h = dim_h;
    config.heads = heads;
    for (const patsnd::RelationDef& r : fixture.kb.relations()) {
      config.relation_ids.push_back(r.relation_id);
    }
    fixture.model = patsnd::Model::init(std::move(config), rng.next_u64());
    // Inflate parameters so pre-activations clear the kink margin more often.
    for (patsnd::RelationParams& rel : fixture.model.relations) {
      rel.head_weight *= 3.0;
      rel.scorer_weight *= 3.0;
    }
    fixture.model.projection.weight *= 2.0;

    fixture.workspace =
        std::make_unique<patsnd::EncodedWorkspace>(fixture.encoder, dim_h);
    for (const std::string& id : ids) {
      fixture.entities.push_back(patsnd::encode_entity(*fixture.workspace, fixture.kb, id));
    }

    const int n_pairs = 1 + static_cast<int>(rng.uniform_index(3));
    for (int p = 0; p < n_pairs; ++p) {
      patsnd::EncodedTriplePair pair;
      pair.relation_index = static_cast<int>(rng.uniform_index(
          static_cast<std::size_t>(n_relations)));
      pair.normal_e1 = &fixture.entities[rng.uniform_index(fixture.entities.size())];
      pair.normal_e2 = &fixture.entities[rng.uniform_index(fixture.entities.size())];
      pair.pseudo_e1 = &fixture.entities[rng.uniform_index(fixture.entities.size())];
      pair.pseudo_e2 = &fixture.entities[rng.uniform_index(fixture.entities.size())];
      fixture.pairs.push_back(pair);
    }
    fixture.margin = rng.uniform(0.5, 1.5);
    fixture.l2_lambda = rng.coin() ? 1e-3 : 0.0;

    if (away_from_kinks(fixture, 0.02)) return fixture;
  }
  throw std::runtime_error("gradcheck: could not build a kink-free fixture");
}

struct CheckStats {
  double max_rel_error = 0.0;
  int checked = 0;
};

// Central finite differences over every trainable parameter entry.
inline CheckStats check_gradients(Fixture& fixture, double step = 1e-4,
                                  double rel_tolerance = 1e-3) {
  patsnd::ModelGrad grad = patsnd::ModelGrad::zeros_like(fixture.model);
  patsnd::pair_batch_objective(fixture.model, *fixture.workspace, fixture.pairs, fixture.margin,
                               fixture.l2_lambda, &grad);
  std::vector<patsnd::ParamView> params = patsnd::param_views(fixture.model);
  std::vector<patsnd::ParamView> grads = patsnd::grad_views(grad);

  CheckStats stats;
  for (std::size_t v = 0; v < params.size(); ++v) {
    for (std::ptrdiff_t j = 0; j < params[v].size; ++j) {
      double& theta = params[v].data[j];
      const double saved = theta;
      theta = saved + step;
      const double plus = fixture.objective();
      theta = saved - step;
      const double minus = fixture.objective();
      theta = saved;
      const double fd = (plus - minus) / (2.0 * step);
      const double analytic = grads[v].data[j];
      const double scale = std::max({std::abs(fd), std::abs(analytic), 1e-8});
      const double rel = std::abs(fd - analytic) / scale;
      if (std::abs(fd - analytic) > 1e-8) {
        stats.max_rel_error = std::max(stats.max_rel_error, rel);
        if (rel > rel_tolerance) {
          throw std::runtime_error("gradient mismatch: view " + std::to_string(v) + " entry " +
                                   std::to_string(j) + " analytic " + std::to_string(analytic) +
                                   " fd " + std::to_string(fd));
        }
      }
      ++stats.checked;
    }
  }
  // Restore the projection for any later use of the fixture.
  fixture.workspace->refresh(fixture.model.projection);
  return stats;
}

}  // namespace gradcheck
