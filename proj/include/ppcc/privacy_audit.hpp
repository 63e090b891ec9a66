#pragma once

#include "ppcc/graph.hpp"
#include "ppcc/plant.hpp"
#include "ppcc/share_log.hpp"

#include <cstdint>
#include <optional>
#include <vector>

namespace ppcc {

// True iff N_i is not contained in N_zeta. zeta must be adjacent to i (either direction).
bool check_topology_condition(const CommGraph& g, Index i, Index zeta);

struct AdversaryView {
  Index adversary = 0;
  Index target = 0;
  ShareLog observed;  // every message the target broadcast, in log order
};

// Requires zeta to receive the target's messages.
AdversaryView extract_view(const ShareLog& log, const CommGraph& g, Index target, Index adversary);

// FNV-1a over the canonical form of every message, in order.
std::uint64_t stream_hash(const ShareLog& messages);

struct ReferenceWorld {
  PlantModel plant;
  CommGraph graph;
  StochasticMatrix w;
  PrivacyWeights pw;
  ShareLog log;  // everything transmitted during synthesis and the online loop
};

struct CounterfactualWorld {
  std::vector<double> alt_pi;
  PlantModel alt_plant;   // target's B and C scaled by sqrt(pi / alt_pi)
  Index absorbing_agent = 0;
  ShareLog absorbing_stream;  // what the unobserved neighbor transmits in this world
  ShareLog replayed_view;     // target's transmissions replayed in exact arithmetic
  std::uint64_t reference_hash = 0;
  std::uint64_t replay_hash = 0;
  bool identical = false;           // exact rational equality of every replayed message
  bool naive_replay_differs = false;  // same alt pi without absorption changes the view
  double absorbing_deviation = 0;   // max |alternative - reference| over the absorbing stream
};

// Alternative private configuration (pi_i', B^i', C^i', held components, neighbor p's hidden
// stream) that reproduces every message the target sends to zeta. Throws TopologyError when
// N_i is contained in N_zeta. estimate_steps limits how many plant steps of the online stream
// are replayed (0: all recorded).
CounterfactualWorld construct_counterfactual(const ReferenceWorld& ref, Index i, Index zeta, double alt_pi_i,
                                             std::int64_t estimate_steps = 0);

// Force direction parametrization B = (1/mass) [.., cos(theta) at cos_row, sin(theta) at sin_row]^T.
struct ForceParametrization {
  double mass = 5.0;
  Index cos_row = 2;
  Index sin_row = 3;
};

struct AngleInference {
  double assumed_pi = 0;
  std::optional<double> theta;  // empty: hypothesis inconsistent (implied cos^2 > 1)
  double implied_cos_sq = 0;
};

// Inverts the first transmitted input Gramian bar_0 = pi N B B^T under the assumed pi.
AngleInference adversary_infer_angle(const AdversaryView& view, double assumed_pi, Index agent_count,
                                     const ForceParametrization& param = {});

}  // namespace ppcc
