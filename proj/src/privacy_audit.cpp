#include "ppcc/privacy_audit.hpp"

#include "ppcc/consensus.hpp"

#include <boost/multiprecision/eigen.hpp>
#include <boost/multiprecision/gmp.hpp>

#include <algorithm>
#include <cmath>
#include <map>
#include <string>
#include <utility>

namespace ppcc {

using Rational = boost::multiprecision::mpq_rational;
using RationalMatrix = MatrixX<Rational>;

bool check_topology_condition(const CommGraph& g, Index i, Index zeta) {
  if (i < 0 || zeta < 0 || i >= g.size() || zeta >= g.size()) throw DimensionError("check_topology_condition: index out of range");
  if (i == zeta || !(g.receives_from(i, zeta) || g.receives_from(zeta, i)))
    throw TopologyError("check_topology_condition: agent " + std::to_string(zeta) + " is not a neighbor of agent " +
                        std::to_string(i));
  const auto& ni = g.neighbors(i);
  return std::any_of(ni.begin(), ni.end(), [&](Index j) { return !g.receives_from(zeta, j); });
}

AdversaryView extract_view(const ShareLog& log, const CommGraph& g, Index target, Index adversary) {
  if (!g.receives_from(adversary, target))
    throw TopologyError("extract_view: agent " + std::to_string(adversary) + " does not receive from agent " +
                        std::to_string(target));
  AdversaryView view{adversary, target, {}};
  for (const auto& m : log)
    if (m.sender == target) view.observed.push_back(m);
  return view;
}

std::uint64_t stream_hash(const ShareLog& messages) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const auto& m : messages) {
    for (unsigned char c : canonical_form(m) + "\n") {
      h ^= c;
      h *= 0x100000001b3ULL;
    }
  }
  return h;
}

namespace {

RationalMatrix exact(const MatrixXd& m) {
  RationalMatrix r(m.rows(), m.cols());
  for (Index i = 0; i < m.rows(); ++i)
    for (Index j = 0; j < m.cols(); ++j) r(i, j) = Rational(m(i, j));
  return r;
}

MatrixXd approximate(const RationalMatrix& r) {
  MatrixXd m(r.rows(), r.cols());
  for (Index i = 0; i < r.rows(); ++i)
    for (Index j = 0; j < r.cols(); ++j) m(i, j) = r(i, j).convert_to<double>();
  return m;
}

// Messages of one fusion episode: rounds[h][sender].
using Episode = std::vector<std::vector<const SharedMessage*>>;
using EpisodeKey = std::pair<int, std::int64_t>;

std::map<EpisodeKey, Episode> group_episodes(const ShareLog& log, Index agent_count) {
  std::map<EpisodeKey, Episode> episodes;
  for (const auto& m : log) {
    auto& ep = episodes[{static_cast<int>(m.quantity), m.k}];
    if (static_cast<int>(ep.size()) <= m.round) ep.resize(static_cast<std::size_t>(m.round) + 1,
                                                          std::vector<const SharedMessage*>(static_cast<std::size_t>(agent_count), nullptr));
    ep[static_cast<std::size_t>(m.round)][static_cast<std::size_t>(m.sender)] = &m;
  }
  return episodes;
}

const MatrixXd& value_of(const Episode& ep, std::size_t round, Index sender) {
  const SharedMessage* m = ep.at(round).at(static_cast<std::size_t>(sender));
  if (!m) throw ConfigError("construct_counterfactual: share log is missing a message of agent " + std::to_string(sender));
  return m->value;
}

}  // namespace

CounterfactualWorld construct_counterfactual(const ReferenceWorld& ref, Index i, Index zeta, double alt_pi_i,
                                             std::int64_t estimate_steps) {
  if (!check_topology_condition(ref.graph, i, zeta))
    throw TopologyError("construct_counterfactual: every neighbor of agent " + std::to_string(i) +
                        " is visible to agent " + std::to_string(zeta) + "; no hidden degree of freedom");
  if (!(alt_pi_i > 0.0 && alt_pi_i < 1.0)) throw ConfigError("construct_counterfactual: alternative pi must lie in (0, 1)");

  const CommGraph& g = ref.graph;
  const auto& ni = g.neighbors(i);
  const Index p = *std::find_if(ni.begin(), ni.end(), [&](Index j) { return !g.receives_from(zeta, j); });
  const double pi_i = ref.pw.pi.at(static_cast<std::size_t>(i));

  CounterfactualWorld world;
  world.alt_pi = ref.pw.pi;
  world.alt_pi[static_cast<std::size_t>(i)] = alt_pi_i;
  world.absorbing_agent = p;
  {
    auto channels = ref.plant.channels();
    const double scale = std::sqrt(pi_i / alt_pi_i);
    channels[static_cast<std::size_t>(i)].b *= scale;
    channels[static_cast<std::size_t>(i)].c *= scale;
    world.alt_plant = PlantModel(ref.plant.a(), std::move(channels));
  }

  const Rational alt_pi(alt_pi_i);
  const Rational eps_pi = Rational(ref.pw.epsilon) * alt_pi;
  const Rational w_ii(ref.w(i, i));
  const Rational w_ip(ref.w(i, p));

  ShareLog reference_view;
  double naive_gap = 0.0, scale = 0.0;
  world.identical = true;

  for (const auto& [key, ep] : group_episodes(ref.log, g.size())) {
    const auto quantity = static_cast<SharedQuantity>(key.first);
    if (quantity == SharedQuantity::estimate && estimate_steps > 0 && key.second >= estimate_steps) continue;
    const std::size_t rounds = ep.size();

    // Alternative target: same first message, held part consistent with alt pi.
    const RationalMatrix first = exact(value_of(ep, 0, i));
    RationalMatrix shared = first;
    RationalMatrix held = first * Rational((Rational(1) - alt_pi) / alt_pi);
    RationalMatrix naive_shared = shared;
    RationalMatrix naive_held = held;

    auto record = [&](std::size_t h, const RationalMatrix& value) {
      const SharedMessage& original = *ep[h][static_cast<std::size_t>(i)];
      reference_view.push_back(original);
      world.identical = world.identical && (value == exact(original.value));
      world.replayed_view.push_back({quantity, key.second, original.round, i, approximate(value)});
    };
    record(0, shared);

    for (std::size_t h = 0; h + 1 < rounds; ++h) {
      // Neighbors other than the target and the absorbing agent keep their reference streams.
      RationalMatrix fixed_mix = w_ii * shared;
      RationalMatrix naive_mix = w_ii * naive_shared;
      for (Index j : ni) {
        if (j == i || j == p) continue;
        const RationalMatrix other = exact(value_of(ep, h, j));
        fixed_mix += Rational(ref.w(i, j)) * other;
        naive_mix += Rational(ref.w(i, j)) * other;
      }
      const RationalMatrix target_next = exact(value_of(ep, h + 1, i));
      const RationalMatrix leak = eps_pi * (shared - held);
      const RationalMatrix absorbing = (target_next - fixed_mix + leak) / w_ip;

      const MatrixXd& p_reference = value_of(ep, h, p);
      const MatrixXd absorbing_d = approximate(absorbing);
      world.absorbing_deviation = std::max(world.absorbing_deviation, (absorbing_d - p_reference).cwiseAbs().maxCoeff());
      world.absorbing_stream.push_back({quantity, key.second, static_cast<int>(h), p, absorbing_d});

      RationalMatrix mixed = fixed_mix + w_ip * absorbing;
      decomposed_update(shared, held, mixed, eps_pi);
      record(h + 1, shared);

      RationalMatrix naive_mixed = naive_mix + w_ip * exact(p_reference);
      decomposed_update(naive_shared, naive_held, naive_mixed, eps_pi);
      const MatrixXd observed = value_of(ep, h + 1, i);
      naive_gap = std::max(naive_gap, (approximate(naive_shared) - observed).cwiseAbs().maxCoeff());
      scale = std::max(scale, observed.cwiseAbs().maxCoeff());
    }
  }

  world.reference_hash = stream_hash(reference_view);
  world.replay_hash = stream_hash(world.replayed_view);
  world.identical = world.identical && world.reference_hash == world.replay_hash;
  world.naive_replay_differs = naive_gap > 1e-9 * std::max(1.0, scale);
  return world;
}

AngleInference adversary_infer_angle(const AdversaryView& view, double assumed_pi, Index agent_count,
                                     const ForceParametrization& param) {
  if (!(assumed_pi > 0.0 && assumed_pi < 1.0)) throw ConfigError("adversary_infer_angle: assumed pi must lie in (0, 1)");
  const auto first = std::find_if(view.observed.begin(), view.observed.end(), [](const SharedMessage& m) {
    return m.quantity == SharedQuantity::input_gramian && m.round == 0;
  });
  if (first == view.observed.end()) throw ConfigError("adversary_infer_angle: view holds no input Gramian message");
  const MatrixXd gramian = first->value / (assumed_pi * static_cast<double>(agent_count));
  AngleInference out;
  out.assumed_pi = assumed_pi;
  out.implied_cos_sq = gramian(param.cos_row, param.cos_row) * param.mass * param.mass;
  if (out.implied_cos_sq > 1.0) return out;
  const double cosine = std::copysign(std::sqrt(std::max(0.0, out.implied_cos_sq)), gramian(param.cos_row, param.sin_row));
  out.theta = std::acos(cosine);
  return out;
}

}  // namespace ppcc
