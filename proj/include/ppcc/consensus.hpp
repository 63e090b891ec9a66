#pragma once

#include "ppcc/graph.hpp"

#include <vector>

namespace ppcc {

// Neighbor average sum_{j in N_i} w_ij x_j using only the messages agent i receives.
template <typename Value, typename Scalar>
Value neighbor_mix(const CommGraph& g, const MatrixX<Scalar>& w, const std::vector<Value>& x, Index i) {
  const auto& nb = g.neighbors(i);
  Value acc = w(i, nb.front()) * x[static_cast<std::size_t>(nb.front())];
  for (std::size_t k = 1; k < nb.size(); ++k) acc += w(i, nb[k]) * x[static_cast<std::size_t>(nb[k])];
  return acc;
}

// Agent-local decomposed update: the shared part mixes with neighbors and leaks toward the
// held part; the held part never leaves the agent.
//   shared <- mixed - eps_pi (shared - held)
//   held   <- (1 - eps_pi) held + eps_pi shared
template <typename Value, typename Scalar>
void decomposed_update(Value& shared, Value& held, const Value& mixed, const Scalar& eps_pi) {
  const Scalar keep = Scalar(1) - eps_pi;
  Value next_held = keep * held + eps_pi * shared;
  shared = mixed - eps_pi * (shared - held);
  held = std::move(next_held);
}

// One synchronous mixing round for every agent.
template <typename Value, typename Scalar>
void mixing_round(const CommGraph& g, const MatrixX<Scalar>& w, std::vector<Value>& x) {
  std::vector<Value> next;
  next.reserve(x.size());
  for (Index i = 0; i < g.size(); ++i) next.push_back(neighbor_mix(g, w, x, i));
  x = std::move(next);
}

// One synchronous decomposed round; eps_pi[i] = epsilon * pi_i.
template <typename Value, typename Scalar>
void decomposition_round(const CommGraph& g, const MatrixX<Scalar>& w, const std::vector<Scalar>& eps_pi,
                         std::vector<Value>& shared, std::vector<Value>& held) {
  std::vector<Value> mixed;
  mixed.reserve(shared.size());
  for (Index i = 0; i < g.size(); ++i) mixed.push_back(neighbor_mix(g, w, shared, i));
  for (Index i = 0; i < g.size(); ++i) {
    const auto s = static_cast<std::size_t>(i);
    decomposed_update(shared[s], held[s], mixed[s], eps_pi[s]);
  }
}

}  // namespace ppcc
