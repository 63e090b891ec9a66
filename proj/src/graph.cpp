#include "ppcc/graph.hpp"

#include "ppcc/linalg.hpp"
#include "ppcc/random.hpp"

#include <algorithm>
#include <cmath>
#include <queue>
#include <string>

namespace ppcc {

CommGraph::CommGraph(Index agent_count, std::vector<std::vector<Index>> in_neighbors) {
  if (agent_count <= 0) throw ConfigError("graph: agent count must be positive");
  if (static_cast<Index>(in_neighbors.size()) != agent_count)
    throw ConfigError("graph: expected " + std::to_string(agent_count) + " neighbor lists, got " +
                      std::to_string(in_neighbors.size()));
  for (Index i = 0; i < agent_count; ++i) {
    auto& set = in_neighbors[static_cast<std::size_t>(i)];
    for (Index j : set)
      if (j < 0 || j >= agent_count)
        throw ConfigError("graph: neighbor index " + std::to_string(j) + " of agent " + std::to_string(i) +
                          " out of range");
    set.push_back(i);
    std::sort(set.begin(), set.end());
    set.erase(std::unique(set.begin(), set.end()), set.end());
  }
  neighbors_ = std::move(in_neighbors);
}

bool CommGraph::receives_from(Index i, Index j) const {
  const auto& set = neighbors(i);
  return std::binary_search(set.begin(), set.end(), j);
}

std::vector<Index> CommGraph::out_neighbors(Index i) const {
  std::vector<Index> out;
  for (Index j = 0; j < size(); ++j)
    if (j != i && receives_from(j, i)) out.push_back(j);
  return out;
}

bool CommGraph::is_undirected() const {
  for (Index i = 0; i < size(); ++i)
    for (Index j : neighbors(i))
      if (!receives_from(j, i)) return false;
  return true;
}

bool CommGraph::is_strongly_connected() const {
  const Index n = size();
  auto reaches_all = [&](bool forward) {
    std::vector<bool> seen(static_cast<std::size_t>(n), false);
    std::queue<Index> frontier;
    frontier.push(0);
    seen[0] = true;
    while (!frontier.empty()) {
      const Index v = frontier.front();
      frontier.pop();
      for (Index u = 0; u < n; ++u) {
        const bool edge = forward ? receives_from(u, v) : receives_from(v, u);
        if (edge && !seen[static_cast<std::size_t>(u)]) {
          seen[static_cast<std::size_t>(u)] = true;
          frontier.push(u);
        }
      }
    }
    return std::all_of(seen.begin(), seen.end(), [](bool b) { return b; });
  };
  return n > 0 && reaches_all(true) && reaches_all(false);
}

CommGraph directed_cycle(Index n) {
  std::vector<std::vector<Index>> nb(static_cast<std::size_t>(n));
  for (Index i = 0; i < n; ++i) nb[static_cast<std::size_t>(i)] = {(i + n - 1) % n};
  return CommGraph(n, std::move(nb));
}

CommGraph complete_graph(Index n) {
  std::vector<std::vector<Index>> nb(static_cast<std::size_t>(n));
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < n; ++j) nb[static_cast<std::size_t>(i)].push_back(j);
  return CommGraph(n, std::move(nb));
}

CommGraph path_graph(Index n) {
  std::vector<std::vector<Index>> nb(static_cast<std::size_t>(n));
  for (Index i = 0; i + 1 < n; ++i) {
    nb[static_cast<std::size_t>(i)].push_back(i + 1);
    nb[static_cast<std::size_t>(i + 1)].push_back(i);
  }
  return CommGraph(n, std::move(nb));
}

CommGraph star_graph(Index n, Index center) {
  std::vector<std::vector<Index>> nb(static_cast<std::size_t>(n));
  for (Index i = 0; i < n; ++i) {
    if (i == center) continue;
    nb[static_cast<std::size_t>(i)].push_back(center);
    nb[static_cast<std::size_t>(center)].push_back(i);
  }
  return CommGraph(n, std::move(nb));
}

StochasticMatrix::StochasticMatrix(MatrixXd w) : w_(std::move(w)) {
  if (w_.rows() != w_.cols() || w_.rows() == 0) throw DimensionError("stochastic matrix must be square and nonempty");
  if (!w_.allFinite() || (w_.array() < 0.0).any()) throw ConfigError("stochastic matrix: entries must be finite and nonnegative");
  for (Index i = 0; i < w_.rows(); ++i)
    if (std::abs(w_.row(i).sum() - 1.0) > 1e-12)
      throw ConfigError("stochastic matrix: row " + std::to_string(i) + " does not sum to 1");
}

bool StochasticMatrix::is_doubly_stochastic(double tol) const {
  return ((w_.colwise().sum().array() - 1.0).abs() <= tol).all();
}

void PrivacyWeights::validate() const {
  if (!(epsilon > 0.0 && epsilon < 2.0 / 3.0))
    throw ConfigError("privacy: epsilon must lie in (0, 2/3), got " + std::to_string(epsilon));
  for (std::size_t i = 0; i < pi.size(); ++i)
    if (!(pi[i] > 0.0 && pi[i] < 1.0))
      throw ConfigError("privacy: pi[" + std::to_string(i) + "] must lie in (0, 1)");
}

PrivacyWeights random_privacy_weights(Index n, double epsilon, std::uint64_t seed) {
  const CounterRng rng(seed, 0x70726976ULL);
  PrivacyWeights pw{epsilon, {}};
  for (Index i = 0; i < n; ++i) pw.pi.push_back(0.1 + 0.8 * rng.uniform(static_cast<std::uint64_t>(i)));
  return pw;
}

StochasticMatrix build_weights(const CommGraph& g, WeightRule rule) {
  const Index n = g.size();
  if (g.is_undirected() && !g.is_strongly_connected())
    throw TopologyError("build_weights: undirected graph is disconnected");
  MatrixXd w = MatrixXd::Zero(n, n);
  switch (rule) {
    case WeightRule::uniform:
      for (Index i = 0; i < n; ++i) {
        const double share = 1.0 / static_cast<double>(g.neighbors(i).size());
        for (Index j : g.neighbors(i)) w(i, j) = share;
      }
      break;
    case WeightRule::metropolis: {
      if (!g.is_undirected()) throw ConfigError("build_weights: Metropolis weights need an undirected graph");
      auto degree = [&](Index i) { return static_cast<double>(g.neighbors(i).size() - 1); };
      for (Index i = 0; i < n; ++i) {
        double off = 0.0;
        for (Index j : g.neighbors(i)) {
          if (j == i) continue;
          w(i, j) = 1.0 / (1.0 + std::max(degree(i), degree(j)));
          off += w(i, j);
        }
        w(i, i) = 1.0 - off;
      }
      break;
    }
  }
  return StochasticMatrix(std::move(w));
}

AugmentedWeights build_augmented(const StochasticMatrix& w, const PrivacyWeights& pw) {
  pw.validate();
  const Index n = w.size();
  if (pw.size() != n) throw DimensionError("build_augmented: pi has " + std::to_string(pw.size()) + " entries, W is " + std::to_string(n));
  const VectorXd pi = Eigen::Map<const VectorXd>(pw.pi.data(), n);
  const MatrixXd pi_mat = pi.asDiagonal();
  const MatrixXd eye = MatrixXd::Identity(n, n);
  AugmentedWeights aug;
  aug.w_tilde.resize(2 * n, 2 * n);
  aug.w_tilde << w.matrix() - pw.epsilon * pi_mat, pw.epsilon * pi_mat,
                 pw.epsilon * pi_mat, eye - pw.epsilon * pi_mat;
  aug.v.resize(2 * n, n);
  aug.v << pi_mat, eye - pi_mat;
  return aug;
}

double second_eigenvalue(const MatrixXd& stochastic) {
  const Spectrum spec = eigenvalues(stochastic);
  if (spec.eigenvalues.size() <= 1) return 0.0;
  int unit = 0;
  double second = 0.0;
  for (const Complex& z : spec.eigenvalues) {
    if (std::abs(z - 1.0) < 1e-9) {
      ++unit;
      continue;
    }
    second = std::max(second, std::abs(z));
  }
  if (unit != 1)
    throw TopologyError("second_eigenvalue: eigenvalue 1 has multiplicity " + std::to_string(unit) +
                        " (graph not connected)");
  return second;
}

std::pair<Complex, Complex> unit_pi_augmented_eigenvalues(Complex lambda, double epsilon) {
  const Complex root = std::sqrt((1.0 - lambda) * (1.0 - lambda) + 4.0 * epsilon * epsilon);
  return {(1.0 + lambda + root) / 2.0 - epsilon, (1.0 + lambda - root) / 2.0 - epsilon};
}

std::vector<double> max_consensus(const CommGraph& g, std::vector<double> values) {
  if (static_cast<Index>(values.size()) != g.size()) throw DimensionError("max_consensus: one value per agent expected");
  for (Index round = 1; round < g.size(); ++round) {
    std::vector<double> next = values;
    for (Index i = 0; i < g.size(); ++i)
      for (Index j : g.neighbors(i))
        next[static_cast<std::size_t>(i)] = std::max(next[static_cast<std::size_t>(i)], values[static_cast<std::size_t>(j)]);
    values = std::move(next);
  }
  return values;
}

}  // namespace ppcc
