#pragma once

#include "ppcc/types.hpp"

#include <cstdint>
#include <vector>

namespace ppcc {

// neighbors[i] lists the agents whose messages agent i receives, always including i itself.
class CommGraph {
 public:
  CommGraph() = default;
  // Self loops are added automatically; indices must lie in [0, agent_count).
  CommGraph(Index agent_count, std::vector<std::vector<Index>> in_neighbors);

  Index size() const { return static_cast<Index>(neighbors_.size()); }
  const std::vector<Index>& neighbors(Index i) const { return neighbors_.at(static_cast<std::size_t>(i)); }
  const std::vector<std::vector<Index>>& neighbor_sets() const { return neighbors_; }
  bool receives_from(Index i, Index j) const;
  // Agents that receive agent i's messages (i excluded).
  std::vector<Index> out_neighbors(Index i) const;
  bool is_undirected() const;
  bool is_strongly_connected() const;

  friend bool operator==(const CommGraph&, const CommGraph&) = default;

 private:
  std::vector<std::vector<Index>> neighbors_;
};

// Edge i -> i+1 (mod N): agent i+1 receives from agent i.
CommGraph directed_cycle(Index n);
CommGraph complete_graph(Index n);
CommGraph path_graph(Index n);
CommGraph star_graph(Index n, Index center);

enum class WeightRule { uniform, metropolis };

class StochasticMatrix {
 public:
  StochasticMatrix() = default;
  // Validates nonnegativity and unit row sums (1e-12).
  explicit StochasticMatrix(MatrixXd w);
  const MatrixXd& matrix() const { return w_; }
  Index size() const { return w_.rows(); }
  double operator()(Index i, Index j) const { return w_(i, j); }
  bool is_doubly_stochastic(double tol = 1e-12) const;

 private:
  MatrixXd w_;
};

struct PrivacyWeights {
  double epsilon = 0.1;
  std::vector<double> pi;

  // Throws ConfigError unless epsilon in (0, 2/3) and every pi in (0, 1).
  void validate() const;
  Index size() const { return static_cast<Index>(pi.size()); }
};

// pi_i uniform on [0.1, 0.9] from the counter-based generator.
PrivacyWeights random_privacy_weights(Index n, double epsilon, std::uint64_t seed);

struct AugmentedWeights {
  MatrixXd w_tilde;  // [[W - eps Pi, eps Pi], [eps Pi, I - eps Pi]]
  MatrixXd v;        // [Pi; I - Pi]
};

StochasticMatrix build_weights(const CommGraph& g, WeightRule rule);
AugmentedWeights build_augmented(const StochasticMatrix& w, const PrivacyWeights& pw);

// Largest eigenvalue magnitude after removing the (simple) eigenvalue 1.
double second_eigenvalue(const MatrixXd& stochastic);
inline double second_eigenvalue(const StochasticMatrix& w) { return second_eigenvalue(w.matrix()); }

// Eigenvalue pair of the Pi = I augmented matrix generated by one eigenvalue of W.
std::pair<Complex, Complex> unit_pi_augmented_eigenvalues(Complex lambda, double epsilon);

// Network-wide maximum by flooding over the graph for N-1 rounds.
std::vector<double> max_consensus(const CommGraph& g, std::vector<double> values);

}  // namespace ppcc
