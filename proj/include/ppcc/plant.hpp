#pragma once

#include "ppcc/types.hpp"

#include <cstdint>
#include <optional>
#include <vector>

namespace ppcc {

struct Channel {
  MatrixXd b;  // n x r_i
  MatrixXd c;  // m_i x n
};

class PlantModel {
 public:
  PlantModel() = default;
  PlantModel(MatrixXd a, std::vector<Channel> channels);

  const MatrixXd& a() const { return a_; }
  const std::vector<Channel>& channels() const { return channels_; }
  const MatrixXd& b(Index i) const { return channel(i).b; }
  const MatrixXd& c(Index i) const { return channel(i).c; }

  Index state_dim() const { return a_.rows(); }
  Index agent_count() const { return static_cast<Index>(channels_.size()); }
  Index input_dim() const;   // r = sum r_i
  Index output_dim() const;  // m = sum m_i

  MatrixXd stacked_input() const;   // [B^1 ... B^N]
  MatrixXd stacked_output() const;  // [C^1; ...; C^N]
  MatrixXd input_gramian() const;   // sum_i B^i B^i^T
  MatrixXd output_gramian() const;  // sum_i C^i^T C^i

 private:
  const Channel& channel(Index i) const;

  MatrixXd a_;
  std::vector<Channel> channels_;
};

struct NoiseSpec {
  double sigma_w = 0.0;
  double sigma_v = 0.0;
  std::uint64_t seed = 0;

  bool active() const { return sigma_w > 0.0 || sigma_v > 0.0; }
};

struct PlantState {
  VectorXd s;
  std::int64_t k = 0;
};

PlantState step(const PlantModel& p, const PlantState& st, const std::vector<VectorXd>& u,
                const std::optional<NoiseSpec>& noise = std::nullopt);
VectorXd measure(const PlantModel& p, const PlantState& st, Index i,
                 const std::optional<NoiseSpec>& noise = std::nullopt);

// Draws used by step/measure, exposed so covariance checks can reuse the exact streams.
VectorXd process_noise(const NoiseSpec& noise, std::int64_t k, Index n);
VectorXd measurement_noise(const NoiseSpec& noise, std::int64_t k, Index channel, Index m_i);

struct JointAssumptions {
  bool stabilizable = false;
  bool detectable = false;
};

JointAssumptions check_joint_assumptions(const PlantModel& p);

// Appends channel N+1 with input column b_new and measurement c_new (zero row when omitted).
PlantModel add_channel(const PlantModel& p, const VectorXd& b_new, const std::optional<MatrixXd>& c_new = std::nullopt);

// Planar point mass moved by N agents: state (x, y, vx, vy), agent i pushes along angle[i]
// with gain 1/mass and measures coordinate measured_axis[i] (negative: no measurement,
// represented by a zero row).
PlantModel point_mass_plant(double dt, double mass, const std::vector<double>& angles,
                            const std::vector<int>& measured_axis);

}  // namespace ppcc
