#include "ppcc/plant.hpp"

#include "ppcc/linalg.hpp"
#include "ppcc/random.hpp"

#include <cmath>
#include <string>

namespace ppcc {

PlantModel::PlantModel(MatrixXd a, std::vector<Channel> channels) : a_(std::move(a)), channels_(std::move(channels)) {
  if (a_.rows() != a_.cols() || a_.rows() == 0) throw DimensionError("plant: A must be square and nonempty");
  if (!a_.allFinite()) throw ConfigError("plant: A has non-finite entries");
  const Index n = a_.rows();
  for (std::size_t i = 0; i < channels_.size(); ++i) {
    const auto& ch = channels_[i];
    const std::string tag = "plant: channel " + std::to_string(i);
    if (ch.b.rows() != n) throw DimensionError(tag + " B has " + std::to_string(ch.b.rows()) + " rows, expected " + std::to_string(n));
    if (ch.c.cols() != n) throw DimensionError(tag + " C has " + std::to_string(ch.c.cols()) + " columns, expected " + std::to_string(n));
    if (!ch.b.allFinite() || !ch.c.allFinite()) throw ConfigError(tag + " has non-finite entries");
  }
}

const Channel& PlantModel::channel(Index i) const {
  if (i < 0 || i >= agent_count()) throw DimensionError("plant: channel index " + std::to_string(i) + " out of range");
  return channels_[static_cast<std::size_t>(i)];
}

Index PlantModel::input_dim() const {
  Index r = 0;
  for (const auto& ch : channels_) r += ch.b.cols();
  return r;
}

Index PlantModel::output_dim() const {
  Index m = 0;
  for (const auto& ch : channels_) m += ch.c.rows();
  return m;
}

MatrixXd PlantModel::stacked_input() const {
  MatrixXd out(state_dim(), input_dim());
  Index col = 0;
  for (const auto& ch : channels_) {
    out.middleCols(col, ch.b.cols()) = ch.b;
    col += ch.b.cols();
  }
  return out;
}

MatrixXd PlantModel::stacked_output() const {
  MatrixXd out(output_dim(), state_dim());
  Index row = 0;
  for (const auto& ch : channels_) {
    out.middleRows(row, ch.c.rows()) = ch.c;
    row += ch.c.rows();
  }
  return out;
}

MatrixXd PlantModel::input_gramian() const {
  MatrixXd g = MatrixXd::Zero(state_dim(), state_dim());
  for (const auto& ch : channels_) g += ch.b * ch.b.transpose();
  return g;
}

MatrixXd PlantModel::output_gramian() const {
  MatrixXd g = MatrixXd::Zero(state_dim(), state_dim());
  for (const auto& ch : channels_) g += ch.c.transpose() * ch.c;
  return g;
}

VectorXd process_noise(const NoiseSpec& noise, std::int64_t k, Index n) {
  VectorXd w(n);
  const CounterRng rng(noise.seed, 1);
  for (Index j = 0; j < n; ++j) w(j) = noise.sigma_w * rng.gaussian(static_cast<std::uint64_t>(k * n + j));
  return w;
}

VectorXd measurement_noise(const NoiseSpec& noise, std::int64_t k, Index channel, Index m_i) {
  VectorXd v(m_i);
  const CounterRng rng(noise.seed, 2 + static_cast<std::uint64_t>(channel));
  for (Index j = 0; j < m_i; ++j) v(j) = noise.sigma_v * rng.gaussian(static_cast<std::uint64_t>(k * m_i + j));
  return v;
}

PlantState step(const PlantModel& p, const PlantState& st, const std::vector<VectorXd>& u,
                const std::optional<NoiseSpec>& noise) {
  if (static_cast<Index>(u.size()) != p.agent_count())
    throw DimensionError("step: expected " + std::to_string(p.agent_count()) + " input vectors");
  if (st.s.size() != p.state_dim()) throw DimensionError("step: state dimension mismatch");
  VectorXd next = p.a() * st.s;
  for (Index i = 0; i < p.agent_count(); ++i) {
    const auto& ui = u[static_cast<std::size_t>(i)];
    if (ui.size() != p.b(i).cols())
      throw DimensionError("step: input " + std::to_string(i) + " has size " + std::to_string(ui.size()));
    next += p.b(i) * ui;
  }
  if (noise && noise->sigma_w > 0.0) next += process_noise(*noise, st.k, p.state_dim());
  return {std::move(next), st.k + 1};
}

VectorXd measure(const PlantModel& p, const PlantState& st, Index i, const std::optional<NoiseSpec>& noise) {
  const MatrixXd& c = p.c(i);
  VectorXd y = c * st.s;
  if (noise && noise->sigma_v > 0.0) y += measurement_noise(*noise, st.k, i, c.rows());
  return y;
}

JointAssumptions check_joint_assumptions(const PlantModel& p) {
  return {is_stabilizable(p.a(), p.stacked_input()), is_detectable(p.a(), p.stacked_output())};
}

PlantModel add_channel(const PlantModel& p, const VectorXd& b_new, const std::optional<MatrixXd>& c_new) {
  const Index n = p.state_dim();
  if (b_new.size() != n) throw DimensionError("add_channel: b_new has " + std::to_string(b_new.size()) + " entries");
  MatrixXd c = c_new ? *c_new : MatrixXd::Zero(1, n);
  if (c.cols() != n) throw DimensionError("add_channel: c_new column count mismatch");
  auto channels = p.channels();
  channels.push_back({MatrixXd(b_new), std::move(c)});
  return PlantModel(p.a(), std::move(channels));
}

PlantModel point_mass_plant(double dt, double mass, const std::vector<double>& angles,
                            const std::vector<int>& measured_axis) {
  if (angles.size() != measured_axis.size()) throw DimensionError("point_mass_plant: one axis per angle expected");
  MatrixXd a = MatrixXd::Identity(4, 4);
  a(0, 2) = dt;
  a(1, 3) = dt;
  std::vector<Channel> channels;
  for (std::size_t i = 0; i < angles.size(); ++i) {
    MatrixXd b = MatrixXd::Zero(4, 1);
    b(2, 0) = std::cos(angles[i]) / mass;
    b(3, 0) = std::sin(angles[i]) / mass;
    MatrixXd c = MatrixXd::Zero(1, 4);
    if (measured_axis[i] >= 0) c(0, measured_axis[i]) = 1.0;
    channels.push_back({std::move(b), std::move(c)});
  }
  return PlantModel(std::move(a), std::move(channels));
}

}  // namespace ppcc
