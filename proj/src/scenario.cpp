#include "ppcc/scenario.hpp"

#include <json.hpp>

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

namespace ppcc {

using nlohmann::json;

namespace {

[[noreturn]] void fail(const std::string& path, const std::string& what) { throw ConfigError(path + ": " + what); }

void reject_unknown(const json& obj, const std::string& path, std::initializer_list<const char*> known) {
  if (!obj.is_object()) fail(path, "expected an object");
  for (const auto& item : obj.items()) {
    if (std::none_of(known.begin(), known.end(), [&](const char* k) { return item.key() == k; }))
      fail(path.empty() ? item.key() : path + "." + item.key(), "unknown field");
  }
}

double number(const json& v, const std::string& path) {
  if (!v.is_number()) fail(path, "expected a number");
  return v.get<double>();
}

int integer(const json& v, const std::string& path) {
  if (!v.is_number_integer()) fail(path, "expected an integer");
  return v.get<int>();
}

std::uint64_t unsigned_integer(const json& v, const std::string& path) {
  if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<std::int64_t>() >= 0))
    fail(path, "expected a nonnegative integer");
  return v.get<std::uint64_t>();
}

VectorXd vector(const json& v, const std::string& path) {
  if (!v.is_array()) fail(path, "expected an array of numbers");
  VectorXd out(static_cast<Index>(v.size()));
  for (std::size_t i = 0; i < v.size(); ++i) out(static_cast<Index>(i)) = number(v[i], path + "[" + std::to_string(i) + "]");
  return out;
}

MatrixXd matrix(const json& v, const std::string& path) {
  if (!v.is_array()) fail(path, "expected nested row arrays");
  if (v.empty()) return MatrixXd(0, 0);
  const std::size_t cols = v[0].is_array() ? v[0].size() : 0;
  MatrixXd out(static_cast<Index>(v.size()), static_cast<Index>(cols));
  for (std::size_t r = 0; r < v.size(); ++r) {
    const std::string row_path = path + "[" + std::to_string(r) + "]";
    if (!v[r].is_array() || v[r].size() != cols) fail(row_path, "rows must be arrays of equal length");
    for (std::size_t c = 0; c < cols; ++c)
      out(static_cast<Index>(r), static_cast<Index>(c)) = number(v[r][c], row_path + "[" + std::to_string(c) + "]");
  }
  return out;
}

json to_json(const MatrixXd& m) {
  json rows = json::array();
  for (Index r = 0; r < m.rows(); ++r) {
    json row = json::array();
    for (Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    rows.push_back(std::move(row));
  }
  return rows;
}

json to_json(const VectorXd& v) { return json(std::vector<double>(v.data(), v.data() + v.size())); }

StepCount step_count(const json& v, const std::string& path, int minimum) {
  if (v.is_string() && v.get<std::string>() == "auto") return {1, true};
  const int value = integer(v, path);
  if (value < minimum) fail(path, "must be at least " + std::to_string(minimum) + " or \"auto\"");
  return {value, false};
}

json to_json(const StepCount& s) { return s.automatic ? json("auto") : json(s.value); }

std::vector<double> probabilities(const json& v, const std::string& path) {
  const VectorXd x = vector(v, path);
  for (Index i = 0; i < x.size(); ++i)
    if (!(x(i) > 0.0 && x(i) < 1.0)) fail(path + "[" + std::to_string(i) + "]", "must lie in (0, 1)");
  return {x.data(), x.data() + x.size()};
}

Scenario from_json(const json& j) {
  reject_unknown(j, "", {"name", "plant", "graph", "weights", "privacy", "fusion", "simulation", "noise", "analysis",
                         "verdict", "channel_addition", "audit", "output"});
  Scenario sc;
  sc.name = j.value("name", std::string("scenario"));

  if (!j.contains("plant")) fail("plant", "required");
  const json& pj = j["plant"];
  reject_unknown(pj, "plant", {"a", "channels"});
  if (!pj.contains("a")) fail("plant.a", "required");
  if (!pj.contains("channels") || !pj["channels"].is_array()) fail("plant.channels", "required array");
  std::vector<Channel> channels;
  for (std::size_t i = 0; i < pj["channels"].size(); ++i) {
    const std::string path = "plant.channels[" + std::to_string(i) + "]";
    const json& cj = pj["channels"][i];
    reject_unknown(cj, path, {"b", "c"});
    if (!cj.contains("b") || !cj.contains("c")) fail(path, "needs both b and c");
    channels.push_back({matrix(cj["b"], path + ".b"), matrix(cj["c"], path + ".c")});
  }
  try {
    sc.plant = PlantModel(matrix(pj["a"], "plant.a"), std::move(channels));
  } catch (const DimensionError& e) {
    fail("plant", e.what());
  }
  const Index n = sc.plant.state_dim();
  const Index n_agents = sc.plant.agent_count();
  if (n_agents == 0) fail("plant.channels", "at least one channel is required");

  if (!j.contains("graph")) fail("graph", "required");
  reject_unknown(j["graph"], "graph", {"neighbors"});
  const json& nj = j["graph"].value("neighbors", json::array());
  if (!nj.is_array()) fail("graph.neighbors", "expected an array of index arrays");
  std::vector<std::vector<Index>> neighbors;
  for (std::size_t i = 0; i < nj.size(); ++i) {
    std::vector<Index> set;
    if (!nj[i].is_array()) fail("graph.neighbors[" + std::to_string(i) + "]", "expected an index array");
    for (std::size_t k = 0; k < nj[i].size(); ++k)
      set.push_back(integer(nj[i][k], "graph.neighbors[" + std::to_string(i) + "][" + std::to_string(k) + "]"));
    neighbors.push_back(std::move(set));
  }
  if (static_cast<Index>(neighbors.size()) != n_agents)
    fail("graph.neighbors", "expected " + std::to_string(n_agents) + " lists (one per channel)");
  try {
    sc.graph = CommGraph(n_agents, std::move(neighbors));
  } catch (const ConfigError& e) {
    fail("graph.neighbors", e.what());
  }

  const std::string rule = j.value("weights", std::string("uniform"));
  if (rule == "uniform") sc.weight_rule = WeightRule::uniform;
  else if (rule == "metropolis") sc.weight_rule = WeightRule::metropolis;
  else fail("weights", "expected \"uniform\" or \"metropolis\"");

  if (j.contains("privacy")) {
    const json& pr = j["privacy"];
    reject_unknown(pr, "privacy", {"enabled", "epsilon", "pi", "pi_seed"});
    if (pr.contains("enabled")) {
      if (!pr["enabled"].is_boolean()) fail("privacy.enabled", "expected true or false");
      sc.privacy = pr["enabled"].get<bool>();
    }
    if (pr.contains("epsilon")) sc.epsilon = number(pr["epsilon"], "privacy.epsilon");
    if (pr.contains("pi") && !pr["pi"].is_null()) {
      sc.pi = probabilities(pr["pi"], "privacy.pi");
      if (static_cast<Index>(sc.pi->size()) != n_agents) fail("privacy.pi", "expected one entry per agent");
    }
    if (pr.contains("pi_seed")) sc.pi_seed = unsigned_integer(pr["pi_seed"], "privacy.pi_seed");
  }
  if (!(sc.epsilon > 0.0 && sc.epsilon < 2.0 / 3.0)) fail("privacy.epsilon", "must lie in (0, 2/3)");

  if (j.contains("fusion")) {
    const json& fj = j["fusion"];
    reject_unknown(fj, "fusion", {"m1", "m2", "delta", "max_rounds"});
    if (fj.contains("m1")) sc.m1 = step_count(fj["m1"], "fusion.m1", 0);
    if (fj.contains("m2")) sc.m2 = step_count(fj["m2"], "fusion.m2", 1);
    if (fj.contains("delta")) sc.delta = number(fj["delta"], "fusion.delta");
    if (fj.contains("max_rounds")) sc.max_rounds = integer(fj["max_rounds"], "fusion.max_rounds");
  }
  if (!(sc.delta > 0.0)) fail("fusion.delta", "must be positive");
  if (sc.max_rounds < 1) fail("fusion.max_rounds", "must be positive");

  sc.initial_state = VectorXd::Zero(n);
  sc.desired_state = VectorXd::Zero(n);
  if (j.contains("simulation")) {
    const json& sj = j["simulation"];
    reject_unknown(sj, "simulation", {"horizon", "initial_state", "desired_state"});
    if (sj.contains("horizon")) sc.horizon = integer(sj["horizon"], "simulation.horizon");
    if (sj.contains("initial_state")) sc.initial_state = vector(sj["initial_state"], "simulation.initial_state");
    if (sj.contains("desired_state")) sc.desired_state = vector(sj["desired_state"], "simulation.desired_state");
  }
  if (sc.horizon < 1) fail("simulation.horizon", "must be positive");
  if (sc.initial_state.size() != n) fail("simulation.initial_state", "expected " + std::to_string(n) + " entries");
  if (sc.desired_state.size() != n) fail("simulation.desired_state", "expected " + std::to_string(n) + " entries");

  if (j.contains("noise")) {
    const json& no = j["noise"];
    reject_unknown(no, "noise", {"sigma_w", "sigma_v", "seed"});
    if (no.contains("sigma_w")) sc.noise.sigma_w = number(no["sigma_w"], "noise.sigma_w");
    if (no.contains("sigma_v")) sc.noise.sigma_v = number(no["sigma_v"], "noise.sigma_v");
    if (no.contains("seed")) sc.noise.seed = unsigned_integer(no["seed"], "noise.seed");
  }
  if (sc.noise.sigma_w < 0.0) fail("noise.sigma_w", "must be nonnegative");
  if (sc.noise.sigma_v < 0.0) fail("noise.sigma_v", "must be nonnegative");

  if (j.contains("analysis")) {
    const json& aj = j["analysis"];
    reject_unknown(aj, "analysis", {"theta"});
    if (aj.contains("theta") && !aj["theta"].is_null()) {
      sc.theta = number(aj["theta"], "analysis.theta");
      if (!(*sc.theta > 0.0)) fail("analysis.theta", "must be positive");
    }
  }

  if (j.contains("verdict")) {
    const json& vj = j["verdict"];
    reject_unknown(vj, "verdict", {"threshold", "window_fraction", "divergence_threshold"});
    if (vj.contains("threshold")) sc.verdict_threshold = number(vj["threshold"], "verdict.threshold");
    if (vj.contains("window_fraction")) sc.verdict_window = number(vj["window_fraction"], "verdict.window_fraction");
    if (vj.contains("divergence_threshold"))
      sc.divergence_threshold = number(vj["divergence_threshold"], "verdict.divergence_threshold");
  }
  if (!(sc.verdict_window > 0.0 && sc.verdict_window <= 1.0)) fail("verdict.window_fraction", "must lie in (0, 1]");

  if (j.contains("channel_addition") && !j["channel_addition"].is_null()) {
    const json& cj = j["channel_addition"];
    reject_unknown(cj, "channel_addition", {"b", "c"});
    Channel ch;
    ch.b = vector(cj.value("b", json::array()), "channel_addition.b");
    ch.c = cj.contains("c") ? matrix(cj["c"], "channel_addition.c") : MatrixXd::Zero(1, n);
    if (ch.b.rows() != n) fail("channel_addition.b", "expected " + std::to_string(n) + " entries");
    if (ch.c.cols() != n) fail("channel_addition.c", "expected " + std::to_string(n) + " columns");
    sc.channel_addition = std::move(ch);
  }

  if (j.contains("audit")) {
    const json& au = j["audit"];
    reject_unknown(au, "audit", {"target", "adversary", "alt_pi", "assumed_pi", "force_mass", "cos_row", "sin_row",
                                 "estimate_steps"});
    if (au.contains("target")) sc.audit.target = integer(au["target"], "audit.target");
    if (au.contains("adversary")) sc.audit.adversary = integer(au["adversary"], "audit.adversary");
    if (au.contains("alt_pi")) sc.audit.alt_pi = probabilities(au["alt_pi"], "audit.alt_pi");
    if (au.contains("assumed_pi")) sc.audit.assumed_pi = probabilities(au["assumed_pi"], "audit.assumed_pi");
    if (au.contains("force_mass")) sc.audit.force_mass = number(au["force_mass"], "audit.force_mass");
    if (au.contains("cos_row")) sc.audit.cos_row = integer(au["cos_row"], "audit.cos_row");
    if (au.contains("sin_row")) sc.audit.sin_row = integer(au["sin_row"], "audit.sin_row");
    if (au.contains("estimate_steps")) sc.audit.estimate_steps = integer(au["estimate_steps"], "audit.estimate_steps");
  }
  for (auto [value, path] : {std::pair{sc.audit.target, "audit.target"}, std::pair{sc.audit.adversary, "audit.adversary"}})
    if (value < 0 || value >= n_agents) fail(path, "agent index out of range");
  for (auto [value, path] : {std::pair{sc.audit.cos_row, "audit.cos_row"}, std::pair{sc.audit.sin_row, "audit.sin_row"}})
    if (value < 0 || value >= n) fail(path, "state index out of range");

  if (j.contains("output")) {
    reject_unknown(j["output"], "output", {"dir"});
    sc.output_dir = j["output"].value("dir", std::string());
  }
  return sc;
}

json to_json(const Scenario& sc) {
  json j;
  j["name"] = sc.name;
  json channels = json::array();
  for (const auto& ch : sc.plant.channels()) channels.push_back({{"b", to_json(ch.b)}, {"c", to_json(ch.c)}});
  j["plant"] = {{"a", to_json(sc.plant.a())}, {"channels", channels}};
  json neighbors = json::array();
  for (Index i = 0; i < sc.graph.size(); ++i) {
    json set = json::array();
    for (Index k : sc.graph.neighbors(i))
      if (k != i) set.push_back(k);
    neighbors.push_back(set);
  }
  j["graph"] = {{"neighbors", neighbors}};
  j["weights"] = sc.weight_rule == WeightRule::uniform ? "uniform" : "metropolis";
  j["privacy"] = {{"enabled", sc.privacy}, {"epsilon", sc.epsilon}, {"pi", sc.pi ? json(*sc.pi) : json(nullptr)},
                  {"pi_seed", sc.pi_seed}};
  j["fusion"] = {{"m1", to_json(sc.m1)}, {"m2", to_json(sc.m2)}, {"delta", sc.delta}, {"max_rounds", sc.max_rounds}};
  j["simulation"] = {{"horizon", sc.horizon}, {"initial_state", to_json(sc.initial_state)},
                     {"desired_state", to_json(sc.desired_state)}};
  j["noise"] = {{"sigma_w", sc.noise.sigma_w}, {"sigma_v", sc.noise.sigma_v}, {"seed", sc.noise.seed}};
  j["analysis"] = {{"theta", sc.theta ? json(*sc.theta) : json(nullptr)}};
  j["verdict"] = {{"threshold", sc.verdict_threshold}, {"window_fraction", sc.verdict_window},
                  {"divergence_threshold", sc.divergence_threshold}};
  if (sc.channel_addition)
    j["channel_addition"] = {{"b", to_json(VectorXd(sc.channel_addition->b.col(0)))}, {"c", to_json(sc.channel_addition->c)}};
  else
    j["channel_addition"] = nullptr;
  j["audit"] = {{"target", sc.audit.target},         {"adversary", sc.audit.adversary},
                {"alt_pi", sc.audit.alt_pi},         {"assumed_pi", sc.audit.assumed_pi},
                {"force_mass", sc.audit.force_mass}, {"cos_row", sc.audit.cos_row},
                {"sin_row", sc.audit.sin_row},       {"estimate_steps", sc.audit.estimate_steps}};
  j["output"] = {{"dir", sc.output_dir}};
  return j;
}

std::pair<std::size_t, std::size_t> line_column(const std::string& text, std::size_t byte) {
  std::size_t line = 1, col = 1;
  for (std::size_t i = 0; i < std::min(byte, text.size()); ++i) {
    if (text[i] == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
  }
  return {line, col};
}

}  // namespace

PrivacyWeights Scenario::privacy_weights() const {
  if (pi) return {epsilon, *pi};
  return random_privacy_weights(plant.agent_count(), epsilon, pi_seed);
}

Scenario parse_scenario(const std::string& text, const std::string& origin) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    const auto [line, col] = line_column(text, e.byte == 0 ? 0 : e.byte - 1);
    throw ConfigError(origin + ":" + std::to_string(line) + ":" + std::to_string(col) + ": JSON parse error: " + e.what());
  }
  try {
    return from_json(j);
  } catch (const ConfigError& e) {
    throw ConfigError(origin + ": " + e.what());
  } catch (const json::exception& e) {
    throw ConfigError(origin + ": " + e.what());
  }
}

Scenario load_scenario(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(path.string() + ": cannot open scenario file");
  std::stringstream buf;
  buf << in.rdbuf();
  Scenario sc = parse_scenario(buf.str(), path.string());
  if (sc.name.empty()) sc.name = path.stem().string();
  return sc;
}

std::string serialize_scenario(const Scenario& sc) { return to_json(sc).dump(2) + "\n"; }

std::vector<std::filesystem::path> resolve_scenarios(const std::string& name_or_path,
                                                     const std::filesystem::path& scenario_dir) {
  namespace fs = std::filesystem;
  if (fs::is_regular_file(name_or_path)) return {fs::path(name_or_path)};
  std::vector<fs::path> matches;
  if (fs::is_directory(scenario_dir)) {
    const fs::path exact = scenario_dir / (name_or_path + ".json");
    if (fs::is_regular_file(exact)) return {exact};
    for (const auto& entry : fs::directory_iterator(scenario_dir)) {
      const std::string stem = entry.path().stem().string();
      if (entry.path().extension() == ".json" && stem.rfind(name_or_path, 0) == 0) matches.push_back(entry.path());
    }
  }
  std::sort(matches.begin(), matches.end());
  if (matches.empty()) throw ConfigError(name_or_path + ": no such scenario file or bundled scenario");
  return matches;
}

}  // namespace ppcc
