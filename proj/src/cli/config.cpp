#include "covsteer/cli/config.hpp"

#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

#include "covsteer/errors.hpp"

namespace covsteer::cli {
namespace {

using nlohmann::json;

// Inertial particles: position/velocity with force input.
constexpr const char* kInertialBase = R"({
  "problem": {
    "A": [[0, 1], [0, 0]],
    "B": [[0], [1]],
    "Q": [[1, 0], [0, 1]],
    "sigma0": [[2, 0], [0, 2]],
    "sigma1": [[0.25, 0], [0, 0.25]]
  },
  "epsilon": 1.0,
  "grid_size": 2000,
  "monte_carlo": {"n_paths": 20000, "n_steps": 1000, "seed": 1,
                  "checkpoints": [0, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1]},
  "tube": {"level": 3, "resolution": 64, "stride": 10},
  "sweep": {"epsilons": [10, 1, 0.1, 0.01, 0]}
})";

constexpr const char* kScalarTrivial = R"({
  "problem": {
    "A": [[0]],
    "B": [[1]],
    "Q": [[0]],
    "sigma0": [[1]],
    "sigma1": [[1]]
  },
  "epsilon": 1.0,
  "grid_size": 1000,
  "monte_carlo": {"n_paths": 2000, "n_steps": 1000, "seed": 1,
                  "checkpoints": [0, 0.5, 1]},
  "sweep": {"epsilons": [1, 0.1, 0.01, 0]}
})";

const std::map<std::string, json>& presets() {
  static const std::map<std::string, json> table = [] {
    std::map<std::string, json> t;
    const json inertial = json::parse(kInertialBase);
    const auto variant = [&](const char* name, const char* patch) {
      json j = inertial;
      j.merge_patch(json::parse(patch));
      j["name"] = name;
      t[name] = j;
    };
    variant("inertial-q1", "{}");
    variant("inertial-q10", R"({"problem": {"Q": [[10, 0], [0, 10]]}})");
    variant("inertial-qneg5", R"({"problem": {"Q": [[-5, 0], [0, -5]]}})");
    variant("inertial-q0", R"({"problem": {"Q": [[0, 0], [0, 0]]}})");
    variant("inertial-eps10", R"({"epsilon": 10.0})");
    variant("inertial-eps0.1", R"({"epsilon": 0.1})");
    variant("inertial-omt", R"({"epsilon": 0.0})");
    variant("inertial-r4", R"({"problem": {"R": [[4]]}})");
    json scalar = json::parse(kScalarTrivial);
    scalar["name"] = "scalar-trivial";
    t["scalar-trivial"] = scalar;
    return t;
  }();
  return table;
}

[[noreturn]] void fail(const std::string& path, const std::string& msg) {
  throw ConfigError(path + ": " + msg);
}

Eigen::MatrixXd parse_matrix(const json& j, const std::string& path) {
  if (!j.is_array() || j.empty()) fail(path, "expected a non-empty array of rows");
  const std::size_t cols = j.front().is_array() ? j.front().size() : 0;
  if (cols == 0) fail(path, "rows must be non-empty arrays");
  Eigen::MatrixXd m(j.size(), cols);
  for (std::size_t r = 0; r < j.size(); ++r) {
    const json& row = j[r];
    if (!row.is_array() || row.size() != cols) {
      fail(path + "[" + std::to_string(r) + "]", "ragged matrix row");
    }
    for (std::size_t c = 0; c < cols; ++c) {
      if (!row[c].is_number()) {
        fail(path + "[" + std::to_string(r) + "][" + std::to_string(c) + "]",
             "expected a number");
      }
      m(r, c) = row[c].get<double>();
    }
  }
  return m;
}

json matrix_json(const Eigen::MatrixXd& m) {
  json rows = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    json row = json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    rows.push_back(row);
  }
  return rows;
}

std::vector<double> parse_times(const json& j, const std::string& path) {
  if (!j.is_array()) fail(path, "expected an array of numbers");
  std::vector<double> out;
  for (std::size_t i = 0; i < j.size(); ++i) {
    if (!j[i].is_number()) fail(path + "[" + std::to_string(i) + "]", "expected a number");
    out.push_back(j[i].get<double>());
  }
  return out;
}

SignalConfig parse_signal(const json& j, const std::string& path) {
  SignalConfig s;
  if (j.is_array()) {
    s.values.push_back(parse_matrix(j, path));
    return s;
  }
  if (!j.is_object()) fail(path, "expected a matrix or a coefficient object");
  s.type = j.value("type", std::string("constant"));
  if (s.type == "constant") {
    if (!j.contains("value")) fail(path + ".value", "missing");
    s.values.push_back(parse_matrix(j["value"], path + ".value"));
    return s;
  }
  if (s.type != "piecewise" && s.type != "sampled") {
    fail(path + ".type", "must be constant, piecewise or sampled");
  }
  const char* key = s.type == "piecewise" ? "breakpoints" : "times";
  if (!j.contains(key)) fail(path + "." + key, "missing");
  if (!j.contains("values") || !j["values"].is_array()) fail(path + ".values", "missing");
  s.times = parse_times(j[key], path + "." + key);
  for (std::size_t i = 0; i < j["values"].size(); ++i) {
    s.values.push_back(
        parse_matrix(j["values"][i], path + ".values[" + std::to_string(i) + "]"));
  }
  try {
    (void)s.to_map();
  } catch (const DomainError& e) {
    fail(path, e.what());
  }
  return s;
}

json signal_json(const SignalConfig& s) {
  if (s.type == "constant") return matrix_json(s.values.front());
  json values = json::array();
  for (const auto& v : s.values) values.push_back(matrix_json(v));
  return {{"type", s.type},
          {s.type == "piecewise" ? "breakpoints" : "times", s.times},
          {"values", values}};
}

template <typename T>
T get_number(const json& obj, const char* key, T fallback, const std::string& path) {
  if (!obj.contains(key)) return fallback;
  const json& v = obj[key];
  if constexpr (std::is_integral_v<T>) {
    if (!v.is_number_integer()) fail(path + "." + key, "expected an integer");
  } else {
    if (!v.is_number()) fail(path + "." + key, "expected a number");
  }
  return v.get<T>();
}

}  // namespace

CoefficientMap SignalConfig::to_map() const {
  if (type == "constant") {
    if (values.size() != 1) throw DomainError("constant coefficient needs exactly one value");
    return CoefficientMap::constant(values.front());
  }
  if (type == "piecewise") return CoefficientMap::piecewise(times, values);
  return CoefficientMap::sampled(times, values);
}

bool RunConfig::operator==(const RunConfig& other) const {
  return to_json(*this) == to_json(other);
}

json to_json(const RunConfig& c) {
  json problem = {{"A", signal_json(c.problem.A)},
                  {"B", signal_json(c.problem.B)},
                  {"Q", signal_json(c.problem.Q)},
                  {"sigma0", matrix_json(c.problem.sigma0)},
                  {"sigma1", matrix_json(c.problem.sigma1)}};
  if (c.problem.R) problem["R"] = signal_json(*c.problem.R);
  json mc = {{"n_paths", c.monte_carlo.n_paths},
             {"n_steps", c.monte_carlo.n_steps},
             {"checkpoints", c.monte_carlo.checkpoints},
             {"full_paths", c.monte_carlo.full_paths}};
  if (c.monte_carlo.seed) mc["seed"] = *c.monte_carlo.seed;
  json verify = {{"lemma1_pairs", c.verify.lemma1_pairs},
                 {"seed", c.verify.seed},
                 {"force_plus_branch", c.verify.force_plus_branch}};
  if (c.verify.tolerance) verify["tolerance"] = *c.verify.tolerance;
  return {{"name", c.name},
          {"problem", problem},
          {"epsilon", c.epsilon},
          {"grid_size", c.grid_size},
          {"monte_carlo", mc},
          {"tube", {{"level", c.tube.level},
                    {"resolution", c.tube.resolution},
                    {"stride", c.tube.stride}}},
          {"sweep", {{"epsilons", c.sweep_epsilons}}},
          {"verify", verify},
          {"output_dir", c.output_dir}};
}

RunConfig config_from_json(const json& j) {
  if (!j.is_object()) fail("$", "config must be a JSON object");
  RunConfig c;
  c.name = j.value("name", std::string());
  if (!j.contains("problem") || !j["problem"].is_object()) fail("$.problem", "missing");
  const json& p = j["problem"];
  for (const char* key : {"A", "B", "Q", "sigma0", "sigma1"}) {
    if (!p.contains(key)) fail(std::string("$.problem.") + key, "missing");
  }
  c.problem.A = parse_signal(p["A"], "$.problem.A");
  c.problem.B = parse_signal(p["B"], "$.problem.B");
  c.problem.Q = parse_signal(p["Q"], "$.problem.Q");
  if (p.contains("R") && !p["R"].is_null()) c.problem.R = parse_signal(p["R"], "$.problem.R");
  c.problem.sigma0 = parse_matrix(p["sigma0"], "$.problem.sigma0");
  c.problem.sigma1 = parse_matrix(p["sigma1"], "$.problem.sigma1");

  const Eigen::Index n = c.problem.A.values.front().rows();
  if (c.problem.A.values.front().cols() != n) fail("$.problem.A", "must be square");
  if (c.problem.B.values.front().rows() != n) fail("$.problem.B", "row count must match A");
  const Eigen::Index m = c.problem.B.values.front().cols();
  if (c.problem.Q.values.front().rows() != n || c.problem.Q.values.front().cols() != n) {
    fail("$.problem.Q", "must match the dimensions of A");
  }
  if (c.problem.R && (c.problem.R->values.front().rows() != m ||
                      c.problem.R->values.front().cols() != m)) {
    fail("$.problem.R", "must be m×m with m the column count of B");
  }
  for (const char* key : {"sigma0", "sigma1"}) {
    const auto& s = std::string(key) == "sigma0" ? c.problem.sigma0 : c.problem.sigma1;
    if (s.rows() != n || s.cols() != n) {
      fail(std::string("$.problem.") + key, "must match the dimensions of A");
    }
  }

  c.epsilon = get_number<double>(j, "epsilon", c.epsilon, "$");
  if (!(c.epsilon >= 0.0)) fail("$.epsilon", "must be nonnegative");
  c.grid_size = get_number<int>(j, "grid_size", c.grid_size, "$");
  if (c.grid_size <= 0) fail("$.grid_size", "must be positive");

  if (j.contains("monte_carlo")) {
    const json& mc = j["monte_carlo"];
    if (!mc.is_object()) fail("$.monte_carlo", "expected an object");
    c.monte_carlo.n_paths = get_number<int>(mc, "n_paths", c.monte_carlo.n_paths, "$.monte_carlo");
    c.monte_carlo.n_steps = get_number<int>(mc, "n_steps", c.monte_carlo.n_steps, "$.monte_carlo");
    if (mc.contains("seed") && !mc["seed"].is_null()) {
      if (!mc["seed"].is_number_unsigned()) fail("$.monte_carlo.seed", "expected an unsigned integer");
      c.monte_carlo.seed = mc["seed"].get<std::uint64_t>();
    }
    if (mc.contains("checkpoints")) {
      c.monte_carlo.checkpoints = parse_times(mc["checkpoints"], "$.monte_carlo.checkpoints");
    }
    c.monte_carlo.full_paths = mc.value("full_paths", false);
    if (c.monte_carlo.n_paths < 2) fail("$.monte_carlo.n_paths", "must be at least 2");
    if (c.monte_carlo.n_steps < 1) fail("$.monte_carlo.n_steps", "must be positive");
  }
  if (j.contains("tube")) {
    const json& t = j["tube"];
    c.tube.level = get_number<double>(t, "level", c.tube.level, "$.tube");
    c.tube.resolution = get_number<int>(t, "resolution", c.tube.resolution, "$.tube");
    c.tube.stride = get_number<int>(t, "stride", c.tube.stride, "$.tube");
    if (!(c.tube.level > 0.0)) fail("$.tube.level", "must be positive");
    if (c.tube.resolution < 1) fail("$.tube.resolution", "must be positive");
    if (c.tube.stride < 1) fail("$.tube.stride", "must be positive");
  }
  if (j.contains("sweep")) {
    const json& s = j["sweep"];
    if (s.contains("epsilons")) c.sweep_epsilons = parse_times(s["epsilons"], "$.sweep.epsilons");
  }
  if (j.contains("verify")) {
    const json& v = j["verify"];
    c.verify.lemma1_pairs = get_number<int>(v, "lemma1_pairs", c.verify.lemma1_pairs, "$.verify");
    if (v.contains("seed")) {
      if (!v["seed"].is_number_unsigned()) fail("$.verify.seed", "expected an unsigned integer");
      c.verify.seed = v["seed"].get<std::uint64_t>();
    }
    if (v.contains("tolerance") && !v["tolerance"].is_null()) {
      c.verify.tolerance = get_number<double>(v, "tolerance", 0.0, "$.verify");
      if (!(*c.verify.tolerance > 0.0)) fail("$.verify.tolerance", "must be positive");
    }
    c.verify.force_plus_branch = v.value("force_plus_branch", false);
  }
  c.output_dir = j.value("output_dir", c.output_dir);
  return c;
}

std::vector<std::string> preset_names() {
  std::vector<std::string> names;
  for (const auto& [name, _] : presets()) names.push_back(name);
  return names;
}

json preset_json(const std::string& name) {
  const auto& table = presets();
  const auto it = table.find(name);
  if (it == table.end()) fail("--preset", "unknown preset '" + name + "'");
  return it->second;
}

RunConfig load_config(const std::optional<std::filesystem::path>& path,
                      const std::optional<std::string>& preset) {
  if (!path && !preset) fail("--config", "a config file or a preset is required");
  json merged = preset ? preset_json(*preset) : json::object();
  if (path) {
    std::ifstream in(*path);
    if (!in) fail("--config", "cannot open '" + path->string() + "'");
    json file;
    try {
      file = json::parse(in);
    } catch (const json::parse_error& e) {
      fail("--config", std::string("invalid JSON: ") + e.what());
    }
    merged.merge_patch(file);
  }
  return config_from_json(merged);
}

SteeringProblem build_problem(const RunConfig& config) {
  try {
    std::optional<CoefficientMap> r;
    if (config.problem.R) r = config.problem.R->to_map();
    TimeVaryingLinearSystem sys(config.problem.A.to_map(), config.problem.B.to_map(),
                                config.problem.Q.to_map(), r);
    SteeringProblem problem{std::move(sys), config.problem.sigma0,
                            config.problem.sigma1, config.epsilon};
    problem.validate();
    return problem;
  } catch (const DefinitenessError& e) {
    fail("$.problem", e.what());
  } catch (const DomainError& e) {
    fail("$.problem", e.what());
  }
}

std::string config_hash(const RunConfig& config) {
  const std::string text = to_json(config).dump();
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : text) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace covsteer::cli
