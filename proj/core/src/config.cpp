#include "gossa/config.hpp"

#include <fstream>
#include <sstream>

#include <json.hpp>

#include "gossa/analysis.hpp"
#include "gossa/errors.hpp"

namespace gossa {

namespace {

using nlohmann::json;

[[noreturn]] void fail(const std::string& msg) { throw ConfigError(msg); }

Eigen::MatrixXd parse_matrix(const json& j, const char* what) {
  if (j.is_number()) {
    Eigen::MatrixXd m(1, 1);
    m(0, 0) = j.get<double>();
    return m;
  }
  if (!j.is_array() || j.empty()) fail(std::string(what) + ": expected matrix");
  if (j.front().is_number()) {
    // flat array -> diagonal? No: treat as a single row only when 1 x d is
    // ambiguous; require nested arrays for matrices beyond scalars.
    fail(std::string(what) + ": expected nested array of rows");
  }
  const std::size_t rows = j.size();
  const std::size_t cols = j.front().size();
  Eigen::MatrixXd m(rows, cols);
  for (std::size_t r = 0; r < rows; ++r) {
    if (!j[r].is_array() || j[r].size() != cols) {
      fail(std::string(what) + ": ragged matrix rows");
    }
    for (std::size_t c = 0; c < cols; ++c) m(r, c) = j[r][c].get<double>();
  }
  return m;
}

Eigen::VectorXd parse_vector(const json& j, const char* what) {
  if (j.is_number()) {
    Eigen::VectorXd v(1);
    v[0] = j.get<double>();
    return v;
  }
  if (!j.is_array()) fail(std::string(what) + ": expected array");
  Eigen::VectorXd v(j.size());
  for (std::size_t k = 0; k < j.size(); ++k) v[k] = j[k].get<double>();
  return v;
}

void parse_problem(const json& j, ProblemConfig& p) {
  p.kind = j.value("kind", p.kind);
  if (p.kind == "quadratic") {
    if (!j.contains("A")) fail("problem: quadratic requires A");
    p.a = parse_matrix(j.at("A"), "problem.A");
    p.theta_star = j.contains("theta_star")
                       ? parse_vector(j.at("theta_star"), "problem.theta_star")
                       : Eigen::VectorXd::Zero(p.a.rows()).eval();
    p.noise_std = j.value("noise_std", p.noise_std);
    p.n_agents = j.value("n_agents", p.n_agents);
  } else if (p.kind == "localization") {
    if (j.contains("sensors")) {
      std::vector<Eigen::Vector2d> sensors;
      for (const auto& s : j.at("sensors")) {
        if (!s.is_array() || s.size() != 2) fail("problem.sensors: expected [x, y] pairs");
        sensors.emplace_back(s[0].get<double>(), s[1].get<double>());
      }
      p.sensors = std::move(sensors);
      p.n_sensors = static_cast<int>(p.sensors->size());
    } else {
      p.n_sensors = j.value("n_sensors", p.n_sensors);
    }
    p.layout_seed = j.value("layout_seed", p.layout_seed);
    if (j.contains("box")) {
      const auto& b = j.at("box");
      if (!b.is_array() || b.size() != 2) fail("problem.box: expected [lo, hi]");
      p.box_lo = b[0].get<double>();
      p.box_hi = b[1].get<double>();
    }
    if (j.contains("source")) {
      Eigen::VectorXd s = parse_vector(j.at("source"), "problem.source");
      if (s.size() != 2) fail("problem.source: expected a point in the plane");
      p.source = s;
    }
    p.obs_var = j.value("obs_var", p.obs_var);
  } else {
    fail("problem.kind must be 'quadratic' or 'localization'");
  }
}

void parse_graph(const json& j, GraphConfig& g) {
  if (j.is_string()) {
    g.kind = j.get<std::string>();
    return;
  }
  if (!j.is_object()) fail("scheme.graph: expected string or object");
  g.kind = j.value("kind", g.kind);
  g.radius = j.value("radius", g.radius);
  if (j.contains("seed")) g.seed = j.at("seed").get<std::uint64_t>();
  if (j.contains("edges")) {
    for (const auto& e : j.at("edges")) {
      if (!e.is_array() || e.size() != 2) fail("graph.edges: expected [i, j] pairs");
      int a = e[0].get<int>();
      int b = e[1].get<int>();
      if (a < 1 || b < 1) fail("graph.edges: node ids are 1-based");
      g.edges.emplace_back(a - 1, b - 1);
    }
  }
}

void parse_scheme(const json& j, SchemeConfig& s) {
  s.kind = j.value("kind", s.kind);
  s.beta = j.value("beta", s.beta);
  if (j.contains("dropout_p")) s.dropout_p = j.at("dropout_p").get<double>();
  if (j.contains("vanish_p0")) s.vanish_p0 = j.at("vanish_p0").get<double>();
  s.vanish_eta = j.value("vanish_eta", s.vanish_eta);
  if (j.contains("graph")) parse_graph(j.at("graph"), s.graph);
}

void parse_run(const json& j, RunConfig& r) {
  r.n_steps = j.value("n_steps", r.n_steps);
  r.n_runs = j.value("n_runs", r.n_runs);
  if (j.contains("root_seed")) r.root_seed = j.at("root_seed").get<std::uint64_t>();
  r.averaging = j.value("averaging", r.averaging);
  if (j.contains("gain")) {
    const auto& g = j.at("gain");
    if (g.is_string()) {
      if (g.get<std::string>() != "optimal") fail("run.gain: expected matrix or 'optimal'");
      r.optimal_gain = true;
    } else if (!g.is_null()) {
      r.gain = parse_matrix(g, "run.gain");
    }
  }
  if (j.contains("record")) {
    const auto& rec = j.at("record");
    r.record_points = rec.value("points", r.record_points);
    if (rec.contains("stride")) {
      r.record_spacing = "stride";
      r.record_stride = rec.at("stride").get<std::int64_t>();
    }
    r.record_spacing = rec.value("spacing", r.record_spacing);
  }
  if (j.contains("init")) {
    const auto& init = j.at("init");
    r.init.kind = init.value("kind", std::string("box"));
    r.init.lo = init.value("lo", 0.0);
    r.init.hi = init.value("hi", 0.0);
    r.init.scale = init.value("scale", 0.0);
    if (init.contains("value")) r.init.value = parse_vector(init.at("value"), "run.init.value");
  }
  r.threads = j.value("threads", r.threads);
}

void parse_check(const json& j, CheckConfig& c) {
  c.rel_tolerance = j.value("rel_tolerance", c.rel_tolerance);
  c.sync_tolerance = j.value("sync_tolerance", c.sync_tolerance);
  c.max_divergent_fraction = j.value("max_divergent_fraction", c.max_divergent_fraction);
  if (j.contains("gamma_star")) c.gamma_star = j.at("gamma_star").get<double>();
  c.rate_points = j.value("rate_points", c.rate_points);
  c.rate_checked = j.value("rate_checked", c.rate_checked);
}

void parse_output(const json& j, OutputConfig& o) {
  o.directory = j.value("directory", o.directory);
  if (j.contains("formats")) {
    o.csv = false;
    o.json = false;
    for (const auto& f : j.at("formats")) {
      std::string name = f.get<std::string>();
      if (name == "csv") o.csv = true;
      else if (name == "json") o.json = true;
      else fail("output.formats: unknown format '" + name + "'");
    }
  }
}

}  // namespace

ExperimentConfig ExperimentConfig::from_json_text(const std::string& text) {
  json j;
  try {
    j = json::parse(text, nullptr, true, /*ignore_comments=*/true);
  } catch (const json::parse_error& e) {
    fail(std::string("config parse error: ") + e.what());
  }
  ExperimentConfig cfg;
  if (j.contains("problem")) parse_problem(j.at("problem"), cfg.problem);
  if (j.contains("scheme")) parse_scheme(j.at("scheme"), cfg.scheme);
  if (j.contains("schedule")) {
    cfg.gamma0 = j.at("schedule").value("gamma0", cfg.gamma0);
    cfg.xi = j.at("schedule").value("xi", cfg.xi);
  }
  if (j.contains("run")) parse_run(j.at("run"), cfg.run);
  if (j.contains("check")) parse_check(j.at("check"), cfg.check);
  if (j.contains("output")) parse_output(j.at("output"), cfg.output);
  cfg.validate();
  return cfg;
}

ExperimentConfig ExperimentConfig::from_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail("cannot open config file: " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return from_json_text(buffer.str());
}

void ExperimentConfig::validate() const {
  // problem block
  if (problem.kind == "quadratic") {
    if (problem.a.size() == 0 || problem.a.rows() != problem.a.cols()) {
      fail("problem.A must be a square matrix");
    }
    if (problem.theta_star.size() != problem.a.rows()) {
      fail("problem.theta_star dimension must match A");
    }
    if (problem.noise_std < 0) fail("problem.noise_std must be >= 0");
    if (problem.n_agents < 1) fail("problem.n_agents must be >= 1");
  } else {
    if (problem.n_sensors < 1) fail("problem.n_sensors must be >= 1");
    if (!(problem.obs_var > 0)) fail("problem.obs_var must be positive");
    if (!(problem.box_hi > problem.box_lo)) fail("problem.box must satisfy lo < hi");
  }
  // scheme block
  if (scheme.kind != "pairwise" && scheme.kind != "broadcast" && scheme.kind != "identity") {
    fail("scheme.kind must be pairwise, broadcast or identity");
  }
  if (scheme.kind == "broadcast" && !(scheme.beta > 0.0 && scheme.beta < 1.0)) {
    fail("scheme.beta must lie in (0,1)");
  }
  if (scheme.dropout_p && !(*scheme.dropout_p > 0.0 && *scheme.dropout_p <= 1.0)) {
    fail("scheme.dropout_p must lie in (0,1]");
  }
  if (scheme.vanish_p0 && !(*scheme.vanish_p0 > 0.0)) {
    fail("scheme.vanish_p0 must be positive");
  }
  if (scheme.vanish_eta < 0.0) fail("scheme.vanish_eta must be >= 0");
  const std::string& gk = scheme.graph.kind;
  if (gk != "complete" && gk != "path" && gk != "grid" && gk != "geometric" &&
      gk != "edges") {
    fail("graph.kind must be complete, path, grid, geometric or edges");
  }
  if (gk == "geometric" && !(scheme.graph.radius > 0.0)) {
    fail("graph.radius must be positive");
  }
  if (gk == "edges" && scheme.graph.edges.empty()) fail("graph.edges must be non-empty");
  // schedule block
  if (!(gamma0 > 0.0)) fail("schedule.gamma0 must be positive");
  if (!(xi > 0.5 && xi <= 1.0)) fail("schedule.xi must lie in (1/2, 1]");
  // run block
  if (run.n_steps < 0) fail("run.n_steps must be >= 0");
  if (run.n_runs < 1) fail("run.n_runs must be >= 1");
  if (run.gain && run.optimal_gain) fail("run.gain: choose matrix or 'optimal', not both");
  if (!run.init.kind.empty() && run.init.kind != "box" && run.init.kind != "near_star" &&
      run.init.kind != "vector") {
    fail("run.init.kind must be box, near_star or vector");
  }
  if (run.threads < 0) fail("run.threads must be >= 0");
  // check block
  if (!(check.rel_tolerance > 0)) fail("check.rel_tolerance must be positive");
  if (check.gamma_star && !(*check.gamma_star > 0)) fail("check.gamma_star must be positive");
}

std::shared_ptr<ProblemModel> ExperimentConfig::build_problem() const {
  if (problem.kind == "quadratic") {
    try {
      return std::make_shared<QuadraticGaussianProblem>(problem.a, problem.theta_star,
                                                        problem.noise_std,
                                                        problem.n_agents);
    } catch (const std::invalid_argument& e) {
      fail(std::string("problem: ") + e.what());
    }
  }
  std::vector<Eigen::Vector2d> sensors =
      problem.sensors ? *problem.sensors
                      : draw_uniform_points(problem.n_sensors, problem.box_lo,
                                            problem.box_hi, problem.layout_seed);
  try {
    return std::make_shared<LocalizationProblem>(std::move(sensors), problem.source,
                                                 problem.obs_var);
  } catch (const std::invalid_argument& e) {
    fail(std::string("problem: ") + e.what());
  }
}

NetworkGraph ExperimentConfig::build_graph(const ProblemModel& model) const {
  const int n = model.n_agents();
  const std::string& kind = scheme.graph.kind;
  if (kind == "complete") return NetworkGraph::complete(n);
  if (kind == "path") return NetworkGraph::path(n);
  if (kind == "grid") return NetworkGraph::grid(n);
  if (kind == "edges") {
    try {
      return NetworkGraph(n, scheme.graph.edges);
    } catch (const std::invalid_argument& e) {
      fail(std::string("graph: ") + e.what());
    }
  }
  // geometric: reuse the sensor layout unless an explicit seed is given, so
  // that the communication graph matches the sensor positions
  if (const auto* loc = dynamic_cast<const LocalizationProblem*>(&model);
      loc != nullptr && !scheme.graph.seed) {
    return NetworkGraph::geometric_from_points(loc->sensors(), scheme.graph.radius);
  }
  std::uint64_t seed = scheme.graph.seed.value_or(problem.layout_seed);
  return NetworkGraph::geometric(n, scheme.graph.radius, seed, problem.box_lo,
                                 problem.box_hi);
}

GossipScheme ExperimentConfig::build_scheme(const ProblemModel& model) const {
  NetworkGraph graph = build_graph(model);
  GossipScheme base = [&] {
    try {
      if (scheme.kind == "pairwise") return GossipScheme::pairwise(std::move(graph));
      if (scheme.kind == "broadcast")
        return GossipScheme::broadcast(std::move(graph), scheme.beta);
      return GossipScheme::identity(std::move(graph));
    } catch (const std::invalid_argument& e) {
      fail(std::string("scheme: ") + e.what());
    }
  }();
  if (scheme.dropout_p) base = GossipScheme::dropout(*scheme.dropout_p, std::move(base));
  if (scheme.vanish_p0) {
    base = GossipScheme::vanishing_rate(*scheme.vanish_p0, scheme.vanish_eta,
                                        std::move(base));
  }
  return base;
}

StepSchedule ExperimentConfig::build_schedule() const { return StepSchedule(gamma0, xi); }

InitSpec ExperimentConfig::build_init(const ProblemModel& model) const {
  const InitConfig& init = run.init;
  if (init.kind == "vector") return InitSpec::explicit_vector(init.value);
  if (init.kind == "near_star") {
    auto star = model.equilibrium();
    if (!star) fail("run.init: near_star requires a problem with a known equilibrium");
    double scale = init.scale > 0 ? init.scale : 1e-3;
    return InitSpec::near_point(*star, scale);
  }
  if (init.kind == "box") {
    if (!(init.hi > init.lo)) fail("run.init: box requires lo < hi");
    return InitSpec::box(init.lo, init.hi);
  }
  // problem default: the localization experiment starts uniformly over its
  // square; quadratic problems start in the unit box
  if (problem.kind == "localization") return InitSpec::box(problem.box_lo, problem.box_hi);
  return InitSpec::box(-1.0, 1.0);
}

RecordPlan ExperimentConfig::build_record_plan(const ProblemModel& model) const {
  if (run.n_steps == 0) return RecordPlan::none();
  RecordPlan plan;
  if (run.record_spacing == "stride" && run.record_stride > 0) {
    plan = RecordPlan::every(run.record_stride, run.n_steps);
  } else {
    plan = RecordPlan::log_spaced(1, run.n_steps, run.record_points);
  }
  plan.lyapunov = true;
  plan.averaged = run.averaging;
  if (auto star = model.equilibrium()) plan.sq_error_reference = *star;
  return plan;
}

std::optional<Eigen::MatrixXd> ExperimentConfig::resolve_gain(
    const ProblemModel& model) const {
  if (run.gain) return run.gain;
  if (!run.optimal_gain) return std::nullopt;
  double gs = efficiency_gamma_star();
  OptimalGain og = optimal_gain(model.clt_data().jacobian, model.clt_data().noise_cov, gs);
  return og.gain;
}

double ExperimentConfig::efficiency_gamma_star() const {
  if (check.gamma_star) return *check.gamma_star;
  if (xi == 1.0) return gamma0;
  fail("check.gamma_star required (schedule is not in the critical regime)");
}

std::uint64_t ExperimentConfig::root_seed() const {
  if (!run.root_seed) {
    fail("run.root_seed is mandatory (wall-clock seeding is not supported)");
  }
  return *run.root_seed;
}

}  // namespace gossa
