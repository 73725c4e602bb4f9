#include "llp/runner.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "llp/inner_solver.hpp"

namespace llp {

using nlohmann::json;
using nlohmann::ordered_json;

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

void check_keys(const json& obj, std::initializer_list<const char*> allowed,
                const std::string& where) {
  if (!obj.is_object()) throw ConfigError(where + ": expected an object");
  for (const auto& item : obj.items()) {
    bool known = false;
    for (const char* name : allowed) known = known || item.key() == name;
    if (!known) throw ConfigError(where + ": unknown key '" + item.key() + "'");
  }
}

double get_number(const json& obj, const char* key, double fallback,
                  const std::string& where) {
  if (!obj.contains(key)) return fallback;
  const json& v = obj.at(key);
  if (!v.is_number()) {
    throw ConfigError(where + "." + key + ": expected a number");
  }
  return v.get<double>();
}

long long get_integer(const json& obj, const char* key, long long fallback,
                      const std::string& where) {
  if (!obj.contains(key)) return fallback;
  const json& v = obj.at(key);
  if (!v.is_number_integer()) {
    throw ConfigError(where + "." + key + ": expected an integer");
  }
  return v.get<long long>();
}

std::uint64_t get_seed(const json& obj, const char* key, std::uint64_t fallback,
                       const std::string& where) {
  if (!obj.contains(key)) return fallback;
  const json& v = obj.at(key);
  if (v.is_number_unsigned()) return v.get<std::uint64_t>();
  if (v.is_number_integer() && v.get<long long>() >= 0) {
    return static_cast<std::uint64_t>(v.get<long long>());
  }
  throw ConfigError(where + "." + key + ": expected a nonnegative integer");
}

std::string get_string(const json& obj, const char* key, const std::string& fallback,
                       const std::string& where) {
  if (!obj.contains(key)) return fallback;
  const json& v = obj.at(key);
  if (!v.is_string()) throw ConfigError(where + "." + key + ": expected a string");
  return v.get<std::string>();
}

Scenario parse_scenario(const json& j) {
  check_keys(j, {"kind", "horizon", "dimension", "constraints", "seed", "params"},
             "scenario");
  Scenario s;
  if (!j.contains("kind")) throw ConfigError("scenario.kind is required");
  s.kind = parse_scenario_kind(get_string(j, "kind", "", "scenario"));
  if (!j.contains("horizon")) throw ConfigError("scenario.horizon is required");
  const long long horizon = get_integer(j, "horizon", 1, "scenario");
  if (horizon < 1 || horizon > 100000000) {
    throw ConfigError("scenario.horizon out of range");
  }
  s.horizon = static_cast<int>(horizon);
  s.dimension = static_cast<int>(get_integer(j, "dimension", 1, "scenario"));
  s.constraints = static_cast<int>(get_integer(j, "constraints", 1, "scenario"));
  s.seed = get_seed(j, "seed", 0, "scenario");
  if (j.contains("params")) {
    const json& p = j.at("params");
    if (!p.is_object()) throw ConfigError("scenario.params: expected an object");
    for (const auto& item : p.items()) {
      if (!item.value().is_number()) {
        throw ConfigError("scenario.params." + item.key() + ": expected a number");
      }
      s.params[item.key()] = item.value().get<double>();
    }
  }
  s.validate();
  return s;
}

ProblemBounds parse_bounds(const json& j, ProblemBounds b) {
  check_keys(j, {"L_f", "L_g", "G", "D", "F", "E_m", "Delta_m"}, "learner.bounds");
  const std::string w = "learner.bounds";
  b.L_f = get_number(j, "L_f", b.L_f, w);
  b.L_g = get_number(j, "L_g", b.L_g, w);
  b.G = get_number(j, "G", b.G, w);
  b.D = get_number(j, "D", b.D, w);
  b.F = get_number(j, "F", b.F, w);
  b.E_m = get_number(j, "E_m", b.E_m, w);
  b.Delta_m = get_number(j, "Delta_m", b.Delta_m, w);
  return b;
}

LearnerConfig parse_learner(const json& j, const Scenario& scenario) {
  check_keys(j, {"variant", "sigma", "a", "beta", "bounds", "x0", "solver"}, "learner");
  LearnerConfig c;
  const std::string w = "learner";
  c.variant = parse_variant(get_string(j, "variant", "llp", w));
  c.bounds = declared_bounds(scenario);
  if (j.contains("bounds")) c.bounds = parse_bounds(j.at("bounds"), c.bounds);
  c.bounds.validate();
  c.sigma = get_number(j, "sigma", std::sqrt(c.bounds.L_f) / c.bounds.D, w);
  c.a = get_number(j, "a", 1.0, w);
  c.beta = get_number(j, "beta", 0.5, w);
  if (j.contains("x0") && !j.at("x0").is_null()) {
    const json& x0 = j.at("x0");
    if (!x0.is_array()) throw ConfigError("learner.x0: expected an array");
    c.x0 = Vector(static_cast<Eigen::Index>(x0.size()));
    for (std::size_t i = 0; i < x0.size(); ++i) {
      if (!x0[i].is_number()) throw ConfigError("learner.x0: expected numbers");
      c.x0[static_cast<Eigen::Index>(i)] = x0[i].get<double>();
    }
  }
  if (j.contains("solver")) {
    const json& s = j.at("solver");
    check_keys(s, {"tolerance", "max_iterations"}, "learner.solver");
    c.solver.gradient_map_tolerance =
        get_number(s, "tolerance", c.solver.gradient_map_tolerance, "learner.solver");
    c.solver.max_iterations = static_cast<int>(
        get_integer(s, "max_iterations", c.solver.max_iterations, "learner.solver"));
  }
  return c;
}

PredictorKind parse_predictor(const json& j) {
  check_keys(j, {"kind", "level", "seed"}, "predictor");
  PredictorKind p;
  p.kind = parse_predictor_kind(get_string(j, "kind", "none", "predictor"));
  p.level = get_number(j, "level", 0.0, "predictor");
  p.seed = get_seed(j, "seed", 0, "predictor");
  return p;
}

std::string stem_of(const std::string& path) {
  const auto slash = path.find_last_of('/');
  const auto dot = path.find_last_of('.');
  if (dot == std::string::npos || (slash != std::string::npos && dot < slash)) {
    return path;
  }
  return path.substr(0, dot);
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open '" + path + "' for writing");
  out << content;
  if (!out) throw std::runtime_error("failed writing '" + path + "'");
}

bool recorded(int t, int T, int every) { return t % every == 0 || t == T; }

std::string join_flags(const std::vector<std::string>& flags) {
  std::string out;
  for (const auto& f : flags) {
    if (!out.empty()) out += ';';
    out += f;
  }
  return out;
}

json number_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

template <typename Job>
void run_pool(std::size_t jobs, int workers, Job job) {
  const int count = std::max(1, std::min<int>(worker_count(workers),
                                               static_cast<int>(jobs)));
  std::atomic<std::size_t> next{0};
  auto worker = [&]() {
    for (std::size_t i = next++; i < jobs; i = next++) job(i);
  };
  std::vector<std::thread> pool;
  for (int k = 1; k < count; ++k) pool.emplace_back(worker);
  worker();
  for (auto& th : pool) th.join();
}

}  // namespace

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

int worker_count(int requested) {
  if (requested > 0) return requested;
  if (const char* env = std::getenv("LLP_WORKERS")) {
    const int n = std::atoi(env);
    if (n > 0) return n;
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : static_cast<int>(hw);
}

void RunConfig::validate() const {
  scenario.validate();
  learner.validate(scenario_domain(scenario));
  predictor.validate();
  if (output.record_every < 1) throw ConfigError("output.record_every must be >= 1");
  if (learner.variant == Variant::kLlpPerturbed &&
      scenario.kind != ScenarioKind::kPerturbedLinear) {
    throw ConfigError("llp_perturbed needs the perturbed_linear scenario");
  }
}

RunConfig default_run_config(const Scenario& scenario) {
  RunConfig c;
  c.scenario = scenario;
  c.learner.bounds = declared_bounds(scenario);
  c.learner.sigma = std::sqrt(c.learner.bounds.L_f) / c.learner.bounds.D;
  return c;
}

RunConfig parse_run_config(const json& doc) {
  check_keys(doc, {"scenario", "learner", "predictor", "benchmark", "output"}, "config");
  if (!doc.contains("scenario")) throw ConfigError("config.scenario is required");
  RunConfig c;
  c.scenario = parse_scenario(doc.at("scenario"));
  c.learner = parse_learner(doc.value("learner", json::object()), c.scenario);
  c.predictor = parse_predictor(doc.value("predictor", json::object()));
  const json bench = doc.value("benchmark", json::object());
  check_keys(bench, {"kind", "grid_resolution"}, "benchmark");
  c.benchmark.kind = parse_benchmark_kind(get_string(bench, "kind", "X_T", "benchmark"));
  c.benchmark.grid_resolution = get_number(bench, "grid_resolution", 0.0, "benchmark");
  if (!(c.benchmark.grid_resolution >= 0.0)) {
    throw ConfigError("benchmark.grid_resolution must be >= 0");
  }
  const json out = doc.value("output", json::object());
  check_keys(out, {"path", "format", "record_every"}, "output");
  c.output.path = get_string(out, "path", "", "output");
  const std::string format = get_string(out, "format", "csv", "output");
  if (format == "csv") {
    c.output.format = OutputSpec::Format::kCsv;
  } else if (format == "json") {
    c.output.format = OutputSpec::Format::kJson;
  } else {
    throw ConfigError("output.format must be csv or json");
  }
  const long long every = get_integer(out, "record_every", 1, "output");
  if (every < 1 || every > std::numeric_limits<int>::max()) {
    throw ConfigError("output.record_every must be >= 1");
  }
  c.output.record_every = static_cast<int>(every);
  c.validate();
  return c;
}

RunConfig load_run_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config '" + path + "'");
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::exception& e) {
    throw ConfigError("config '" + path + "': " + e.what());
  }
  return parse_run_config(doc);
}

ordered_json to_json(const RunConfig& c) {
  ordered_json j;
  j["scenario"] = {{"kind", to_string(c.scenario.kind)},
                   {"horizon", c.scenario.horizon},
                   {"dimension", c.scenario.dimension},
                   {"constraints", c.scenario.constraints},
                   {"seed", c.scenario.seed},
                   {"params", c.scenario.params}};
  const ProblemBounds& b = c.learner.bounds;
  ordered_json learner = {{"variant", to_string(c.learner.variant)},
                          {"sigma", c.learner.sigma},
                          {"a", c.learner.a},
                          {"beta", c.learner.beta},
                          {"bounds",
                           {{"L_f", b.L_f},
                            {"L_g", b.L_g},
                            {"G", b.G},
                            {"D", b.D},
                            {"F", b.F},
                            {"E_m", b.E_m},
                            {"Delta_m", b.Delta_m}}}};
  if (c.learner.x0.size() != 0) {
    learner["x0"] = std::vector<double>(c.learner.x0.data(),
                                        c.learner.x0.data() + c.learner.x0.size());
  } else {
    learner["x0"] = nullptr;
  }
  learner["solver"] = {{"tolerance", c.learner.solver.gradient_map_tolerance},
                       {"max_iterations", c.learner.solver.max_iterations}};
  j["learner"] = learner;
  j["predictor"] = {{"kind", to_string(c.predictor.kind)},
                    {"level", c.predictor.level},
                    {"seed", c.predictor.seed}};
  j["benchmark"] = {{"kind", to_string(c.benchmark.kind)},
                    {"grid_resolution", c.benchmark.grid_resolution}};
  j["output"] = {{"path", c.output.path},
                 {"format", c.output.format == OutputSpec::Format::kCsv ? "csv" : "json"},
                 {"record_every", c.output.record_every}};
  return j;
}

RunResult execute(const RunConfig& config) {
  config.validate();
  const Scenario& s = config.scenario;
  const int T = s.horizon;
  auto env = make_environment(s);
  const ConvexSet& domain = env->domain();
  const int n = env->dimension();
  const int d = env->constraints();
  auto learner = make_learner(config.learner, domain, d, env->base_constraint());
  Predictor predictor(config.predictor, config.learner.bounds, n, d);
  BenchmarkAccumulator bench(domain, config.benchmark.kind);

  RunResult result;
  result.records.reserve(static_cast<std::size_t>(T));
  const Vector x0 = config.learner.x0.size() != 0
                        ? config.learner.x0
                        : domain.project(Vector::Zero(n));
  const bool lookahead = predictor.needs_truth();
  {
    const RoundOracle first = env->round(1);
    learner->set_first_prediction(predictor.predict(lookahead ? &first : nullptr, x0));
  }
  for (int t = 1; t <= T; ++t) {
    const Vector x = learner->decide();
    const RoundOracle truth = env->round(t);
    bench.add(truth);
    env->record_play(t, x);
    std::optional<PredictionBundle> next;
    if (t < T) {
      if (lookahead) {
        const RoundOracle upcoming = env->round(t + 1);
        next = predictor.predict(&upcoming, x);
      } else {
        next = predictor.predict(nullptr, x);
      }
    }
    result.records.push_back(learner->update(truth, next));
  }

  result.benchmark = bench.solve(config.benchmark.grid_resolution, s.seed);
  const std::vector<double> star =
      result.benchmark.feasible ? bench.per_round_costs(result.benchmark.x_star)
                                : std::vector<double>{};
  result.metrics = compute_metrics(result.records, star);
  const double regret =
      result.benchmark.feasible ? result.metrics.final_regret() : kNaN;

  const LearnerConfig& lc = config.learner;
  switch (lc.variant) {
    case Variant::kLlp:
    case Variant::kLlpLinearized:
      result.bound_kind = "proximal";
      result.bounds = evaluate_proximal_bounds(result.records, lc, regret);
      break;
    case Variant::kLlp2:
      result.bound_kind = "nonproximal";
      result.bounds = evaluate_nonproximal_bounds(result.records, lc, regret);
      break;
    case Variant::kLlpPerturbed:
      result.bound_kind = "perturbed";
      result.bounds = evaluate_perturbed_bounds(result.records, lc, regret);
      break;
    case Variant::kGreedyBaseline:
      result.bound_kind = "none";
      break;
  }

  // Running B_t in the same form as the final bound.
  const double lead = 2.0 * (lc.sigma * lc.bounds.D * lc.bounds.D + lc.bounds.L_f / lc.sigma);
  double h = 0.0, dual = 0.0, xi_sq = 0.0;
  result.bound_path.reserve(result.records.size());
  for (const RoundRecord& r : result.records) {
    h += r.h;
    dual += r.a_prev * r.xi * r.xi;
    xi_sq += r.xi * r.xi;
    double b = kNaN;
    if (result.bound_kind == "proximal") {
      b = lead * std::sqrt(h) + dual;
    } else if (result.bound_kind == "nonproximal") {
      b = lead * std::sqrt(h + r.mu_next) + dual;
    } else if (result.bound_kind == "perturbed") {
      b = lead * std::sqrt(h) +
          std::min(2.0 * lc.a * std::sqrt(xi_sq),
                   4.0 * lc.a * lc.bounds.G * lc.bounds.G / (1.0 - lc.beta) *
                       std::pow(static_cast<double>(r.t), 1.0 - lc.beta));
    }
    result.bound_path.push_back(b);

    bool warned = false, estimated = false;
    for (const auto& f : r.flags) {
      warned = warned || f == kFlagPrimalSolver || f == kFlagPrescientSolver;
      estimated = estimated || f == kFlagEstimatedG;
    }
    result.solver_warnings += warned;
    result.estimated_bound_rounds += estimated;
    const double gap = (r.x - r.z).norm();
    result.max_gap = std::max(result.max_gap, gap);
    const double denom = lc.variant == Variant::kLlp2 ? r.sigma_cum_prev : r.sigma_cum;
    if (lc.variant != Variant::kGreedyBaseline && denom > 0.0 &&
        gap > r.h / denom + 10.0 * lc.solver.gradient_map_tolerance) {
      ++result.gap_bound_violations;
    }
  }
  result.slack = T * (lc.bounds.L_f + lc.bounds.G) * 10.0 *
                 lc.solver.gradient_map_tolerance;
  return result;
}

std::string render_trace_csv(const RunResult& result, int record_every) {
  std::string out =
      "t,f_value,cum_cost,regret,violation_norm,lambda_norm,a_t,sigma_cum,h_cum,"
      "xi_t,bound_B_t,solver_residual,flags\n";
  const int T = static_cast<int>(result.records.size());
  for (int i = 0; i < T; ++i) {
    const RoundRecord& r = result.records[i];
    if (!recorded(r.t, T, record_every)) continue;
    const double cols[] = {r.f_value,
                           result.metrics.cum_cost[i],
                           result.metrics.regret[i],
                           result.metrics.violation[i],
                           r.lambda.norm(),
                           r.a,
                           r.sigma_cum,
                           r.h_cum,
                           r.xi,
                           result.bound_path[i],
                           std::max(r.residual_x, r.residual_z)};
    out += std::to_string(r.t);
    for (double v : cols) {
      out += ',';
      out += format_double(v);
    }
    out += ',';
    out += join_flags(r.flags);
    out += '\n';
  }
  return out;
}

std::string render_trace_json(const RunResult& result, int record_every) {
  ordered_json rows = ordered_json::array();
  const int T = static_cast<int>(result.records.size());
  for (int i = 0; i < T; ++i) {
    const RoundRecord& r = result.records[i];
    if (!recorded(r.t, T, record_every)) continue;
    ordered_json row;
    row["t"] = r.t;
    row["x"] = std::vector<double>(r.x.data(), r.x.data() + r.x.size());
    row["z"] = std::vector<double>(r.z.data(), r.z.data() + r.z.size());
    row["lambda"] = std::vector<double>(r.lambda.data(), r.lambda.data() + r.lambda.size());
    row["f_value"] = number_or_null(r.f_value);
    row["cum_cost"] = number_or_null(result.metrics.cum_cost[i]);
    row["regret"] = number_or_null(result.metrics.regret[i]);
    row["violation_norm"] = number_or_null(result.metrics.violation[i]);
    row["lambda_norm"] = r.lambda.norm();
    row["a_t"] = number_or_null(r.a);
    row["sigma_cum"] = r.sigma_cum;
    row["h_cum"] = r.h_cum;
    row["xi_t"] = r.xi;
    row["bound_B_t"] = number_or_null(result.bound_path[i]);
    row["solver_residual"] = std::max(r.residual_x, r.residual_z);
    row["flags"] = r.flags;
    rows.push_back(std::move(row));
  }
  return rows.dump(1) + "\n";
}

ordered_json summarize(const RunConfig& config, const RunResult& r) {
  ordered_json j;
  j["scenario"] = to_string(config.scenario.kind);
  j["variant"] = to_string(config.learner.variant);
  j["predictor"] = to_string(config.predictor.kind);
  j["horizon"] = config.scenario.horizon;
  j["seed"] = config.scenario.seed;
  j["benchmark"] = {
      {"kind", to_string(config.benchmark.kind)},
      {"feasible", r.benchmark.feasible},
      {"method", r.benchmark.method},
      {"resolution", r.benchmark.resolution},
      {"x_star", r.benchmark.feasible
                     ? json(std::vector<double>(r.benchmark.x_star.data(),
                                                r.benchmark.x_star.data() +
                                                    r.benchmark.x_star.size()))
                     : json(nullptr)},
      {"optimal_total_cost", number_or_null(r.benchmark.optimal_total_cost)},
      {"cross_check_ok", r.benchmark.cross_check_ok}};
  const double R = r.metrics.final_regret();
  const double V = r.metrics.final_violation();
  j["R_T"] = number_or_null(R);
  j["V_T"] = V;
  j["V_T_z"] = r.metrics.violation_z.empty() ? 0.0 : r.metrics.violation_z.back();
  j["cum_cost"] = r.metrics.cum_cost.empty() ? 0.0 : r.metrics.cum_cost.back();
  j["bound_kind"] = r.bound_kind;
  if (r.bound_kind != "none") {
    j["B_T"] = r.bounds.B_T;
    j["V_bound"] = number_or_null(r.bounds.V_bound);
    j["Vz_bound"] = number_or_null(r.bounds.Vz_bound);
    j["bound_clamped"] = r.bounds.clamped;
    j["slack"] = r.slack;
    j["regret_within_bound"] = std::isfinite(R) ? json(R <= r.bounds.B_T + r.slack)
                                                : json(nullptr);
    j["violation_within_bound"] =
        std::isfinite(R) ? json(V <= r.bounds.V_bound + r.slack) : json(nullptr);
    j["h_cum"] = r.bounds.h_cum;
    j["xi_sq_cum"] = r.bounds.xi_sq_cum;
    j["a_T_minus_1"] = 1.0 / r.bounds.phi_prev;
    if (r.bound_kind == "nonproximal") j["mu_next"] = r.bounds.mu_next;
    if (r.bound_kind == "perturbed") {
      j["A"] = {r.bounds.A1, r.bounds.A2, r.bounds.A3, r.bounds.A4};
      j["K_T"] = r.bounds.K_T;
    }
  }
  j["max_x_z_gap"] = r.max_gap;
  j["gap_bound_violations"] = r.gap_bound_violations;
  j["solver_warnings"] = r.solver_warnings;
  j["estimated_G_rounds"] = r.estimated_bound_rounds;
  return j;
}

ordered_json write_run_outputs(const RunConfig& config, const RunResult& result) {
  const ordered_json summary = summarize(config, result);
  if (config.output.path.empty()) return summary;
  const int every = config.output.record_every;
  write_file(config.output.path, config.output.format == OutputSpec::Format::kCsv
                                     ? render_trace_csv(result, every)
                                     : render_trace_json(result, every));
  write_file(stem_of(config.output.path) + ".summary.json", summary.dump(2) + "\n");
  return summary;
}

std::string render_svg(const std::vector<std::string>& labels,
                       const std::vector<const RunResult*>& runs) {
  static const char* kColors[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e",
                                  "#9467bd", "#8c564b"};
  const double width = 820, panel = 300, left = 70, right = 20, top = 30, gap = 60;
  std::ostringstream svg;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width
      << "\" height=\"" << (top + 2 * panel + gap + 40 + 20.0 * runs.size())
      << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  svg << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";

  auto draw_panel = [&](double y0, const std::string& title, auto value_of) {
    double lo = std::numeric_limits<double>::infinity(), hi = -lo;
    std::size_t T = 0;
    for (const RunResult* r : runs) {
      T = std::max(T, r->records.size());
      for (std::size_t i = 0; i < r->records.size(); ++i) {
        const double v = value_of(*r, i);
        if (std::isfinite(v)) {
          lo = std::min(lo, v);
          hi = std::max(hi, v);
        }
      }
    }
    if (!std::isfinite(lo)) lo = hi = 0.0;
    if (hi - lo < 1e-12) {
      hi += 0.5;
      lo -= 0.5;
    }
    const double plot_w = width - left - right;
    auto px = [&](double t) { return left + plot_w * (t - 1) / std::max<double>(1, T - 1); };
    auto py = [&](double v) { return y0 + panel - panel * (v - lo) / (hi - lo); };
    svg << "<text x=\"" << left << "\" y=\"" << y0 - 8 << "\">" << title << "</text>\n";
    svg << "<rect x=\"" << left << "\" y=\"" << y0 << "\" width=\"" << plot_w
        << "\" height=\"" << panel << "\" fill=\"none\" stroke=\"#888\"/>\n";
    svg << "<text x=\"" << left - 5 << "\" y=\"" << y0 + 10
        << "\" text-anchor=\"end\">" << format_double(hi).substr(0, 10) << "</text>\n";
    svg << "<text x=\"" << left - 5 << "\" y=\"" << y0 + panel
        << "\" text-anchor=\"end\">" << format_double(lo).substr(0, 10) << "</text>\n";
    svg << "<text x=\"" << left + plot_w << "\" y=\"" << y0 + panel + 15
        << "\" text-anchor=\"end\">t = " << T << "</text>\n";
    if (lo < 0.0 && hi > 0.0) {
      svg << "<line x1=\"" << left << "\" x2=\"" << left + plot_w << "\" y1=\"" << py(0.0)
          << "\" y2=\"" << py(0.0) << "\" stroke=\"#ccc\"/>\n";
    }
    for (std::size_t k = 0; k < runs.size(); ++k) {
      const RunResult& r = *runs[k];
      const std::size_t stride = std::max<std::size_t>(1, r.records.size() / 1000);
      svg << "<polyline fill=\"none\" stroke-width=\"1.5\" stroke=\"" << kColors[k % 6]
          << "\" points=\"";
      for (std::size_t i = 0; i < r.records.size(); i += stride) {
        const double v = value_of(r, i);
        if (!std::isfinite(v)) continue;
        svg << format_double(px(static_cast<double>(i + 1))).substr(0, 8) << ','
            << format_double(py(v)).substr(0, 8) << ' ';
      }
      svg << "\"/>\n";
    }
  };
  draw_panel(top, "regret / t", [](const RunResult& r, std::size_t i) {
    return r.metrics.regret[i] / static_cast<double>(i + 1);
  });
  draw_panel(top + panel + gap, "constraint violation (total)",
             [](const RunResult& r, std::size_t i) { return r.metrics.violation[i]; });
  const double legend_y = top + 2 * panel + gap + 30;
  for (std::size_t k = 0; k < runs.size(); ++k) {
    const double y = legend_y + 20.0 * k;
    svg << "<line x1=\"" << left << "\" x2=\"" << left + 30 << "\" y1=\"" << y - 4
        << "\" y2=\"" << y - 4 << "\" stroke-width=\"3\" stroke=\"" << kColors[k % 6]
        << "\"/><text x=\"" << left + 40 << "\" y=\"" << y << "\">"
        << (k < labels.size() ? labels[k] : "") << "</text>\n";
  }
  svg << "</svg>\n";
  return svg.str();
}

void SweepConfig::validate() const {
  base.validate();
  if (horizons.empty()) throw ConfigError("sweep: horizons must be nonempty");
  if (betas.empty()) throw ConfigError("sweep: betas must be nonempty");
  for (std::size_t i = 0; i < horizons.size(); ++i) {
    if (horizons[i] < 1) throw ConfigError("sweep: horizons must be >= 1");
    if (i > 0 && horizons[i] <= horizons[i - 1]) {
      throw ConfigError("sweep: horizons must be strictly increasing");
    }
  }
  for (double b : betas) {
    if (!(b >= 0.0 && b < 1.0)) throw ConfigError("sweep: betas must lie in [0, 1)");
  }
  if (repetitions < 1) throw ConfigError("sweep: repetitions must be >= 1");
}

SweepConfig parse_sweep_config(const json& doc) {
  check_keys(doc, {"base", "horizons", "betas", "repetitions"}, "sweep");
  if (!doc.contains("base")) throw ConfigError("sweep.base is required");
  SweepConfig c;
  c.base = parse_run_config(doc.at("base"));
  auto list = [&](const char* key) {
    if (!doc.contains(key) || !doc.at(key).is_array()) {
      throw ConfigError(std::string("sweep.") + key + ": expected an array");
    }
    return doc.at(key);
  };
  for (const json& h : list("horizons")) {
    if (!h.is_number_integer()) throw ConfigError("sweep.horizons: expected integers");
    c.horizons.push_back(h.get<int>());
  }
  for (const json& b : list("betas")) {
    if (!b.is_number()) throw ConfigError("sweep.betas: expected numbers");
    c.betas.push_back(b.get<double>());
  }
  c.repetitions = static_cast<int>(get_integer(doc, "repetitions", 1, "sweep"));
  c.validate();
  return c;
}

SweepConfig load_sweep_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read sweep config '" + path + "'");
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::exception& e) {
    throw ConfigError("sweep config '" + path + "': " + e.what());
  }
  return parse_sweep_config(doc);
}

SweepResult run_sweep(const SweepConfig& config, int workers) {
  config.validate();
  SweepResult out;
  for (double beta : config.betas) {
    for (int T : config.horizons) {
      for (int rep = 0; rep < config.repetitions; ++rep) {
        SweepCell cell;
        cell.horizon = T;
        cell.beta = beta;
        cell.repetition = rep;
        out.cells.push_back(cell);
      }
    }
  }
  run_pool(out.cells.size(), workers, [&](std::size_t i) {
    SweepCell& cell = out.cells[i];
    try {
      RunConfig c = config.base;
      c.scenario.horizon = cell.horizon;
      c.scenario.seed += static_cast<std::uint64_t>(cell.repetition);
      c.predictor.seed += static_cast<std::uint64_t>(cell.repetition);
      c.learner.beta = cell.beta;
      const RunResult r = execute(c);
      cell.regret = r.metrics.final_regret();
      cell.violation = r.metrics.final_violation();
      cell.bound = r.bounds.B_T;
      cell.violation_bound = r.bounds.V_bound;
      cell.solver_warnings = r.solver_warnings;
      cell.ok = r.benchmark.feasible;
      if (!cell.ok) cell.error = "infeasible benchmark";
    } catch (const std::exception& e) {
      cell.ok = false;
      cell.error = e.what();
    }
  });

  for (double beta : config.betas) {
    for (const char* quantity : {"regret", "violation"}) {
      SweepFit fit;
      fit.beta = beta;
      fit.quantity = quantity;
      const bool regret = fit.quantity == "regret";
      fit.reference_exponent = regret ? (beta < 0.5 ? 0.625 : (3.0 - beta) / 4.0)
                                      : (beta < 0.5 ? 0.75 : (1.0 + beta) / 2.0);
      std::vector<std::pair<double, double>> samples;
      for (int T : config.horizons) {
        double sum = 0.0;
        int count = 0;
        for (const SweepCell& c : out.cells) {
          if (c.beta == beta && c.horizon == T && c.ok) {
            sum += std::max(regret ? c.regret : c.violation, 1.0);
            ++count;
          }
        }
        if (count > 0) samples.emplace_back(T, sum / count);
      }
      try {
        fit.fit = fit_growth_exponent(samples);
        fit.ok = true;
      } catch (const std::exception& e) {
        fit.error = e.what();
      }
      out.fits.push_back(fit);
    }
  }
  return out;
}

std::string render_sweep_csv(const SweepResult& result) {
  std::string out = "T,beta,repetition,status,R_T,V_T,B_T,V_bound,solver_warnings,error\n";
  for (const SweepCell& c : result.cells) {
    out += std::to_string(c.horizon) + ',' + format_double(c.beta) + ',' +
           std::to_string(c.repetition) + ',' + (c.ok ? "ok" : "failed") + ',' +
           format_double(c.regret) + ',' + format_double(c.violation) + ',' +
           format_double(c.bound) + ',' + format_double(c.violation_bound) + ',' +
           std::to_string(c.solver_warnings) + ',';
    std::string err = c.error;
    std::replace(err.begin(), err.end(), ',', ';');
    std::replace(err.begin(), err.end(), '\n', ' ');
    out += err + '\n';
  }
  return out;
}

std::string render_fits_csv(const SweepResult& result) {
  std::string out = "beta,quantity,status,exponent,intercept,r_squared,used,reference_exponent\n";
  for (const SweepFit& f : result.fits) {
    out += format_double(f.beta) + ',' + f.quantity + ',' + (f.ok ? "ok" : "failed") +
           ',' + format_double(f.fit.exponent) + ',' + format_double(f.fit.intercept) +
           ',' + format_double(f.fit.r_squared) + ',' + std::to_string(f.fit.used) +
           ',' + format_double(f.reference_exponent) + '\n';
  }
  return out;
}

CompareResult run_compare(const std::vector<RunConfig>& configs, int workers) {
  if (configs.empty()) throw ConfigError("compare: no configs given");
  const Scenario& s0 = configs.front().scenario;
  for (const RunConfig& c : configs) {
    c.validate();
    const Scenario& s = c.scenario;
    if (s.kind != s0.kind || s.horizon != s0.horizon || s.dimension != s0.dimension ||
        s.constraints != s0.constraints || s.seed != s0.seed || s.params != s0.params) {
      throw ConfigError("compare: all configs must share the scenario and seed");
    }
  }
  CompareResult out;
  for (const RunConfig& c : configs) {
    std::string label = to_string(c.learner.variant) + "+" + to_string(c.predictor.kind);
    int dup = 1;
    for (const std::string& l : out.labels) dup += l.rfind(label, 0) == 0;
    if (dup > 1) label += "#" + std::to_string(dup);
    out.labels.push_back(label);
  }
  out.runs.resize(configs.size());
  std::vector<std::string> errors(configs.size());
  run_pool(configs.size(), workers, [&](std::size_t i) {
    try {
      out.runs[i] = execute(configs[i]);
    } catch (const std::exception& e) {
      errors[i] = e.what();
    }
  });
  for (std::size_t i = 0; i < errors.size(); ++i) {
    if (!errors[i].empty()) {
      throw std::runtime_error("compare: run '" + out.labels[i] + "' failed: " + errors[i]);
    }
  }
  return out;
}

std::string render_compare_csv(const CompareResult& result, int record_every) {
  std::string out = "t";
  for (const std::string& l : result.labels) {
    out += ',' + l + ":regret_avg," + l + ":violation";
  }
  out += '\n';
  const int T = static_cast<int>(result.runs.front().records.size());
  for (int i = 0; i < T; ++i) {
    if (!recorded(i + 1, T, record_every)) continue;
    out += std::to_string(i + 1);
    for (const RunResult& r : result.runs) {
      out += ',' + format_double(r.metrics.regret[i] / (i + 1.0)) + ',' +
             format_double(r.metrics.violation[i]);
    }
    out += '\n';
  }
  return out;
}

}  // namespace llp
