#include <CLI11.hpp>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <future>
#include <iostream>
#include <sstream>

#include "ergobound/ergobound.hpp"

using namespace ergobound;
using nlohmann::json;

namespace {

enum Exit { kOk = 0, kError = 1, kInconclusive = 2 };

struct Common {
  std::string config_path;
  std::string preset;
  std::optional<std::size_t> N;
  std::optional<double> t_star;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> paths;
  std::optional<std::string> out;
};

// Files are staged in memory and written only after every computation succeeded.
struct Outputs {
  std::vector<std::pair<std::string, std::string>> files;
  void add(std::string name, std::string body) { files.emplace_back(std::move(name), std::move(body)); }
};

RunConfig load(const Common& c) {
  RunConfig cfg;
  if (!c.config_path.empty() && !c.preset.empty())
    throw std::invalid_argument("--config and --preset are mutually exclusive");
  if (!c.config_path.empty()) {
    std::ifstream in(c.config_path);
    if (!in) throw std::invalid_argument("cannot open config: " + c.config_path);
    std::stringstream ss;
    ss << in.rdbuf();
    cfg = RunConfig::parse(ss.str());
  } else if (!c.preset.empty()) {
    cfg = preset_config(c.preset);
  } else {
    throw std::invalid_argument("need --config or --preset");
  }
  if (c.N) {
    cfg.truncation.N_initial = *c.N;
    cfg.truncation.N_cap = std::max(cfg.truncation.N_cap, *c.N);
  }
  if (c.t_star) cfg.solver.t_star = *c.t_star;
  if (c.seed) cfg.simulation.seed = *c.seed;
  if (c.paths) cfg.simulation.paths = *c.paths;
  if (c.out) cfg.outputs.directory = *c.out;
  cfg.validate();
  return cfg;
}

bool wants(const RunConfig& cfg, const char* fmt) {
  const auto& f = cfg.outputs.formats;
  return std::find(f.begin(), f.end(), fmt) != f.end();
}

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

json meta(const RunConfig& cfg) {
  return {{"tool", "ergobound"}, {"version", kToolVersion}, {"config_hash", config_hash(cfg)},
          {"config", cfg.to_json()}};
}

std::string curve_csv(const RunConfig& cfg, std::initializer_list<std::pair<std::string, std::string>> extra,
                      const std::vector<double>& t, const std::vector<double>& v) {
  std::ostringstream os;
  write_csv_header(os, cfg, extra);
  os.precision(17);
  os << "t,value\n";
  for (std::size_t k = 0; k < t.size(); ++k) os << t[k] << ',' << v[k] << '\n';
  return os.str();
}

LimitingOptions limiting_options(const RunConfig& cfg) {
  LimitingOptions o;
  o.N_initial = cfg.truncation.N_initial;
  o.truncation_tol = cfg.truncation.tolerance;
  o.N_cap = cfg.truncation.N_cap;
  o.t_star = cfg.solver.t_star;
  o.auto_raise_t_star = cfg.solver.auto_raise_t_star;
  o.solver_tol = cfg.solver.tol;
  return o;
}

int cmd_bounds(const RunConfig& cfg, Outputs& out) {
  BoundsOptions opt;
  opt.quadrature_tol = cfg.bounds.quadrature_tol;
  opt.horizon = cfg.bounds.horizon;
  opt.curve_points = cfg.bounds.curve_points;
  const auto rep = compute_bounds(cfg.model, cfg.dsequence, opt);

  if (wants(cfg, "json")) {
    json j = meta(cfg);
    j["report"] = to_json(rep);
    out.add("report.json", j.dump(2) + "\n");
  }
  if (wants(cfg, "csv")) {
    std::vector<double> t;
    for (const auto& s : rep.curves) t.push_back(s.t);
    auto column = [&](auto get) {
      std::vector<double> v;
      for (const auto& s : rep.curves) v.push_back(get(s));
      return v;
    };
    const std::string h = fmt(cfg.bounds.horizon), q = fmt(cfg.bounds.quadrature_tol);
    out.add("exp_alpha.csv", curve_csv(cfg, {{"curve", "exp(-int_0^t alpha)"}, {"horizon", h}, {"quadrature_tol", q}},
                                       t, column([](const CurveSample& s) { return s.exp_alpha; })));
    out.add("exp_beta.csv", curve_csv(cfg, {{"curve", "exp(-int_0^t beta)"}, {"horizon", h}, {"quadrature_tol", q}},
                                      t, column([](const CurveSample& s) { return s.exp_beta; })));
    out.add("exp_chi.csv", curve_csv(cfg, {{"curve", "exp(-int_0^t chi)"}, {"horizon", h}, {"quadrature_tol", q}},
                                     t, column([](const CurveSample& s) { return s.exp_chi; })));
    if (!rep.curves.empty() && rep.curves.front().limit_distance) {
      out.add("limit_distance.csv",
              curve_csv(cfg, {{"curve", "(4FR/a) exp(-at)"}, {"horizon", h}, {"quadrature_tol", q}}, t,
                        column([](const CurveSample& s) { return *s.limit_distance; })));
    }
    if (!rep.curves.empty() && rep.curves.front().limit_mean_distance) {
      out.add("limit_mean_distance.csv",
              curve_csv(cfg, {{"curve", "(FR/(aW*)) exp(-at)"}, {"horizon", h}, {"quadrature_tol", q}}, t,
                        column([](const CurveSample& s) { return *s.limit_mean_distance; })));
    }
  }

  std::cout << "verdict: " << to_string(rep.verdict) << '\n';
  if (!rep.positivity_ok)
    std::cout << "positivity fails at (" << rep.positivity.row << "," << rep.positivity.col
              << "), t = " << rep.positivity_witness_time << ", value " << rep.positivity.worst_value << '\n';
  if (rep.periodic)
    std::cout << "a = " << fmt(rep.periodic->a) << "  K = " << fmt(rep.periodic->K)
              << "  R = " << fmt(rep.periodic->R) << "  F = " << fmt(rep.periodic->F) << '\n';
  return rep.verdict == ErgodicityVerdict::Inconclusive ? kInconclusive : kOk;
}

json limits_json(const LimitingCharacteristics& lim) {
  return {{"t_star", lim.t_star},
          {"N_used", lim.N_used},
          {"truncation_error_estimate", lim.truncation_error_estimate},
          {"period_drift", lim.period_drift},
          {"flagged", lim.flagged}};
}

int cmd_limits(const RunConfig& cfg, Outputs& out) {
  const auto lim = limiting_regime(cfg.model, limiting_options(cfg));
  const std::string N = std::to_string(lim.N_used), err = fmt(lim.truncation_error_estimate),
                    tol = fmt(cfg.truncation.tolerance), stol = fmt(cfg.solver.tol), ts = fmt(lim.t_star);
  if (wants(cfg, "csv")) {
    out.add("p0_curve.csv", curve_csv(cfg, {{"curve", "p0"}, {"N", N}, {"t_star", ts}, {"truncation_tol", tol},
                                            {"truncation_error_estimate", err}, {"solver_tol", stol}},
                                      lim.times, lim.p0_curve));
    out.add("mean_curve.csv", curve_csv(cfg, {{"curve", "mean"}, {"N", N}, {"t_star", ts}, {"truncation_tol", tol},
                                              {"truncation_error_estimate", err}, {"solver_tol", stol}},
                                        lim.times, lim.mean_curve));
  }
  if (wants(cfg, "json")) {
    json j = meta(cfg);
    j["limits"] = limits_json(lim);
    out.add("limits.json", j.dump(2) + "\n");
  }
  std::cout << "t* = " << lim.t_star << "  N = " << lim.N_used << "  truncation error ~ " << err
            << (lim.flagged ? "  (above tolerance)" : "") << '\n';
  return lim.flagged ? kInconclusive : kOk;
}

std::vector<LimitingCharacteristics> run_classes(const RunConfig& cfg, const LimitingOptions& opt) {
  std::vector<std::future<LimitingCharacteristics>> jobs;
  for (auto c : kAllClasses) {
    ModelSpec m = cfg.model;
    m.queue_class = c;
    if (c != QueueClass::BirthDeath) m.state_rules.reset();
    jobs.push_back(std::async(std::launch::async, [m, opt] { return limiting_regime(m, opt); }));
  }
  std::vector<LimitingCharacteristics> res;
  for (std::size_t k = 0; k < jobs.size(); ++k) {
    try {
      res.push_back(jobs[k].get());
    } catch (const std::exception& e) {
      throw std::runtime_error("class " + std::string(to_string(kAllClasses[k])) + ": " + e.what());
    }
  }
  return res;
}

int cmd_compare_classes(const RunConfig& cfg, Outputs& out) {
  auto opt = limiting_options(cfg);
  auto res = run_classes(cfg, opt);
  double t_max = 0.0, t_min = 1e300;
  for (const auto& r : res) {
    t_max = std::max(t_max, r.t_star);
    t_min = std::min(t_min, r.t_star);
  }
  if (t_max != t_min) {  // common window
    opt.t_star = t_max;
    opt.auto_raise_t_star = false;
    res = run_classes(cfg, opt);
  }

  double level = 0.0;
  for (const auto& r : res)
    for (double v : r.mean_curve) level = std::max(level, std::abs(v));

  const double mean_tol = 1e-3, p0_min_gap = 0.05;
  json pairs = json::array();
  std::ostringstream csv;
  write_csv_header(csv, cfg, {{"t_star", fmt(t_max)}, {"mean_level", fmt(level)}});
  csv.precision(17);
  csv << "class_x,class_y,mean_gap,mean_gap_rel,p0_gap\n";
  double worst_rel = 0.0, worst_p0 = 0.0;
  for (std::size_t x = 0; x < res.size(); ++x)
    for (std::size_t y = x + 1; y < res.size(); ++y) {
      double gm = 0.0, gp = 0.0;
      for (std::size_t k = 0; k < res[x].times.size(); ++k) {
        gm = std::max(gm, std::abs(res[x].mean_curve[k] - res[y].mean_curve[k]));
        gp = std::max(gp, std::abs(res[x].p0_curve[k] - res[y].p0_curve[k]));
      }
      const double rel = level > 0.0 ? gm / level : gm;
      worst_rel = std::max(worst_rel, rel);
      worst_p0 = std::max(worst_p0, gp);
      const auto cx = std::string(to_string(kAllClasses[x])), cy = std::string(to_string(kAllClasses[y]));
      csv << cx << ',' << cy << ',' << gm << ',' << rel << ',' << gp << '\n';
      pairs.push_back({{"class_x", cx}, {"class_y", cy}, {"mean_gap", gm}, {"mean_gap_rel", rel}, {"p0_gap", gp}});
    }
  const bool coincide = worst_rel < mean_tol, diverge = worst_p0 > p0_min_gap;

  if (wants(cfg, "csv")) out.add("compare_classes.csv", csv.str());
  if (wants(cfg, "json")) {
    json j = meta(cfg);
    json per = json::array();
    for (std::size_t k = 0; k < res.size(); ++k) {
      auto e = limits_json(res[k]);
      e["class"] = to_string(kAllClasses[k]);
      per.push_back(e);
    }
    j["classes"] = per;
    j["pairs"] = pairs;
    j["max_mean_gap_rel"] = worst_rel;
    j["max_p0_gap"] = worst_p0;
    j["mean_coincidence"] = coincide;
    j["p0_divergence"] = diverge;
    j["thresholds"] = {{"mean_gap_rel", mean_tol}, {"p0_gap", p0_min_gap}};
    out.add("compare_classes.json", j.dump(2) + "\n");
  }
  std::cout << "max relative mean gap " << fmt(worst_rel) << (coincide ? " (coincide)" : " (differ)")
            << ", max p0 gap " << fmt(worst_p0) << (diverge ? " (diverge)" : " (close)") << '\n';
  return coincide && diverge ? kOk : kInconclusive;
}

int cmd_simulate(const RunConfig& cfg, Outputs& out) {
  if (cfg.simulation.grid.empty()) throw std::invalid_argument("simulation.grid is empty");
  SimConfig sc;
  sc.n_paths = cfg.simulation.paths;
  sc.seed = cfg.simulation.seed;
  sc.sample_times = cfg.simulation.grid;
  sc.x0 = cfg.simulation.x0;
  sc.N = cfg.truncation.N_initial;
  const auto emp = simulate(cfg.model, sc);
  const auto traj = solve(cfg.model, sc.N, unit_vector(sc.N, sc.x0), 0.0, sc.sample_times,
                          SolverOptions::from_tolerance(cfg.solver.tol));
  const auto rep = compare_to_ode(emp, traj);

  if (wants(cfg, "csv")) {
    std::ostringstream os;
    write_csv_header(os, cfg, {{"N", std::to_string(sc.N)}, {"paths", std::to_string(sc.n_paths)},
                               {"seed", std::to_string(sc.seed)}, {"x0", std::to_string(sc.x0)}});
    write_empirical_csv(os, emp);
    out.add("empirical.csv", os.str());
  }
  if (wants(cfg, "json")) {
    json rows = json::array();
    for (const auto& r : rep.rows)
      rows.push_back({{"t", r.t}, {"tv", r.tv}, {"p0_hat", r.p0_hat}, {"p0_ode", r.p0_ode},
                      {"z_p0", r.z_p0}, {"mean_hat", r.mean_hat}, {"mean_ode", r.mean_ode},
                      {"z_mean", r.z_mean}});
    json j = meta(cfg);
    j["comparison"] = {{"rows", rows}, {"threshold", rep.threshold}, {"max_abs_z", rep.max_abs_z},
                       {"pass", rep.pass}};
    out.add("comparison.json", j.dump(2) + "\n");
  }
  std::cout << "max |z| " << fmt(rep.max_abs_z) << " vs threshold " << fmt(rep.threshold)
            << (rep.pass ? " : agree" : " : MISMATCH") << '\n';
  return rep.pass ? kOk : kInconclusive;
}

int cmd_dump(const RunConfig& cfg, double t, Outputs& out) {
  std::ostringstream os;
  write_csv_header(os, cfg);
  write_matrices_csv(os, build_rate_matrices(cfg.model, cfg.dsequence, cfg.truncation.N_initial, t),
                     cfg.model.queue_class);
  out.add("matrices.csv", os.str());
  return kOk;
}

void write_all(const std::string& dir, const Outputs& out) {
  std::filesystem::create_directories(dir);
  for (const auto& [name, body] : out.files) {
    const auto path = std::filesystem::path(dir) / name;
    std::ofstream f(path, std::ios::binary);
    f << body;
    if (!f) throw std::runtime_error("cannot write " + path.string());
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Convergence bounds and limiting characteristics for inhomogeneous Markovian queues"};
  app.set_version_flag("--version", std::string(kToolVersion));
  app.require_subcommand(1);

  Common common;
  double dump_t = 0.0;
  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", common.config_path, "JSON run config")->check(CLI::ExistingFile);
    sub->add_option("--preset", common.preset, "built-in config, e.g. case-i-10");
    sub->add_option("--N", common.N, "truncation level")->check(CLI::PositiveNumber);
    sub->add_option("--t-star", common.t_star, "start of the limiting window");
    sub->add_option("--seed", common.seed, "simulation seed");
    sub->add_option("--paths", common.paths, "simulation paths")->check(CLI::PositiveNumber);
    sub->add_option("--out", common.out, "output directory");
  };

  auto* bounds = app.add_subcommand("bounds", "ergodicity certificate and bound curves");
  auto* limits = app.add_subcommand("limits", "limiting p0(t) and mean curves over one period");
  auto* compare = app.add_subcommand("compare-classes", "limiting curves of classes I-IV side by side");
  auto* sim = app.add_subcommand("simulate", "Monte Carlo paths checked against the ODE solution");
  auto* dump = app.add_subcommand("dump-matrices", "A, B and D B D^-1 at one time point");
  auto* show = app.add_subcommand("print-config", "print the effective config as JSON");
  auto* presets = app.add_subcommand("presets", "list built-in presets");
  for (auto* s : {bounds, limits, compare, sim, dump, show}) add_common(s);
  dump->add_option("--t", dump_t, "time point");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kError;
  }

  if (presets->parsed()) {
    for (const auto& n : preset_names()) std::cout << n << '\n';
    return kOk;
  }

  try {
    const RunConfig cfg = load(common);
    if (show->parsed()) {
      std::cout << cfg.to_json().dump(2) << "\nconfig_hash: " << config_hash(cfg) << '\n';
      return kOk;
    }
    Outputs out;
    int rc = kOk;
    if (bounds->parsed()) rc = cmd_bounds(cfg, out);
    else if (limits->parsed()) rc = cmd_limits(cfg, out);
    else if (compare->parsed()) rc = cmd_compare_classes(cfg, out);
    else if (sim->parsed()) rc = cmd_simulate(cfg, out);
    else if (dump->parsed()) rc = cmd_dump(cfg, dump_t, out);
    write_all(cfg.outputs.directory, out);
    std::cout << "wrote " << out.files.size() << " file(s) to " << cfg.outputs.directory << '\n';
    return rc;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kError;
  }
}
