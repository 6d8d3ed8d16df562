#include "commands.hpp"

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <map>
#include <set>
#include <vector>

#include <CLI11.hpp>

#include "sss/harness.hpp"
#include "sss/io.hpp"
#include "sss/metrics.hpp"
#include "sss/svg.hpp"

namespace sss::cli {

namespace {

using nlohmann::json;

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

void check_keys(const json& obj, std::initializer_list<const char*> allowed, const std::string& where) {
  if (obj.is_null()) return;
  if (!obj.is_object()) throw ConfigError(where + ": expected a JSON object");
  for (const auto& [key, value] : obj.items()) {
    if (std::none_of(allowed.begin(), allowed.end(), [&](const char* a) { return key == a; })) {
      throw ConfigError(where + ": unknown key '" + key + "'");
    }
  }
}

template <typename T>
std::optional<T> get_opt(const json& obj, const char* key) {
  if (!obj.is_object() || !obj.contains(key) || obj.at(key).is_null()) return std::nullopt;
  return obj.at(key).get<T>();
}

ScaleMode parse_c_mode(const std::string& s) {
  if (s == "per-component" || s == "per_component") return ScaleMode::per_component;
  if (s == "hypersphere") return ScaleMode::hypersphere;
  throw ConfigError("c-mode must be 'per-component' or 'hypersphere', got '" + s + "'");
}

StopRule parse_stop(const std::string& s) {
  if (s == "schedule" || s == "eta_schedule") return StopRule::eta_schedule;
  if (s == "sigma" || s == "residual_below_sigma") return StopRule::residual_below_sigma;
  throw ConfigError("stop must be 'schedule' or 'sigma', got '" + s + "'");
}

SolverConfig resolve_solver(const json& section, const Overrides& flags) {
  check_keys(section, {"eta_start", "eta_end", "epsilon", "c_mode", "stop", "max_iterations", "ridge_tolerance"},
             "solver");
  SolverConfig cfg;
  if (auto v = get_opt<double>(section, "eta_start")) cfg.eta_start = *v;
  if (auto v = get_opt<double>(section, "eta_end")) cfg.eta_end = *v;
  if (auto v = get_opt<double>(section, "epsilon")) cfg.epsilon = *v;
  if (auto v = get_opt<std::string>(section, "c_mode")) cfg.c_mode = parse_c_mode(*v);
  if (auto v = get_opt<std::string>(section, "stop")) cfg.stop = parse_stop(*v);
  if (auto v = get_opt<int>(section, "max_iterations")) cfg.max_iterations = *v;
  if (auto v = get_opt<double>(section, "ridge_tolerance")) cfg.ridge_tolerance = *v;

  if (flags.eta_start) cfg.eta_start = *flags.eta_start;
  if (flags.eta_end) cfg.eta_end = *flags.eta_end;
  if (flags.epsilon) cfg.epsilon = *flags.epsilon;
  if (flags.c_mode) cfg.c_mode = parse_c_mode(*flags.c_mode);
  if (flags.stop) cfg.stop = parse_stop(*flags.stop);
  if (flags.max_iters) cfg.max_iterations = *flags.max_iters;
  cfg.validate();
  return cfg;
}

std::uint64_t resolve_seed(const json& doc, const Overrides& flags) {
  if (flags.seed) return *flags.seed;
  if (auto v = get_opt<std::uint64_t>(doc, "seed")) return *v;
  if (const char* env = std::getenv("SSS_SEED"); env && *env) {
    try {
      std::size_t used = 0;
      const std::uint64_t seed = std::stoull(env, &used);
      if (used != std::string(env).size()) throw std::invalid_argument("trailing characters");
      return seed;
    } catch (const std::exception&) {
      throw ConfigError(std::string("SSS_SEED is not an unsigned integer: '") + env + "'");
    }
  }
  return 0;
}

std::filesystem::path resolve_out(const json& doc, const Overrides& flags, const char* fallback) {
  if (flags.out) return *flags.out;
  if (auto v = get_opt<std::string>(doc, "out")) return *v;
  return fallback;
}

int resolve_rounds(const json& doc, const Overrides& flags) {
  const int rounds = flags.rounds ? *flags.rounds : get_opt<int>(doc, "rounds").value_or(50);
  if (rounds < 1) throw ConfigError("rounds must be >= 1");
  return rounds;
}

int resolve_jobs(const json& doc, const Overrides& flags) {
  const int jobs = flags.jobs ? *flags.jobs : get_opt<int>(doc, "jobs").value_or(0);
  if (jobs < 0) throw ConfigError("jobs must be >= 0 (0 = all processors)");
  return jobs;
}

std::pair<double, double> resolve_amplitudes(const json& doc) {
  if (!doc.is_object() || !doc.contains("amplitude_range")) return {0.5, 1.0};
  const auto range = doc.at("amplitude_range").get<std::vector<double>>();
  if (range.size() != 2) throw ConfigError("amplitude_range must be [low, high]");
  return {range[0], range[1]};
}

template <typename T>
std::vector<T> list_or_scalar(const json& obj, const char* key, std::vector<T> fallback) {
  if (!obj.is_object() || !obj.contains(key)) return fallback;
  const json& v = obj.at(key);
  if (v.is_array()) return v.get<std::vector<T>>();
  return {v.get<T>()};
}

MethodConfig parse_method(const json& entry, const SolverConfig& solver) {
  MethodConfig mc;
  mc.solver = solver;
  if (entry.is_string()) {
    mc.method = method_from_string(entry.get<std::string>());
    return mc;
  }
  check_keys(entry, {"method", "label", "k", "max_iterations", "residual_tolerance"}, "methods[]");
  mc.method = method_from_string(entry.at("method").get<std::string>());
  if (auto v = get_opt<std::string>(entry, "label")) mc.label = *v;
  if (mc.method == Method::cosamp) {
    auto k = get_opt<Index>(entry, "k");
    if (!k) throw ConfigError("cosamp method entries need a sparsity estimate 'k'");
    mc.cosamp.k = *k;
    if (auto v = get_opt<int>(entry, "max_iterations")) mc.cosamp.max_iterations = *v;
    mc.cosamp_tolerance = get_opt<double>(entry, "residual_tolerance");
  }
  mc.validate();
  return mc;
}

void validate_against_specs(const std::vector<GeneratorSpec>& specs, const std::vector<MethodConfig>& methods) {
  for (const auto& s : specs) {
    s.validate();
    for (const auto& m : methods) {
      if (m.method == Method::cosamp) m.cosamp.validate(s.n);
    }
  }
}

json config_json(const std::vector<GeneratorSpec>& specs, const std::vector<MethodConfig>& methods,
                 const GridOptions& grid) {
  json j;
  j["seed"] = grid.base_seed;
  j["rounds"] = grid.rounds;
  j["specs"] = json::array();
  for (const auto& s : specs) j["specs"].push_back(json(to_json(s)));
  j["methods"] = json::array();
  for (const auto& m : methods) {
    json e;
    e["method"] = to_string(m.method);
    e["label"] = m.display_label();
    e["params"] = json(m.params());
    j["methods"].push_back(e);
  }
  return j;
}

std::string setting_name(const GeneratorSpec& s) {
  return "n=" + std::to_string(s.n) + " k=" + std::to_string(s.k) + " m=" + std::to_string(s.m) +
         (s.noise_variance > 0 ? " s2=" + format_double(s.noise_variance) : "");
}

// One panel per (k, noise, method) with a box per m, as in the ratio-vs-m figures.
std::string ratio_chart(const SummaryTable& table) {
  std::vector<svg::Panel> panels;
  for (const auto& row : table.rows) {
    const std::string title = row.label + " k=" + std::to_string(row.setting.k) +
                              (row.setting.noise_variance > 0 ? " s2=" + format_double(row.setting.noise_variance) : "");
    auto it = std::find_if(panels.begin(), panels.end(), [&](const svg::Panel& p) { return p.title == title; });
    if (it == panels.end()) {
      panels.push_back({title, "s_hat / s0", {}, false});
      it = std::prev(panels.end());
    }
    it->boxes.push_back({"m=" + std::to_string(row.setting.m), row.s_hat_ratio});
  }
  return svg::box_panels(panels);
}

std::string residual_chart(const std::vector<ExperimentRecord>& records) {
  std::vector<svg::Series> series;
  for (const auto& r : records) {
    if (!r.trace || r.round != 0 || series.size() >= 6) continue;
    svg::Series s;
    s.name = r.label + " " + setting_name(r.spec);
    for (const auto& t : *r.trace) {
      s.x.push_back(t.iteration);
      s.y.push_back(t.residual * t.residual);
    }
    series.push_back(std::move(s));
  }
  return svg::line_chart("Residual per iteration", "iteration", "||Ax - b||^2", series, true);
}

template <typename Body>
int guarded(std::ostream& err, Body&& body) {
  try {
    return body();
  } catch (const ParseError& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const json::exception& e) {
    err << "config error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const NumericError& e) {
    err << "numeric failure: " << e.what() << "\n";
    return kExitNumeric;
  } catch (const std::invalid_argument& e) {  // ArgumentError, ShapeError
    err << "invalid input: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::domain_error& e) {
    err << "invalid input: " << e.what() << "\n";
    return kExitUsage;
  }
}

}  // namespace

int cmd_solve(const std::filesystem::path& matrix_file, const std::filesystem::path& vector_file,
              const json& config, const Overrides& flags, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    check_keys(config, {"solver", "sigma2", "out"}, "config");
    const SolverConfig cfg = resolve_solver(config.is_object() && config.contains("solver") ? config.at("solver") : json(), flags);
    const auto out_dir = resolve_out(config, flags, "sss_out");

    Problem problem;
    problem.A = read_matrix_csv(matrix_file);
    problem.b = read_vector_csv(vector_file);
    if (problem.b.size() != problem.A.rows()) {
      throw ParseError(vector_file.string(), static_cast<std::size_t>(std::min(problem.b.size(), problem.A.rows()) + 1), 0,
                       "vector has " + std::to_string(problem.b.size()) + " entries but the matrix has " +
                           std::to_string(problem.A.rows()) + " rows");
    }
    std::optional<double> sigma2 = flags.sigma2 ? flags.sigma2 : get_opt<double>(config, "sigma2");
    if (sigma2) {
      if (!(*sigma2 >= 0)) throw ConfigError("sigma2 must be >= 0");
      problem.noise_variance = *sigma2;
    }
    if (cfg.stop == StopRule::residual_below_sigma && !sigma2) {
      throw ConfigError("--stop sigma needs --sigma2");
    }
    problem.validate();

    const auto result = solve(problem, cfg);

    atomic_write(out_dir / "reconstruction.csv", vector_csv(result.c));
    atomic_write(out_dir / "trace.csv", trace_csv(result.trace));
    svg::Series s{"sss", {}, {}};
    for (const auto& t : result.trace) {
      s.x.push_back(t.iteration);
      s.y.push_back(t.residual * t.residual);
    }
    atomic_write(out_dir / "residual.svg",
                 svg::line_chart("Residual per iteration", "iteration", "||Ax - b||^2", {s}, true));

    const double residual = (problem.A * result.c - problem.b).norm();
    Index rho_min = problem.cols(), rho_max = 0;
    for (const auto& t : result.trace) {
      rho_min = std::min(rho_min, t.rho);
      rho_max = std::max(rho_max, t.rho);
    }
    out << "iterations: " << result.iterations << " (stop: " << to_string(result.stop) << ")\n";
    out << "final residual ||Ac - b||: " << format_double(residual) << "\n";
    if (!result.trace.empty()) {
      out << "rho: first " << result.trace.front().rho << ", min " << rho_min << ", max " << rho_max
          << ", final " << result.trace.back().rho << "\n";
    }
    const bool any = result.c.lpNorm<Eigen::Infinity>() > 0;
    out << "sparsity ratio of reconstruction: " << (any ? format_double(sparsity_ratio(result.c)) : "0") << "\n";
    out << "wrote " << (out_dir / "reconstruction.csv").string() << "\n";
    return kExitOk;
  });
}

int cmd_simulate(const json& config, const Overrides& flags, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    check_keys(config, {"seed", "rounds", "jobs", "out", "grid", "solver", "methods", "traces"}, "config");
    if (!config.is_object() || !config.contains("grid")) throw ConfigError("config: missing 'grid'");
    const json& grid = config.at("grid");
    check_keys(grid, {"n", "k", "m", "noise_variance", "amplitude_range"}, "grid");

    const SolverConfig solver = resolve_solver(config.contains("solver") ? config.at("solver") : json(), flags);
    GridOptions options;
    options.base_seed = resolve_seed(config, flags);
    options.rounds = resolve_rounds(config, flags);
    options.jobs = resolve_jobs(config, flags);
    const auto out_dir = resolve_out(config, flags, "sss_out");
    const bool traces = flags.traces || get_opt<bool>(config, "traces").value_or(false);

    const auto ns = list_or_scalar<Index>(grid, "n", {1000});
    const auto ks = list_or_scalar<Index>(grid, "k", {});
    const auto ms = list_or_scalar<Index>(grid, "m", {});
    auto noises = list_or_scalar<double>(grid, "noise_variance", {0.0});
    if (flags.sigma2) noises = {*flags.sigma2};
    const auto [low, high] = resolve_amplitudes(grid);
    if (ns.empty() || ks.empty() || ms.empty()) throw ConfigError("grid: n, k and m must be non-empty");

    std::vector<GeneratorSpec> specs;
    for (Index n : ns)
      for (Index k : ks)
        for (Index m : ms)
          for (double s2 : noises) specs.push_back({n, k, m, s2, 0, low, high});

    std::vector<MethodConfig> methods;
    if (config.contains("methods")) {
      for (const auto& entry : config.at("methods")) methods.push_back(parse_method(entry, solver));
    } else {
      methods.push_back(parse_method(json("sss"), solver));
    }
    if (methods.empty()) throw ConfigError("config: 'methods' is empty");
    std::set<std::string> labels;
    for (const auto& m : methods) {
      if (!labels.insert(m.display_label()).second) throw ConfigError("duplicate method label '" + m.display_label() + "'");
      if (m.method == Method::sss && m.solver.stop == StopRule::residual_below_sigma) {
        for (const auto& s : specs) {
          if (s.noise_variance <= 0) throw ConfigError("stop rule 'sigma' needs a positive noise_variance");
        }
      }
    }
    validate_against_specs(specs, methods);

    if (traces) {
      options.trace_dir = out_dir / "traces";
      options.keep_traces = true;
    }
    const auto records = run_grid(specs, methods, options);
    const auto table = summarize(records);

    atomic_write(out_dir / "records.ndjson", records_ndjson(records));
    atomic_write(out_dir / "summary.csv", summary_csv(table));
    atomic_write(out_dir / "ratio.svg", ratio_chart(table));
    if (traces) atomic_write(out_dir / "residual.svg", residual_chart(records));
    atomic_write(out_dir / "config.json", config_json(specs, methods, options).dump(2) + "\n");

    int failed = 0;
    for (const auto& r : records) failed += r.failed ? 1 : 0;
    out << records.size() << " records (" << failed << " failed) written to " << out_dir.string() << "\n";
    for (const auto& row : table.rows) {
      out << "  " << row.label << " " << setting_name(row.setting) << ": median s_hat/s0 "
          << format_double(row.s_hat_ratio.median) << ", support exact "
          << format_double(row.support_exact.median) << " (median), residual "
          << format_double(row.final_residual.median) << "\n";
    }
    return kExitOk;
  });
}

int cmd_compare_cosamp(const json& config, const Overrides& flags, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    check_keys(config, {"seed", "rounds", "jobs", "out", "n", "k", "m", "noise_variance", "amplitude_range",
                        "cosamp_k", "cosamp", "solver"},
               "config");
    if (!config.is_object()) throw ConfigError("config: expected a JSON object");
    const SolverConfig solver = resolve_solver(config.contains("solver") ? config.at("solver") : json(), flags);
    GridOptions options;
    options.base_seed = resolve_seed(config, flags);
    options.rounds = resolve_rounds(config, flags);
    options.jobs = resolve_jobs(config, flags);
    const auto out_dir = resolve_out(config, flags, "sss_compare");

    GeneratorSpec spec;
    spec.n = get_opt<Index>(config, "n").value_or(1000);
    spec.k = get_opt<Index>(config, "k").value_or(20);
    spec.m = get_opt<Index>(config, "m").value_or(500);
    spec.noise_variance = flags.sigma2 ? *flags.sigma2 : get_opt<double>(config, "noise_variance").value_or(0.01);
    std::tie(spec.amplitude_low, spec.amplitude_high) = resolve_amplitudes(config);

    if (!config.contains("cosamp_k")) throw ConfigError("config: missing 'cosamp_k' sweep");
    const auto sweep = config.at("cosamp_k").get<std::vector<Index>>();
    if (sweep.empty()) throw ConfigError("config: 'cosamp_k' sweep is empty");
    const json cosamp_section = config.contains("cosamp") ? config.at("cosamp") : json();
    check_keys(cosamp_section, {"max_iterations", "residual_tolerance"}, "cosamp");

    std::vector<MethodConfig> methods;
    for (Index k : sweep) {
      MethodConfig mc;
      mc.method = Method::cosamp;
      mc.cosamp.k = k;
      mc.label = "k=" + std::to_string(k);
      if (auto v = get_opt<int>(cosamp_section, "max_iterations")) mc.cosamp.max_iterations = *v;
      mc.cosamp_tolerance = get_opt<double>(cosamp_section, "residual_tolerance");
      mc.validate();
      methods.push_back(mc);
    }
    MethodConfig prop;
    prop.method = Method::sss;
    prop.solver = solver;
    prop.label = "prop";
    methods.push_back(prop);
    if (solver.stop == StopRule::residual_below_sigma && spec.noise_variance <= 0) {
      throw ConfigError("stop rule 'sigma' needs a positive noise_variance");
    }
    validate_against_specs({spec}, methods);

    const auto records = run_grid({spec}, methods, options);
    const auto table = summarize(records);

    std::vector<svg::Panel> panels{{"Sparsity estimate", "s_hat / s0", {}, true},
                                   {"Runtime", "seconds", {}, true},
                                   {"Reconstruction error", "||Ax - b||", {}, true}};
    for (const auto& row : table.rows) {
      panels[0].boxes.push_back({row.label, row.s_hat_ratio});
      panels[1].boxes.push_back({row.label, row.runtime_seconds});
      panels[2].boxes.push_back({row.label, row.final_residual});
    }

    atomic_write(out_dir / "records.ndjson", records_ndjson(records));
    atomic_write(out_dir / "comparison.csv", summary_csv(table));
    atomic_write(out_dir / "comparison.svg", svg::box_panels(panels));
    atomic_write(out_dir / "config.json", config_json({spec}, methods, options).dump(2) + "\n");

    out << "compared " << methods.size() << " methods over " << options.rounds << " shared problems ("
        << setting_name(spec) << ")\n";
    for (const auto& row : table.rows) {
      out << "  " << row.label << ": median s_hat/s0 " << format_double(row.s_hat_ratio.median) << ", runtime "
          << format_double(row.runtime_seconds.median) << " s, residual " << format_double(row.final_residual.median)
          << "\n";
    }
    return kExitOk;
  });
}

namespace {

json load_config(const std::string& path) {
  if (path.empty()) return json::object();
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError("config file '" + path + "': " + e.what());
  }
}

void add_common_flags(CLI::App* app, Overrides& o, std::string& config_path, bool config_required) {
  auto* cfg = app->add_option("--config", config_path, "JSON config document");
  if (config_required) cfg->required();
  app->add_option("--eta-start", o.eta_start, "initial coupling weight (> 0)");
  app->add_option("--eta-end", o.eta_end, "final coupling weight");
  app->add_option("--epsilon", o.epsilon, "multiplicative growth of eta per iteration");
  app->add_option("--c-mode", o.c_mode, "per-component | hypersphere");
  app->add_option("--stop", o.stop, "schedule | sigma");
  app->add_option("--sigma2", o.sigma2, "noise level for the residual stopping rule");
  app->add_option("--max-iters", o.max_iters, "hard iteration cap");
  app->add_option("--seed", o.seed, "base seed (default: config, then $SSS_SEED)");
  app->add_option("--rounds", o.rounds, "trials per grid setting");
  app->add_option("--jobs", o.jobs, "worker threads (0 = all processors)");
  app->add_option("--out", o.out, "output directory");
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Solve-Select-Scale sparse recovery"};
  app.require_subcommand(1);

  Overrides solve_flags, sim_flags, cmp_flags;
  std::string solve_cfg, sim_cfg, cmp_cfg;
  std::string matrix_file, vector_file;

  auto* solve_cmd = app.add_subcommand("solve", "reconstruct x from a CSV matrix A and vector b");
  solve_cmd->add_option("matrix", matrix_file, "CSV matrix A (row-major, no header)")->required();
  solve_cmd->add_option("vector", vector_file, "CSV vector b (one value per line)")->required();
  add_common_flags(solve_cmd, solve_flags, solve_cfg, false);

  auto* sim_cmd = app.add_subcommand("simulate", "Monte-Carlo grid over (n, k, m, noise)");
  add_common_flags(sim_cmd, sim_flags, sim_cfg, true);
  sim_cmd->add_flag("--traces", sim_flags.traces, "write per-trial trace CSVs");

  auto* cmp_cmd = app.add_subcommand("compare-cosamp", "SSS against CoSaMP over a sweep of k");
  add_common_flags(cmp_cmd, cmp_flags, cmp_cfg, true);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "usage error: " << e.what() << "\n";
    return kExitUsage;
  }

  json doc;
  try {
    if (*solve_cmd) doc = load_config(solve_cfg);
    if (*sim_cmd) doc = load_config(sim_cfg);
    if (*cmp_cmd) doc = load_config(cmp_cfg);
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << "\n";
    return kExitUsage;
  }

  if (*solve_cmd) return cmd_solve(matrix_file, vector_file, doc, solve_flags, out, err);
  if (*sim_cmd) return cmd_simulate(doc, sim_flags, out, err);
  return cmd_compare_cosamp(doc, cmp_flags, out, err);
}

}  // namespace sss::cli
