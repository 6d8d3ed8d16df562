#include "sss/harness.hpp"

#include <algorithm>
#include <atomic>
#include <bit>
#include <chrono>
#include <cmath>
#include <mutex>
#include <random>
#include <thread>

#include "sss/io.hpp"

namespace sss {

void GeneratorSpec::validate() const {
  if (n < 1) throw ArgumentError("generator: n must be >= 1");
  if (m < 1) throw ArgumentError("generator: m must be >= 1");
  if (m > n) throw ArgumentError("generator: m must not exceed n");
  if (k < 0 || k > n) throw ArgumentError("generator: k must lie in [0, n]");
  if (!(noise_variance >= 0) || !std::isfinite(noise_variance)) {
    throw ArgumentError("generator: noise variance must be finite and >= 0");
  }
  if (!(amplitude_low > 0) || !(amplitude_low <= amplitude_high) || !(amplitude_high <= 1)) {
    throw ArgumentError("generator: amplitude range must satisfy 0 < low <= high <= 1");
  }
}

bool GeneratorSpec::same_setting(const GeneratorSpec& o) const {
  return n == o.n && k == o.k && m == o.m && noise_variance == o.noise_variance &&
         amplitude_low == o.amplitude_low && amplitude_high == o.amplitude_high;
}

Problem generate_problem(const GeneratorSpec& spec) {
  spec.validate();
  std::mt19937_64 rng(spec.seed);
  std::normal_distribution<double> gauss(0.0, 1.0);

  Problem p;
  const double col_scale = 1.0 / std::sqrt(static_cast<double>(spec.m));
  p.A.resize(spec.m, spec.n);
  for (Index j = 0; j < spec.n; ++j)
    for (Index i = 0; i < spec.m; ++i) p.A(i, j) = col_scale * gauss(rng);

  // Partial Fisher-Yates for k distinct positions.
  std::vector<Index> positions(static_cast<std::size_t>(spec.n));
  for (Index i = 0; i < spec.n; ++i) positions[static_cast<std::size_t>(i)] = i;
  for (Index i = 0; i < spec.k; ++i) {
    std::uniform_int_distribution<Index> pick(i, spec.n - 1);
    std::swap(positions[static_cast<std::size_t>(i)], positions[static_cast<std::size_t>(pick(rng))]);
  }
  std::uniform_real_distribution<double> amplitude(spec.amplitude_low, spec.amplitude_high);
  std::bernoulli_distribution negative(0.5);
  Eigen::VectorXd truth = Eigen::VectorXd::Zero(spec.n);
  for (Index i = 0; i < spec.k; ++i) {
    const double a = amplitude(rng);
    truth(positions[static_cast<std::size_t>(i)]) = negative(rng) ? -a : a;
  }

  p.b = p.A * truth;
  if (spec.noise_variance > 0) {
    const double sd = std::sqrt(spec.noise_variance / static_cast<double>(spec.m));
    for (Index i = 0; i < spec.m; ++i) p.b(i) += sd * gauss(rng);
  }
  p.truth = std::move(truth);
  p.noise_variance = spec.noise_variance;
  return p;
}

Evaluation evaluate(const Problem& problem, const Eigen::VectorXd& reconstruction) {
  if (!problem.truth) throw ArgumentError("evaluate: problem has no ground truth");
  const Eigen::VectorXd& truth = *problem.truth;
  if (reconstruction.size() != truth.size()) throw ShapeError("evaluate: reconstruction length mismatch");

  Evaluation e;
  e.final_residual = (problem.A * reconstruction - problem.b).norm();
  e.s0 = truth.isZero(0) ? 0.0 : sparsity_ratio(truth);

  const double peak = reconstruction.lpNorm<Eigen::Infinity>();
  if (peak == 0.0) {
    e.support_exact = truth.isZero(0);
    return e;
  }
  e.s_hat = sparsity_ratio(reconstruction);
  e.s_hat_ratio = e.s0 > 0 ? e.s_hat / e.s0 : 0.0;
  const double threshold = 1e-8 * peak;
  e.support_exact = true;
  for (Index i = 0; i < truth.size(); ++i) {
    if ((std::abs(reconstruction(i)) > threshold) != (truth(i) != 0.0)) {
      e.support_exact = false;
      break;
    }
  }
  return e;
}

const char* to_string(Method m) {
  switch (m) {
    case Method::sss: return "sss";
    case Method::cosamp: return "cosamp";
    case Method::least_squares: return "least_squares";
  }
  return "unknown";
}

Method method_from_string(const std::string& s) {
  if (s == "sss") return Method::sss;
  if (s == "cosamp") return Method::cosamp;
  if (s == "least_squares" || s == "least-squares") return Method::least_squares;
  throw ArgumentError("unknown method '" + s + "'");
}

std::string MethodConfig::display_label() const {
  if (!label.empty()) return label;
  if (method == Method::cosamp) return "cosamp_k" + std::to_string(cosamp.k);
  return to_string(method);
}

nlohmann::ordered_json MethodConfig::params() const {
  nlohmann::ordered_json j;
  switch (method) {
    case Method::sss:
      j["eta_start"] = solver.eta_start;
      j["eta_end"] = solver.eta_end;
      j["epsilon"] = solver.epsilon;
      j["c_mode"] = to_string(solver.c_mode);
      j["stop"] = to_string(solver.stop);
      j["max_iterations"] = solver.max_iterations;
      j["ridge_tolerance"] = solver.ridge_tolerance;
      break;
    case Method::cosamp:
      j["k"] = cosamp.k;
      j["max_iterations"] = cosamp.max_iterations;
      if (cosamp_tolerance) {
        j["residual_tolerance"] = *cosamp_tolerance;
      } else {
        j["residual_tolerance"] = "auto";
      }
      break;
    case Method::least_squares:
      j = nlohmann::ordered_json::object();
      break;
  }
  return j;
}

void MethodConfig::validate() const {
  if (method == Method::sss) solver.validate();
  if (method == Method::cosamp) {
    if (cosamp.k < 0) throw ArgumentError("cosamp: k must be >= 0");
    if (cosamp.max_iterations < 0) throw ArgumentError("cosamp: max_iterations must be >= 0");
    if (cosamp_tolerance && !(*cosamp_tolerance >= 0)) {
      throw ArgumentError("cosamp: residual tolerance must be >= 0");
    }
  }
}

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t mix(std::uint64_t h, std::uint64_t v) { return splitmix64(h ^ splitmix64(v)); }

}  // namespace

std::uint64_t derive_seed(std::uint64_t base_seed, const GeneratorSpec& spec, int round) {
  std::uint64_t h = splitmix64(base_seed);
  h = mix(h, static_cast<std::uint64_t>(spec.n));
  h = mix(h, static_cast<std::uint64_t>(spec.k));
  h = mix(h, static_cast<std::uint64_t>(spec.m));
  h = mix(h, std::bit_cast<std::uint64_t>(spec.noise_variance));
  h = mix(h, std::bit_cast<std::uint64_t>(spec.amplitude_low));
  h = mix(h, std::bit_cast<std::uint64_t>(spec.amplitude_high));
  return mix(h, static_cast<std::uint64_t>(round));
}

ExperimentRecord run_trial(const Problem& problem, const GeneratorSpec& spec, int round,
                           const MethodConfig& method,
                           const std::optional<std::filesystem::path>& trace_path,
                           bool keep_trace) {
  ExperimentRecord rec;
  rec.spec = spec;
  rec.round = round;
  rec.method = method.method;
  rec.label = method.display_label();
  rec.method_params = method.params();

  const auto start = std::chrono::steady_clock::now();
  try {
    Eigen::VectorXd reconstruction;
    switch (method.method) {
      case Method::sss: {
        auto result = solve(problem, method.solver);
        reconstruction = std::move(result.c);
        rec.iterations = result.iterations;
        rec.stop_reason = to_string(result.stop);
        if (trace_path) write_trace_csv(*trace_path, result.trace);
        if (keep_trace) rec.trace = std::make_shared<const Trace>(std::move(result.trace));
        break;
      }
      case Method::cosamp: {
        CosampConfig cfg = method.cosamp;
        cfg.residual_tolerance = method.cosamp_tolerance.value_or(
            spec.noise_variance > 0 ? std::sqrt(spec.noise_variance) : 1e-6);
        auto result = cosamp(problem, cfg);
        reconstruction = std::move(result.x);
        rec.iterations = result.iterations;
        rec.stop_reason = result.residual <= cfg.residual_tolerance ? "residual_tolerance" : "halted";
        break;
      }
      case Method::least_squares:
        reconstruction = least_squares(problem.A, problem.b);
        rec.stop_reason = "direct";
        break;
    }
    const Evaluation e = evaluate(problem, reconstruction);
    rec.s_hat_ratio = e.s_hat_ratio;
    rec.s_hat = e.s_hat;
    rec.s0 = e.s0;
    rec.support_exact = e.support_exact;
    rec.final_residual = e.final_residual;
    if (!std::isfinite(rec.s_hat_ratio) || !std::isfinite(rec.final_residual)) {
      throw NumericError("non-finite evaluation");
    }
  } catch (const std::exception& ex) {
    rec.failed = true;
    rec.failure_reason = ex.what();
    rec.s_hat_ratio = rec.s_hat = rec.final_residual = 0;
    rec.support_exact = false;
  }
  rec.runtime_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return rec;
}

std::vector<ExperimentRecord> run_grid(const std::vector<GeneratorSpec>& specs,
                                       const std::vector<MethodConfig>& methods,
                                       const GridOptions& options) {
  if (options.rounds < 1) throw ArgumentError("run_grid: rounds must be >= 1");
  for (const auto& s : specs) s.validate();
  for (const auto& m : methods) m.validate();

  const std::size_t n_methods = methods.size();
  const std::size_t n_tasks = specs.size() * static_cast<std::size_t>(options.rounds);
  std::vector<ExperimentRecord> records(n_tasks * n_methods);
  if (options.trace_dir) std::filesystem::create_directories(*options.trace_dir);

  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t task = next++; task < n_tasks; task = next++) {
      const std::size_t s = task / static_cast<std::size_t>(options.rounds);
      const int round = static_cast<int>(task % static_cast<std::size_t>(options.rounds));
      GeneratorSpec spec = specs[s];
      spec.seed = derive_seed(options.base_seed, specs[s], round);

      std::optional<Problem> problem;
      std::string generation_error;
      try {
        problem = generate_problem(spec);
      } catch (const std::exception& ex) {
        generation_error = ex.what();
      }
      for (std::size_t mi = 0; mi < n_methods; ++mi) {
        ExperimentRecord& out = records[task * n_methods + mi];
        if (!problem) {
          out.spec = spec;
          out.round = round;
          out.method = methods[mi].method;
          out.label = methods[mi].display_label();
          out.method_params = methods[mi].params();
          out.failed = true;
          out.failure_reason = generation_error;
          continue;
        }
        std::optional<std::filesystem::path> trace_path;
        if (options.trace_dir && methods[mi].method == Method::sss) {
          trace_path = *options.trace_dir /
                       ("trace_n" + std::to_string(spec.n) + "_k" + std::to_string(spec.k) + "_m" +
                        std::to_string(spec.m) + "_s" + std::to_string(s) + "_r" +
                        std::to_string(round) + "_" + methods[mi].display_label() + ".csv");
        }
        out = run_trial(*problem, spec, round, methods[mi], trace_path, options.keep_traces);
      }
    }
  };

  int jobs = options.jobs > 0 ? options.jobs : static_cast<int>(std::thread::hardware_concurrency());
  jobs = std::clamp(jobs, 1, static_cast<int>(std::max<std::size_t>(n_tasks, 1)));
  if (jobs == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (int i = 0; i < jobs; ++i) pool.emplace_back(worker);
  }
  return records;
}

Stats compute_stats(std::vector<double> values) {
  Stats s;
  if (values.empty()) return s;
  std::sort(values.begin(), values.end());
  const std::size_t last = values.size() - 1;
  auto at = [&](double p) { return values[static_cast<std::size_t>(std::floor(p * static_cast<double>(last)))]; };
  s.min = values.front();
  s.max = values.back();
  s.median = values[last / 2];
  s.q1 = at(0.25);
  s.q3 = at(0.75);
  return s;
}

SummaryTable summarize(const std::vector<ExperimentRecord>& records) {
  struct Group {
    GeneratorSpec setting;
    std::string label;
    int trials = 0;
    int failed = 0;
    std::vector<double> ratio, exact, residual, runtime, iterations;
  };
  std::vector<Group> groups;
  for (const auto& r : records) {
    auto it = std::find_if(groups.begin(), groups.end(), [&](const Group& g) {
      return g.label == r.label && g.setting.same_setting(r.spec);
    });
    if (it == groups.end()) {
      Group g;
      g.setting = r.spec;
      g.setting.seed = 0;
      g.label = r.label;
      groups.push_back(std::move(g));
      it = std::prev(groups.end());
    }
    ++it->trials;
    if (r.failed) {
      ++it->failed;
      continue;
    }
    it->ratio.push_back(r.s_hat_ratio);
    it->exact.push_back(r.support_exact ? 1.0 : 0.0);
    it->residual.push_back(r.final_residual);
    it->runtime.push_back(r.runtime_seconds);
    it->iterations.push_back(static_cast<double>(r.iterations));
  }

  SummaryTable table;
  for (auto& g : groups) {
    if (g.ratio.empty()) continue;
    SummaryRow row;
    row.setting = g.setting;
    row.label = g.label;
    row.trials = g.trials;
    row.failed = g.failed;
    row.s_hat_ratio = compute_stats(std::move(g.ratio));
    row.support_exact = compute_stats(std::move(g.exact));
    row.final_residual = compute_stats(std::move(g.residual));
    row.runtime_seconds = compute_stats(std::move(g.runtime));
    row.iterations = compute_stats(std::move(g.iterations));
    table.rows.push_back(std::move(row));
  }
  return table;
}

}  // namespace sss
