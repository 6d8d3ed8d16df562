#ifndef SSS_HARNESS_HPP
#define SSS_HARNESS_HPP

// Monte-Carlo experiment harness: seeded problem generation, per-trial
// evaluation, grid execution and median/quartile summaries.

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "sss/baselines.hpp"
#include "sss/solver.hpp"

namespace sss {

struct GeneratorSpec {
  Index n = 0;
  Index k = 0;
  Index m = 0;
  double noise_variance = 0.0;
  std::uint64_t seed = 0;
  double amplitude_low = 0.5;
  double amplitude_high = 1.0;

  void validate() const;
  bool same_setting(const GeneratorSpec& other) const;  // equal up to the seed
};

/// A with iid N(0, 1/m) entries, a k-sparse truth with uniform random support,
/// magnitudes uniform in [low, high] and random signs, and b = A x + e with
/// e ~ N(0, noise_variance / m) per entry. Pure function of the spec.
Problem generate_problem(const GeneratorSpec& spec);

struct Evaluation {
  double s_hat = 0;  // sparsity ratio of the reconstruction, 0 if it is all zero
  double s0 = 0;     // sparsity ratio of the clean truth
  double s_hat_ratio = 0;
  bool support_exact = false;
  double final_residual = 0;  // ||A x - b||_2
};

/// Scores a reconstruction against problem.truth. Entries below
/// 1e-8 * max|reconstruction| count as zero for support comparison.
Evaluation evaluate(const Problem& problem, const Eigen::VectorXd& reconstruction);

enum class Method { sss, cosamp, least_squares };

const char* to_string(Method m);
Method method_from_string(const std::string& s);

struct MethodConfig {
  Method method = Method::sss;
  std::string label;  // defaults to the method name (plus k for CoSaMP)
  SolverConfig solver;
  CosampConfig cosamp;
  // CoSaMP halting tolerance; unset means 1e-6 for clean data and sigma otherwise.
  std::optional<double> cosamp_tolerance;

  std::string display_label() const;
  nlohmann::ordered_json params() const;
  void validate() const;
};

struct ExperimentRecord {
  GeneratorSpec spec;  // seed is the derived per-trial seed
  int round = 0;
  Method method = Method::sss;
  std::string label;
  nlohmann::ordered_json method_params;
  double s_hat_ratio = 0;
  double s_hat = 0;
  double s0 = 0;
  bool support_exact = false;
  double final_residual = 0;
  double runtime_seconds = 0;
  int iterations = 0;
  std::string stop_reason;
  bool failed = false;
  std::string failure_reason;
  std::shared_ptr<const Trace> trace;  // SSS runs only, when requested
};

struct GridOptions {
  int rounds = 50;
  std::uint64_t base_seed = 0;
  int jobs = 1;  // <= 0 selects the hardware concurrency
  std::optional<std::filesystem::path> trace_dir;  // per-trial trace CSVs for SSS runs
  bool keep_traces = false;                        // attach SSS traces to the records
};

/// Per-trial seed derived from the base seed, the setting and the round.
std::uint64_t derive_seed(std::uint64_t base_seed, const GeneratorSpec& spec, int round);

/// Runs every method on every (spec, round) problem. All methods of one
/// (spec, round) share the same generated problem. Records come back ordered
/// by spec, then round, then method, independent of scheduling.
std::vector<ExperimentRecord> run_grid(const std::vector<GeneratorSpec>& specs,
                                       const std::vector<MethodConfig>& methods,
                                       const GridOptions& options);

/// Runs one method on one problem; numeric failures are recorded, not thrown.
ExperimentRecord run_trial(const Problem& problem, const GeneratorSpec& spec, int round,
                           const MethodConfig& method,
                           const std::optional<std::filesystem::path>& trace_path = {},
                           bool keep_trace = false);

struct Stats {
  double median = 0;  // lower median for even counts
  double q1 = 0;
  double q3 = 0;
  double min = 0;
  double max = 0;
};

/// Order statistics with the lower-index convention: element floor(p (count - 1)).
Stats compute_stats(std::vector<double> values);

struct SummaryRow {
  GeneratorSpec setting;  // seed zeroed
  std::string label;
  int trials = 0;
  int failed = 0;
  Stats s_hat_ratio;
  Stats support_exact;
  Stats final_residual;
  Stats runtime_seconds;
  Stats iterations;
};

struct SummaryTable {
  std::vector<SummaryRow> rows;  // groups in order of first appearance
};

/// Groups by (setting, method label). Failed trials count towards `trials`
/// but not towards the statistics; groups with no successful trial are omitted.
SummaryTable summarize(const std::vector<ExperimentRecord>& records);

}  // namespace sss

#endif  // SSS_HARNESS_HPP
