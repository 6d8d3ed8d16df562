#include "sss/io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <system_error>

namespace sss {

ParseError::ParseError(const std::string& file, std::size_t row, std::size_t column,
                       const std::string& what)
    : std::runtime_error(file + ": row " + std::to_string(row) +
                         (column > 0 ? ", column " + std::to_string(column) : std::string()) + ": " + what),
      row_(row),
      column_(column) {}

namespace {

std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

double parse_cell(const std::string& text, const std::string& file, std::size_t row,
                  std::size_t column) {
  const std::string cell = trim(text);
  if (cell.empty()) throw ParseError(file, row, column, "empty cell");
  double value = 0;
  const char* begin = cell.data();
  const char* end = begin + cell.size();
  if (*begin == '+') ++begin;
  const auto [ptr, ec] = std::from_chars(begin, end, value);
  if (ec != std::errc() || ptr != end) {
    throw ParseError(file, row, column, "not a number: '" + cell + "'");
  }
  if (!std::isfinite(value)) throw ParseError(file, row, column, "non-finite value");
  return value;
}

std::vector<std::vector<double>> read_rows(const std::filesystem::path& path) {
  std::ifstream in(path);
  const std::string file = path.string();
  if (!in) throw ParseError(file, 0, 0, "cannot open file");
  std::vector<std::vector<double>> rows;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    std::vector<double> row;
    std::stringstream ss(line);
    std::string cell;
    std::size_t col = 0;
    while (std::getline(ss, cell, ',')) row.push_back(parse_cell(cell, file, line_no, ++col));
    if (!line.empty() && line.back() == ',') throw ParseError(file, line_no, col + 1, "empty cell");
    if (!rows.empty() && row.size() != rows.front().size()) {
      throw ParseError(file, line_no, 0,
                       "ragged row: " + std::to_string(row.size()) + " columns, expected " +
                           std::to_string(rows.front().size()));
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw ParseError(file, 0, 0, "no data");
  return rows;
}

}  // namespace

Eigen::MatrixXd read_matrix_csv(const std::filesystem::path& path) {
  const auto rows = read_rows(path);
  Eigen::MatrixXd m(static_cast<Index>(rows.size()), static_cast<Index>(rows.front().size()));
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = 0; j < rows[i].size(); ++j)
      m(static_cast<Index>(i), static_cast<Index>(j)) = rows[i][j];
  return m;
}

Eigen::VectorXd read_vector_csv(const std::filesystem::path& path) {
  const auto rows = read_rows(path);
  if (rows.front().size() != 1) {
    throw ParseError(path.string(), 1, 2, "vector files hold one value per line");
  }
  Eigen::VectorXd v(static_cast<Index>(rows.size()));
  for (std::size_t i = 0; i < rows.size(); ++i) v(static_cast<Index>(i)) = rows[i][0];
  return v;
}

std::string format_double(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return ec == std::errc() ? std::string(buf, ptr) : std::string("nan");
}

std::string vector_csv(const Eigen::VectorXd& v) {
  std::string out;
  for (Index i = 0; i < v.size(); ++i) out += format_double(v(i)) + "\n";
  return out;
}

std::string matrix_csv(const Eigen::MatrixXd& m) {
  std::string out;
  for (Index i = 0; i < m.rows(); ++i) {
    for (Index j = 0; j < m.cols(); ++j) {
      if (j) out += ',';
      out += format_double(m(i, j));
    }
    out += '\n';
  }
  return out;
}

std::string trace_csv(const Trace& trace) {
  std::string out = "iteration,eta,rho,residual,cost\n";
  for (const auto& r : trace) {
    out += std::to_string(r.iteration) + ',' + format_double(r.eta) + ',' + std::to_string(r.rho) +
           ',' + format_double(r.residual) + ',' + (r.cost ? format_double(*r.cost) : "") + '\n';
  }
  return out;
}

nlohmann::ordered_json to_json(const GeneratorSpec& spec) {
  nlohmann::ordered_json j;
  j["n"] = spec.n;
  j["k"] = spec.k;
  j["m"] = spec.m;
  j["noise_variance"] = spec.noise_variance;
  j["seed"] = spec.seed;
  j["amplitude_range"] = {spec.amplitude_low, spec.amplitude_high};
  return j;
}

nlohmann::ordered_json to_json(const ExperimentRecord& r) {
  nlohmann::ordered_json j;
  j["spec"] = to_json(r.spec);
  j["round"] = r.round;
  j["method"] = to_string(r.method);
  j["label"] = r.label;
  j["method_params"] = r.method_params;
  j["s_hat_ratio"] = r.s_hat_ratio;
  j["s_hat"] = r.s_hat;
  j["s0"] = r.s0;
  j["support_exact"] = r.support_exact;
  j["final_residual"] = r.final_residual;
  j["iterations"] = r.iterations;
  j["stop_reason"] = r.stop_reason;
  j["failed"] = r.failed;
  j["failure_reason"] = r.failure_reason;
  j["runtime_seconds"] = r.runtime_seconds;
  return j;
}

std::string records_ndjson(const std::vector<ExperimentRecord>& records) {
  std::string out;
  for (const auto& r : records) out += to_json(r).dump() + "\n";
  return out;
}

std::string summary_csv(const SummaryTable& table) {
  std::string out = "n,k,m,noise_variance,method,trials,failed";
  for (const char* field : {"s_hat_ratio", "support_exact", "final_residual", "runtime_seconds", "iterations"}) {
    for (const char* stat : {"median", "q1", "q3", "min", "max"}) {
      out += std::string(",") + field + "_" + stat;
    }
  }
  out += '\n';
  for (const auto& row : table.rows) {
    out += std::to_string(row.setting.n) + ',' + std::to_string(row.setting.k) + ',' +
           std::to_string(row.setting.m) + ',' + format_double(row.setting.noise_variance) + ',' +
           row.label + ',' + std::to_string(row.trials) + ',' + std::to_string(row.failed);
    for (const Stats* s : {&row.s_hat_ratio, &row.support_exact, &row.final_residual,
                           &row.runtime_seconds, &row.iterations}) {
      for (double v : {s->median, s->q1, s->q3, s->min, s->max}) out += ',' + format_double(v);
    }
    out += '\n';
  }
  return out;
}

void atomic_write(const std::filesystem::path& path, const std::string& content) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + tmp.string());
    out << content;
    out.flush();
    if (!out) throw std::runtime_error("write failed for " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

}  // namespace sss
