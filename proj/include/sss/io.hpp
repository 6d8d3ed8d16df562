#ifndef SSS_IO_HPP
#define SSS_IO_HPP

// File formats: CSV matrices (row-major, no header) and vectors (one value
// per line), NDJSON experiment records, CSV summaries and traces.

#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "sss/harness.hpp"
#include "sss/solver.hpp"

namespace sss {

class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& file, std::size_t row, std::size_t column, const std::string& what);

  std::size_t row() const { return row_; }
  std::size_t column() const { return column_; }

 private:
  std::size_t row_;
  std::size_t column_;
};

Eigen::MatrixXd read_matrix_csv(const std::filesystem::path& path);
Eigen::VectorXd read_vector_csv(const std::filesystem::path& path);

/// Shortest decimal text that round-trips to the same double.
std::string format_double(double v);

std::string vector_csv(const Eigen::VectorXd& v);
std::string matrix_csv(const Eigen::MatrixXd& m);
std::string trace_csv(const Trace& trace);

nlohmann::ordered_json to_json(const GeneratorSpec& spec);
nlohmann::ordered_json to_json(const ExperimentRecord& record);
std::string records_ndjson(const std::vector<ExperimentRecord>& records);
std::string summary_csv(const SummaryTable& table);

/// Writes to a sibling temporary file and renames it into place.
void atomic_write(const std::filesystem::path& path, const std::string& content);

inline void write_trace_csv(const std::filesystem::path& path, const Trace& trace) {
  atomic_write(path, trace_csv(trace));
}

}  // namespace sss

#endif  // SSS_IO_HPP
