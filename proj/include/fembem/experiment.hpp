#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "fembem/uzawa.hpp"

namespace fembem {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct RunConfig {
  ExampleId example = ExampleId::LaplaceLShape;
  UzawaConfig uzawa;
  std::string output;  // empty: stdout
  std::uint64_t seed = 1;
};

/// Parses "key = value" lines; '#' starts a comment. Errors carry line numbers.
RunConfig parse_config(const std::string& text);
RunConfig load_config(const std::string& path);

inline constexpr const char* kCsvVersion = "fembem-csv v1";
inline constexpr const char* kCsvColumns = "j,nE,errUZAWAH1,errUZAWABEM,estFEM,estBEM,estTOT,kBEM,kFEM,gamma,epsilon";

std::string format_csv_row(const StepRecord& r);

struct ExperimentResult {
  std::vector<StepRecord> rows;
  bool solver_failure = false;
  std::string failure_message;
  int gamma_clamps = 0;
};

/// Runs the configured experiment and writes the CSV to `out` row by row.
/// Solver failures end the run with a trailer comment instead of throwing.
ExperimentResult run_experiment(const RunConfig& config, std::ostream& out, std::ostream* log = nullptr);

/// Columns of a CSV written by run_experiment (comment lines skipped).
struct CsvTable {
  std::vector<std::string> names;
  std::vector<std::vector<double>> rows;
  std::vector<double> column(const std::string& name) const;
};
CsvTable read_csv(std::istream& in);

/// Least-squares slope of log(values) against log(nE) over rows with
/// nE >= max(nE) / 10. Needs at least `min_rows` rows there.
double fit_slope(const std::vector<double>& nE, const std::vector<double>& values, std::size_t min_rows = 5);
double fit_slope(const CsvTable& csv, const std::string& column, std::size_t min_rows = 5);

}  // namespace fembem
