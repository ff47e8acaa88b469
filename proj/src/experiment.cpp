#include "fembem/experiment.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <set>
#include <sstream>

namespace fembem {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

[[noreturn]] void fail(int line, const std::string& msg) {
  throw ConfigError("line " + std::to_string(line) + ": " + msg);
}

double to_double(int line, const std::string& key, const std::string& v) {
  double x = 0.0;
  const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), x);
  if (ec != std::errc() || p != v.data() + v.size() || !std::isfinite(x))
    fail(line, "invalid number for " + key + ": '" + v + "'");
  return x;
}

long long to_integer(int line, const std::string& key, const std::string& v) {
  long long x = 0;
  const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), x);
  if (ec != std::errc() || p != v.data() + v.size()) fail(line, "invalid integer for " + key + ": '" + v + "'");
  return x;
}

void range(int line, const std::string& key, bool ok, const std::string& what) {
  if (!ok) fail(line, key + " out of range: must be " + what);
}

std::string sci(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.8e", v);
  return buf;
}

}  // namespace

RunConfig parse_config(const std::string& text) {
  RunConfig cfg;
  UzawaConfig& u = cfg.uzawa;
  std::set<std::string> seen;
  bool have_tau = false;
  bool have_lambda = false;
  std::istringstream in(text);
  std::string raw;
  int line = 0;
  while (std::getline(in, raw)) {
    ++line;
    const auto hash = raw.find('#');
    const std::string content = trim(hash == std::string::npos ? raw : raw.substr(0, hash));
    if (content.empty()) continue;
    const auto eq = content.find('=');
    if (eq == std::string::npos) fail(line, "expected 'key = value'");
    const std::string key = trim(content.substr(0, eq));
    const std::string val = trim(content.substr(eq + 1));
    if (key.empty()) fail(line, "missing key before '='");
    if (val.empty()) fail(line, "missing value for " + key);
    if (!seen.insert(key).second) fail(line, "duplicate key: " + key);

    if (key == "example") {
      const auto id = example_from_string(val);
      if (!id) fail(line, "unknown example '" + val + "' (laplace_lshape, scaled_laplace, nonlinear_zshape)");
      cfg.example = *id;
    } else if (key == "algorithm") {
      if (val == "fixed_gamma") u.algorithm = Algorithm::FixedGamma;
      else if (val == "adaptive_gamma") u.algorithm = Algorithm::AdaptiveGamma;
      else fail(line, "unknown algorithm '" + val + "' (fixed_gamma, adaptive_gamma)");
    } else if (key == "solver") {
      if (val == "exact") u.solver = SolverMode::Exact;
      else if (val == "pcg") u.solver = SolverMode::PCG;
      else fail(line, "unknown solver '" + val + "' (exact, pcg)");
    } else if (key == "fem_preconditioner" || key == "bem_preconditioner") {
      PreconditionerKind k;
      if (val == "identity") k = PreconditionerKind::Identity;
      else if (val == "jacobi") k = PreconditionerKind::Jacobi;
      else if (val == "multilevel" && key == "fem_preconditioner") k = PreconditionerKind::LocalMultilevelDiagonal;
      else fail(line, "unknown preconditioner '" + val + "'");
      (key == "fem_preconditioner" ? u.fem_preconditioner : u.bem_preconditioner) = k;
    } else if (key == "alpha") {
      u.alpha = to_double(line, key, val);
      range(line, key, u.alpha > 0.0, "> 0");
    } else if (key == "gamma") {
      u.gamma = to_double(line, key, val);
      range(line, key, u.gamma > 0.0 && u.gamma < 1.0, "in (0, 1)");
    } else if (key == "theta") {
      u.theta = to_double(line, key, val);
      range(line, key, u.theta > 0.0 && u.theta <= 1.0, "in (0, 1]");
    } else if (key == "tau_rel") {
      u.pcg.value = to_double(line, key, val);
      range(line, key, u.pcg.value > 0.0, "> 0");
      u.pcg.mode = StoppingMode::RelativeResidual;
      have_tau = true;
    } else if (key == "lambda") {
      u.pcg.value = to_double(line, key, val);
      range(line, key, u.pcg.value >= 0.0 && u.pcg.value < 1.0, "in [0, 1)");
      u.pcg.mode = StoppingMode::LambdaCriterion;
      have_lambda = true;
    } else if (key == "pcg_max_iterations") {
      const auto n = to_integer(line, key, val);
      range(line, key, n >= 1, ">= 1");
      u.pcg.max_iterations = static_cast<int>(n);
    } else if (key == "epsilon1") {
      u.epsilon1 = to_double(line, key, val);
      range(line, key, u.epsilon1 > 0.0, "> 0");
    } else if (key == "C_i" || key == "C_ii") {
      const double c = to_double(line, key, val);
      range(line, key, c > 0.0, "> 0");
      (key == "C_i" ? u.C_i : u.C_ii) = c;
    } else if (key == "budget_elements") {
      const auto n = to_integer(line, key, val);
      range(line, key, n >= 1, ">= 1");
      u.max_elements = static_cast<std::size_t>(n);
    } else if (key == "max_steps") {
      const auto n = to_integer(line, key, val);
      range(line, key, n >= 1, ">= 1");
      u.max_steps = static_cast<int>(n);
    } else if (key == "inner_max_loops") {
      const auto n = to_integer(line, key, val);
      range(line, key, n >= 1, ">= 1");
      u.inner_max_loops = static_cast<int>(n);
    } else if (key == "bem_points") {
      const auto n = to_integer(line, key, val);
      range(line, key, n >= 1 && n <= 32, "in [1, 32]");
      u.bem_points = static_cast<int>(n);
    } else if (key == "nu_target") {
      u.nu_target = to_double(line, key, val);
      range(line, key, u.nu_target >= 0.0, ">= 0");
    } else if (key == "seed") {
      const auto n = to_integer(line, key, val);
      range(line, key, n >= 0, ">= 0");
      cfg.seed = static_cast<std::uint64_t>(n);
    } else if (key == "output") {
      cfg.output = val;
    } else {
      fail(line, "unknown key: " + key);
    }
    if (have_tau && have_lambda) fail(line, "tau_rel and lambda are mutually exclusive");
  }
  if (!seen.count("example")) throw ConfigError("missing key: example");
  return cfg;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

std::string format_csv_row(const StepRecord& r) {
  std::string s = std::to_string(r.j) + "," + std::to_string(r.nE);
  for (double v : {r.errH1, r.errGamma, r.estFEM, r.estBEM, r.estTOT}) s += "," + sci(v);
  s += "," + std::to_string(r.kBEM) + "," + std::to_string(r.kFEM);
  s += "," + sci(r.gamma) + "," + sci(r.epsilon);
  return s;
}

ExperimentResult run_experiment(const RunConfig& config, std::ostream& out, std::ostream* log) {
  const ProblemSpec spec = make_problem(config.example);
  const UzawaConfig& u = config.uzawa;
  out << "# " << kCsvVersion << " example=" << to_string(config.example)
      << " algorithm=" << (u.algorithm == Algorithm::FixedGamma ? "fixed_gamma" : "adaptive_gamma")
      << " solver=" << (u.solver == SolverMode::Exact ? "exact" : "pcg") << " alpha=" << sci(u.alpha)
      << " gamma=" << sci(u.gamma) << " theta=" << sci(u.theta) << '\n';
  out << kCsvColumns << '\n';
  ExperimentResult res;
  try {
    run_uzawa(spec, u, [&](const UzawaState&, const StepRecord& r) {
      res.rows.push_back(r);
      if (r.gamma_clamped) ++res.gamma_clamps;
      out << format_csv_row(r) << '\n';
      out.flush();
      if (log)
        *log << "j=" << r.j << " nE=" << r.nE << " err=" << sci(r.errH1 + r.errGamma) << " nu=" << sci(r.estTOT)
             << " kBEM=" << r.kBEM << " kFEM=" << r.kFEM << '\n';
    });
  } catch (const SolverError& e) {
    res.solver_failure = true;
    res.failure_message = e.what();
    out << "# solver failure: " << e.what() << '\n';
  }
  if (res.gamma_clamps > 0) out << "# gamma clamped to 0.99 in " << res.gamma_clamps << " steps\n";
  return res;
}

std::vector<double> CsvTable::column(const std::string& name) const {
  const auto it = std::find(names.begin(), names.end(), name);
  if (it == names.end()) throw std::invalid_argument("no column named " + name);
  const auto k = static_cast<std::size_t>(it - names.begin());
  std::vector<double> c;
  c.reserve(rows.size());
  for (const auto& r : rows) c.push_back(r.at(k));
  return c;
}

CsvTable read_csv(std::istream& in) {
  CsvTable t;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(trim(cell));
    if (t.names.empty()) {
      t.names = cells;
      continue;
    }
    std::vector<double> row;
    for (const auto& c : cells) row.push_back(std::stod(c));
    t.rows.push_back(std::move(row));
  }
  return t;
}

double fit_slope(const std::vector<double>& nE, const std::vector<double>& values, std::size_t min_rows) {
  if (nE.size() != values.size()) throw std::invalid_argument("fit_slope: column length mismatch");
  if (nE.empty()) throw std::invalid_argument("fit_slope: insufficient data");
  const double top = *std::max_element(nE.begin(), nE.end());
  std::vector<double> x, y;
  for (std::size_t i = 0; i < nE.size(); ++i)
    if (nE[i] >= top / 10.0 && values[i] > 0.0) {
      x.push_back(std::log(nE[i]));
      y.push_back(std::log(values[i]));
    }
  if (x.size() < min_rows) throw std::invalid_argument("fit_slope: insufficient data in the final decade");
  const double n = static_cast<double>(x.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  if (sxx <= 0.0) throw std::invalid_argument("fit_slope: nE does not vary");
  return sxy / sxx;
}

double fit_slope(const CsvTable& csv, const std::string& column, std::size_t min_rows) {
  return fit_slope(csv.column("nE"), csv.column(column), min_rows);
}

}  // namespace fembem
