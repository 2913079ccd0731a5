#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <limits>
#include <map>
#include <memory>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "chns/diagnostics.hpp"
#include "chns/manufactured.hpp"
#include "chns/mesh.hpp"
#include "chns/params.hpp"
#include "chns/time_loop.hpp"

namespace chns {

/// Everything a run needs. Penalties left unset fall back to
/// run_penalties(k).
struct RunConfig {
  std::string problem = "manufactured-2d";
  int dim = 2;
  int cells_per_axis = 8;
  int k = 1;
  double tau = 1e-3;
  double T = 1e-2;
  double kappa = 1.0;
  double mu_s = 1.0;
  double sigma_chi = 1.0 / 12.0;
  std::optional<double> sigma_tilde_ch, sigma_tilde_ellip, sigma_int, sigma_bdy;
  std::uint64_t seed = 0;
  std::string output = "output";
  int snapshot_every = 0;
  double stationary_value = 0.0;

  PenaltyConfig penalties() const {
    PenaltyConfig p = k >= 1 && k <= 3 ? run_penalties(k) : PenaltyConfig{};
    if (sigma_tilde_ch) p.sigma_tilde_ch = *sigma_tilde_ch;
    if (sigma_tilde_ellip) p.sigma_tilde_ellip = *sigma_tilde_ellip;
    if (sigma_int) p.sigma_int = *sigma_int;
    if (sigma_bdy) p.sigma_bdy = *sigma_bdy;
    return p;
  }

  SchemeParams params() const {
    SchemeParams p;
    p.dim = dim;
    p.degree = k;
    p.kappa = kappa;
    p.mu_s = mu_s;
    p.tau = tau;
    p.T = T;
    p.sigma_chi = sigma_chi;
    p.penalties = penalties();
    return p;
  }

  bool manufactured() const { return problem == "manufactured-2d" || problem == "manufactured-3d"; }

  void validate() const {
    if (problem != "manufactured-2d" && problem != "manufactured-3d" && problem != "spinodal" && problem != "stationary")
      throw std::invalid_argument("unknown problem '" + problem + "'");
    if (problem == "manufactured-2d" && dim != 2) throw std::invalid_argument("manufactured-2d needs dim = 2");
    if (problem == "manufactured-3d" && dim != 3) throw std::invalid_argument("manufactured-3d needs dim = 3");
    if (cells_per_axis < 1) throw std::invalid_argument("cells_per_axis must be >= 1");
    if (snapshot_every < 0) throw std::invalid_argument("snapshot_every must be >= 0");
    params().validate();
  }
};

/// Parse failure at a 1-based line and column.
class ConfigError : public std::runtime_error {
 public:
  ConfigError(int line, int column, const std::string& what)
      : std::runtime_error("config:" + std::to_string(line) + ":" + std::to_string(column) + ": " + what),
        line_(line),
        column_(column) {}
  int line() const { return line_; }
  int column() const { return column_; }

 private:
  int line_, column_;
};

namespace detail {

inline std::size_t skip_blank(const std::string& s, std::size_t i) {
  while (i < s.size() && (s[i] == ' ' || s[i] == '\t' || s[i] == '\r')) ++i;
  return i;
}

inline std::size_t trim_end(const std::string& s, std::size_t begin, std::size_t end) {
  while (end > begin && (s[end - 1] == ' ' || s[end - 1] == '\t' || s[end - 1] == '\r')) --end;
  return end;
}

template <class T>
T parse_number(const std::string& text, int line, int column) {
  std::istringstream in(text);
  in.imbue(std::locale::classic());
  T v{};
  in >> v;
  if (in.fail() || !in.eof()) throw ConfigError(line, column, "invalid number '" + text + "'");
  return v;
}

inline std::string format_double(double v) {
  std::ostringstream out;
  out.imbue(std::locale::classic());
  out << std::setprecision(17) << v;
  return out.str();
}

}  // namespace detail

/// Grammar: one `key = value` per line; `#` starts a comment; blank lines
/// are ignored; a key may appear once.
inline RunConfig parse_config(const std::string& text) {
  RunConfig cfg;
  std::map<std::string, std::pair<int, int>> seen;  // key -> (line, value column)
  std::istringstream in(text);
  std::string raw;
  bool dim_given = false;
  int line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    const std::string line = raw.substr(0, raw.find('#'));
    const std::size_t k0 = detail::skip_blank(line, 0);
    if (k0 == line.size()) continue;
    const std::size_t eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError(line_no, static_cast<int>(line.size()) + 1, "expected '='");
    const std::size_t k1 = detail::trim_end(line, k0, eq);
    if (k1 == k0) throw ConfigError(line_no, static_cast<int>(eq) + 1, "missing key");
    const std::string key = line.substr(k0, k1 - k0);
    const std::size_t v0 = detail::skip_blank(line, eq + 1);
    const std::size_t v1 = detail::trim_end(line, v0, line.size());
    const int kcol = static_cast<int>(k0) + 1;
    const int vcol = static_cast<int>(v0) + 1;
    if (v1 == v0) throw ConfigError(line_no, vcol, "missing value for '" + key + "'");
    const std::string value = line.substr(v0, v1 - v0);
    if (seen.count(key))
      throw ConfigError(line_no, kcol, "duplicate key '" + key + "' (first on line " +
                                           std::to_string(seen[key].first) + ")");
    seen[key] = {line_no, vcol};

    const auto real = [&] { return detail::parse_number<double>(value, line_no, vcol); };
    const auto integer = [&] { return detail::parse_number<long long>(value, line_no, vcol); };
    if (key == "problem") {
      cfg.problem = value;
      if (!cfg.manufactured() && value != "spinodal" && value != "stationary")
        throw ConfigError(line_no, vcol, "unknown problem '" + value + "'");
    } else if (key == "dim") {
      cfg.dim = static_cast<int>(integer());
      dim_given = true;
    } else if (key == "cells_per_axis") {
      cfg.cells_per_axis = static_cast<int>(integer());
    } else if (key == "k") {
      cfg.k = static_cast<int>(integer());
    } else if (key == "tau") {
      cfg.tau = real();
    } else if (key == "T") {
      cfg.T = real();
    } else if (key == "kappa") {
      cfg.kappa = real();
    } else if (key == "mu_s") {
      cfg.mu_s = real();
    } else if (key == "sigma_chi") {
      cfg.sigma_chi = real();
    } else if (key == "sigma_tilde_ch") {
      cfg.sigma_tilde_ch = real();
    } else if (key == "sigma_tilde_ellip") {
      cfg.sigma_tilde_ellip = real();
    } else if (key == "sigma_int") {
      cfg.sigma_int = real();
    } else if (key == "sigma_bdy") {
      cfg.sigma_bdy = real();
    } else if (key == "seed") {
      if (value.find('-') != std::string::npos) throw ConfigError(line_no, vcol, "seed must be non-negative");
      cfg.seed = detail::parse_number<std::uint64_t>(value, line_no, vcol);
    } else if (key == "output") {
      cfg.output = value;
    } else if (key == "snapshot_every") {
      cfg.snapshot_every = static_cast<int>(integer());
    } else if (key == "stationary_value") {
      cfg.stationary_value = real();
    } else {
      throw ConfigError(line_no, kcol, "unknown key '" + key + "'");
    }
  }
  if (!dim_given && cfg.problem == "manufactured-3d") cfg.dim = 3;

  // Range checks, reported at the offending value (or line 0 for defaults).
  const auto check = [&](bool ok, const std::string& key, const std::string& what) {
    if (ok) return;
    const auto it = seen.find(key);
    if (it == seen.end()) throw ConfigError(0, 0, what + " (default value)");
    throw ConfigError(it->second.first, it->second.second, what);
  };
  check(cfg.dim == 2 || cfg.dim == 3, "dim", "dim must be 2 or 3");
  check(cfg.problem != "manufactured-2d" || cfg.dim == 2, "dim", "manufactured-2d needs dim = 2");
  check(cfg.problem != "manufactured-3d" || cfg.dim == 3, "dim", "manufactured-3d needs dim = 3");
  check(cfg.cells_per_axis >= 1, "cells_per_axis", "cells_per_axis must be >= 1");
  check(cfg.k >= 1, "k", "k must be >= 1");
  check(cfg.tau > 0.0, "tau", "tau must be > 0");
  check(cfg.T >= 0.0, "T", "T must be >= 0");
  check(cfg.kappa > 0.0, "kappa", "kappa must be > 0");
  check(cfg.mu_s > 0.0, "mu_s", "mu_s must be > 0");
  check(cfg.sigma_chi > 0.0 && cfg.sigma_chi <= 1.0 / (4.0 * cfg.dim) + 1e-15, "sigma_chi",
        "sigma_chi must lie in (0, 1/(4 dim)]");
  check(cfg.k <= 3 || (cfg.sigma_tilde_ch && cfg.sigma_tilde_ellip && cfg.sigma_int && cfg.sigma_bdy), "k",
        "k > 3 needs all four penalties set");
  const PenaltyConfig pen = cfg.k <= 3 ? cfg.penalties() : PenaltyConfig{};
  check(pen.sigma_tilde_ch >= 1.0, "sigma_tilde_ch", "penalties must be >= 1");
  check(pen.sigma_tilde_ellip >= 1.0, "sigma_tilde_ellip", "penalties must be >= 1");
  check(pen.sigma_int >= 1.0, "sigma_int", "penalties must be >= 1");
  check(pen.sigma_bdy >= 1.0, "sigma_bdy", "penalties must be >= 1");
  check(cfg.snapshot_every >= 0, "snapshot_every", "snapshot_every must be >= 0");
  cfg.validate();
  return cfg;
}

inline RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read config '" + path + "'");
  std::ostringstream text;
  text << in.rdbuf();
  return parse_config(text.str());
}

/// Fully resolved configuration in the input grammar.
inline std::string config_echo(const RunConfig& c) {
  const PenaltyConfig p = c.penalties();
  std::ostringstream out;
  out << "problem = " << c.problem << "\n"
      << "dim = " << c.dim << "\n"
      << "cells_per_axis = " << c.cells_per_axis << "\n"
      << "k = " << c.k << "\n"
      << "tau = " << detail::format_double(c.tau) << "\n"
      << "T = " << detail::format_double(c.T) << "\n"
      << "kappa = " << detail::format_double(c.kappa) << "\n"
      << "mu_s = " << detail::format_double(c.mu_s) << "\n"
      << "sigma_chi = " << detail::format_double(c.sigma_chi) << "\n"
      << "sigma_tilde_ch = " << detail::format_double(p.sigma_tilde_ch) << "\n"
      << "sigma_tilde_ellip = " << detail::format_double(p.sigma_tilde_ellip) << "\n"
      << "sigma_int = " << detail::format_double(p.sigma_int) << "\n"
      << "sigma_bdy = " << detail::format_double(p.sigma_bdy) << "\n"
      << "seed = " << c.seed << "\n"
      << "output = " << c.output << "\n"
      << "snapshot_every = " << c.snapshot_every << "\n"
      << "stationary_value = " << detail::format_double(c.stationary_value) << "\n";
  return out.str();
}

inline std::shared_ptr<const ExactSolution> exact_solution(const RunConfig& c) {
  if (!c.manufactured()) return nullptr;
  return make_manufactured(c.dim, c.kappa, c.mu_s);
}

inline Problem make_problem(const RunConfig& c) {
  if (c.problem == "spinodal") return spinodal_problem(c.seed);
  if (c.problem == "stationary") return stationary_problem(c.stationary_value);
  return manufactured_problem(exact_solution(c));
}

inline std::shared_ptr<const Mesh> make_mesh(const RunConfig& c) {
  return std::make_shared<const Mesh>(build_structured_mesh(Box::unit(c.dim), c.cells_per_axis));
}

struct FieldErrors {
  double c = 0.0, u = 0.0, p = 0.0;
};

/// L2 errors of c, u and p against the exact solution at the state's time.
inline FieldErrors l2_errors(const Discretization& d, const SimState& s, const ExactSolution& ex) {
  const double t = s.time;
  FieldErrors e;
  e.c = error_norms(d.scalar, s.c, [&](const Point& x) { return ex.c(t, x); }).l2;
  e.u = error_norms(d.vector, s.u, [&](const Point& x) { return ex.u(t, x); }).l2;
  e.p = error_norms(d.pressure, s.p, [&](const Point& x) { return ex.p(t, x); }).l2;
  return e;
}

/// Observed order ln(err_h / err_{h/2}) / ln 2.
inline double convergence_rate(double err_coarse, double err_fine) { return std::log(err_coarse / err_fine) / std::log(2.0); }

inline constexpr const char* timeseries_header = "step,time,mass,energy,modified_energy,dissipation_ok,newton_iters";

inline std::string timeseries_row(const DiagnosticsRecord& r) {
  std::ostringstream out;
  out << r.step << ',' << detail::format_double(r.time) << ',' << detail::format_double(r.mass) << ','
      << detail::format_double(r.energy) << ',' << detail::format_double(r.modified_energy) << ','
      << (r.dissipation_ok ? 1 : 0) << ',' << r.newton_iterations;
  return out.str();
}

/// Per-element means of one component.
inline std::vector<double> cell_means(const DgSpace& s, const Vector& field, int comp = 0) {
  const auto& ref = s.reference();
  const Vector local = ref.volume.phi.transpose() * ref.volume.weights;
  const double ref_volume = ref.volume.weights.sum();
  std::vector<double> out(s.mesh().n_elements());
  for (std::size_t e = 0; e < out.size(); ++e) out[e] = local.dot(local_coeffs(s, field, e, comp)) / ref_volume;
  return out;
}

/// Legacy ASCII VTK 3.0 unstructured grid with cell means of c, mu, p and u.
inline void write_vtk(const std::string& path, const Discretization& d, const SimState& s) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write '" + path + "'");
  out.imbue(std::locale::classic());
  out << std::setprecision(17);
  const Mesh& m = *d.mesh;
  const int dim = m.dim();
  const auto& cells = m.cells();
  const int nx = cells[0] + 1, ny = cells[1] + 1, nz = dim == 3 ? cells[2] + 1 : 1;
  const Box& box = m.domain();
  out << "# vtk DataFile Version 3.0\n"
      << "chns step " << s.step << " time " << s.time << "\n"
      << "ASCII\nDATASET UNSTRUCTURED_GRID\n";
  out << "POINTS " << nx * ny * nz << " double\n";
  for (int k = 0; k < nz; ++k)
    for (int j = 0; j < ny; ++j)
      for (int i = 0; i < nx; ++i) {
        const double x = box.lower[0] + box.extent[0] * i / cells[0];
        const double y = box.lower[1] + box.extent[1] * j / cells[1];
        const double z = dim == 3 ? box.lower[2] + box.extent[2] * k / cells[2] : 0.0;
        out << x << ' ' << y << ' ' << z << '\n';
      }
  const auto pid = [&](int i, int j, int k) { return i + nx * (j + ny * k); };
  const std::size_t ne = m.n_elements();
  const int nv = dim == 3 ? 8 : 4;
  out << "CELLS " << ne << ' ' << ne * (nv + 1) << '\n';
  for (int k = 0; k < (dim == 3 ? cells[2] : 1); ++k)
    for (int j = 0; j < cells[1]; ++j)
      for (int i = 0; i < cells[0]; ++i) {
        out << nv << ' ' << pid(i, j, k) << ' ' << pid(i + 1, j, k) << ' ' << pid(i + 1, j + 1, k) << ' '
            << pid(i, j + 1, k);
        if (dim == 3)
          out << ' ' << pid(i, j, k + 1) << ' ' << pid(i + 1, j, k + 1) << ' ' << pid(i + 1, j + 1, k + 1) << ' '
              << pid(i, j + 1, k + 1);
        out << '\n';
      }
  out << "CELL_TYPES " << ne << '\n';
  for (std::size_t e = 0; e < ne; ++e) out << (dim == 3 ? 12 : 9) << '\n';
  out << "CELL_DATA " << ne << '\n';
  const auto scalar = [&](const char* name, const DgSpace& sp, const Vector& f) {
    out << "SCALARS " << name << " double 1\nLOOKUP_TABLE default\n";
    for (double v : cell_means(sp, f)) out << v << '\n';
  };
  scalar("c", d.scalar, s.c);
  scalar("mu", d.scalar, s.mu);
  scalar("p", d.pressure, s.p);
  std::array<std::vector<double>, 3> u;
  for (int a = 0; a < 3; ++a) u[a] = a < dim ? cell_means(d.vector, s.u, a) : std::vector<double>(ne, 0.0);
  out << "VECTORS u double\n";
  for (std::size_t e = 0; e < ne; ++e) out << u[0][e] << ' ' << u[1][e] << ' ' << u[2][e] << '\n';
  if (!out) throw std::runtime_error("write failed for '" + path + "'");
}

struct RunOutcome {
  RunResult result;
  std::optional<FieldErrors> errors;  // manufactured problems only
};

/// Runs one configuration and writes config.echo, timeseries.csv and the
/// requested snapshots into `dir`. Stage failures are returned in
/// result.error after the partial time series has been written.
inline RunOutcome run_config(const RunConfig& cfg, const std::string& dir, std::ostream* log = nullptr) {
  cfg.validate();
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  {
    std::ofstream echo(fs::path(dir) / "config.echo");
    echo << config_echo(cfg);
  }
  const auto ex = exact_solution(cfg);
  Simulation sim(make_mesh(cfg), cfg.params(), make_problem(cfg));
  const auto snapshot = [&](int n, const SimState& s) {
    if (cfg.snapshot_every > 0 && n % cfg.snapshot_every == 0) {
      std::ostringstream name;
      name << "snapshot_" << std::setw(6) << std::setfill('0') << n << ".vtk";
      write_vtk((fs::path(dir) / name.str()).string(), sim.discretization(), s);
    }
  };
  const int n_steps = cfg.params().n_steps();
  RunOutcome out;
  out.result = run(sim, [&](int n, const SimState& s, const DiagnosticsRecord& r) {
    snapshot(n, s);
    if (log && (n == n_steps || (n_steps >= 10 && n % (n_steps / 10) == 0)))
      *log << "step " << n << "/" << n_steps << " mass " << detail::format_double(r.mass) << " energy "
           << detail::format_double(r.modified_energy) << "\n";
  });
  if (ex && out.result.ok()) out.errors = l2_errors(sim.discretization(), out.result.final_state, *ex);

  std::ofstream ts(fs::path(dir) / "timeseries.csv");
  ts << timeseries_header << (ex ? ",l2_error_c,l2_error_u,l2_error_p" : "") << '\n';
  for (std::size_t i = 0; i < out.result.series.size(); ++i) {
    ts << timeseries_row(out.result.series[i]);
    if (ex) {
      if (i + 1 == out.result.series.size() && out.errors)
        ts << ',' << detail::format_double(out.errors->c) << ',' << detail::format_double(out.errors->u) << ','
           << detail::format_double(out.errors->p);
      else
        ts << ",,,";
    }
    ts << '\n';
  }
  if (!ts) throw std::runtime_error("write failed for timeseries.csv");
  return out;
}

struct ConvergenceRow {
  double h = 0.0;
  FieldErrors err;
};

inline std::string convergence_csv(const std::vector<ConvergenceRow>& rows) {
  std::ostringstream out;
  out << "h,err_c,rate_c,err_u,rate_u,err_p,rate_p\n";
  const auto f = detail::format_double;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto& r = rows[i];
    out << f(r.h);
    const double e[3] = {r.err.c, r.err.u, r.err.p};
    for (int j = 0; j < 3; ++j) {
      out << ',' << f(e[j]) << ',';
      if (i > 0) {
        const auto& q = rows[i - 1].err;
        const double prev[3] = {q.c, q.u, q.p};
        out << f(convergence_rate(prev[j], e[j]));
      }
    }
    out << '\n';
  }
  return out.str();
}

/// One manufactured run per level; h is the element edge length. A failing
/// level stops the study, and the table so far is still written.
struct ConvergenceOutcome {
  std::vector<ConvergenceRow> rows;
  std::string error;
  bool ok() const { return error.empty(); }
};

inline ConvergenceOutcome run_convergence(const RunConfig& base, const std::vector<int>& levels, const std::string& dir,
                                          std::ostream* log = nullptr) {
  if (levels.size() < 2) throw std::invalid_argument("convergence needs at least two levels");
  if (!base.manufactured()) throw std::invalid_argument("convergence needs a manufactured problem");
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  ConvergenceOutcome out;
  for (int n : levels) {
    RunConfig cfg = base;
    cfg.cells_per_axis = n;
    const std::string sub = (fs::path(dir) / ("level_" + std::to_string(n))).string();
    try {
      RunOutcome r = run_config(cfg, sub, log);
      if (!r.result.ok()) throw std::runtime_error(r.result.error);
      out.rows.push_back({1.0 / n, *r.errors});
      if (log) *log << "level " << n << " err_c " << r.errors->c << " err_u " << r.errors->u << " err_p " << r.errors->p << "\n";
    } catch (const std::exception& e) {
      out.error = "level " + std::to_string(n) + ": " + e.what();
      break;
    }
  }
  std::ofstream csv(fs::path(dir) / "convergence.csv");
  csv << convergence_csv(out.rows);
  return out;
}

}  // namespace chns
