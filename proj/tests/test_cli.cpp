#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "chns/cli.hpp"

using namespace chns;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path p = fs::path(::testing::TempDir()) / ("chns_cli_" + name);
  fs::remove_all(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

std::vector<std::string> lines(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream in(text);
  for (std::string l; std::getline(in, l);) out.push_back(l);
  return out;
}

std::vector<std::string> split(const std::string& s) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream in(s);
  while (std::getline(in, cell, ',')) out.push_back(cell);
  if (!s.empty() && s.back() == ',') out.push_back("");
  return out;
}

void expect_config_error(const std::string& text, int line, int col) {
  try {
    parse_config(text);
    ADD_FAILURE() << "accepted: " << text;
  } catch (const ConfigError& e) {
    EXPECT_EQ(e.line(), line) << e.what();
    EXPECT_EQ(e.column(), col) << e.what();
    EXPECT_EQ(std::string(e.what()).rfind("config:" + std::to_string(line) + ":" + std::to_string(col) + ": ", 0), 0u);
  }
}

}  // namespace

TEST(Config, ParsesKeysCommentsAndDefaults) {
  const RunConfig c = parse_config(
      "# spinodal\n"
      "problem = spinodal   # trailing comment\n"
      "\n"
      "  cells_per_axis=16\n"
      "tau = 2e-3\n"
      "kappa = 1e-4\n"
      "sigma_bdy = 8\n"
      "seed = 18446744073709551615\n");
  EXPECT_EQ(c.problem, "spinodal");
  EXPECT_EQ(c.cells_per_axis, 16);
  EXPECT_EQ(c.tau, 2e-3);
  EXPECT_EQ(c.seed, 18446744073709551615ull);
  EXPECT_EQ(c.penalties().sigma_bdy, 8.0);
  EXPECT_EQ(c.penalties().sigma_tilde_ch, run_penalties(1).sigma_tilde_ch);
  EXPECT_EQ(c.dim, 2);
  EXPECT_EQ(parse_config("problem = manufactured-3d\n").dim, 3);
}

TEST(Config, ErrorsCarryLineAndColumn) {
  expect_config_error("problem = spinodal\ntau = abc\n", 2, 7);
  expect_config_error("tau = 1\nbogus = 3\n", 2, 1);
  expect_config_error("tau = 1\n  tau = 2\n", 2, 3);
  expect_config_error("tau 1\n", 1, 6);
  expect_config_error("k = 2.5\n", 1, 5);
  expect_config_error("\n\ntau = -1\n", 3, 7);
  expect_config_error("problem = spinodal\nsigma_chi = 0.2\n", 2, 13);
  expect_config_error("problem = nonsense\n", 1, 11);
  expect_config_error("problem = manufactured-2d\ndim = 3\n", 2, 7);
  expect_config_error("sigma_int = 0.5\n", 1, 13);
  expect_config_error("tau =\n", 1, 6);
}

TEST(Config, EchoRoundTrips) {
  const RunConfig c = parse_config("problem = spinodal\ntau = 0.1\nkappa = 3.3e-5\nseed = 42\nsigma_tilde_ellip = 6\n");
  const std::string echo = config_echo(c);
  const RunConfig d = parse_config(echo);
  EXPECT_EQ(config_echo(d), echo);
  EXPECT_EQ(d.tau, c.tau);
  EXPECT_EQ(d.kappa, c.kappa);
  EXPECT_EQ(d.seed, 42u);
  EXPECT_EQ(d.penalties().sigma_tilde_ellip, 6.0);
  EXPECT_EQ(d.sigma_chi, 1.0 / 12.0);
}

TEST(Rates, Formula) {
  EXPECT_EQ(convergence_rate(0.3, 0.3), 0.0);
  EXPECT_NEAR(convergence_rate(0.4, 0.1), 2.0, 1e-15);
  const std::string csv = convergence_csv({{0.25, {0.4, 0.2, 1.0}}, {0.125, {0.1, 0.2, 0.5}}});
  const auto rows = lines(csv);
  ASSERT_EQ(rows.size(), 3u);
  EXPECT_EQ(rows[0], "h,err_c,rate_c,err_u,rate_u,err_p,rate_p");
  EXPECT_EQ(split(rows[1]), (std::vector<std::string>{"0.25", "0.40000000000000002", "", "0.20000000000000001", "", "1", ""}));
  const auto r2 = split(rows[2]);
  EXPECT_EQ(std::stod(r2[2]), 2.0);
  EXPECT_EQ(std::stod(r2[4]), 0.0);
  EXPECT_EQ(std::stod(r2[6]), 1.0);
}

TEST(Vtk, ConstantFieldAndCellCount) {
  RunConfig cfg = parse_config("problem = stationary\nstationary_value = 1\ncells_per_axis = 3\n");
  Simulation sim(make_mesh(cfg), cfg.params(), make_problem(cfg));
  const fs::path dir = scratch("vtk");
  fs::create_directories(dir);
  write_vtk((dir / "s.vtk").string(), sim.discretization(), sim.state());
  const auto l = lines(slurp(dir / "s.vtk"));
  ASSERT_GE(l.size(), 4u);
  EXPECT_EQ(l[0], "# vtk DataFile Version 3.0");
  EXPECT_EQ(l[2], "ASCII");
  EXPECT_EQ(l[3], "DATASET UNSTRUCTURED_GRID");
  int cells = -1;
  for (std::size_t i = 0; i < l.size(); ++i) {
    std::istringstream in(l[i]);
    std::string tag;
    in >> tag;
    if (tag == "CELLS") in >> cells;
    if (l[i] == "SCALARS c double 1") {
      ASSERT_EQ(l[i + 1], "LOOKUP_TABLE default");
      for (int e = 0; e < 9; ++e) EXPECT_NEAR(std::stod(l[i + 2 + e]), 1.0, 1e-14);
    }
  }
  EXPECT_EQ(cells, 9);
  const std::string all = slurp(dir / "s.vtk");
  EXPECT_NE(all.find("CELL_DATA 9"), std::string::npos);
  EXPECT_NE(all.find("VECTORS u double"), std::string::npos);
}

TEST(Run, StationaryTenStepsHasConstantMass) {
  RunConfig cfg = parse_config("problem = stationary\nstationary_value = 0.25\ncells_per_axis = 4\ntau = 1e-3\nT = 1e-2\n");
  const fs::path dir = scratch("stationary");
  const RunOutcome r = run_config(cfg, dir.string());
  ASSERT_TRUE(r.result.ok()) << r.result.error;
  EXPECT_FALSE(r.errors.has_value());
  const auto l = lines(slurp(dir / "timeseries.csv"));
  ASSERT_EQ(l.size(), 12u);
  EXPECT_EQ(l[0], timeseries_header);
  const std::string mass0 = split(l[1])[2];
  for (std::size_t i = 1; i < l.size(); ++i) {
    const auto cells = split(l[i]);
    ASSERT_EQ(cells.size(), 7u);
    EXPECT_EQ(std::stoi(cells[0]), static_cast<int>(i - 1));
    EXPECT_NEAR(std::stod(cells[2]), std::stod(mass0), 1e-15);
    EXPECT_EQ(cells[5], "1");
  }
  EXPECT_EQ(parse_config(slurp(dir / "config.echo")).stationary_value, 0.25);
}

TEST(Run, SpinodalIsByteIdentical) {
  RunConfig cfg = parse_config("problem = spinodal\ncells_per_axis = 8\nkappa = 1e-4\ntau = 1e-3\nT = 5e-3\nseed = 99\n");
  const fs::path a = scratch("spin_a"), b = scratch("spin_b");
  ASSERT_TRUE(run_config(cfg, a.string()).result.ok());
  ASSERT_TRUE(run_config(cfg, b.string()).result.ok());
  EXPECT_EQ(slurp(a / "timeseries.csv"), slurp(b / "timeseries.csv"));
  EXPECT_FALSE(slurp(a / "timeseries.csv").empty());
}

TEST(Run, ManufacturedFinalRowCarriesErrors) {
  RunConfig cfg = parse_config("problem = manufactured-2d\ncells_per_axis = 4\ntau = 1e-2\nT = 2e-2\n");
  const fs::path dir = scratch("mms");
  const RunOutcome r = run_config(cfg, dir.string());
  ASSERT_TRUE(r.result.ok()) << r.result.error;
  ASSERT_TRUE(r.errors.has_value());
  const auto l = lines(slurp(dir / "timeseries.csv"));
  ASSERT_EQ(l.size(), 4u);
  EXPECT_EQ(l[0], std::string(timeseries_header) + ",l2_error_c,l2_error_u,l2_error_p");
  EXPECT_EQ(split(l[1]).size(), 10u);
  EXPECT_EQ(split(l[1])[7], "");
  const auto last = split(l[3]);
  ASSERT_EQ(last.size(), 10u);

  // recompute with the diagnostics module directly
  Simulation sim(make_mesh(cfg), cfg.params(), make_problem(cfg));
  sim.advance();
  sim.advance();
  const auto ex = exact_solution(cfg);
  const Discretization& d = sim.discretization();
  const double t = sim.state().time;
  const double ec = error_norms(d.scalar, sim.state().c, [&](const Point& x) { return ex->c(t, x); }).l2;
  const double eu = error_norms(d.vector, sim.state().u, [&](const Point& x) { return ex->u(t, x); }).l2;
  const double ep = error_norms(d.pressure, sim.state().p, [&](const Point& x) { return ex->p(t, x); }).l2;
  EXPECT_EQ(std::stod(last[7]), ec);
  EXPECT_EQ(std::stod(last[8]), eu);
  EXPECT_EQ(std::stod(last[9]), ep);
}

TEST(Convergence, WritesTableWithRates) {
  RunConfig cfg = parse_config("problem = manufactured-2d\ntau = 1e-2\nT = 1e-2\n");
  const fs::path dir = scratch("conv");
  const ConvergenceOutcome c = run_convergence(cfg, {2, 4}, dir.string());
  ASSERT_TRUE(c.ok()) << c.error;
  ASSERT_EQ(c.rows.size(), 2u);
  EXPECT_EQ(c.rows[0].h, 0.5);
  EXPECT_EQ(c.rows[1].h, 0.25);
  EXPECT_EQ(slurp(dir / "convergence.csv"), convergence_csv(c.rows));
  EXPECT_TRUE(fs::exists(dir / "level_2" / "timeseries.csv"));
  EXPECT_TRUE(fs::exists(dir / "level_4" / "config.echo"));
  EXPECT_THROW(run_convergence(cfg, {4}, dir.string()), std::invalid_argument);
  EXPECT_THROW(run_convergence(parse_config("problem = spinodal\n"), {2, 4}, dir.string()), std::invalid_argument);
}
