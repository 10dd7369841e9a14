#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "slicebench/slicebench.hpp"

namespace sb = slicebench;
namespace fs = std::filesystem;

namespace {

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Manifest {
  std::string builtin;
  std::string scenario_path;
  std::string out = ".";
  std::string dist = "uniform";
  std::string thetas;
  std::string alphas;
  int max_level = 2;
  int quad_points = 0;
  double quad_tol = 0.0;
  int threads = 0;
  int source = 1;
  int port = 1;
};

std::vector<double> parse_grid(const std::string& text, const char* flag) {
  double a = 0.0, b = 0.0;
  int n = 0;
  char c1 = 0, c2 = 0;
  std::istringstream in(text);
  in >> a >> c1 >> b >> c2 >> n;
  if (!in || c1 != ':' || c2 != ':' || n < 1 || !(in >> std::ws).eof())
    throw UsageError(std::string(flag) + " expects a:b:n, got '" + text + "'");
  return sb::linear_grid(a, b, n);
}

sb::ScenarioConfig load(const Manifest& m) {
  if (!m.builtin.empty() && !m.scenario_path.empty()) throw UsageError("--builtin and --scenario are exclusive");
  if (m.builtin == "double") return sb::canonical_double_slit();
  if (m.builtin == "triple") return sb::canonical_triple_slit();
  if (!m.builtin.empty()) throw UsageError("unknown builtin '" + m.builtin + "' (expected double or triple)");
  if (m.scenario_path.empty()) return sb::canonical_double_slit();
  std::ifstream in(m.scenario_path, std::ios::binary);
  if (!in) throw sb::ConfigError("cannot open scenario file " + m.scenario_path);
  std::ostringstream text;
  text << in.rdbuf();
  try {
    return sb::load_scenario(text.str());
  } catch (const sb::ConfigError& e) {
    throw sb::ConfigError(m.scenario_path + ": " + e.what());
  }
}

sb::QuadratureSpec quadrature(const Manifest& m, sb::QuadratureSpec q = {}) {
  if (m.quad_points > 0) q.points = m.quad_points;
  if (m.quad_tol > 0.0) q.rel_tolerance = m.quad_tol;
  q.validate();
  return q;
}

fs::path output_dir(const Manifest& m) {
  const fs::path dir(m.out);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) throw UsageError("output directory not writable: " + m.out);
  return dir;
}

nlohmann::json provenance(const sb::ScenarioConfig& s, const sb::QuadratureSpec& q) {
  return {{"scenario_hash", sb::hash_hex(sb::scenario_hash(s))}, {"quadrature", sb::quadrature_to_json(q)}};
}

void write_json(const fs::path& path, const nlohmann::json& j) { sb::write_text(path.string(), j.dump(2) + "\n"); }

int cmd_characterize(const Manifest& m) {
  const auto s = load(m);
  const auto q = quadrature(m);
  const auto dir = output_dir(m);
  const auto r = sb::characterize(s, q);
  auto j = sb::to_json(r);
  j["provenance"] = provenance(s, q);
  write_json(dir / "transfer.json", j);
  std::printf("unitarity defect %s, splitter ratio %s\n", sb::format_real(r.unitarity_defect).c_str(),
              sb::format_real(sb::splitter_ratio(r.unitary)).c_str());
  return 0;
}

int cmd_correlate(const Manifest& m) {
  sb::PhaseDistribution dist;
  if (m.dist == "uniform")
    dist = sb::UniformPhase{};
  else if (m.dist == "twopoint")
    dist = sb::TwoPointPhase{};
  else
    throw UsageError("unknown --dist '" + m.dist + "' (expected uniform or twopoint)");
  const auto s = load(m);
  const auto q = quadrature(m);
  const auto grid = m.thetas.empty() ? sb::default_theta_grid() : parse_grid(m.thetas, "--thetas");
  const auto dir = output_dir(m);
  const auto curve = sb::correlation_curve(s, grid, dist, q);
  sb::write_text((dir / "correlation.csv").string(),
                 sb::correlation_csv(curve, sb::provenance_comment(sb::scenario_hash(s), q)));
  auto j = sb::fit_to_json(curve);
  j["provenance"] = provenance(s, q);
  write_json(dir / "fit.json", j);
  std::printf("a %s b %s dip %s\n", sb::format_real(curve.fit.a).c_str(), sb::format_real(curve.fit.b).c_str(),
              sb::format_real(curve.fit.dip).c_str());
  return 0;
}

int cmd_mzi(const Manifest& m) {
  const auto s = load(m);
  const auto q = quadrature(m);
  const auto grid = m.alphas.empty() ? sb::linear_grid(0.0, sb::two_pi, 128) : parse_grid(m.alphas, "--alphas");
  const auto dir = output_dir(m);
  auto cascade = sb::build_mzi(s, 0.0);
  cascade.quad = quadrature(m, cascade.quad);
  const auto fringes = sb::mzi_scan(cascade, grid);
  const auto r = sb::characterize_mzi(cascade, q);

  nlohmann::json prov = provenance(s, q);
  prov["cascade_quadrature"] = sb::quadrature_to_json(cascade.quad);
  sb::write_text((dir / "fringes.csv").string(),
                 sb::fringe_csv(fringes, sb::provenance_comment(sb::scenario_hash(s), cascade.quad)));
  auto fit = sb::fringe_to_json(fringes);
  fit["provenance"] = prov;
  write_json(dir / "fringe_fit.json", fit);
  auto t = sb::to_json(r);
  t["provenance"] = prov;
  write_json(dir / "mzi_transfer.json", t);
  std::printf("visibility %s\n", sb::format_real(fringes.visibility()).c_str());
  return 0;
}

int cmd_decompose(const Manifest& m) {
  const auto s = load(m);
  const auto q = quadrature(m);
  if (m.source < 1 || m.source > s.size()) throw UsageError("--source out of range");
  if (m.port < 1 || m.port > s.size()) throw UsageError("--port out of range");
  const auto& patch = s.detectors[static_cast<std::size_t>(m.port - 1)].patch;
  if (m.max_level < patch.j0) throw UsageError("--max-level must be at least " + std::to_string(patch.j0));
  if (m.max_level > 8) throw UsageError("--max-level above 8 is not supported");
  const auto dir = output_dir(m);

  const auto field = sb::output_field(s, m.source - 1, m.port - 1);
  const auto d = sb::decompose_patch(field, patch, m.max_level);
  const std::string header = sb::provenance_comment(sb::scenario_hash(s), q);

  auto kind = [](sb::HaarKind k) { return k == sb::HaarKind::scaling ? "phi" : "psi"; };
  std::string coeffs = header + "index,kind_x,m,n,kind_y,m_prime,n_prime,re_A,im_A\n";
  for (std::size_t i = 0; i < d.basis.size(); ++i) {
    const auto& g = d.basis[i];
    const auto a = d.coefficients[static_cast<Eigen::Index>(i)];
    coeffs += std::to_string(g.ordinal) + "," + kind(g.x.kind) + "," + std::to_string(g.x.level) + "," +
              std::to_string(g.x.shift) + "," + kind(g.y.kind) + "," + std::to_string(g.y.level) + "," +
              std::to_string(g.y.shift) + "," + sb::format_real(a.real()) + "," + sb::format_real(a.imag()) + "\n";
  }
  sb::write_text((dir / "coefficients.csv").string(), coeffs);

  const sb::Rect r = patch.rect();
  const double y = r.contains(r.x0, 0.0) ? 0.0 : 0.5 * (r.y0 + r.y1);
  constexpr int samples = 401;
  std::string recon = header + "x,re_E,im_E,re_E_rec,im_E_rec\n";
  double err = 0.0, norm = 0.0;
  for (int k = 0; k < samples; ++k) {
    const double x = r.x0 + (r.x1 - r.x0) * (k + 0.5) / samples;
    const sb::Complex e = field(x, y);
    const sb::Complex er = d.value(x, y);
    err += std::norm(e - er);
    norm += std::norm(e);
    recon += sb::format_real(x) + "," + sb::format_real(e.real()) + "," + sb::format_real(e.imag()) + "," +
             sb::format_real(er.real()) + "," + sb::format_real(er.imag()) + "\n";
  }
  sb::write_text((dir / "reconstruction.csv").string(), recon);

  std::vector<sb::PowerReport> reports;
  for (int i = 0; i < s.size(); ++i) reports.push_back(sb::power_report(s, i, q));
  sb::write_text((dir / "power_table.csv").string(), header + sb::power_report_csv(reports, true));

  std::printf("dominant fraction %s, residual energy %s, line rms error %s\n",
              sb::format_real(std::norm(d.coefficients[0]) / d.field_energy).c_str(),
              sb::format_real(d.residual_energy()).c_str(), sb::format_real(std::sqrt(err / norm)).c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Post-selected transfer matrices of slit diffraction setups"};
  app.require_subcommand(1);
  Manifest m;

  auto common = [&](CLI::App* sub) {
    sub->add_option("--builtin", m.builtin, "Builtin scenario: double or triple");
    sub->add_option("--scenario", m.scenario_path, "Scenario JSON file");
    sub->add_option("--out", m.out, "Output directory");
    sub->add_option("--quad-points", m.quad_points, "Gauss-Legendre points per axis");
    sub->add_option("--quad-tol", m.quad_tol, "Relative quadrature tolerance");
    sub->add_option("--threads", m.threads, "Worker threads (default: SLICEBENCH_THREADS or 1)");
  };
  auto* characterize = app.add_subcommand("characterize", "Transfer matrix and polar factors");
  common(characterize);
  auto* correlate = app.add_subcommand("correlate", "Intensity correlation versus polarization angle");
  common(correlate);
  correlate->add_option("--dist", m.dist, "Phase distribution: uniform or twopoint");
  correlate->add_option("--thetas", m.thetas, "Angle grid a:b:n");
  auto* mzi = app.add_subcommand("mzi", "Mach-Zehnder cascade scan and transfer matrix");
  common(mzi);
  mzi->add_option("--alphas", m.alphas, "Phase-shifter grid a:b:n");
  auto* decompose = app.add_subcommand("decompose", "Haar decomposition of one port field and power table");
  common(decompose);
  decompose->add_option("--source", m.source, "Source index (1-based)");
  decompose->add_option("--port", m.port, "Port index (1-based)");
  decompose->add_option("--max-level", m.max_level, "Finest wavelet level");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (m.threads < 0) throw UsageError("--threads must be non-negative");
    sb::set_thread_count(m.threads);
    if (characterize->parsed()) return cmd_characterize(m);
    if (correlate->parsed()) return cmd_correlate(m);
    if (mzi->parsed()) return cmd_mzi(m);
    return cmd_decompose(m);
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const sb::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const sb::PreconditionError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const sb::NumericError& e) {
    std::cerr << "numeric failure: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
