#pragma once

// JSON problem configuration: order, potential, boundary, solver, tasks.

#include "bessel_sl/bessel_sl.hpp"

#include "json.hpp"

#include <fstream>

namespace bessel_sl::cli {

using nlohmann::json;

struct SolverConfig {
  FssOptions fss{};
  BirkhoffOptions birkhoff{};
  SpectralOptions spectral{};
  double stokes_tol = 1e-8;
  double tol_scale = 1.0;
};

struct ProblemConfig {
  std::string path;
  BoundaryProblem problem;
  SolverConfig solver;
  json tasks = json::object();
  json source;
};

namespace detail {

inline void only_keys(const json& j, const std::string& where, std::initializer_list<const char*> keys) {
  if (!j.is_object()) throw ParseError(where + ": expected an object");
  for (const auto& [k, v] : j.items())
    if (std::none_of(keys.begin(), keys.end(), [&](const char* a) { return k == a; }))
      throw ParseError("unknown field '" + (where.empty() ? k : where + "." + k) + "'");
}

inline const json& field(const json& j, const std::string& where, const char* key) {
  if (!j.contains(key)) throw ParseError("missing field '" + where + "." + key + "'");
  return j.at(key);
}

inline double number(const json& j, const std::string& name) {
  if (!j.is_number()) throw ParseError("field '" + name + "' must be a number");
  return j.get<double>();
}

inline double positive(const json& j, const std::string& name) {
  const double v = number(j, name);
  if (!(v > 0.0)) throw ParseError("field '" + name + "' must be positive");
  return v;
}

/// m x m matrix from a flat row-major list of Re/Im pairs.
inline Mat matrix(const json& j, int m, const std::string& name) {
  if (!j.is_array() || static_cast<int>(j.size()) != 2 * m * m)
    throw ParseError("field '" + name + "' must hold " + std::to_string(2 * m * m) + " numbers (row-major Re/Im pairs)");
  Mat out(m, m);
  for (int r = 0; r < m; ++r)
    for (int c = 0; c < m; ++c) {
      const int i = 2 * (r * m + c);
      out(r, c) = {number(j[i], name), number(j[i + 1], name)};
    }
  return out;
}

inline std::vector<double> numbers(const json& j, const std::string& name) {
  if (!j.is_array() || j.empty()) throw ParseError("field '" + name + "' must be a non-empty list of numbers");
  std::vector<double> out;
  for (const auto& v : j) out.push_back(number(v, name));
  return out;
}

inline Potential potential(const json& j, int m) {
  only_keys(j, "potential", {"type", "coeffs", "x", "values"});
  const std::string type = field(j, "potential", "type").get<std::string>();
  if (type == "zero") return Potential::zero(m);
  if (type == "polynomial") {
    const auto& cs = field(j, "potential", "coeffs");
    if (!cs.is_array() || cs.empty()) throw ParseError("field 'potential.coeffs' must be a non-empty list of matrices");
    std::vector<Mat> coeffs;
    for (std::size_t i = 0; i < cs.size(); ++i)
      coeffs.push_back(matrix(cs[i], m, "potential.coeffs[" + std::to_string(i) + "]"));
    return Potential::polynomial(std::move(coeffs));
  }
  if (type == "nodes") {
    const auto xs = numbers(field(j, "potential", "x"), "potential.x");
    const auto& vs = field(j, "potential", "values");
    if (!vs.is_array() || vs.size() != xs.size())
      throw ParseError("field 'potential.values' must hold one matrix per node");
    std::vector<Mat> values;
    for (std::size_t i = 0; i < vs.size(); ++i)
      values.push_back(matrix(vs[i], m, "potential.values[" + std::to_string(i) + "]"));
    return Potential::nodes(xs, std::move(values));
  }
  throw ParseError("field 'potential.type' must be zero, polynomial or nodes");
}

inline SolverConfig solver(const json& j, double tol_scale) {
  only_keys(j, "solver", {"picard_tol", "max_iterations", "near_radius", "max_panel_width", "birkhoff_tol",
                          "contour_samples", "safety_floor", "newton_tol", "newton_max", "doubling_tol", "stokes_tol"});
  SolverConfig s;
  s.tol_scale = tol_scale;
  auto tol = [&](const char* key, double def) {
    return (j.contains(key) ? positive(j.at(key), std::string("solver.") + key) : def) * tol_scale;
  };
  s.fss.picard_tol = tol("picard_tol", s.fss.picard_tol);
  if (j.contains("max_iterations")) s.fss.max_iterations = static_cast<int>(positive(j.at("max_iterations"), "solver.max_iterations"));
  if (j.contains("near_radius")) s.fss.mesh.near_radius = positive(j.at("near_radius"), "solver.near_radius");
  if (j.contains("max_panel_width")) s.fss.mesh.max_width = positive(j.at("max_panel_width"), "solver.max_panel_width");
  s.birkhoff.picard_tol = tol("birkhoff_tol", s.birkhoff.picard_tol);
  s.birkhoff.max_iterations = s.fss.max_iterations;
  s.birkhoff.mesh = s.fss.mesh;
  auto& sp = s.spectral;
  if (j.contains("contour_samples")) sp.samples = static_cast<int>(positive(j.at("contour_samples"), "solver.contour_samples"));
  if (sp.samples % 2) throw ParseError("field 'solver.contour_samples' must be even");
  if (j.contains("safety_floor")) sp.safety_floor = positive(j.at("safety_floor"), "solver.safety_floor");
  sp.newton_tol = tol("newton_tol", sp.newton_tol);
  if (j.contains("newton_max")) sp.newton_max = static_cast<int>(positive(j.at("newton_max"), "solver.newton_max"));
  sp.doubling_tol = tol("doubling_tol", sp.doubling_tol);
  sp.fss = s.fss;
  s.stokes_tol = tol("stokes_tol", s.stokes_tol);
  return s;
}

}  // namespace detail

inline ProblemConfig parse_config(const json& j, double tol_scale = 1.0) {
  using namespace detail;
  only_keys(j, "", {"order", "potential", "boundary", "solver", "tasks"});
  const auto& o = field(j, "config", "order");
  only_keys(o, "order", {"nu", "c10"});
  const auto nu = numbers(field(o, "order", "nu"), "order.nu");
  for (std::size_t i = 1; i < nu.size(); ++i)
    if (nu[i] > nu[i - 1]) throw ParseError("field 'order.nu' must be nonincreasing");
  std::vector<double> c10;
  if (o.contains("c10")) c10 = numbers(o.at("c10"), "order.c10");
  if (!c10.empty() && c10.size() != nu.size()) throw ParseError("field 'order.c10' must match 'order.nu' in length");
  const int m = static_cast<int>(nu.size());

  const auto& b = field(j, "config", "boundary");
  only_keys(b, "boundary", {"T", "h", "H"});
  const double T = positive(field(b, "boundary", "T"), "boundary.T");
  const Mat h = b.contains("h") ? matrix(b.at("h"), m, "boundary.h") : Mat::Zero(m, m);
  const Mat H = b.contains("H") ? matrix(b.at("H"), m, "boundary.H") : Mat::Zero(m, m);

  if (!(tol_scale > 0.0)) throw ParseError("--tol-scale must be positive");
  ProblemConfig out;
  out.source = j;
  out.solver = solver(j.value("solver", json::object()), tol_scale);
  const Potential q = j.contains("potential") ? potential(j.at("potential"), m) : Potential::zero(m);
  out.problem = BoundaryProblem(Equation(SingularOrder(nu, c10), q, T), h, H);
  if (j.contains("tasks")) {
    if (!j.at("tasks").is_object()) throw ParseError("field 'tasks' must be an object");
    out.tasks = j.at("tasks");
  }
  return out;
}

inline ProblemConfig load_config(const std::string& path, double tol_scale = 1.0) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open config " + path);
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw ParseError(std::string("config is not valid JSON: ") + e.what());
  }
  auto cfg = parse_config(j, tol_scale);
  cfg.path = path;
  return cfg;
}

}  // namespace bessel_sl::cli
