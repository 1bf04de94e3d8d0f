#pragma once

#include "hdgmix/methods.hpp"
#include "hdgmix/postprocess.hpp"

#include <nlohmann/json.hpp>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <limits>
#include <optional>
#include <ostream>
#include <random>
#include <string>
#include <vector>

namespace hdgmix {

// ------------------------------------------------------------ manufactured cases

/// Exact solution with its derivatives and explicitly derived right-hand side on the unit square.
struct ManufacturedCase {
  std::string name;
  ScalarField u;
  VectorField grad_u;
  ScalarField lap_u;
  ScalarField kappa;
  VectorField grad_kappa;
  ScalarField c;  ///< empty without reaction
  ScalarField f;

  VectorField q() const {
    return [k = kappa, g = grad_u](const Point& p) { return Vec2(-k(p) * g(p)); };
  }
  ProblemData data() const { return ProblemData{kappa, c, f, u}; }

  /// Largest |f - (div q + c u)| at random points, with div q = -grad kappa . grad u - kappa lap u.
  double self_consistency(int samples = 200, unsigned seed = 1) const {
    std::mt19937 gen(seed);
    std::uniform_real_distribution<double> U(0.0, 1.0);
    double worst = 0.0;
    for (int i = 0; i < samples; ++i) {
      const Point p(U(gen), U(gen));
      const double r = -grad_kappa(p).dot(grad_u(p)) - kappa(p) * lap_u(p) + (c ? c(p) * u(p) : 0.0);
      worst = std::max(worst, std::abs(f(p) - r));
    }
    return worst;
  }
};

inline const std::vector<std::string>& case_names() {
  static const std::vector<std::string> n{"linear", "smooth", "varkappa", "reaction"};
  return n;
}

/// Built-in cases. reaction = true adds c = 1 + x to any case; "reaction" always has it.
inline ManufacturedCase make_case(const std::string& name, bool reaction = false) {
  constexpr double pi = M_PI;
  ManufacturedCase m;
  m.name = name;
  m.kappa = [](const Point&) { return 1.0; };
  m.grad_kappa = [](const Point&) { return Vec2(0, 0); };
  const auto s = [](const Point& p) { return std::sin(pi * p.x()) * std::sin(pi * p.y()); };
  if (name == "linear") {
    m.u = [](const Point& p) { return p.x() + p.y(); };
    m.grad_u = [](const Point&) { return Vec2(1, 1); };
    m.lap_u = [](const Point&) { return 0.0; };
  } else if (name == "smooth" || name == "varkappa" || name == "reaction") {
    m.u = s;
    m.grad_u = [](const Point& p) {
      return Vec2(pi * std::cos(pi * p.x()) * std::sin(pi * p.y()), pi * std::sin(pi * p.x()) * std::cos(pi * p.y()));
    };
    m.lap_u = [s](const Point& p) { return -2 * pi * pi * s(p); };
  } else {
    throw ConfigError("unknown case '" + name + "'");
  }
  if (name == "varkappa") {
    m.kappa = [](const Point& p) { return 1 + p.x() * p.x() * p.y(); };
    m.grad_kappa = [](const Point& p) { return Vec2(2 * p.x() * p.y(), p.x() * p.x()); };
  }
  const bool react = reaction || name == "reaction";
  if (react) m.c = [](const Point& p) { return 1 + p.x(); };

  // Right-hand sides written out by hand.
  if (name == "linear") {
    m.f = react ? ScalarField([](const Point& p) { return (1 + p.x()) * (p.x() + p.y()); })
                : ScalarField([](const Point&) { return 0.0; });
  } else if (name == "varkappa") {
    m.f = [react](const Point& p) {
      const double x = p.x(), y = p.y();
      const double sx = std::sin(pi * x), cx = std::cos(pi * x), sy = std::sin(pi * y), cy = std::cos(pi * y);
      return -(2 * x * y * pi * cx * sy + x * x * pi * sx * cy) + (1 + x * x * y) * 2 * pi * pi * sx * sy +
             (react ? (1 + x) * sx * sy : 0.0);
    };
  } else {
    m.f = [react](const Point& p) {
      const double v = std::sin(pi * p.x()) * std::sin(pi * p.y());
      return 2 * pi * pi * v + (react ? (1 + p.x()) * v : 0.0);
    };
  }
  return m;
}

// ------------------------------------------------------------ error norms

/// Error quantities of one discrete solution. The face norm is |mu|_h = (sum_K h_K |mu|^2_dK)^1/2.
enum class Norm {
  Q,           ///< |q - q_h|
  QProj,       ///< |Pi q - q_h|
  QKinv,       ///< |q - q_h|_{kappa^-1}
  QProjKinv,   ///< |Pi q - q_h|_{kappa^-1}
  QInterp,     ///< |Pi q - q|
  U,           ///< |u - u_h|
  UProj,       ///< |Pi u - u_h|
  UHat,        ///< |u - uhat_h|_h
  UHatProj,    ///< |P u - uhat_h|_h
  Flux,        ///< |q . n - qhat_h . n|_h
  FluxProj,    ///< |Pi q . n - q_h . n|_h (RT, BDM) or |P(q . n) - qhat_h . n|_h (HDG)
  TauJump,     ///< <tau (e_u - e_uhat), e_u - e_uhat>^1/2, HDG only
  UStenberg,   ///< |u - u*_h|, Stenberg scheme
  UGradient,   ///< |u - u*_h|, gradient scheme
  Count
};

constexpr int kNormCount = static_cast<int>(Norm::Count);

inline const std::array<std::string, kNormCount>& norm_names() {
  static const std::array<std::string, kNormCount> n{"q",        "q_proj",    "q_kinv", "q_proj_kinv", "q_interp",
                                                     "u",        "u_proj",    "uhat",   "uhat_proj",   "flux",
                                                     "flux_proj", "tau_jump", "u_stenberg", "u_gradient"};
  return n;
}

inline Norm norm_from_string(const std::string& s) {
  const auto& n = norm_names();
  for (int i = 0; i < kNormCount; ++i)
    if (n[i] == s) return static_cast<Norm>(i);
  throw ConfigError("unknown norm '" + s + "'");
}

struct ErrorNorms {
  std::array<double, kNormCount> v;
  ErrorNorms() { v.fill(std::numeric_limits<double>::quiet_NaN()); }
  double& operator[](Norm n) { return v[static_cast<int>(n)]; }
  double operator[](Norm n) const { return v[static_cast<int>(n)]; }
};

/// Computes all error quantities with overkill quadrature (exactness 2k+6).
/// proj holds (Pi q, Pi u, P u) for the method; the postprocessed fields are optional.
inline ErrorNorms compute_norms(const Mesh& m, const ManufacturedCase& mc, const FieldTriple& h, const FieldTriple& proj,
                                const PostprocessedField* sten = nullptr, const PostprocessedField* grad = nullptr) {
  const int k = h.space.k;
  const QuadratureChoice qc = QuadratureChoice::at_least(k, 2 * k + 6);
  const Rule2D& r = triangle_rule(qc.triangle);
  const Rule1D& g = gauss_legendre(qc.edge_points);
  const VectorField q = mc.q();
  const bool hdg = h.space.method == Method::HDG;
  std::vector<std::array<double, kNormCount>> part(m.num_triangles());
  parallel_for(m.num_triangles(), [&](int t) {
    auto& a = part[t];
    a.fill(0.0);
    const ElementMap& K = m.map(t);
    auto add = [&](Norm n, double v) { a[static_cast<int>(n)] += v; };
    for (std::size_t i = 0; i < r.points.size(); ++i) {
      const Point x = K.F(r.points[i]);
      const double w = r.weights[i] * K.jac, kinv = 1.0 / mc.kappa(x);
      const Vec2 qe = q(x), qh = eval_flux_field(m, h, t, x), qp = eval_flux_field(m, proj, t, x);
      const double ue = mc.u(x), uh = eval_potential(m, h, t, x), up = eval_potential(m, proj, t, x);
      add(Norm::Q, w * (qe - qh).squaredNorm());
      add(Norm::QProj, w * (qp - qh).squaredNorm());
      add(Norm::QKinv, w * kinv * (qe - qh).squaredNorm());
      add(Norm::QProjKinv, w * kinv * (qp - qh).squaredNorm());
      add(Norm::QInterp, w * (qp - qe).squaredNorm());
      add(Norm::U, w * (ue - uh) * (ue - uh));
      add(Norm::UProj, w * (up - uh) * (up - uh));
      if (sten) add(Norm::UStenberg, w * std::pow(ue - eval_postprocessed(m, *sten, t, x), 2));
      if (grad) add(Norm::UGradient, w * std::pow(ue - eval_postprocessed(m, *grad, t, x), 2));
    }
    for (int i = 0; i < 3; ++i) {
      const int e = m.triangle_edge(t, i);
      const Edge& E = m.edge(e);
      const Point pa = m.vertices()[E.vertices[0]], pb = m.vertices()[E.vertices[1]];
      const Vec2 n = K.normal[i];
      Eigen::VectorXd pqn;
      if (hdg) pqn = project_face([&](const Point& x) { return q(x).dot(n); }, k, pa, pb, qc.edge_points);
      const double ti = hdg ? h.tau[t][i] : 0.0;
      for (std::size_t j = 0; j < g.points.size(); ++j) {
        const double s = g.points[j];
        const Point x = (1 - s) * pa + s * pb;
        const double w = g.weights[j] * E.length * K.h;
        const double uhat = eval_trace(m, h, e, s), phat = eval_trace(m, proj, e, s);
        const double fh = eval_numerical_flux(m, h, t, i, s);
        add(Norm::UHat, w * std::pow(mc.u(x) - uhat, 2));
        add(Norm::UHatProj, w * std::pow(phat - uhat, 2));
        add(Norm::Flux, w * std::pow(q(x).dot(n) - fh, 2));
        const double pf = hdg ? eval_face(k, pqn, s, E.length) : eval_flux_field(m, proj, t, x).dot(n);
        add(Norm::FluxProj, w * std::pow(pf - fh, 2));
        if (ti != 0.0) {
          const double jmp = (eval_potential(m, proj, t, x) - eval_potential(m, h, t, x)) - (phat - uhat);
          add(Norm::TauJump, g.weights[j] * E.length * ti * jmp * jmp);
        }
      }
    }
  });
  ErrorNorms out;
  std::array<double, kNormCount> sum{};
  for (const auto& a : part)
    for (int i = 0; i < kNormCount; ++i) sum[i] += a[i];
  for (int i = 0; i < kNormCount; ++i) out.v[i] = std::sqrt(sum[i]);
  if (!hdg) out[Norm::TauJump] = 0.0;
  if (!sten) out[Norm::UStenberg] = std::numeric_limits<double>::quiet_NaN();
  if (!grad) out[Norm::UGradient] = std::numeric_limits<double>::quiet_NaN();
  return out;
}

// ------------------------------------------------------------ convergence orders

constexpr double kSaturation = 1e-13;

struct Slope {
  double value = std::numeric_limits<double>::quiet_NaN();
  bool saturated = false;
};

/// log2(e_i / e_{i+1}) for errors on meshes with halved h; saturated when either error is below 1e-13.
inline std::vector<Slope> eoc(const std::vector<double>& errors) {
  std::vector<Slope> s;
  for (std::size_t i = 0; i + 1 < errors.size(); ++i) {
    Slope sl;
    if (!(errors[i] > kSaturation) || !(errors[i + 1] > kSaturation))
      sl.saturated = true;
    else
      sl.value = std::log2(errors[i] / errors[i + 1]);
    s.push_back(sl);
  }
  return s;
}

// ------------------------------------------------------------ studies

struct StudyConfig {
  Method method = Method::RT;
  int k = 0;
  int levels = 5;  ///< number of meshes, each a uniform refinement of the previous one
  std::string case_name = "smooth";
  double tau = 1.0;
  bool single_face = false;
  bool reaction = false;
  bool stenberg = false;
  bool gradient = false;
  std::string mesh_file;  ///< empty selects the criss-cross unit square with 16 triangles
};

inline void validate(const StudyConfig& c) {
  SpaceDescriptor(c.method, c.k);
  if (c.levels < 2) throw ConfigError("at least two levels are needed");
  if (c.levels > 8) throw ConfigError("at most eight levels are supported");
  if (!(c.tau > 0.0)) throw ConfigError("tau must be positive");
  make_case(c.case_name, c.reaction);
}

struct LevelResult {
  int level = 0;
  double h = 0.0;
  int triangles = 0;
  int dofs_q = 0, dofs_u = 0, dofs_lambda = 0, condensed = 0;
  ErrorNorms norms;
  double time_ms = 0.0;  ///< assembly plus hybridized solve; reported in JSON only
};

struct Verdict {
  Norm norm;
  double expected = 0.0, lo = 0.0, hi = 0.0;
  Slope observed;
  bool asserted = true;
  bool pass = false;
};

struct ConvergenceReport {
  StudyConfig config;
  bool convex = true;
  std::vector<LevelResult> levels;
  std::array<std::vector<Slope>, kNormCount> eoc;
  std::vector<Verdict> verdicts;

  bool passed() const {
    for (const auto& v : verdicts)
      if (v.asserted && !v.pass) return false;
    return true;
  }
};

/// Expected orders of the error quantities for the configured method.
/// Superconvergent quantities get the wider window (-0.15, +0.45).
inline std::vector<Verdict> expected_orders(const StudyConfig& c) {
  const int k = c.k;
  std::vector<Verdict> v;
  auto add = [&](Norm n, double order, double lo, double hi) { v.push_back({n, order, order - lo, order + hi}); };
  switch (c.method) {
    case Method::RT:
      add(Norm::Q, k + 1, 0.15, 0.15);
      add(Norm::U, k + 1, 0.15, 0.15);
      add(Norm::UProj, k + 2, 0.15, 0.45);
      add(Norm::UHatProj, k + 2, 0.15, 0.45);
      add(Norm::Flux, k + 1, 0.2, 0.2);
      if (c.stenberg) add(Norm::UStenberg, k + 2, 0.15, 0.45);
      if (c.gradient) add(Norm::UGradient, k + 2, 0.15, 0.45);
      break;
    case Method::BDM:
      add(Norm::Q, k + 1, 0.15, 0.15);
      add(Norm::U, k, 0.15, 0.15);
      add(Norm::UProj, k + std::min(k, 2), 0.15, 0.45);
      add(Norm::UHat, k + 1, 0.2, 0.2);
      break;
    case Method::HDG:
      add(Norm::Q, k + 1, 0.15, 0.15);
      add(Norm::UProj, k + 1 + std::min(k, 1), 0.15, 0.45);
      add(Norm::FluxProj, k + 1, 0.2, 0.2);
      if (k >= 1) add(Norm::UHatProj, k + 2, 0.15, 0.45);
      if (c.stenberg && k >= 1) add(Norm::UStenberg, k + 2, 0.15, 0.45);
      if (c.gradient && k >= 1) add(Norm::UGradient, k + 2, 0.15, 0.45);
      break;
  }
  return v;
}

inline Mesh base_mesh(const StudyConfig& c) { return c.mesh_file.empty() ? unit_square(2) : load_mesh(c.mesh_file); }

/// Runs the refinement study. Rates are asserted only on convex domains and never for the
/// linear case, whose errors vanish.
inline ConvergenceReport run_study(const StudyConfig& c) {
  validate(c);
  const ManufacturedCase mc = make_case(c.case_name, c.reaction);
  const ProblemData data = mc.data();
  const SpaceDescriptor space(c.method, c.k);
  ConvergenceReport rep;
  rep.config = c;
  Mesh mesh = base_mesh(c);
  rep.convex = mesh.convex_domain();
  for (int l = 0; l < c.levels; ++l) {
    if (l > 0) mesh = uniform_refine(mesh);
    StabilizationFunction tau;
    if (c.method == Method::HDG)
      tau = c.single_face ? StabilizationFunction::single_face(mesh, c.tau) : StabilizationFunction::constant(mesh, c.tau);
    const auto t0 = std::chrono::steady_clock::now();
    const Assembly a = assemble(mesh, space, data, tau);
    const FieldTriple h = solve_hybridized(a);
    const auto t1 = std::chrono::steady_clock::now();
    const FieldTriple proj = interpolate(mesh, space, a.tau, mc.q(), mc.u, 2 * c.k + 6);
    std::optional<PostprocessedField> sten, grad;
    if (c.stenberg) sten = stenberg(mesh, h, data);
    if (c.gradient) grad = gradient_postprocess(mesh, h, data);
    LevelResult r;
    r.level = l;
    r.h = mesh.h_max();
    r.triangles = mesh.num_triangles();
    r.dofs_q = a.layout.num_q();
    r.dofs_u = a.layout.num_u();
    r.dofs_lambda = a.layout.num_lambda();
    r.condensed = a.layout.num_interior;
    r.norms = compute_norms(mesh, mc, h, proj, sten ? &*sten : nullptr, grad ? &*grad : nullptr);
    r.time_ms = std::chrono::duration<double, std::milli>(t1 - t0).count();
    rep.levels.push_back(r);
  }
  for (int i = 0; i < kNormCount; ++i) {
    std::vector<double> e;
    for (const auto& r : rep.levels) e.push_back(r.norms.v[i]);
    rep.eoc[i] = eoc(e);
  }
  const bool assertable = rep.convex && c.case_name != "linear";
  for (Verdict v : expected_orders(c)) {
    v.observed = rep.eoc[static_cast<int>(v.norm)].back();
    v.asserted = assertable;
    v.pass = !v.observed.saturated && v.observed.value >= v.lo && v.observed.value <= v.hi;
    rep.verdicts.push_back(v);
  }
  return rep;
}

// ------------------------------------------------------------ output

inline std::string csv_header() {
  std::string s = "level,h,triangles,dofs_q,dofs_u,dofs_lambda,condensed";
  for (const auto& n : norm_names()) s += "," + n;
  return s;
}

inline std::string format_number(double v) {
  if (std::isnan(v)) return "nan";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.10e", v);
  return buf;
}

inline void write_csv(std::ostream& out, const ConvergenceReport& rep) {
  out << csv_header() << '\n';
  for (const auto& r : rep.levels) {
    out << r.level << ',' << format_number(r.h) << ',' << r.triangles << ',' << r.dofs_q << ',' << r.dofs_u << ','
        << r.dofs_lambda << ',' << r.condensed;
    for (double v : r.norms.v) out << ',' << format_number(v);
    out << '\n';
  }
}

inline nlohmann::json slope_json(const Slope& s) {
  if (s.saturated) return "saturated";
  return s.value;
}

inline nlohmann::json to_json(const ConvergenceReport& rep) {
  using nlohmann::json;
  const StudyConfig& c = rep.config;
  json j;
  j["config"] = {{"method", to_string(c.method)}, {"degree", c.k},          {"levels", c.levels},
                 {"case", c.case_name},           {"tau", c.single_face ? json("single-face") : json(c.tau)},
                 {"reaction", c.reaction},        {"stenberg", c.stenberg}, {"gradient", c.gradient},
                 {"mesh", c.mesh_file.empty() ? json("unit_square(2)") : json(c.mesh_file)},
                 {"convex", rep.convex}};
  json levels = json::array();
  for (const auto& r : rep.levels) {
    json norms;
    for (int i = 0; i < kNormCount; ++i)
      norms[norm_names()[i]] = std::isnan(r.norms.v[i]) ? json(nullptr) : json(r.norms.v[i]);
    levels.push_back({{"level", r.level},
                      {"h", r.h},
                      {"triangles", r.triangles},
                      {"dofs", {{"q", r.dofs_q}, {"u", r.dofs_u}, {"lambda", r.dofs_lambda}, {"condensed", r.condensed}}},
                      {"norms", norms},
                      {"time_ms", r.time_ms}});
  }
  j["levels"] = levels;
  json e;
  for (int i = 0; i < kNormCount; ++i) {
    json a = json::array();
    for (const auto& s : rep.eoc[i]) a.push_back(slope_json(s));
    e[norm_names()[i]] = a;
  }
  j["eoc"] = e;
  json v;
  for (const auto& d : rep.verdicts)
    v[norm_names()[static_cast<int>(d.norm)]] = {{"expected", d.expected}, {"range", {d.lo, d.hi}},
                                                 {"observed", slope_json(d.observed)}, {"asserted", d.asserted},
                                                 {"pass", d.pass}};
  j["verdicts"] = v;
  j["passed"] = rep.passed();
  return j;
}

/// Human-readable summary: EOC of every quantity at the finest pair and the verdicts.
inline void write_summary(std::ostream& out, const ConvergenceReport& rep) {
  const StudyConfig& c = rep.config;
  out << to_string(c.method) << " k=" << c.k << " case=" << c.case_name << (c.reaction ? " reaction" : "")
      << (rep.convex ? "" : " (non-convex domain: rates reported only)") << '\n';
  for (const auto& d : rep.verdicts) {
    char buf[160];
    const Slope& s = d.observed;
    std::snprintf(buf, sizeof buf, "  %-12s expected %.0f in [%.2f, %.2f]  observed %s  %s\n",
                  norm_names()[static_cast<int>(d.norm)].c_str(), d.expected, d.lo, d.hi,
                  s.saturated ? "saturated" : format_number(s.value).c_str(),
                  !d.asserted ? "(reported)" : d.pass ? "ok" : "FAIL");
    out << buf;
  }
}

// ------------------------------------------------------------ method comparison

struct ComparisonRow {
  Method method;
  std::vector<LevelResult> levels;
  std::array<std::vector<Slope>, kNormCount> eoc;
};

/// Runs the same study for several methods on the same mesh sequence.
inline std::vector<ComparisonRow> compare_methods(StudyConfig c, const std::vector<Method>& methods) {
  for (Method m : methods) SpaceDescriptor(m, c.k);
  std::vector<ComparisonRow> rows;
  for (Method m : methods) {
    c.method = m;
    const ConvergenceReport r = run_study(c);
    rows.push_back({m, r.levels, r.eoc});
  }
  return rows;
}

inline void write_comparison(std::ostream& out, const std::vector<ComparisonRow>& rows) {
  const std::vector<Norm> shown{Norm::Q, Norm::U, Norm::UProj, Norm::UHat, Norm::UHatProj, Norm::Flux};
  out << "method,level,h,dofs_q,dofs_u,condensed";
  for (Norm n : shown) out << ',' << norm_names()[static_cast<int>(n)] << ",eoc_" << norm_names()[static_cast<int>(n)];
  out << '\n';
  for (const auto& row : rows)
    for (std::size_t l = 0; l < row.levels.size(); ++l) {
      const auto& r = row.levels[l];
      out << to_string(row.method) << ',' << r.level << ',' << format_number(r.h) << ',' << r.dofs_q << ','
          << r.dofs_u << ',' << r.condensed;
      for (Norm n : shown) {
        out << ',' << format_number(r.norms[n]) << ',';
        if (l > 0) {
          const Slope& s = row.eoc[static_cast<int>(n)][l - 1];
          out << (s.saturated ? "saturated" : format_number(s.value));
        }
      }
      out << '\n';
    }
}

}  // namespace hdgmix
