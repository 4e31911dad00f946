// Command-line front end: one command per process, report on stdout.
//
// Exit codes: 0 when every check passes, 1 on a failed check or a numerical
// error (LeftDomain, NotComposable, SingularMC, Budget), 2 on bad input
// (config, table or flag errors).

#include <chrono>
#include <fstream>
#include <iostream>
#include <map>
#include <random>
#include <sstream>

#include <CLI11.hpp>
#include <unsupported/Eigen/MatrixFunctions>

#include "report.hpp"
#include "sprayoid/completion.hpp"
#include "sprayoid/config.hpp"
#include "sprayoid/errors.hpp"
#include "sprayoid/globalization.hpp"
#include "sprayoid/im_forms.hpp"
#include "sprayoid/spray_flow.hpp"
#include "sprayoid/spray_groupoid.hpp"

namespace sprayoid::cli {

namespace {

constexpr int kExitFail = 1;
constexpr int kExitInput = 2;

class InputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// --- text output ------------------------------------------------------------

void flatten(std::ostream& os, const Json& j, const std::string& prefix) {
  if (j.is_object()) {
    for (auto it = j.begin(); it != j.end(); ++it)
      flatten(os, it.value(), prefix.empty() ? it.key() : prefix + "." + it.key());
  } else if (j.is_array() && !j.empty() && (j.front().is_object() || j.front().is_array())) {
    for (std::size_t i = 0; i < j.size(); ++i) flatten(os, j[i], prefix + "[" + std::to_string(i) + "]");
  } else {
    os << "  " << prefix << " = " << j.dump() << '\n';
  }
}

}  // namespace

void Report::write_text(std::ostream& os) const {
  const Json doc = finish();
  os << "command: " << doc["command"].get<std::string>() << '\n';
  os << "verdict: " << doc["verdict"].get<std::string>() << '\n';
  if (doc.contains("error"))
    os << "error: " << doc["error"]["kind"].get<std::string>() << ": " << doc["error"]["message"].get<std::string>()
       << '\n';
  if (!doc["checks"].empty()) {
    os << "checks:\n";
    for (const auto& c : doc["checks"]) {
      os << "  [" << (c["pass"].get<bool>() ? "pass" : "FAIL") << "] " << c["name"].get<std::string>() << " = "
         << c["value"].dump();
      if (!c["tolerance"].is_null()) os << "  (" << c["relation"].get<std::string>() << " " << c["tolerance"].dump() << ")";
      os << '\n';
      if (c.contains("witness")) flatten(os, c["witness"], "  witness");
    }
  }
  if (!doc["results"].empty()) {
    os << "results:\n";
    flatten(os, doc["results"], "");
  }
  os << "config:\n";
  flatten(os, doc["config"], "");
  if (doc.contains("wall_time_s")) os << "wall_time_s: " << doc["wall_time_s"].dump() << '\n';
}

namespace {

// --- shared options -----------------------------------------------------------

struct GlobalOptions {
  bool json = false;
  bool timing = false;
  std::optional<double> rk_step;
  std::optional<int> quad_nodes;
  std::optional<double> fd_step;
  std::optional<int> mc_substeps;
  std::optional<int> samples;
  std::optional<std::uint64_t> seed;
  std::optional<int> transport_sign;
};

Json to_json(const Vec& v) {
  Json a = Json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v[i]);
  return a;
}

Json to_json(const Mat& m) {
  Json rows = Json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) rows.push_back(to_json(Vec(m.row(i).transpose())));
  return rows;
}

Json to_json(const ArrowPoint& a) { return Json{{"x", to_json(a.x)}, {"xi", to_json(a.xi)}}; }

Json to_json(const Numerics& num) {
  return Json{{"rk_step", num.rk_step},         {"quad_nodes", num.quad_nodes}, {"fd_step", num.fd_step},
              {"mc_substeps", num.mc_substeps}, {"match_tol", num.match_tol},   {"cond_max", num.cond_max},
              {"axiom_tol", num.axiom_tol},     {"samples", num.samples},       {"seed", num.seed},
              {"transport_sign", num.transport_sign}};
}

Vec vector_flag(const std::string& text, int dim, const std::string& flag) {
  Vec v;
  try {
    v = parse_vector(text);
  } catch (const ConfigError& e) {
    throw InputError(flag + ": " + e.what());
  }
  if (v.size() != dim)
    throw InputError(flag + " needs " + std::to_string(dim) + " components, got " + std::to_string(v.size()));
  return v;
}

/// "dx|dxi"
TangentOfA tangent_flag(const std::string& text, int n, int r) {
  const auto bar = text.find('|');
  if (bar == std::string::npos) throw InputError("--tangent expects \"dx|dxi\", got '" + text + "'");
  return {vector_flag(text.substr(0, bar), n, "--tangent (dx)"), vector_flag(text.substr(bar + 1), r, "--tangent (dxi)")};
}

// --- model loading ------------------------------------------------------------

struct Loaded {
  ModelConfig cfg;
  Numerics num;
};

Loaded load_model(const std::string& path, const GlobalOptions& g) {
  Loaded out{load_model_config(path), {}};
  Numerics& num = out.num;
  num = out.cfg.numerics;
  if (g.rk_step) num.rk_step = *g.rk_step;
  if (g.quad_nodes) num.quad_nodes = *g.quad_nodes;
  if (g.fd_step) num.fd_step = *g.fd_step;
  if (g.mc_substeps) num.mc_substeps = *g.mc_substeps;
  if (g.samples) num.samples = *g.samples;
  if (g.seed) num.seed = *g.seed;
  if (g.transport_sign) num.transport_sign = *g.transport_sign;
  try {
    num.check();
  } catch (const InvalidParams& e) {
    throw InputError(e.what());
  }
  if (out.cfg.im_form) {
    try {
      out.cfg.im_form->check(*out.cfg.model);
    } catch (const InvalidParams& e) {
      throw ConfigError(std::string("im_form: ") + e.what());
    }
  }
  return out;
}

Json entries_json(const std::vector<Expression>& entries, const std::vector<int>& extents) {
  Json out = Json::object();
  for (std::size_t flat = 0; flat < entries.size(); ++flat) {
    if (entries[flat].is_zero()) continue;
    std::vector<int> idx(extents.size());
    std::size_t rest = flat;
    for (std::size_t p = extents.size(); p-- > 0;) {
      idx[p] = static_cast<int>(rest % static_cast<std::size_t>(extents[p])) + 1;
      rest /= static_cast<std::size_t>(extents[p]);
    }
    std::string key;
    for (std::size_t p = 0; p < idx.size(); ++p) key += (p ? "," : "") + std::to_string(idx[p]);
    out[key] = entries[flat].to_string();
  }
  return out;
}

Json echo_model(const Loaded& l) {
  const AlgebroidModel& m = *l.cfg.model;
  Json box = Json::array();
  for (const Interval& iv : m.chart_box()) box.push_back(Json::array({iv.lo, iv.hi}));
  Json j;
  j["origin"] = l.cfg.origin;
  j["name"] = l.cfg.name;
  j["builtin"] = l.cfg.builtin;
  j["base"] = Json{{"n", m.n()}, {"chart_box", box}};
  j["fiber"] = Json{{"r", m.r()}, {"fiber_radius", m.fiber_radius()}};
  j["anchor"] = entries_json(m.rho_all(), {m.n(), m.r()});
  j["bracket"] = entries_json(m.c_all(), {m.r(), m.r(), m.r()});
  j["connection"] = entries_json(m.gamma_all(), {m.r(), m.r(), m.r()});
  if (l.cfg.im_form) {
    const IMForm& f = *l.cfg.im_form;
    j["im_form"] = Json{{"k", f.k}, {"nu_vanishes", f.nu_vanishes()}};
  }
  j["numerics"] = to_json(l.num);
  return j;
}

const IMForm& require_form(const Loaded& l) {
  if (!l.cfg.im_form) throw ConfigError(l.cfg.origin + ": this command needs an [im_form] section");
  return *l.cfg.im_form;
}

bool is_table_input(const std::string& input) {
  return input.rfind("builtin:", 0) == 0 ||
         (input.size() > 4 && input.compare(input.size() - 4, 4, ".tbl") == 0);
}

LocalGroupoidTable load_any_table(const std::string& spec) { return table_from_spec(spec); }

Json echo_table(const std::string& origin, const LocalGroupoidTable& t) {
  return Json{{"origin", origin},
              {"objects", t.object_count()},
              {"arrows", t.arrow_count()},
              {"products", t.product_count()},
              {"total", t.total()}};
}

Json names(const LocalGroupoidTable& t, const std::vector<int>& arrows) {
  Json a = Json::array();
  for (int g : arrows) a.push_back(t.arrow_name(g));
  return a;
}

// --- random samples -----------------------------------------------------------

class Sampler {
 public:
  explicit Sampler(std::uint64_t seed) : rng_(seed) {}

  Vec gaussian(int dim) {
    Vec v(dim);
    for (int i = 0; i < dim; ++i) v[i] = gauss_(rng_);
    return v;
  }
  Vec ball(int dim, double radius) {
    Vec v = gaussian(dim);
    const double norm = v.norm();
    if (norm == 0.0) return v;
    return v * (radius * std::pow(unif_(rng_), 1.0 / dim) / norm);
  }
  Vec base_point(const AlgebroidModel& m) {
    Vec x(m.n());
    for (int i = 0; i < m.n(); ++i) {
      const Interval& iv = m.chart_box()[static_cast<std::size_t>(i)];
      x[i] = 0.5 * (iv.lo + iv.hi) + (unif_(rng_) - 0.5) * 0.5 * (iv.hi - iv.lo);
    }
    return x;
  }
  ArrowPoint arrow(const AlgebroidModel& m, double scale) { return {base_point(m), ball(m.r(), scale)}; }
  TangentOfA tangent(const AlgebroidModel& m) { return {gaussian(m.n()), gaussian(m.r())}; }

 private:
  std::mt19937_64 rng_;
  std::normal_distribution<double> gauss_;
  std::uniform_real_distribution<double> unif_;
};

// --- matrix oracles for Lie algebra models ------------------------------------

Mat ad_matrix(const AlgebroidModel& m, const Vec& a) {
  const int r = m.r();
  const std::vector<double> none;
  Mat ad = Mat::Zero(r, r);
  for (int mm = 0; mm < r; ++mm)
    for (int k = 0; k < r; ++k)
      for (int l = 0; l < r; ++l)
        ad(mm, l) += m.c(mm, k, l).eval(std::span<const double>(none.data(), 0)) * a[k];
  return ad;
}

void require_lie_algebra(const AlgebroidModel& m, const char* oracle) {
  if (m.n() != 0) throw InputError(std::string("--oracle ") + oracle + " needs a Lie algebra model (n = 0)");
}

/// sum_{j=0}^{20} ad_a^j / (j + 1)!
Mat series_oracle(const AlgebroidModel& m, const Vec& a) {
  const Mat ad = ad_matrix(m, a);
  Mat term = Mat::Identity(m.r(), m.r());
  Mat sum = term;
  for (int j = 1; j <= 20; ++j) {
    term = term * ad / static_cast<double>(j + 1);
    sum += term;
  }
  return sum;
}

/// z with ad_z = logm(expm(ad_{v1}) expm(ad_{v2})), solved in least squares.
Vec bch_oracle(const AlgebroidModel& m, const Vec& v1, const Vec& v2) {
  const int r = m.r();
  const Mat prod = ad_matrix(m, v1).exp() * ad_matrix(m, v2).exp();
  const Mat z = prod.log();
  Mat basis(r * r, r);
  for (int k = 0; k < r; ++k) {
    const Mat ad = ad_matrix(m, Vec::Unit(r, k));
    basis.col(k) = Eigen::Map<const Vec>(ad.data(), r * r);
  }
  return basis.colPivHouseholderQr().solve(Eigen::Map<const Vec>(z.data(), r * r));
}

// --- commands -----------------------------------------------------------------

struct PointArgs {
  std::string x;
  std::string xi;
};

void add_point(CLI::App* cmd, PointArgs& p) {
  cmd->add_option("--x", p.x, "base point, comma separated")->default_val("");
  cmd->add_option("--xi", p.xi, "fiber vector, comma separated")->default_val("");
}

ArrowPoint point_of(const AlgebroidModel& m, const PointArgs& p) {
  const Vec x = m.n() == 0 ? Vec(0) : (p.x.empty() ? Vec::Zero(m.n()) : vector_flag(p.x, m.n(), "--x"));
  const Vec xi = p.xi.empty() ? Vec::Zero(m.r()) : vector_flag(p.xi, m.r(), "--xi");
  return {x, xi};
}

void cmd_validate(const std::string& input, const GlobalOptions& g, Report& rep) {
  if (is_table_input(input)) {
    const LocalGroupoidTable t = load_any_table(input);
    rep.config() = echo_table(input, t);
    const TableReport tr = validate_table(t);
    Json violations = Json::array();
    for (const Violation& v : tr.violations)
      violations.push_back(Json{{"axiom", v.axiom}, {"detail", v.detail}, {"witness", names(t, v.witness)}});
    rep.check_true("table_axioms", tr.valid(), tr.valid() ? Json(nullptr) : violations.front());
    rep.results()["violations"] = violations;
    return;
  }
  const Loaded l = load_model(input, g);
  rep.config() = echo_model(l);
  const AxiomReport ar = validate_axioms(*l.cfg.model, l.num.samples, l.num.seed, l.num.axiom_tol);
  rep.check_at_most("antisymmetry", ar.antisymmetry, l.num.axiom_tol);
  rep.check_at_most("anchor_morphism", ar.anchor, l.num.axiom_tol);
  rep.check_at_most("jacobi", ar.jacobi, l.num.axiom_tol);
  rep.results()["points"] = ar.points;
  rep.results()["sections"] = ar.sections;
  rep.results()["max_torsion"] = max_torsion(*l.cfg.model, l.num.samples, l.num.seed);
}

void cmd_spray(const std::string& input, const PointArgs& p, const GlobalOptions& g, Report& rep) {
  const Loaded l = load_model(input, g);
  rep.config() = echo_model(l);
  const AlgebroidModel& m = *l.cfg.model;
  const ArrowPoint a = point_of(m, p);
  m.require_domain(a, "spray");
  const TangentOfA v = spray_field(m, a);
  rep.results()["at"] = to_json(a);
  rep.results()["field"] = Json{{"dx", to_json(v.dx)}, {"dxi", to_json(v.dxi)}};
  rep.check_at_most("homogeneity", homogeneity_residual(m, a, 0.5, 1.0, l.num.rk_step), 1e-6);
  std::vector<double> grid;
  for (int i = 1; i < 10; ++i) grid.push_back(0.1 * i);
  rep.check_at_most("a_path", apath_residual(m, a, grid, l.num.rk_step), 1e-6);
}

void cmd_flow(const std::string& input, const PointArgs& p, double t, const std::vector<std::string>& tangents,
              const GlobalOptions& g, Report& rep) {
  const Loaded l = load_model(input, g);
  rep.config() = echo_model(l);
  const AlgebroidModel& m = *l.cfg.model;
  const ArrowPoint a = point_of(m, p);
  std::vector<TangentOfA> seeds;
  for (const auto& s : tangents) seeds.push_back(tangent_flag(s, m.n(), m.r()));
  const FlowState end = variational_flow(m, a, seeds, t, l.num.rk_step);
  rep.results()["t"] = t;
  rep.results()["point"] = to_json(end.point);
  Json ts = Json::array();
  for (const TangentOfA& v : end.tangents) ts.push_back(Json{{"dx", to_json(v.dx)}, {"dxi", to_json(v.dxi)}});
  if (!seeds.empty()) rep.results()["tangents"] = ts;
  const ArrowPoint back = flow(m, end.point, -t, l.num.rk_step);
  const double err = std::sqrt((back.x - a.x).squaredNorm() + (back.xi - a.xi).squaredNorm());
  rep.check_at_most("reversibility", err, 1e-8);
}

void cmd_mc(const std::string& input, const PointArgs& p, const std::string& oracle, const GlobalOptions& g,
            Report& rep) {
  const Loaded l = load_model(input, g);
  rep.config() = echo_model(l);
  const AlgebroidModel& m = *l.cfg.model;
  const ArrowPoint a = point_of(m, p);
  const MCMatrix mc = mc_matrix(m, a, l.num);
  rep.results()["at"] = to_json(a);
  rep.results()["matrix"] = to_json(mc.entries);
  rep.check_at_most("condition", mc.cond, l.num.cond_max);
  if (a.xi.norm() == 0.0)
    rep.check_at_most("identity_at_unit", (mc.entries - Mat::Identity(m.r(), m.r())).norm(), 1e-12);
  if (oracle == "series") {
    require_lie_algebra(m, "series");
    const Mat ref = series_oracle(m, a.xi);
    rep.results()["oracle"] = to_json(ref);
    rep.check_at_most("series_oracle_rel_error", (mc.entries - ref).norm() / ref.norm(), 1e-6);
  } else if (!oracle.empty()) {
    throw InputError("mc: unknown oracle '" + oracle + "' (expected: series)");
  }
}

void cmd_multiply(const std::string& input, const std::string& x, const std::string& v1s, const std::string& v2s,
                  const std::string& oracle, const GlobalOptions& g, Report& rep) {
  const Loaded l = load_model(input, g);
  rep.config() = echo_model(l);
  const AlgebroidModel& m = *l.cfg.model;
  const Vec x1 = m.n() == 0 ? Vec(0) : (x.empty() ? Vec::Zero(m.n()) : vector_flag(x, m.n(), "--x"));
  const ArrowPoint v1{x1, vector_flag(v1s, m.r(), "--v1")};
  const ArrowPoint v2{source(m, v1, l.num), vector_flag(v2s, m.r(), "--v2")};
  const ArrowPoint prod = multiply(m, v1, v2, l.num);
  rep.results()["first"] = to_json(v1);
  rep.results()["second"] = to_json(v2);
  rep.results()["product"] = to_json(prod);
  rep.check_at_most("target_preserved", (target(m, prod) - target(m, v1)).norm(), 0.0);
  rep.check_at_most("source_preserved", (source(m, prod, l.num) - source(m, v2, l.num)).norm(), 1e-5);
  if (oracle == "matrix") {
    require_lie_algebra(m, "matrix");
    const Vec ref = bch_oracle(m, v1.xi, v2.xi);
    rep.results()["oracle"] = to_json(ref);
    rep.check_at_most("matrix_oracle_diff", (prod.xi - ref).norm(), 1e-5);
  } else if (!oracle.empty()) {
    throw InputError("multiply: unknown oracle '" + oracle + "' (expected: matrix)");
  }
}

void cmd_assoc(const std::string& input, int pairs, int triples, double scale, const GlobalOptions& g,
               Report& rep) {
  const Loaded l = load_model(input, g);
  rep.config() = echo_model(l);
  const LocalAxiomReport ar = local_axiom_residuals(*l.cfg.model, pairs, triples, scale, l.num.seed, l.num);
  rep.results()["pairs"] = ar.pairs;
  rep.results()["triples"] = ar.triples;
  rep.results()["skipped"] = ar.skipped;
  rep.results()["fiber_scale"] = scale;
  rep.check_at_most("A1_target", ar.a1_target, 0.0);
  rep.check_at_most("A1_source", ar.a1_source, 1e-5);
  rep.check_at_most("A2", ar.a2, 1e-4);
  rep.check_at_most("A3", ar.a3, 1e-6);
  rep.check_at_most("A4", ar.a4, 1e-5);
  rep.check_at_most("A5", ar.a5, 1e-5);
  rep.check_true("samples_in_domain", ar.pairs + ar.triples > 0);
}

void cmd_im_check(const std::string& input, int sections, double inject_nu, const GlobalOptions& g, Report& rep) {
  const Loaded l = load_model(input, g);
  rep.config() = echo_model(l);
  const AlgebroidModel& m = *l.cfg.model;
  IMForm f = require_form(l);
  if (inject_nu != 0.0) {
    if (f.nu_index.empty()) throw InputError("--inject-nu: this form has no nu components (k > n)");
    f.nu[0][0] = f.nu[0][0] + Expression::constant(inject_nu, m.n());
    rep.results()["injected_nu"] = inject_nu;
  }
  std::mt19937_64 rng(l.num.seed);
  const auto secs = random_sections(m.n(), m.r(), sections, rng);
  const IMResidualReport ir = im_residuals(m, f, secs, sample_points(m, l.num.samples));
  rep.results()["points"] = ir.points;
  rep.results()["pairs"] = ir.pairs;
  rep.check_at_most("IM0", ir.im0, 1e-7);
  rep.check_at_most("IM1", ir.im1, 1e-7);
  rep.check_at_most("IM2", ir.im2, 1e-7);
}

void cmd_omega(const std::string& input, const PointArgs& p, const std::vector<std::string>& tangents, bool matrix,
               const GlobalOptions& g, Report& rep) {
  const Loaded l = load_model(input, g);
  rep.config() = echo_model(l);
  const AlgebroidModel& m = *l.cfg.model;
  const IMForm& f = require_form(l);
  const ArrowPoint a = point_of(m, p);
  rep.results()["at"] = to_json(a);
  if (!tangents.empty()) {
    if (static_cast<int>(tangents.size()) != f.k)
      throw InputError("omega: need exactly " + std::to_string(f.k) + " --tangent values");
    std::vector<TangentOfA> vs;
    for (const auto& s : tangents) vs.push_back(tangent_flag(s, m.n(), m.r()));
    rep.results()["omega"] = integrate_form(m, f, a, vs, l.num);
    rep.results()["linear_form"] = linear_form_eval(m, f, a, vs);
  }
  if (matrix) {
    if (f.k != 2) throw InputError("omega --matrix needs k = 2");
    const Mat om = form_matrix(m, f, a, l.num);
    rep.results()["matrix"] = to_json(om);
    rep.results()["determinant"] = om.determinant();
  }
  if (tangents.empty() && !matrix) throw InputError("omega: give --tangent values or --matrix");
}

void cmd_mult_check(const std::string& input, int samples, double scale, const GlobalOptions& g, Report& rep) {
  const Loaded l = load_model(input, g);
  rep.config() = echo_model(l);
  const AlgebroidModel& m = *l.cfg.model;
  const IMForm& f = require_form(l);
  Sampler rng(l.num.seed);
  double mult = 0.0, closed = 0.0, sigma = 0.0, min_det = std::numeric_limits<double>::infinity();
  Json worst = nullptr;
  for (int s = 0; s < samples; ++s) {
    const ArrowPoint v1 = rng.arrow(m, scale);
    const ArrowPoint v2{source(m, v1, l.num), rng.ball(m.r(), scale)};
    std::vector<TangentPair> pairs;
    for (int q = 0; q < f.k; ++q) pairs.push_back({rng.tangent(m), rng.tangent(m)});
    const double res = multiplicativity_residual(m, f, v1, v2, pairs, l.num);
    if (res >= mult) {
      mult = res;
      worst = Json{{"first", to_json(v1)}, {"second", to_json(v2)}};
    }
    if (f.nu_vanishes()) {
      std::vector<TangentOfA> vs;
      for (int q = 0; q <= f.k; ++q) vs.push_back(rng.tangent(m));
      closed = std::max(closed, closedness_residual(m, f, v1, vs, l.num));
    }
    sigma = std::max(sigma, sigma_roundtrip(m, f, v1.x, l.num));
    if (f.k == 2 && (m.n() + m.r()) % 2 == 0) {
      const ArrowPoint near{v1.x, v1.xi * 0.1};
      min_det = std::min(min_det, std::abs(form_matrix(m, f, near, l.num).determinant()));
    }
  }
  rep.results()["samples"] = samples;
  rep.results()["fiber_scale"] = scale;
  rep.check_at_most("multiplicativity", mult, 1e-4, worst);
  if (f.nu_vanishes()) rep.check_at_most("closedness", closed, 1e-4);
  rep.check_at_most("sigma_roundtrip", sigma, 1e-6);
  if (std::isfinite(min_det)) rep.check_at_least("nondegeneracy_near_units", min_det, 1e-3);
}

void cmd_word_forms(const std::string& input, int length, int samples, double scale, const GlobalOptions& g,
                    Report& rep) {
  const Loaded l = load_model(input, g);
  rep.config() = echo_model(l);
  const AlgebroidModel& m = *l.cfg.model;
  const IMForm& f = require_form(l);
  if (length < 2) throw InputError("word-forms: --length must be >= 2");
  Sampler rng(l.num.seed);
  double face = 0.0, degeneracy = 0.0;
  Json values = Json::array();
  for (int s = 0; s < samples; ++s) {
    std::vector<Vec> fibers;
    std::vector<std::vector<Vec>> fiber_tangents(static_cast<std::size_t>(length));
    std::vector<Vec> base_tangents;
    const Vec x0 = rng.base_point(m);
    for (int q = 0; q < f.k; ++q) base_tangents.push_back(rng.gaussian(m.n()));
    for (int j = 0; j < length; ++j) {
      fibers.push_back(rng.ball(m.r(), scale));
      for (int q = 0; q < f.k; ++q) fiber_tangents[static_cast<std::size_t>(j)].push_back(rng.gaussian(m.r()));
    }
    const ComposableTuple w = compose_chain(m, x0, fibers, base_tangents, fiber_tangents, l.num);
    values.push_back(word_form_value(m, f, w, l.num));
    for (int i = 1; i < length; ++i) face = std::max(face, face_invariance_residual(m, f, w, i, l.num));
    for (int j = 0; j <= length; ++j) degeneracy = std::max(degeneracy, degeneracy_residual(m, f, w, j, l.num));
  }
  rep.results()["length"] = length;
  rep.results()["samples"] = samples;
  rep.results()["fiber_scale"] = scale;
  rep.results()["values"] = values;
  rep.check_at_most("face_invariance", face, 1e-4);
  rep.check_at_most("degeneracy", degeneracy, 1e-4);
}

Json class_json(const LocalGroupoidTable& t, const ACClass& c) {
  Json j{{"id", c.id},
         {"representative", format_word(t, c.representative)},
         {"target", t.object_name(c.target)},
         {"source", t.object_name(c.source)},
         {"words", c.words}};
  return j;
}

void cmd_ac(const std::string& input, int max_len, int explore, Report& rep) {
  const LocalGroupoidTable t = load_any_table(input);
  rep.config() = echo_table(input, t);
  const int lmax = explore > 0 ? explore : std::max(10, max_len);
  rep.config()["length_bound"] = max_len;
  rep.config()["exploration_bound"] = lmax;
  const ACClassification ac = ac_quotient(t, max_len, lmax);
  Json classes = Json::array();
  for (const ACClass& c : ac.classes()) classes.push_back(class_json(t, c));
  rep.results()["class_count"] = ac.classes().size();
  rep.results()["classes"] = classes;
  // Products of classes whose concatenation stays in the explored graph.
  Json products = Json::array();
  const int k = static_cast<int>(ac.classes().size());
  if (k <= 64) {
    for (int a = 0; a < k; ++a) {
      Json row = Json::array();
      for (int b = 0; b < k; ++b) {
        const auto p = ac.classes()[static_cast<std::size_t>(a)].source ==
                               ac.classes()[static_cast<std::size_t>(b)].target
                           ? ac.product(a, b)
                           : std::nullopt;
        row.push_back(p ? Json(*p) : Json(nullptr));
      }
      products.push_back(row);
    }
    rep.results()["products"] = products;
  }
  rep.check_true("stable", ac.stable());
}

void cmd_associators(const std::string& input, int explore, bool expect_empty, Report& rep) {
  const LocalGroupoidTable t = load_any_table(input);
  rep.config() = echo_table(input, t);
  rep.config()["exploration_bound"] = explore;
  const std::vector<int> found = associators(t, explore);
  rep.results()["associators"] = names(t, found);
  if (expect_empty) rep.check_true("associators_empty", found.empty(), found.empty() ? Json(nullptr) : names(t, found));
}

void cmd_global_assoc(const std::string& input, int order, Report& rep) {
  const LocalGroupoidTable t = load_any_table(input);
  rep.config() = echo_table(input, t);
  rep.config()["order"] = order;
  const AssociativityResult res = global_associativity_check(t, order);
  rep.results()["words_checked"] = res.words_checked;
  Json witness = nullptr;
  if (res.counterexample) {
    const auto& c = *res.counterexample;
    witness = Json{{"word", format_word(t, c.word)},
                   {"first", t.arrow_name(c.first)},
                   {"first_bracketing", c.first_bracketing},
                   {"second", t.arrow_name(c.second)},
                   {"second_bracketing", c.second_bracketing}};
  }
  rep.check_true("associative", res.ok(), witness);
}

std::vector<int> window_from_names(const LocalGroupoidTable& group, const std::vector<std::string>& wanted) {
  std::vector<int> out;
  for (const std::string& name : wanted) {
    const auto a = group.find_arrow(name);
    if (!a) throw InputError("window arrow '" + name + "' is not in the group table");
    out.push_back(*a);
  }
  for (int o = 0; o < group.object_count(); ++o)
    if (group.unit(o) != LocalGroupoidTable::kUndefined) out.push_back(group.unit(o));
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

void cmd_full_check(const std::string& input, const std::string& window, const std::string& window_from, int max_len,
                    int explore, const std::string& expect, Report& rep) {
  const LocalGroupoidTable group = load_any_table(input);
  rep.config() = echo_table(input, group);
  std::vector<std::string> wanted;
  if (!window_from.empty()) {
    const LocalGroupoidTable w = load_any_table(window_from);
    for (int a = 0; a < w.arrow_count(); ++a) wanted.push_back(w.arrow_name(a));
    rep.config()["window_from"] = window_from;
  } else {
    std::stringstream ss(window);
    std::string item;
    while (std::getline(ss, item, ',')) {
      item.erase(0, item.find_first_not_of(" \t"));
      item.erase(item.find_last_not_of(" \t") + 1);
      if (!item.empty()) wanted.push_back(item);
    }
  }
  if (wanted.empty()) throw InputError("full-check: give --window or --window-from");
  const std::vector<int> win = window_from_names(group, wanted);
  rep.config()["window"] = names(group, win);
  rep.config()["length_bound"] = max_len;
  rep.config()["exploration_bound"] = explore;
  const FullCheckResult res = full_check(group, win, max_len, explore);
  Json& out = rep.results();
  out["verdict"] = to_string(res.verdict);
  out["surjective"] = res.surjective;
  out["injective"] = res.injective;
  out["classes"] = res.classes;
  out["unreached"] = names(group, res.unreached);
  if (res.collision) {
    out["collision"] = Json{{"first", format_word(group, res.collision->first)},
                            {"second", format_word(group, res.collision->second)},
                            {"image", group.arrow_name(res.image)}};
  }
  rep.check_true("stable", res.stable);
  if (!expect.empty()) rep.check_equal("verdict", to_string(res.verdict), expect);
}

void cmd_search(int size, std::uint64_t budget, const std::string& out_path, const GlobalOptions& g, Report& rep) {
  const std::uint64_t seed = g.seed.value_or(Numerics{}.seed);
  rep.config() = Json{{"size_bound", size}, {"budget", budget}, {"seed", seed}};
  const SearchResult res = counterexample_search(size, budget, seed);
  rep.results()["exhaustive"] = res.exhaustive;
  rep.results()["attempts"] = res.attempts;
  Json witness = nullptr;
  if (res.found()) {
    const LocalGroupoidTable& t = *res.table;
    rep.results()["arrows"] = t.arrow_count();
    rep.results()["table"] = format_table(t);
    if (res.witness)
      witness = Json{{"word", format_word(t, res.witness->word)},
                     {"first_bracketing", res.witness->first_bracketing},
                     {"second_bracketing", res.witness->second_bracketing}};
    if (!out_path.empty()) {
      std::ofstream os(out_path);
      if (!os) throw InputError("cannot write '" + out_path + "'");
      os << format_table(t);
    }
  }
  rep.results()["found"] = res.found();
  if (res.found()) {
    rep.check_true("found_table_valid", validate_table(*res.table).valid());
    rep.check_true("not_4_associative", !global_associativity_check(*res.table, 4).ok(), witness);
  }
}

}  // namespace

int run(int argc, char** argv) {
  CLI::App app{"Spray groupoids, multiplicative forms and associative completions."};
  app.require_subcommand(1, 1);
  app.fallthrough();
  GlobalOptions g;
  app.add_flag("--json", g.json, "print the report as JSON");
  app.add_flag("--timing", g.timing, "add wall time to the report (breaks byte-identical output)");
  app.add_option("--rk-step", g.rk_step, "RK4 step (default 1e-3)");
  app.add_option("--quad-nodes", g.quad_nodes, "Simpson nodes, odd (default 33)");
  app.add_option("--fd-step", g.fd_step, "finite-difference step (default 1e-5)");
  app.add_option("--mc-substeps", g.mc_substeps, "RK4 steps per Simpson panel (default 2)");
  app.add_option("--samples", g.samples, "sample points for axiom checks (default 64)");
  app.add_option("--seed", g.seed, "random seed (default 20240917)");
  app.add_option("--transport-sign", g.transport_sign, "override the fiber transport sign (+1 or -1)");

  std::string input;
  PointArgs point;
  std::string oracle, v1, v2, window, window_from, expect, out_path;
  std::vector<std::string> tangents;
  double t = 1.0, scale = 0.3, inject_nu = 0.0;
  int pairs = 4, triples = 2, sections = 3, length = 3, word_samples = 2, mult_samples = 3;
  int ac_len = 6, ac_explore = 0, assoc_explore = 10, full_len = 4, full_explore = 10, order = 6, size = 12;
  std::uint64_t budget = 100000;
  bool matrix = false, expect_empty = false;

  auto* validate = app.add_subcommand("validate", "check algebroid axioms of a model, or A1-A5 of a table");
  validate->add_option("input", input, "model (.toml) or table (.tbl, builtin:...)")->required();

  auto* spray = app.add_subcommand("spray", "spray field at a point with homogeneity and A-path checks");
  spray->add_option("config", input)->required();
  add_point(spray, point);

  auto* flowc = app.add_subcommand("flow", "time-t spray flow, optionally with variational tangents");
  flowc->add_option("config", input)->required();
  add_point(flowc, point);
  flowc->add_option("--t", t, "flow time")->default_val(1.0);
  flowc->add_option("--tangent", tangents, "seed tangent \"dx|dxi\" (repeatable)");

  auto* mc = app.add_subcommand("mc", "Maurer-Cartan matrix at a point");
  mc->add_option("config", input)->required();
  add_point(mc, point);
  mc->add_option("--oracle", oracle, "series: compare with sum ad^j/(j+1)! (Lie algebra models)");

  auto* mult = app.add_subcommand("multiply", "product of (x, v1) with (source, v2)");
  mult->add_option("config", input)->required();
  mult->add_option("--x", point.x, "base point of the first arrow")->default_val("");
  mult->add_option("--v1", v1, "fiber part of the first arrow")->required();
  mult->add_option("--v2", v2, "fiber part of the second arrow")->required();
  mult->add_option("--oracle", oracle, "matrix: compare with logm(expm(ad v1) expm(ad v2))");

  auto* assoc = app.add_subcommand("assoc-check", "sampled local groupoid axioms A1-A5");
  assoc->add_option("config", input)->required();
  assoc->add_option("--pairs", pairs, "composable pairs (A1, A3-A5)")->default_val(4);
  assoc->add_option("--triples", triples, "composable triples (A2)")->default_val(2);
  assoc->add_option("--scale", scale, "fiber radius of the samples")->default_val(0.3);

  auto* im = app.add_subcommand("im-check", "IM equations of the configured form");
  im->add_option("config", input)->required();
  im->add_option("--sections", sections, "random sections")->default_val(3);
  im->add_option("--inject-nu", inject_nu, "add a constant to the first nu coefficient")->default_val(0.0);

  auto* omega = app.add_subcommand("omega", "multiplicative form at a point");
  omega->add_option("config", input)->required();
  add_point(omega, point);
  omega->add_option("--tangent", tangents, "tangent \"dx|dxi\" (k of them)");
  omega->add_flag("--matrix", matrix, "matrix of a 2-form on the coordinate basis");

  auto* mcheck = app.add_subcommand("mult-check", "multiplicativity, closedness, sigma roundtrip, nondegeneracy");
  mcheck->add_option("config", input)->required();
  mcheck->add_option("--pairs", mult_samples, "sampled pairs")->default_val(3);
  mcheck->add_option("--scale", scale, "fiber radius of the samples")->default_val(0.3);

  auto* words = app.add_subcommand("word-forms", "face and degeneracy invariance of word forms");
  words->add_option("config", input)->required();
  words->add_option("--length", length, "word length")->default_val(3);
  words->add_option("--words", word_samples, "sampled words")->default_val(2);
  words->add_option("--scale", scale, "fiber radius of the samples")->default_val(0.3);

  auto* ac = app.add_subcommand("ac", "associative completion classes");
  ac->add_option("table", input)->required();
  ac->add_option("--max-len", ac_len, "length bound L")->default_val(6);
  ac->add_option("--explore", ac_explore, "exploration bound (default max(10, L))")->default_val(0);

  auto* assocs = app.add_subcommand("associators", "non-unit loops equivalent to units");
  assocs->add_option("table", input)->required();
  assocs->add_option("--explore", assoc_explore, "exploration bound")->default_val(10);
  assocs->add_flag("--expect-empty", expect_empty, "fail when an associator is found");

  auto* gassoc = app.add_subcommand("global-assoc", "n-associativity up to an order");
  gassoc->add_option("table", input)->required();
  gassoc->add_option("--order", order, "largest word length")->default_val(6);

  auto* full = app.add_subcommand("full-check", "compare AC(window) with the ambient group");
  full->add_option("group", input)->required();
  full->add_option("--window", window, "comma separated arrow names (units are added)");
  full->add_option("--window-from", window_from, "take the window from the arrow names of a table");
  full->add_option("--max-len", full_len, "length bound L")->default_val(4);
  full->add_option("--explore", full_explore, "exploration bound")->default_val(10);
  full->add_option("--expect", expect, "iso | proper_cover | proper_embedding | neither");

  auto* search = app.add_subcommand("search-counterexample", "valid table that is not 4-associative");
  search->add_option("--size", size, "arrow bound")->default_val(12);
  search->add_option("--budget", budget, "insertion attempts")->default_val(100000);
  search->add_option("--out", out_path, "write the table found");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitInput;
  }

  const CLI::App* cmd = app.get_subcommands().front();
  Report rep(cmd->get_name());
  const auto start = std::chrono::steady_clock::now();
  try {
    const std::string name = cmd->get_name();
    if (name == "validate") cmd_validate(input, g, rep);
    else if (name == "spray") cmd_spray(input, point, g, rep);
    else if (name == "flow") cmd_flow(input, point, t, tangents, g, rep);
    else if (name == "mc") cmd_mc(input, point, oracle, g, rep);
    else if (name == "multiply") cmd_multiply(input, point.x, v1, v2, oracle, g, rep);
    else if (name == "assoc-check") cmd_assoc(input, pairs, triples, scale, g, rep);
    else if (name == "im-check") cmd_im_check(input, sections, inject_nu, g, rep);
    else if (name == "omega") cmd_omega(input, point, tangents, matrix, g, rep);
    else if (name == "mult-check") cmd_mult_check(input, mult_samples, scale, g, rep);
    else if (name == "word-forms") cmd_word_forms(input, length, word_samples, scale, g, rep);
    else if (name == "ac") cmd_ac(input, ac_len, ac_explore, rep);
    else if (name == "associators") cmd_associators(input, assoc_explore, expect_empty, rep);
    else if (name == "global-assoc") cmd_global_assoc(input, order, rep);
    else if (name == "full-check") cmd_full_check(input, window, window_from, full_len, full_explore, expect, rep);
    else if (name == "search-counterexample") cmd_search(size, budget, out_path, g, rep);
  } catch (const InputError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitInput;
  } catch (const Error& e) {
    const std::string& kind = e.kind();
    if (kind == "ConfigError" || kind == "SyntaxError" || kind == "UnknownIdentifier" || kind == "ArityError" ||
        kind == "MalformedTable" || kind == "InvalidParams" || kind == "PreconditionError") {
      std::cerr << "error: " << kind << ": " << e.what() << '\n';
      return kExitInput;
    }
    rep.set_error(kind, e.what());
  }
  if (g.timing) rep.set_wall_time(std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count());
  if (g.json)
    rep.write_json(std::cout);
  else
    rep.write_text(std::cout);
  if (!rep.passed()) {
    const Json doc = rep.finish();
    for (const auto& c : doc["checks"])
      if (!c["pass"].get<bool>()) std::cerr << "failed check: " << c["name"].get<std::string>() << '\n';
    return kExitFail;
  }
  return 0;
}

}  // namespace sprayoid::cli

int main(int argc, char** argv) { return sprayoid::cli::run(argc, argv); }
