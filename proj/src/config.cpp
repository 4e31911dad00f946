#include "sprayoid/config.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#define TOML_EXCEPTIONS 1
#include <toml.hpp>

#include "sprayoid/errors.hpp"

namespace sprayoid {

namespace {

std::string trim(std::string_view s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return std::string(s.substr(b, e - b));
}

std::vector<std::string> split(std::string_view text, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  for (;;) {
    const std::size_t at = text.find(sep, start);
    out.push_back(trim(text.substr(start, at == std::string_view::npos ? std::string_view::npos : at - start)));
    if (at == std::string_view::npos) break;
    start = at + 1;
  }
  return out;
}

double parse_real(const std::string& s, const std::string& what) {
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size() || s.empty())
    throw ConfigError(what + ": '" + s + "' is not a real number");
  return v;
}

int parse_index(const std::string& s, int limit, const std::string& what) {
  int v = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size() || s.empty())
    throw ConfigError(what + ": '" + s + "' is not an index");
  if (v < 1 || v > limit) throw ConfigError(what + ": index " + s + " outside 1.." + std::to_string(limit));
  return v - 1;
}

void only_keys(const toml::table& t, std::initializer_list<std::string_view> allowed, const std::string& where) {
  const std::set<std::string_view> ok(allowed);
  for (auto&& [k, v] : t) {
    (void)v;
    if (!ok.count(k.str())) throw ConfigError("unknown key '" + std::string(k.str()) + "' in " + where);
  }
}

const toml::table* section(const toml::table& root, std::string_view key) {
  const toml::node* n = root.get(key);
  if (!n) return nullptr;
  const toml::table* t = n->as_table();
  if (!t) throw ConfigError("[" + std::string(key) + "] must be a table");
  return t;
}

template <class T>
std::optional<T> scalar(const toml::table& t, std::string_view key, const std::string& where) {
  const toml::node* n = t.get(key);
  if (!n) return std::nullopt;
  if constexpr (std::is_same_v<T, std::string>) {
    if (auto s = n->value<std::string>()) return *s;
  } else if constexpr (std::is_same_v<T, bool>) {
    if (auto b = n->value<bool>()) return *b;
  } else if constexpr (std::is_integral_v<T>) {
    if (n->is_integer()) return static_cast<T>(*n->value<std::int64_t>());
  } else {
    if (auto d = n->value<double>()) return *d;
  }
  throw ConfigError(where + "." + std::string(key) + " has the wrong type");
}

Interval parse_interval(const std::string& text, const std::string& where) {
  const auto parts = split(text, ',');
  if (parts.size() != 2) throw ConfigError(where + ": expected \"lo,hi\"");
  const Interval iv{parse_real(parts[0], where), parse_real(parts[1], where)};
  if (!(iv.lo < iv.hi)) throw ConfigError(where + ": empty interval");
  return iv;
}

std::optional<std::vector<Interval>> parse_box(const toml::table& base, int n) {
  const toml::node* node = base.get("chart_box");
  if (!node) return std::nullopt;
  if (auto s = node->value<std::string>()) return std::vector<Interval>(static_cast<std::size_t>(n), parse_interval(*s, "base.chart_box"));
  const toml::array* arr = node->as_array();
  if (!arr) throw ConfigError("base.chart_box must be a string or an array of strings");
  if (static_cast<int>(arr->size()) != n) throw ConfigError("base.chart_box needs one interval per coordinate");
  std::vector<Interval> box;
  for (const auto& item : *arr) {
    const auto s = item.value<std::string>();
    if (!s) throw ConfigError("base.chart_box entries must be strings \"lo,hi\"");
    box.push_back(parse_interval(*s, "base.chart_box"));
  }
  return box;
}

// Reads "i,j,..." keyed expressions into a dense array with the given extents.
std::vector<Expression> read_entries(const toml::table& t, const std::vector<int>& extents, int n,
                                     const std::string& where, std::vector<char>* given = nullptr) {
  std::size_t total = 1;
  for (int e : extents) total *= static_cast<std::size_t>(e);
  std::vector<Expression> out(total, Expression::constant(0.0, n));
  if (given) given->assign(total, 0);
  for (auto&& [k, v] : t) {
    const std::string key(k.str());
    const auto parts = split(key, ',');
    if (parts.size() != extents.size())
      throw ConfigError(where + ": key \"" + key + "\" needs " + std::to_string(extents.size()) + " indices");
    std::size_t flat = 0;
    for (std::size_t p = 0; p < parts.size(); ++p)
      flat = flat * static_cast<std::size_t>(extents[p]) +
             static_cast<std::size_t>(parse_index(parts[p], extents[p], where + " \"" + key + "\""));
    std::string text;
    if (auto s = v.value<std::string>())
      text = *s;
    else if (auto d = v.value<double>())
      text = std::to_string(*d);
    else
      throw ConfigError(where + " \"" + key + "\": expected an expression string");
    out[flat] = parse_expr(text, n);
    if (given) (*given)[flat] = 1;
  }
  return out;
}

IMForm read_im_form(const toml::table& t, int n, int r) {
  only_keys(t, {"k", "identity_sigma", "sigma", "nu"}, "[im_form]");
  const int k = scalar<int>(t, "k", "im_form").value_or(2);
  if (k < 1) throw ConfigError("im_form.k must be >= 1");
  if (scalar<bool>(t, "identity_sigma", "im_form").value_or(false)) {
    if (k != 2 || r != n) throw ConfigError("identity_sigma needs k = 2 and r = n");
    if (t.get("sigma") || t.get("nu")) throw ConfigError("identity_sigma excludes explicit sigma / nu entries");
    return identity_sigma_form(n);
  }
  IMForm f = IMForm::zero(k, n, r);
  const auto fill = [&](const char* key, std::vector<std::vector<Expression>>& target,
                        const std::vector<std::vector<int>>& index) {
    const toml::table* sec = section(t, key);
    if (!sec) return;
    for (auto&& [kk, v] : *sec) {
      const std::string spec(kk.str());
      const auto colon = spec.find(':');
      const std::string where = std::string("im_form.") + key + " \"" + spec + "\"";
      if (colon == std::string::npos) throw ConfigError(where + ": expected \"r:i1,i2,...\"");
      const int row = parse_index(trim(spec.substr(0, colon)), r, where);
      std::vector<int> multi;
      const std::string rest = trim(spec.substr(colon + 1));
      if (!rest.empty())
        for (const auto& p : split(rest, ',')) multi.push_back(parse_index(p, n, where));
      const auto it = std::find(index.begin(), index.end(), multi);
      if (it == index.end()) throw ConfigError(where + ": not a strictly increasing multi-index of the right length");
      const auto s = v.value<std::string>();
      if (!s) throw ConfigError(where + ": expected an expression string");
      target[static_cast<std::size_t>(row)][static_cast<std::size_t>(it - index.begin())] = parse_expr(*s, n);
    }
  };
  fill("sigma", f.sigma, f.sigma_index);
  fill("nu", f.nu, f.nu_index);
  return f;
}

Numerics read_numerics(const toml::table& t) {
  only_keys(t,
            {"rk_step", "quad_nodes", "fd_step", "mc_substeps", "match_tol", "cond_max", "axiom_tol", "samples", "seed",
             "transport_sign"},
            "[numerics]");
  Numerics num;
  const std::string w = "numerics";
  if (auto v = scalar<double>(t, "rk_step", w)) num.rk_step = *v;
  if (auto v = scalar<int>(t, "quad_nodes", w)) num.quad_nodes = *v;
  if (auto v = scalar<double>(t, "fd_step", w)) num.fd_step = *v;
  if (auto v = scalar<int>(t, "mc_substeps", w)) num.mc_substeps = *v;
  if (auto v = scalar<double>(t, "match_tol", w)) num.match_tol = *v;
  if (auto v = scalar<double>(t, "cond_max", w)) num.cond_max = *v;
  if (auto v = scalar<double>(t, "axiom_tol", w)) num.axiom_tol = *v;
  if (auto v = scalar<int>(t, "samples", w)) num.samples = *v;
  if (auto v = scalar<std::int64_t>(t, "seed", w)) num.seed = static_cast<std::uint64_t>(*v);
  if (auto v = scalar<int>(t, "transport_sign", w)) num.transport_sign = *v;
  try {
    num.check();
  } catch (const InvalidParams& e) {
    throw ConfigError(std::string("numerics: ") + e.what());
  }
  return num;
}

}  // namespace

Vec parse_vector(std::string_view text) {
  const std::string t = trim(text);
  if (t.empty()) return Vec(0);
  const auto parts = split(t, ',');
  Vec v(static_cast<Eigen::Index>(parts.size()));
  for (std::size_t i = 0; i < parts.size(); ++i) v[static_cast<Eigen::Index>(i)] = parse_real(parts[i], "vector");
  return v;
}

ModelConfig parse_model_config(std::string_view text, const std::string& origin) {
  toml::table root;
  try {
    root = toml::parse(text, origin);
  } catch (const toml::parse_error& e) {
    std::ostringstream os;
    os << origin << ":" << e.source().begin.line << ":" << e.source().begin.column << ": " << e.description();
    throw ConfigError(os.str());
  }
  only_keys(root, {"name", "builtin", "base", "fiber", "anchor", "bracket", "connection", "im_form", "numerics"},
            "the top level");
  ModelConfig cfg;
  cfg.origin = origin;
  cfg.builtin = scalar<std::string>(root, "builtin", "").value_or("");
  cfg.name = scalar<std::string>(root, "name", "").value_or(cfg.builtin.empty() ? "model" : cfg.builtin);

  const toml::table empty;
  const toml::table* base = section(root, "base");
  const toml::table* fiber = section(root, "fiber");
  if (base) only_keys(*base, {"n", "chart_box"}, "[base]");
  if (fiber) only_keys(*fiber, {"r", "fiber_radius"}, "[fiber]");
  // -1 and NaN mark absent entries.
  const int n = base ? scalar<int>(*base, "n", "base").value_or(-1) : -1;
  const int r = fiber ? scalar<int>(*fiber, "r", "fiber").value_or(-1) : -1;
  const double radius =
      fiber ? scalar<double>(*fiber, "fiber_radius", "fiber").value_or(std::nan("")) : std::nan("");
  if (!std::isnan(radius) && !(radius > 0.0)) throw ConfigError("fiber.fiber_radius must be positive");
  const auto radius_or = [radius](double fallback) { return std::isnan(radius) ? fallback : radius; };

  const toml::table* anchor = section(root, "anchor");
  const toml::table* bracket = section(root, "bracket");
  const toml::table* connection = section(root, "connection");

  std::shared_ptr<AlgebroidModel> model;
  if (!cfg.builtin.empty()) {
    if (anchor || bracket || connection)
      throw ConfigError("builtin models take no [anchor], [bracket] or [connection] sections");
    const std::string& b = cfg.builtin;
    if (b == "so3" || b == "sl2") {
      if (n >= 0 && n != 0) throw ConfigError(b + " has a zero-dimensional base");
      if (r >= 0 && r != 3) throw ConfigError(b + " has rank 3");
      model = std::make_shared<AlgebroidModel>(
          lie_algebra_model(cfg.name, 3, b == "so3" ? so3_structure_constants() : sl2_structure_constants(),
                            radius_or(4.0)));
    } else if (b == "so3_dual") {
      if ((n >= 0 && n != 3) || (r >= 0 && r != 3)) throw ConfigError("so3_dual has n = r = 3");
      auto box = base ? parse_box(*base, 3) : std::nullopt;
      model = std::make_shared<AlgebroidModel>(so3_dual_model(box.value_or(std::vector<Interval>{}), radius_or(2.0)));
    } else if (b == "tangent" || b == "zero_poisson") {
      const int dim = n >= 0 ? n : 2;
      if (dim < 1 || dim > 8) throw ConfigError(b + ": base.n must lie in 1..8");
      if (r >= 0 && r != dim) throw ConfigError(b + " has r = n");
      auto box = base ? parse_box(*base, dim) : std::nullopt;
      if (b == "tangent") {
        model = std::make_shared<AlgebroidModel>(tangent_model(dim, box.value_or(std::vector<Interval>{}), radius_or(4.0)));
      } else {
        const std::vector<Expression> pi(static_cast<std::size_t>(dim * dim), Expression::constant(0.0, dim));
        model = std::make_shared<AlgebroidModel>(
            cotangent_poisson_model(cfg.name, dim, pi, box.value_or(std::vector<Interval>{}), radius_or(2.0)));
      }
    } else {
      throw ConfigError("unknown builtin '" + b + "'");
    }
  } else {
    if (n < 0 || r < 0) throw ConfigError("explicit models need base.n and fiber.r");
    if (n > 8 || r < 1 || r > 8) throw ConfigError("need 0 <= n <= 8 and 1 <= r <= 8");
    const auto rho = read_entries(anchor ? *anchor : empty, {n, r}, n, "anchor");
    std::vector<char> given;
    auto c = read_entries(bracket ? *bracket : empty, {r, r, r}, n, "bracket", &given);
    for (int m = 0; m < r; ++m)
      for (int k = 0; k < r; ++k)
        for (int l = 0; l < r; ++l) {
          const std::size_t kl = static_cast<std::size_t>((m * r + k) * r + l);
          const std::size_t lk = static_cast<std::size_t>((m * r + l) * r + k);
          if (given[kl] && !given[lk]) {
            c[lk] = -c[kl];
            given[lk] = 1;
          }
        }
    std::vector<Expression> gamma;
    const toml::table& conn = connection ? *connection : empty;
    const bool from_c = scalar<bool>(conn, "torsion_free_from_c", "connection").value_or(false);
    toml::table entries;
    for (auto&& [k, v] : conn)
      if (k.str() != "torsion_free_from_c") entries.insert(k, v);
    if (from_c) {
      if (!entries.empty()) throw ConfigError("torsion_free_from_c excludes explicit connection entries");
      gamma = half_structure(c);
    } else {
      gamma = read_entries(entries, {r, r, r}, n, "connection");
    }
    std::vector<Interval> box;
    if (auto b = base ? parse_box(*base, n) : std::nullopt)
      box = *b;
    else
      box.assign(static_cast<std::size_t>(n), Interval{-2.0, 2.0});
    model = std::make_shared<AlgebroidModel>(cfg.name, n, r, rho, c, gamma, box, radius_or(2.0));
  }
  cfg.model = model;
  if (const toml::table* im = section(root, "im_form")) cfg.im_form = read_im_form(*im, model->n(), model->r());
  if (const toml::table* nt = section(root, "numerics")) cfg.numerics = read_numerics(*nt);
  return cfg;
}

ModelConfig load_model_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_model_config(ss.str(), path);
}

}  // namespace sprayoid
