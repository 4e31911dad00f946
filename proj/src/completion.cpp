#include "sprayoid/completion.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <deque>
#include <functional>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>

#include "sprayoid/errors.hpp"

namespace sprayoid {

// --- table ------------------------------------------------------------------

int LocalGroupoidTable::add_object(const std::string& name) {
  if (name.empty()) throw MalformedTable("empty object name");
  if (object_index_.count(name)) throw MalformedTable("duplicate object '" + name + "'");
  const int id = object_count();
  objects_.push_back(name);
  object_index_.emplace(name, id);
  units_.push_back(kUndefined);
  by_target_.emplace_back();
  return id;
}

int LocalGroupoidTable::add_arrow(const std::string& name, int source, int target) {
  if (name.empty()) throw MalformedTable("empty arrow name");
  if (arrow_index_.count(name)) throw MalformedTable("duplicate arrow '" + name + "'");
  if (source < 0 || source >= object_count() || target < 0 || target >= object_count())
    throw MalformedTable("arrow '" + name + "' refers to an unknown object");
  const int id = arrow_count();
  arrows_.push_back(name);
  arrow_index_.emplace(name, id);
  source_.push_back(source);
  target_.push_back(target);
  inverse_.push_back(kUndefined);
  factors_.emplace_back();
  by_target_[target].push_back(id);
  grow();
  return id;
}

void LocalGroupoidTable::grow() {
  const std::size_t n = arrows_.size();
  std::vector<int> next(n * n, kUndefined);
  for (std::size_t g = 0; g + 1 < n; ++g)
    for (std::size_t h = 0; h + 1 < n; ++h) next[g * n + h] = prod_[g * (n - 1) + h];
  prod_ = std::move(next);
}

std::size_t LocalGroupoidTable::index(int g, int h) const {
  if (g < 0 || h < 0 || g >= arrow_count() || h >= arrow_count()) throw MalformedTable("arrow index out of range");
  return static_cast<std::size_t>(g) * arrows_.size() + static_cast<std::size_t>(h);
}

void LocalGroupoidTable::set_unit(int object, int arrow) {
  if (object < 0 || object >= object_count()) throw MalformedTable("unit for unknown object");
  if (arrow < 0 || arrow >= arrow_count()) throw MalformedTable("unit is an unknown arrow");
  if (units_[object] != kUndefined) throw MalformedTable("duplicate unit for object '" + objects_[object] + "'");
  units_[object] = arrow;
}

void LocalGroupoidTable::set_inverse(int arrow, int inverse) {
  if (arrow < 0 || arrow >= arrow_count() || inverse < 0 || inverse >= arrow_count())
    throw MalformedTable("inverse refers to an unknown arrow");
  if (inverse_[arrow] != kUndefined) throw MalformedTable("duplicate inverse for '" + arrows_[arrow] + "'");
  inverse_[arrow] = inverse;
}

void LocalGroupoidTable::clear_inverse(int arrow) { inverse_.at(arrow) = kUndefined; }

void LocalGroupoidTable::set_product(int g, int h, int gh) {
  const std::size_t i = index(g, h);
  if (gh < 0 || gh >= arrow_count()) throw MalformedTable("product value is an unknown arrow");
  if (source_[g] != target_[h])
    throw MalformedTable("product " + arrows_[g] + " " + arrows_[h] + " on a non-composable pair");
  if (prod_[i] != kUndefined) throw MalformedTable("duplicate product " + arrows_[g] + " " + arrows_[h]);
  prod_[i] = gh;
  factors_[gh].emplace_back(g, h);
  ++product_count_;
}

void LocalGroupoidTable::clear_product(int g, int h) {
  const std::size_t i = index(g, h);
  const int old = prod_[i];
  if (old == kUndefined) return;
  auto& f = factors_[old];
  f.erase(std::find(f.begin(), f.end(), std::pair<int, int>(g, h)));
  prod_[i] = kUndefined;
  --product_count_;
}

std::optional<int> LocalGroupoidTable::find_object(std::string_view name) const {
  auto it = object_index_.find(name);
  if (it == object_index_.end()) return std::nullopt;
  return it->second;
}

std::optional<int> LocalGroupoidTable::find_arrow(std::string_view name) const {
  auto it = arrow_index_.find(name);
  if (it == arrow_index_.end()) return std::nullopt;
  return it->second;
}

int LocalGroupoidTable::object(std::string_view name) const {
  if (auto o = find_object(name)) return *o;
  throw MalformedTable("unknown object '" + std::string(name) + "'");
}

int LocalGroupoidTable::arrow(std::string_view name) const {
  if (auto a = find_arrow(name)) return *a;
  throw MalformedTable("unknown arrow '" + std::string(name) + "'");
}

bool LocalGroupoidTable::is_unit(int a) const {
  return a >= 0 && a < arrow_count() && units_[source_[a]] == a;
}

bool LocalGroupoidTable::total() const {
  for (int g = 0; g < arrow_count(); ++g)
    for (int h : by_target_[source_[g]])
      if (!defined(g, h)) return false;
  return true;
}

LocalGroupoidTable LocalGroupoidTable::restrict_to(const std::vector<int>& arrows) const {
  std::vector<int> keep(arrow_count(), kUndefined);
  for (int a : arrows) {
    if (a < 0 || a >= arrow_count()) throw InvalidParams("restrict_to: unknown arrow");
    keep[a] = 0;
  }
  for (int o = 0; o < object_count(); ++o)
    if (units_[o] == kUndefined || keep[units_[o]] == kUndefined)
      throw InvalidParams("restrict_to: the kept arrows must contain every unit");
  LocalGroupoidTable out;
  for (const auto& o : objects_) out.add_object(o);
  for (int a = 0; a < arrow_count(); ++a)
    if (keep[a] != kUndefined) keep[a] = out.add_arrow(arrows_[a], source_[a], target_[a]);
  for (int o = 0; o < object_count(); ++o) out.set_unit(o, keep[units_[o]]);
  for (int a = 0; a < arrow_count(); ++a)
    if (keep[a] != kUndefined && inverse_[a] != kUndefined && keep[inverse_[a]] != kUndefined)
      out.set_inverse(keep[a], keep[inverse_[a]]);
  for (int g = 0; g < arrow_count(); ++g) {
    if (keep[g] == kUndefined) continue;
    for (int h = 0; h < arrow_count(); ++h) {
      const int gh = prod_[static_cast<std::size_t>(g) * arrows_.size() + h];
      if (keep[h] != kUndefined && gh != kUndefined && keep[gh] != kUndefined) out.set_product(keep[g], keep[h], keep[gh]);
    }
  }
  return out;
}

// --- text format ------------------------------------------------------------

namespace {

std::vector<std::string> tokens(std::string_view line) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : line) {
    if (ch == ',' || std::isspace(static_cast<unsigned char>(ch))) {
      if (!cur.empty()) out.push_back(std::move(cur));
      cur.clear();
    } else {
      cur.push_back(ch);
    }
  }
  if (!cur.empty()) out.push_back(std::move(cur));
  return out;
}

std::string trim(std::string_view s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return std::string(s.substr(b, e - b));
}

bool valid_name(const std::string& s) {
  if (s.empty() || s == "->" || s == "=") return false;
  return s.find_first_of(":=#,") == std::string::npos;
}

}  // namespace

LocalGroupoidTable parse_table(std::string_view text) {
  enum class Section { none, objects, arrows, units, inv, prod };
  LocalGroupoidTable tbl;
  Section section = Section::none;
  int lineno = 0;
  std::size_t pos = 0;
  const auto fail = [&](const std::string& msg) -> void {
    throw MalformedTable("line " + std::to_string(lineno) + ": " + msg);
  };
  const auto name = [&](const std::string& s) {
    if (!valid_name(s)) fail("bad name '" + s + "'");
    return s;
  };
  while (pos <= text.size()) {
    const std::size_t nl = text.find('\n', pos);
    std::string_view raw = text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
    pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
    ++lineno;
    if (const auto hash = raw.find('#'); hash != std::string_view::npos) raw = raw.substr(0, hash);
    std::string line = trim(raw);
    if (line.empty()) continue;

    static const std::pair<const char*, Section> headers[] = {{"objects:", Section::objects},
                                                              {"arrows:", Section::arrows},
                                                              {"units:", Section::units},
                                                              {"inv:", Section::inv},
                                                              {"prod:", Section::prod}};
    for (const auto& [key, sec] : headers) {
      const std::string_view k(key);
      if (line.compare(0, k.size(), k) == 0) {
        section = sec;
        line = trim(std::string_view(line).substr(k.size()));
        break;
      }
    }
    if (line.empty()) continue;
    try {
      switch (section) {
        case Section::none:
          fail("content before any section header");
          break;
        case Section::objects:
          for (const auto& t : tokens(line)) tbl.add_object(name(t));
          break;
        case Section::arrows: {
          const auto colon = line.find(':');
          if (colon == std::string::npos) fail("expected 'name: source -> target'");
          const std::string arrow = name(trim(std::string_view(line).substr(0, colon)));
          const auto rest = tokens(std::string_view(line).substr(colon + 1));
          if (rest.size() != 3 || rest[1] != "->") fail("expected 'name: source -> target'");
          tbl.add_arrow(arrow, tbl.object(rest[0]), tbl.object(rest[2]));
          break;
        }
        case Section::units: {
          std::string l = line;
          std::replace(l.begin(), l.end(), ':', ' ');
          const auto t = tokens(l);
          if (t.size() != 2) fail("expected 'object: arrow'");
          tbl.set_unit(tbl.object(t[0]), tbl.arrow(t[1]));
          break;
        }
        case Section::inv: {
          const auto t = tokens(line);
          if (t.size() != 2) fail("expected 'arrow inverse'");
          tbl.set_inverse(tbl.arrow(t[0]), tbl.arrow(t[1]));
          break;
        }
        case Section::prod: {
          const auto t = tokens(line);
          if (t.size() != 4 || t[2] != "=") fail("expected 'g h = k'");
          tbl.set_product(tbl.arrow(t[0]), tbl.arrow(t[1]), tbl.arrow(t[3]));
          break;
        }
      }
    } catch (const MalformedTable& e) {
      const std::string what = e.what();
      if (what.rfind("line ", 0) == 0) throw;
      fail(what);
    }
  }
  for (int o = 0; o < tbl.object_count(); ++o)
    if (tbl.unit(o) == LocalGroupoidTable::kUndefined)
      throw MalformedTable("object '" + tbl.object_name(o) + "' has no unit");
  return tbl;
}

LocalGroupoidTable load_table(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw MalformedTable("cannot open table file '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_table(ss.str());
}

std::string format_table(const LocalGroupoidTable& tbl) {
  std::ostringstream os;
  os << "objects:";
  for (int o = 0; o < tbl.object_count(); ++o) os << ' ' << tbl.object_name(o);
  os << "\narrows:\n";
  for (int a = 0; a < tbl.arrow_count(); ++a)
    os << "  " << tbl.arrow_name(a) << ": " << tbl.object_name(tbl.source(a)) << " -> "
       << tbl.object_name(tbl.target(a)) << '\n';
  os << "units:\n";
  for (int o = 0; o < tbl.object_count(); ++o)
    if (tbl.unit(o) != LocalGroupoidTable::kUndefined)
      os << "  " << tbl.object_name(o) << ": " << tbl.arrow_name(tbl.unit(o)) << '\n';
  os << "inv:\n";
  for (int a = 0; a < tbl.arrow_count(); ++a)
    if (tbl.inverse(a) != LocalGroupoidTable::kUndefined)
      os << "  " << tbl.arrow_name(a) << ' ' << tbl.arrow_name(tbl.inverse(a)) << '\n';
  os << "prod:\n";
  for (int g = 0; g < tbl.arrow_count(); ++g)
    for (int h = 0; h < tbl.arrow_count(); ++h)
      if (tbl.defined(g, h))
        os << "  " << tbl.arrow_name(g) << ' ' << tbl.arrow_name(h) << " = " << tbl.arrow_name(tbl.product(g, h))
           << '\n';
  return os.str();
}

// --- builtin families -------------------------------------------------------

namespace {

LocalGroupoidTable cyclic_like(const std::vector<int>& values, const std::function<std::optional<int>(int)>& reduce) {
  LocalGroupoidTable tbl;
  const int star = tbl.add_object("*");
  std::map<int, int> id;
  for (int v : values) id[v] = tbl.add_arrow(std::to_string(v), star, star);
  tbl.set_unit(star, id.at(0));
  for (int v : values)
    if (auto m = reduce(-v); m && id.count(*m)) tbl.set_inverse(id[v], id[*m]);
  for (int g : values)
    for (int h : values)
      if (auto m = reduce(g + h); m && id.count(*m)) tbl.set_product(id[g], id[h], id[*m]);
  return tbl;
}

std::vector<int> range(int lo, int hi) {
  std::vector<int> v(static_cast<std::size_t>(hi - lo + 1));
  std::iota(v.begin(), v.end(), lo);
  return v;
}

}  // namespace

LocalGroupoidTable z_window(int k) {
  if (k < 0) throw InvalidParams("z_window: k must be >= 0");
  return cyclic_like(range(-k, k), [k](int s) -> std::optional<int> {
    if (std::abs(s) <= k) return s;
    return std::nullopt;
  });
}

LocalGroupoidTable zmod_window(int modulus, int k) {
  if (modulus < 1 || k < 0 || 2 * k >= modulus) throw InvalidParams("zmod_window: need 0 <= 2k < N");
  return cyclic_like(range(-k, k), [modulus, k](int s) -> std::optional<int> {
    int m = ((s % modulus) + modulus) % modulus;
    if (m > k) m -= modulus;
    if (std::abs(m) <= k) return m;
    return std::nullopt;
  });
}

LocalGroupoidTable zmod_group(int modulus) {
  if (modulus < 1) throw InvalidParams("zmod_group: N must be >= 1");
  const int hi = modulus / 2;
  const int lo = hi - modulus + 1;
  return cyclic_like(range(lo, hi), [modulus, lo](int s) -> std::optional<int> {
    return ((s - lo) % modulus + modulus) % modulus + lo;
  });
}

LocalGroupoidTable table_from_spec(const std::string& spec) {
  const std::string prefix = "builtin:";
  if (spec.rfind(prefix, 0) != 0) return load_table(spec);
  std::vector<std::string> parts;
  std::stringstream ss(spec.substr(prefix.size()));
  for (std::string p; std::getline(ss, p, ':');) parts.push_back(p);
  const auto num = [&](std::size_t i) {
    try {
      std::size_t used = 0;
      const int v = std::stoi(parts.at(i), &used);
      if (used != parts[i].size()) throw std::invalid_argument("trailing");
      return v;
    } catch (const std::exception&) {
      throw InvalidParams("bad builtin table spec '" + spec + "'");
    }
  };
  if (parts.size() == 2 && parts[0] == "z") return z_window(num(1));
  if (parts.size() == 3 && parts[0] == "zmod") return zmod_window(num(1), num(2));
  if (parts.size() == 2 && parts[0] == "zmodgroup") return zmod_group(num(1));
  throw InvalidParams("unknown builtin table '" + spec + "'");
}

// --- words ------------------------------------------------------------------

bool well_formed(const LocalGroupoidTable& tbl, const Word& w) {
  if (w.letters.empty()) return false;
  for (int a : w.letters)
    if (a < 0 || a >= tbl.arrow_count()) return false;
  for (std::size_t i = 0; i + 1 < w.letters.size(); ++i)
    if (tbl.source(w.letters[i]) != tbl.target(w.letters[i + 1])) return false;
  return true;
}

void require_well_formed(const LocalGroupoidTable& tbl, const Word& w) {
  if (!well_formed(tbl, w)) throw InvalidParams("word " + format_word(tbl, w) + " is not well formed");
}

std::string format_word(const LocalGroupoidTable& tbl, const Word& w) {
  std::string out = "(";
  for (std::size_t i = 0; i < w.letters.size(); ++i) {
    if (i) out += ", ";
    const int a = w.letters[i];
    out += (a >= 0 && a < tbl.arrow_count()) ? tbl.arrow_name(a) : "?";
  }
  return out + ")";
}

Word parse_word(const LocalGroupoidTable& tbl, std::string_view text) {
  std::string s(text);
  for (char& ch : s)
    if (ch == '(' || ch == ')') ch = ' ';
  Word w;
  for (const auto& t : tokens(s)) w.letters.push_back(tbl.arrow(t));
  require_well_formed(tbl, w);
  return w;
}

std::vector<Word> contractions(const LocalGroupoidTable& tbl, const Word& w) {
  require_well_formed(tbl, w);
  std::vector<Word> out;
  for (std::size_t i = 0; i + 1 < w.letters.size(); ++i) {
    const int gh = tbl.product(w.letters[i], w.letters[i + 1]);
    if (gh == LocalGroupoidTable::kUndefined) continue;
    Word c;
    c.letters.reserve(w.letters.size() - 1);
    c.letters.insert(c.letters.end(), w.letters.begin(), w.letters.begin() + static_cast<long>(i));
    c.letters.push_back(gh);
    c.letters.insert(c.letters.end(), w.letters.begin() + static_cast<long>(i) + 2, w.letters.end());
    out.push_back(std::move(c));
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

std::vector<Word> expansions(const LocalGroupoidTable& tbl, const Word& w, int max_len) {
  require_well_formed(tbl, w);
  std::vector<Word> out;
  if (static_cast<int>(w.letters.size()) + 1 > max_len) return out;
  for (std::size_t i = 0; i < w.letters.size(); ++i) {
    for (const auto& [g, h] : tbl.factorizations(w.letters[i])) {
      Word e = w;
      e.letters[i] = g;
      e.letters.insert(e.letters.begin() + static_cast<long>(i) + 1, h);
      out.push_back(std::move(e));
    }
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

// --- axioms -----------------------------------------------------------------

TableReport validate_table(const LocalGroupoidTable& tbl) {
  constexpr int none = LocalGroupoidTable::kUndefined;
  TableReport rep;
  const auto name = [&](int a) { return tbl.arrow_name(a); };
  const auto add = [&](const char* axiom, std::string detail, std::vector<int> witness) {
    rep.violations.push_back({axiom, std::move(detail), std::move(witness)});
  };
  const int n = tbl.arrow_count();
  for (int o = 0; o < tbl.object_count(); ++o) {
    const int u = tbl.unit(o);
    if (u == none) throw MalformedTable("object '" + tbl.object_name(o) + "' has no unit");
    if (tbl.source(u) != o || tbl.target(u) != o)
      add("A3", "unit " + name(u) + " is not a loop at " + tbl.object_name(o), {u});
  }
  for (int g = 0; g < n; ++g) {
    for (int h = 0; h < n; ++h) {
      const int gh = tbl.product(g, h);
      if (gh == none) continue;
      if (tbl.source(gh) != tbl.source(h) || tbl.target(gh) != tbl.target(g))
        add("A1", name(g) + " " + name(h) + " = " + name(gh) + " has the wrong source or target", {g, h, gh});
    }
  }
  for (int g = 0; g < n; ++g) {
    const int right = tbl.unit(tbl.source(g)), left = tbl.unit(tbl.target(g));
    if (tbl.product(g, right) != g)
      add("A3", name(g) + " " + name(right) + " is not " + name(g), {g, right});
    if (tbl.product(left, g) != g) add("A3", name(left) + " " + name(g) + " is not " + name(g), {left, g});
  }
  for (int g = 0; g < n; ++g)
    for (int h = 0; h < n; ++h) {
      const int gh = tbl.product(g, h);
      if (gh == none) continue;
      for (int k : tbl.arrows_into_target(tbl.source(h))) {
        const int hk = tbl.product(h, k);
        if (hk == none) continue;
        const int l = tbl.product(gh, k), r = tbl.product(g, hk);
        if (l != none && r != none && l != r)
          add("A2", "(" + name(g) + " " + name(h) + ") " + name(k) + " = " + name(l) + " but " + name(g) + " (" +
                        name(h) + " " + name(k) + ") = " + name(r),
              {g, h, k});
      }
    }
  for (int o = 0; o < tbl.object_count(); ++o) {
    const int u = tbl.unit(o);
    if (tbl.inverse(u) == none) add("A4", "inverse undefined at unit " + name(u), {u});
  }
  for (int g = 0; g < n; ++g) {
    const int h = tbl.inverse(g);
    if (h == none) continue;
    if (tbl.source(h) != tbl.target(g) || tbl.target(h) != tbl.source(g)) {
      add("A4", "inverse " + name(h) + " of " + name(g) + " has the wrong source or target", {g, h});
      continue;
    }
    if (tbl.product(h, g) != tbl.unit(tbl.source(g)))
      add("A5", name(h) + " " + name(g) + " is not the unit at the source", {h, g});
    if (tbl.product(g, h) != tbl.unit(tbl.target(g)))
      add("A5", name(g) + " " + name(h) + " is not the unit at the target", {g, h});
  }
  return rep;
}

// --- associative completion -------------------------------------------------

struct ACClassification::Graph {
  std::vector<int> slot;  // arrow -> position among arrows with the same target
  std::vector<int> arrow_source;
  std::vector<int> target;
  std::vector<int> inverse;
  std::vector<int> object_of;  // per state
  std::vector<std::size_t> offset;
  std::vector<int> next;  // -1 undefined
  std::vector<int> roots;

  int step(int state, int arrow) const {
    if (object_of[state] != target[arrow]) return -1;
    return next[offset[state] + static_cast<std::size_t>(slot[arrow])];
  }

  int trace(const Word& w) const {
    if (w.letters.empty()) return -1;
    for (int a : w.letters)
      if (a < 0 || a >= static_cast<int>(slot.size())) return -1;
    int q = roots[target[w.letters.front()]];
    for (int a : w.letters) {
      if (q < 0) return -1;
      q = step(q, a);
    }
    return q;
  }
};

namespace {

// Bounded coset-style enumeration of the category presented by the table:
// generators are the arrows, relations a b = (ab) for every defined product
// and u = empty for units. States reached by words of length <= bound get all
// their transitions; relations are scanned at every state, deducing missing
// transitions and merging coincident states.
class Enumerator {
 public:
  Enumerator(const LocalGroupoidTable& tbl, int bound, std::uint64_t cap) : tbl_(tbl), bound_(bound), cap_(cap) {
    slot_.assign(tbl.arrow_count(), 0);
    for (int o = 0; o < tbl.object_count(); ++o) {
      const auto& into = tbl.arrows_into_target(o);
      for (std::size_t i = 0; i < into.size(); ++i) slot_[into[i]] = static_cast<int>(i);
    }
    rel_.resize(tbl.arrow_count());
    for (int a = 0; a < tbl.arrow_count(); ++a)
      for (int b : tbl.arrows_into_target(tbl.source(a)))
        if (tbl.defined(a, b)) rel_[a].emplace_back(b, tbl.product(a, b));
  }

  std::shared_ptr<ACClassification::Graph> run() {
    for (int o = 0; o < tbl_.object_count(); ++o) roots_.push_back(create(o));
    for (;;) {
      changed_ = false;
      distances();
      for (std::size_t i = 0; i < obj_.size(); ++i) {
        const int q = static_cast<int>(i);
        if (find(q) != q) continue;
        if (dist_[i] < bound_) {
          const auto& into = tbl_.arrows_into_target(obj_[i]);
          for (std::size_t s = 0; s < into.size(); ++s) {
            if (find(q) != q) break;
            if (out_[i][s] >= 0) continue;
            const int p = create(tbl_.source(into[s]));
            dist_[static_cast<std::size_t>(p)] = dist_[i] + 1;
            out_[i][s] = p;
            changed_ = true;
          }
        }
        scan(q);
      }
      bool again = true;
      while (again) {
        const bool before = changed_;
        changed_ = false;
        for (std::size_t i = 0; i < obj_.size(); ++i)
          if (find(static_cast<int>(i)) == static_cast<int>(i)) scan(static_cast<int>(i));
        again = changed_;
        changed_ = changed_ || before;
      }
      if (!changed_) break;
    }
    return compact();
  }

  std::uint64_t created() const noexcept { return obj_.size(); }

 private:
  int find(int q) {
    int r = q;
    while (parent_[static_cast<std::size_t>(r)] != r) r = parent_[static_cast<std::size_t>(r)];
    while (parent_[static_cast<std::size_t>(q)] != r) {
      const int up = parent_[static_cast<std::size_t>(q)];
      parent_[static_cast<std::size_t>(q)] = r;
      q = up;
    }
    return r;
  }

  int create(int object) {
    if (obj_.size() >= cap_) throw Budget("associative completion exceeded " + std::to_string(cap_) + " states");
    const int id = static_cast<int>(obj_.size());
    obj_.push_back(object);
    parent_.push_back(id);
    dist_.push_back(0);
    out_.emplace_back(tbl_.arrows_into_target(object).size(), -1);
    out_.back()[static_cast<std::size_t>(slot_[tbl_.unit(object)])] = id;
    return id;
  }

  int get(int q, int a) {
    const int p = out_[static_cast<std::size_t>(q)][static_cast<std::size_t>(slot_[a])];
    return p < 0 ? -1 : find(p);
  }

  void put(int q, int a, int p) {
    int& cell = out_[static_cast<std::size_t>(q)][static_cast<std::size_t>(slot_[a])];
    if (cell < 0) {
      cell = p;
      changed_ = true;
    } else if (find(cell) != find(p)) {
      coincide(cell, p);
    }
  }

  void coincide(int a, int b) {
    std::deque<std::pair<int, int>> queue{{a, b}};
    while (!queue.empty()) {
      auto [x, y] = queue.front();
      queue.pop_front();
      x = find(x);
      y = find(y);
      if (x == y) continue;
      if (x > y) std::swap(x, y);
      if (obj_[static_cast<std::size_t>(x)] != obj_[static_cast<std::size_t>(y)])
        throw PreconditionError("associative completion: words with different endpoints became equal");
      changed_ = true;
      parent_[static_cast<std::size_t>(y)] = x;
      dist_[static_cast<std::size_t>(x)] = std::min(dist_[static_cast<std::size_t>(x)], dist_[static_cast<std::size_t>(y)]);
      auto& from = out_[static_cast<std::size_t>(y)];
      for (std::size_t s = 0; s < from.size(); ++s) {
        if (from[s] < 0) continue;
        int& to = out_[static_cast<std::size_t>(x)][s];
        if (to < 0)
          to = from[s];
        else if (find(to) != find(from[s]))
          queue.emplace_back(to, from[s]);
      }
      std::vector<int>().swap(from);
    }
  }

  void scan(int q) {
    for (int a : tbl_.arrows_into_target(obj_[static_cast<std::size_t>(q)])) {
      for (const auto& [b, c] : rel_[a]) {
        if (find(q) != q) return;
        const int qa = get(q, a);
        if (qa < 0) break;
        const int qab = get(qa, b);
        const int qc = get(q, c);
        if (qab >= 0 && qc >= 0) {
          if (qab != qc) coincide(qab, qc);
        } else if (qab >= 0) {
          put(q, c, qab);
        } else if (qc >= 0) {
          put(qa, b, qc);
        }
      }
    }
  }

  void distances() {
    std::fill(dist_.begin(), dist_.end(), -1);
    std::deque<int> queue;
    for (int r : roots_) {
      const int q = find(r);
      if (dist_[static_cast<std::size_t>(q)] < 0) {
        dist_[static_cast<std::size_t>(q)] = 0;
        queue.push_back(q);
      }
    }
    while (!queue.empty()) {
      const int q = queue.front();
      queue.pop_front();
      for (int p : out_[static_cast<std::size_t>(q)]) {
        if (p < 0) continue;
        p = find(p);
        if (dist_[static_cast<std::size_t>(p)] < 0) {
          dist_[static_cast<std::size_t>(p)] = dist_[static_cast<std::size_t>(q)] + 1;
          queue.push_back(p);
        }
      }
    }
    for (auto& d : dist_)
      if (d < 0) d = bound_;
  }

  std::shared_ptr<ACClassification::Graph> compact() {
    auto g = std::make_shared<ACClassification::Graph>();
    std::vector<int> id(obj_.size(), -1);
    int live = 0;
    for (std::size_t i = 0; i < obj_.size(); ++i)
      if (find(static_cast<int>(i)) == static_cast<int>(i)) id[i] = live++;
    g->slot = slot_;
    for (int a = 0; a < tbl_.arrow_count(); ++a) {
      g->arrow_source.push_back(tbl_.source(a));
      g->target.push_back(tbl_.target(a));
      g->inverse.push_back(tbl_.inverse(a));
    }
    for (std::size_t i = 0; i < obj_.size(); ++i) {
      if (id[i] < 0) continue;
      g->object_of.push_back(obj_[i]);
      g->offset.push_back(g->next.size());
      for (int p : out_[i]) g->next.push_back(p < 0 ? -1 : id[static_cast<std::size_t>(find(p))]);
    }
    for (int r : roots_) g->roots.push_back(id[static_cast<std::size_t>(find(r))]);
    return g;
  }

  const LocalGroupoidTable& tbl_;
  int bound_;
  std::uint64_t cap_;
  std::vector<int> slot_;
  std::vector<std::vector<std::pair<int, int>>> rel_;
  std::vector<int> obj_, parent_, dist_, roots_;
  std::vector<std::vector<int>> out_;
  bool changed_ = false;
};

void require_valid(const LocalGroupoidTable& tbl, const char* where) {
  const TableReport rep = validate_table(tbl);
  if (!rep.valid())
    throw PreconditionError(std::string(where) + ": table violates " + rep.violations.front().axiom + " (" +
                            rep.violations.front().detail + ")");
}

}  // namespace

std::optional<int> ACClassification::class_of(const Word& w) const {
  if (!graph_) return std::nullopt;
  const int q = graph_->trace(w);
  if (q < 0 || class_by_state_[static_cast<std::size_t>(q)] < 0) return std::nullopt;
  return class_by_state_[static_cast<std::size_t>(q)];
}

std::optional<int> ACClassification::product(int a, int b) const {
  if (a < 0 || b < 0 || a >= static_cast<int>(classes_.size()) || b >= static_cast<int>(classes_.size()))
    return std::nullopt;
  if (classes_[a].source != classes_[b].target) return std::nullopt;
  Word w = classes_[a].representative;
  const auto& rb = classes_[b].representative.letters;
  w.letters.insert(w.letters.end(), rb.begin(), rb.end());
  return class_of(w);
}

std::optional<int> ACClassification::inverse(int c) const {
  if (c < 0 || c >= static_cast<int>(classes_.size()) || !classes_[c].invertible_representative) return std::nullopt;
  Word w;
  const auto& letters = classes_[c].invertible_representative->letters;
  for (auto it = letters.rbegin(); it != letters.rend(); ++it) w.letters.push_back(graph_->inverse[*it]);
  return class_of(w);
}

std::optional<int> ACClassification::unit_class(int object) const {
  if (!graph_ || object < 0 || object >= static_cast<int>(unit_arrows_.size())) return std::nullopt;
  return class_of(Word{{unit_arrows_[object]}});
}

ACClassification ac_quotient(const LocalGroupoidTable& tbl, int length_bound, int exploration_bound,
                             const SearchLimits& limits) {
  if (length_bound < 1) throw InvalidParams("ac_quotient: L must be >= 1");
  if (exploration_bound < length_bound) throw InvalidParams("ac_quotient: L_max must be >= L");
  require_valid(tbl, "ac_quotient");
  Enumerator coarse(tbl, exploration_bound, limits.max_states);
  auto graph = coarse.run();
  Enumerator fine(tbl, exploration_bound + 2, limits.max_states);
  const auto check = fine.run();

  ACClassification out;
  out.length_bound_ = length_bound;
  out.exploration_bound_ = exploration_bound;
  out.states_ = coarse.created() + fine.created();
  out.class_by_state_.assign(graph->object_of.size(), -1);
  for (int o = 0; o < tbl.object_count(); ++o) out.unit_arrows_.push_back(tbl.unit(o));

  // Words reaching the same pair of states behave identically, so the words
  // of each length are processed as one layer of state pairs. Layers are kept
  // in (length, lexicographic) order of their first word, which makes that
  // word the least one reaching the pair.
  struct Cell {
    Word first;
    std::optional<Word> invertible;
    std::uint64_t count = 0;
  };
  const auto invertible_letter = [&](int a) { return tbl.inverse(a) != LocalGroupoidTable::kUndefined; };
  std::map<int, int> forward, backward;
  bool stable = true;
  std::vector<ACClass> found;
  std::vector<int> state_of_class;
  std::uint64_t cells = 0;
  std::vector<std::pair<std::pair<int, int>, Cell>> layer;
  const auto absorb = [&](const std::pair<int, int>& q, const Cell& cell) {
    if (++cells > limits.max_states) throw Budget("ac_quotient: too many state pairs for the length bound");
    const auto f = forward.emplace(q.first, q.second).first;
    const auto b = backward.emplace(q.second, q.first).first;
    if (f->second != q.second || b->second != q.first) stable = false;
    int& cls = out.class_by_state_[static_cast<std::size_t>(q.first)];
    if (cls < 0) {
      cls = static_cast<int>(found.size());
      ACClass c;
      c.representative = cell.first;
      c.target = tbl.target(cell.first.letters.front());
      c.source = tbl.source(cell.first.letters.back());
      found.push_back(std::move(c));
      state_of_class.push_back(q.first);
    }
    ACClass& c = found[static_cast<std::size_t>(cls)];
    c.words += cell.count;
    if (cell.invertible && (!c.invertible_representative ||
                            cell.invertible->letters.size() < c.invertible_representative->letters.size()))
      c.invertible_representative = cell.invertible;
  };
  const auto advance = [&](int q1, int q2, int a) {
    const int n1 = graph->step(q1, a), n2 = check->step(q2, a);
    if (n1 < 0 || n2 < 0) throw PreconditionError("ac_quotient: exploration left the enumerated graph");
    return std::make_pair(n1, n2);
  };
  {
    std::map<std::pair<int, int>, std::size_t> at;
    for (int o = 0; o < tbl.object_count(); ++o) {
      const int r1 = graph->roots[static_cast<std::size_t>(o)], r2 = check->roots[static_cast<std::size_t>(o)];
      for (int a : tbl.arrows_into_target(o)) {
        const auto q = advance(r1, r2, a);
        const auto [it, fresh] = at.emplace(q, layer.size());
        if (fresh) layer.push_back({q, Cell{Word{{a}}, std::nullopt, 0}});
        Cell& cell = layer[it->second].second;
        ++cell.count;
        if (!cell.invertible && invertible_letter(a)) cell.invertible = Word{{a}};
      }
    }
  }
  // Sort the first layer by word so later layers inherit the order.
  std::sort(layer.begin(), layer.end(), [](const auto& x, const auto& y) { return x.second.first < y.second.first; });
  for (int len = 1;; ++len) {
    for (const auto& [q, cell] : layer) absorb(q, cell);
    if (len == length_bound) break;
    std::vector<std::pair<std::pair<int, int>, Cell>> next;
    std::map<std::pair<int, int>, std::size_t> at;
    for (const auto& [q, cell] : layer) {
      const int here = tbl.source(cell.first.letters.back());
      for (int a : tbl.arrows_into_target(here)) {
        const auto nq = advance(q.first, q.second, a);
        const auto [it, fresh] = at.emplace(nq, next.size());
        if (fresh) {
          Word w = cell.first;
          w.letters.push_back(a);
          next.push_back({nq, Cell{std::move(w), std::nullopt, 0}});
        }
        Cell& target_cell = next[it->second].second;
        target_cell.count += cell.count;
        if (cell.invertible && invertible_letter(a)) {
          Word w = *cell.invertible;
          w.letters.push_back(a);
          if (!target_cell.invertible || w < *target_cell.invertible) target_cell.invertible = std::move(w);
        }
      }
    }
    if (next.empty()) break;
    layer = std::move(next);
  }

  // Number classes by (length, letters) of their representative.
  std::vector<int> order(found.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    const auto& x = found[static_cast<std::size_t>(a)].representative.letters;
    const auto& y = found[static_cast<std::size_t>(b)].representative.letters;
    if (x.size() != y.size()) return x.size() < y.size();
    return x < y;
  });
  std::fill(out.class_by_state_.begin(), out.class_by_state_.end(), -1);
  for (std::size_t i = 0; i < order.size(); ++i) {
    ACClass c = std::move(found[static_cast<std::size_t>(order[i])]);
    c.id = static_cast<int>(i);
    out.class_by_state_[static_cast<std::size_t>(state_of_class[static_cast<std::size_t>(order[i])])] = c.id;
    out.classes_.push_back(std::move(c));
  }
  out.stable_ = stable;
  out.graph_ = std::move(graph);
  return out;
}

std::vector<int> associators(const LocalGroupoidTable& tbl, int exploration_bound, const SearchLimits& limits) {
  const ACClassification ac = ac_quotient(tbl, 1, std::max(1, exploration_bound), limits);
  std::vector<int> out;
  for (int g = 0; g < tbl.arrow_count(); ++g) {
    if (tbl.is_unit(g) || tbl.source(g) != tbl.target(g)) continue;
    const auto cg = ac.class_of(Word{{g}});
    if (cg && cg == ac.unit_class(tbl.source(g))) out.push_back(g);
  }
  return out;
}

// --- global associativity ---------------------------------------------------

namespace {

struct Bracketed {
  int value;
  int split;  // -1 for a single letter
  int left;
  int right;
};

class BracketTable {
 public:
  BracketTable(const LocalGroupoidTable& tbl, int order)
      : tbl_(tbl), n_(order), cells_(static_cast<std::size_t>((order + 1) * (order + 1))) {}

  std::vector<Bracketed>& at(int i, int j) { return cells_[static_cast<std::size_t>(i * (n_ + 1) + j)]; }

  // Fills every cell ending at j from the letters w[0..j).
  void extend(const std::vector<int>& w, int j) {
    at(j - 1, j).assign(1, {w[static_cast<std::size_t>(j - 1)], -1, -1, -1});
    for (int i = j - 2; i >= 0; --i) {
      auto& cell = at(i, j);
      cell.clear();
      for (int m = i + 1; m < j; ++m)
        for (const auto& a : at(i, m))
          for (const auto& b : at(m, j)) {
            const int c = tbl_.product(a.value, b.value);
            if (c == LocalGroupoidTable::kUndefined) continue;
            if (std::none_of(cell.begin(), cell.end(), [c](const Bracketed& e) { return e.value == c; }))
              cell.push_back({c, m, a.value, b.value});
          }
    }
  }

  std::string render(int i, int j, int value) {
    for (const auto& e : at(i, j)) {
      if (e.value != value) continue;
      if (e.split < 0) return tbl_.arrow_name(value);
      return "(" + render(i, e.split, e.left) + " " + render(e.split, j, e.right) + ")";
    }
    return "?";
  }

 private:
  const LocalGroupoidTable& tbl_;
  int n_;
  std::vector<std::vector<Bracketed>> cells_;
};

}  // namespace

AssociativityResult global_associativity_check(const LocalGroupoidTable& tbl, int order, std::uint64_t max_words) {
  if (order < 3) throw InvalidParams("global_associativity_check: order must be >= 3");
  AssociativityResult res;
  for (int len = 3; len <= order && !res.counterexample; ++len) {
    BracketTable bt(tbl, len);
    std::vector<int> w;
    const auto dfs = [&](auto&& self) -> bool {
      const int j = static_cast<int>(w.size());
      bt.extend(w, j);
      if (j == len) {
        if (++res.words_checked > max_words)
          throw Budget("global_associativity_check: more than " + std::to_string(max_words) + " words");
        const auto& top = bt.at(0, len);
        if (top.size() >= 2) {
          AssociativityCounterexample cx;
          cx.word.letters = w;
          cx.first = top[0].value;
          cx.second = top[1].value;
          cx.first_bracketing = bt.render(0, len, cx.first);
          cx.second_bracketing = bt.render(0, len, cx.second);
          res.counterexample = std::move(cx);
          return true;
        }
        return false;
      }
      for (int a : tbl.arrows_into_target(tbl.source(w.back()))) {
        w.push_back(a);
        if (self(self)) return true;
        w.pop_back();
      }
      return false;
    };
    for (int a = 0; a < tbl.arrow_count() && !res.counterexample; ++a) {
      w.assign(1, a);
      dfs(dfs);
    }
  }
  return res;
}

// --- counterexample search --------------------------------------------------

namespace {

bool a2_holds(const LocalGroupoidTable& tbl) {
  for (const auto& v : validate_table(tbl).violations)
    if (v.axiom == "A2") return false;
  return true;
}

// Tables with `objects` objects and the given non-unit endpoints; calls visit
// on every assignment of products to non-unit pairs respecting A1.
template <class Visit>
bool enumerate_products(LocalGroupoidTable& tbl, const std::vector<std::pair<int, int>>& pairs, std::size_t next,
                        Visit& visit) {
  if (next == pairs.size()) return visit(tbl);
  const auto [g, h] = pairs[next];
  if (enumerate_products(tbl, pairs, next + 1, visit)) return true;
  for (int c = 0; c < tbl.arrow_count(); ++c) {
    if (tbl.source(c) != tbl.source(h) || tbl.target(c) != tbl.target(g)) continue;
    tbl.set_product(g, h, c);
    const bool stop = enumerate_products(tbl, pairs, next + 1, visit);
    tbl.clear_product(g, h);
    if (stop) return true;
  }
  return false;
}

LocalGroupoidTable units_only(int objects, const std::vector<std::pair<int, int>>& ends) {
  LocalGroupoidTable tbl;
  for (int o = 0; o < objects; ++o) tbl.add_object(objects == 1 ? "*" : "x" + std::to_string(o));
  for (int o = 0; o < objects; ++o) {
    const int u = tbl.add_arrow(objects == 1 ? "e" : "1" + tbl.object_name(o), o, o);
    tbl.set_unit(o, u);
    tbl.set_inverse(u, u);
  }
  for (std::size_t i = 0; i < ends.size(); ++i)
    tbl.add_arrow("a" + std::to_string(i + 1), ends[i].first, ends[i].second);
  for (int g = 0; g < tbl.arrow_count(); ++g) {
    const int l = tbl.unit(tbl.target(g)), r = tbl.unit(tbl.source(g));
    if (!tbl.defined(l, g)) tbl.set_product(l, g, g);
    if (!tbl.defined(g, r)) tbl.set_product(g, r, g);
  }
  return tbl;
}

double exhaustive_count(int size_bound) {
  double total = 0.0;
  for (int size = 1; size <= size_bound; ++size)
    for (int objects = 1; objects <= size; ++objects) {
      const int m = size - objects;
      // crude upper bound: every endpoint choice, every pair with all values
      total += std::pow(static_cast<double>(objects), 2.0 * m) *
               std::pow(static_cast<double>(size + 1), static_cast<double>(m) * m);
    }
  return total;
}

}  // namespace

SearchResult counterexample_search(int size_bound, std::uint64_t budget, std::uint64_t seed) {
  if (size_bound < 1) throw InvalidParams("counterexample_search: size_bound must be >= 1");
  SearchResult res;
  const auto accept = [&](const LocalGroupoidTable& tbl) {
    if (!validate_table(tbl).valid()) return false;
    const AssociativityResult ar = global_associativity_check(tbl, 4);
    if (ar.ok()) return false;
    res.table = tbl;
    res.witness = ar.counterexample;
    return true;
  };

  if (exhaustive_count(size_bound) <= static_cast<double>(budget)) {
    res.exhaustive = true;
    for (int size = 1; size <= size_bound; ++size)
      for (int objects = 1; objects <= size; ++objects) {
        const int m = size - objects;
        std::vector<std::pair<int, int>> ends(static_cast<std::size_t>(m), {0, 0});
        const auto over_ends = [&](auto&& self, int i) -> bool {
          if (i == m) {
            LocalGroupoidTable tbl = units_only(objects, ends);
            std::vector<std::pair<int, int>> pairs;
            for (int g = objects; g < tbl.arrow_count(); ++g)
              for (int h = objects; h < tbl.arrow_count(); ++h)
                if (tbl.source(g) == tbl.target(h)) pairs.emplace_back(g, h);
            auto visit = [&](LocalGroupoidTable& t) {
              ++res.attempts;
              return accept(t);
            };
            return enumerate_products(tbl, pairs, 0, visit);
          }
          for (int s = 0; s < objects; ++s)
            for (int t = 0; t < objects; ++t) {
              ends[static_cast<std::size_t>(i)] = {s, t};
              if (self(self, i + 1)) return true;
            }
          return false;
        };
        if (over_ends(over_ends, 0)) return res;
      }
    return res;
  }

  std::mt19937_64 rng(seed);
  const int m = size_bound - 1;
  if (m < 1) return res;
  const std::vector<std::pair<int, int>> loops(static_cast<std::size_t>(m), {0, 0});
  std::uniform_int_distribution<int> pick_letter(1, m);
  std::uniform_int_distribution<int> pick_value(0, m);
  std::uniform_int_distribution<int> pick_count(std::max(1, m / 2), 3 * m);
  while (res.attempts < budget) {
    LocalGroupoidTable tbl = units_only(1, loops);
    const int want = pick_count(rng);
    int have = 0;
    while (have < want && res.attempts < budget) {
      ++res.attempts;
      const int g = pick_letter(rng), h = pick_letter(rng);
      if (tbl.defined(g, h)) continue;
      tbl.set_product(g, h, pick_value(rng));
      if (a2_holds(tbl))
        ++have;
      else
        tbl.clear_product(g, h);
    }
    if (accept(tbl)) return res;
  }
  return res;
}

// --- generation and full neighborhoods ---------------------------------------

std::vector<int> generation_check(const LocalGroupoidTable& tbl, const std::vector<int>& generators) {
  std::vector<char> in(static_cast<std::size_t>(tbl.arrow_count()), 0);
  std::vector<int> members;
  for (int g : generators) {
    if (g < 0 || g >= tbl.arrow_count()) throw InvalidParams("generation_check: unknown arrow");
    if (!in[static_cast<std::size_t>(g)]) {
      in[static_cast<std::size_t>(g)] = 1;
      members.push_back(g);
    }
  }
  for (int o = 0; o < tbl.object_count(); ++o)
    if (!in[static_cast<std::size_t>(tbl.unit(o))]) throw PreconditionError("generation_check: U must contain every unit");
  for (std::size_t i = 0; i < members.size(); ++i) {
    const int g = members[i];
    for (std::size_t j = 0; j <= i; ++j) {
      const int h = members[j];
      for (const int c : {tbl.product(g, h), tbl.product(h, g)}) {
        if (c != LocalGroupoidTable::kUndefined && !in[static_cast<std::size_t>(c)]) {
          in[static_cast<std::size_t>(c)] = 1;
          members.push_back(c);
        }
      }
    }
  }
  std::vector<int> unreached;
  for (int a = 0; a < tbl.arrow_count(); ++a)
    if (!in[static_cast<std::size_t>(a)]) unreached.push_back(a);
  return unreached;
}

std::string to_string(FullVerdict v) {
  switch (v) {
    case FullVerdict::iso:
      return "iso";
    case FullVerdict::proper_cover:
      return "proper_cover";
    case FullVerdict::proper_embedding:
      return "proper_embedding";
    case FullVerdict::neither:
      return "neither";
  }
  return "neither";
}

int evaluate_in(const LocalGroupoidTable& to, const std::vector<int>& arrow_map, const Word& w) {
  if (w.letters.empty()) throw InvalidParams("evaluate_in: empty word");
  int acc = arrow_map.at(static_cast<std::size_t>(w.letters.front()));
  for (std::size_t i = 1; i < w.letters.size(); ++i) {
    acc = to.product(acc, arrow_map.at(static_cast<std::size_t>(w.letters[i])));
    if (acc == LocalGroupoidTable::kUndefined) throw PreconditionError("evaluate_in: product undefined in target table");
  }
  return acc;
}

std::string morphism_defect(const LocalGroupoidTable& from, const LocalGroupoidTable& to,
                            const std::vector<int>& arrow_map) {
  if (static_cast<int>(arrow_map.size()) != from.arrow_count()) return "arrow map has the wrong length";
  for (int a : arrow_map)
    if (a < 0 || a >= to.arrow_count()) return "arrow map hits an unknown arrow";
  std::map<int, int> objects;
  const auto object_ok = [&](int o, int image) {
    auto [it, fresh] = objects.emplace(o, image);
    return fresh || it->second == image;
  };
  for (int a = 0; a < from.arrow_count(); ++a) {
    const int b = arrow_map[static_cast<std::size_t>(a)];
    if (!object_ok(from.source(a), to.source(b)) || !object_ok(from.target(a), to.target(b)))
      return "objects of " + from.arrow_name(a) + " are not mapped consistently";
  }
  for (int o = 0; o < from.object_count(); ++o) {
    const int image = arrow_map[static_cast<std::size_t>(from.unit(o))];
    if (!to.is_unit(image)) return "unit " + from.arrow_name(from.unit(o)) + " does not map to a unit";
  }
  for (int g = 0; g < from.arrow_count(); ++g)
    for (int h = 0; h < from.arrow_count(); ++h) {
      const int gh = from.product(g, h);
      if (gh == LocalGroupoidTable::kUndefined) continue;
      if (to.product(arrow_map[static_cast<std::size_t>(g)], arrow_map[static_cast<std::size_t>(h)]) !=
          arrow_map[static_cast<std::size_t>(gh)])
        return "product " + from.arrow_name(g) + " " + from.arrow_name(h) + " is not preserved";
    }
  return {};
}

FullCheckResult full_check(const LocalGroupoidTable& group, const std::vector<int>& window, int length_bound,
                           int exploration_bound, const SearchLimits& limits) {
  if (!group.total()) throw PreconditionError("full_check: ambient table must be total");
  std::vector<int> kept = window;
  std::sort(kept.begin(), kept.end());
  kept.erase(std::unique(kept.begin(), kept.end()), kept.end());
  for (int o = 0; o < group.object_count(); ++o)
    if (!std::binary_search(kept.begin(), kept.end(), group.unit(o)))
      throw PreconditionError("full_check: window must contain every unit");
  FullCheckResult res;
  res.length_bound = length_bound;
  res.exploration_bound = exploration_bound;
  res.unreached = generation_check(group, kept);
  res.surjective = res.unreached.empty();

  const LocalGroupoidTable local = group.restrict_to(kept);
  const ACClassification ac = ac_quotient(local, length_bound, exploration_bound, limits);
  res.classes = static_cast<int>(ac.classes().size());
  res.stable = ac.stable();
  std::map<int, int> seen;
  for (const auto& c : ac.classes()) {
    const int image = evaluate_in(group, kept, c.representative);
    auto [it, fresh] = seen.emplace(image, c.id);
    if (!fresh && !res.collision) {
      const auto lift = [&](const Word& w) {
        Word g;
        for (int a : w.letters) g.letters.push_back(kept[static_cast<std::size_t>(a)]);
        return g;
      };
      res.collision = std::make_pair(lift(ac.classes()[static_cast<std::size_t>(it->second)].representative),
                                     lift(c.representative));
      res.image = image;
    }
  }
  res.injective = !res.collision;
  if (res.surjective && res.injective)
    res.verdict = FullVerdict::iso;
  else if (res.surjective)
    res.verdict = FullVerdict::proper_cover;
  else if (res.injective)
    res.verdict = FullVerdict::proper_embedding;
  else
    res.verdict = FullVerdict::neither;
  return res;
}

}  // namespace sprayoid
