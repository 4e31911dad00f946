#include "sprayoid/globalization.hpp"

#include <cmath>
#include <sstream>

#include "sprayoid/errors.hpp"
#include "sprayoid/spray_flow.hpp"
#include "sprayoid/spray_groupoid.hpp"

namespace sprayoid {

ComposableTuple compose_chain(const AlgebroidModel& model, const Vec& x0, const std::vector<Vec>& fibers,
                              const std::vector<Vec>& base_tangents,
                              const std::vector<std::vector<Vec>>& fiber_tangents, const Numerics& num) {
  const std::size_t l = fibers.size();
  const std::size_t k = base_tangents.size();
  if (l == 0) throw InvalidParams("compose_chain: need at least one slot");
  if (fiber_tangents.size() != l) throw InvalidParams("compose_chain: one list of fiber tangents per slot");
  if (x0.size() != model.n()) throw InvalidParams("compose_chain: base point has wrong dimension");
  ComposableTuple w;
  Vec x = x0;
  std::vector<Vec> dx = base_tangents;
  for (std::size_t j = 0; j < l; ++j) {
    if (fibers[j].size() != model.r() || fiber_tangents[j].size() != k)
      throw InvalidParams("compose_chain: slot " + std::to_string(j) + " has wrong shape");
    const ArrowPoint g{x, fibers[j]};
    std::vector<TangentOfA> ts;
    for (std::size_t q = 0; q < k; ++q) {
      if (dx[q].size() != model.n() || fiber_tangents[j][q].size() != model.r())
        throw InvalidParams("compose_chain: tangent has wrong dimension");
      ts.push_back({dx[q], fiber_tangents[j][q]});
    }
    const FlowState end = variational_flow(model, g, ts, 1.0, num.rk_step);
    w.arrows.push_back(g);
    w.tangents.push_back(std::move(ts));
    x = end.point.x;
    for (std::size_t q = 0; q < k; ++q) dx[q] = end.tangents[q].dx;
  }
  return w;
}

void check_tuple(const AlgebroidModel& model, const IMForm& f, const ComposableTuple& w, const Numerics& num) {
  if (w.arrows.empty()) throw InvalidParams("word of arrows is empty");
  if (w.tangents.size() != w.arrows.size()) throw InvalidParams("one tangent list per slot is required");
  for (std::size_t j = 0; j < w.arrows.size(); ++j) {
    const ArrowPoint& g = w.arrows[j];
    if (g.x.size() != model.n() || g.xi.size() != model.r()) throw InvalidParams("arrow has wrong dimensions");
    model.require_domain(g, "word");
    if (static_cast<int>(w.tangents[j].size()) != f.k)
      throw InvalidParams("slot " + std::to_string(j) + " needs " + std::to_string(f.k) + " tangents");
    for (const TangentOfA& t : w.tangents[j])
      if (t.dx.size() != model.n() || t.dxi.size() != model.r()) throw InvalidParams("tangent has wrong dimensions");
    if (j + 1 < w.arrows.size()) {
      const double gap = (source(model, g, num) - w.arrows[j + 1].x).norm();
      if (gap > num.match_tol) {
        std::ostringstream os;
        os << "slots " << j << " and " << j + 1 << " do not compose: |source - target| = " << gap;
        throw NotComposable(os.str());
      }
    }
  }
}

double word_form_value(const AlgebroidModel& model, const IMForm& f, const ComposableTuple& w, const Numerics& num) {
  check_tuple(model, f, w, num);
  double total = 0.0;
  for (std::size_t j = 0; j < w.arrows.size(); ++j) total += integrate_form(model, f, w.arrows[j], w.tangents[j], num);
  return total;
}

ComposableTuple contract_slot(const AlgebroidModel& model, const ComposableTuple& w, int i, const Numerics& num) {
  const int l = static_cast<int>(w.length());
  if (i < 1 || i >= l) throw InvalidParams("contract_slot: position must lie in [1, l)");
  const std::size_t a = static_cast<std::size_t>(i - 1), b = static_cast<std::size_t>(i);
  ComposableTuple out;
  for (std::size_t j = 0; j < a; ++j) {
    out.arrows.push_back(w.arrows[j]);
    out.tangents.push_back(w.tangents[j]);
  }
  out.arrows.push_back(multiply(model, w.arrows[a], w.arrows[b], num));
  std::vector<TangentOfA> merged;
  for (std::size_t q = 0; q < w.tangents[a].size(); ++q)
    merged.push_back(product_differential(model, w.arrows[a], w.arrows[b], {w.tangents[a][q], w.tangents[b][q]}, num));
  out.tangents.push_back(std::move(merged));
  for (std::size_t j = b + 1; j < w.length(); ++j) {
    out.arrows.push_back(w.arrows[j]);
    out.tangents.push_back(w.tangents[j]);
  }
  return out;
}

ComposableTuple insert_unit(const AlgebroidModel& model, const ComposableTuple& w, int j, const Numerics& num) {
  const int l = static_cast<int>(w.length());
  if (j < 0 || j > l) throw InvalidParams("insert_unit: position must lie in [0, l]");
  if (l == 0) throw InvalidParams("insert_unit: empty word");
  Vec x;
  std::vector<TangentOfA> ts;
  if (j == 0) {
    x = w.arrows[0].x;
    for (const TangentOfA& t : w.tangents[0]) ts.push_back({t.dx, Vec::Zero(model.r())});
  } else {
    const FlowState end = variational_flow(model, w.arrows[static_cast<std::size_t>(j - 1)],
                                           w.tangents[static_cast<std::size_t>(j - 1)], 1.0, num.rk_step);
    x = end.point.x;
    for (const TangentOfA& t : end.tangents) ts.push_back({t.dx, Vec::Zero(model.r())});
  }
  ComposableTuple out = w;
  out.arrows.insert(out.arrows.begin() + j, unit(model, x));
  out.tangents.insert(out.tangents.begin() + j, std::move(ts));
  return out;
}

double face_invariance_residual(const AlgebroidModel& model, const IMForm& f, const ComposableTuple& w, int i,
                                const Numerics& num) {
  const double full = word_form_value(model, f, w, num);
  const ComposableTuple face = contract_slot(model, w, i, num);
  return std::abs(word_form_value(model, f, face, num) - full);
}

double degeneracy_residual(const AlgebroidModel& model, const IMForm& f, const ComposableTuple& w, int j,
                           const Numerics& num) {
  const double full = word_form_value(model, f, w, num);
  return std::abs(word_form_value(model, f, insert_unit(model, w, j, num), num) - full);
}

}  // namespace sprayoid
