#pragma once

// Word-level extension of a multiplicative form: on composable tuples
// (g_1, ..., g_l) of spray-groupoid arrows, Omega^(l) = sum_j pr_j^* Omega.
// Contracting adjacent slots (face maps) and inserting units (degeneracies)
// must leave the value unchanged.

#include <vector>

#include "sprayoid/algebroid.hpp"
#include "sprayoid/im_forms.hpp"
#include "sprayoid/numerics.hpp"

namespace sprayoid {

/// Arrows with source(g_j) = target(g_{j+1}) and, per slot, k tangent
/// vectors. Tangent direction q is the family (tangents[0][q], ...,
/// tangents[l-1][q]) tangent to the manifold of composable tuples.
struct ComposableTuple {
  std::vector<ArrowPoint> arrows;
  std::vector<std::vector<TangentOfA>> tangents;  // [slot][q]

  std::size_t length() const noexcept { return arrows.size(); }
};

/// Builds a tuple from the target of g_1 and the fiber parts of every slot:
/// x_{j+1} = source(g_j). Base tangents of slot 0 are `base_tangents`; later
/// slots get dx = ds(previous slot tangent), and dxi from `fiber_tangents`.
ComposableTuple compose_chain(const AlgebroidModel& model, const Vec& x0, const std::vector<Vec>& fibers,
                              const std::vector<Vec>& base_tangents,
                              const std::vector<std::vector<Vec>>& fiber_tangents, const Numerics& num = {});

/// Throws NotComposable (matching above match_tol), LeftDomain, or
/// InvalidParams for shape errors.
void check_tuple(const AlgebroidModel& model, const IMForm& f, const ComposableTuple& w, const Numerics& num = {});

double word_form_value(const AlgebroidModel& model, const IMForm& f, const ComposableTuple& w,
                       const Numerics& num = {});

/// Contracts slots i and i + 1 (1 <= i < l) and pushes the tangents forward
/// with the central-difference differential of multiply.
ComposableTuple contract_slot(const AlgebroidModel& model, const ComposableTuple& w, int i, const Numerics& num = {});

/// Inserts a unit before slot j (0 <= j <= l); its tangents are tangent to the
/// unit section over the neighbouring base tangent.
ComposableTuple insert_unit(const AlgebroidModel& model, const ComposableTuple& w, int j, const Numerics& num = {});

/// |Omega^(l-1)(contract_slot(w, i)) - Omega^(l)(w)|.
double face_invariance_residual(const AlgebroidModel& model, const IMForm& f, const ComposableTuple& w, int i,
                                const Numerics& num = {});

/// |Omega^(l+1)(insert_unit(w, j)) - Omega^(l)(w)|.
double degeneracy_residual(const AlgebroidModel& model, const IMForm& f, const ComposableTuple& w, int j,
                           const Numerics& num = {});

}  // namespace sprayoid
