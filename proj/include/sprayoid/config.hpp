#pragma once

// TOML model files.
//
//   name = "so3_dual"
//   builtin = "so3_dual"          # optional: so3 | sl2 | so3_dual | tangent | zero_poisson
//
//   [base]
//   n = 3
//   chart_box = "-2,2"            # one "lo,hi" for every coordinate, or an array of them
//
//   [fiber]
//   r = 3
//   fiber_radius = 2.0
//
//   [anchor]                      # rho^i_k, indices from 1; missing entries are 0
//   "1,2" = "x3"
//
//   [bracket]                     # c^m_kl; the (m,l,k) mirror defaults to the negation
//   "3,1,2" = "1"
//
//   [connection]
//   torsion_free_from_c = true    # Gamma = c / 2, or explicit "m,k,l" entries
//
//   [im_form]
//   k = 2
//   identity_sigma = true         # or [im_form.sigma] "r:i1,..." and [im_form.nu] "r:j1,..."
//
//   [numerics]
//   rk_step = 1e-3                # any field of Numerics

#include <memory>
#include <optional>
#include <string>
#include <string_view>

#include "sprayoid/algebroid.hpp"
#include "sprayoid/im_forms.hpp"
#include "sprayoid/numerics.hpp"

namespace sprayoid {

struct ModelConfig {
  std::string origin;
  std::string name;
  std::string builtin;  // empty for explicit models
  std::shared_ptr<const AlgebroidModel> model;
  std::optional<IMForm> im_form;
  Numerics numerics;
};

/// Throws ConfigError for malformed documents and unknown keys; expression
/// errors keep their own types.
ModelConfig parse_model_config(std::string_view text, const std::string& origin = "<memory>");
ModelConfig load_model_config(const std::string& path);

/// "a,b,c" -> vector; empty text gives an empty vector.
Vec parse_vector(std::string_view text);

}  // namespace sprayoid
