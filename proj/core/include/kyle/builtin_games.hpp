#pragma once

#include <string>
#include <vector>

#include "kyle/game_spec.hpp"

namespace kyle {

/// Two-period binary-value game with full revelation in round 1,
/// E_X = {0,1} and sparse symmetric noise (-1,0,1 with weight eps on the
/// extremes). Mixing is forced in equilibrium for small eps.
/// CLI builtin id: "example-2-1".
GameSpec example21_spec(const Rational& noise_eps);

/// Single-period three-value game with bearish noise; the unique
/// equilibrium has a locally decreasing price function.
/// CLI builtin id: "example-3-1".
GameSpec example31_spec();

/// Single-period game with values and noise +-1 and the even trade grid
/// {-2n,...,0,2,...,2n}; admits the extreme-order equilibrium with
/// sign prices. CLI builtin id: "theorem-3-example".
GameSpec theorem3_spec(int n);

/// Builtin lookup by CLI id ("example-2-1", "example-3-1",
/// "theorem-3-example"). Throws ParseError for unknown ids; the continuum
/// builtin ("uniform-continuum") lives in continuous_limit.hpp.
GameSpec builtin_spec(const std::string& id, const Rational& noise_eps, int order_scale);

std::vector<std::string> builtin_ids();

}  // namespace kyle
