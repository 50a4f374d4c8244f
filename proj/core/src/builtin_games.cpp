#include "kyle/builtin_games.hpp"

namespace kyle {

GameSpec example21_spec(const Rational& noise_eps) {
  if (!(noise_eps > 0) || !(noise_eps < Rational(1, 2))) {
    throw SpecError("example-2-1 requires noise weight in (0, 1/2)");
  }
  GameSpec spec;
  spec.horizon = 2;
  spec.true_values = {1, 0};
  spec.partitions = {{{0}, {1}}, {{0}, {1}}};  // full revelation in round 1
  spec.prior = {Rational(1, 2), Rational(1, 2)};
  spec.noise_support = {-1, 0, 1};
  spec.noise_dist = {noise_eps, 1 - 2 * noise_eps, noise_eps};
  spec.trade_support = {0, 1};
  spec.validate();
  return spec;
}

GameSpec example31_spec() {
  GameSpec spec;
  spec.horizon = 1;
  spec.true_values = {1, Rational(1, 2), 0};
  spec.partitions = {{{0}, {1}, {2}}};
  spec.prior = {Rational(1, 3), Rational(1, 3), Rational(1, 3)};
  spec.noise_support = {-1, 0, 1};
  spec.noise_dist = {Rational(6, 8), Rational(1, 8), Rational(1, 8)};
  spec.trade_support = {-1, 0, 1};
  spec.validate();
  return spec;
}

GameSpec theorem3_spec(int n) {
  if (n < 1) throw SpecError("theorem-3-example requires n >= 1");
  GameSpec spec;
  spec.horizon = 1;
  spec.true_values = {1, -1};
  spec.partitions = {{{0}, {1}}};
  spec.prior = {Rational(1, 2), Rational(1, 2)};
  spec.noise_support = {-1, 1};
  spec.noise_dist = {Rational(1, 2), Rational(1, 2)};
  for (int k = -n; k <= n; ++k) spec.trade_support.push_back(Rational(2 * k));
  spec.validate();
  return spec;
}

GameSpec builtin_spec(const std::string& id, const Rational& noise_eps, int order_scale) {
  if (id == "example-2-1") return example21_spec(noise_eps);
  if (id == "example-3-1") return example31_spec();
  if (id == "theorem-3-example") return theorem3_spec(order_scale);
  throw ParseError("unknown builtin '" + id + "'; known: example-2-1, example-3-1, " +
                   "theorem-3-example, uniform-continuum");
}

std::vector<std::string> builtin_ids() {
  return {"example-2-1", "example-3-1", "theorem-3-example", "uniform-continuum"};
}

}  // namespace kyle
