#pragma once

#include <cstdint>
#include <iosfwd>
#include <limits>
#include <optional>
#include <vector>

#include "cbss/rng.hpp"

namespace cbss {

enum class Fate { Split, Die };

/// A particle of the critical binary branching skeleton: rate-1 exponential
/// lifetime, then split into two or die with probability 1/2 each.
struct TreeNode {
  std::int64_t id;
  std::optional<std::int64_t> parent;
  double birth_time;
  double lifetime;
  Fate fate;

  double death_time() const noexcept { return birth_time + lifetime; }
};

struct GWTree {
  std::vector<TreeNode> nodes;  ///< in birth-time order
  std::int64_t progeny = 0;
  double extinction_time = 0.0;  ///< max death time; only meaningful when !caps_hit
  bool caps_hit = false;
  /// Population counts are exact on [0, valid_until]; infinite for complete trees.
  double valid_until = std::numeric_limits<double>::infinity();
};

/// Grows the tree breadth-first in birth-time order.  Stops with caps_hit
/// when more than `progeny_cap` nodes would be needed or a node is born
/// after `time_cap`.
GWTree sample_tree(Philox& rng, std::int64_t progeny_cap, double time_cap);

/// Total progeny only, by the double-or-nothing walk; returns nullopt when
/// the count would exceed `cap`.  Same law as sample_tree(...).progeny.
std::optional<std::int64_t> sample_progeny(Philox& rng, std::int64_t cap);

/// P(survival to t) = 2 / (t + 2).
double survival_prob_exact(double t);

/// P(xi = 2k + 1) = Catalan(k) / 2^(2k+1).
double progeny_pmf(std::int64_t k);

/// P(xi >= m), summed from progeny_pmf.
double progeny_tail(std::int64_t m);

/// Number of nodes alive at t (birth <= t < death).
std::int64_t population_at(const GWTree& tree, double t);

/// Debug dump: id,parent,birth_time,lifetime,fate.
void write_tree_csv(const GWTree& tree, std::ostream& out);

}  // namespace cbss
