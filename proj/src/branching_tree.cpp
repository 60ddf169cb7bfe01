#include "cbss/branching_tree.hpp"

#include <cmath>
#include <functional>
#include <ostream>
#include <queue>
#include <stdexcept>

namespace cbss {

GWTree sample_tree(Philox& rng, std::int64_t progeny_cap, double time_cap) {
  if (progeny_cap < 1 || !(time_cap > 0)) throw std::domain_error("sample_tree: caps must be positive");

  struct Pending {
    double birth;
    std::int64_t id;
    std::optional<std::int64_t> parent;
    bool operator>(const Pending& o) const { return birth > o.birth || (birth == o.birth && id > o.id); }
  };
  std::priority_queue<Pending, std::vector<Pending>, std::greater<>> pending;
  pending.push({0.0, 0, std::nullopt});
  std::int64_t next_id = 1;

  GWTree tree;
  while (!pending.empty()) {
    const Pending p = pending.top();
    if (p.birth > time_cap || static_cast<std::int64_t>(tree.nodes.size()) >= progeny_cap) {
      tree.caps_hit = true;
      tree.valid_until = std::min(time_cap, p.birth);
      break;
    }
    pending.pop();
    const double lifetime = exponential(rng);
    const Fate fate = coin(rng) ? Fate::Split : Fate::Die;
    tree.nodes.push_back({p.id, p.parent, p.birth, lifetime, fate});
    tree.extinction_time = std::max(tree.extinction_time, p.birth + lifetime);
    if (fate == Fate::Split) {
      pending.push({p.birth + lifetime, next_id++, p.id});
      pending.push({p.birth + lifetime, next_id++, p.id});
    }
  }
  tree.progeny = static_cast<std::int64_t>(tree.nodes.size());
  return tree;
}

std::optional<std::int64_t> sample_progeny(Philox& rng, std::int64_t cap) {
  // Each processed node adds +1 (split: two children replace it) or -1 to the
  // count of unprocessed nodes; xi is the hitting time of 0.
  std::int64_t open = 1;
  std::int64_t count = 0;
  while (open > 0) {
    std::uint64_t bits = rng();
    for (int b = 0; b < 64 && open > 0; ++b, bits >>= 1) {
      if (++count > cap) return std::nullopt;
      open += (bits & 1U) ? 1 : -1;
    }
  }
  return count;
}

double survival_prob_exact(double t) {
  if (t < 0) throw std::domain_error("survival_prob_exact: t must be non-negative");
  return 2.0 / (t + 2.0);
}

double progeny_pmf(std::int64_t k) {
  if (k < 0) throw std::domain_error("progeny_pmf: k must be non-negative");
  const double kk = static_cast<double>(k);
  const double log_catalan = std::lgamma(2 * kk + 1) - 2 * std::lgamma(kk + 1) - std::log(kk + 1);
  return std::exp(log_catalan - (2 * kk + 1) * std::log(2.0));
}

double progeny_tail(std::int64_t m) {
  if (m <= 1) return 1.0;
  // P(xi >= m) = 1 - sum over odd sizes below m.
  double below = 0.0;
  for (std::int64_t k = 0; 2 * k + 1 < m; ++k) below += progeny_pmf(k);
  return 1.0 - below;
}

std::int64_t population_at(const GWTree& tree, double t) {
  if (t < 0) throw std::domain_error("population_at: negative time");
  if (tree.caps_hit && t > tree.valid_until) {
    throw std::domain_error("population_at: time beyond the capped horizon");
  }
  std::int64_t alive = 0;
  for (const auto& node : tree.nodes) {
    if (node.birth_time > t) break;
    if (t < node.death_time()) ++alive;
  }
  return alive;
}

void write_tree_csv(const GWTree& tree, std::ostream& out) {
  out << "id,parent,birth_time,lifetime,fate\n";
  out.precision(17);
  for (const auto& n : tree.nodes) {
    out << n.id << ',';
    if (n.parent) out << *n.parent;
    out << ',' << n.birth_time << ',' << n.lifetime << ',' << (n.fate == Fate::Split ? "split" : "die")
        << '\n';
  }
}

}  // namespace cbss
