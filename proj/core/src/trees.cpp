#include "model_impl.hpp"

#include "osa/error.hpp"
#include "osa/rng.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace osa::detail {

const TreeNode& Tree::leaf_for(std::span<const double> x) const {
  std::size_t i = 0;
  while (!nodes[i].leaf()) {
    const auto& n = nodes[i];
    i = static_cast<std::size_t>(x[static_cast<std::size_t>(n.feature)] <= n.threshold ? n.left : n.right);
  }
  return nodes[i];
}

double Tree::predict_p(std::span<const double> x) const {
  const auto& leaf = leaf_for(x);
  return laplace(leaf.n0, leaf.n1);
}

json Tree::to_json() const {
  json arr = json::array();
  for (const auto& n : nodes) arr.push_back(json::array({n.feature, n.threshold, n.left, n.right, n.n0, n.n1}));
  return arr;
}

Tree Tree::from_json(const json& j) {
  Tree t;
  for (const auto& e : j) {
    TreeNode n;
    n.feature = e.at(0).get<int>();
    n.threshold = e.at(1).get<double>();
    n.left = e.at(2).get<int>();
    n.right = e.at(3).get<int>();
    n.n0 = e.at(4).get<double>();
    n.n1 = e.at(5).get<double>();
    t.nodes.push_back(n);
  }
  const auto count = static_cast<int>(t.nodes.size());
  if (count == 0) throw FormatError("tree without nodes");
  for (const auto& n : t.nodes) {
    if (!n.leaf() && (n.left <= 0 || n.right <= 0 || n.left >= count || n.right >= count)) {
      throw FormatError("tree node has an invalid child index");
    }
  }
  return t;
}

namespace {

double entropy2(double c0, double c1) {
  const double n = c0 + c1;
  double h = 0.0;
  if (c0 > 0.0) h -= c0 / n * std::log2(c0 / n);
  if (c1 > 0.0) h -= c1 / n * std::log2(c1 / n);
  return h;
}

enum class Criterion { gain_ratio, info_gain };

struct Candidate {
  int feature{-1};
  double threshold{0.0};
  double gain{0.0};
  double ratio{0.0};
};

double midpoint(double a, double b) {
  const double t = a + (b - a) / 2.0;
  return t < b ? t : a;
}

Candidate best_split_for_feature(const Dataset& ds, std::span<const std::size_t> rows, std::size_t j,
                                 std::size_t min_leaf, double parent_entropy) {
  std::vector<std::pair<double, int>> v;
  v.reserve(rows.size());
  for (std::size_t r : rows) v.emplace_back(ds.at(r, j), ds.y[r]);
  std::sort(v.begin(), v.end());
  double t0 = 0.0;
  double t1 = 0.0;
  for (const auto& [x, y] : v) (y == 1 ? t1 : t0) += 1.0;
  const double n = t0 + t1;
  Candidate best;
  double l0 = 0.0;
  double l1 = 0.0;
  for (std::size_t i = 0; i + 1 < v.size(); ++i) {
    (v[i].second == 1 ? l1 : l0) += 1.0;
    if (!(v[i].first < v[i + 1].first)) continue;
    const double nl = l0 + l1;
    const double nr = n - nl;
    if (nl < static_cast<double>(min_leaf) || nr < static_cast<double>(min_leaf)) continue;
    const double child = (nl * entropy2(l0, l1) + nr * entropy2(t0 - l0, t1 - l1)) / n;
    const double gain = parent_entropy - child;
    if (best.feature < 0 || gain > best.gain) {
      best.feature = static_cast<int>(j);
      best.gain = gain;
      best.threshold = midpoint(v[i].first, v[i + 1].first);
      const double split_info = entropy2(nl, nr);
      best.ratio = split_info > 0.0 ? gain / split_info : 0.0;
    }
  }
  return best;
}

constexpr double kMinGain = 1e-12;

int grow_node(Tree& t, const Dataset& ds, std::vector<std::size_t> rows, Criterion criterion,
              const TreeParams& p, int depth) {
  TreeNode node;
  for (std::size_t r : rows) (ds.y[r] == 1 ? node.n1 : node.n0) += 1.0;
  const int idx = static_cast<int>(t.nodes.size());
  t.nodes.push_back(node);
  const double n = node.n0 + node.n1;
  if (node.n0 == 0.0 || node.n1 == 0.0 || n < 2.0 * static_cast<double>(p.min_leaf) || depth >= p.max_depth) {
    return idx;
  }
  const double h = entropy2(node.n0, node.n1);
  std::vector<Candidate> cands;
  for (std::size_t j = 0; j < ds.d; ++j) {
    const auto c = best_split_for_feature(ds, rows, j, p.min_leaf, h);
    if (c.feature >= 0) cands.push_back(c);
  }
  if (cands.empty()) return idx;
  const Candidate* chosen = nullptr;
  if (criterion == Criterion::info_gain) {
    for (const auto& c : cands) {
      if (chosen == nullptr || c.gain > chosen->gain) chosen = &c;
    }
  } else {
    double avg = 0.0;
    for (const auto& c : cands) avg += c.gain;
    avg /= static_cast<double>(cands.size());
    for (const auto& c : cands) {
      if (c.gain < avg - kMinGain) continue;
      if (chosen == nullptr || c.ratio > chosen->ratio) chosen = &c;
    }
  }
  if (chosen == nullptr || chosen->gain <= kMinGain) return idx;

  std::vector<std::size_t> left;
  std::vector<std::size_t> right;
  const auto f = static_cast<std::size_t>(chosen->feature);
  for (std::size_t r : rows) (ds.at(r, f) <= chosen->threshold ? left : right).push_back(r);
  const int feature = chosen->feature;
  const double threshold = chosen->threshold;
  rows.clear();
  rows.shrink_to_fit();
  const int l = grow_node(t, ds, std::move(left), criterion, p, depth + 1);
  const int r = grow_node(t, ds, std::move(right), criterion, p, depth + 1);
  auto& self = t.nodes[static_cast<std::size_t>(idx)];
  self.feature = feature;
  self.threshold = threshold;
  self.left = l;
  self.right = r;
  return idx;
}

Tree compact(const Tree& t) {
  Tree out;
  const auto copy = [&](auto&& self, int i) -> int {
    const auto& src = t.nodes[static_cast<std::size_t>(i)];
    const int idx = static_cast<int>(out.nodes.size());
    out.nodes.push_back(src);
    if (!src.leaf()) {
      const int l = self(self, src.left);
      const int r = self(self, src.right);
      out.nodes[static_cast<std::size_t>(idx)].left = l;
      out.nodes[static_cast<std::size_t>(idx)].right = r;
    } else {
      out.nodes[static_cast<std::size_t>(idx)].left = -1;
      out.nodes[static_cast<std::size_t>(idx)].right = -1;
    }
    return idx;
  };
  copy(copy, 0);
  return out;
}

void make_leaf(TreeNode& n) {
  n.feature = -1;
  n.threshold = 0.0;
}

double leaf_errors(const TreeNode& n) { return n.n1 >= n.n0 ? n.n0 : n.n1; }

double prune_pessimistic(Tree& t, int i, double cf) {
  auto& n = t.nodes[static_cast<std::size_t>(i)];
  const double e = leaf_errors(n);
  const double as_leaf = e + pessimistic_extra_errors(n.n0 + n.n1, e, cf);
  if (n.leaf()) return as_leaf;
  const int l = n.left;
  const int r = n.right;
  const double sub = prune_pessimistic(t, l, cf) + prune_pessimistic(t, r, cf);
  if (as_leaf <= sub + 0.1) {
    make_leaf(t.nodes[static_cast<std::size_t>(i)]);
    return as_leaf;
  }
  return sub;
}

double normal_quantile(double p) {
  double lo = -10.0;
  double hi = 10.0;
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (0.5 * std::erfc(-mid / std::sqrt(2.0)) < p) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

}  // namespace

double pessimistic_extra_errors(double n, double e, double cf) {
  if (!(cf > 0.0) || cf > 0.5) throw InvalidArgument("confidence factor must lie in (0, 0.5]");
  if (n <= 0.0) return 0.0;
  if (e < 1.0) {
    const double base = n * (1.0 - std::pow(cf, 1.0 / n));
    if (e == 0.0) return base;
    return base + e * (pessimistic_extra_errors(n, 1.0, cf) - base);
  }
  if (e + 0.5 >= n) return std::max(n - e, 0.0);
  const double z = normal_quantile(1.0 - cf);
  const double f = (e + 0.5) / n;
  const double r = (f + z * z / (2.0 * n) + z * std::sqrt(f / n - f * f / n + z * z / (4.0 * n * n))) /
                   (1.0 + z * z / n);
  return r * n - e;
}

Tree grow_c45(const Dataset& ds, std::span<const std::size_t> rows, const TreeParams& p) {
  Tree t;
  grow_node(t, ds, std::vector<std::size_t>(rows.begin(), rows.end()), Criterion::gain_ratio, p, 0);
  prune_pessimistic(t, 0, p.cf);
  return compact(t);
}

namespace {

int node_class(const TreeNode& n) { return n.n1 >= n.n0 ? 1 : 0; }

double prune_reduced_error(Tree& t, int i, const std::vector<double>& err) {
  auto& n = t.nodes[static_cast<std::size_t>(i)];
  const double as_leaf = err[static_cast<std::size_t>(i)];
  if (n.leaf()) return as_leaf;
  const int l = n.left;
  const int r = n.right;
  const double sub = prune_reduced_error(t, l, err) + prune_reduced_error(t, r, err);
  if (as_leaf <= sub) {
    make_leaf(t.nodes[static_cast<std::size_t>(i)]);
    return as_leaf;
  }
  return sub;
}

template <typename Visit>
void route(const Tree& t, std::span<const double> x, Visit&& visit) {
  std::size_t i = 0;
  while (true) {
    visit(i);
    const auto& n = t.nodes[i];
    if (n.leaf()) return;
    i = static_cast<std::size_t>(x[static_cast<std::size_t>(n.feature)] <= n.threshold ? n.left : n.right);
  }
}

}  // namespace

Tree grow_rep(const Dataset& ds, std::span<const std::size_t> rows, const TreeParams& p, std::uint64_t seed) {
  std::vector<std::size_t> by_class[2];
  for (std::size_t r : rows) by_class[ds.y[r] == 1 ? 1 : 0].push_back(r);
  Rng rng(seed);
  std::vector<std::size_t> grow;
  std::vector<std::size_t> prune;
  for (auto& cls : by_class) {
    rng.shuffle(std::span<std::size_t>(cls));
    const std::size_t held = cls.size() / 3;
    prune.insert(prune.end(), cls.begin(), cls.begin() + static_cast<std::ptrdiff_t>(held));
    grow.insert(grow.end(), cls.begin() + static_cast<std::ptrdiff_t>(held), cls.end());
  }
  std::sort(grow.begin(), grow.end());
  std::sort(prune.begin(), prune.end());

  Tree t;
  grow_node(t, ds, grow, Criterion::info_gain, p, 0);
  std::vector<double> err(t.nodes.size(), 0.0);
  for (std::size_t r : prune) {
    route(t, ds.row(r), [&](std::size_t i) {
      if (node_class(t.nodes[i]) != ds.y[r]) err[i] += 1.0;
    });
  }
  prune_reduced_error(t, 0, err);
  t = compact(t);
  for (auto& n : t.nodes) n.n0 = n.n1 = 0.0;
  for (std::size_t r : rows) {
    route(t, ds.row(r), [&](std::size_t i) { (ds.y[r] == 1 ? t.nodes[i].n1 : t.nodes[i].n0) += 1.0; });
  }
  return t;
}

Stump fit_stump(const Dataset& ds, std::span<const double> w, const std::vector<std::vector<std::size_t>>& order) {
  double w0 = 0.0;
  double w1 = 0.0;
  for (std::size_t i = 0; i < ds.n; ++i) (ds.y[i] == 1 ? w1 : w0) += w[i];
  Stump best;
  best.left = best.right = w1 >= w0 ? 1 : 0;
  double best_err = std::min(w0, w1);
  for (std::size_t j = 0; j < ds.d; ++j) {
    const auto& ord = order[j];
    double l0 = 0.0;
    double l1 = 0.0;
    for (std::size_t k = 0; k + 1 < ord.size(); ++k) {
      const std::size_t r = ord[k];
      (ds.y[r] == 1 ? l1 : l0) += w[r];
      const double a = ds.at(r, j);
      const double b = ds.at(ord[k + 1], j);
      if (!(a < b)) continue;
      const double r0 = w0 - l0;
      const double r1 = w1 - l1;
      const double err = std::min(l0, l1) + std::min(r0, r1);
      if (err < best_err - 1e-15) {
        best_err = err;
        best.feature = static_cast<int>(j);
        best.threshold = midpoint(a, b);
        best.left = l1 >= l0 ? 1 : 0;
        best.right = r1 >= r0 ? 1 : 0;
      }
    }
  }
  return best;
}

}  // namespace osa::detail
