#include "osa/classify.hpp"

#include "file_util.hpp"
#include "model_impl.hpp"
#include "osa/error.hpp"
#include "osa/mutual_info.hpp"
#include "osa/rng.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <numeric>
#include <set>
#include <sstream>

namespace osa {

using detail::Dataset;
using detail::json;
using detail::ModelImpl;

namespace {

constexpr const char* kFormatTag = "osadetect-model";
constexpr int kFormatVersion = 1;

struct AlgoName {
  Algorithm algo;
  const char* id;
};

constexpr AlgoName kAlgoNames[] = {
    {Algorithm::knn, "knn"},
    {Algorithm::decision_table, "decision_table"},
    {Algorithm::c45_tree, "c45_tree"},
    {Algorithm::rep_tree, "rep_tree"},
    {Algorithm::adaboost_stump, "adaboost_stump"},
    {Algorithm::bagging_rept, "bagging_rept"},
    {Algorithm::kmeans_baseline, "kmeans_baseline"},
};

}  // namespace

const char* to_string(Algorithm a) {
  for (const auto& e : kAlgoNames) {
    if (e.algo == a) return e.id;
  }
  return "unknown";
}

Algorithm parse_algorithm(const std::string& id) {
  for (const auto& e : kAlgoNames) {
    if (id == e.id) return e.algo;
  }
  throw InvalidArgument("unknown algorithm: " + id);
}

const std::vector<Algorithm>& all_algorithms() {
  static const std::vector<Algorithm> v = [] {
    std::vector<Algorithm> out;
    for (const auto& e : kAlgoNames) out.push_back(e.algo);
    return out;
  }();
  return v;
}

Prediction make_prediction(double p_apnea) { return Prediction{p_apnea, p_apnea >= 0.5}; }

ClassifierModel::ClassifierModel(Algorithm algorithm, std::uint64_t seed, HyperParams hyper,
                                 std::vector<std::string> names, std::shared_ptr<const detail::ModelImpl> impl)
    : algorithm_(algorithm), seed_(seed), hyper_(std::move(hyper)), names_(std::move(names)), impl_(std::move(impl)) {}

Prediction ClassifierModel::predict(std::span<const double> x) const {
  if (!impl_) throw InvalidArgument("model is not trained");
  if (x.size() != names_.size()) {
    throw InvalidArgument("expected " + std::to_string(names_.size()) + " feature values, got " +
                          std::to_string(x.size()));
  }
  return make_prediction(std::clamp(impl_->predict_p(x), 0.0, 1.0));
}

namespace {

// ---------- standardization shared by knn and k-means ----------

struct Scaler {
  std::vector<double> mean;
  std::vector<double> sd;

  static Scaler fit(const Dataset& ds) {
    Scaler s;
    s.mean.assign(ds.d, 0.0);
    s.sd.assign(ds.d, 1.0);
    for (std::size_t j = 0; j < ds.d; ++j) {
      double m = 0.0;
      for (std::size_t i = 0; i < ds.n; ++i) m += ds.at(i, j);
      m /= static_cast<double>(ds.n);
      double ss = 0.0;
      for (std::size_t i = 0; i < ds.n; ++i) ss += (ds.at(i, j) - m) * (ds.at(i, j) - m);
      const double sd = ds.n > 1 ? std::sqrt(ss / static_cast<double>(ds.n - 1)) : 0.0;
      s.mean[j] = m;
      s.sd[j] = sd > 0.0 ? sd : 1.0;
    }
    return s;
  }

  void apply(std::span<const double> x, std::span<double> out) const {
    for (std::size_t j = 0; j < x.size(); ++j) out[j] = (x[j] - mean[j]) / sd[j];
  }

  json to_json() const { return json{{"mean", mean}, {"sd", sd}}; }
  static Scaler from_json(const json& j) {
    Scaler s;
    s.mean = j.at("mean").get<std::vector<double>>();
    s.sd = j.at("sd").get<std::vector<double>>();
    return s;
  }
};

double squared_distance(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t j = 0; j < a.size(); ++j) s += (a[j] - b[j]) * (a[j] - b[j]);
  return s;
}

// ---------- k nearest neighbours ----------

class KnnModel final : public ModelImpl {
 public:
  std::size_t k{5};
  std::size_t d{0};
  Scaler scaler;
  std::vector<double> points;  // standardized, row-major
  std::vector<int> labels;

  double predict_p(std::span<const double> x) const override {
    std::vector<double> q(d);
    scaler.apply(x, q);
    const std::size_t n = labels.size();
    std::vector<std::pair<double, std::size_t>> dist(n);
    for (std::size_t i = 0; i < n; ++i) {
      dist[i] = {squared_distance(q, std::span<const double>(points.data() + i * d, d)), i};
    }
    const std::size_t kk = std::min(k, n);
    std::partial_sort(dist.begin(), dist.begin() + static_cast<std::ptrdiff_t>(kk), dist.end());
    double pos = 0.0;
    for (std::size_t i = 0; i < kk; ++i) pos += labels[dist[i].second];
    return pos / static_cast<double>(kk);
  }

  json to_json() const override {
    return json{{"k", k}, {"scaler", scaler.to_json()}, {"points", points}, {"labels", labels}};
  }

  static std::shared_ptr<KnnModel> from_json(const json& j, std::size_t d) {
    auto m = std::make_shared<KnnModel>();
    m->k = j.at("k").get<std::size_t>();
    m->d = d;
    m->scaler = Scaler::from_json(j.at("scaler"));
    m->points = j.at("points").get<std::vector<double>>();
    m->labels = j.at("labels").get<std::vector<int>>();
    if (m->points.size() != m->labels.size() * d || m->labels.empty() || m->k == 0) {
      throw FormatError("knn model: inconsistent parameters");
    }
    return m;
  }
};

std::shared_ptr<ModelImpl> train_knn(const Dataset& ds, std::size_t k) {
  auto m = std::make_shared<KnnModel>();
  m->k = k;
  m->d = ds.d;
  m->scaler = Scaler::fit(ds);
  m->points.resize(ds.n * ds.d);
  for (std::size_t i = 0; i < ds.n; ++i) {
    m->scaler.apply(ds.row(i), std::span<double>(m->points.data() + i * ds.d, ds.d));
  }
  m->labels = ds.y;
  return m;
}

// ---------- decision table ----------

using Key = std::vector<int>;
struct CellCounts {
  double n0{0.0};
  double n1{0.0};
};

int bin_of(const std::vector<double>& cuts, double x) {
  return static_cast<int>(std::lower_bound(cuts.begin(), cuts.end(), x) - cuts.begin());
}

class DecisionTableModel final : public ModelImpl {
 public:
  std::vector<std::size_t> features;      // model columns used
  std::vector<std::vector<double>> cuts;  // per used feature
  std::map<Key, CellCounts> cells;
  CellCounts total;

  Key key_for(std::span<const double> x) const {
    Key k(features.size());
    for (std::size_t i = 0; i < features.size(); ++i) k[i] = bin_of(cuts[i], x[features[i]]);
    return k;
  }

  double predict_p(std::span<const double> x) const override {
    const Key k = key_for(x);
    if (const auto it = cells.find(k); it != cells.end()) return detail::laplace(it->second.n0, it->second.n1);
    std::size_t best = std::numeric_limits<std::size_t>::max();
    CellCounts agg;
    for (const auto& [ck, c] : cells) {
      std::size_t dist = 0;
      for (std::size_t i = 0; i < k.size(); ++i) dist += ck[i] != k[i] ? 1 : 0;
      if (dist < best) {
        best = dist;
        agg = c;
      } else if (dist == best) {
        agg.n0 += c.n0;
        agg.n1 += c.n1;
      }
    }
    return detail::laplace(agg.n0, agg.n1);
  }

  json to_json() const override {
    json c = json::array();
    for (const auto& [k, v] : cells) c.push_back(json{{"key", k}, {"n0", v.n0}, {"n1", v.n1}});
    return json{{"features", features}, {"cuts", cuts}, {"cells", c}, {"total", {total.n0, total.n1}}};
  }

  static std::shared_ptr<DecisionTableModel> from_json(const json& j, std::size_t d) {
    auto m = std::make_shared<DecisionTableModel>();
    m->features = j.at("features").get<std::vector<std::size_t>>();
    m->cuts = j.at("cuts").get<std::vector<std::vector<double>>>();
    for (const auto& c : j.at("cells")) {
      m->cells[c.at("key").get<Key>()] = CellCounts{c.at("n0").get<double>(), c.at("n1").get<double>()};
    }
    m->total = CellCounts{j.at("total").at(0).get<double>(), j.at("total").at(1).get<double>()};
    if (m->features.size() != m->cuts.size() || m->cells.empty()) {
      throw FormatError("decision table: inconsistent parameters");
    }
    for (std::size_t f : m->features) {
      if (f >= d) throw FormatError("decision table: feature index out of range");
    }
    return m;
  }
};

std::vector<double> equal_frequency_cuts(const std::vector<double>& col, std::size_t bins) {
  const Partition p = equal_frequency_partition(col, bins);
  std::vector<double> lo(static_cast<std::size_t>(p.cell_count), std::numeric_limits<double>::infinity());
  std::vector<double> hi(static_cast<std::size_t>(p.cell_count), -std::numeric_limits<double>::infinity());
  for (std::size_t i = 0; i < col.size(); ++i) {
    const auto c = static_cast<std::size_t>(p.cell[i]);
    lo[c] = std::min(lo[c], col[i]);
    hi[c] = std::max(hi[c], col[i]);
  }
  std::vector<double> cuts;
  double prev_hi = -std::numeric_limits<double>::infinity();
  bool have_prev = false;
  for (std::size_t c = 0; c < lo.size(); ++c) {
    if (!std::isfinite(lo[c])) continue;
    if (have_prev) {
      const double t = prev_hi + (lo[c] - prev_hi) / 2.0;
      cuts.push_back(t < lo[c] ? t : prev_hi);
    }
    prev_hi = hi[c];
    have_prev = true;
  }
  return cuts;
}

// Leave-one-out accuracy of the majority-class table over `subset`.
double table_loo_accuracy(const std::vector<std::vector<int>>& binned, const std::vector<int>& y,
                          const std::vector<std::size_t>& subset, const CellCounts& total) {
  const std::size_t n = y.size();
  std::map<Key, CellCounts> cells;
  std::vector<Key> keys(n);
  for (std::size_t i = 0; i < n; ++i) {
    Key k(subset.size());
    for (std::size_t s = 0; s < subset.size(); ++s) k[s] = binned[subset[s]][i];
    auto& c = cells[k];
    (y[i] == 1 ? c.n1 : c.n0) += 1.0;
    keys[i] = std::move(k);
  }
  double correct = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    CellCounts c = cells[keys[i]];
    (y[i] == 1 ? c.n1 : c.n0) -= 1.0;
    if (c.n0 + c.n1 <= 0.0) {
      c = total;
      (y[i] == 1 ? c.n1 : c.n0) -= 1.0;
    }
    const int pred = c.n1 >= c.n0 ? 1 : 0;
    if (pred == y[i]) correct += 1.0;
  }
  return correct / static_cast<double>(n);
}

std::shared_ptr<ModelImpl> train_decision_table(const Dataset& ds, std::size_t bins, std::size_t stale_limit) {
  std::vector<std::vector<double>> all_cuts(ds.d);
  std::vector<std::vector<int>> binned(ds.d, std::vector<int>(ds.n));
  for (std::size_t j = 0; j < ds.d; ++j) {
    std::vector<double> col(ds.n);
    for (std::size_t i = 0; i < ds.n; ++i) col[i] = ds.at(i, j);
    all_cuts[j] = equal_frequency_cuts(col, bins);
    for (std::size_t i = 0; i < ds.n; ++i) binned[j][i] = bin_of(all_cuts[j], col[i]);
  }
  CellCounts total;
  for (int v : ds.y) (v == 1 ? total.n1 : total.n0) += 1.0;

  struct Node {
    double merit;
    std::size_t order;
    std::vector<std::size_t> subset;
  };
  std::set<std::vector<std::size_t>> visited;
  std::vector<Node> open;
  std::size_t counter = 0;
  Node best{table_loo_accuracy(binned, ds.y, {}, total), counter++, {}};
  open.push_back(best);
  visited.insert({});
  std::size_t stale = 0;
  while (!open.empty() && stale < stale_limit) {
    auto it = std::max_element(open.begin(), open.end(), [](const Node& a, const Node& b) {
      return a.merit < b.merit || (a.merit == b.merit && a.order > b.order);
    });
    Node cur = std::move(*it);
    open.erase(it);
    bool improved = false;
    for (std::size_t j = 0; j < ds.d; ++j) {
      if (std::find(cur.subset.begin(), cur.subset.end(), j) != cur.subset.end()) continue;
      auto child = cur.subset;
      child.insert(std::upper_bound(child.begin(), child.end(), j), j);
      if (!visited.insert(child).second) continue;
      Node node{table_loo_accuracy(binned, ds.y, child, total), counter++, child};
      if (node.merit > best.merit + 1e-12) {
        best = node;
        improved = true;
      }
      open.push_back(std::move(node));
    }
    stale = improved ? 0 : stale + 1;
  }

  auto m = std::make_shared<DecisionTableModel>();
  m->features = best.subset;
  for (std::size_t f : best.subset) m->cuts.push_back(all_cuts[f]);
  m->total = total;
  for (std::size_t i = 0; i < ds.n; ++i) {
    auto& c = m->cells[m->key_for(ds.row(i))];
    (ds.y[i] == 1 ? c.n1 : c.n0) += 1.0;
  }
  return m;
}

// ---------- single trees ----------

class TreeModel final : public ModelImpl {
 public:
  detail::Tree tree;
  double predict_p(std::span<const double> x) const override { return tree.predict_p(x); }
  json to_json() const override { return json{{"tree", tree.to_json()}}; }
};

std::vector<std::size_t> all_rows(std::size_t n) {
  std::vector<std::size_t> r(n);
  std::iota(r.begin(), r.end(), std::size_t{0});
  return r;
}

void check_tree_features(const detail::Tree& t, std::size_t d) {
  for (const auto& n : t.nodes) {
    if (!n.leaf() && static_cast<std::size_t>(n.feature) >= d) throw FormatError("tree feature index out of range");
  }
}

// ---------- AdaBoost.M1 with decision stumps ----------

class AdaBoostModel final : public ModelImpl {
 public:
  std::vector<detail::Stump> stumps;
  std::vector<double> alphas;

  double margin(std::span<const double> x) const {
    double f = 0.0;
    for (std::size_t t = 0; t < stumps.size(); ++t) f += alphas[t] * (stumps[t].predict(x) == 1 ? 1.0 : -1.0);
    return f;
  }

  double predict_p(std::span<const double> x) const override {
    return 1.0 / (1.0 + std::exp(-2.0 * margin(x)));
  }

  json to_json() const override {
    json arr = json::array();
    for (std::size_t t = 0; t < stumps.size(); ++t) {
      const auto& s = stumps[t];
      arr.push_back(json::array({s.feature, s.threshold, s.left, s.right, alphas[t]}));
    }
    return json{{"stumps", arr}};
  }

  static std::shared_ptr<AdaBoostModel> from_json(const json& j, std::size_t d) {
    auto m = std::make_shared<AdaBoostModel>();
    for (const auto& e : j.at("stumps")) {
      detail::Stump s;
      s.feature = e.at(0).get<int>();
      s.threshold = e.at(1).get<double>();
      s.left = e.at(2).get<int>();
      s.right = e.at(3).get<int>();
      if (s.feature >= static_cast<int>(d)) throw FormatError("adaboost: feature index out of range");
      m->stumps.push_back(s);
      m->alphas.push_back(e.at(4).get<double>());
    }
    if (m->stumps.empty()) throw FormatError("adaboost: no stumps");
    return m;
  }
};

std::vector<std::vector<std::size_t>> presort(const Dataset& ds) {
  std::vector<std::vector<std::size_t>> order(ds.d, all_rows(ds.n));
  for (std::size_t j = 0; j < ds.d; ++j) {
    std::stable_sort(order[j].begin(), order[j].end(),
                     [&](std::size_t a, std::size_t b) { return ds.at(a, j) < ds.at(b, j); });
  }
  return order;
}

std::shared_ptr<ModelImpl> train_adaboost(const Dataset& ds, std::size_t rounds) {
  constexpr double kMinError = 1e-10;
  const auto order = presort(ds);
  std::vector<double> w(ds.n, 1.0 / static_cast<double>(ds.n));
  auto m = std::make_shared<AdaBoostModel>();
  for (std::size_t t = 0; t < rounds; ++t) {
    const auto stump = detail::fit_stump(ds, w, order);
    double err = 0.0;
    for (std::size_t i = 0; i < ds.n; ++i) {
      if (stump.predict(ds.row(i)) != ds.y[i]) err += w[i];
    }
    if (err >= 0.5) {
      if (m->stumps.empty()) {
        m->stumps.push_back(stump);
        m->alphas.push_back(0.0);
      }
      break;
    }
    const double eps = std::max(err, kMinError);
    const double alpha = 0.5 * std::log((1.0 - eps) / eps);
    m->stumps.push_back(stump);
    m->alphas.push_back(alpha);
    if (err <= kMinError) break;
    double sum = 0.0;
    for (std::size_t i = 0; i < ds.n; ++i) {
      const bool wrong = stump.predict(ds.row(i)) != ds.y[i];
      w[i] *= std::exp(wrong ? alpha : -alpha);
      sum += w[i];
    }
    for (double& v : w) v /= sum;
  }
  return m;
}

// ---------- bagging of REP trees ----------

class BaggingModel final : public ModelImpl {
 public:
  std::vector<detail::Tree> trees;

  double predict_p(std::span<const double> x) const override {
    double votes = 0.0;
    for (const auto& t : trees) votes += t.predict_p(x) >= 0.5 ? 1.0 : 0.0;
    return votes / static_cast<double>(trees.size());
  }

  json to_json() const override {
    json arr = json::array();
    for (const auto& t : trees) arr.push_back(t.to_json());
    return json{{"trees", arr}};
  }
};

std::shared_ptr<ModelImpl> train_bagging(const Dataset& ds, std::size_t bags, const detail::TreeParams& p,
                                         std::uint64_t seed) {
  auto m = std::make_shared<BaggingModel>();
  for (std::size_t b = 0; b < bags; ++b) {
    Rng rng(derive_seed(seed, 2 * b));
    std::vector<std::size_t> sample(ds.n);
    for (auto& s : sample) s = static_cast<std::size_t>(rng.below(ds.n));
    std::sort(sample.begin(), sample.end());
    m->trees.push_back(detail::grow_rep(ds, sample, p, derive_seed(seed, 2 * b + 1)));
  }
  return m;
}

// ---------- k-means baseline ----------

class KMeansModel final : public ModelImpl {
 public:
  Scaler scaler;
  std::vector<std::vector<double>> centroids;
  std::vector<CellCounts> counts;

  std::size_t nearest(std::span<const double> z) const {
    std::size_t best = 0;
    double best_d = std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < centroids.size(); ++c) {
      const double dd = squared_distance(z, centroids[c]);
      if (dd < best_d) {
        best_d = dd;
        best = c;
      }
    }
    return best;
  }

  double predict_p(std::span<const double> x) const override {
    std::vector<double> z(x.size());
    scaler.apply(x, z);
    const auto& c = counts[nearest(z)];
    return detail::laplace(c.n0, c.n1);
  }

  json to_json() const override {
    json cnt = json::array();
    for (const auto& c : counts) cnt.push_back(json::array({c.n0, c.n1}));
    return json{{"scaler", scaler.to_json()}, {"centroids", centroids}, {"counts", cnt}};
  }

  static std::shared_ptr<KMeansModel> from_json(const json& j, std::size_t d) {
    auto m = std::make_shared<KMeansModel>();
    m->scaler = Scaler::from_json(j.at("scaler"));
    m->centroids = j.at("centroids").get<std::vector<std::vector<double>>>();
    for (const auto& c : j.at("counts")) m->counts.push_back({c.at(0).get<double>(), c.at(1).get<double>()});
    if (m->centroids.empty() || m->centroids.size() != m->counts.size()) {
      throw FormatError("kmeans: inconsistent parameters");
    }
    for (const auto& c : m->centroids) {
      if (c.size() != d) throw FormatError("kmeans: centroid dimension mismatch");
    }
    return m;
  }
};

std::shared_ptr<ModelImpl> train_kmeans(const Dataset& ds, std::size_t k, std::size_t iterations,
                                        std::uint64_t seed) {
  auto m = std::make_shared<KMeansModel>();
  m->scaler = Scaler::fit(ds);
  std::vector<std::vector<double>> z(ds.n, std::vector<double>(ds.d));
  for (std::size_t i = 0; i < ds.n; ++i) m->scaler.apply(ds.row(i), z[i]);
  k = std::min(k, ds.n);

  Rng rng(seed);
  m->centroids.push_back(z[static_cast<std::size_t>(rng.below(ds.n))]);
  std::vector<double> d2(ds.n);
  while (m->centroids.size() < k) {
    double total = 0.0;
    for (std::size_t i = 0; i < ds.n; ++i) {
      double best = std::numeric_limits<double>::infinity();
      for (const auto& c : m->centroids) best = std::min(best, squared_distance(z[i], c));
      d2[i] = best;
      total += best;
    }
    std::size_t pick = 0;
    if (total > 0.0) {
      double u = rng.uniform() * total;
      for (pick = 0; pick + 1 < ds.n; ++pick) {
        u -= d2[pick];
        if (u < 0.0) break;
      }
    } else {
      pick = static_cast<std::size_t>(rng.below(ds.n));
    }
    m->centroids.push_back(z[pick]);
  }

  std::vector<std::size_t> assign(ds.n, k);
  for (std::size_t it = 0; it < iterations; ++it) {
    bool changed = false;
    for (std::size_t i = 0; i < ds.n; ++i) {
      const std::size_t c = m->nearest(z[i]);
      if (c != assign[i]) {
        assign[i] = c;
        changed = true;
      }
    }
    if (!changed) break;
    std::vector<std::vector<double>> sums(k, std::vector<double>(ds.d, 0.0));
    std::vector<double> sizes(k, 0.0);
    for (std::size_t i = 0; i < ds.n; ++i) {
      for (std::size_t j = 0; j < ds.d; ++j) sums[assign[i]][j] += z[i][j];
      sizes[assign[i]] += 1.0;
    }
    for (std::size_t c = 0; c < k; ++c) {
      if (sizes[c] == 0.0) continue;
      for (std::size_t j = 0; j < ds.d; ++j) m->centroids[c][j] = sums[c][j] / sizes[c];
    }
  }
  m->counts.assign(k, CellCounts{});
  for (std::size_t i = 0; i < ds.n; ++i) {
    auto& c = m->counts[m->nearest(z[i])];
    (ds.y[i] == 1 ? c.n1 : c.n0) += 1.0;
  }
  return m;
}

// ---------- hyperparameters ----------

const std::map<Algorithm, HyperParams>& defaults() {
  static const std::map<Algorithm, HyperParams> d{
      {Algorithm::knn, {{"k", 5}}},
      {Algorithm::decision_table, {{"bins", 4}, {"stale", 5}}},
      {Algorithm::c45_tree, {{"min_leaf", 2}, {"cf", 0.25}}},
      {Algorithm::rep_tree, {{"min_leaf", 2}}},
      {Algorithm::adaboost_stump, {{"rounds", 50}}},
      {Algorithm::bagging_rept, {{"bags", 10}, {"min_leaf", 2}}},
      {Algorithm::kmeans_baseline, {{"clusters", 2}, {"iterations", 100}}},
  };
  return d;
}

HyperParams resolve(Algorithm a, const HyperParams& given) {
  HyperParams h = defaults().at(a);
  for (const auto& [key, value] : given) {
    if (!h.contains(key)) {
      throw InvalidArgument(std::string("unknown hyperparameter '") + key + "' for " + to_string(a));
    }
    if (!std::isfinite(value)) throw InvalidArgument("hyperparameter '" + key + "' must be finite");
    h[key] = value;
  }
  for (const auto& [key, value] : h) {
    if (key == "cf") {
      if (!(value > 0.0 && value <= 0.5)) throw InvalidArgument("hyperparameter 'cf' must lie in (0, 0.5]");
      continue;
    }
    const double minimum = key == "bins" || key == "clusters" ? 2.0 : 1.0;
    if (value != std::floor(value) || value < minimum) {
      throw InvalidArgument("hyperparameter '" + key + "' must be an integer >= " +
                            std::to_string(static_cast<int>(minimum)));
    }
  }
  if (a == Algorithm::knn && static_cast<long long>(h.at("k")) % 2 == 0) {
    throw InvalidArgument("hyperparameter 'k' must be odd");
  }
  return h;
}

std::size_t as_size(const HyperParams& h, const char* key) { return static_cast<std::size_t>(h.at(key)); }

detail::TreeParams tree_params(const HyperParams& h) {
  detail::TreeParams p;
  p.min_leaf = as_size(h, "min_leaf");
  if (const auto it = h.find("cf"); it != h.end()) p.cf = it->second;
  return p;
}

}  // namespace

ClassifierModel train(Algorithm algorithm, const FeatureMatrix& matrix, const HyperParams& hyper,
                      std::uint64_t seed) {
  const FeatureMatrix m = matrix.labeled_only();
  if (m.cols() == 0) throw InvalidArgument("cannot train on a matrix without features");
  if (m.count_label(kLabelApnoeic) == 0 || m.count_label(kLabelNormal) == 0) {
    throw InvalidArgument("training data must contain both normal and apnoeic rows");
  }
  const HyperParams h = resolve(algorithm, hyper);
  Dataset ds;
  ds.n = m.rows();
  ds.d = m.cols();
  ds.x.reserve(ds.n * ds.d);
  for (std::size_t i = 0; i < ds.n; ++i) {
    for (std::size_t j = 0; j < ds.d; ++j) {
      const double v = m.at(i, j);
      if (!std::isfinite(v)) {
        throw InvalidArgument("non-finite value for feature '" + m.names()[j] + "' in row " + std::to_string(i));
      }
      ds.x.push_back(v);
    }
  }
  ds.y = m.labels();

  std::shared_ptr<const ModelImpl> impl;
  switch (algorithm) {
    case Algorithm::knn:
      impl = train_knn(ds, as_size(h, "k"));
      break;
    case Algorithm::decision_table:
      impl = train_decision_table(ds, as_size(h, "bins"), as_size(h, "stale"));
      break;
    case Algorithm::c45_tree: {
      auto t = std::make_shared<TreeModel>();
      t->tree = detail::grow_c45(ds, all_rows(ds.n), tree_params(h));
      impl = t;
      break;
    }
    case Algorithm::rep_tree: {
      auto t = std::make_shared<TreeModel>();
      t->tree = detail::grow_rep(ds, all_rows(ds.n), tree_params(h), seed);
      impl = t;
      break;
    }
    case Algorithm::adaboost_stump:
      impl = train_adaboost(ds, as_size(h, "rounds"));
      break;
    case Algorithm::bagging_rept:
      impl = train_bagging(ds, as_size(h, "bags"), tree_params(h), seed);
      break;
    case Algorithm::kmeans_baseline:
      impl = train_kmeans(ds, as_size(h, "clusters"), as_size(h, "iterations"), seed);
      break;
  }
  ClassifierModel model(algorithm, seed, h, m.names(), std::move(impl));
  model.config_hash = matrix.config_hash;
  return model;
}

std::vector<std::size_t> column_indices(const std::vector<std::string>& wanted,
                                        const std::vector<std::string>& available) {
  std::map<std::string, std::size_t> pos;
  for (std::size_t j = 0; j < available.size(); ++j) pos.emplace(available[j], j);
  std::vector<std::size_t> out;
  out.reserve(wanted.size());
  for (const auto& w : wanted) {
    const auto it = pos.find(w);
    if (it == pos.end()) throw InvalidArgument("missing feature: " + w);
    out.push_back(it->second);
  }
  return out;
}

Prediction predict_proba(const ClassifierModel& model, const std::vector<std::string>& names,
                         std::span<const double> values) {
  if (names.size() != values.size()) throw InvalidArgument("feature names and values differ in length");
  const auto idx = column_indices(model.feature_names(), names);
  std::vector<double> x(idx.size());
  for (std::size_t k = 0; k < idx.size(); ++k) x[k] = values[idx[k]];
  return model.predict(x);
}

std::vector<Prediction> predict_matrix(const ClassifierModel& model, const FeatureMatrix& m) {
  const auto idx = column_indices(model.feature_names(), m.names());
  std::vector<Prediction> out;
  out.reserve(m.rows());
  std::vector<double> x(idx.size());
  for (std::size_t i = 0; i < m.rows(); ++i) {
    for (std::size_t k = 0; k < idx.size(); ++k) x[k] = m.at(i, idx[k]);
    out.push_back(model.predict(x));
  }
  return out;
}

Quality model_quality(const ClassifierModel& model, const FeatureMatrix& holdout) {
  const auto preds = predict_matrix(model, holdout);
  double tp = 0, fn = 0, tn = 0, fp = 0;
  for (std::size_t i = 0; i < holdout.rows(); ++i) {
    const int y = holdout.label(i);
    if (y == kLabelUnlabeled) continue;
    const bool pos = preds[i].apnoeic;
    if (y == kLabelApnoeic) {
      (pos ? tp : fn) += 1.0;
    } else {
      (pos ? fp : tn) += 1.0;
    }
  }
  Quality q;
  if (tp + fn > 0.0) q.sensitivity = tp / (tp + fn);
  if (tn + fp > 0.0) q.specificity = tn / (tn + fp);
  return q;
}

std::string serialize(const ClassifierModel& model) {
  if (!model.impl_) throw InvalidArgument("cannot serialize an untrained model");
  json j;
  j["format"] = kFormatTag;
  j["version"] = kFormatVersion;
  j["algorithm"] = to_string(model.algorithm_);
  j["seed"] = model.seed_;
  j["hyperparameters"] = model.hyper_;
  j["feature_names"] = model.names_;
  j["config_hash"] = model.config_hash;
  j["params"] = model.impl_->to_json();
  return j.dump() + "\n";
}

namespace {

ClassifierModel model_from_json(const json& j) {
  if (j.value("format", std::string{}) != kFormatTag) throw FormatError("not a model file");
  if (j.at("version").get<int>() != kFormatVersion) {
    throw UnsupportedFormatError("unsupported model version " + j.at("version").dump());
  }
  const Algorithm algo = parse_algorithm(j.at("algorithm").get<std::string>());
  const auto names = j.at("feature_names").get<std::vector<std::string>>();
  const auto hyper = j.at("hyperparameters").get<HyperParams>();
  const auto& p = j.at("params");
  const std::size_t d = names.size();
  std::shared_ptr<const ModelImpl> impl;
  switch (algo) {
    case Algorithm::knn:
      impl = KnnModel::from_json(p, d);
      break;
    case Algorithm::decision_table:
      impl = DecisionTableModel::from_json(p, d);
      break;
    case Algorithm::c45_tree:
    case Algorithm::rep_tree: {
      auto t = std::make_shared<TreeModel>();
      t->tree = detail::Tree::from_json(p.at("tree"));
      check_tree_features(t->tree, d);
      impl = t;
      break;
    }
    case Algorithm::adaboost_stump:
      impl = AdaBoostModel::from_json(p, d);
      break;
    case Algorithm::bagging_rept: {
      auto b = std::make_shared<BaggingModel>();
      for (const auto& t : p.at("trees")) {
        b->trees.push_back(detail::Tree::from_json(t));
        check_tree_features(b->trees.back(), d);
      }
      if (b->trees.empty()) throw FormatError("bagging: no members");
      impl = b;
      break;
    }
    case Algorithm::kmeans_baseline:
      impl = KMeansModel::from_json(p, d);
      break;
  }
  ClassifierModel m(algo, j.at("seed").get<std::uint64_t>(), hyper, names, std::move(impl));
  m.config_hash = j.value("config_hash", std::string{});
  return m;
}

}  // namespace

ClassifierModel deserialize_model(const std::string& text) {
  try {
    return model_from_json(json::parse(text));
  } catch (const json::exception& e) {
    throw FormatError(std::string("malformed model: ") + e.what());
  }
}

void save_model(const ClassifierModel& model, const std::filesystem::path& path) {
  detail::write_file_atomic(path, serialize(model));
}

ClassifierModel load_model(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open model " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return deserialize_model(ss.str());
}

}  // namespace osa
