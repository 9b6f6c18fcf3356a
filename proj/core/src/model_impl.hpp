#pragma once

#include "json.hpp"

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace osa::detail {

using nlohmann::json;

// Training rows in model feature order; labels are 0/1.
struct Dataset {
  std::size_t n{0};
  std::size_t d{0};
  std::vector<double> x;
  std::vector<int> y;

  double at(std::size_t i, std::size_t j) const { return x[i * d + j]; }
  std::span<const double> row(std::size_t i) const { return {x.data() + i * d, d}; }
};

class ModelImpl {
 public:
  virtual ~ModelImpl() = default;
  virtual double predict_p(std::span<const double> x) const = 0;
  virtual json to_json() const = 0;
};

inline double laplace(double n0, double n1) { return (n1 + 1.0) / (n0 + n1 + 2.0); }

// Binary threshold tree: x[feature] <= threshold goes left. Every node
// keeps its class counts so pruning can collapse it into a leaf.
struct TreeNode {
  int feature{-1};
  double threshold{0.0};
  int left{-1};
  int right{-1};
  double n0{0.0};
  double n1{0.0};

  bool leaf() const { return feature < 0; }
};

struct Tree {
  std::vector<TreeNode> nodes;

  const TreeNode& leaf_for(std::span<const double> x) const;
  double predict_p(std::span<const double> x) const;
  json to_json() const;
  static Tree from_json(const json& j);
};

struct TreeParams {
  std::size_t min_leaf{2};
  double cf{0.25};
  int max_depth{64};
};

// Gain-ratio tree with pessimistic (confidence-factor) subtree replacement.
Tree grow_c45(const Dataset& ds, std::span<const std::size_t> rows, const TreeParams& p);

// Information-gain tree grown on a stratified 2/3 of `rows`, pruned by
// reduced error on the remaining 1/3, then refitted on all of `rows`.
Tree grow_rep(const Dataset& ds, std::span<const std::size_t> rows, const TreeParams& p, std::uint64_t seed);

// Upper confidence limit on the error count of a leaf with n cases and e
// errors, minus e.
double pessimistic_extra_errors(double n, double e, double cf);

struct Stump {
  int feature{-1};  // -1: constant prediction `left`
  double threshold{0.0};
  int left{0};
  int right{0};

  int predict(std::span<const double> x) const {
    if (feature < 0) return left;
    return x[static_cast<std::size_t>(feature)] <= threshold ? left : right;
  }
};

// Minimum weighted-error stump. `order[j]` lists all rows sorted by feature j.
Stump fit_stump(const Dataset& ds, std::span<const double> w, const std::vector<std::vector<std::size_t>>& order);

}  // namespace osa::detail
