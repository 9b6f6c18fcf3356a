#pragma once

#include "osa/feature_matrix.hpp"

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace osa {

enum class Algorithm { knn, decision_table, c45_tree, rep_tree, adaboost_stump, bagging_rept, kmeans_baseline };

const char* to_string(Algorithm a);
// Accepts the canonical ids above. Throws InvalidArgument otherwise.
Algorithm parse_algorithm(const std::string& id);
const std::vector<Algorithm>& all_algorithms();

// Hyperparameters by name. Recognised keys and defaults:
//   knn: k=5 (odd)        decision_table: bins=4, stale=5
//   c45_tree: min_leaf=2, cf=0.25          rep_tree: min_leaf=2
//   adaboost_stump: rounds=50              bagging_rept: bags=10, min_leaf=2
//   kmeans_baseline: clusters=2, iterations=100
using HyperParams = std::map<std::string, double>;

struct Prediction {
  double p_apnea{0.0};
  bool apnoeic{false};
};

// apnoeic is set iff p >= 0.5.
Prediction make_prediction(double p_apnea);

namespace detail {
class ModelImpl;
}

class ClassifierModel {
 public:
  ClassifierModel() = default;
  ClassifierModel(Algorithm algorithm, std::uint64_t seed, HyperParams hyper, std::vector<std::string> names,
                  std::shared_ptr<const detail::ModelImpl> impl);

  Algorithm algorithm() const { return algorithm_; }
  std::uint64_t seed() const { return seed_; }
  const HyperParams& hyperparameters() const { return hyper_; }
  const std::vector<std::string>& feature_names() const { return names_; }
  bool valid() const { return impl_ != nullptr; }

  // x holds the model's features in feature_names() order.
  Prediction predict(std::span<const double> x) const;

  std::string config_hash;

 private:
  Algorithm algorithm_{Algorithm::knn};
  std::uint64_t seed_{0};
  HyperParams hyper_;
  std::vector<std::string> names_;
  std::shared_ptr<const detail::ModelImpl> impl_;

  friend std::string serialize(const ClassifierModel& model);
};

// Trains on every column of the labelled rows of `m`. Throws
// InvalidArgument for single-class data, non-finite values (naming the
// feature) or out-of-range hyperparameters.
ClassifierModel train(Algorithm algorithm, const FeatureMatrix& m, const HyperParams& hyper = {},
                      std::uint64_t seed = 0);

// Positions of `wanted` within `available`; throws InvalidArgument naming
// the first missing feature.
std::vector<std::size_t> column_indices(const std::vector<std::string>& wanted,
                                        const std::vector<std::string>& available);

Prediction predict_proba(const ClassifierModel& model, const std::vector<std::string>& names,
                         std::span<const double> values);
std::vector<Prediction> predict_matrix(const ClassifierModel& model, const FeatureMatrix& m);

struct Quality {
  double sensitivity{1.0};
  double specificity{1.0};
};

// Sensitivity and specificity at threshold 0.5 over the labelled rows. A
// class missing from the holdout leaves its rate at 1 so it acts as a
// neutral fusion weight.
Quality model_quality(const ClassifierModel& model, const FeatureMatrix& holdout);

// Versioned JSON. deserialize(serialize(m)) predicts bit-identically.
std::string serialize(const ClassifierModel& model);
ClassifierModel deserialize_model(const std::string& text);
void save_model(const ClassifierModel& model, const std::filesystem::path& path);
ClassifierModel load_model(const std::filesystem::path& path);

}  // namespace osa
