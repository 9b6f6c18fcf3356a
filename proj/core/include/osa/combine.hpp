#pragma once

#include "osa/classify.hpp"

#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace osa {

enum class FusionRule { max_prob, avg_prob, prod_prob, majority_vote };

inline constexpr double kProductFloor = 1e-6;

const char* to_string(FusionRule r);
// Accepts the canonical names and the short codes mp, pp, ap, mv.
FusionRule parse_rule(const std::string& text);
const std::vector<FusionRule>& all_rules();

struct EnsembleSpec {
  std::array<Algorithm, 3> members{Algorithm::adaboost_stump, Algorithm::bagging_rept, Algorithm::knn};
  FusionRule rule{FusionRule::majority_vote};
  std::array<Quality, 3> quality{};
};

// Member i contributes an apnoeic score sens_i * p_i and a normal score
// spec_i * (1 - p_i). avg/prod compare the mean/product of those scores;
// max picks the single largest score (earlier member, then the apnoeic
// score, wins exact ties). The reported probability is
// apnoeic / (apnoeic + normal), nudged below 0.5 when the decision is
// normal. A unanimous triple always keeps its decision, so the weights
// only settle split votes. Majority vote ignores the weights and reports
// the vote share.
Prediction fuse(std::span<const Prediction> predictions, FusionRule rule, std::span<const Quality> quality);
Prediction fuse(std::span<const Prediction> predictions, const EnsembleSpec& spec);

// One spec per (candidate, rule), candidate-major. Throws InvalidArgument
// when a candidate repeats a fixed member.
std::vector<EnsembleSpec> build_triples(std::array<Algorithm, 2> fixed, std::span<const Algorithm> candidates);

// Short code used on the command line for third members: knn, dt, c45, rept.
Algorithm parse_third_member(const std::string& code);

class Ensemble {
 public:
  Ensemble() = default;
  Ensemble(EnsembleSpec spec, std::array<ClassifierModel, 3> models);

  const EnsembleSpec& spec() const { return spec_; }
  const std::array<ClassifierModel, 3>& models() const { return models_; }
  // Union of member feature names in first-seen order.
  std::vector<std::string> feature_names() const;

  Prediction predict(const std::vector<std::string>& names, std::span<const double> values) const;

  std::string config_hash;

 private:
  EnsembleSpec spec_;
  std::array<ClassifierModel, 3> models_;
};

// Trains the three members on `m`. For probability rules each member's
// quality is first measured on a stratified third held out from `m`
// (members trained on the other two thirds), then the members are refit
// on all rows. Majority vote keeps unit quality.
Ensemble train_ensemble(EnsembleSpec spec, const FeatureMatrix& m, const std::array<HyperParams, 3>& hyper,
                        std::uint64_t seed);

std::string serialize(const Ensemble& e);
Ensemble deserialize_ensemble(const std::string& text);
void save_ensemble(const Ensemble& e, const std::filesystem::path& path);
Ensemble load_ensemble(const std::filesystem::path& path);

}  // namespace osa
