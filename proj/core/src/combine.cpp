#include "osa/combine.hpp"

#include "file_util.hpp"
#include "json.hpp"
#include "osa/error.hpp"
#include "osa/rng.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

namespace osa {

using nlohmann::json;

const char* to_string(FusionRule r) {
  switch (r) {
    case FusionRule::max_prob:
      return "max_prob";
    case FusionRule::avg_prob:
      return "avg_prob";
    case FusionRule::prod_prob:
      return "prod_prob";
    case FusionRule::majority_vote:
      return "majority_vote";
  }
  return "unknown";
}

FusionRule parse_rule(const std::string& text) {
  if (text == "max_prob" || text == "mp") return FusionRule::max_prob;
  if (text == "avg_prob" || text == "ap") return FusionRule::avg_prob;
  if (text == "prod_prob" || text == "pp") return FusionRule::prod_prob;
  if (text == "majority_vote" || text == "mv") return FusionRule::majority_vote;
  throw InvalidArgument("unknown fusion rule: " + text);
}

const std::vector<FusionRule>& all_rules() {
  static const std::vector<FusionRule> rules{FusionRule::max_prob, FusionRule::prod_prob, FusionRule::avg_prob,
                                             FusionRule::majority_vote};
  return rules;
}

Prediction fuse(std::span<const Prediction> predictions, FusionRule rule, std::span<const Quality> quality) {
  if (predictions.size() != 3) throw InvalidArgument("fusion needs exactly three member predictions");
  if (quality.size() != 3) throw InvalidArgument("fusion needs one quality entry per member");
  for (const auto& q : quality) {
    if (!(q.sensitivity >= 0.0 && q.sensitivity <= 1.0 && q.specificity >= 0.0 && q.specificity <= 1.0)) {
      throw InvalidArgument("member sensitivity and specificity must lie in [0, 1]");
    }
  }

  if (rule == FusionRule::majority_vote) {
    int votes = 0;
    for (const auto& p : predictions) votes += p.apnoeic ? 1 : 0;
    return Prediction{static_cast<double>(votes) / 3.0, votes >= 2};
  }

  std::array<double, 3> a{};
  std::array<double, 3> n{};
  for (std::size_t i = 0; i < 3; ++i) {
    a[i] = quality[i].sensitivity * predictions[i].p_apnea;
    n[i] = quality[i].specificity * (1.0 - predictions[i].p_apnea);
  }

  double score_a = 0.0;
  double score_n = 0.0;
  bool apnoeic = false;
  switch (rule) {
    case FusionRule::avg_prob:
      score_a = (a[0] + a[1] + a[2]) / 3.0;
      score_n = (n[0] + n[1] + n[2]) / 3.0;
      apnoeic = score_a >= score_n;
      break;
    case FusionRule::prod_prob: {
      score_a = std::max(a[0], kProductFloor) * std::max(a[1], kProductFloor) * std::max(a[2], kProductFloor);
      score_n = std::max(n[0], kProductFloor) * std::max(n[1], kProductFloor) * std::max(n[2], kProductFloor);
      if (score_a != score_n) {
        apnoeic = score_a > score_n;
      } else {
        apnoeic = a[0] * a[1] * a[2] >= n[0] * n[1] * n[2];
      }
      break;
    }
    case FusionRule::max_prob: {
      double best = -1.0;
      for (std::size_t i = 0; i < 3; ++i) {
        if (a[i] > best) {
          best = a[i];
          apnoeic = true;
        }
        if (n[i] > best) {
          best = n[i];
          apnoeic = false;
        }
      }
      score_a = std::max({a[0], a[1], a[2]});
      score_n = std::max({n[0], n[1], n[2]});
      break;
    }
    case FusionRule::majority_vote:
      break;
  }

  // Weights only arbitrate split decisions; a unanimous triple keeps its
  // decision whatever the member qualities are.
  const int agree = static_cast<int>(predictions[0].apnoeic) + static_cast<int>(predictions[1].apnoeic) +
                    static_cast<int>(predictions[2].apnoeic);
  if (agree == 3) apnoeic = true;
  if (agree == 0) apnoeic = false;

  double p = score_a + score_n > 0.0 ? score_a / (score_a + score_n) : 0.5;
  if (!apnoeic && p >= 0.5) p = std::nextafter(0.5, 0.0);
  if (apnoeic && p < 0.5) p = 0.5;
  return Prediction{p, apnoeic};
}

Prediction fuse(std::span<const Prediction> predictions, const EnsembleSpec& spec) {
  return fuse(predictions, spec.rule, spec.quality);
}

std::vector<EnsembleSpec> build_triples(std::array<Algorithm, 2> fixed, std::span<const Algorithm> candidates) {
  std::vector<EnsembleSpec> out;
  for (Algorithm c : candidates) {
    if (c == fixed[0] || c == fixed[1]) {
      throw InvalidArgument(std::string("candidate ") + to_string(c) + " is already a fixed member");
    }
    for (FusionRule r : all_rules()) {
      EnsembleSpec s;
      s.members = {fixed[0], fixed[1], c};
      s.rule = r;
      out.push_back(s);
    }
  }
  return out;
}

Algorithm parse_third_member(const std::string& code) {
  if (code == "knn") return Algorithm::knn;
  if (code == "dt") return Algorithm::decision_table;
  if (code == "c45") return Algorithm::c45_tree;
  if (code == "rept") return Algorithm::rep_tree;
  return parse_algorithm(code);
}

Ensemble::Ensemble(EnsembleSpec spec, std::array<ClassifierModel, 3> models)
    : spec_(spec), models_(std::move(models)) {
  for (std::size_t i = 0; i < 3; ++i) {
    if (!models_[i].valid()) throw InvalidArgument("ensemble member is not trained");
    if (models_[i].algorithm() != spec_.members[i]) throw InvalidArgument("ensemble member does not match spec");
  }
}

std::vector<std::string> Ensemble::feature_names() const {
  std::vector<std::string> out;
  for (const auto& m : models_) {
    for (const auto& n : m.feature_names()) {
      if (std::find(out.begin(), out.end(), n) == out.end()) out.push_back(n);
    }
  }
  return out;
}

Prediction Ensemble::predict(const std::vector<std::string>& names, std::span<const double> values) const {
  std::array<Prediction, 3> p;
  for (std::size_t i = 0; i < 3; ++i) p[i] = predict_proba(models_[i], names, values);
  return fuse(p, spec_);
}

Ensemble train_ensemble(EnsembleSpec spec, const FeatureMatrix& matrix, const std::array<HyperParams, 3>& hyper,
                        std::uint64_t seed) {
  const FeatureMatrix m = matrix.labeled_only();
  spec.quality = {};
  if (spec.rule != FusionRule::majority_vote) {
    std::vector<std::size_t> by_class[2];
    for (std::size_t i = 0; i < m.rows(); ++i) by_class[m.label(i) == kLabelApnoeic ? 1 : 0].push_back(i);
    Rng rng(derive_seed(seed, 1000));
    std::vector<std::size_t> fit_rows;
    std::vector<std::size_t> hold_rows;
    for (auto& cls : by_class) {
      rng.shuffle(std::span<std::size_t>(cls));
      const std::size_t held = cls.size() / 3;
      hold_rows.insert(hold_rows.end(), cls.begin(), cls.begin() + static_cast<std::ptrdiff_t>(held));
      fit_rows.insert(fit_rows.end(), cls.begin() + static_cast<std::ptrdiff_t>(held), cls.end());
    }
    std::sort(fit_rows.begin(), fit_rows.end());
    std::sort(hold_rows.begin(), hold_rows.end());
    const auto fit = m.subset_rows(fit_rows);
    const auto hold = m.subset_rows(hold_rows);
    const bool usable = fit.count_label(kLabelApnoeic) > 0 && fit.count_label(kLabelNormal) > 0 &&
                        hold.count_label(kLabelApnoeic) > 0 && hold.count_label(kLabelNormal) > 0;
    if (usable) {
      for (std::size_t i = 0; i < 3; ++i) {
        const auto member = train(spec.members[i], fit, hyper[i], derive_seed(seed, i));
        spec.quality[i] = model_quality(member, hold);
      }
    }
  }
  std::array<ClassifierModel, 3> models;
  for (std::size_t i = 0; i < 3; ++i) models[i] = train(spec.members[i], m, hyper[i], derive_seed(seed, i));
  Ensemble e(spec, std::move(models));
  e.config_hash = matrix.config_hash;
  return e;
}

namespace {
constexpr const char* kEnsembleTag = "osadetect-ensemble";
constexpr int kEnsembleVersion = 1;
}  // namespace

std::string serialize(const Ensemble& e) {
  json j;
  j["format"] = kEnsembleTag;
  j["version"] = kEnsembleVersion;
  j["rule"] = to_string(e.spec().rule);
  j["config_hash"] = e.config_hash;
  json members = json::array();
  for (std::size_t i = 0; i < 3; ++i) {
    members.push_back(json{{"sensitivity", e.spec().quality[i].sensitivity},
                           {"specificity", e.spec().quality[i].specificity},
                           {"model", json::parse(serialize(e.models()[i]))}});
  }
  j["members"] = members;
  return j.dump() + "\n";
}

Ensemble deserialize_ensemble(const std::string& text) {
  try {
    const json j = json::parse(text);
    if (j.value("format", std::string{}) != kEnsembleTag) throw FormatError("not an ensemble file");
    if (j.at("version").get<int>() != kEnsembleVersion) {
      throw UnsupportedFormatError("unsupported ensemble version " + j.at("version").dump());
    }
    EnsembleSpec spec;
    spec.rule = parse_rule(j.at("rule").get<std::string>());
    const auto& members = j.at("members");
    if (members.size() != 3) throw FormatError("ensemble must have three members");
    std::array<ClassifierModel, 3> models;
    for (std::size_t i = 0; i < 3; ++i) {
      const auto& mj = members.at(i);
      models[i] = deserialize_model(mj.at("model").dump());
      spec.members[i] = models[i].algorithm();
      spec.quality[i] = Quality{mj.at("sensitivity").get<double>(), mj.at("specificity").get<double>()};
    }
    Ensemble e(spec, std::move(models));
    e.config_hash = j.value("config_hash", std::string{});
    return e;
  } catch (const json::exception& ex) {
    throw FormatError(std::string("malformed ensemble: ") + ex.what());
  }
}

void save_ensemble(const Ensemble& e, const std::filesystem::path& path) {
  detail::write_file_atomic(path, serialize(e));
}

Ensemble load_ensemble(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open ensemble " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return deserialize_ensemble(ss.str());
}

}  // namespace osa
