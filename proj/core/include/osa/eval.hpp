#pragma once

#include "osa/classify.hpp"
#include "osa/combine.hpp"
#include "osa/feature_matrix.hpp"
#include "osa/pipeline.hpp"
#include "osa/record_io.hpp"

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace osa {

struct Confusion {
  std::size_t tp{0};
  std::size_t fn{0};
  std::size_t tn{0};
  std::size_t fp{0};

  void add(bool truth_apnoeic, bool predicted_apnoeic);
  std::size_t total() const { return tp + fn + tn + fp; }
  Confusion& operator+=(const Confusion& o);
  bool operator==(const Confusion&) const = default;
};

// Fractions in [0, 1]. A metric whose denominator is zero is absent.
struct Metrics {
  std::optional<double> sensitivity;
  std::optional<double> specificity;
  std::optional<double> accuracy;
};

Metrics metrics(const Confusion& c);

// Fold id (0..k-1) per row. Each class is shuffled with the seed and dealt
// round-robin, so per-class fold sizes differ by at most one. Throws
// InvalidArgument when a class has fewer than k rows.
std::vector<std::size_t> stratified_folds(const std::vector<int>& labels, std::size_t k, std::uint64_t seed);

struct CandidateSpec {
  std::string name;
  std::optional<Algorithm> single;
  std::optional<EnsembleSpec> ensemble;
  HyperParams hyper;                       // single classifier
  std::array<HyperParams, 3> member_hyper;  // ensemble members
};

CandidateSpec single_candidate(Algorithm a, HyperParams hyper = {});
CandidateSpec ensemble_candidate(const EnsembleSpec& spec);

struct CvConfig {
  std::size_t folds{10};
  std::uint64_t seed{0};
  std::size_t k_max{20};
  bool select{true};     // re-run forward selection inside every training fold
  unsigned threads{0};   // 0: hardware concurrency
};

struct TimingResult {
  double median_s{0.0};
  double min_s{0.0};
  double max_s{0.0};
  std::size_t frames{0};
  std::size_t repetitions{0};
};

struct FoldResult {
  std::size_t fold{0};
  Confusion confusion;
};

struct EvalEntry {
  std::string name;
  Confusion confusion;  // pooled over folds
  std::vector<FoldResult> folds;
  std::optional<TimingResult> timing;
};

struct EvalReport {
  std::size_t folds{0};
  std::uint64_t seed{0};
  std::size_t k_max{0};
  bool select{true};
  std::string config_hash;
  std::map<std::string, std::string> config;  // flags echoed verbatim
  std::vector<std::vector<std::string>> fold_selection;
  std::vector<EvalEntry> entries;
};

// Stratified k-fold CV over the labelled rows. Every candidate sees the
// same folds and the same per-fold feature selection; metrics come from
// the pooled out-of-fold confusion counts.
EvalReport cross_validate(const FeatureMatrix& m, const std::vector<CandidateSpec>& candidates,
                          const CvConfig& cfg);

std::string to_json(const EvalReport& r);
EvalReport report_from_json(const std::string& text);
std::string to_csv(const EvalReport& r);
// Plain-text table: classifier, sensitivity, specificity, accuracy (%),
// processing time for 10 frames (s).
std::string to_table(const EvalReport& r);

// Wall-clock seconds to preprocess, extract features and (when `predictor`
// is given) classify the first n_frames retained frames of `record`,
// single-threaded; median/min/max over `repetitions` runs.
TimingResult time_frames(const SignalRecord& record, const PipelineConfig& cfg, const Predictor* predictor,
                         std::size_t n_frames = 10, std::size_t repetitions = 5);

}  // namespace osa
