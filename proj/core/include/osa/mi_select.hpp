#pragma once

#include "osa/feature_matrix.hpp"

#include <cstddef>
#include <filesystem>
#include <string>
#include <vector>

namespace osa {

struct SelectedFeature {
  std::string name;
  double score{0.0};
};

struct SelectedFeatureSet {
  std::vector<SelectedFeature> features;  // selection order
  std::string config_hash;

  std::vector<std::string> names() const;
  std::size_t size() const { return features.size(); }
};

// Greedy normalized-MI forward selection over the labelled rows of `m`.
// First pick maximizes MI(f; label); later picks maximize
// MI(f; label) - mean_s NMI(f; s) with NMI = MI / min(H(f), H(s)).
// Candidates carrying no information beyond an already selected feature
// (NMI = 1) are never picked. Ties go to the lexicographically smaller
// name; selection stops at k_max or when the best score is not positive.
// Throws InvalidArgument unless both classes are present.
SelectedFeatureSet forward_select(const FeatureMatrix& m, std::size_t k_max = 20);

// `rank,name,score` CSV, optional `# config_hash=` first line.
std::string to_csv(const SelectedFeatureSet& s);
SelectedFeatureSet selection_from_csv(const std::string& text);
SelectedFeatureSet read_selection(const std::filesystem::path& path);
void write_selection(const SelectedFeatureSet& s, const std::filesystem::path& path);

}  // namespace osa
