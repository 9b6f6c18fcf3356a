#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace osa {

inline constexpr int kLabelUnlabeled = -1;
inline constexpr int kLabelNormal = 0;
inline constexpr int kLabelApnoeic = 1;

struct RowInfo {
  std::string record_id;
  long long frame_index{-1};
};

// Row-major frames x features table with one label per row.
class FeatureMatrix {
 public:
  FeatureMatrix() = default;
  // Throws InvalidArgument on duplicate or empty names.
  explicit FeatureMatrix(std::vector<std::string> names);

  void add_row(std::span<const double> values, int label, RowInfo info = {});

  std::size_t rows() const { return labels_.size(); }
  std::size_t cols() const { return names_.size(); }
  const std::vector<std::string>& names() const { return names_; }
  std::span<const double> row(std::size_t i) const { return {data_.data() + i * cols(), cols()}; }
  double at(std::size_t i, std::size_t j) const { return data_[i * cols() + j]; }
  std::vector<double> column(std::size_t j) const;
  int label(std::size_t i) const { return labels_[i]; }
  const std::vector<int>& labels() const { return labels_; }
  const RowInfo& info(std::size_t i) const { return info_[i]; }
  std::optional<std::size_t> index_of(const std::string& name) const;

  FeatureMatrix subset_rows(std::span<const std::size_t> rows) const;
  // Throws InvalidArgument naming the first feature that is not present.
  FeatureMatrix select_columns(const std::vector<std::string>& names) const;
  // Rows labelled normal or apnoeic.
  FeatureMatrix labeled_only() const;
  // Appends the rows of `other`, which must have identical names.
  void append(const FeatureMatrix& other);

  std::size_t count_label(int label) const;

  std::string config_hash;

 private:
  std::vector<std::string> names_;
  std::vector<double> data_;
  std::vector<int> labels_;
  std::vector<RowInfo> info_;
};

// CSV with an optional `# config_hash=<hex>` first line and the header
// `record_id,frame_index,label,<feature names...>`.
std::string to_csv(const FeatureMatrix& m);
FeatureMatrix matrix_from_csv(const std::string& text);
FeatureMatrix read_matrix(const std::filesystem::path& path);
void write_matrix(const FeatureMatrix& m, const std::filesystem::path& path);

}  // namespace osa
