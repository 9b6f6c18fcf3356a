#include "osa/feature_matrix.hpp"

#include "file_util.hpp"
#include "osa/error.hpp"
#include "text_util.hpp"

#include <fstream>
#include <sstream>
#include <unordered_set>

namespace osa {

FeatureMatrix::FeatureMatrix(std::vector<std::string> names) : names_(std::move(names)) {
  std::unordered_set<std::string> seen;
  for (const auto& n : names_) {
    if (n.empty()) throw InvalidArgument("feature names must be non-empty");
    if (!seen.insert(n).second) throw InvalidArgument("duplicate feature name: " + n);
  }
}

void FeatureMatrix::add_row(std::span<const double> values, int label, RowInfo info) {
  if (values.size() != cols()) {
    throw InvalidArgument("row has " + std::to_string(values.size()) + " values, expected " +
                          std::to_string(cols()));
  }
  if (label < kLabelUnlabeled || label > kLabelApnoeic) throw InvalidArgument("label must be -1, 0 or 1");
  data_.insert(data_.end(), values.begin(), values.end());
  labels_.push_back(label);
  info_.push_back(std::move(info));
}

std::vector<double> FeatureMatrix::column(std::size_t j) const {
  std::vector<double> c(rows());
  for (std::size_t i = 0; i < rows(); ++i) c[i] = at(i, j);
  return c;
}

std::optional<std::size_t> FeatureMatrix::index_of(const std::string& name) const {
  for (std::size_t j = 0; j < names_.size(); ++j) {
    if (names_[j] == name) return j;
  }
  return std::nullopt;
}

FeatureMatrix FeatureMatrix::subset_rows(std::span<const std::size_t> rows) const {
  FeatureMatrix out(names_);
  out.config_hash = config_hash;
  out.data_.reserve(rows.size() * cols());
  for (std::size_t r : rows) out.add_row(row(r), labels_[r], info_[r]);
  return out;
}

FeatureMatrix FeatureMatrix::select_columns(const std::vector<std::string>& names) const {
  std::vector<std::size_t> idx;
  idx.reserve(names.size());
  for (const auto& n : names) {
    const auto j = index_of(n);
    if (!j) throw InvalidArgument("feature not present: " + n);
    idx.push_back(*j);
  }
  FeatureMatrix out(names);
  out.config_hash = config_hash;
  std::vector<double> buf(idx.size());
  for (std::size_t i = 0; i < rows(); ++i) {
    for (std::size_t k = 0; k < idx.size(); ++k) buf[k] = at(i, idx[k]);
    out.add_row(buf, labels_[i], info_[i]);
  }
  return out;
}

FeatureMatrix FeatureMatrix::labeled_only() const {
  std::vector<std::size_t> keep;
  for (std::size_t i = 0; i < rows(); ++i) {
    if (labels_[i] != kLabelUnlabeled) keep.push_back(i);
  }
  return subset_rows(keep);
}

void FeatureMatrix::append(const FeatureMatrix& other) {
  if (other.names_ != names_) throw InvalidArgument("cannot append matrices with different features");
  data_.insert(data_.end(), other.data_.begin(), other.data_.end());
  labels_.insert(labels_.end(), other.labels_.begin(), other.labels_.end());
  info_.insert(info_.end(), other.info_.begin(), other.info_.end());
}

std::size_t FeatureMatrix::count_label(int label) const {
  std::size_t c = 0;
  for (int l : labels_) c += l == label ? 1 : 0;
  return c;
}

std::string to_csv(const FeatureMatrix& m) {
  std::string out;
  if (!m.config_hash.empty()) out += "# config_hash=" + m.config_hash + "\n";
  out += "record_id,frame_index,label";
  for (const auto& n : m.names()) out += "," + n;
  out += "\n";
  for (std::size_t i = 0; i < m.rows(); ++i) {
    out += m.info(i).record_id;
    out += "," + std::to_string(m.info(i).frame_index);
    out += "," + std::to_string(m.label(i));
    for (double v : m.row(i)) out += "," + detail::format_double(v);
    out += "\n";
  }
  return out;
}

FeatureMatrix matrix_from_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  std::string hash;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto t = detail::trim(line);
    if (t.empty()) continue;
    if (t.starts_with("# config_hash=")) {
      hash = std::string(t.substr(14));
      continue;
    }
    if (t.starts_with("#")) continue;
    break;
  }
  const auto header = detail::split(detail::trim(line), ',');
  if (header.size() < 3 || header[0] != "record_id" || header[1] != "frame_index" || header[2] != "label") {
    throw FormatError("feature matrix: expected header record_id,frame_index,label,...");
  }
  std::vector<std::string> names;
  for (std::size_t j = 3; j < header.size(); ++j) names.emplace_back(header[j]);
  FeatureMatrix m(std::move(names));
  m.config_hash = hash;
  std::vector<double> values(m.cols());
  while (std::getline(in, line)) {
    ++line_no;
    const auto t = detail::trim(line);
    if (t.empty()) continue;
    const auto cells = detail::split(t, ',');
    if (cells.size() != m.cols() + 3) {
      throw FormatError("feature matrix line " + std::to_string(line_no) + ": wrong number of cells");
    }
    const auto frame = detail::parse_int(cells[1]);
    const auto label = detail::parse_int(cells[2]);
    if (!frame || !label) throw FormatError("feature matrix line " + std::to_string(line_no) + ": bad index");
    for (std::size_t j = 0; j < m.cols(); ++j) {
      const auto v = detail::parse_double(cells[j + 3]);
      if (!v) {
        throw FormatError("feature matrix line " + std::to_string(line_no) + ": bad value for " +
                          m.names()[j]);
      }
      values[j] = *v;
    }
    m.add_row(values, static_cast<int>(*label), RowInfo{std::string(cells[0]), *frame});
  }
  return m;
}

FeatureMatrix read_matrix(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open feature matrix " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return matrix_from_csv(ss.str());
}

void write_matrix(const FeatureMatrix& m, const std::filesystem::path& path) {
  detail::write_file_atomic(path, to_csv(m));
}

}  // namespace osa
