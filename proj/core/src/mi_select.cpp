#include "osa/mi_select.hpp"

#include "file_util.hpp"
#include "osa/error.hpp"
#include "osa/mutual_info.hpp"
#include "text_util.hpp"

#include <fstream>
#include <limits>
#include <sstream>

namespace osa {

std::vector<std::string> SelectedFeatureSet::names() const {
  std::vector<std::string> out;
  out.reserve(features.size());
  for (const auto& f : features) out.push_back(f.name);
  return out;
}

namespace {

Partition label_partition(const std::vector<int>& labels) {
  Partition p;
  p.cell = labels;
  p.cell_count = 2;
  bool has0 = false;
  bool has1 = false;
  for (int l : labels) (l == 1 ? has1 : has0) = true;
  p.occupied = (has0 ? 1 : 0) + (has1 ? 1 : 0);
  return p;
}

constexpr double kScoreFloor = 1e-12;

}  // namespace

SelectedFeatureSet forward_select(const FeatureMatrix& matrix, std::size_t k_max) {
  const FeatureMatrix m = matrix.labeled_only();
  if (m.count_label(kLabelApnoeic) == 0 || m.count_label(kLabelNormal) == 0) {
    throw InvalidArgument("feature selection needs both normal and apnoeic rows");
  }
  if (k_max > m.cols()) throw InvalidArgument("k_max exceeds the number of features");

  const std::size_t d = m.cols();
  const Partition label = label_partition(m.labels());
  std::vector<Partition> parts(d);
  std::vector<double> relevance(d);
  std::vector<double> entropy(d);
  for (std::size_t j = 0; j < d; ++j) {
    parts[j] = equal_frequency_partition(m.column(j));
    relevance[j] = mutual_information_bits(parts[j], label);
    entropy[j] = entropy_bits(parts[j]);
  }

  SelectedFeatureSet out;
  out.config_hash = matrix.config_hash;
  std::vector<bool> taken(d, false);
  std::vector<bool> redundant(d, false);
  std::vector<double> nmi_sum(d, 0.0);
  while (out.features.size() < k_max) {
    const double chosen = static_cast<double>(out.features.size());
    std::size_t best = d;
    double best_score = -std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < d; ++j) {
      if (taken[j] || redundant[j]) continue;
      const double score = chosen == 0.0 ? relevance[j] : relevance[j] - nmi_sum[j] / chosen;
      if (best == d || score > best_score || (score == best_score && m.names()[j] < m.names()[best])) {
        best = j;
        best_score = score;
      }
    }
    if (best == d || best_score <= kScoreFloor) break;
    taken[best] = true;
    out.features.push_back({m.names()[best], best_score});
    for (std::size_t j = 0; j < d; ++j) {
      if (taken[j] || redundant[j]) continue;
      const double h = std::min(entropy[j], entropy[best]);
      const double nmi = h > 0.0 ? mutual_information_bits(parts[j], parts[best]) / h : 0.0;
      if (h > 0.0 && nmi >= 1.0 - 1e-12) redundant[j] = true;
      nmi_sum[j] += nmi;
    }
  }
  return out;
}

std::string to_csv(const SelectedFeatureSet& s) {
  std::string out;
  if (!s.config_hash.empty()) out += "# config_hash=" + s.config_hash + "\n";
  out += "rank,name,score\n";
  for (std::size_t i = 0; i < s.features.size(); ++i) {
    out += std::to_string(i + 1) + "," + s.features[i].name + "," +
           detail::format_double(s.features[i].score) + "\n";
  }
  return out;
}

SelectedFeatureSet selection_from_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  SelectedFeatureSet s;
  bool header = false;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto t = detail::trim(line);
    if (t.empty()) continue;
    if (t.starts_with("# config_hash=")) {
      s.config_hash = std::string(t.substr(14));
      continue;
    }
    if (t.starts_with("#")) continue;
    if (!header) {
      if (t != "rank,name,score") throw FormatError("selection: expected header rank,name,score");
      header = true;
      continue;
    }
    const auto cells = detail::split(t, ',');
    const auto rank = cells.size() == 3 ? detail::parse_int(cells[0]) : std::nullopt;
    const auto score = cells.size() == 3 ? detail::parse_double(cells[2]) : std::nullopt;
    if (!rank || !score || cells[1].empty()) {
      throw FormatError("selection line " + std::to_string(line_no) + ": expected rank,name,score");
    }
    if (*rank != static_cast<long long>(s.features.size() + 1)) {
      throw FormatError("selection line " + std::to_string(line_no) + ": ranks must be 1, 2, ...");
    }
    s.features.push_back({std::string(cells[1]), *score});
  }
  if (!header) throw FormatError("selection: missing header");
  return s;
}

SelectedFeatureSet read_selection(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open selection " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return selection_from_csv(ss.str());
}

void write_selection(const SelectedFeatureSet& s, const std::filesystem::path& path) {
  detail::write_file_atomic(path, to_csv(s));
}

}  // namespace osa
