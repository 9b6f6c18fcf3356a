#include "osa/record_io.hpp"

#include "osa/error.hpp"
#include "file_util.hpp"
#include "text_util.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

namespace osa {

namespace fs = std::filesystem;
using detail::format_double;
using detail::lower;
using detail::parse_double;
using detail::split;
using detail::trim;

double SignalRecord::ecg_duration_s() const {
  return ecg_spec.sampling_rate_hz > 0.0
             ? static_cast<double>(ecg.size()) / ecg_spec.sampling_rate_hz
             : 0.0;
}

double SignalRecord::spo2_duration_s() const {
  return spo2_spec.sampling_rate_hz > 0.0
             ? static_cast<double>(spo2.size()) / spo2_spec.sampling_rate_hz
             : 0.0;
}

double SignalRecord::duration_s() const {
  return std::min(ecg_duration_s(), spo2_duration_s());
}

const char* to_string(EventKind kind) {
  switch (kind) {
    case EventKind::apnea: return "apnea";
    case EventKind::hypopnea: return "hypopnea";
    case EventKind::other: return "other";
  }
  return "other";
}

EventKind parse_event_kind(const std::string& text) {
  const auto t = lower(trim(text));
  if (t == "apnea" || t == "obstructive_apnea" || t == "central_apnea" || t == "mixed_apnea" ||
      t == "a") {
    return EventKind::apnea;
  }
  if (t == "hypopnea" || t == "h") return EventKind::hypopnea;
  if (t == "normal" || t == "other" || t == "n") return EventKind::other;
  throw FormatError("unknown annotation kind '" + text + "'");
}

const char* to_string(FrameLabel label) {
  switch (label) {
    case FrameLabel::unlabeled: return "unlabeled";
    case FrameLabel::normal: return "normal";
    case FrameLabel::apnoeic: return "apnoeic";
  }
  return "unlabeled";
}

namespace {

struct NativeLayout {
  fs::path hdr;
  fs::path ecg;
  fs::path spo2;
  fs::path ann;
};

NativeLayout native_layout(const fs::path& hdr_path) {
  auto base = hdr_path;
  base.replace_extension();
  const auto stem = base.string();
  return {hdr_path, stem + ".ecg.csv", stem + ".spo2.csv", stem + ".ann.csv"};
}

std::vector<double> read_channel_csv(const fs::path& path, const std::string& channel) {
  std::ifstream in(path);
  if (!in) throw MissingChannelError("channel '" + channel + "': cannot open " + path.string());
  std::vector<double> values;
  std::string line;
  std::size_t line_no = 0;
  double last_t = -std::numeric_limits<double>::infinity();
  bool header_seen = false;
  while (std::getline(in, line)) {
    ++line_no;
    const auto t = trim(line);
    if (t.empty() || t.front() == '#') continue;
    if (!header_seen) {
      header_seen = true;
      if (lower(t).rfind("time_s", 0) == 0) continue;
    }
    const auto cols = split(t, ',');
    if (cols.size() != 2) {
      throw FormatError(path.string() + ":" + std::to_string(line_no) +
                        ": expected 2 columns (time_s,value)");
    }
    const auto ts = parse_double(cols[0]);
    const auto v = parse_double(cols[1]);
    if (!ts || !v) {
      throw FormatError(path.string() + ":" + std::to_string(line_no) + ": non-numeric field");
    }
    if (!(*ts > last_t)) {
      throw FormatError(path.string() + ":" + std::to_string(line_no) +
                        ": timestamps are not strictly increasing");
    }
    last_t = *ts;
    values.push_back(*v);
  }
  return values;
}

void write_channel_csv(const fs::path& path, const std::vector<double>& values, double fs) {
  std::string out = "time_s,value\n";
  out.reserve(values.size() * 16);
  for (std::size_t i = 0; i < values.size(); ++i) {
    out += format_double(static_cast<double>(i) / fs);
    out += ',';
    out += format_double(values[i]);
    out += '\n';
  }
  detail::write_file_atomic(path, out);
}

void check_record(const SignalRecord& r) {
  if (!(r.ecg_spec.sampling_rate_hz > 0.0)) throw FormatError("ECG sampling rate must be > 0");
  if (!(r.spo2_spec.sampling_rate_hz > 0.0)) throw FormatError("SpO2 sampling rate must be > 0");
  const double tol = 1.0 / r.spo2_spec.sampling_rate_hz;
  if (std::abs(r.ecg_duration_s() - r.spo2_duration_s()) > tol + 1e-9) {
    throw FormatError("record '" + r.record_id + "': ECG spans " +
                      format_double(r.ecg_duration_s()) + " s but SpO2 spans " +
                      format_double(r.spo2_duration_s()) + " s");
  }
}

SignalRecord load_native(const fs::path& hdr_path) {
  std::ifstream in(hdr_path);
  if (!in) throw FormatError("cannot open header " + hdr_path.string());
  SignalRecord rec;
  rec.record_id = hdr_path.stem().string();
  std::vector<ChannelSpec> channels;
  std::string line;
  bool in_channels = false;
  while (std::getline(in, line)) {
    const auto t = trim(line);
    if (t.empty() || t.front() == '#') continue;
    const auto cols = split(t, ',');
    const auto key = lower(cols[0]);
    if (key == "record" && cols.size() >= 2) {
      rec.record_id = std::string(cols[1]);
      continue;
    }
    if (key == "channel") {
      if (cols.size() < 3 || lower(cols[1]) != "rate_hz") {
        throw FormatError(hdr_path.string() + ": channel table header must be channel,rate_hz,units");
      }
      in_channels = true;
      continue;
    }
    if (!in_channels) throw FormatError(hdr_path.string() + ": unexpected line '" + line + "'");
    if (cols.size() != 3) throw FormatError(hdr_path.string() + ": channel line needs 3 fields");
    const auto rate = parse_double(cols[1]);
    if (!rate || !(*rate > 0.0)) {
      throw FormatError(hdr_path.string() + ": channel '" + std::string(cols[0]) +
                        "' has invalid rate");
    }
    ChannelSpec spec{lower(cols[0]), *rate, std::string(cols[2])};
    for (const auto& c : channels) {
      if (c.name == spec.name) throw FormatError(hdr_path.string() + ": duplicate channel " + spec.name);
    }
    channels.push_back(std::move(spec));
  }
  const auto find = [&](const std::string& name) -> const ChannelSpec* {
    for (const auto& c : channels) {
      if (c.name == name) return &c;
    }
    return nullptr;
  };
  const auto* ecg = find("ecg");
  const auto* spo2 = find("spo2");
  if (ecg == nullptr) throw MissingChannelError(hdr_path.string() + ": no 'ecg' channel declared");
  if (spo2 == nullptr) throw MissingChannelError(hdr_path.string() + ": no 'spo2' channel declared");

  const auto layout = native_layout(hdr_path);
  rec.ecg_spec = *ecg;
  rec.spo2_spec = *spo2;
  rec.ecg = read_channel_csv(layout.ecg, "ecg");
  rec.spo2 = read_channel_csv(layout.spo2, "spo2");
  if (fs::exists(layout.ann)) rec.annotations = read_annotations(layout.ann);
  rec.excluded_mask.assign(rec.spo2.size(), false);
  check_record(rec);
  return rec;
}

bool name_matches(const std::string& description, std::initializer_list<const char*> keys) {
  const auto d = lower(description);
  for (const char* k : keys) {
    if (d.find(k) != std::string::npos) return true;
  }
  return false;
}

SignalRecord load_wfdb(const fs::path& hea_path) {
  const auto header = parse_wfdb_header(hea_path);
  const auto dir = hea_path.parent_path();
  const auto samples = read_wfdb_samples(header, dir);

  int ecg_idx = -1;
  int spo2_idx = -1;
  for (std::size_t i = 0; i < header.signals.size(); ++i) {
    const auto& d = header.signals[i].description;
    if (ecg_idx < 0 && name_matches(d, {"ecg", "ekg", "mlii"})) ecg_idx = static_cast<int>(i);
    if (spo2_idx < 0 && name_matches(d, {"spo2", "sao2", "so2"})) spo2_idx = static_cast<int>(i);
  }
  if (ecg_idx < 0) throw MissingChannelError(hea_path.string() + ": no ECG signal");
  if (spo2_idx < 0) throw MissingChannelError(hea_path.string() + ": no SpO2 signal");

  const auto to_physical = [&](int idx) {
    const auto& info = header.signals[static_cast<std::size_t>(idx)];
    const double gain = info.gain == 0.0 ? 200.0 : info.gain;
    std::vector<double> out;
    out.reserve(samples[static_cast<std::size_t>(idx)].size());
    for (int v : samples[static_cast<std::size_t>(idx)]) out.push_back((v - info.baseline) / gain);
    return out;
  };

  SignalRecord rec;
  rec.record_id = header.record_name;
  rec.ecg_spec = {"ecg", header.sampling_rate_hz, header.signals[ecg_idx].units};
  rec.ecg = to_physical(ecg_idx);

  // SpO2 is stored at the frame rate in multi-signal WFDB records; reduce
  // it to 1 Hz by per-second block means.
  auto spo2 = to_physical(spo2_idx);
  const double fs = header.sampling_rate_hz;
  const double per_sec = std::round(fs);
  if (fs > 1.0) {
    if (std::abs(fs - per_sec) > 1e-9) {
      throw UnsupportedFormatError(hea_path.string() +
                                   ": SpO2 at a non-integer rate cannot be reduced to 1 Hz");
    }
    const auto block = static_cast<std::size_t>(per_sec);
    std::vector<double> reduced;
    reduced.reserve(spo2.size() / block);
    for (std::size_t b = 0; b + block <= spo2.size(); b += block) {
      double acc = 0.0;
      for (std::size_t k = 0; k < block; ++k) acc += spo2[b + k];
      reduced.push_back(acc / static_cast<double>(block));
    }
    spo2 = std::move(reduced);
    rec.spo2_spec = {"spo2", 1.0, header.signals[spo2_idx].units};
    // Keep the ECG span aligned with the retained SpO2 seconds.
    const auto ecg_keep = static_cast<std::size_t>(static_cast<double>(spo2.size()) * fs);
    if (rec.ecg.size() > ecg_keep) rec.ecg.resize(ecg_keep);
  } else {
    rec.spo2_spec = {"spo2", fs, header.signals[spo2_idx].units};
  }
  rec.spo2 = std::move(spo2);
  rec.excluded_mask.assign(rec.spo2.size(), false);

  auto base = hea_path;
  base.replace_extension();
  const fs::path ann_csv = base.string() + ".ann.csv";
  const fs::path apn = base.string() + ".apn";
  if (fs::exists(ann_csv)) {
    rec.annotations = read_annotations(ann_csv);
  } else if (fs::exists(apn)) {
    rec.annotations = read_wfdb_minute_annotations(apn, fs);
  }
  check_record(rec);
  return rec;
}

}  // namespace

SignalRecord load_record(const fs::path& path, RecordFormat format) {
  if (!fs::exists(path)) throw FormatError("no such file: " + path.string());
  switch (format) {
    case RecordFormat::native_csv: return load_native(path);
    case RecordFormat::wfdb: return load_wfdb(path);
  }
  throw FormatError("unknown record format");
}

void write_record(const SignalRecord& record, const fs::path& hdr_path) {
  check_record(record);
  const auto layout = native_layout(hdr_path);
  std::ostringstream hdr;
  hdr << "# osa native record v1\n";
  hdr << "record," << record.record_id << "\n";
  hdr << "channel,rate_hz,units\n";
  hdr << "ecg," << format_double(record.ecg_spec.sampling_rate_hz) << "," << record.ecg_spec.units
      << "\n";
  hdr << "spo2," << format_double(record.spo2_spec.sampling_rate_hz) << ","
      << record.spo2_spec.units << "\n";
  write_channel_csv(layout.ecg, record.ecg, record.ecg_spec.sampling_rate_hz);
  write_channel_csv(layout.spo2, record.spo2, record.spo2_spec.sampling_rate_hz);
  if (!record.annotations.empty()) {
    write_annotations(record.annotations, layout.ann);
  } else if (fs::exists(layout.ann)) {
    fs::remove(layout.ann);
  }
  detail::write_file_atomic(layout.hdr, hdr.str());
}

std::vector<EventAnnotation> read_annotations(const fs::path& csv_path) {
  std::ifstream in(csv_path);
  if (!in) throw FormatError("cannot open annotations " + csv_path.string());
  std::vector<EventAnnotation> events;
  std::string line;
  std::size_t line_no = 0;
  bool header_seen = false;
  while (std::getline(in, line)) {
    ++line_no;
    const auto t = trim(line);
    if (t.empty() || t.front() == '#') continue;
    if (!header_seen) {
      header_seen = true;
      if (lower(t).rfind("start_s", 0) == 0) continue;
    }
    const auto cols = split(t, ',');
    const auto where = csv_path.string() + ":" + std::to_string(line_no);
    if (cols.size() != 3) throw FormatError(where + ": expected start_s,duration_s,kind");
    const auto start = parse_double(cols[0]);
    const auto dur = parse_double(cols[1]);
    if (!start || !dur) throw FormatError(where + ": non-numeric field");
    if (*start < 0.0) throw FormatError(where + ": start_s must be >= 0");
    if (!(*dur > 0.0)) throw FormatError(where + ": duration_s must be > 0");
    events.push_back({*start, *dur, parse_event_kind(std::string(cols[2]))});
  }
  return events;
}

void write_annotations(const std::vector<EventAnnotation>& events, const fs::path& csv_path) {
  std::string out = "start_s,duration_s,kind\n";
  for (const auto& e : events) {
    out += format_double(e.start_s) + "," + format_double(e.duration_s) + "," + to_string(e.kind) +
           "\n";
  }
  detail::write_file_atomic(csv_path, out);
}

std::vector<Frame> segment_frames(const SignalRecord& record) {
  std::vector<Frame> frames;
  const double ecg_fs = record.ecg_spec.sampling_rate_hz;
  const double spo2_fs = record.spo2_spec.sampling_rate_hz;
  if (!(ecg_fs > 0.0) || !(spo2_fs > 0.0)) return frames;
  const auto n_frames = static_cast<std::size_t>(std::floor(record.duration_s() / kFrameSeconds + 1e-9));
  for (std::size_t k = 0; k < n_frames; ++k) {
    const double t0 = static_cast<double>(k) * kFrameSeconds;
    const double t1 = t0 + kFrameSeconds;
    Frame f;
    f.index = k;
    f.start_s = t0;
    f.ecg_slice = {static_cast<std::size_t>(std::llround(t0 * ecg_fs)),
                   static_cast<std::size_t>(std::llround(t1 * ecg_fs))};
    f.spo2_slice = {static_cast<std::size_t>(std::llround(t0 * spo2_fs)),
                    static_cast<std::size_t>(std::llround(t1 * spo2_fs))};
    if (f.ecg_slice.end > record.ecg.size() || f.spo2_slice.end > record.spo2.size()) break;
    bool excluded = false;
    for (std::size_t i = f.spo2_slice.begin; i < f.spo2_slice.end && i < record.excluded_mask.size();
         ++i) {
      if (record.excluded_mask[i]) {
        excluded = true;
        break;
      }
    }
    if (!excluded) frames.push_back(f);
  }
  return frames;
}

std::vector<Frame> label_frames(std::vector<Frame> frames,
                                const std::vector<EventAnnotation>& annotations,
                                double min_overlap_s) {
  if (!(min_overlap_s > 0.0) || min_overlap_s > kFrameSeconds) {
    throw InvalidArgument("min_overlap_s must lie in (0, 60]");
  }
  std::vector<std::pair<double, double>> spans;
  for (const auto& e : annotations) {
    if (e.kind == EventKind::apnea || e.kind == EventKind::hypopnea) {
      spans.emplace_back(e.start_s, e.end_s());
    }
  }
  std::sort(spans.begin(), spans.end());
  // Merge overlapping events so shared seconds count once.
  std::vector<std::pair<double, double>> merged;
  for (const auto& s : spans) {
    if (!merged.empty() && s.first <= merged.back().second) {
      merged.back().second = std::max(merged.back().second, s.second);
    } else {
      merged.push_back(s);
    }
  }
  for (auto& f : frames) {
    const double a = f.start_s;
    const double b = f.start_s + kFrameSeconds;
    double covered = 0.0;
    auto it = std::lower_bound(merged.begin(), merged.end(), std::pair<double, double>{a, a},
                               [](const auto& lhs, const auto& rhs) { return lhs.second < rhs.first; });
    for (; it != merged.end() && it->first < b; ++it) {
      covered += std::max(0.0, std::min(b, it->second) - std::max(a, it->first));
    }
    f.label = covered >= min_overlap_s ? FrameLabel::apnoeic : FrameLabel::normal;
  }
  return frames;
}

}  // namespace osa
