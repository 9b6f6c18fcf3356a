#pragma once

#include <cstddef>
#include <filesystem>
#include <string>
#include <vector>

namespace osa {

struct ChannelSpec {
  std::string name;
  double sampling_rate_hz{0.0};
  std::string units;
};

enum class EventKind { apnea, hypopnea, other };

struct EventAnnotation {
  double start_s{0.0};
  double duration_s{0.0};
  EventKind kind{EventKind::other};

  double end_s() const { return start_s + duration_s; }
};

enum class FrameLabel { unlabeled, normal, apnoeic };

struct SampleRange {
  std::size_t begin{0};
  std::size_t end{0};  // exclusive

  std::size_t size() const { return end - begin; }
};

struct Frame {
  std::size_t index{0};  // minute index from record start
  double start_s{0.0};
  SampleRange ecg_slice;
  SampleRange spo2_slice;
  FrameLabel label{FrameLabel::unlabeled};
};

inline constexpr double kFrameSeconds = 60.0;

// One subject night. Immutable after load; ecg and spo2 share the same
// wall-clock origin. excluded_mask has one entry per SpO2 sample.
struct SignalRecord {
  std::string record_id;
  ChannelSpec ecg_spec;
  std::vector<double> ecg;
  ChannelSpec spo2_spec;
  std::vector<double> spo2;
  std::vector<EventAnnotation> annotations;
  std::vector<bool> excluded_mask;

  double ecg_duration_s() const;
  double spo2_duration_s() const;
  double duration_s() const;
};

enum class RecordFormat { native_csv, wfdb };

const char* to_string(EventKind kind);
EventKind parse_event_kind(const std::string& text);
const char* to_string(FrameLabel label);

// Native layout: `<base>.hdr` sidecar, `<base>.ecg.csv`, `<base>.spo2.csv`
// (columns `time_s,value`) and optional `<base>.ann.csv`. `path` names
// the .hdr file (or the WFDB .hea file).
SignalRecord load_record(const std::filesystem::path& path, RecordFormat format);

// Writes the native layout for `record` next to `hdr_path`. Values are
// written in shortest round-trip form so a reload is sample-exact.
void write_record(const SignalRecord& record, const std::filesystem::path& hdr_path);

std::vector<EventAnnotation> read_annotations(const std::filesystem::path& csv_path);
void write_annotations(const std::vector<EventAnnotation>& events,
                       const std::filesystem::path& csv_path);

// Consecutive non-overlapping 60 s frames. The trailing remainder is
// dropped, as is every frame touching an excluded SpO2 second.
std::vector<Frame> segment_frames(const SignalRecord& record);

// Apnoeic iff apnea/hypopnea time inside the frame (union of events) is at
// least min_overlap_s. min_overlap_s must lie in (0, 60].
std::vector<Frame> label_frames(std::vector<Frame> frames,
                                const std::vector<EventAnnotation>& annotations,
                                double min_overlap_s = 10.0);

// ---- WFDB ----

struct WfdbSignalInfo {
  std::string file_name;
  int format{16};
  double gain{200.0};  // adu per physical unit
  int baseline{0};
  std::string units;
  int adc_resolution{16};
  int adc_zero{0};
  int initial_value{0};
  std::string description;
};

struct WfdbHeader {
  std::string record_name;
  double sampling_rate_hz{250.0};
  std::size_t samples_per_signal{0};
  std::vector<WfdbSignalInfo> signals;
};

WfdbHeader parse_wfdb_header(const std::filesystem::path& hea_path);

// Raw digital samples, one vector per signal. Formats 16 and 212 only.
std::vector<std::vector<int>> read_wfdb_samples(const WfdbHeader& header,
                                                const std::filesystem::path& dir);

// Writes `<dir>/<record>.hea` and a single interleaved `.dat` in the
// format named by every signal (all signals must share one format).
void write_wfdb(const WfdbHeader& header, const std::vector<std::vector<int>>& samples,
                const std::filesystem::path& dir);

// MIT-format annotation file (e.g. Apnea-ECG `.apn`): per-minute 'A'
// labels become 60 s apnea events.
std::vector<EventAnnotation> read_wfdb_minute_annotations(const std::filesystem::path& path,
                                                          double sampling_rate_hz);

}  // namespace osa
