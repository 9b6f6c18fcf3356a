#include "osa/pipeline.hpp"

#include "osa/error.hpp"
#include "text_util.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace osa {

std::string describe(const PipelineConfig& c) {
  using detail::format_double;
  std::ostringstream s;
  s << "pipeline=osa-frame-v1\n";
  s << "target_ecg_hz=" << format_double(c.target_ecg_hz) << "\n";
  s << "denoise.levels=" << c.denoise.levels << "\n";
  s << "denoise.detrend=" << (c.denoise.detrend ? 1 : 0) << "\n";
  s << "denoise.threshold_scale=" << format_double(c.denoise.threshold_scale) << "\n";
  s << "qrs.refractory_s=" << format_double(c.qrs.refractory_s) << "\n";
  s << "qrs.integration_window_s=" << format_double(c.qrs.integration_window_s) << "\n";
  s << "qrs.lowpass_hz=" << format_double(c.qrs.lowpass_hz) << "\n";
  s << "qrs.threshold_coefficient=" << format_double(c.qrs.threshold_coefficient) << "\n";
  s << "qrs.t_wave_window_s=" << format_double(c.qrs.t_wave_window_s) << "\n";
  s << "qrs.searchback_rr_factor=" << format_double(c.qrs.searchback_rr_factor) << "\n";
  s << "qrs.s_search_s=" << format_double(c.qrs.s_search_s) << "\n";
  s << "qrs.gap_flag_s=" << format_double(c.qrs.gap_flag_s) << "\n";
  s << "ectopic.rr_tolerance=" << format_double(c.ectopic.rr_tolerance) << "\n";
  s << "ectopic.rs_tolerance=" << format_double(c.ectopic.rs_tolerance) << "\n";
  s << "ectopic.seed_intervals=" << c.ectopic.seed_intervals << "\n";
  s << "edr.qrs_half_window_s=" << format_double(c.edr.qrs_half_window_s) << "\n";
  s << "edr.t_window_begin_s=" << format_double(c.edr.t_window_begin_s) << "\n";
  s << "edr.t_window_end_s=" << format_double(c.edr.t_window_end_s) << "\n";
  s << "edr.t_min_relative_amplitude=" << format_double(c.edr.t_min_relative_amplitude) << "\n";
  s << "edr.source=" << (c.t_wave_edr ? "t_wave" : "qrs_area") << "\n";
  s << "spectral.grid_size=" << c.spectral.grid_size << "\n";
  s << "spectral.f_min_hz=" << format_double(c.spectral.f_min_hz) << "\n";
  s << "spectral.f_split_hz=" << format_double(c.spectral.f_split_hz) << "\n";
  s << "spectral.f_max_hz=" << format_double(c.spectral.f_max_hz) << "\n";
  s << "entropy.m=" << c.entropy.m << "\n";
  s << "entropy.r_factor=" << format_double(c.entropy.r_factor) << "\n";
  s << "baseline=" << (c.baseline == BaselineMode::causal ? "causal" : "record") << "\n";
  s << "min_overlap_s=" << format_double(c.min_overlap_s) << "\n";
  s << "features.spo2=" << (c.spo2_features ? 1 : 0) << "\n";
  s << "features.ecg=" << (c.ecg_features ? 1 : 0) << "\n";
  return s.str();
}

std::string config_hash(const PipelineConfig& cfg) {
  std::uint64_t h = 14695981039346656037ULL;
  for (unsigned char ch : describe(cfg)) {
    h ^= ch;
    h *= 1099511628211ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

void validate(const PipelineConfig& c) {
  if (c.target_ecg_hz < 0.0 || !std::isfinite(c.target_ecg_hz)) {
    throw InvalidArgument("target_ecg_hz must be 0 (native) or a positive rate");
  }
  if (c.denoise.levels == 0) throw InvalidArgument("denoise.levels must be positive");
  if (!(c.min_overlap_s > 0.0) || c.min_overlap_s > kFrameSeconds) {
    throw InvalidArgument("min_overlap_s must lie in (0, 60]");
  }
  if (!c.spo2_features && !c.ecg_features) throw InvalidArgument("at least one feature bank must be enabled");
  if (c.entropy.m < 1 || !(c.entropy.r_factor > 0.0)) {
    throw InvalidArgument("entropy.m must be >= 1 and entropy.r_factor > 0");
  }
  frequency_grid(c.spectral);
}

std::vector<std::string> feature_names(const PipelineConfig& cfg) {
  std::vector<std::string> names;
  if (cfg.spo2_features) names = spo2_feature_names();
  if (cfg.ecg_features) {
    const auto e = ecg_feature_names(cfg.spectral);
    names.insert(names.end(), e.begin(), e.end());
  }
  return names;
}

FrameFeatures extract_frame_features(const FrameInput& in, const PipelineConfig& cfg) {
  FrameFeatures out;
  if (cfg.spo2_features) {
    const auto s = spo2_features(in.spo2, in.baseline, cfg.entropy);
    out.values = flatten(s);
  }
  if (cfg.ecg_features) {
    std::vector<double> ecg(in.ecg.begin(), in.ecg.end());
    double fs = in.ecg_fs;
    if (cfg.target_ecg_hz > 0.0 && cfg.target_ecg_hz != fs) {
      ecg = downsample_ecg(ecg, fs, cfg.target_ecg_hz);
      fs = cfg.target_ecg_hz;
    }
    const auto clean = wavelet_denoise(ecg, cfg.denoise);
    const auto det = detect_qrs(clean, fs, cfg.qrs);
    EDRSeries edr = cfg.t_wave_edr ? extract_edr_t_wave(clean, fs, det.beats, cfg.edr)
                                   : extract_edr_qrs_area(clean, fs, det.beats, cfg.edr);
    for (double& t : edr.sample_times_s) t += in.start_s;
    std::vector<Beat> beats = det.beats;
    for (auto& b : beats) b.r_time_s += in.start_s;
    const auto tach = remove_ectopic(make_tachogram(beats), beats, cfg.ectopic);
    const auto e = ecg_features(tach, edr, FrameWindow{in.start_s, kFrameSeconds}, cfg.spectral);
    const auto flat = flatten(e);
    out.values.insert(out.values.end(), flat.begin(), flat.end());
    out.low_quality = e.low_quality() || !det.low_quality.empty();
  }
  return out;
}

void CausalBaseline::add(std::span<const double> spo2, const std::vector<bool>& excluded) {
  for (std::size_t i = 0; i < spo2.size(); ++i) {
    if (i < excluded.size() && excluded[i]) continue;
    if (std::isfinite(spo2[i])) ++hist_[std::llround(spo2[i])];
  }
}

double CausalBaseline::value() const {
  if (hist_.empty()) throw InvalidArgument("no retained SpO2 samples for a baseline");
  auto best = hist_.begin();
  for (auto it = hist_.begin(); it != hist_.end(); ++it) {
    if (it->second > best->second) best = it;
  }
  return static_cast<double>(best->first);
}

namespace {

void require_1hz(double spo2_fs) {
  if (spo2_fs != 1.0) throw InvalidArgument("the frame pipeline expects SpO2 sampled at 1 Hz");
}

std::size_t sample_at(double t_s, double fs) { return static_cast<std::size_t>(std::llround(t_s * fs)); }

}  // namespace

FeatureMatrix extract_features(const SignalRecord& input, const PipelineConfig& cfg) {
  validate(cfg);
  require_1hz(input.spo2_spec.sampling_rate_hz);
  const SignalRecord record = reject_spo2_artifacts(input);
  const auto frames = label_frames(segment_frames(record), record.annotations, cfg.min_overlap_s);

  FeatureMatrix m(feature_names(cfg));
  m.config_hash = config_hash(cfg);
  const double record_baseline = cfg.baseline == BaselineMode::record ? compute_baseline(record) : 0.0;

  CausalBaseline causal;
  std::size_t minutes_added = 0;
  const auto add_minutes_through = [&](std::size_t minute) {
    for (; minutes_added <= minute; ++minutes_added) {
      const double t0 = static_cast<double>(minutes_added) * kFrameSeconds;
      const std::size_t b = sample_at(t0, 1.0);
      const std::size_t e = std::min(sample_at(t0 + kFrameSeconds, 1.0), record.spo2.size());
      if (b >= e) continue;
      const std::vector<bool> mask(record.excluded_mask.begin() + static_cast<std::ptrdiff_t>(b),
                                   record.excluded_mask.begin() + static_cast<std::ptrdiff_t>(e));
      causal.add(std::span<const double>(record.spo2).subspan(b, e - b), mask);
    }
  };

  for (const auto& f : frames) {
    add_minutes_through(f.index);
    FrameInput in;
    in.ecg = std::span<const double>(record.ecg).subspan(f.ecg_slice.begin, f.ecg_slice.size());
    in.ecg_fs = record.ecg_spec.sampling_rate_hz;
    in.spo2 = std::span<const double>(record.spo2).subspan(f.spo2_slice.begin, f.spo2_slice.size());
    in.start_s = f.start_s;
    in.baseline = cfg.baseline == BaselineMode::record ? record_baseline : causal.value();
    const auto features = extract_frame_features(in, cfg);
    int label = kLabelUnlabeled;
    if (f.label == FrameLabel::normal) label = kLabelNormal;
    if (f.label == FrameLabel::apnoeic) label = kLabelApnoeic;
    m.add_row(features.values, label, RowInfo{record.record_id, static_cast<long long>(f.index)});
  }
  return m;
}

Predictor::Predictor(ClassifierModel model) : impl_(std::move(model)) {}
Predictor::Predictor(Ensemble ensemble) : impl_(std::move(ensemble)) {}

Predictor Predictor::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  const std::string text = ss.str();
  if (text.find("\"format\":\"osadetect-ensemble\"") != std::string::npos) {
    return Predictor(deserialize_ensemble(text));
  }
  return Predictor(deserialize_model(text));
}

Prediction Predictor::predict(const std::vector<std::string>& names, std::span<const double> values) const {
  if (const auto* m = std::get_if<ClassifierModel>(&impl_)) return predict_proba(*m, names, values);
  if (const auto* e = std::get_if<Ensemble>(&impl_)) return e->predict(names, values);
  throw InvalidArgument("predictor holds no model");
}

std::vector<Prediction> Predictor::predict_matrix(const FeatureMatrix& m) const {
  std::vector<Prediction> out;
  out.reserve(m.rows());
  for (std::size_t i = 0; i < m.rows(); ++i) out.push_back(predict(m.names(), m.row(i)));
  return out;
}

std::vector<std::string> Predictor::feature_names() const {
  if (const auto* m = std::get_if<ClassifierModel>(&impl_)) return m->feature_names();
  if (const auto* e = std::get_if<Ensemble>(&impl_)) return e->feature_names();
  return {};
}

std::string Predictor::config_hash() const {
  if (const auto* m = std::get_if<ClassifierModel>(&impl_)) return m->config_hash;
  if (const auto* e = std::get_if<Ensemble>(&impl_)) return e->config_hash;
  return {};
}

std::string Predictor::description() const {
  if (const auto* m = std::get_if<ClassifierModel>(&impl_)) return to_string(m->algorithm());
  if (const auto* e = std::get_if<Ensemble>(&impl_)) {
    const auto& s = e->spec();
    return std::string(to_string(s.members[0])) + "+" + to_string(s.members[1]) + "+" + to_string(s.members[2]) +
           "/" + to_string(s.rule);
  }
  return "none";
}

const char* to_string(Decision d) {
  switch (d) {
    case Decision::normal:
      return "normal";
    case Decision::apnoeic:
      return "apnoeic";
    case Decision::excluded:
      return "excluded";
  }
  return "unknown";
}

StreamingDetector::StreamingDetector(Predictor predictor, PipelineConfig cfg, double ecg_fs, double spo2_fs)
    : predictor_(std::move(predictor)),
      cfg_(cfg),
      names_(feature_names(cfg)),
      ecg_fs_(ecg_fs),
      spo2_fs_(spo2_fs),
      ecg_per_frame_(sample_at(kFrameSeconds, ecg_fs)),
      spo2_per_frame_(sample_at(kFrameSeconds, spo2_fs)) {
  validate(cfg_);
  require_1hz(spo2_fs);
  if (cfg_.baseline != BaselineMode::causal) {
    throw InvalidArgument("streaming detection supports only the causal SpO2 baseline");
  }
  if (!(ecg_fs > 0.0)) throw InvalidArgument("ECG sampling rate must be positive");
  // Fails early, before any data arrives, if the model needs other features.
  column_indices(predictor_.feature_names(), names_);
}

std::vector<Detection> StreamingDetector::push(std::span<const double> ecg, std::span<const double> spo2) {
  ecg_.insert(ecg_.end(), ecg.begin(), ecg.end());
  spo2_.insert(spo2_.end(), spo2.begin(), spo2.end());
  return drain(false);
}

std::vector<Detection> StreamingDetector::finish() { return drain(true); }

std::vector<Detection> StreamingDetector::drain(bool at_end) {
  std::vector<Detection> out;
  while (true) {
    const std::size_t lead = has_prev_ ? 1 : 0;
    const bool ecg_ready = ecg_.size() >= ecg_per_frame_;
    const bool spo2_ready = spo2_.size() >= lead + spo2_per_frame_ + (at_end ? 0 : 1);
    if (!ecg_ready || !spo2_ready) break;
    const auto started = std::chrono::steady_clock::now();

    const std::size_t window = std::min(spo2_.size(), lead + spo2_per_frame_ + 1);
    const auto mask_window = spo2_artifact_mask(std::span<const double>(spo2_).subspan(0, window));
    const std::vector<bool> mask(mask_window.begin() + static_cast<std::ptrdiff_t>(lead),
                                 mask_window.begin() + static_cast<std::ptrdiff_t>(lead + spo2_per_frame_));
    const std::span<const double> frame_spo2 = std::span<const double>(spo2_).subspan(lead, spo2_per_frame_);
    baseline_.add(frame_spo2, mask);
    bool excluded = false;
    for (bool b : mask) excluded = excluded || b;

    Detection d;
    d.frame_index = next_frame_;
    if (excluded) {
      d.decision = Decision::excluded;
      d.p_apnea = 0.0;
    } else {
      FrameInput in;
      in.ecg = std::span<const double>(ecg_).subspan(0, ecg_per_frame_);
      in.ecg_fs = ecg_fs_;
      in.spo2 = frame_spo2;
      in.start_s = static_cast<double>(next_frame_) * kFrameSeconds;
      in.baseline = baseline_.value();
      const auto features = extract_frame_features(in, cfg_);
      const auto p = predictor_.predict(names_, features.values);
      d.decision = p.apnoeic ? Decision::apnoeic : Decision::normal;
      d.p_apnea = p.p_apnea;
    }
    ecg_.erase(ecg_.begin(), ecg_.begin() + static_cast<std::ptrdiff_t>(ecg_per_frame_));
    spo2_.erase(spo2_.begin(), spo2_.begin() + static_cast<std::ptrdiff_t>(lead + spo2_per_frame_ - 1));
    has_prev_ = true;
    ++next_frame_;
    d.latency_ms =
        std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - started).count();
    out.push_back(d);
  }
  return out;
}

}  // namespace osa
