#include "osa/eval.hpp"

#include "json.hpp"
#include "osa/error.hpp"
#include "osa/mi_select.hpp"
#include "osa/preprocess.hpp"
#include "osa/rng.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdio>
#include <exception>
#include <mutex>
#include <thread>

namespace osa {

using nlohmann::json;

void Confusion::add(bool truth_apnoeic, bool predicted_apnoeic) {
  if (truth_apnoeic) {
    ++(predicted_apnoeic ? tp : fn);
  } else {
    ++(predicted_apnoeic ? fp : tn);
  }
}

Confusion& Confusion::operator+=(const Confusion& o) {
  tp += o.tp;
  fn += o.fn;
  tn += o.tn;
  fp += o.fp;
  return *this;
}

Metrics metrics(const Confusion& c) {
  Metrics m;
  const auto ratio = [](std::size_t num, std::size_t den) -> std::optional<double> {
    if (den == 0) return std::nullopt;
    return static_cast<double>(num) / static_cast<double>(den);
  };
  m.sensitivity = ratio(c.tp, c.tp + c.fn);
  m.specificity = ratio(c.tn, c.tn + c.fp);
  m.accuracy = ratio(c.tp + c.tn, c.total());
  return m;
}

std::vector<std::size_t> stratified_folds(const std::vector<int>& labels, std::size_t k, std::uint64_t seed) {
  if (k < 2) throw InvalidArgument("cross-validation needs at least 2 folds");
  std::vector<std::size_t> by_class[2];
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] != kLabelNormal && labels[i] != kLabelApnoeic) {
      throw InvalidArgument("stratified folds need labels 0 or 1");
    }
    by_class[labels[i]].push_back(i);
  }
  std::vector<std::size_t> fold(labels.size(), 0);
  Rng rng(seed);
  std::size_t next = 0;
  for (int c = 0; c < 2; ++c) {
    auto& rows = by_class[c];
    if (rows.size() < k) {
      throw InvalidArgument(std::string("class '") + (c == 1 ? "apnoeic" : "normal") + "' has " +
                            std::to_string(rows.size()) + " rows, fewer than " + std::to_string(k) + " folds");
    }
    rng.shuffle(std::span<std::size_t>(rows));
    // Continue dealing where the previous class stopped so fold totals
    // stay balanced as well.
    for (std::size_t r : rows) {
      fold[r] = next;
      next = (next + 1) % k;
    }
  }
  return fold;
}

CandidateSpec single_candidate(Algorithm a, HyperParams hyper) {
  CandidateSpec c;
  c.name = to_string(a);
  c.single = a;
  c.hyper = std::move(hyper);
  return c;
}

CandidateSpec ensemble_candidate(const EnsembleSpec& spec) {
  CandidateSpec c;
  c.name = std::string(to_string(spec.members[0])) + "+" + to_string(spec.members[1]) + "+" +
           to_string(spec.members[2]) + "/" + to_string(spec.rule);
  c.ensemble = spec;
  return c;
}

EvalReport cross_validate(const FeatureMatrix& matrix, const std::vector<CandidateSpec>& candidates,
                          const CvConfig& cfg) {
  for (const auto& c : candidates) {
    if (c.single.has_value() == c.ensemble.has_value()) {
      throw InvalidArgument("candidate '" + c.name + "' must be either a single classifier or an ensemble");
    }
  }
  const FeatureMatrix m = matrix.labeled_only();
  const auto fold_of = stratified_folds(m.labels(), cfg.folds, cfg.seed);

  EvalReport report;
  report.folds = cfg.folds;
  report.seed = cfg.seed;
  report.k_max = cfg.k_max;
  report.select = cfg.select;
  report.config_hash = matrix.config_hash;
  report.fold_selection.assign(cfg.folds, {});
  report.entries.resize(candidates.size());
  for (std::size_t c = 0; c < candidates.size(); ++c) {
    report.entries[c].name = candidates[c].name;
    report.entries[c].folds.resize(cfg.folds);
  }

  const auto run_fold = [&](std::size_t f) {
    std::vector<std::size_t> train_rows;
    std::vector<std::size_t> test_rows;
    for (std::size_t i = 0; i < m.rows(); ++i) (fold_of[i] == f ? test_rows : train_rows).push_back(i);
    const FeatureMatrix train_all = m.subset_rows(train_rows);
    const FeatureMatrix test_all = m.subset_rows(test_rows);
    std::vector<std::string> names = m.names();
    if (cfg.select) {
      const auto sel = forward_select(train_all, std::min(cfg.k_max, m.cols()));
      if (sel.size() > 0) names = sel.names();
    }
    const FeatureMatrix train_set = train_all.select_columns(names);
    const std::uint64_t seed = derive_seed(cfg.seed, 1 + f);
    report.fold_selection[f] = names;
    for (std::size_t c = 0; c < candidates.size(); ++c) {
      const auto& cand = candidates[c];
      std::vector<Prediction> preds;
      if (cand.single) {
        preds = predict_matrix(train(*cand.single, train_set, cand.hyper, seed), test_all);
      } else {
        const auto e = train_ensemble(*cand.ensemble, train_set, cand.member_hyper, seed);
        preds = Predictor(e).predict_matrix(test_all);
      }
      Confusion conf;
      for (std::size_t i = 0; i < test_all.rows(); ++i) {
        conf.add(test_all.label(i) == kLabelApnoeic, preds[i].apnoeic);
      }
      report.entries[c].folds[f] = FoldResult{f, conf};
    }
  };

  unsigned threads = cfg.threads == 0 ? std::max(1u, std::thread::hardware_concurrency()) : cfg.threads;
  threads = std::min<unsigned>(threads, static_cast<unsigned>(cfg.folds));
  std::vector<std::exception_ptr> errors(cfg.folds);
  std::atomic<std::size_t> next{0};
  const auto worker = [&] {
    for (std::size_t f = next++; f < cfg.folds; f = next++) {
      try {
        run_fold(f);
      } catch (...) {
        errors[f] = std::current_exception();
      }
    }
  };
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (unsigned t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  for (auto& entry : report.entries) {
    for (const auto& fr : entry.folds) entry.confusion += fr.confusion;
  }
  return report;
}

namespace {

constexpr const char* kReportTag = "osadetect-eval";
constexpr int kReportVersion = 1;

json optional_percent(const std::optional<double>& v) { return v ? json(*v * 100.0) : json(nullptr); }

json confusion_json(const Confusion& c) { return json{{"tp", c.tp}, {"fn", c.fn}, {"tn", c.tn}, {"fp", c.fp}}; }

Confusion confusion_from(const json& j) {
  return Confusion{j.at("tp").get<std::size_t>(), j.at("fn").get<std::size_t>(), j.at("tn").get<std::size_t>(),
                   j.at("fp").get<std::size_t>()};
}

std::string percent_cell(const std::optional<double>& v) {
  if (!v) return "n/a";
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.2f", *v * 100.0);
  return buf;
}

std::string seconds_cell(const std::optional<TimingResult>& t) {
  if (!t) return "n/a";
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.4f", t->median_s);
  return buf;
}

}  // namespace

std::string to_json(const EvalReport& r) {
  json j;
  j["format"] = kReportTag;
  j["version"] = kReportVersion;
  j["folds"] = r.folds;
  j["seed"] = r.seed;
  j["k_max"] = r.k_max;
  j["select"] = r.select;
  j["config_hash"] = r.config_hash;
  j["config"] = r.config;
  j["fold_selection"] = r.fold_selection;
  json entries = json::array();
  for (const auto& e : r.entries) {
    const auto m = metrics(e.confusion);
    json ej = confusion_json(e.confusion);
    ej["name"] = e.name;
    ej["sensitivity_pct"] = optional_percent(m.sensitivity);
    ej["specificity_pct"] = optional_percent(m.specificity);
    ej["accuracy_pct"] = optional_percent(m.accuracy);
    json folds = json::array();
    for (const auto& f : e.folds) {
      json fj = confusion_json(f.confusion);
      fj["fold"] = f.fold;
      folds.push_back(fj);
    }
    ej["folds"] = folds;
    if (e.timing) {
      ej["processing_time_10_frames_s"] = json{{"median", e.timing->median_s},
                                               {"min", e.timing->min_s},
                                               {"max", e.timing->max_s},
                                               {"frames", e.timing->frames},
                                               {"repetitions", e.timing->repetitions}};
    } else {
      ej["processing_time_10_frames_s"] = nullptr;
    }
    entries.push_back(ej);
  }
  j["entries"] = entries;
  return j.dump(2) + "\n";
}

EvalReport report_from_json(const std::string& text) {
  try {
    const json j = json::parse(text);
    if (j.value("format", std::string{}) != kReportTag) throw FormatError("not an evaluation report");
    if (j.at("version").get<int>() != kReportVersion) throw UnsupportedFormatError("unsupported report version");
    EvalReport r;
    r.folds = j.at("folds").get<std::size_t>();
    r.seed = j.at("seed").get<std::uint64_t>();
    r.k_max = j.at("k_max").get<std::size_t>();
    r.select = j.at("select").get<bool>();
    r.config_hash = j.at("config_hash").get<std::string>();
    r.config = j.at("config").get<std::map<std::string, std::string>>();
    r.fold_selection = j.at("fold_selection").get<std::vector<std::vector<std::string>>>();
    for (const auto& ej : j.at("entries")) {
      EvalEntry e;
      e.name = ej.at("name").get<std::string>();
      e.confusion = confusion_from(ej);
      for (const auto& fj : ej.at("folds")) e.folds.push_back(FoldResult{fj.at("fold").get<std::size_t>(), confusion_from(fj)});
      const auto& t = ej.at("processing_time_10_frames_s");
      if (!t.is_null()) {
        e.timing = TimingResult{t.at("median").get<double>(), t.at("min").get<double>(), t.at("max").get<double>(),
                                t.at("frames").get<std::size_t>(), t.at("repetitions").get<std::size_t>()};
      }
      r.entries.push_back(std::move(e));
    }
    return r;
  } catch (const json::exception& e) {
    throw FormatError(std::string("malformed evaluation report: ") + e.what());
  }
}

std::string to_csv(const EvalReport& r) {
  std::string out = "# config_hash=" + r.config_hash + "\n";
  out += "classifier,tp,fn,tn,fp,sensitivity_pct,specificity_pct,accuracy_pct,processing_time_10_frames_s\n";
  for (const auto& e : r.entries) {
    const auto m = metrics(e.confusion);
    out += e.name + "," + std::to_string(e.confusion.tp) + "," + std::to_string(e.confusion.fn) + "," +
           std::to_string(e.confusion.tn) + "," + std::to_string(e.confusion.fp) + "," +
           (m.sensitivity ? percent_cell(m.sensitivity) : "") + "," +
           (m.specificity ? percent_cell(m.specificity) : "") + "," + (m.accuracy ? percent_cell(m.accuracy) : "") +
           "," + (e.timing ? seconds_cell(e.timing) : "") + "\n";
  }
  return out;
}

std::string to_table(const EvalReport& r) {
  std::vector<std::array<std::string, 5>> rows;
  rows.push_back({"Classifier", "Sensitivity (%)", "Specificity (%)", "Accuracy (%)", "Time 10 frames (s)"});
  for (const auto& e : r.entries) {
    const auto m = metrics(e.confusion);
    rows.push_back({e.name, percent_cell(m.sensitivity), percent_cell(m.specificity), percent_cell(m.accuracy),
                    seconds_cell(e.timing)});
  }
  std::array<std::size_t, 5> width{};
  for (const auto& row : rows) {
    for (std::size_t c = 0; c < 5; ++c) width[c] = std::max(width[c], row[c].size());
  }
  std::string out = std::to_string(r.folds) + "-fold stratified cross-validation, seed " + std::to_string(r.seed) +
                    "\n";
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t c = 0; c < 5; ++c) {
      const auto& cell = rows[i][c];
      const std::string pad(width[c] - cell.size(), ' ');
      out += c == 0 ? cell + pad : "  " + pad + cell;
    }
    out += "\n";
    if (i == 0) {
      std::size_t total = width[0];
      for (std::size_t c = 1; c < 5; ++c) total += 2 + width[c];
      out += std::string(total, '-') + "\n";
    }
  }
  return out;
}

TimingResult time_frames(const SignalRecord& input, const PipelineConfig& cfg, const Predictor* predictor,
                         std::size_t n_frames, std::size_t repetitions) {
  if (n_frames == 0 || repetitions == 0) throw InvalidArgument("timing needs at least one frame and repetition");
  validate(cfg);
  const SignalRecord record = reject_spo2_artifacts(input);
  const auto frames = segment_frames(record);
  if (frames.size() < n_frames) {
    throw InvalidArgument("record has " + std::to_string(frames.size()) + " retained frames, " +
                          std::to_string(n_frames) + " needed for timing");
  }
  const auto names = feature_names(cfg);
  std::vector<FrameInput> inputs;
  CausalBaseline causal;
  std::size_t added = 0;
  for (std::size_t k = 0; k < n_frames; ++k) {
    const auto& f = frames[k];
    for (; added <= f.index; ++added) {
      const std::size_t b = added * 60;
      const std::size_t e = std::min(b + 60, record.spo2.size());
      if (b >= e) continue;
      causal.add(std::span<const double>(record.spo2).subspan(b, e - b),
                 std::vector<bool>(record.excluded_mask.begin() + static_cast<std::ptrdiff_t>(b),
                                   record.excluded_mask.begin() + static_cast<std::ptrdiff_t>(e)));
    }
    FrameInput in;
    in.ecg = std::span<const double>(record.ecg).subspan(f.ecg_slice.begin, f.ecg_slice.size());
    in.ecg_fs = record.ecg_spec.sampling_rate_hz;
    in.spo2 = std::span<const double>(record.spo2).subspan(f.spo2_slice.begin, f.spo2_slice.size());
    in.start_s = f.start_s;
    in.baseline = causal.value();
    inputs.push_back(in);
  }

  std::vector<double> times;
  double sink = 0.0;
  for (std::size_t rep = 0; rep < repetitions; ++rep) {
    const auto t0 = std::chrono::steady_clock::now();
    for (const auto& in : inputs) {
      const auto features = extract_frame_features(in, cfg);
      if (predictor != nullptr) sink += predictor->predict(names, features.values).p_apnea;
    }
    times.push_back(std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
  }
  (void)sink;
  std::vector<double> sorted = times;
  std::sort(sorted.begin(), sorted.end());
  TimingResult r;
  const std::size_t n = sorted.size();
  r.median_s = n % 2 == 1 ? sorted[n / 2] : 0.5 * (sorted[n / 2 - 1] + sorted[n / 2]);
  r.min_s = sorted.front();
  r.max_s = sorted.back();
  r.frames = n_frames;
  r.repetitions = repetitions;
  return r;
}

}  // namespace osa
