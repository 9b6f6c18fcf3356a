// osadet: command-line front end for the osa toolkit.
//
//   osadet synth    --output night.hdr [--seed N ...]
//   osadet ingest   --input a01er.hea --format wfdb --output a01.hdr
//   osadet features --input night.hdr --output features.csv
//   osadet select   --matrix features.csv --output selection.csv
//   osadet train    --matrix features.csv --algo knn --output model.json
//   osadet eval     --matrix features.csv --ensemble --rule mv --third knn
//   osadet detect   --input night.hdr --model model.json

#include "osa/classify.hpp"
#include "osa/combine.hpp"
#include "osa/error.hpp"
#include "osa/eval.hpp"
#include "osa/feature_matrix.hpp"
#include "osa/file_io.hpp"
#include "osa/mi_select.hpp"
#include "osa/pipeline.hpp"
#include "osa/preprocess.hpp"
#include "osa/record_io.hpp"
#include "osa/synth.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace fs = std::filesystem;

namespace {

struct PipelineFlags {
  double ecg_hz{0.0};
  std::size_t wavelet_levels{7};
  bool no_detrend{false};
  double threshold_scale{1.0};
  std::string baseline{"causal"};
  double min_overlap_s{10.0};
  bool t_wave_edr{false};
  bool no_spo2{false};
  bool no_ecg{false};

  void attach(CLI::App* app) {
    app->add_option("--ecg-hz", ecg_hz, "Decimate the ECG to this rate (0 keeps the native rate)")
        ->check(CLI::NonNegativeNumber);
    app->add_option("--wavelet-levels", wavelet_levels, "Wavelet decomposition depth for ECG denoising");
    app->add_flag("--no-detrend", no_detrend, "Keep the wavelet approximation (no baseline removal)");
    app->add_option("--threshold-scale", threshold_scale, "Scale of the finest-band shrinkage threshold");
    app->add_option("--baseline", baseline, "SpO2 baseline: causal or record")
        ->check(CLI::IsMember({"causal", "record"}));
    app->add_option("--min-overlap", min_overlap_s, "Event seconds needed to mark a minute apnoeic");
    app->add_flag("--t-wave-edr", t_wave_edr, "Derive respiration from T-wave amplitude instead of QRS area");
    app->add_flag("--no-spo2-features", no_spo2, "Drop the SpO2 feature bank");
    app->add_flag("--no-ecg-features", no_ecg, "Drop the ECG feature bank");
  }

  osa::PipelineConfig config() const {
    osa::PipelineConfig cfg;
    cfg.target_ecg_hz = ecg_hz;
    cfg.denoise.levels = wavelet_levels;
    cfg.denoise.detrend = !no_detrend;
    cfg.denoise.threshold_scale = threshold_scale;
    cfg.baseline = baseline == "record" ? osa::BaselineMode::record : osa::BaselineMode::causal;
    cfg.min_overlap_s = min_overlap_s;
    cfg.t_wave_edr = t_wave_edr;
    cfg.spo2_features = !no_spo2;
    cfg.ecg_features = !no_ecg;
    osa::validate(cfg);
    return cfg;
  }
};

osa::RecordFormat parse_format(const std::string& s) {
  return s == "wfdb" ? osa::RecordFormat::wfdb : osa::RecordFormat::native_csv;
}

osa::RecordFormat guess_format(const fs::path& p, const std::string& flag) {
  if (!flag.empty()) return parse_format(flag);
  return p.extension() == ".hea" ? osa::RecordFormat::wfdb : osa::RecordFormat::native_csv;
}

std::pair<std::string, double> split_hyper(const std::string& text) {
  const auto eq = text.find('=');
  if (eq == std::string::npos || eq == 0) {
    throw osa::InvalidArgument("--hyper expects key=value, got '" + text + "'");
  }
  const std::string value = text.substr(eq + 1);
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(value, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != value.size() || value.empty()) {
    throw osa::InvalidArgument("--hyper " + text.substr(0, eq) + ": '" + value + "' is not a number");
  }
  return {text.substr(0, eq), v};
}

// Plain `key=value` pairs go to single classifiers; `algo.key=value` pairs
// go to the ensemble member with that algorithm.
struct HyperSet {
  osa::HyperParams plain;
  std::map<osa::Algorithm, osa::HyperParams> scoped;

  explicit HyperSet(const std::vector<std::string>& items) {
    for (const auto& item : items) {
      auto [key, v] = split_hyper(item);
      const auto dot = key.find('.');
      if (dot == std::string::npos) {
        plain[key] = v;
      } else {
        scoped[osa::parse_algorithm(key.substr(0, dot))][key.substr(dot + 1)] = v;
      }
    }
  }

  osa::HyperParams for_single(osa::Algorithm a) const {
    auto h = plain;
    if (auto it = scoped.find(a); it != scoped.end()) {
      for (const auto& [k, v] : it->second) h[k] = v;
    }
    return h;
  }

  std::array<osa::HyperParams, 3> for_members(const osa::EnsembleSpec& spec) const {
    std::array<osa::HyperParams, 3> out;
    for (std::size_t i = 0; i < 3; ++i) {
      if (auto it = scoped.find(spec.members[i]); it != scoped.end()) out[i] = it->second;
    }
    return out;
  }
};

osa::EnsembleSpec ensemble_spec(const std::string& rule, const std::string& third) {
  osa::EnsembleSpec spec;
  spec.rule = osa::parse_rule(rule);
  spec.members[2] = osa::parse_third_member(third);
  return spec;
}

osa::FeatureMatrix features_from_records(const std::vector<std::string>& inputs, const std::string& format,
                                         const osa::PipelineConfig& cfg) {
  std::optional<osa::FeatureMatrix> all;
  for (const auto& in : inputs) {
    const auto rec = osa::load_record(in, guess_format(in, format));
    auto m = osa::extract_features(rec, cfg);
    std::cerr << "osadet: " << rec.record_id << ": " << m.rows() << " frames ("
              << m.count_label(osa::kLabelApnoeic) << " apnoeic)\n";
    if (!all) {
      all = std::move(m);
    } else {
      all->append(m);
    }
  }
  return std::move(*all);
}

osa::FeatureMatrix apply_selection(const osa::FeatureMatrix& m, const std::string& selection_path) {
  if (selection_path.empty()) return m;
  const auto sel = osa::read_selection(selection_path);
  if (!sel.config_hash.empty() && !m.config_hash.empty() && sel.config_hash != m.config_hash) {
    throw osa::InvalidArgument("selection " + selection_path + " was made under config " + sel.config_hash +
                               " but the matrix uses " + m.config_hash);
  }
  return m.select_columns(sel.names());
}

// ---- subcommands ----

struct SynthCmd {
  osa::SynthParams p;
  std::string output;

  void attach(CLI::App* app) {
    app->add_option("-o,--output", output, "Native record header to write (.hdr)")->required();
    app->add_option("--record-id", p.record_id, "Record identifier");
    app->add_option("--duration", p.duration_s, "Length in seconds");
    app->add_option("--apnea-rate", p.apnea_rate_per_hour, "Events per hour");
    app->add_option("--event-duration", p.event_duration_s, "Event length in seconds");
    app->add_option("--desat-depth", p.desat_depth, "Desaturation depth in SpO2 points");
    app->add_option("--cvhr-depth", p.cvhr_depth, "Relative R-R swing during events");
    app->add_option("--noise", p.noise_level, "ECG noise level");
    app->add_option("--ecg-fs", p.ecg_fs, "ECG sampling rate (Hz)");
    app->add_option("--baseline-spo2", p.baseline_spo2, "Resting SpO2 (%)");
    app->add_option("--heart-rate", p.heart_rate_bpm, "Resting heart rate (bpm)");
    app->add_option("--resp-rate", p.resp_rate_hz, "Breathing rate (Hz)");
    app->add_option("--seed", p.seed, "Random seed");
  }

  int run() const {
    const auto rec = osa::synth_generate(p);
    osa::write_record(rec, output);
    std::cerr << "osadet: wrote " << output << " (" << rec.spo2.size() / 60 << " minutes, "
              << rec.annotations.size() << " events)\n";
    return 0;
  }
};

struct IngestCmd {
  std::string input;
  std::string format;
  std::string output;
  bool reject{false};

  void attach(CLI::App* app) {
    app->add_option("-i,--input", input, "Record to read (.hdr native or .hea WFDB)")->required();
    app->add_option("--format", format, "native or wfdb (default: from the extension)")
        ->check(CLI::IsMember({"native", "wfdb"}));
    app->add_option("-o,--output", output, "Native record header to write (.hdr)")->required();
    app->add_flag("--reject-artifacts", reject, "Store the SpO2 artifact mask with the record");
  }

  int run() const {
    auto rec = osa::load_record(input, guess_format(input, format));
    if (reject) rec = osa::reject_spo2_artifacts(rec);
    osa::write_record(rec, output);
    std::cerr << "osadet: " << rec.record_id << ": " << osa::segment_frames(rec).size()
              << " whole minutes, " << rec.annotations.size() << " events\n";
    return 0;
  }
};

struct FeaturesCmd {
  std::vector<std::string> inputs;
  std::string format;
  std::string output;
  PipelineFlags pipeline;

  void attach(CLI::App* app) {
    app->add_option("-i,--input", inputs, "Records to process (repeatable)")->required();
    app->add_option("--format", format, "native or wfdb")->check(CLI::IsMember({"native", "wfdb"}));
    app->add_option("-o,--output", output, "Feature matrix CSV")->required();
    pipeline.attach(app);
  }

  int run() const {
    const auto cfg = pipeline.config();
    const auto m = features_from_records(inputs, format, cfg);
    osa::write_matrix(m, output);
    return 0;
  }
};

struct SelectCmd {
  std::string matrix;
  std::string output;
  std::size_t k_max{20};

  void attach(CLI::App* app) {
    app->add_option("-m,--matrix", matrix, "Feature matrix CSV")->required();
    app->add_option("-o,--output", output, "Selection CSV (rank,name,score)")->required();
    app->add_option("--k-max", k_max, "Upper bound on selected features")->check(CLI::PositiveNumber);
  }

  int run() const {
    const auto m = osa::read_matrix(matrix);
    const auto sel = osa::forward_select(m, std::min(k_max, m.cols()));
    osa::write_selection(sel, output);
    std::cout << osa::to_csv(sel);
    return 0;
  }
};

struct TrainCmd {
  std::string matrix;
  std::string selection;
  std::string output;
  std::string algo{"adaboost_stump"};
  bool ensemble{false};
  std::string rule{"mv"};
  std::string third{"knn"};
  std::vector<std::string> hyper;
  std::uint64_t seed{0};

  void attach(CLI::App* app) {
    app->add_option("-m,--matrix", matrix, "Feature matrix CSV")->required();
    app->add_option("-s,--selection", selection, "Selection CSV restricting the columns");
    app->add_option("-o,--output", output, "Model file to write")->required();
    app->add_option("--algo", algo, "Classifier id");
    app->add_flag("--ensemble", ensemble, "Train the adaboost/bagging/third-member triple");
    app->add_option("--rule", rule, "Fusion rule: mp, pp, ap or mv")->check(CLI::IsMember({"mp", "pp", "ap", "mv"}));
    app->add_option("--third", third, "Third member: knn, dt, c45 or rept")
        ->check(CLI::IsMember({"knn", "dt", "c45", "rept"}));
    app->add_option("--hyper", hyper, "Hyperparameter key=value (algo.key=value for ensemble members)");
    app->add_option("--seed", seed, "Random seed");
  }

  int run() const {
    const HyperSet hs(hyper);
    const auto m = apply_selection(osa::read_matrix(matrix), selection);
    if (ensemble) {
      const auto spec = ensemble_spec(rule, third);
      const auto e = osa::train_ensemble(spec, m, hs.for_members(spec), seed);
      osa::save_ensemble(e, output);
    } else {
      const auto a = osa::parse_algorithm(algo);
      const auto model = osa::train(a, m, hs.for_single(a), seed);
      osa::save_model(model, output);
    }
    return 0;
  }
};

struct EvalCmd {
  std::string matrix;
  std::vector<std::string> inputs;
  std::string format;
  std::vector<std::string> algos;
  bool ensemble{false};
  bool triples{false};
  std::string rule{"mv"};
  std::string third{"knn"};
  std::vector<std::string> hyper;
  std::size_t folds{10};
  std::uint64_t seed{0};
  std::size_t k_max{20};
  bool no_select{false};
  unsigned threads{0};
  bool timing{false};
  std::string report_dir;
  std::string name{"eval"};
  PipelineFlags pipeline;

  void attach(CLI::App* app) {
    auto* src = app->add_option_group("source", "Feature source");
    src->add_option("-m,--matrix", matrix, "Feature matrix CSV");
    src->add_option("-i,--input", inputs, "Records to extract features from (repeatable)");
    src->require_option(1);
    app->add_option("--format", format, "native or wfdb")->check(CLI::IsMember({"native", "wfdb"}));
    app->add_option("--algo", algos, "Single classifier to evaluate (repeatable; 'all' for every one)");
    app->add_flag("--ensemble", ensemble, "Evaluate the adaboost/bagging/third-member triple");
    app->add_flag("--triples", triples, "Evaluate every third member under every fusion rule");
    app->add_option("--rule", rule, "Fusion rule: mp, pp, ap or mv")->check(CLI::IsMember({"mp", "pp", "ap", "mv"}));
    app->add_option("--third", third, "Third member: knn, dt, c45 or rept")
        ->check(CLI::IsMember({"knn", "dt", "c45", "rept"}));
    app->add_option("--hyper", hyper, "Hyperparameter key=value (algo.key=value for ensemble members)");
    app->add_option("--folds", folds, "Cross-validation folds")->check(CLI::Range(2, 1000));
    app->add_option("--seed", seed, "Random seed");
    app->add_option("--k-max", k_max, "Upper bound on selected features per fold")->check(CLI::PositiveNumber);
    app->add_flag("--no-select", no_select, "Use every feature instead of per-fold selection");
    app->add_option("--threads", threads, "Worker threads for folds (0: all cores)");
    app->add_flag("--timing", timing, "Time 10 frames of the first input record per candidate");
    app->add_option("--report-dir", report_dir, "Directory for the report (default: $OSA_REPORT_DIR or .)");
    app->add_option("--name", name, "Report file stem");
    pipeline.attach(app);
  }

  std::vector<osa::CandidateSpec> candidates() const {
    const HyperSet hs(hyper);
    std::vector<osa::CandidateSpec> out;
    for (const auto& a : algos) {
      if (a == "all") {
        for (auto alg : osa::all_algorithms()) out.push_back(osa::single_candidate(alg, hs.for_single(alg)));
      } else {
        const auto alg = osa::parse_algorithm(a);
        out.push_back(osa::single_candidate(alg, hs.for_single(alg)));
      }
    }
    std::vector<osa::EnsembleSpec> specs;
    if (triples) {
      const std::vector<osa::Algorithm> thirds{osa::Algorithm::knn, osa::Algorithm::decision_table,
                                               osa::Algorithm::c45_tree, osa::Algorithm::rep_tree};
      specs = osa::build_triples({osa::Algorithm::adaboost_stump, osa::Algorithm::bagging_rept}, thirds);
    } else if (ensemble || out.empty()) {
      specs.push_back(ensemble_spec(rule, third));
    }
    for (const auto& spec : specs) {
      auto c = osa::ensemble_candidate(spec);
      c.member_hyper = hs.for_members(spec);
      out.push_back(std::move(c));
    }
    return out;
  }

  std::map<std::string, std::string> echo(const osa::PipelineConfig* cfg) const {
    std::map<std::string, std::string> c;
    const auto join = [](const std::vector<std::string>& v) {
      std::string s;
      for (const auto& x : v) s += (s.empty() ? "" : ";") + x;
      return s;
    };
    if (!matrix.empty()) c["matrix"] = matrix;
    if (!inputs.empty()) c["input"] = join(inputs);
    c["algo"] = join(algos);
    c["ensemble"] = ensemble ? "1" : "0";
    c["triples"] = triples ? "1" : "0";
    c["rule"] = rule;
    c["third"] = third;
    c["hyper"] = join(hyper);
    c["folds"] = std::to_string(folds);
    c["seed"] = std::to_string(seed);
    c["k_max"] = std::to_string(k_max);
    c["select"] = no_select ? "0" : "1";
    c["timing"] = timing ? "1" : "0";
    if (cfg != nullptr) {
      std::istringstream lines(osa::describe(*cfg));
      for (std::string line; std::getline(lines, line);) {
        const auto eq = line.find('=');
        if (eq != std::string::npos) c["pipeline." + line.substr(0, eq)] = line.substr(eq + 1);
      }
    }
    return c;
  }

  int run() const {
    if (timing && inputs.empty()) throw osa::InvalidArgument("--timing needs --input records");
    const auto cands = candidates();
    std::optional<osa::PipelineConfig> cfg;
    osa::FeatureMatrix m;
    if (!inputs.empty()) {
      cfg = pipeline.config();
      m = features_from_records(inputs, format, *cfg);
    } else {
      m = osa::read_matrix(matrix);
    }
    fs::path dir = report_dir;
    if (dir.empty()) {
      const char* env = std::getenv("OSA_REPORT_DIR");
      dir = env != nullptr && *env != '\0' ? fs::path(env) : fs::path(".");
    }

    osa::CvConfig cv;
    cv.folds = folds;
    cv.seed = seed;
    cv.k_max = std::min(k_max, m.cols());
    cv.select = !no_select;
    cv.threads = threads;
    auto report = osa::cross_validate(m, cands, cv);
    report.config = echo(cfg ? &*cfg : nullptr);

    if (timing) {
      const auto rec = osa::load_record(inputs.front(), guess_format(inputs.front(), format));
      const auto labelled = m.labeled_only();
      const auto train_m =
          cv.select ? labelled.select_columns(osa::forward_select(labelled, cv.k_max).names()) : labelled;
      for (std::size_t i = 0; i < cands.size(); ++i) {
        const auto& c = cands[i];
        osa::Predictor pred = c.single ? osa::Predictor(osa::train(*c.single, train_m, c.hyper, seed))
                                       : osa::Predictor(osa::train_ensemble(*c.ensemble, train_m, c.member_hyper, seed));
        report.entries[i].timing = osa::time_frames(rec, *cfg, &pred);
      }
    }

    osa::write_text_atomic(dir / (name + ".json"), osa::to_json(report));
    osa::write_text_atomic(dir / (name + ".csv"), osa::to_csv(report));
    const auto table = osa::to_table(report);
    osa::write_text_atomic(dir / (name + ".txt"), table);
    std::cout << table;
    return 0;
  }
};

struct DetectCmd {
  std::string input;
  std::string format;
  std::string model;
  double chunk_s{1.0};
  bool allow_mismatch{false};
  PipelineFlags pipeline;

  void attach(CLI::App* app) {
    app->add_option("-i,--input", input, "Record to replay as a live stream")->required();
    app->add_option("--format", format, "native or wfdb")->check(CLI::IsMember({"native", "wfdb"}));
    app->add_option("--model", model, "Model or ensemble file")->required();
    app->add_option("--chunk", chunk_s, "Seconds of signal per push")->check(CLI::PositiveNumber);
    app->add_flag("--allow-config-mismatch", allow_mismatch, "Run even if the model was trained under another config");
    pipeline.attach(app);
  }

  int run() const {
    const auto cfg = pipeline.config();
    if (cfg.baseline != osa::BaselineMode::causal) {
      throw osa::InvalidArgument("--baseline record is batch-only; detect needs the causal baseline");
    }
    auto pred = osa::Predictor::load(model);
    const auto hash = osa::config_hash(cfg);
    if (!allow_mismatch && !pred.config_hash().empty() && pred.config_hash() != hash) {
      throw osa::InvalidArgument("config hash mismatch: model " + model + " was trained under " +
                                 pred.config_hash() + ", current flags give " + hash);
    }
    const auto rec = osa::load_record(input, guess_format(input, format));
    osa::StreamingDetector det(std::move(pred), cfg, rec.ecg_spec.sampling_rate_hz, rec.spo2_spec.sampling_rate_hz);

    std::cout << "frame_index,decision,p_apnea,latency_ms\n";
    const auto emit = [](const std::vector<osa::Detection>& ds) {
      for (const auto& d : ds) {
        std::printf("%lld,%s,%.6f,%.3f\n", d.frame_index, osa::to_string(d.decision), d.p_apnea, d.latency_ms);
      }
      std::fflush(stdout);
    };
    const auto ecg_step = static_cast<std::size_t>(chunk_s * rec.ecg_spec.sampling_rate_hz);
    const auto spo2_step = static_cast<std::size_t>(chunk_s * rec.spo2_spec.sampling_rate_hz);
    if (ecg_step == 0 || spo2_step == 0) throw osa::InvalidArgument("--chunk is shorter than one sample");
    std::size_t ei = 0;
    std::size_t si = 0;
    while (ei < rec.ecg.size() || si < rec.spo2.size()) {
      const auto en = std::min(ecg_step, rec.ecg.size() - ei);
      const auto sn = std::min(spo2_step, rec.spo2.size() - si);
      emit(det.push(std::span<const double>(rec.ecg).subspan(ei, en),
                    std::span<const double>(rec.spo2).subspan(si, sn)));
      ei += en;
      si += sn;
    }
    emit(det.finish());
    return 0;
  }
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"osadet: minute-by-minute sleep apnea detection from ECG and SpO2"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "osadet 0.1.0");

  SynthCmd synth;
  IngestCmd ingest;
  FeaturesCmd features;
  SelectCmd select;
  TrainCmd train;
  EvalCmd eval;
  DetectCmd detect;

  auto* s_synth = app.add_subcommand("synth", "Generate a labelled synthetic night");
  synth.attach(s_synth);
  auto* s_ingest = app.add_subcommand("ingest", "Convert a record to the native layout");
  ingest.attach(s_ingest);
  auto* s_features = app.add_subcommand("features", "Extract the per-minute feature matrix");
  features.attach(s_features);
  auto* s_select = app.add_subcommand("select", "Mutual-information forward feature selection");
  select.attach(s_select);
  auto* s_train = app.add_subcommand("train", "Train a classifier or an ensemble");
  train.attach(s_train);
  auto* s_eval = app.add_subcommand("eval", "Stratified cross-validation report");
  eval.attach(s_eval);
  auto* s_detect = app.add_subcommand("detect", "Replay a record through the online detector");
  detect.attach(s_detect);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "osadet: " << e.what() << "\n\n";
    const auto subs = app.get_subcommands();
    std::cerr << (subs.empty() ? app.help() : subs.front()->help());
    return e.get_exit_code() != 0 ? e.get_exit_code() : 2;
  }

  try {
    if (s_synth->parsed()) return synth.run();
    if (s_ingest->parsed()) return ingest.run();
    if (s_features->parsed()) return features.run();
    if (s_select->parsed()) return select.run();
    if (s_train->parsed()) return train.run();
    if (s_eval->parsed()) return eval.run();
    if (s_detect->parsed()) return detect.run();
  } catch (const osa::InvalidArgument& e) {
    std::cerr << "osadet: invalid argument: " << e.what() << "\n";
    return 2;
  } catch (const osa::FormatError& e) {
    std::cerr << "osadet: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "osadet: error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
