#include "osa/error.hpp"
#include "osa/record_io.hpp"
#include "file_util.hpp"
#include "text_util.hpp"

#include <cstdint>
#include <fstream>
#include <iterator>
#include <sstream>

namespace osa {

namespace fs = std::filesystem;
using detail::parse_double;
using detail::parse_int;
using detail::split_ws;

WfdbHeader parse_wfdb_header(const fs::path& hea_path) {
  std::ifstream in(hea_path);
  if (!in) throw FormatError("cannot open WFDB header " + hea_path.string());
  WfdbHeader h;
  std::string line;
  bool record_line = false;
  std::size_t n_signals = 0;
  while (std::getline(in, line)) {
    const auto t = detail::trim(line);
    if (t.empty() || t.front() == '#') continue;
    const auto tok = split_ws(t);
    if (!record_line) {
      if (tok.size() < 2) throw FormatError(hea_path.string() + ": malformed record line");
      const auto name = tok[0];
      if (name.find('/') != std::string_view::npos) {
        throw UnsupportedFormatError(hea_path.string() + ": multi-segment records are not supported");
      }
      h.record_name = std::string(name);
      const auto nsig = parse_int(tok[1]);
      if (!nsig || *nsig < 0) throw FormatError(hea_path.string() + ": bad signal count");
      n_signals = static_cast<std::size_t>(*nsig);
      if (tok.size() >= 3) {
        // "fs[/counter_freq[(base_counter)]]"
        auto fs_tok = tok[2];
        fs_tok = fs_tok.substr(0, fs_tok.find('/'));
        const auto rate = parse_double(fs_tok);
        if (!rate || !(*rate > 0.0)) throw FormatError(hea_path.string() + ": bad sampling rate");
        h.sampling_rate_hz = *rate;
      }
      if (tok.size() >= 4) {
        const auto ns = parse_int(tok[3]);
        if (!ns || *ns < 0) throw FormatError(hea_path.string() + ": bad sample count");
        h.samples_per_signal = static_cast<std::size_t>(*ns);
      }
      record_line = true;
      continue;
    }
    if (h.signals.size() == n_signals) break;
    if (tok.size() < 2) throw FormatError(hea_path.string() + ": malformed signal line");
    WfdbSignalInfo s;
    s.file_name = std::string(tok[0]);
    {
      // "format[xsamples_per_frame][:skew][+offset]"
      auto f = tok[1];
      std::size_t digits = 0;
      while (digits < f.size() && f[digits] >= '0' && f[digits] <= '9') ++digits;
      const auto fmt = parse_int(f.substr(0, digits));
      if (!fmt) throw FormatError(hea_path.string() + ": bad format field");
      s.format = static_cast<int>(*fmt);
      if (digits < f.size() && f[digits] == 'x') {
        throw UnsupportedFormatError(hea_path.string() + ": multi-sample frames are not supported");
      }
      if (f.find('+') != std::string_view::npos) {
        throw UnsupportedFormatError(hea_path.string() + ": byte offsets are not supported");
      }
    }
    if (s.format != 16 && s.format != 212) {
      throw UnsupportedFormatError(hea_path.string() + ": WFDB storage format " +
                                   std::to_string(s.format) + " is not supported (16, 212 only)");
    }
    if (tok.size() >= 3) {
      // "gain[(baseline)][/units]"
      auto g = tok[2];
      const auto slash = g.find('/');
      if (slash != std::string_view::npos) {
        s.units = std::string(g.substr(slash + 1));
        g = g.substr(0, slash);
      }
      const auto paren = g.find('(');
      bool has_baseline = false;
      if (paren != std::string_view::npos) {
        const auto close = g.find(')', paren);
        const auto b = parse_int(g.substr(paren + 1, close - paren - 1));
        if (!b) throw FormatError(hea_path.string() + ": bad baseline");
        s.baseline = static_cast<int>(*b);
        has_baseline = true;
        g = g.substr(0, paren);
      }
      const auto gain = parse_double(g);
      if (!gain) throw FormatError(hea_path.string() + ": bad gain");
      s.gain = *gain == 0.0 ? 200.0 : *gain;
      if (tok.size() >= 4) {
        if (const auto r = parse_int(tok[3])) s.adc_resolution = static_cast<int>(*r);
      }
      if (tok.size() >= 5) {
        if (const auto z = parse_int(tok[4])) s.adc_zero = static_cast<int>(*z);
      }
      if (!has_baseline) s.baseline = s.adc_zero;
      if (tok.size() >= 6) {
        if (const auto iv = parse_int(tok[5])) s.initial_value = static_cast<int>(*iv);
      }
      if (tok.size() >= 9) {
        std::string desc;
        for (std::size_t i = 8; i < tok.size(); ++i) {
          if (!desc.empty()) desc += ' ';
          desc += tok[i];
        }
        s.description = desc;
      }
    }
    h.signals.push_back(std::move(s));
  }
  if (!record_line) throw FormatError(hea_path.string() + ": missing record line");
  if (h.signals.size() != n_signals) {
    throw FormatError(hea_path.string() + ": header declares " + std::to_string(n_signals) +
                      " signals but lists " + std::to_string(h.signals.size()));
  }
  return h;
}

namespace {

std::vector<unsigned char> read_bytes(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open WFDB signal file " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

int sign_extend12(int v) { return (v & 0x800) ? v - 0x1000 : v; }

}  // namespace

std::vector<std::vector<int>> read_wfdb_samples(const WfdbHeader& header, const fs::path& dir) {
  const std::size_t nsig = header.signals.size();
  std::vector<std::vector<int>> out(nsig);
  // Signals sharing a file are interleaved frame by frame in header order.
  std::size_t i = 0;
  while (i < nsig) {
    const auto& file = header.signals[i].file_name;
    const int fmt = header.signals[i].format;
    std::size_t j = i;
    while (j < nsig && header.signals[j].file_name == file) {
      if (header.signals[j].format != fmt) {
        throw UnsupportedFormatError("mixed storage formats within " + file);
      }
      ++j;
    }
    const std::size_t group = j - i;
    const auto bytes = read_bytes(dir / file);
    std::vector<int> stream;
    if (fmt == 16) {
      stream.reserve(bytes.size() / 2);
      for (std::size_t b = 0; b + 1 < bytes.size(); b += 2) {
        const auto u = static_cast<std::uint16_t>(bytes[b] | (bytes[b + 1] << 8));
        stream.push_back(static_cast<std::int16_t>(u));
      }
    } else {
      stream.reserve(bytes.size() * 2 / 3);
      for (std::size_t b = 0; b + 2 < bytes.size(); b += 3) {
        const int s0 = bytes[b] | ((bytes[b + 1] & 0x0F) << 8);
        const int s1 = bytes[b + 2] | ((bytes[b + 1] & 0xF0) << 4);
        stream.push_back(sign_extend12(s0));
        stream.push_back(sign_extend12(s1));
      }
    }
    std::size_t frames = stream.size() / group;
    if (header.samples_per_signal > 0) {
      if (frames < header.samples_per_signal) {
        throw FormatError(file + ": signal file holds " + std::to_string(frames) +
                          " frames, header declares " + std::to_string(header.samples_per_signal));
      }
      frames = header.samples_per_signal;
    }
    for (std::size_t k = 0; k < group; ++k) out[i + k].resize(frames);
    for (std::size_t f = 0; f < frames; ++f) {
      for (std::size_t k = 0; k < group; ++k) out[i + k][f] = stream[f * group + k];
    }
    i = j;
  }
  return out;
}

void write_wfdb(const WfdbHeader& header, const std::vector<std::vector<int>>& samples,
                const fs::path& dir) {
  if (header.signals.empty() || samples.size() != header.signals.size()) {
    throw InvalidArgument("write_wfdb: one sample vector per declared signal is required");
  }
  const int fmt = header.signals.front().format;
  const auto& file = header.signals.front().file_name;
  for (const auto& s : header.signals) {
    if (s.format != fmt || s.file_name != file) {
      throw InvalidArgument("write_wfdb: all signals must share one file and format");
    }
  }
  if (fmt != 16 && fmt != 212) {
    throw UnsupportedFormatError("write_wfdb: format " + std::to_string(fmt) + " is not supported");
  }
  const std::size_t n = samples.front().size();
  for (const auto& s : samples) {
    if (s.size() != n) throw InvalidArgument("write_wfdb: signals differ in length");
  }

  std::vector<int> stream;
  stream.reserve(n * samples.size());
  for (std::size_t f = 0; f < n; ++f) {
    for (const auto& s : samples) stream.push_back(s[f]);
  }
  std::string bytes;
  if (fmt == 16) {
    for (int v : stream) {
      if (v < -32768 || v > 32767) throw InvalidArgument("write_wfdb: sample exceeds 16 bits");
      const auto u = static_cast<std::uint16_t>(static_cast<std::int16_t>(v));
      bytes.push_back(static_cast<char>(u & 0xFF));
      bytes.push_back(static_cast<char>(u >> 8));
    }
  } else {
    if (stream.size() % 2 == 1) stream.push_back(0);
    for (std::size_t k = 0; k < stream.size(); k += 2) {
      for (int v : {stream[k], stream[k + 1]}) {
        if (v < -2048 || v > 2047) throw InvalidArgument("write_wfdb: sample exceeds 12 bits");
      }
      const int a = stream[k] & 0xFFF;
      const int b = stream[k + 1] & 0xFFF;
      bytes.push_back(static_cast<char>(a & 0xFF));
      bytes.push_back(static_cast<char>(((a >> 8) & 0x0F) | ((b >> 4) & 0xF0)));
      bytes.push_back(static_cast<char>(b & 0xFF));
    }
  }

  std::ostringstream hea;
  hea << header.record_name << ' ' << header.signals.size() << ' '
      << detail::format_double(header.sampling_rate_hz) << ' ' << n << '\n';
  for (const auto& s : header.signals) {
    hea << s.file_name << ' ' << s.format << ' ' << detail::format_double(s.gain) << '('
        << s.baseline << ')';
    if (!s.units.empty()) hea << '/' << s.units;
    hea << ' ' << s.adc_resolution << ' ' << s.adc_zero << ' ' << s.initial_value << " 0 0";
    if (!s.description.empty()) hea << ' ' << s.description;
    hea << '\n';
  }
  detail::write_file_atomic(dir / file, bytes);
  detail::write_file_atomic(dir / (header.record_name + ".hea"), hea.str());
}

std::vector<EventAnnotation> read_wfdb_minute_annotations(const fs::path& path,
                                                          double sampling_rate_hz) {
  const auto bytes = read_bytes(path);
  constexpr int kSkip = 59, kNum = 60, kSub = 61, kChn = 62, kAux = 63;
  // Minute labels use mnemonic 'A' (code 8) for apnoea and 'N' (code 1) otherwise.
  constexpr int kApneaMinute = 8;
  std::vector<EventAnnotation> events;
  long long t = 0;
  std::size_t p = 0;
  const auto word = [&](std::size_t at) { return bytes[at] | (bytes[at + 1] << 8); };
  while (p + 1 < bytes.size()) {
    const int w = word(p);
    p += 2;
    const int code = w >> 10;
    const int arg = w & 0x3FF;
    if (code == 0 && arg == 0) break;
    if (code == kSkip) {
      if (p + 3 >= bytes.size()) throw FormatError(path.string() + ": truncated SKIP");
      const long long hi = word(p);
      const long long lo = word(p + 2);
      auto skip = static_cast<std::int32_t>((hi << 16) | lo);
      t += skip;
      p += 4;
      continue;
    }
    if (code == kAux) {
      p += static_cast<std::size_t>((arg + 1) & ~1);
      continue;
    }
    if (code == kNum || code == kSub || code == kChn) continue;
    t += arg;
    const double start = static_cast<double>(t) / sampling_rate_hz;
    if (code == kApneaMinute) events.push_back({start, kFrameSeconds, EventKind::apnea});
  }
  return events;
}

}  // namespace osa
