#include <charconv>
#include <cmath>
#include <cstdio>
#include <istream>
#include <ostream>
#include <string>
#include <vector>

#include "ucspd/error.hpp"
#include "ucspd/waveform.hpp"

namespace ucspd {

namespace {

std::string shortest(double x) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, x);
  return {buf, res.ptr};
}

std::string nine_digits(double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.9g", x);
  return buf;
}

double parse_double(const std::string& text, std::size_t line_no) {
  double v = 0.0;
  const char* first = text.data();
  const char* last = text.data() + text.size();
  while (first < last && *first == ' ') ++first;
  while (last > first && (last[-1] == ' ' || last[-1] == '\r')) --last;
  const auto res = std::from_chars(first, last, v);
  if (res.ec != std::errc{} || res.ptr != last) {
    throw InvalidArgument("waveform csv line " + std::to_string(line_no) +
                          ": not a number: '" + text + "'");
  }
  return v;
}

}  // namespace

void write_waveform_csv(std::ostream& out, const SampledWaveform& w, const std::string& comment) {
  if (!comment.empty()) out << "# " << comment << '\n';
  out << "t_fs,value\n";
  for (std::size_t k = 0; k < w.size(); ++k) {
    out << shortest(w.time(k)) << ',' << nine_digits(w[k]) << '\n';
  }
}

SampledWaveform read_waveform_csv(std::istream& in, WaveformKind kind) {
  std::string line;
  std::size_t line_no = 0;
  bool header_seen = false;
  std::vector<double> times;
  std::vector<double> values;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line.front() == '#') continue;
    if (!header_seen) {
      if (line != "t_fs,value") {
        throw InvalidArgument("waveform csv: expected header 't_fs,value', got '" + line + "'");
      }
      header_seen = true;
      continue;
    }
    const auto comma = line.find(',');
    if (comma == std::string::npos || line.find(',', comma + 1) != std::string::npos) {
      throw InvalidArgument("waveform csv line " + std::to_string(line_no) +
                            ": expected two columns");
    }
    times.push_back(parse_double(line.substr(0, comma), line_no));
    values.push_back(parse_double(line.substr(comma + 1), line_no));
  }
  if (!header_seen) throw InvalidArgument("waveform csv: missing header");
  if (times.size() < 2) throw InvalidArgument("waveform csv: need at least 2 samples");

  const double dt = (times.back() - times.front()) / static_cast<double>(times.size() - 1);
  if (!(dt > 0.0)) throw InvalidArgument("waveform csv: time column must be increasing");
  const double tol = 1e-6 * dt;
  for (std::size_t k = 0; k < times.size(); ++k) {
    const double expected = times.front() + static_cast<double>(k) * dt;
    if (std::abs(times[k] - expected) > tol) {
      throw InvalidArgument("waveform csv: non-uniform grid at row " + std::to_string(k) +
                            " (t=" + shortest(times[k]) + ")");
    }
  }
  return {times.front(), dt, std::move(values), kind};
}

}  // namespace ucspd
