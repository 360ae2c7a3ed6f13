// File formats: binary slowness-model and wavefield dumps, the experiment CSV
// row, and JSON-lines instrumentation records.
//
// Model file ("HVM1"): magic line, ASCII header lines nx=<int>, ny=<int>,
// h=<float>, a blank line, then nx*ny little-endian float64 values in row-major
// order (row = y index).  Wavefield file ("HWF1"): same header plus
// kind=complex128, then interleaved (re,im) little-endian float64.  The writer
// assumes a little-endian host.

#pragma once

#include <cstdio>
#include <fstream>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "lsweeps/core.hpp"
#include "lsweeps/grid.hpp"
#include "lsweeps/runtime.hpp"

namespace lsweeps {

namespace detail {

inline std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline std::string format_short(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  return buf;
}

struct HeaderFields {
  int nx = 0, ny = 0;
  double h = 0.0;
  std::string kind;
};

inline HeaderFields read_header(std::istream& is, const std::string& magic,
                                const std::string& path) {
  std::string line;
  if (!std::getline(is, line) || line != magic) {
    throw std::runtime_error(path + ": bad magic, expected " + magic);
  }
  HeaderFields f;
  while (std::getline(is, line)) {
    if (line.empty()) break;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw std::runtime_error(path + ": bad header line: " + line);
    const std::string key = line.substr(0, eq), val = line.substr(eq + 1);
    if (key == "nx") {
      f.nx = std::stoi(val);
    } else if (key == "ny") {
      f.ny = std::stoi(val);
    } else if (key == "h") {
      f.h = std::stod(val);
    } else if (key == "kind") {
      f.kind = val;
    } else {
      throw std::runtime_error(path + ": unknown header key: " + key);
    }
  }
  if (f.nx <= 0 || f.ny <= 0 || f.h <= 0.0) {
    throw std::runtime_error(path + ": incomplete header");
  }
  return f;
}

}  // namespace detail

inline void write_hvm1(const std::string& path, const SlownessModel& model) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error(path + ": cannot open for writing");
  os << "HVM1\n"
     << "nx=" << model.nx << "\n"
     << "ny=" << model.ny << "\n"
     << "h=" << detail::format_double(model.h) << "\n\n";
  os.write(reinterpret_cast<const char*>(model.m.data()),
           static_cast<std::streamsize>(model.m.size() * sizeof(double)));
  if (!os) throw std::runtime_error(path + ": write failed");
}

inline SlownessModel read_hvm1(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error(path + ": cannot open");
  const auto f = detail::read_header(is, "HVM1", path);
  SlownessModel model;
  model.nx = f.nx;
  model.ny = f.ny;
  model.h = f.h;
  model.m.resize(static_cast<size_t>(f.nx) * f.ny);
  is.read(reinterpret_cast<char*>(model.m.data()),
          static_cast<std::streamsize>(model.m.size() * sizeof(double)));
  if (!is) throw std::runtime_error(path + ": truncated payload");
  double lo = 1.0;
  for (double v : model.m) {
    if (!(v > 0.0) || v > 1.0) {
      throw std::runtime_error(path + ": slowness values must lie in (0, 1]");
    }
    lo = std::min(lo, v);
  }
  model.m0 = lo;
  return model;
}

inline void write_hwf1(const std::string& path, const ComplexField& field, double h) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error(path + ": cannot open for writing");
  os << "HWF1\n"
     << "nx=" << field.cols << "\n"
     << "ny=" << field.rows << "\n"
     << "h=" << detail::format_double(h) << "\n"
     << "kind=complex128\n\n";
  os.write(reinterpret_cast<const char*>(field.data.data()),
           static_cast<std::streamsize>(static_cast<size_t>(field.data.size()) *
                                        sizeof(cplx)));
  if (!os) throw std::runtime_error(path + ": write failed");
}

struct WavefieldDump {
  ComplexField field;
  double h = 0.0;
};

inline WavefieldDump read_hwf1(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error(path + ": cannot open");
  const auto f = detail::read_header(is, "HWF1", path);
  if (f.kind != "complex128") throw std::runtime_error(path + ": unsupported kind");
  WavefieldDump dump;
  dump.h = f.h;
  dump.field = ComplexField(f.ny, f.nx);
  is.read(reinterpret_cast<char*>(dump.field.data.data()),
          static_cast<std::streamsize>(static_cast<size_t>(dump.field.data.size()) *
                                       sizeof(cplx)));
  if (!is) throw std::runtime_error(path + ": truncated payload");
  return dump;
}

// ---------------------------------------------------------------------------
// Experiment CSV

inline constexpr const char* kCsvHeader = "N,omega_over_2pi,q,p,T_fact,N_it,T_it,T_total";

inline std::string csv_row(long N, double omega_over_2pi, int q, int p, double t_fact,
                           int n_it, double t_it, double t_total) {
  std::ostringstream os;
  os << N << ',' << detail::format_short(omega_over_2pi) << ',' << q << ',' << p << ','
     << detail::format_short(t_fact) << ',' << n_it << ','
     << detail::format_short(t_it) << ',' << detail::format_short(t_total);
  return os.str();
}

// ---------------------------------------------------------------------------
// Instrumentation JSON lines

// One record per phase; an extra "<phase>_model" record carries the modeled
// makespan in the same shape.
inline void write_instrumentation_jsonl(std::ostream& os,
                                        const InstrumentationReport& rep) {
  for (Phase p : {Phase::Setup, Phase::Factorize, Phase::Solve}) {
    const PhaseStats& s = rep.phase(p);
    os << "{\"phase\":\"" << phase_name(p) << "\",\"seconds\":"
       << detail::format_short(s.seconds) << ",\"messages\":" << s.messages
       << ",\"volume_complex\":" << s.volume_complex << "}\n";
  }
  for (Phase p : {Phase::Setup, Phase::Factorize, Phase::Solve}) {
    const PhaseStats& s = rep.phase(p);
    os << "{\"phase\":\"" << phase_name(p) << "_model\",\"seconds\":"
       << detail::format_short(s.seconds_model) << ",\"messages\":" << s.messages
       << ",\"volume_complex\":" << s.volume_complex << "}\n";
  }
}

inline void write_instrumentation_jsonl(const std::string& path,
                                        const InstrumentationReport& rep) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error(path + ": cannot open for writing");
  write_instrumentation_jsonl(os, rep);
}

}  // namespace lsweeps
