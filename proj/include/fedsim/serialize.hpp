#pragma once

// On-disk formats.
//
// Binary containers are little-endian with an 8-byte magic, a format version,
// and raw IEEE-754 doubles; they round-trip datasets and trajectories
// exactly. CSV output renders doubles with %.17g, which also round-trips and
// is byte-stable across runs.

#include <cinttypes>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <string>
#include <vector>

#include "fedsim/dataset.hpp"
#include "fedsim/errors.hpp"
#include "fedsim/hash.hpp"
#include "fedsim/protocols.hpp"

namespace fedsim {

namespace detail {

constexpr char kDatasetMagic[8] = {'F', 'S', 'D', 'A', 'T', 'A', '0', '\n'};
constexpr char kTrajectoryMagic[8] = {'F', 'S', 'T', 'R', 'A', 'J', '0', '\n'};
constexpr std::uint32_t kFormatVersion = 1;

inline void put_u32(std::ostream& os, std::uint32_t v) {
  unsigned char b[4];
  for (int i = 0; i < 4; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
  os.write(reinterpret_cast<const char*>(b), 4);
}

inline void put_u64(std::ostream& os, std::uint64_t v) {
  unsigned char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
  os.write(reinterpret_cast<const char*>(b), 8);
}

inline void put_f64(std::ostream& os, double v) {
  std::uint64_t bits;
  std::memcpy(&bits, &v, 8);
  put_u64(os, bits);
}

inline void put_vec(std::ostream& os, const Vec& v) {
  put_u64(os, v.size());
  for (double x : v) put_f64(os, x);
}

inline std::uint32_t get_u32(std::istream& is) {
  unsigned char b[4];
  is.read(reinterpret_cast<char*>(b), 4);
  if (!is) throw IoError("unexpected end of file");
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(b[i]) << (8 * i);
  return v;
}

inline std::uint64_t get_u64(std::istream& is) {
  unsigned char b[8];
  is.read(reinterpret_cast<char*>(b), 8);
  if (!is) throw IoError("unexpected end of file");
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
  return v;
}

inline double get_f64(std::istream& is) {
  const std::uint64_t bits = get_u64(is);
  double v;
  std::memcpy(&v, &bits, 8);
  return v;
}

inline Vec get_vec(std::istream& is) {
  const std::uint64_t n = get_u64(is);
  if (n > (std::uint64_t{1} << 32)) throw IoError("vector length is implausible");
  Vec v(static_cast<std::size_t>(n));
  for (double& x : v) x = get_f64(is);
  return v;
}

inline void check_magic(std::istream& is, const char (&magic)[8], const char* what) {
  char got[8];
  is.read(got, 8);
  if (!is || std::memcmp(got, magic, 8) != 0)
    throw IoError(std::string("not a ") + what + " file (bad magic)");
  const std::uint32_t v = get_u32(is);
  if (v != kFormatVersion)
    throw IoError(std::string(what) + " format version " + std::to_string(v) + " unsupported");
}

// %.17g: shortest representation that still round-trips a double.
inline std::string fmt_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace detail

inline void save_dataset(const FederatedDataset& fed, const std::string& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw IoError("cannot open " + path + " for writing");
  os.write(detail::kDatasetMagic, 8);
  detail::put_u32(os, detail::kFormatVersion);
  detail::put_u32(os, static_cast<std::uint32_t>(fed.task));
  detail::put_u64(os, fed.dim);
  detail::put_u64(os, fed.node_count());
  for (const auto& node : fed.nodes) {
    detail::put_u64(os, node.samples());
    for (double x : node.X.a) detail::put_f64(os, x);
    detail::put_vec(os, node.y);
    detail::put_vec(os, node.w_star);
  }
  if (!os) throw IoError("short write to " + path);
}

inline FederatedDataset load_dataset(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot open " + path);
  detail::check_magic(is, detail::kDatasetMagic, "dataset");
  FederatedDataset fed;
  fed.task = static_cast<Task>(detail::get_u32(is));
  fed.dim = static_cast<std::size_t>(detail::get_u64(is));
  const std::uint64_t M = detail::get_u64(is);
  fed.nodes.resize(static_cast<std::size_t>(M));
  for (auto& node : fed.nodes) {
    const std::uint64_t n = detail::get_u64(is);
    node.X = Matrix(static_cast<std::size_t>(n), fed.dim);
    for (double& x : node.X.a) x = detail::get_f64(is);
    node.y = detail::get_vec(is);
    node.w_star = detail::get_vec(is);
    if (node.y.size() != node.samples()) throw IoError("dataset labels disagree with samples");
  }
  return fed;
}

inline void save_trajectory(const Trajectory& traj, const std::string& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw IoError("cannot open " + path + " for writing");
  os.write(detail::kTrajectoryMagic, 8);
  detail::put_u32(os, detail::kFormatVersion);
  detail::put_u64(os, traj.config_fingerprint);
  detail::put_u64(os, traj.globals.size());
  for (std::size_t i = 0; i < traj.globals.size(); ++i) {
    detail::put_u64(os, static_cast<std::uint64_t>(traj.round_indices[i]));
    detail::put_vec(os, traj.globals[i]);
  }
  if (!os) throw IoError("short write to " + path);
}

// Diagnostics are not serialized; loaded trajectories carry only the
// recorded globals, their round indices, and the fingerprint.
inline Trajectory load_trajectory(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot open " + path);
  detail::check_magic(is, detail::kTrajectoryMagic, "trajectory");
  Trajectory traj;
  traj.config_fingerprint = detail::get_u64(is);
  const std::uint64_t n = detail::get_u64(is);
  traj.globals.resize(static_cast<std::size_t>(n));
  traj.round_indices.resize(static_cast<std::size_t>(n));
  for (std::size_t i = 0; i < n; ++i) {
    traj.round_indices[i] = static_cast<long>(detail::get_u64(is));
    traj.globals[i] = detail::get_vec(is);
  }
  return traj;
}

// A small column table rendered to CSV with %.17g cells.
struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;

  void add_row(std::vector<double> row) {
    if (row.size() != header.size()) throw DimensionError("Table: row width mismatch");
    rows.push_back(std::move(row));
  }
};

inline std::string render_csv(const Table& t) {
  std::string out;
  for (std::size_t j = 0; j < t.header.size(); ++j) {
    if (j) out += ',';
    out += t.header[j];
  }
  out += '\n';
  for (const auto& row : t.rows) {
    for (std::size_t j = 0; j < row.size(); ++j) {
      if (j) out += ',';
      out += detail::fmt_double(row[j]);
    }
    out += '\n';
  }
  return out;
}

inline void emit_csv(const Table& t, const std::string& path) {
  std::ofstream os(path, std::ios::binary);  // binary: no newline translation anywhere
  if (!os) throw IoError("cannot open " + path + " for writing");
  const std::string body = render_csv(t);
  os.write(body.data(), static_cast<std::streamsize>(body.size()));
  if (!os) throw IoError("short write to " + path);
}

// Per-sample CSV dump of a dataset: node, features..., label.
inline void export_dataset_csv(const FederatedDataset& fed, const std::string& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw IoError("cannot open " + path + " for writing");
  std::string head = "node";
  for (std::size_t j = 0; j < fed.dim; ++j) head += ",x" + std::to_string(j);
  head += ",y\n";
  os.write(head.data(), static_cast<std::streamsize>(head.size()));
  for (std::size_t i = 0; i < fed.node_count(); ++i) {
    const auto& node = fed.nodes[i];
    for (std::size_t r = 0; r < node.samples(); ++r) {
      std::string line = std::to_string(i);
      for (std::size_t j = 0; j < fed.dim; ++j) {
        line += ',';
        line += detail::fmt_double(node.X(r, j));
      }
      line += ',';
      line += detail::fmt_double(node.y[r]);
      line += '\n';
      os.write(line.data(), static_cast<std::streamsize>(line.size()));
    }
  }
  if (!os) throw IoError("short write to " + path);
}

// Round-level trajectory summary: executed rounds with aggregated node
// diagnostics; the model hash column is filled on recorded rounds only.
inline void export_trajectory_csv(const Trajectory& traj, const std::string& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw IoError("cannot open " + path + " for writing");
  std::string out = "round,min_steps,max_steps,max_grad_norm,clamp_events,global_model_hash\n";
  std::size_t rec = 0;
  const long executed = static_cast<long>(traj.diagnostics.size());
  for (long k = 0; k <= executed; ++k) {
    long min_steps = 0, max_steps = 0, clamps = 0;
    double max_grad = 0.0;
    if (k > 0) {
      const auto& diag = traj.diagnostics[static_cast<std::size_t>(k - 1)];
      min_steps = diag.empty() ? 0 : diag[0].steps;
      for (const auto& d : diag) {
        min_steps = std::min(min_steps, d.steps);
        max_steps = std::max(max_steps, d.steps);
        max_grad = std::max(max_grad, d.grad_norm);
        clamps += d.clamped ? 1 : 0;
      }
    }
    std::string hash;
    if (rec < traj.round_indices.size() && traj.round_indices[rec] == k) {
      char buf[20];
      std::snprintf(buf, sizeof(buf), "%016" PRIx64, fnv1a64(traj.globals[rec]));
      hash = buf;
      ++rec;
    }
    out += std::to_string(k) + ',' + std::to_string(min_steps) + ',' + std::to_string(max_steps) +
           ',' + detail::fmt_double(max_grad) + ',' + std::to_string(clamps) + ',' + hash + '\n';
  }
  os.write(out.data(), static_cast<std::streamsize>(out.size()));
  if (!os) throw IoError("short write to " + path);
}

}  // namespace fedsim
