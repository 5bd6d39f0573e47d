#pragma once

#include "combnls/types.hpp"

#include <cstddef>
#include <string>
#include <utility>
#include <vector>

namespace combnls {

/// Read a sequence file: {"offset": int, "values": [[re, im], ...]}.
/// K_limit >= 0 additionally requires the support to lie in [-K_limit,
/// K_limit].  Malformed JSON, non-finite amplitudes, and support overflow
/// raise std::runtime_error with distinct messages.
ComplexSequence parse_sequence(const std::string& path, int K_limit = -1);

/// Inverse of parse_sequence; amplitudes keep full precision.
void write_sequence(const std::string& path, const ComplexSequence& s);

/// Shortest decimal form that parses back to exactly the same double.
std::string format_number(double x);

/// CSV with header `t,k,re,im`, one row per (time, mode), times ascending
/// then k ascending.  Numbers round-trip bit-exactly through
/// read_trajectory_csv.
void write_trajectory_csv(const std::string& path, const Trajectory& traj);
Trajectory read_trajectory_csv(const std::string& path);

/// FNV-1a 64-bit digest as 16 lowercase hex digits.
std::string fnv1a64_hex(const void* data, std::size_t n);

/// "fnv1a64:<hex>" digest of a file's raw bytes.
std::string digest_file(const std::string& path);

/// `path` with its final extension replaced by `suffix` ("mesh.csv" +
/// ".report.json" -> "mesh.report.json"); appends when there is none.
std::string sibling_path(const std::string& path, const std::string& suffix);

/// Record of one CLI invocation, written alongside every run's outputs.
struct RunManifest {
  std::string subcommand;
  std::vector<std::pair<std::string, std::string>> flags;  ///< name, raw value
  std::vector<std::pair<std::string, std::string>> inputs; ///< path, digest
  std::string tool_version;
  double wall_time_seconds = 0.0;
};

void write_manifest(const std::string& path, const RunManifest& m);

} // namespace combnls
