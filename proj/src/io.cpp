#include "combnls/io.hpp"

#include <json.hpp>

#include <charconv>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string_view>
#include <system_error>

namespace combnls {

namespace {

std::string read_file(const std::string& path, const char* who) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw std::runtime_error(std::string(who) + ": cannot open " + path);
  }
  std::ostringstream buf;
  buf << in.rdbuf();
  return std::move(buf).str();
}

void write_file(const std::string& path, const std::string& content,
                const char* who) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out << content;
  if (!out) {
    throw std::runtime_error(std::string(who) + ": cannot write " + path);
  }
}

double parse_double_field(std::string_view field, const char* what,
                          std::size_t line_no) {
  double x = 0.0;
  const auto [end, ec] = std::from_chars(field.data(), field.data() + field.size(), x);
  if (ec != std::errc{} || end != field.data() + field.size()) {
    throw std::runtime_error("read_trajectory_csv: bad " + std::string(what) +
                             " on line " + std::to_string(line_no));
  }
  return x;
}

int parse_int_field(std::string_view field, std::size_t line_no) {
  int x = 0;
  const auto [end, ec] = std::from_chars(field.data(), field.data() + field.size(), x);
  if (ec != std::errc{} || end != field.data() + field.size()) {
    throw std::runtime_error("read_trajectory_csv: bad mode index on line " +
                             std::to_string(line_no));
  }
  return x;
}

} // namespace

ComplexSequence parse_sequence(const std::string& path, int K_limit) {
  const std::string text = read_file(path, "parse_sequence");
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::out_of_range& e) {
    // A literal like 1e999 overflows double during parsing.
    throw std::runtime_error("parse_sequence: non-finite amplitude in " +
                             path + ": " + e.what());
  } catch (const nlohmann::json::exception& e) {
    throw std::runtime_error("parse_sequence: malformed JSON in " + path +
                             ": " + e.what());
  }
  if (!j.is_object() || !j.contains("offset") || !j.contains("values") ||
      !j["offset"].is_number_integer() || !j["values"].is_array() ||
      j["values"].empty()) {
    throw std::runtime_error(
        "parse_sequence: malformed sequence file " + path +
        ": expected {\"offset\": int, \"values\": [[re, im], ...]}");
  }

  ComplexSequence s;
  s.offset = j["offset"].get<int>();
  const auto& values = j["values"];
  s.values = ComplexVector::Zero(static_cast<Eigen::Index>(values.size()));
  for (std::size_t i = 0; i < values.size(); ++i) {
    const auto& pair = values[i];
    if (!pair.is_array() || pair.size() != 2 || !pair[0].is_number() ||
        !pair[1].is_number()) {
      throw std::runtime_error("parse_sequence: malformed sequence file " +
                               path + ": values[" + std::to_string(i) +
                               "] is not an [re, im] pair");
    }
    const double re = pair[0].get<double>();
    const double im = pair[1].get<double>();
    if (!std::isfinite(re) || !std::isfinite(im)) {
      throw std::runtime_error("parse_sequence: non-finite amplitude at mode " +
                               std::to_string(s.offset + static_cast<int>(i)) +
                               " in " + path);
    }
    s.values[static_cast<Eigen::Index>(i)] = Complex(re, im);
  }

  if (K_limit >= 0 && (s.k_min() < -K_limit || s.k_max() > K_limit)) {
    throw std::runtime_error(
        "parse_sequence: support [" + std::to_string(s.k_min()) + ", " +
        std::to_string(s.k_max()) + "] in " + path +
        " exceeds the mode window [-" + std::to_string(K_limit) + ", " +
        std::to_string(K_limit) + "]");
  }
  return s;
}

void write_sequence(const std::string& path, const ComplexSequence& s) {
  nlohmann::ordered_json j;
  j["offset"] = s.offset;
  nlohmann::ordered_json values = nlohmann::ordered_json::array();
  for (int i = 0; i < s.size(); ++i) {
    const Complex a = s.values[i];
    values.push_back({a.real(), a.imag()});
  }
  j["values"] = std::move(values);
  write_file(path, j.dump(2) + "\n", "write_sequence");
}

std::string format_number(double x) {
  char buf[64];
  const auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), x);
  if (ec != std::errc{}) {
    throw std::runtime_error("format_number: conversion failed");
  }
  return std::string(buf, end);
}

void write_trajectory_csv(const std::string& path, const Trajectory& traj) {
  if (traj.times.size() != traj.states.size()) {
    throw std::invalid_argument(
        "write_trajectory_csv: times and states disagree in length");
  }
  std::string out = "t,k,re,im\n";
  for (std::size_t i = 0; i < traj.times.size(); ++i) {
    const ComplexSequence& s = traj.states[i];
    const std::string t_str = format_number(traj.times[i]);
    for (int k = s.k_min(); k <= s.k_max(); ++k) {
      out += t_str;
      out += ',';
      out += std::to_string(k);
      out += ',';
      out += format_number(s[k].real());
      out += ',';
      out += format_number(s[k].imag());
      out += '\n';
    }
  }
  write_file(path, out, "write_trajectory_csv");
}

Trajectory read_trajectory_csv(const std::string& path) {
  const std::string text = read_file(path, "read_trajectory_csv");
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 1;
  if (!std::getline(in, line)) {
    throw std::runtime_error("read_trajectory_csv: " + path + " is empty");
  }
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != "t,k,re,im") {
    throw std::runtime_error("read_trajectory_csv: " + path +
                             " does not start with the header t,k,re,im");
  }

  Trajectory traj;
  std::vector<int> block_ks;
  std::vector<Complex> block_values;
  double block_t = 0.0;
  bool in_block = false;

  const auto flush_block = [&]() {
    if (!in_block) return;
    if (block_ks.empty()) {
      throw std::runtime_error("read_trajectory_csv: empty time block");
    }
    for (std::size_t i = 1; i < block_ks.size(); ++i) {
      if (block_ks[i] != block_ks[i - 1] + 1) {
        throw std::runtime_error(
            "read_trajectory_csv: modes of t = " + format_number(block_t) +
            " are not contiguous ascending");
      }
    }
    if (!traj.states.empty()) {
      const ComplexSequence& first = traj.states.front();
      if (block_ks.front() != first.k_min() ||
          static_cast<int>(block_ks.size()) != first.size()) {
        throw std::runtime_error(
            "read_trajectory_csv: mode window changes at t = " +
            format_number(block_t));
      }
      if (block_t <= traj.times.back()) {
        throw std::runtime_error(
            "read_trajectory_csv: times are not strictly increasing at t = " +
            format_number(block_t));
      }
    }
    ComplexSequence s;
    s.offset = block_ks.front();
    s.values = ComplexVector::Zero(static_cast<Eigen::Index>(block_values.size()));
    for (std::size_t i = 0; i < block_values.size(); ++i) {
      s.values[static_cast<Eigen::Index>(i)] = block_values[i];
    }
    traj.times.push_back(block_t);
    traj.states.push_back(std::move(s));
    block_ks.clear();
    block_values.clear();
  };

  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::string_view rest(line);
    std::string_view field[4];
    for (int f = 0; f < 4; ++f) {
      const std::size_t comma = rest.find(',');
      if ((f < 3) == (comma == std::string_view::npos)) {
        throw std::runtime_error("read_trajectory_csv: expected 4 fields on line " +
                                 std::to_string(line_no));
      }
      field[f] = rest.substr(0, comma);
      rest = (comma == std::string_view::npos) ? std::string_view{}
                                               : rest.substr(comma + 1);
    }
    const double t = parse_double_field(field[0], "time", line_no);
    const int k = parse_int_field(field[1], line_no);
    const double re = parse_double_field(field[2], "value", line_no);
    const double im = parse_double_field(field[3], "value", line_no);
    if (!in_block || t != block_t) {
      flush_block();
      block_t = t;
      in_block = true;
    }
    block_ks.push_back(k);
    block_values.emplace_back(re, im);
  }
  flush_block();
  if (traj.times.empty()) {
    throw std::runtime_error("read_trajectory_csv: " + path + " has no rows");
  }
  return traj;
}

std::string fnv1a64_hex(const void* data, std::size_t n) {
  const auto* bytes = static_cast<const unsigned char*>(data);
  std::uint64_t h = 14695981039346656037ULL;
  for (std::size_t i = 0; i < n; ++i) {
    h ^= bytes[i];
    h *= 1099511628211ULL;
  }
  char buf[17];
  static const char digits[] = "0123456789abcdef";
  for (int i = 15; i >= 0; --i) {
    buf[i] = digits[h & 0xF];
    h >>= 4;
  }
  return std::string(buf, 16);
}

std::string digest_file(const std::string& path) {
  const std::string bytes = read_file(path, "digest_file");
  return "fnv1a64:" + fnv1a64_hex(bytes.data(), bytes.size());
}

std::string sibling_path(const std::string& path, const std::string& suffix) {
  const std::size_t slash = path.find_last_of("/\\");
  const std::size_t dot = path.find_last_of('.');
  if (dot == std::string::npos ||
      (slash != std::string::npos && dot < slash)) {
    return path + suffix;
  }
  return path.substr(0, dot) + suffix;
}

void write_manifest(const std::string& path, const RunManifest& m) {
  nlohmann::ordered_json j;
  j["subcommand"] = m.subcommand;
  nlohmann::ordered_json flags = nlohmann::ordered_json::object();
  for (const auto& [name, value] : m.flags) flags[name] = value;
  j["flags"] = std::move(flags);
  nlohmann::ordered_json inputs = nlohmann::ordered_json::object();
  for (const auto& [file, digest] : m.inputs) inputs[file] = digest;
  j["inputs"] = std::move(inputs);
  j["tool_version"] = m.tool_version;
  j["wall_time_seconds"] = m.wall_time_seconds;
  write_file(path, j.dump(2) + "\n", "write_manifest");
}

} // namespace combnls
