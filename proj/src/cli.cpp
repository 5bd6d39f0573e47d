#include "combnls/cli.hpp"

#include "combnls/closed_form.hpp"
#include "combnls/cutoff.hpp"
#include "combnls/dynamics.hpp"
#include "combnls/field.hpp"
#include "combnls/fixedpoint.hpp"
#include "combnls/io.hpp"
#include "combnls/norms.hpp"
#include "combnls/parallel.hpp"
#include "combnls/resonance.hpp"
#include "combnls/types.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <bit>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <iostream>
#include <stdexcept>
#include <string>
#include <vector>

namespace combnls {

namespace {

constexpr const char* k_tool_version = "combnls 0.1.0";

struct GlobalFlags {
  int threads = 0;
  std::string manifest_path;
  bool quiet = false;
};

void note_output(const GlobalFlags& g, const std::string& path) {
  if (!g.quiet) std::cout << "wrote " << path << "\n";
}

void write_text(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out << content;
  if (!out) {
    throw std::runtime_error("cannot write " + path);
  }
}

// Record every option the user actually passed, in declaration order.
void collect_flags(const CLI::App& app, RunManifest& manifest) {
  for (const CLI::Option* opt : app.get_options()) {
    if (opt->count() == 0 || opt->get_name() == "--help") continue;
    if (opt->get_expected_min() == 0) {
      manifest.flags.emplace_back(opt->get_name(), "true");
      continue;
    }
    for (const std::string& value : opt->results()) {
      manifest.flags.emplace_back(opt->get_name(), value);
    }
  }
}

double parse_number(std::string_view text, const char* what) {
  double x = 0.0;
  const auto [end, ec] =
      std::from_chars(text.data(), text.data() + text.size(), x);
  if (ec != std::errc{} || end != text.data() + text.size()) {
    throw std::runtime_error(std::string("explicit: bad ") + what +
                             " in --sweep");
  }
  return x;
}

// "t0:t1:n" -> n times, endpoints included (n = 1 keeps just t0).
std::vector<double> sweep_times(const std::string& spec) {
  const std::size_t c1 = spec.find(':');
  const std::size_t c2 = (c1 == std::string::npos)
                             ? std::string::npos
                             : spec.find(':', c1 + 1);
  if (c1 == std::string::npos || c2 == std::string::npos) {
    throw std::runtime_error("explicit: --sweep expects t0:t1:n");
  }
  const double t0 = parse_number(spec.substr(0, c1), "t0");
  const double t1 = parse_number(std::string_view(spec).substr(c1 + 1, c2 - c1 - 1), "t1");
  long n = 0;
  {
    const std::string_view tail = std::string_view(spec).substr(c2 + 1);
    const auto [end, ec] =
        std::from_chars(tail.data(), tail.data() + tail.size(), n);
    if (ec != std::errc{} || end != tail.data() + tail.size() || n < 1) {
      throw std::runtime_error("explicit: --sweep expects a positive count");
    }
  }
  if (!(t0 > 0.0) || !(t1 >= t0)) {
    throw std::runtime_error("explicit: --sweep needs 0 < t0 <= t1");
  }
  std::vector<double> times;
  if (n == 1) {
    times.push_back(t0);
    return times;
  }
  for (long i = 0; i < n; ++i) {
    times.push_back(t0 + (t1 - t0) * static_cast<double>(i) /
                             static_cast<double>(n - 1));
  }
  times.back() = t1;
  return times;
}

// Linear interpolation of a sampled trajectory, clamped to its time span.
ModeFunction trajectory_evaluator(const Trajectory& traj) {
  return [&traj](int k, double t) -> Complex {
    if (t <= traj.times.front()) return traj.states.front().at(k);
    if (t >= traj.times.back()) return traj.states.back().at(k);
    const auto it =
        std::upper_bound(traj.times.begin(), traj.times.end(), t);
    const std::size_t hi = static_cast<std::size_t>(it - traj.times.begin());
    const std::size_t lo = hi - 1;
    const double w =
        (t - traj.times[lo]) / (traj.times[hi] - traj.times[lo]);
    return (1.0 - w) * traj.states[lo].at(k) + w * traj.states[hi].at(k);
  };
}

struct ResonanceTableArgs {
  int K = 0;
  std::string alpha_path;
  std::string out_path;
};

void run_resonance_table(const ResonanceTableArgs& a, const GlobalFlags& g,
                         RunManifest& manifest) {
  const ComplexSequence alpha = parse_sequence(a.alpha_path, a.K);
  manifest.inputs.emplace_back(a.alpha_path, digest_file(a.alpha_path));
  const ResonanceTable table = build_table(a.K, alpha);

  nlohmann::ordered_json j;
  j["K"] = a.K;
  nlohmann::ordered_json entries = nlohmann::ordered_json::object();
  for (int k = -a.K; k <= a.K; ++k) {
    nlohmann::ordered_json rows = nlohmann::ordered_json::array();
    for (const ResonanceEntry& e : table.for_mode(k)) {
      rows.push_back({e.m, e.z, e.j1, e.j2, e.j3, e.lambda});
    }
    entries[std::to_string(k)] = std::move(rows);
  }
  j["entries"] = std::move(entries);
  write_text(a.out_path, j.dump(2) + "\n");
  note_output(g, a.out_path);
}

struct SimulateArgs {
  std::string alpha_path;
  int K = 0;
  std::string system;
  double t0 = 0.0;
  double t1 = 0.0;
  double rtol = 1e-10;
  double atol = 1e-12;
  int samples = 0;
  std::string out_path;
  std::string diagnostics_path;
};

void run_simulate(const SimulateArgs& a, const GlobalFlags& g,
                  RunManifest& manifest) {
  const ComplexSequence alpha = parse_sequence(a.alpha_path, a.K);
  manifest.inputs.emplace_back(a.alpha_path, digest_file(a.alpha_path));
  const ResonanceTable table = build_table(a.K, alpha);

  VariableTag tag = VariableTag::B;
  if (a.system == "A") tag = VariableTag::A;
  if (a.system == "Atilde") tag = VariableTag::ATilde;

  SolverConfig config;
  config.K = a.K;
  config.rtol = a.rtol;
  config.atol = a.atol;
  config.t_span = {a.t0, a.t1};
  if (a.samples != 0) {
    if (a.samples < 2) {
      throw std::runtime_error("simulate: --samples needs at least 2 (or 0 "
                               "to record accepted steps)");
    }
    for (int i = 0; i < a.samples; ++i) {
      config.sample_times.push_back(
          a.t0 + (a.t1 - a.t0) * static_cast<double>(i) /
                     static_cast<double>(a.samples - 1));
    }
    config.sample_times.back() = a.t1;
  }

  const Trajectory traj = integrate(tag, alpha, table, config);
  write_trajectory_csv(a.out_path, traj);
  note_output(g, a.out_path);

  if (!a.diagnostics_path.empty()) {
    std::string csv = "t,mass,energy\n";
    for (std::size_t i = 0; i < traj.times.size(); ++i) {
      csv += format_number(traj.times[i]);
      csv += ',';
      csv += format_number(mass(traj.states[i]));
      csv += ',';
      csv += format_number(energy(traj.states[i], traj.times[i], config));
      csv += '\n';
    }
    write_text(a.diagnostics_path, csv);
    note_output(g, a.diagnostics_path);
  }
}

struct ExplicitArgs {
  double alpha_re = 0.0;
  double alpha_im = 0.0;
  double t = 0.0;
  bool have_t = false;
  std::int64_t mmax = 4096;
  std::string sweep;
  std::string out_path;
};

void run_explicit(const ExplicitArgs& a, const GlobalFlags& g) {
  std::vector<double> times;
  if (!a.sweep.empty()) {
    times = sweep_times(a.sweep);
  } else if (a.have_t) {
    times.push_back(a.t);
  } else {
    throw std::runtime_error("explicit: give --t or --sweep t0:t1:n");
  }

  PhaseQuadratureConfig cfg;
  cfg.M_max = a.mmax;
  const Complex alpha(a.alpha_re, a.alpha_im);
  const double strength = std::norm(alpha);

  std::string csv = "t,re,im,phase,tail_bound\n";
  for (double t : times) {
    const PhaseIntegral phi = phase_integral(t, cfg);
    const Complex b = explicit_B(alpha, t, cfg);
    csv += format_number(t);
    csv += ',';
    csv += format_number(b.real());
    csv += ',';
    csv += format_number(b.imag());
    csv += ',';
    csv += format_number(-strength * phi.value);
    csv += ',';
    csv += format_number(strength * phi.tail_bound);
    csv += '\n';
  }
  write_text(a.out_path, csv);
  note_output(g, a.out_path);
}

struct FixedPointArgs {
  std::string alpha_path;
  int K = 0;
  int N = 0;
  double s = 0.75;
  double p = 2.0;
  double tol = 1e-8;
  double tmax = 0.0;
  std::string out_path;
};

void run_fixed_point(const FixedPointArgs& a, const GlobalFlags& g,
                     RunManifest& manifest) {
  const ComplexSequence alpha = parse_sequence(a.alpha_path, a.K);
  manifest.inputs.emplace_back(a.alpha_path, digest_file(a.alpha_path));
  const ResonanceTable table = build_table(a.K, alpha);

  const OscQuadrature quad;
  const PicardResult result = picard_solve(alpha, table, a.N, a.s, a.p,
                                           a.tmax, a.tol, 32, quad);
  if (!result.converged) {
    throw std::runtime_error(
        "fixed-point: iteration stalled above the tolerance after " +
        std::to_string(result.iterations) + " sweeps (last gap " +
        format_number(result.final_gap) + ")");
  }

  Trajectory mesh;
  mesh.times = result.solution.times;
  for (const ComplexVector& y : result.solution.states) {
    ComplexSequence s;
    s.offset = -result.solution.K;
    s.values = y;
    mesh.states.push_back(std::move(s));
  }
  write_trajectory_csv(a.out_path, mesh);
  note_output(g, a.out_path);

  nlohmann::ordered_json report;
  report["iterations"] = result.iterations;
  report["ratios"] = result.ratios;
  report["residual"] = result.residual;
  report["tail_bound"] = result.tail_bound;
  const std::string report_path = sibling_path(a.out_path, ".report.json");
  write_text(report_path, report.dump(2) + "\n");
  note_output(g, report_path);
}

struct NormsArgs {
  std::string traj_path;
  double s = 0.0;
  double p = 2.0;
  int nu_max = 0;
  std::string out_path;
};

void run_norms(const NormsArgs& a, const GlobalFlags& g,
               RunManifest& manifest) {
  const Trajectory traj = read_trajectory_csv(a.traj_path);
  manifest.inputs.emplace_back(a.traj_path, digest_file(a.traj_path));
  const double needed = pi * static_cast<double>(a.nu_max + 2);
  if (traj.times.back() < needed - 1e-9) {
    throw std::runtime_error(
        "norms: trajectory ends at t = " + format_number(traj.times.back()) +
        " but window " + std::to_string(a.nu_max) + " extends to t = " +
        format_number(needed));
  }
  const ModeFunction modes = trajectory_evaluator(traj);
  const int k_min = traj.states.front().k_min();
  const int k_max = traj.states.front().k_max();

  constexpr int q = 8;
  constexpr std::size_t count = (std::size_t{1} << (q - 1)) + 1;
  const double dt = 4.0 * pi / static_cast<double>(std::size_t{1} << q);

  std::string csv = "nu,k,norm\n";
  for (int nu = 0; nu <= a.nu_max; ++nu) {
    const double t_start = window_start(nu);
    for (int k = k_min; k <= k_max; ++k) {
      std::vector<Complex> samples(count);
      for (std::size_t j = 0; j < count; ++j) {
        samples[j] = modes(k, t_start + dt * static_cast<double>(j));
      }
      const double norm_value = hsp_norm_estimate(samples, a.s, a.p, nu);
      csv += std::to_string(nu);
      csv += ',';
      csv += std::to_string(k);
      csv += ',';
      csv += format_number(norm_value);
      csv += '\n';
    }
  }
  write_text(a.out_path, csv);
  note_output(g, a.out_path);

  nlohmann::ordered_json summary;
  summary["xsp"] = xsp_norm(modes, k_min, k_max, a.s, a.p, a.nu_max, q);
  nlohmann::ordered_json slopes = nlohmann::ordered_json::object();
  for (int k = k_min; k <= k_max; ++k) {
    slopes[std::to_string(k)] =
        decay_profile(modes, k, k, a.s, a.p, 0, a.nu_max, q).slope;
  }
  summary["slopes"] = std::move(slopes);
  const std::string summary_path = sibling_path(a.out_path, ".summary.json");
  write_text(summary_path, summary.dump(2) + "\n");
  note_output(g, summary_path);
}

struct FieldArgs {
  std::string traj_path;
  int xgrid = 256;
  std::string out_path;
  std::string residual_path;
};

void run_field(const FieldArgs& a, const GlobalFlags& g,
               RunManifest& manifest) {
  const Trajectory traj = read_trajectory_csv(a.traj_path);
  manifest.inputs.emplace_back(a.traj_path, digest_file(a.traj_path));
  if (a.xgrid < 1 || !std::has_single_bit(static_cast<unsigned>(a.xgrid))) {
    throw std::runtime_error("field: --xgrid must be a power of two");
  }
  const FieldGrid grid{std::countr_zero(static_cast<unsigned>(a.xgrid))};

  std::string csv = "t,x,re,im\n";
  for (std::size_t i = 0; i < traj.times.size(); ++i) {
    const ComplexVector v = synthesize_v(traj.states[i], grid);
    const std::string t_str = format_number(traj.times[i]);
    for (std::size_t p = 0; p < grid.count(); ++p) {
      const Eigen::Index e = static_cast<Eigen::Index>(p);
      csv += t_str;
      csv += ',';
      csv += format_number(grid.x(p));
      csv += ',';
      csv += format_number(v[e].real());
      csv += ',';
      csv += format_number(v[e].imag());
      csv += '\n';
    }
  }
  write_text(a.out_path, csv);
  note_output(g, a.out_path);

  if (!a.residual_path.empty()) {
    const ResidualReport report = vnls_residual(traj, grid);
    std::string res_csv = "t,res_l2\n";
    for (std::size_t i = 0; i < report.times.size(); ++i) {
      res_csv += format_number(report.times[i]);
      res_csv += ',';
      res_csv += format_number(report.values[i]);
      res_csv += '\n';
    }
    write_text(a.residual_path, res_csv);
    note_output(g, a.residual_path);
  }
}

struct DivisorStatsArgs {
  std::int64_t max_m = 0;
  std::string out_path;
};

void run_divisor_stats(const DivisorStatsArgs& a, const GlobalFlags& g) {
  const DivisorStats stats = divisor_stats(a.max_m);
  nlohmann::ordered_json j;
  j["M_max"] = stats.M_max;
  j["max"] = stats.max;
  j["argmax"] = stats.argmax;
  j["mean"] = stats.mean;
  write_text(a.out_path, j.dump(2) + "\n");
  note_output(g, a.out_path);
}

} // namespace

int run(const std::vector<std::string>& args) {
  const auto t_begin = std::chrono::steady_clock::now();

  CLI::App app{
      "Mode-amplitude dynamics, explicit constant-data solutions, and "
      "fixed-point solvers for the cubic Schrodinger flow of Dirac-comb "
      "initial data"};
  app.require_subcommand(1);

  GlobalFlags g;
  app.add_option("--threads", g.threads,
                 "worker threads (0 keeps the default)");
  app.add_option("--manifest", g.manifest_path,
                 "manifest path (default: next to --out)");
  app.add_flag("--quiet", g.quiet, "suppress progress output");

  ResonanceTableArgs table_args;
  CLI::App* table_cmd = app.add_subcommand(
      "resonance-table", "Enumerate the nonresonant interaction table");
  table_cmd->add_option("--K", table_args.K, "mode window half-width")
      ->required();
  table_cmd->add_option("--alpha", table_args.alpha_path, "sequence JSON")
      ->required();
  table_cmd->add_option("--out", table_args.out_path, "output JSON")
      ->required();

  SimulateArgs sim_args;
  CLI::App* sim_cmd =
      app.add_subcommand("simulate", "Integrate a truncated mode system");
  sim_cmd->add_option("--alpha", sim_args.alpha_path,
                      "sequence JSON; the state at --t0 (--t1 for system B)")
      ->required();
  sim_cmd->add_option("--K", sim_args.K, "mode window half-width")->required();
  sim_cmd->add_option("--system", sim_args.system, "which unknown to evolve")
      ->required()
      ->check(CLI::IsMember({"A", "Atilde", "B"}));
  sim_cmd->add_option("--t0", sim_args.t0, "span start")->required();
  sim_cmd->add_option("--t1", sim_args.t1, "span end")->required();
  sim_cmd->add_option("--rtol", sim_args.rtol, "relative tolerance");
  sim_cmd->add_option("--atol", sim_args.atol, "absolute tolerance");
  sim_cmd->add_option("--samples", sim_args.samples,
                      "uniform sample count (0: accepted steps)");
  sim_cmd->add_option("--out", sim_args.out_path, "trajectory CSV")
      ->required();
  sim_cmd->add_option("--diagnostics", sim_args.diagnostics_path,
                      "mass/energy CSV");

  ExplicitArgs exp_args;
  CLI::App* exp_cmd = app.add_subcommand(
      "explicit", "Evaluate the constant-data closed-form solution");
  exp_cmd->add_option("--alpha-re", exp_args.alpha_re, "Re of the amplitude")
      ->required();
  exp_cmd->add_option("--alpha-im", exp_args.alpha_im, "Im of the amplitude")
      ->required();
  CLI::Option* t_opt = exp_cmd->add_option("--t", exp_args.t, "single time");
  exp_cmd->add_option("--mmax", exp_args.mmax, "frequency truncation");
  exp_cmd->add_option("--sweep", exp_args.sweep, "t0:t1:n uniform times");
  exp_cmd->add_option("--out", exp_args.out_path, "output CSV")->required();

  FixedPointArgs fp_args;
  CLI::App* fp_cmd = app.add_subcommand(
      "fixed-point", "Solve the switched-on integral equation by iteration");
  fp_cmd->add_option("--alpha", fp_args.alpha_path, "sequence JSON")
      ->required();
  fp_cmd->add_option("--K", fp_args.K, "mode window half-width")->required();
  fp_cmd->add_option("--N", fp_args.N, "switch-on window index");
  fp_cmd->add_option("--s", fp_args.s, "regularity exponent");
  fp_cmd->add_option("--p", fp_args.p, "summability exponent");
  fp_cmd->add_option("--tol", fp_args.tol, "sweep-gap tolerance");
  fp_cmd->add_option("--tmax", fp_args.tmax, "mesh horizon")->required();
  fp_cmd->add_option("--out", fp_args.out_path, "solution mesh CSV")
      ->required();

  NormsArgs norms_args;
  CLI::App* norms_cmd = app.add_subcommand(
      "norms", "Windowed norms and decay slopes of a trajectory");
  norms_cmd->add_option("--traj", norms_args.traj_path, "trajectory CSV")
      ->required();
  norms_cmd->add_option("--s", norms_args.s, "regularity exponent")
      ->required();
  norms_cmd->add_option("--p", norms_args.p, "summability exponent")
      ->required();
  norms_cmd->add_option("--nu-max", norms_args.nu_max, "last window index")
      ->required();
  norms_cmd->add_option("--out", norms_args.out_path, "per-window CSV")
      ->required();

  FieldArgs field_args;
  CLI::App* field_cmd = app.add_subcommand(
      "field", "Synthesize the space-time field from a trajectory");
  field_cmd->add_option("--traj", field_args.traj_path, "trajectory CSV")
      ->required();
  field_cmd->add_option("--xgrid", field_args.xgrid,
                        "spatial points (power of two)");
  field_cmd->add_option("--out", field_args.out_path, "field CSV")
      ->required();
  field_cmd->add_option("--residual", field_args.residual_path,
                        "equation-residual CSV");

  DivisorStatsArgs div_args;
  CLI::App* div_cmd = app.add_subcommand(
      "divisor-stats", "Empirical growth of the interaction multiplicities");
  div_cmd->add_option("--max-m", div_args.max_m, "largest frequency")
      ->required();
  div_cmd->add_option("--out", div_args.out_path, "output JSON")->required();

  for (CLI::App* sub : app.get_subcommands({})) {
    sub->fallthrough();
  }

  if (args.empty()) {
    std::cerr << app.help();
    return 1;
  }
  std::vector<const char*> argv;
  argv.push_back("combnls");
  for (const std::string& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code;
  }

  try {
    if (g.threads > 0) set_thread_count(g.threads);
    exp_args.have_t = (t_opt->count() > 0);

    RunManifest manifest;
    manifest.tool_version = k_tool_version;
    std::string out_path;
    CLI::App* active = nullptr;

    if (table_cmd->parsed()) {
      active = table_cmd;
      out_path = table_args.out_path;
      run_resonance_table(table_args, g, manifest);
    } else if (sim_cmd->parsed()) {
      active = sim_cmd;
      out_path = sim_args.out_path;
      run_simulate(sim_args, g, manifest);
    } else if (exp_cmd->parsed()) {
      active = exp_cmd;
      out_path = exp_args.out_path;
      run_explicit(exp_args, g);
    } else if (fp_cmd->parsed()) {
      active = fp_cmd;
      out_path = fp_args.out_path;
      run_fixed_point(fp_args, g, manifest);
    } else if (norms_cmd->parsed()) {
      active = norms_cmd;
      out_path = norms_args.out_path;
      run_norms(norms_args, g, manifest);
    } else if (field_cmd->parsed()) {
      active = field_cmd;
      out_path = field_args.out_path;
      run_field(field_args, g, manifest);
    } else if (div_cmd->parsed()) {
      active = div_cmd;
      out_path = div_args.out_path;
      run_divisor_stats(div_args, g);
    } else {
      std::cerr << app.help();
      return 1;
    }

    manifest.subcommand = active->get_name();
    collect_flags(app, manifest);
    collect_flags(*active, manifest);
    manifest.wall_time_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() -
                                      t_begin)
            .count();
    const std::string manifest_path =
        g.manifest_path.empty() ? sibling_path(out_path, ".manifest.json")
                                : g.manifest_path;
    write_manifest(manifest_path, manifest);
    note_output(g, manifest_path);
    return 0;
  } catch (const std::exception& e) {
    std::cerr << "combnls: error: " << e.what() << "\n";
    return 1;
  }
}

} // namespace combnls
