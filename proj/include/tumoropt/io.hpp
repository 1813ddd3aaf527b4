#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "tumoropt/optimizer.hpp"

namespace tumoropt {

class ConfigError : public std::runtime_error {
 public:
  ConfigError(const std::string& message, int line, std::string key)
      : std::runtime_error(message), line_(line), key_(std::move(key)) {}
  /// 1-based line of the offending entry, 0 for command-line overrides.
  int line() const { return line_; }
  const std::string& key() const { return key_; }

 private:
  int line_;
  std::string key_;
};

class SnapshotError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Shortest decimal representation that reads back to the same double.
std::string format_double(double v);
double parse_double(std::string_view text);

/// Where a field comes from: a named preset with numeric arguments, or a
/// snapshot file. A bare number is shorthand for `constant value=<number>`.
struct FieldSource {
  std::string kind = "constant";  // constant | tanh_ball | filtered_noise | file
  std::map<std::string, double> args;
  std::string path;

  static FieldSource parse(std::string_view text);
  std::string to_string() const;
  friend bool operator==(const FieldSource&, const FieldSource&) = default;
};

struct RunConfig {
  // grid
  int dim = 1;
  int nx = 64;
  int ny = 1;
  double lx = 12.8;
  double ly = 1.0;
  // time
  double t_final = 0.1;
  double tau = 1e-3;
  // model
  std::string potential = "quartic_double_well";
  double well_scale = 1.0;
  std::string proliferation = "quadratic";
  double p0 = 0.5;
  double k = 1.0;
  double p_floor = 0.0;
  std::optional<double> stabilization;  // nullopt = auto
  double beta_q = 1.0;
  double beta_omega = 0.0;
  double beta_u = 0.0;
  FieldSource u_min = FieldSource::parse("-1");
  FieldSource u_max = FieldSource::parse("1");
  // init
  FieldSource phi0 = FieldSource::parse("tanh_ball radius=3 eps=1");
  FieldSource sigma0 = FieldSource::parse("0");
  // target
  FieldSource phi_q = FieldSource::parse("0");
  FieldSource phi_omega = FieldSource::parse("0");
  // solver
  double cg_tol = 1e-12;
  int cg_maxit = 2000;
  double overflow_guard = 1e6;
  // opt
  int max_iters = 200;
  double opt_tol = 1e-8;
  double armijo_c = 1e-4;
  double alpha0 = 1.0;
  double alpha_shrink = 0.5;
  FieldSource u0 = FieldSource::parse("0");
  // check
  std::uint64_t seed = 1;
  double direction_amplitude = 0.5;
  // io
  std::string outdir = "out";
  int snapshot_every = 0;
  std::string log_format = "kv";

  int n_steps() const;
  friend bool operator==(const RunConfig&, const RunConfig&) = default;
};

/// Parses `section.key = value` lines; `#` starts a comment. Unknown or
/// duplicate keys, malformed values and violated invariants raise ConfigError.
RunConfig parse_config(std::string_view text);
/// Applies one `section.key=value` override and re-validates.
void apply_override(RunConfig& cfg, std::string_view assignment);
/// Canonical text with every key; parse_config(serialize_config(c)) == c.
std::string serialize_config(const RunConfig& cfg);
/// Replaces every seed (noise presets and check.seed).
void override_seeds(RunConfig& cfg, std::uint64_t seed);
/// The list of recognised keys, in canonical order.
std::vector<std::string> config_keys();

struct RunSetup {
  ControlProblem problem;
  ControlSchedule u0;
  OptimOptions opt;
};

/// Materialises fields and parameters. Relative file paths resolve against base_dir.
RunSetup build_run(const RunConfig& cfg, const std::filesystem::path& base_dir);
Field materialize(const FieldSource& src, const Grid& grid, const std::filesystem::path& base_dir);

struct SnapshotMeta {
  double t = 0.0;
};

/// Header `# t=<t> dim=<d> nx=<nx> ny=<ny> hx=<hx> hy=<hy>`, then one row of
/// comma-separated values per y index.
void write_snapshot(const Field& field, const SnapshotMeta& meta, const std::filesystem::path& path);
std::string format_snapshot(const Field& field, const SnapshotMeta& meta);
/// Reads a snapshot and validates its header against `grid`.
Field read_snapshot(const std::filesystem::path& path, const Grid& grid, SnapshotMeta* meta = nullptr);
Field parse_snapshot(std::string_view text, const Grid& grid, SnapshotMeta* meta = nullptr);

}  // namespace tumoropt
