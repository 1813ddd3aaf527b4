#include "tumoropt/io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <set>
#include <sstream>

namespace tumoropt {

namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

std::vector<std::string_view> split_ws(std::string_view s) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < s.size()) {
    while (i < s.size() && (s[i] == ' ' || s[i] == '\t')) ++i;
    std::size_t j = i;
    while (j < s.size() && s[j] != ' ' && s[j] != '\t') ++j;
    if (j > i) out.push_back(s.substr(i, j - i));
    i = j;
  }
  return out;
}

bool try_parse_double(std::string_view text, double& out) {
  text = trim(text);
  if (!text.empty() && text.front() == '+') text.remove_prefix(1);
  const char* end = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(text.data(), end, out);
  return ec == std::errc() && ptr == end && std::isfinite(out);
}

template <typename Int>
Int parse_integer(std::string_view text) {
  text = trim(text);
  Int v{};
  const char* end = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(text.data(), end, v);
  if (ec != std::errc() || ptr != end || text.empty())
    throw std::invalid_argument("expected an integer, found '" + std::string(text) + "'");
  return v;
}

const std::map<std::string, std::set<std::string>>& preset_args() {
  static const std::map<std::string, std::set<std::string>> table = {
      {"constant", {"value"}},
      {"tanh_ball", {"cx", "cy", "radius", "eps"}},
      {"filtered_noise", {"seed", "amplitude", "mean", "kappa", "passes"}},
  };
  return table;
}

struct KeyDef {
  std::string name;
  std::function<void(RunConfig&, std::string_view)> set;
  std::function<std::string(const RunConfig&)> get;
};

KeyDef real_key(std::string name, double RunConfig::*member) {
  return {std::move(name), [member](RunConfig& c, std::string_view v) { c.*member = parse_double(v); },
          [member](const RunConfig& c) { return format_double(c.*member); }};
}

KeyDef int_key(std::string name, int RunConfig::*member) {
  return {std::move(name), [member](RunConfig& c, std::string_view v) { c.*member = parse_integer<int>(v); },
          [member](const RunConfig& c) { return std::to_string(c.*member); }};
}

KeyDef text_key(std::string name, std::string RunConfig::*member) {
  return {std::move(name), [member](RunConfig& c, std::string_view v) { c.*member = std::string(trim(v)); },
          [member](const RunConfig& c) { return c.*member; }};
}

KeyDef field_key(std::string name, FieldSource RunConfig::*member) {
  return {std::move(name), [member](RunConfig& c, std::string_view v) { c.*member = FieldSource::parse(v); },
          [member](const RunConfig& c) { return (c.*member).to_string(); }};
}

const std::vector<KeyDef>& key_table() {
  static const std::vector<KeyDef> table = [] {
    std::vector<KeyDef> t;
    t.push_back(int_key("grid.dim", &RunConfig::dim));
    t.push_back(int_key("grid.nx", &RunConfig::nx));
    t.push_back(int_key("grid.ny", &RunConfig::ny));
    t.push_back(real_key("grid.lx", &RunConfig::lx));
    t.push_back(real_key("grid.ly", &RunConfig::ly));
    t.push_back(real_key("time.t_final", &RunConfig::t_final));
    t.push_back(real_key("time.tau", &RunConfig::tau));
    t.push_back(text_key("model.potential", &RunConfig::potential));
    t.push_back(real_key("model.well_scale", &RunConfig::well_scale));
    t.push_back(text_key("model.proliferation", &RunConfig::proliferation));
    t.push_back(real_key("model.p0", &RunConfig::p0));
    t.push_back(real_key("model.k", &RunConfig::k));
    t.push_back(real_key("model.p_floor", &RunConfig::p_floor));
    t.push_back({"model.stabilization",
                 [](RunConfig& c, std::string_view v) {
                   if (trim(v) == "auto")
                     c.stabilization.reset();
                   else
                     c.stabilization = parse_double(v);
                 },
                 [](const RunConfig& c) {
                   return c.stabilization ? format_double(*c.stabilization) : std::string("auto");
                 }});
    t.push_back(real_key("model.beta_q", &RunConfig::beta_q));
    t.push_back(real_key("model.beta_omega", &RunConfig::beta_omega));
    t.push_back(real_key("model.beta_u", &RunConfig::beta_u));
    t.push_back(field_key("model.u_min", &RunConfig::u_min));
    t.push_back(field_key("model.u_max", &RunConfig::u_max));
    t.push_back(field_key("init.phi0", &RunConfig::phi0));
    t.push_back(field_key("init.sigma0", &RunConfig::sigma0));
    t.push_back(field_key("target.phi_q", &RunConfig::phi_q));
    t.push_back(field_key("target.phi_omega", &RunConfig::phi_omega));
    t.push_back(real_key("solver.cg_tol", &RunConfig::cg_tol));
    t.push_back(int_key("solver.cg_maxit", &RunConfig::cg_maxit));
    t.push_back(real_key("solver.overflow_guard", &RunConfig::overflow_guard));
    t.push_back(int_key("opt.max_iters", &RunConfig::max_iters));
    t.push_back(real_key("opt.tol", &RunConfig::opt_tol));
    t.push_back(real_key("opt.armijo_c", &RunConfig::armijo_c));
    t.push_back(real_key("opt.alpha0", &RunConfig::alpha0));
    t.push_back(real_key("opt.alpha_shrink", &RunConfig::alpha_shrink));
    t.push_back(field_key("opt.u0", &RunConfig::u0));
    t.push_back({"check.seed", [](RunConfig& c, std::string_view v) { c.seed = parse_integer<std::uint64_t>(v); },
                 [](const RunConfig& c) { return std::to_string(c.seed); }});
    t.push_back(real_key("check.direction_amplitude", &RunConfig::direction_amplitude));
    t.push_back(text_key("io.outdir", &RunConfig::outdir));
    t.push_back(int_key("io.snapshot_every", &RunConfig::snapshot_every));
    t.push_back(text_key("io.log_format", &RunConfig::log_format));
    return t;
  }();
  return table;
}

const KeyDef* find_key(std::string_view name) {
  for (const auto& k : key_table())
    if (k.name == name) return &k;
  return nullptr;
}

void assign(RunConfig& cfg, std::string_view key, std::string_view value, int line) {
  const KeyDef* def = find_key(key);
  if (!def) throw ConfigError("unknown key '" + std::string(key) + "'", line, std::string(key));
  try {
    def->set(cfg, value);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string(key) + ": " + e.what(), line, std::string(key));
  }
}

void validate_source(const FieldSource& src, const std::string& key, int line) {
  if (src.kind == "file") {
    if (src.path.empty()) throw ConfigError(key + ": file source needs a path", line, key);
    return;
  }
  auto it = preset_args().find(src.kind);
  if (it == preset_args().end()) throw ConfigError(key + ": unknown preset '" + src.kind + "'", line, key);
  for (const auto& [name, value] : src.args) {
    if (!it->second.count(name))
      throw ConfigError(key + ": preset '" + src.kind + "' has no argument '" + name + "'", line, key);
  }
  if (src.kind == "tanh_ball" && src.args.count("eps") && !(src.args.at("eps") > 0.0))
    throw ConfigError(key + ": tanh_ball needs eps > 0", line, key);
}

void validate(const RunConfig& c, const std::map<std::string, int>& lines) {
  auto fail = [&](const std::string& key, const std::string& msg) {
    auto it = lines.find(key);
    throw ConfigError(key + ": " + msg, it == lines.end() ? 0 : it->second, key);
  };
  if (c.dim != 1 && c.dim != 2) fail("grid.dim", "must be 1 or 2");
  if (c.nx < 4) fail("grid.nx", "needs at least 4 cells");
  if (c.dim == 2 && c.ny < 4) fail("grid.ny", "needs at least 4 cells");
  if (c.dim == 1 && c.ny != 1) fail("grid.ny", "must be 1 for a 1D grid");
  if (!(c.lx > 0.0)) fail("grid.lx", "must be positive");
  if (!(c.ly > 0.0)) fail("grid.ly", "must be positive");
  if (!(c.t_final > 0.0)) fail("time.t_final", "must be positive");
  if (!(c.tau > 0.0)) fail("time.tau", "must be positive");
  if (c.n_steps() < 1) fail("time.tau", "leaves no time steps before t_final");
  if (c.potential != "quartic_double_well") fail("model.potential", "only quartic_double_well is supported");
  if (!(c.well_scale > 0.0)) fail("model.well_scale", "must be positive");
  if (c.proliferation != "quadratic" && c.proliferation != "sigmoid")
    fail("model.proliferation", "must be quadratic or sigmoid");
  if (!(c.p0 > 0.0)) fail("model.p0", "must be positive");
  if (!(c.k > 0.0)) fail("model.k", "must be positive");
  if (c.p_floor < 0.0) fail("model.p_floor", "must be nonnegative (P must stay nonnegative, hypothesis H4)");
  if (c.stabilization && *c.stabilization < 0.0) fail("model.stabilization", "must be nonnegative");
  for (const auto& [key, v] : {std::pair<std::string, double>{"model.beta_q", c.beta_q},
                               {"model.beta_omega", c.beta_omega},
                               {"model.beta_u", c.beta_u}}) {
    if (v < 0.0) fail(key, "cost weights must be nonnegative (hypothesis H1)");
  }
  if (c.beta_q == 0.0 && c.beta_omega == 0.0 && c.beta_u == 0.0)
    fail("model.beta_u", "cost weights must not all vanish (hypothesis H1)");
  validate_source(c.u_min, "model.u_min", lines.count("model.u_min") ? lines.at("model.u_min") : 0);
  validate_source(c.u_max, "model.u_max", lines.count("model.u_max") ? lines.at("model.u_max") : 0);
  if (c.u_min.kind == "constant" && c.u_max.kind == "constant") {
    const double lo = c.u_min.args.count("value") ? c.u_min.args.at("value") : 0.0;
    const double hi = c.u_max.args.count("value") ? c.u_max.args.at("value") : 0.0;
    if (lo > hi) fail("model.u_min", "u_min must not exceed u_max (hypothesis H2)");
  }
  for (const auto& [key, src] : {std::pair<std::string, const FieldSource*>{"init.phi0", &c.phi0},
                                 {"init.sigma0", &c.sigma0},
                                 {"target.phi_q", &c.phi_q},
                                 {"target.phi_omega", &c.phi_omega},
                                 {"opt.u0", &c.u0}}) {
    validate_source(*src, key, lines.count(key) ? lines.at(key) : 0);
  }
  if (!(c.cg_tol > 0.0)) fail("solver.cg_tol", "must be positive");
  if (c.cg_maxit < 1) fail("solver.cg_maxit", "must be at least 1");
  if (!(c.overflow_guard > 0.0)) fail("solver.overflow_guard", "must be positive");
  if (c.max_iters < 0) fail("opt.max_iters", "must be nonnegative");
  if (!(c.opt_tol > 0.0)) fail("opt.tol", "must be positive");
  if (!(c.armijo_c > 0.0 && c.armijo_c < 1.0)) fail("opt.armijo_c", "must lie in (0,1)");
  if (!(c.alpha0 > 0.0)) fail("opt.alpha0", "must be positive");
  if (!(c.alpha_shrink > 0.0 && c.alpha_shrink < 1.0)) fail("opt.alpha_shrink", "must lie in (0,1)");
  if (!(c.direction_amplitude > 0.0)) fail("check.direction_amplitude", "must be positive");
  if (c.outdir.empty()) fail("io.outdir", "must not be empty");
  if (c.snapshot_every < 0) fail("io.snapshot_every", "must be nonnegative");
  if (c.log_format != "kv" && c.log_format != "csv") fail("io.log_format", "must be kv or csv");
}

}  // namespace

std::string format_double(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

double parse_double(std::string_view text) {
  double v = 0.0;
  if (!try_parse_double(text, v))
    throw std::invalid_argument("expected a finite number, found '" + std::string(trim(text)) + "'");
  return v;
}

FieldSource FieldSource::parse(std::string_view text) {
  text = trim(text);
  FieldSource src;
  double number = 0.0;
  if (try_parse_double(text, number)) {
    src.kind = "constant";
    src.args["value"] = number;
    return src;
  }
  const auto tokens = split_ws(text);
  if (tokens.empty()) throw std::invalid_argument("empty field source");
  src.kind = std::string(tokens[0]);
  if (src.kind == "file") {
    if (tokens.size() < 2) throw std::invalid_argument("file source needs a path");
    src.path = std::string(trim(text.substr(text.find("file") + 4)));
    return src;
  }
  for (std::size_t i = 1; i < tokens.size(); ++i) {
    const auto eq = tokens[i].find('=');
    if (eq == std::string_view::npos)
      throw std::invalid_argument("preset argument '" + std::string(tokens[i]) + "' is not name=value");
    const std::string name(tokens[i].substr(0, eq));
    if (src.args.count(name)) throw std::invalid_argument("duplicate preset argument '" + name + "'");
    src.args[name] = parse_double(tokens[i].substr(eq + 1));
  }
  return src;
}

std::string FieldSource::to_string() const {
  if (kind == "file") return "file " + path;
  std::string out = kind;
  for (const auto& [name, value] : args) out += " " + name + "=" + format_double(value);
  return out;
}

int RunConfig::n_steps() const { return static_cast<int>(std::lround(t_final / tau)); }

RunConfig parse_config(std::string_view text) {
  RunConfig cfg;
  std::map<std::string, int> lines;
  int line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const auto nl = text.find('\n', pos);
    std::string_view line = text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
    pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) throw ConfigError("expected 'section.key = value'", line_no, "");
    const std::string key(trim(line.substr(0, eq)));
    if (lines.count(key)) throw ConfigError("duplicate key '" + key + "'", line_no, key);
    assign(cfg, key, line.substr(eq + 1), line_no);
    lines[key] = line_no;
  }
  validate(cfg, lines);
  return cfg;
}

void apply_override(RunConfig& cfg, std::string_view assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string_view::npos)
    throw ConfigError("override must be section.key=value", 0, std::string(assignment));
  const std::string key(trim(assignment.substr(0, eq)));
  assign(cfg, key, assignment.substr(eq + 1), 0);
  validate(cfg, {});
}

std::string serialize_config(const RunConfig& cfg) {
  std::string out;
  std::string section;
  for (const auto& k : key_table()) {
    const std::string sec = k.name.substr(0, k.name.find('.'));
    if (sec != section) {
      if (!section.empty()) out += "\n";
      out += "# " + sec + "\n";
      section = sec;
    }
    out += k.name + " = " + k.get(cfg) + "\n";
  }
  return out;
}

void override_seeds(RunConfig& cfg, std::uint64_t seed) {
  cfg.seed = seed;
  for (FieldSource* src : {&cfg.u_min, &cfg.u_max, &cfg.phi0, &cfg.sigma0, &cfg.phi_q, &cfg.phi_omega, &cfg.u0})
    if (src->kind == "filtered_noise") src->args["seed"] = static_cast<double>(seed);
}

std::vector<std::string> config_keys() {
  std::vector<std::string> out;
  for (const auto& k : key_table()) out.push_back(k.name);
  return out;
}

Field materialize(const FieldSource& src, const Grid& grid, const std::filesystem::path& base_dir) {
  if (src.kind == "file") {
    std::filesystem::path p(src.path);
    if (p.is_relative()) p = base_dir / p;
    return read_snapshot(p, grid);
  }
  return preset_field(src.kind, grid, src.args);
}

RunSetup build_run(const RunConfig& cfg, const std::filesystem::path& base_dir) {
  const Grid grid = cfg.dim == 1 ? Grid::line(cfg.nx, cfg.lx) : Grid::rect(cfg.nx, cfg.ny, cfg.lx, cfg.ly);
  ModelParams p = ModelParams::on_grid(grid);
  p.potential.well_scale = cfg.well_scale;
  p.proliferation.kind = cfg.proliferation == "sigmoid" ? ProliferationKind::sigmoid : ProliferationKind::quadratic;
  p.proliferation.p0 = cfg.p0;
  p.proliferation.steepness = cfg.k;
  p.proliferation.p_floor = cfg.p_floor;
  p.stabilization = cfg.stabilization ? *cfg.stabilization : default_stabilization(p.potential);
  p.beta_q = cfg.beta_q;
  p.beta_omega = cfg.beta_omega;
  p.beta_u = cfg.beta_u;
  p.t_final = cfg.t_final;
  p.tau = cfg.tau;
  p.u_min = materialize(cfg.u_min, grid, base_dir);
  p.u_max = materialize(cfg.u_max, grid, base_dir);
  for (std::size_t k = 0; k < p.u_min.size(); ++k)
    if (p.u_min[k] > p.u_max[k])
      throw ConfigError("model.u_min: u_min exceeds u_max in cell " + std::to_string(k) + " (hypothesis H2)", 0,
                        "model.u_min");
  p.phi_q = {materialize(cfg.phi_q, grid, base_dir)};
  p.phi_omega = materialize(cfg.phi_omega, grid, base_dir);
  p.solver = {cfg.cg_tol, cfg.cg_maxit, cfg.overflow_guard};

  Field phi0 = materialize(cfg.phi0, grid, base_dir);
  Field sigma0 = materialize(cfg.sigma0, grid, base_dir);
  const Field u0_field = materialize(cfg.u0, grid, base_dir);
  ControlSchedule u0 =
      ControlSchedule::from_fields(p, std::vector<Field>(static_cast<std::size_t>(p.n_steps()), u0_field));
  OptimOptions opt{cfg.max_iters, cfg.opt_tol, cfg.armijo_c, cfg.alpha0, cfg.alpha_shrink, 60};
  return {ControlProblem{std::move(p), std::move(phi0), std::move(sigma0)}, std::move(u0), opt};
}

std::string format_snapshot(const Field& field, const SnapshotMeta& meta) {
  const Grid& g = field.grid();
  std::string out = "# t=" + format_double(meta.t) + " dim=" + std::to_string(g.dim()) +
                    " nx=" + std::to_string(g.nx()) + " ny=" + std::to_string(g.ny()) +
                    " hx=" + format_double(g.hx()) + " hy=" + format_double(g.hy()) + "\n";
  for (int j = 0; j < g.ny(); ++j) {
    for (int i = 0; i < g.nx(); ++i) {
      if (i) out += ",";
      out += format_double(field.at(i, j));
    }
    out += "\n";
  }
  return out;
}

void write_snapshot(const Field& field, const SnapshotMeta& meta, const std::filesystem::path& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw SnapshotError("cannot open " + path.string() + " for writing");
  os << format_snapshot(field, meta);
  if (!os) throw SnapshotError("failed writing " + path.string());
}

Field parse_snapshot(std::string_view text, const Grid& grid, SnapshotMeta* meta) {
  std::size_t pos = 0;
  auto next_line = [&]() -> std::optional<std::string_view> {
    while (pos < text.size()) {
      const auto nl = text.find('\n', pos);
      std::string_view line = text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
      pos = nl == std::string_view::npos ? text.size() : nl + 1;
      line = trim(line);
      if (!line.empty()) return line;
    }
    return std::nullopt;
  };

  const auto header = next_line();
  if (!header || header->substr(0, 1) != "#") throw SnapshotError("snapshot is missing its '#' header line");
  std::map<std::string, std::string> fields;
  for (auto tok : split_ws(header->substr(1))) {
    const auto eq = tok.find('=');
    if (eq == std::string_view::npos) throw SnapshotError("malformed header token '" + std::string(tok) + "'");
    fields[std::string(tok.substr(0, eq))] = std::string(tok.substr(eq + 1));
  }
  for (const char* key : {"t", "dim", "nx", "ny", "hx", "hy"})
    if (!fields.count(key)) throw SnapshotError(std::string("snapshot header lacks '") + key + "'");

  auto expect = [&](const char* key, const std::string& expected) {
    const std::string& found = fields.at(key);
    double a = 0.0, b = 0.0;
    const bool same = try_parse_double(found, a) && try_parse_double(expected, b) && a == b;
    if (!same)
      throw SnapshotError(std::string("snapshot header ") + key + " mismatch: expected " + expected + " found " + found);
  };
  expect("dim", std::to_string(grid.dim()));
  expect("nx", std::to_string(grid.nx()));
  expect("ny", std::to_string(grid.ny()));
  expect("hx", format_double(grid.hx()));
  expect("hy", format_double(grid.hy()));
  double t = 0.0;
  if (!try_parse_double(fields.at("t"), t)) throw SnapshotError("snapshot header has malformed t");
  if (meta) meta->t = t;

  std::vector<double> values(grid.size());
  for (int j = 0; j < grid.ny(); ++j) {
    const auto line = next_line();
    if (!line) throw SnapshotError("snapshot has " + std::to_string(j) + " rows, expected " + std::to_string(grid.ny()));
    int i = 0;
    std::size_t p = 0;
    while (p <= line->size()) {
      const auto comma = line->find(',', p);
      const auto cell = line->substr(p, comma == std::string_view::npos ? std::string_view::npos : comma - p);
      if (i >= grid.nx()) throw SnapshotError("row " + std::to_string(j) + " has too many values");
      double v = 0.0;
      if (!try_parse_double(cell, v))
        throw SnapshotError("malformed number '" + std::string(trim(cell)) + "' in row " + std::to_string(j));
      values[grid.index(i, j)] = v;
      ++i;
      if (comma == std::string_view::npos) break;
      p = comma + 1;
    }
    if (i != grid.nx())
      throw SnapshotError("row " + std::to_string(j) + " has " + std::to_string(i) + " values, expected " +
                          std::to_string(grid.nx()));
  }
  if (next_line()) throw SnapshotError("snapshot has trailing rows");
  return Field(grid, std::move(values));
}

Field read_snapshot(const std::filesystem::path& path, const Grid& grid, SnapshotMeta* meta) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw SnapshotError("cannot open snapshot " + path.string());
  std::ostringstream ss;
  ss << is.rdbuf();
  return parse_snapshot(ss.str(), grid, meta);
}

}  // namespace tumoropt
