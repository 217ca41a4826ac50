#include "cisim/config.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <iomanip>
#include <map>
#include <sstream>

#include "cisim/error.hpp"

namespace cisim {

std::uint64_t fnv1a64(const void* data, std::size_t size, std::uint64_t seed) {
  const auto* p = static_cast<const unsigned char*>(data);
  std::uint64_t h = seed;
  for (std::size_t i = 0; i < size; ++i) {
    h ^= p[i];
    h *= 0x100000001b3ull;
  }
  return h;
}

std::string hex64(std::uint64_t v) {
  std::ostringstream os;
  os << std::hex << std::setw(16) << std::setfill('0') << v;
  return os.str();
}

GridSpec RunConfig::make_grid_for(const ModelParams& p) const {
  GridOptions go;
  go.energy_cap = grid.energy_cap;
  go.offset_sign = grid.offset_sign;
  go.ci_placement = grid.ci_placement;
  if (grid.x_min && grid.x_max && grid.y_min && grid.y_max) {
    return make_grid_extents(p, grid.nx, grid.ny, *grid.x_min, *grid.x_max, *grid.y_min, *grid.y_max, go);
  }
  return make_grid(p, grid.nx, grid.ny, grid.padding ? *grid.padding : default_padding(p, go), go);
}

GridFactory RunConfig::grid_factory() const {
  const RunConfig copy = *this;
  return [copy](const ModelParams& p) { return copy.make_grid_for(p); };
}

OperatorOptions RunConfig::operator_options() const {
  OperatorOptions o;
  o.order = grid.order;
  o.gp_scheme = grid.gp_scheme;
  return o;
}

EigenSolverOptions RunConfig::solver_options() const {
  EigenSolverOptions o;
  o.tol = solver.tol;
  o.seed = solver.seed;
  o.degeneracy_tol = solver.degeneracy_tol * model.omega1;
  o.max_iter = solver.max_iter;
  return o;
}

std::vector<double> RunConfig::delta_grid() const {
  std::vector<double> d;
  const long n = std::lround(std::floor((sweep.delta_max - sweep.delta_min) / sweep.delta_step + 1e-9));
  for (long i = 0; i <= n; ++i) d.push_back(sweep.delta_min + static_cast<double>(i) * sweep.delta_step);
  return d;
}

std::vector<double> RunConfig::time_grid() const {
  std::vector<double> t;
  for (int i = 0; i <= dynamics.samples; ++i) {
    t.push_back(dynamics.t_max / model.omega1 * static_cast<double>(i) / dynamics.samples);
  }
  return t;
}

namespace {

std::string fmt(double v) {
  std::ostringstream os;
  os << std::setprecision(17) << v;
  return os.str();
}

std::string kinds_str(const std::vector<HamiltonianKind>& kinds) {
  std::string s;
  for (std::size_t i = 0; i < kinds.size(); ++i) {
    if (i) s += ",";
    s += to_string(kinds[i]);
  }
  return s;
}

std::string list_str(const std::vector<double>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) s += ",";
    s += fmt(v[i]);
  }
  return s;
}

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

struct Where {
  std::string source;
  int line;
  std::string key;
};

[[noreturn]] void fail(const Where& w, const std::string& what) {
  std::ostringstream msg;
  msg << w.source << ":" << w.line << ": key '" << w.key << "': " << what;
  throw Error(ErrorCode::ConfigError, msg.str());
}

// Accepts plain numbers and simple ratios such as "2/3".
double to_double(const std::string& v, const Where& w) {
  auto parse = [&](std::string_view s) {
    double x = 0.0;
    const auto t = trim(s);
    const auto r = std::from_chars(t.data(), t.data() + t.size(), x);
    if (t.empty() || r.ec != std::errc() || r.ptr != t.data() + t.size()) fail(w, "not a number: '" + v + "'");
    return x;
  };
  const auto slash = v.find('/');
  double x = slash == std::string::npos ? parse(v) : parse(std::string_view(v).substr(0, slash)) /
                                                         parse(std::string_view(v).substr(slash + 1));
  if (!std::isfinite(x)) fail(w, "value must be finite");
  return x;
}

long long to_int(const std::string& v, const Where& w) {
  long long x = 0;
  const auto r = std::from_chars(v.data(), v.data() + v.size(), x);
  if (v.empty() || r.ec != std::errc() || r.ptr != v.data() + v.size()) fail(w, "not an integer: '" + v + "'");
  return x;
}

bool to_bool(const std::string& v, const Where& w) {
  std::string s = v;
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
  if (s == "true" || s == "1" || s == "yes" || s == "on") return true;
  if (s == "false" || s == "0" || s == "no" || s == "off") return false;
  fail(w, "not a boolean: '" + v + "'");
}

std::vector<std::string> split_list(const std::string& v) {
  std::vector<std::string> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

std::vector<double> to_doubles(const std::string& v, const Where& w) {
  std::vector<double> out;
  for (const auto& s : split_list(v)) out.push_back(to_double(s, w));
  return out;
}

std::vector<HamiltonianKind> to_kinds(const std::string& v, const Where& w) {
  std::vector<HamiltonianKind> out;
  for (const auto& s : split_list(v)) {
    try {
      out.push_back(parse_kind(s));
    } catch (const Error&) {
      fail(w, "unknown Hamiltonian kind '" + s + "'");
    }
  }
  if (out.empty()) fail(w, "empty kind list");
  return out;
}

// Model inputs are collected first; c and gamma are reconciled at the end.
struct Pending {
  std::optional<double> omega1, omega2, a, delta, c, gamma;
  Where c_where, gamma_where;
};

using Setter = std::function<void(RunConfig&, Pending&, const std::string&, const Where&)>;

const std::map<std::string, Setter>& setters() {
  static const std::map<std::string, Setter> table = {
      {"model.omega1", [](RunConfig&, Pending& p, const std::string& v, const Where& w) { p.omega1 = to_double(v, w); }},
      {"model.omega2", [](RunConfig&, Pending& p, const std::string& v, const Where& w) { p.omega2 = to_double(v, w); }},
      {"model.a", [](RunConfig&, Pending& p, const std::string& v, const Where& w) { p.a = to_double(v, w); }},
      {"model.delta", [](RunConfig&, Pending& p, const std::string& v, const Where& w) { p.delta = to_double(v, w); }},
      {"model.c",
       [](RunConfig&, Pending& p, const std::string& v, const Where& w) {
         p.c = to_double(v, w);
         p.c_where = w;
       }},
      {"model.gamma",
       [](RunConfig&, Pending& p, const std::string& v, const Where& w) {
         p.gamma = to_double(v, w);
         p.gamma_where = w;
       }},
      {"grid.nx", [](RunConfig& c, Pending&, const std::string& v, const Where& w) { c.grid.nx = static_cast<int>(to_int(v, w)); }},
      {"grid.ny", [](RunConfig& c, Pending&, const std::string& v, const Where& w) { c.grid.ny = static_cast<int>(to_int(v, w)); }},
      {"grid.n",
       [](RunConfig& c, Pending&, const std::string& v, const Where& w) {
         c.grid.nx = c.grid.ny = static_cast<int>(to_int(v, w));
       }},
      {"grid.padding", [](RunConfig& c, Pending&, const std::string& v, const Where& w) { c.grid.padding = to_double(v, w); }},
      {"grid.energy_cap", [](RunConfig& c, Pending&, const std::string& v, const Where& w) { c.grid.energy_cap = to_double(v, w); }},
      {"grid.offset_sign",
       [](RunConfig& c, Pending&, const std::string& v, const Where& w) { c.grid.offset_sign = static_cast<int>(to_int(v, w)); }},
      {"grid.x_min", [](RunConfig& c, Pending&, const std::string& v, const Where& w) { c.grid.x_min = to_double(v, w); }},
      {"grid.x_max", [](RunConfig& c, Pending&, const std::string& v, const Where& w) { c.grid.x_max = to_double(v, w); }},
      {"grid.y_min", [](RunConfig& c, Pending&, const std::string& v, const Where& w) { c.grid.y_min = to_double(v, w); }},
      {"grid.y_max", [](RunConfig& c, Pending&, const std::string& v, const Where& w) { c.grid.y_max = to_double(v, w); }},
      {"grid.order", [](RunConfig& c, Pending&, const std::string& v, const Where& w) { c.grid.order = static_cast<int>(to_int(v, w)); }},
      {"grid.gp_scheme",
       [](RunConfig& c, Pending&, const std::string& v, const Where& w) {
         std::string s = v;
         std::transform(s.begin(), s.end(), s.begin(), [](unsigned char ch) { return std::tolower(ch); });
         if (s == "peierls") {
           c.grid.gp_scheme = GpScheme::Peierls;
         } else if (s == "symmetrized") {
           c.grid.gp_scheme = GpScheme::Symmetrized;
         } else {
           fail(w, "expected 'peierls' or 'symmetrized'");
         }
       }},
      {"grid.ci_placement",
       [](RunConfig& c, Pending&, const std::string& v, const Where& w) {
         std::string s = v;
         std::transform(s.begin(), s.end(), s.begin(), [](unsigned char ch) { return std::tolower(ch); });
         if (s == "cell_centre") {
           c.grid.ci_placement = CiPlacement::CellCentre;
         } else if (s == "avoid_node") {
           c.grid.ci_placement = CiPlacement::AvoidNode;
         } else {
           fail(w, "expected 'cell_centre' or 'avoid_node'");
         }
       }},
      {"solver.count", [](RunConfig& c, Pending&, const std::string& v, const Where& w) { c.solver.count = static_cast<int>(to_int(v, w)); }},
      {"solver.tol", [](RunConfig& c, Pending&, const std::string& v, const Where& w) { c.solver.tol = to_double(v, w); }},
      {"solver.seed",
       [](RunConfig& c, Pending&, const std::string& v, const Where& w) {
         const auto s = to_int(v, w);
         if (s < 0) fail(w, "seed must be non-negative");
         c.solver.seed = static_cast<std::uint64_t>(s);
       }},
      {"solver.degeneracy_tol",
       [](RunConfig& c, Pending&, const std::string& v, const Where& w) { c.solver.degeneracy_tol = to_double(v, w); }},
      {"solver.max_iter",
       [](RunConfig& c, Pending&, const std::string& v, const Where& w) { c.solver.max_iter = static_cast<int>(to_int(v, w)); }},
      {"solver.kinds", [](RunConfig& c, Pending&, const std::string& v, const Where& w) { c.solver.kinds = to_kinds(v, w); }},
      {"dynamics.temperatures",
       [](RunConfig& c, Pending&, const std::string& v, const Where& w) { c.dynamics.temperatures = to_doubles(v, w); }},
      {"dynamics.t_max", [](RunConfig& c, Pending&, const std::string& v, const Where& w) { c.dynamics.t_max = to_double(v, w); }},
      {"dynamics.samples",
       [](RunConfig& c, Pending&, const std::string& v, const Where& w) { c.dynamics.samples = static_cast<int>(to_int(v, w)); }},
      {"dynamics.tol", [](RunConfig& c, Pending&, const std::string& v, const Where& w) { c.dynamics.tol = to_double(v, w); }},
      {"dynamics.eps", [](RunConfig& c, Pending&, const std::string& v, const Where& w) { c.dynamics.eps = to_double(v, w); }},
      {"dynamics.gp_dress_initial",
       [](RunConfig& c, Pending&, const std::string& v, const Where& w) { c.dynamics.gp_dress_initial = to_bool(v, w); }},
      {"dynamics.kinds", [](RunConfig& c, Pending&, const std::string& v, const Where& w) { c.dynamics.kinds = to_kinds(v, w); }},
      {"sweep.kind",
       [](RunConfig& c, Pending&, const std::string& v, const Where& w) {
         const auto k = to_kinds(v, w);
         if (k.size() != 1) fail(w, "expected a single kind");
         c.sweep.kind = k.front();
       }},
      {"sweep.gammas", [](RunConfig& c, Pending&, const std::string& v, const Where& w) { c.sweep.gammas = to_doubles(v, w); }},
      {"sweep.delta_min", [](RunConfig& c, Pending&, const std::string& v, const Where& w) { c.sweep.delta_min = to_double(v, w); }},
      {"sweep.delta_max", [](RunConfig& c, Pending&, const std::string& v, const Where& w) { c.sweep.delta_max = to_double(v, w); }},
      {"sweep.delta_step", [](RunConfig& c, Pending&, const std::string& v, const Where& w) { c.sweep.delta_step = to_double(v, w); }},
      {"sweep.count", [](RunConfig& c, Pending&, const std::string& v, const Where& w) { c.sweep.count = static_cast<int>(to_int(v, w)); }},
      {"sweep.correlation",
       [](RunConfig& c, Pending&, const std::string& v, const Where& w) { c.sweep.correlation = to_bool(v, w); }},
      {"output.dir", [](RunConfig& c, Pending&, const std::string& v, const Where&) { c.out_dir = v; }},
  };
  return table;
}

void apply_setting(RunConfig& cfg, Pending& pending, const std::string& key, const std::string& value,
                   const Where& w) {
  const auto& table = setters();
  const auto it = table.find(key);
  if (it == table.end()) fail(w, "unknown key");
  it->second(cfg, pending, value, w);
}

void validate(RunConfig& cfg, const Pending& p, const std::string& source) {
  Where w{source, 0, ""};
  auto check = [&](bool ok, const std::string& key, const std::string& what) {
    if (!ok) {
      w.key = key;
      fail(w, what);
    }
  };
  ModelParams m = cfg.model;
  if (p.omega1) m.omega1 = *p.omega1;
  if (p.omega2) m.omega2 = *p.omega2;
  if (p.a) m.a = *p.a;
  if (p.delta) m.delta = *p.delta;
  check(m.omega1 > 0.0, "model.omega1", "must be positive");
  check(m.omega2 > 0.0, "model.omega2", "must be positive");
  check(m.a > 0.0, "model.a", "must be positive");
  // Exactly one of c / gamma determines the coupling; both are accepted only if they agree.
  if (p.c && p.gamma) {
    const double from_gamma = 0.5 * *p.gamma * m.omega1 * m.omega1 * m.a;
    if (std::abs(from_gamma - *p.c) > 1e-12 * std::max(1.0, std::abs(*p.c))) {
      std::ostringstream msg;
      msg << "c = " << *p.c << " contradicts gamma = " << *p.gamma << " (which implies c = " << from_gamma << ")";
      fail(p.c_where, msg.str());
    }
    m.c = *p.c;
  } else if (p.c) {
    m.c = *p.c;
  } else {
    const double g = p.gamma ? *p.gamma : cfg.model.gamma();
    m = ModelParams::from_gamma(m.omega1, m.omega2, m.a, m.delta, g);
  }
  cfg.model = m;

  check(cfg.grid.nx >= 32, "grid.nx", "must be at least 32");
  check(cfg.grid.ny >= 32, "grid.ny", "must be at least 32");
  check(!cfg.grid.padding || *cfg.grid.padding > 0.0, "grid.padding", "must be positive");
  check(cfg.grid.energy_cap > 0.0, "grid.energy_cap", "must be positive");
  check(cfg.grid.offset_sign == 1 || cfg.grid.offset_sign == -1, "grid.offset_sign", "must be +1 or -1");
  const int extents = (cfg.grid.x_min ? 1 : 0) + (cfg.grid.x_max ? 1 : 0) + (cfg.grid.y_min ? 1 : 0) +
                      (cfg.grid.y_max ? 1 : 0);
  check(extents == 0 || extents == 4, "grid.x_min", "explicit extents need all of x_min, x_max, y_min, y_max");
  check(cfg.grid.order == 2 || cfg.grid.order == 4, "grid.order", "must be 2 or 4");
  check(cfg.solver.count >= 1, "solver.count", "must be at least 1");
  check(cfg.solver.tol > 0.0, "solver.tol", "must be positive");
  check(cfg.solver.degeneracy_tol > 0.0, "solver.degeneracy_tol", "must be positive");
  check(cfg.solver.max_iter >= 1, "solver.max_iter", "must be at least 1");
  check(!cfg.dynamics.temperatures.empty(), "dynamics.temperatures", "must list at least one temperature");
  for (double t : cfg.dynamics.temperatures) check(t >= 0.0, "dynamics.temperatures", "must be >= 0");
  check(cfg.dynamics.t_max > 0.0, "dynamics.t_max", "must be positive");
  check(cfg.dynamics.samples >= 1, "dynamics.samples", "must be at least 1");
  check(cfg.dynamics.tol > 0.0, "dynamics.tol", "must be positive");
  check(cfg.dynamics.eps > 0.0 && cfg.dynamics.eps < 1.0, "dynamics.eps", "must lie in (0, 1)");
  for (auto k : cfg.dynamics.kinds) {
    check(k == HamiltonianKind::BO || k == HamiltonianKind::GP || k == HamiltonianKind::Full, "dynamics.kinds",
          "must be among BO, GP, FULL");
  }
  check(cfg.sweep.kind == HamiltonianKind::GP || cfg.sweep.kind == HamiltonianKind::Full, "sweep.kind",
        "must be GP or FULL");
  check(cfg.sweep.delta_step > 0.0, "sweep.delta_step", "must be positive");
  check(cfg.sweep.delta_max >= cfg.sweep.delta_min, "sweep.delta_max", "must not be below delta_min");
  check(cfg.sweep.count >= 2, "sweep.count", "must be at least 2");
  check(!cfg.out_dir.empty(), "output.dir", "must not be empty");
}

}  // namespace

std::string RunConfig::canonical() const {
  std::ostringstream os;
  auto kv = [&](const std::string& k, const std::string& v) { os << k << "=" << v << "\n"; };
  kv("model.omega1", fmt(model.omega1));
  kv("model.omega2", fmt(model.omega2));
  kv("model.a", fmt(model.a));
  kv("model.delta", fmt(model.delta));
  kv("model.c", fmt(model.c));
  kv("model.gamma", fmt(model.gamma()));
  kv("grid.nx", std::to_string(grid.nx));
  kv("grid.ny", std::to_string(grid.ny));
  kv("grid.padding", grid.padding ? fmt(*grid.padding) : "default");
  kv("grid.energy_cap", fmt(grid.energy_cap));
  kv("grid.offset_sign", std::to_string(grid.offset_sign));
  if (grid.x_min) {
    kv("grid.x_min", fmt(*grid.x_min));
    kv("grid.x_max", fmt(*grid.x_max));
    kv("grid.y_min", fmt(*grid.y_min));
    kv("grid.y_max", fmt(*grid.y_max));
  }
  kv("grid.order", std::to_string(grid.order));
  kv("grid.ci_placement", grid.ci_placement == CiPlacement::CellCentre ? "cell_centre" : "avoid_node");
  kv("grid.gp_scheme", grid.gp_scheme == GpScheme::Peierls ? "peierls" : "symmetrized");
  kv("solver.count", std::to_string(solver.count));
  kv("solver.tol", fmt(solver.tol));
  kv("solver.seed", std::to_string(solver.seed));
  kv("solver.degeneracy_tol", fmt(solver.degeneracy_tol));
  kv("solver.max_iter", std::to_string(solver.max_iter));
  kv("solver.kinds", kinds_str(solver.kinds));
  kv("dynamics.temperatures", list_str(dynamics.temperatures));
  kv("dynamics.t_max", fmt(dynamics.t_max));
  kv("dynamics.samples", std::to_string(dynamics.samples));
  kv("dynamics.tol", fmt(dynamics.tol));
  kv("dynamics.eps", fmt(dynamics.eps));
  kv("dynamics.gp_dress_initial", dynamics.gp_dress_initial ? "true" : "false");
  kv("dynamics.kinds", kinds_str(dynamics.kinds));
  kv("sweep.kind", std::string(to_string(sweep.kind)));
  kv("sweep.gammas", list_str(sweep.gammas));
  kv("sweep.delta_min", fmt(sweep.delta_min));
  kv("sweep.delta_max", fmt(sweep.delta_max));
  kv("sweep.delta_step", fmt(sweep.delta_step));
  kv("sweep.count", std::to_string(sweep.count));
  kv("sweep.correlation", sweep.correlation ? "true" : "false");
  return os.str();
}

std::string RunConfig::hash() const {
  const std::string c = canonical();
  return hex64(fnv1a64(c.data(), c.size()));
}

RunConfig parse_config_text(const std::string& text, const std::vector<std::string>& overrides,
                            const std::string& source) {
  RunConfig cfg;
  Pending pending;
  std::istringstream in(text);
  std::string raw;
  std::string section;
  int line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    const auto hash_pos = raw.find_first_of("#;");
    const std::string line = trim(hash_pos == std::string::npos ? raw : raw.substr(0, hash_pos));
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') fail({source, line_no, line}, "malformed section header");
      section = trim(std::string_view(line).substr(1, line.size() - 2));
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) fail({source, line_no, line}, "expected key = value");
    const std::string key = trim(std::string_view(line).substr(0, eq));
    const std::string value = trim(std::string_view(line).substr(eq + 1));
    const std::string full = section.empty() ? key : section + "." + key;
    apply_setting(cfg, pending, full, value, {source, line_no, full});
  }
  for (std::size_t i = 0; i < overrides.size(); ++i) {
    const auto& o = overrides[i];
    const auto eq = o.find('=');
    const std::string src = "--set #" + std::to_string(i + 1);
    if (eq == std::string::npos) fail({src, 0, o}, "expected section.key=value");
    const std::string key = trim(std::string_view(o).substr(0, eq));
    apply_setting(cfg, pending, key, trim(std::string_view(o).substr(eq + 1)), {src, 0, key});
  }
  validate(cfg, pending, source);
  return cfg;
}

RunConfig parse_config_file(const std::string& path, const std::vector<std::string>& overrides) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::ConfigError, "cannot open config file '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config_text(ss.str(), overrides, path);
}

}  // namespace cisim
