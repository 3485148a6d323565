#pragma once

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <initializer_list>
#include <random>
#include <string>
#include <vector>

#include "pluripot/report.hpp"

namespace pluripot {

inline constexpr const char* kVersion = "0.1.0";

// ===========================================================================
// Named function library
//
// Obstacles and boundary data come from a fixed set of named expressions
// instead of a parser: the name lands verbatim in the report echo, and two
// configs with the same names are guaranteed to mean the same functions.

struct LibraryParams {
  double value = 0.0;     // "const"
  std::uint64_t seed = 0; // "random"
};

inline GridFunction library_function(const std::string& name, const MaskPtr& mask,
                                     const LibraryParams& lp = {}) {
  const int d = mask->lat.dim();
  if (name == "const") return constant_grid_function(mask, lp.value, "const");
  if (name == "re_z")
    return make_grid_function(
        mask, [](const Point& p) { return p[0]; }, "re_z");
  if (name == "re_z2")
    return make_grid_function(
        mask, [](const Point& p) { return p[0] * p[0] - p[1] * p[1]; }, "re_z2");
  if (name == "abs2")
    return make_grid_function(
        mask,
        [d](const Point& p) {
          double s = 0.0;
          for (int a = 0; a < d; ++a) s += p[a] * p[a];
          return s;
        },
        "abs2");
  if (name == "neg_abs2")
    return make_grid_function(
        mask,
        [d](const Point& p) {
          double s = 0.0;
          for (int a = 0; a < d; ++a) s += p[a] * p[a];
          return -s;
        },
        "neg_abs2");
  if (name == "neg_sqrt")
    return make_grid_function(
        mask,
        [d](const Point& p) {
          double s = 0.0;
          for (int a = 0; a < d; ++a) s += p[a] * p[a];
          return -std::sqrt(std::max(0.0, 1.0 - s));
        },
        "neg_sqrt");
  if (name == "neg_abs_sin")
    // -|sin(arg z)| on the first factor; on the unit circle this is -|Im z|.
    return make_grid_function(
        mask,
        [](const Point& p) {
          const double r = std::hypot(p[0], p[1]);
          return r < 1e-12 ? 0.0 : -std::abs(p[1]) / r;
        },
        "neg_abs_sin");
  if (name == "random") {
    std::mt19937_64 rng(lp.seed);
    std::uniform_real_distribution<double> dist(-1.0, 1.0);
    GridFunction g = constant_grid_function(mask, 0.0, "random");
    for (const std::int64_t i : mask->closure_nodes) g[i] = dist(rng);
    return g;
  }
  throw ConfigError("unknown library function '" + name +
                    "' (available: const, re_z, re_z2, abs2, neg_abs2, neg_sqrt, "
                    "neg_abs_sin, random, extremal)");
}

// ===========================================================================
// Config parsing

namespace detail {

inline void require_keys(const json& j, const std::string& where,
                         std::initializer_list<const char*> allowed) {
  if (!j.is_object()) throw ConfigError(where + " must be a JSON object");
  for (auto it = j.begin(); it != j.end(); ++it) {
    bool known = false;
    for (const char* k : allowed)
      if (it.key() == k) {
        known = true;
        break;
      }
    if (!known) throw ConfigError("unknown key '" + it.key() + "' in " + where);
  }
}

inline double get_number(const json& j, const std::string& where) {
  if (!j.is_number()) throw ConfigError(where + " must be a number");
  return j.get<double>();
}

inline std::int64_t get_integer(const json& j, const std::string& where) {
  if (!j.is_number_integer()) throw ConfigError(where + " must be an integer");
  return j.get<std::int64_t>();
}

inline std::string get_string(const json& j, const std::string& where) {
  if (!j.is_string()) throw ConfigError(where + " must be a string");
  return j.get<std::string>();
}

inline bool get_bool(const json& j, const std::string& where) {
  if (!j.is_boolean()) throw ConfigError(where + " must be a boolean");
  return j.get<bool>();
}

inline Point get_point(const json& j, int dim, const std::string& where) {
  if (!j.is_array() || static_cast<int>(j.size()) != dim)
    throw ConfigError(where + " must be an array of " + std::to_string(dim) + " numbers");
  Point p{0, 0, 0, 0};
  for (int a = 0; a < dim; ++a) p[a] = get_number(j[static_cast<std::size_t>(a)], where);
  return p;
}

} // namespace detail

inline DomainSpec domain_from_config(const std::string& name, const json& params) {
  using detail::get_number;
  using detail::get_point;
  using detail::require_keys;
  if (name == "disk") {
    require_keys(params, "domain.params", {"center", "radius"});
    double cx = 0.0, cy = 0.0, r = 1.0;
    if (params.contains("center")) {
      const Point c = get_point(params["center"], 2, "domain.params.center");
      cx = c[0];
      cy = c[1];
    }
    if (params.contains("radius")) r = get_number(params["radius"], "domain.params.radius");
    if (!(r > 0.0)) throw ConfigError("disk radius must be positive");
    if (cx == 0.0 && cy == 0.0 && r == 1.0) return unit_disk();
    return disk_at(cx, cy, r);
  }
  if (name == "annulus") {
    require_keys(params, "domain.params", {"inner", "outer"});
    const double r1 = params.contains("inner") ? get_number(params["inner"], "domain.params.inner") : 0.5;
    const double r2 = params.contains("outer") ? get_number(params["outer"], "domain.params.outer") : 1.0;
    if (!(0.0 < r1 && r1 < r2)) throw ConfigError("annulus needs 0 < inner < outer");
    return annulus(r1, r2);
  }
  if (name == "slit_disk") {
    require_keys(params, "domain.params", {});
    return slit_disk();
  }
  if (name == "ball") {
    require_keys(params, "domain.params", {});
    return unit_ball2();
  }
  if (name == "polydisk") {
    require_keys(params, "domain.params", {});
    return polydisk();
  }
  if (name == "hartogs") {
    require_keys(params, "domain.params", {});
    return hartogs_triangle();
  }
  if (name == "worm") {
    require_keys(params, "domain.params", {"c"});
    const double c = params.contains("c") ? get_number(params["c"], "domain.params.c")
                                          : std::pow(M_PI, -4.0);
    return worm(make_worm_profile(c));
  }
  if (name == "lens") {
    // Intersection of two unit-style disks with horizontally shifted centres.
    require_keys(params, "domain.params", {"offset", "radius"});
    const double off = params.contains("offset") ? get_number(params["offset"], "domain.params.offset") : 0.8;
    const double r = params.contains("radius") ? get_number(params["radius"], "domain.params.radius") : 1.0;
    if (!(r > 0.0)) throw ConfigError("lens radius must be positive");
    return intersect_domains(disk_at(0.0, 0.0, r), disk_at(off, 0.0, r));
  }
  throw ConfigError("unknown domain '" + name +
                    "' (available: disk, annulus, slit_disk, ball, polydisk, hartogs, worm, lens)");
}

struct ExperimentConfig {
  std::string domain_name;
  DomainSpec domain;
  double h = 0.1;
  bool box_auto = true;
  Point box_lo{0, 0, 0, 0};
  Point box_hi{0, 0, 0, 0};
  bool window = false;
  std::int64_t node_cap = kDefaultNodeBudget;
  std::optional<std::vector<double>> radii_h; // circle radii in units of h
  int cone_m = 16;
  SolverOptions solver;
  std::string kind;
  json params = json::object(); // the experiment block, validated
  bool has_seed = false;
  std::uint64_t seed = 0;
  std::string output = "out";
  json echo; // validated raw config, echoed into reports
};

// Obstacle / boundary-data reference: a bare name, or an object carrying the
// small parameter set some names need.
struct ObstacleSpec {
  std::string name;
  double value = 0.0;        // const
  Point center{0, 0, 0, 0};  // extremal
  double radius = 0.25;      // extremal
};

inline ObstacleSpec parse_obstacle(const json& j, int dim, const std::string& where) {
  ObstacleSpec spec;
  if (j.is_string()) {
    spec.name = j.get<std::string>();
    return spec;
  }
  if (!j.is_object() || !j.contains("name"))
    throw ConfigError(where + " must be a library name or an object with a name");
  spec.name = detail::get_string(j["name"], where + ".name");
  if (spec.name == "const") {
    detail::require_keys(j, where, {"name", "value"});
    if (j.contains("value")) spec.value = detail::get_number(j["value"], where + ".value");
  } else if (spec.name == "extremal") {
    detail::require_keys(j, where, {"name", "center", "radius"});
    if (j.contains("center")) spec.center = detail::get_point(j["center"], dim, where + ".center");
    if (j.contains("radius")) spec.radius = detail::get_number(j["radius"], where + ".radius");
    if (!(spec.radius > 0.0)) throw ConfigError(where + ".radius must be positive");
  } else {
    detail::require_keys(j, where, {"name"});
  }
  return spec;
}

// Interior nodes inside the closed ball of the spec; the target set for
// relative-extremal obstacles and glue experiments.
inline std::vector<std::int64_t> ball_target_nodes(const DomainMask& mask, const Point& center,
                                                   double radius) {
  std::vector<std::int64_t> K;
  for (const std::int64_t i : mask.interior_nodes) {
    const Point p = mask.lat.point(i);
    double d2 = 0.0;
    for (int a = 0; a < mask.lat.dim(); ++a) {
      const double d = p[a] - center[a];
      d2 += d * d;
    }
    if (d2 <= radius * radius * (1.0 + 1e-12)) K.push_back(i);
  }
  return K;
}

inline GridFunction resolve_obstacle(const ObstacleSpec& spec, const MaskPtr& mask,
                                     std::uint64_t seed) {
  if (spec.name == "extremal") {
    const auto K = ball_target_nodes(*mask, spec.center, spec.radius);
    if (K.empty()) throw BadParams("extremal target ball contains no interior nodes");
    GridFunction g = constant_grid_function(mask, 0.0, "extremal_obstacle");
    for (const std::int64_t i : K) g[i] = -1.0;
    return g;
  }
  LibraryParams lp;
  lp.value = spec.value;
  lp.seed = seed;
  return library_function(spec.name, mask, lp);
}

inline bool experiment_is_randomized(const std::string& kind, const json& params) {
  if (kind == "probe" || kind == "classify") return true;
  for (const char* key : {"obstacle", "u", "data", "boundary"}) {
    if (!params.contains(key)) continue;
    const json& j = params[key];
    const std::string name = j.is_string()  ? j.get<std::string>()
                             : j.is_object() ? j.value("name", "")
                                             : "";
    if (name == "random") return true;
  }
  return false;
}

inline void validate_experiment_block(const ExperimentConfig& cfg) {
  const json& e = cfg.params;
  const std::string& k = cfg.kind;
  const int dim = 2 * cfg.domain.n;
  auto keys = [&](std::initializer_list<const char*> allowed) {
    detail::require_keys(e, "experiment", allowed);
  };

  if (k == "envelope") {
    keys({"kind", "obstacle", "probes", "duality"});
    if (!e.contains("obstacle")) throw ConfigError("envelope experiment needs an obstacle");
    parse_obstacle(e["obstacle"], dim, "experiment.obstacle");
    if (e.contains("duality") && !e["duality"].is_boolean() && e["duality"] != "auto")
      throw ConfigError("experiment.duality must be true, false, or \"auto\"");
  } else if (k == "dirichlet") {
    keys({"kind", "boundary", "probes"});
    if (!e.contains("boundary")) throw ConfigError("dirichlet experiment needs boundary data");
    const ObstacleSpec b = parse_obstacle(e["boundary"], dim, "experiment.boundary");
    if (b.name == "extremal")
      throw ConfigError("'extremal' is an obstacle, not boundary data");
  } else if (k == "jensen") {
    keys({"kind", "obstacle", "probes"});
    if (!e.contains("obstacle")) throw ConfigError("jensen experiment needs an obstacle");
    parse_obstacle(e["obstacle"], dim, "experiment.obstacle");
  } else if (k == "probe") {
    keys({"kind", "count"});
    if (e.contains("count") && detail::get_integer(e["count"], "experiment.count") < 0)
      throw ConfigError("experiment.count must be nonnegative");
  } else if (k == "classify") {
    keys({"kind", "expected", "random_probes", "witness_mass", "support_samples"});
    if (e.contains("expected")) {
      const std::string x = detail::get_string(e["expected"], "experiment.expected");
      if (x != "p-hyperconvex" && x != "not-p-hyperconvex")
        throw ConfigError("experiment.expected must be p-hyperconvex or not-p-hyperconvex");
    }
    if (e.contains("random_probes") &&
        detail::get_integer(e["random_probes"], "experiment.random_probes") < 0)
      throw ConfigError("experiment.random_probes must be nonnegative");
    if (e.contains("witness_mass") &&
        !(detail::get_number(e["witness_mass"], "experiment.witness_mass") > 0.0))
      throw ConfigError("experiment.witness_mass must be positive");
    if (e.contains("support_samples") &&
        detail::get_integer(e["support_samples"], "experiment.support_samples") < 1)
      throw ConfigError("experiment.support_samples must be at least 1");
    if (cfg.window) throw ConfigError("classify needs a full lattice, not a window");
  } else if (k == "glue") {
    keys({"kind", "mode", "u", "data", "target", "delta"});
    const std::string mode = e.contains("mode") ? detail::get_string(e["mode"], "experiment.mode") : "";
    if (mode == "max") {
      if (!e.contains("u")) throw ConfigError("glue mode \"max\" needs a function u");
      parse_obstacle(e["u"], dim, "experiment.u");
      if (e.contains("target"))
        detail::require_keys(e["target"], "experiment.target", {"center", "radius"});
      if (e.contains("data") || e.contains("delta"))
        throw ConfigError("data/delta belong to glue mode \"cutoff\"");
    } else if (mode == "cutoff") {
      if (!e.contains("data")) throw ConfigError("glue mode \"cutoff\" needs boundary data");
      parse_obstacle(e["data"], dim, "experiment.data");
      if (e.contains("delta") && !(detail::get_number(e["delta"], "experiment.delta") > 0.0))
        throw ConfigError("experiment.delta must be positive");
      if (e.contains("u") || e.contains("target"))
        throw ConfigError("u/target belong to glue mode \"max\"");
    } else {
      throw ConfigError("glue experiment needs mode \"max\" or \"cutoff\"");
    }
  } else {
    throw ConfigError("unknown experiment kind '" + k +
                      "' (available: envelope, dirichlet, jensen, probe, classify, glue)");
  }

  if (experiment_is_randomized(k, e) && !cfg.has_seed)
    throw ConfigError("experiment '" + k + "' draws random numbers; a top-level seed is mandatory");
}

inline ExperimentConfig parse_config(const json& raw) {
  detail::require_keys(raw, "config",
                       {"schema", "domain", "lattice", "cone", "solver", "experiment", "seed",
                        "output"});
  if (!raw.contains("schema") || !raw["schema"].is_number_integer() ||
      raw["schema"].get<int>() != 1)
    throw ConfigError("config requires \"schema\": 1");

  ExperimentConfig cfg;

  if (!raw.contains("domain")) throw ConfigError("config requires a domain block");
  const json& dj = raw["domain"];
  detail::require_keys(dj, "domain", {"name", "params"});
  if (!dj.contains("name")) throw ConfigError("domain block needs a name");
  cfg.domain_name = detail::get_string(dj["name"], "domain.name");
  cfg.domain = domain_from_config(cfg.domain_name, dj.value("params", json::object()));

  if (!raw.contains("lattice")) throw ConfigError("config requires a lattice block");
  const json& lj = raw["lattice"];
  detail::require_keys(lj, "lattice", {"h", "box", "window", "node_cap"});
  if (!lj.contains("h")) throw ConfigError("lattice block needs a spacing h");
  cfg.h = detail::get_number(lj["h"], "lattice.h");
  if (!(cfg.h > 0.0) || !std::isfinite(cfg.h))
    throw ConfigError("lattice.h must be positive and finite");
  if (lj.contains("window")) cfg.window = detail::get_bool(lj["window"], "lattice.window");
  if (lj.contains("node_cap")) {
    const std::int64_t cap = detail::get_integer(lj["node_cap"], "lattice.node_cap");
    if (cap <= 0) throw ConfigError("lattice.node_cap must be positive");
    cfg.node_cap = cap;
  }
  if (lj.contains("box")) {
    const json& bj = lj["box"];
    if (bj.is_string()) {
      if (bj != "auto") throw ConfigError("lattice.box must be \"auto\" or an object {lo, hi}");
    } else {
      detail::require_keys(bj, "lattice.box", {"lo", "hi"});
      if (!bj.contains("lo") || !bj.contains("hi"))
        throw ConfigError("explicit lattice.box needs both lo and hi");
      cfg.box_auto = false;
      cfg.box_lo = detail::get_point(bj["lo"], 2 * cfg.domain.n, "lattice.box.lo");
      cfg.box_hi = detail::get_point(bj["hi"], 2 * cfg.domain.n, "lattice.box.hi");
    }
  }
  if (cfg.window && cfg.box_auto)
    throw ConfigError("window mode needs an explicit lattice.box");

  if (raw.contains("cone")) {
    const json& cj = raw["cone"];
    detail::require_keys(cj, "cone", {"radii", "m", "directions"});
    if (cj.contains("m")) {
      cfg.cone_m = static_cast<int>(detail::get_integer(cj["m"], "cone.m"));
      if (cfg.cone_m < 4) throw ConfigError("cone.m must be at least 4");
    }
    if (cj.contains("directions")) {
      if (detail::get_string(cj["directions"], "cone.directions") != "default")
        throw ConfigError("only the built-in direction family exists; use \"default\"");
    }
    if (cj.contains("radii")) {
      const json& rj = cj["radii"];
      if (rj.is_string()) {
        if (rj != "default")
          throw ConfigError("cone.radii must be \"default\" or an array of multiples of h");
      } else if (rj.is_array()) {
        std::vector<double> rs;
        for (const auto& el : rj) {
          const double r = detail::get_number(el, "cone.radii");
          if (!(r > 0.0)) throw ConfigError("cone radii must be positive multiples of h");
          rs.push_back(r);
        }
        cfg.radii_h = std::move(rs);
      } else {
        throw ConfigError("cone.radii must be \"default\" or an array of multiples of h");
      }
    }
  }

  if (raw.contains("solver")) {
    const json& sj = raw["solver"];
    detail::require_keys(sj, "solver", {"tol", "max_sweeps", "sweep"});
    if (sj.contains("tol")) {
      cfg.solver.tol = detail::get_number(sj["tol"], "solver.tol");
      if (!(cfg.solver.tol > 0.0)) throw ConfigError("solver.tol must be positive");
    }
    if (sj.contains("max_sweeps")) {
      cfg.solver.max_sweeps = detail::get_integer(sj["max_sweeps"], "solver.max_sweeps");
      if (cfg.solver.max_sweeps < 1) throw ConfigError("solver.max_sweeps must be at least 1");
    }
    if (sj.contains("sweep")) {
      const std::string s = detail::get_string(sj["sweep"], "solver.sweep");
      if (s == "gauss-seidel")
        cfg.solver.gauss_seidel = true;
      else if (s != "jacobi")
        throw ConfigError("solver.sweep must be \"jacobi\" or \"gauss-seidel\"");
    }
  }

  if (!raw.contains("experiment")) throw ConfigError("config requires an experiment block");
  const json& ej = raw["experiment"];
  if (!ej.is_object() || !ej.contains("kind"))
    throw ConfigError("experiment block needs a kind");
  cfg.kind = detail::get_string(ej["kind"], "experiment.kind");
  cfg.params = ej;

  if (raw.contains("seed")) {
    if (!raw["seed"].is_number_integer() || raw["seed"].get<std::int64_t>() < 0)
      throw ConfigError("seed must be a nonnegative integer");
    cfg.seed = raw["seed"].get<std::uint64_t>();
    cfg.has_seed = true;
  }
  if (raw.contains("output")) cfg.output = detail::get_string(raw["output"], "output");

  validate_experiment_block(cfg);
  cfg.echo = raw;
  return cfg;
}

// ===========================================================================
// Lattice / cone assembly from a config

inline std::int64_t effective_node_cap(std::int64_t configured) {
  if (const char* env = std::getenv("PLURIPOT_NODE_CAP")) {
    char* end = nullptr;
    const long long v = std::strtoll(env, &end, 10);
    if (end == env || *end != '\0' || v <= 0)
      throw ConfigError("PLURIPOT_NODE_CAP must be a positive integer");
    return static_cast<std::int64_t>(v);
  }
  return configured;
}

inline Lattice lattice_for(const ExperimentConfig& cfg) {
  Point lo = cfg.box_lo, hi = cfg.box_hi;
  if (cfg.box_auto) {
    // 3h margin: classification needs the 2h collar, plus one cell of slack
    // against the outward index snap.
    for (int a = 0; a < 2 * cfg.domain.n; ++a) {
      lo[a] = cfg.domain.bbox_lo[a] - 3.0 * cfg.h;
      hi[a] = cfg.domain.bbox_hi[a] + 3.0 * cfg.h;
    }
  }
  return build_lattice(lo, hi, cfg.h, cfg.domain.n, effective_node_cap(cfg.node_cap));
}

inline ConeConfig cone_config_for(const ExperimentConfig& cfg) {
  ConeConfig cc;
  cc.m = cfg.cone_m;
  if (cfg.radii_h) {
    std::vector<double> abs_radii;
    for (const double r : *cfg.radii_h) abs_radii.push_back(r * cfg.h);
    cc.radii = std::move(abs_radii);
  }
  return cc;
}

inline std::vector<Point> parse_probe_points(const json& e, int dim) {
  std::vector<Point> pts;
  if (e.contains("probes")) {
    const json& pj = e["probes"];
    if (!pj.is_array() || pj.empty())
      throw ConfigError("experiment.probes must be a nonempty array of points");
    for (const auto& q : pj) pts.push_back(detail::get_point(q, dim, "experiment.probes"));
  } else {
    pts.push_back(Point{0, 0, 0, 0});
  }
  return pts;
}

inline std::int64_t nearest_closure_node(const DomainMask& mask, const Point& p) {
  double best = std::numeric_limits<double>::infinity();
  std::int64_t arg = -1;
  for (const std::int64_t i : mask.closure_nodes) {
    const Point q = mask.lat.point(i);
    double d2 = 0.0;
    for (int a = 0; a < mask.lat.dim(); ++a) {
      const double d = q[a] - p[a];
      d2 += d * d;
    }
    if (d2 < best) {
      best = d2;
      arg = i;
    }
  }
  if (arg < 0) throw BadParams("domain has no closure nodes to probe");
  return arg;
}

// ===========================================================================
// Artifact bookkeeping

struct ArtifactList {
  std::filesystem::path dir;
  json manifest = json::array();

  void add_text(const std::string& name, const std::function<void(std::ostream&)>& writer) {
    const std::filesystem::path p = dir / name;
    {
      std::ofstream out(p, std::ios::binary);
      if (!out) throw BadParams("cannot open output file " + p.string());
      writer(out);
      out.flush();
      if (!out) throw BadParams("failed while writing " + p.string());
    }
    manifest.push_back({{"file", name}, {"sha256", sha256_file(p.string())}});
  }
};

// Grids past this size skip the per-node CSV artifacts; the report keeps the
// aggregate numbers either way.
inline constexpr std::int64_t kCsvNodeLimit = 200000;

inline void add_grid_artifacts(ArtifactList& artifacts, const std::string& stem,
                               const GridFunction& g) {
  if (g.mask->lat.size() > kCsvNodeLimit) return;
  artifacts.add_text(stem + ".csv", [&](std::ostream& os) { dump_grid_csv(g, os); });
  artifacts.add_text(stem + ".dat", [&](std::ostream& os) { dump_plot_columns(g, os); });
}

// ===========================================================================
// Experiment execution. Fills `res` incrementally so a thrown error still
// leaves the completed parts for the partial report. Returns the exit code.

namespace detail {

// Dense duality certificates need a tableau of (closure) x (closure + rows)
// doubles; past this variable count the push-forward route takes over.
inline constexpr std::int64_t kDenseLpVarCap = 5000;

inline bool duality_affordable(const DomainMask& mask, const DiscretePshCone& cone) {
  return static_cast<std::int64_t>(mask.closure_nodes.size()) +
             static_cast<std::int64_t>(cone.rows.size()) <=
         kDenseLpVarCap;
}

} // namespace detail

inline int execute_experiment(const ExperimentConfig& cfg, int jobs, ArtifactList& artifacts,
                              json& res) {
  SolverOptions solver = cfg.solver;
  solver.jobs = std::max(1, jobs);
  const json& e = cfg.params;

  const Lattice lat = lattice_for(cfg);
  json blo = json::array(), bhi = json::array();
  for (int a = 0; a < lat.dim(); ++a) {
    blo.push_back(lat.box_lo(a));
    bhi.push_back(lat.box_hi(a));
  }
  res["lattice"] = {{"h", cfg.h}, {"nodes", lat.size()}, {"box_lo", blo}, {"box_hi", bhi}};

  if (cfg.kind == "classify") {
    ClassifyOptions copts;
    copts.seed = cfg.seed;
    copts.random_probes = static_cast<int>(e.value("random_probes", 100));
    copts.witness_mass = e.value("witness_mass", 0.01);
    copts.env = solver;
    copts.support.env = solver;
    copts.support.max_samples = static_cast<int>(e.value("support_samples", 32));
    const ClassificationVerdict v = classify_domain(cfg.domain, lat, cone_config_for(cfg), copts);
    res["classification"] = to_json(v, lat);
    int code = 0;
    if (e.contains("expected")) {
      const std::string expected = e["expected"].get<std::string>();
      res["expected"] = expected;
      const bool refuted = v.verdict == ClassificationVerdict::Kind::NotPHyperconvex;
      res["expected_matched"] =
          (expected == "not-p-hyperconvex") == refuted &&
          v.verdict != ClassificationVerdict::Kind::Inconclusive;
      if (expected == "p-hyperconvex" && refuted) code = 4;
    }
    return code;
  }

  const MaskPtr mask = classify_nodes(lat, cfg.domain, cfg.window);
  res["nodes"] = {{"closure", mask->closure_nodes.size()},
                  {"interior", mask->interior_nodes.size()},
                  {"boundary", mask->boundary_nodes.size()}};
  if (lat.size() <= kCsvNodeLimit)
    artifacts.add_text("mask.csv", [&](std::ostream& os) { dump_mask_csv(*mask, os); });

  if (cfg.kind == "probe") {
    const auto probes = probe_family(mask, cfg.seed, static_cast<int>(e.value("count", 100)));
    const ProbeReport rep = disk_probe(cfg.domain, probes);
    res["probe"] = {{"probes_checked", rep.probes_checked},
                    {"witness_found", rep.witness_found}};
    if (rep.witness_found) res["probe"]["witness"] = to_json(rep.witness);
    return 0;
  }

  const DiscretePshCone cone = build_cone(mask, cone_config_for(cfg));
  res["cone_rows"] = cone.rows.size();

  if (cfg.kind == "envelope") {
    const ObstacleSpec spec = parse_obstacle(e["obstacle"], lat.dim(), "experiment.obstacle");
    const GridFunction obstacle = resolve_obstacle(spec, mask, cfg.seed);
    add_grid_artifacts(artifacts, "obstacle", obstacle);

    const EnvelopeResult env = psh_envelope(obstacle, cone, solver);
    res["envelope"] = to_json(env);
    res["violation"] = to_json(cone_violation(env.envelope, cone), lat);
    add_grid_artifacts(artifacts, "envelope", env.envelope);

    bool want_duality = detail::duality_affordable(*mask, cone);
    if (e.contains("duality") && e["duality"].is_boolean()) want_duality = e["duality"].get<bool>();

    json probes = json::array();
    double max_gap = 0.0;
    for (const Point& p : parse_probe_points(e, lat.dim())) {
      const std::int64_t node = nearest_closure_node(*mask, p);
      json pj = {{"node", node},
                 {"coords", coords_json(lat, node)},
                 {"value", env.envelope[node]}};
      if (want_duality) {
        const DualityCertificate cert = edwards_gap(node, obstacle, cone, solver);
        max_gap = std::max(max_gap, cert.gap);
        pj["duality"] = to_json(cert, lat);
      }
      probes.push_back(std::move(pj));
    }
    res["probes"] = std::move(probes);
    if (want_duality) res["max_duality_gap"] = max_gap;
    if (!env.converged)
      throw NonConvergence("envelope stalled at residual " + std::to_string(env.final_residual));
    return 0;
  }

  if (cfg.kind == "dirichlet") {
    const ObstacleSpec spec = parse_obstacle(e["boundary"], lat.dim(), "experiment.boundary");
    const GridFunction f = resolve_obstacle(spec, mask, cfg.seed);
    const DirichletResult dr = dirichlet_psh_extension(f, cone, solver);

    double dev = 0.0;
    for (const std::int64_t i : mask->closure_nodes)
      dev = std::max(dev, std::abs(dr.envelope.envelope[i] - dr.harmonic[i]));
    res["boundary_mismatch"] = dr.boundary_mismatch;
    res["max_dev_from_harmonic"] = dev;
    res["envelope"] = to_json(dr.envelope);
    res["violation"] = to_json(cone_violation(dr.envelope.envelope, cone), lat);
    add_grid_artifacts(artifacts, "boundary_data", f);
    add_grid_artifacts(artifacts, "harmonic", dr.harmonic);
    add_grid_artifacts(artifacts, "envelope", dr.envelope.envelope);

    json probes = json::array();
    for (const Point& p : parse_probe_points(e, lat.dim())) {
      const std::int64_t node = nearest_closure_node(*mask, p);
      probes.push_back({{"node", node},
                        {"coords", coords_json(lat, node)},
                        {"value", dr.envelope.envelope[node]}});
    }
    res["probes"] = std::move(probes);
    if (!dr.envelope.converged)
      throw NonConvergence("envelope stalled at residual " +
                           std::to_string(dr.envelope.final_residual));
    return 0;
  }

  if (cfg.kind == "jensen") {
    const ObstacleSpec spec = parse_obstacle(e["obstacle"], lat.dim(), "experiment.obstacle");
    const GridFunction obstacle = resolve_obstacle(spec, mask, cfg.seed);
    const bool dense = detail::duality_affordable(*mask, cone);
    res["exact_lp"] = dense;

    json probes = json::array();
    if (dense) {
      for (const Point& p : parse_probe_points(e, lat.dim())) {
        const std::int64_t node = nearest_closure_node(*mask, p);
        const DualityCertificate cert = edwards_gap(node, obstacle, cone, solver);
        const SupportProfile sp = support_profile(cert.measure, *mask);
        const JensenCheck jc = check_jensen_inequality(obstacle, cert.measure, node);
        probes.push_back({{"node", node},
                          {"coords", coords_json(lat, node)},
                          {"duality", to_json(cert, lat)},
                          {"interior_mass", sp.interior_mass},
                          {"boundary_mass", sp.boundary_mass},
                          {"jensen_ok", jc.ok},
                          {"jensen_slack", jc.slack}});
      }
    } else {
      const EnvelopeResult cenv = psh_envelope_closure(obstacle, cone, solver);
      if (!cenv.converged)
        throw NonConvergence("closure envelope stalled at residual " +
                             std::to_string(cenv.final_residual));
      for (const Point& p : parse_probe_points(e, lat.dim())) {
        const std::int64_t node = nearest_closure_node(*mask, p);
        const PushforwardResult pf =
            pushforward_measure(node, obstacle, cone, cenv.envelope);
        const SupportProfile sp = support_profile(pf.measure, *mask);
        const JensenCheck jc = check_jensen_inequality(obstacle, pf.measure, node);
        probes.push_back({{"node", node},
                          {"coords", coords_json(lat, node)},
                          {"value", pf.value},
                          {"envelope_value", cenv.envelope[node]},
                          {"settled", pf.settled},
                          {"steps", pf.steps},
                          {"measure", to_json(pf.measure, lat)},
                          {"interior_mass", sp.interior_mass},
                          {"boundary_mass", sp.boundary_mass},
                          {"jensen_ok", jc.ok},
                          {"jensen_slack", jc.slack}});
      }
    }
    res["probes"] = std::move(probes);
    return 0;
  }

  if (cfg.kind == "glue") {
    const GridFunction psi = build_exhaustion(mask, cone, solver);
    res["exhaustion_violation"] = to_json(cone_violation(psi, cone), lat);
    add_grid_artifacts(artifacts, "exhaustion", psi);
    const std::string mode = e["mode"].get<std::string>();

    if (mode == "max") {
      const ObstacleSpec uspec = parse_obstacle(e["u"], lat.dim(), "experiment.u");
      const GridFunction u = resolve_obstacle(uspec, mask, cfg.seed);
      Point center{0, 0, 0, 0};
      double radius = 0.25;
      if (e.contains("target")) {
        const json& t = e["target"];
        if (t.contains("center"))
          center = detail::get_point(t["center"], lat.dim(), "experiment.target.center");
        if (t.contains("radius"))
          radius = detail::get_number(t["radius"], "experiment.target.radius");
      }
      const auto E = ball_target_nodes(*mask, center, radius);
      const auto [glued, gp] = max_glue(u, psi, E);
      res["glue"] = to_json(gp);
      res["violation"] = to_json(cone_violation(glued, cone), lat);

      double target_error = 0.0;
      for (const std::int64_t i : E)
        target_error = std::max(target_error, std::abs(glued[i] - (u[i] - gp.M)));
      double blo = std::numeric_limits<double>::infinity(), bhi = -blo;
      for (const std::int64_t b : mask->boundary_nodes) {
        blo = std::min(blo, glued[b]);
        bhi = std::max(bhi, glued[b]);
      }
      res["target_error"] = target_error;
      res["boundary_values"] = {{"min", blo}, {"max", bhi}};
      add_grid_artifacts(artifacts, "glued", glued);
    } else {
      const ObstacleSpec dspec = parse_obstacle(e["data"], lat.dim(), "experiment.data");
      const GridFunction f = resolve_obstacle(dspec, mask, cfg.seed);
      CutoffOptions copts;
      if (e.contains("delta")) copts.delta = e["delta"].get<double>();
      const CutoffResult cr = cutoff_extension(f, psi, cone, copts);
      res["cutoff"] = to_json(cr);
      res["violation"] = to_json(cone_violation(cr.F, cone), lat);
      add_grid_artifacts(artifacts, "extension", cr.F);
    }
    return 0;
  }

  throw ConfigError("unknown experiment kind '" + cfg.kind + "'");
}

// ===========================================================================
// Drivers: full run with report.json, and the refinement study

struct RunResult {
  int exit_code = 0;
  json report;
  std::filesystem::path report_path;
};

inline const char* error_kind_name(ErrorKind k) {
  switch (k) {
    case ErrorKind::Validation: return "validation";
    case ErrorKind::Convergence: return "convergence";
    default: return "internal";
  }
}

inline int exit_code_for(ErrorKind k) {
  switch (k) {
    case ErrorKind::Validation: return 2;
    case ErrorKind::Convergence: return 3;
    default: return 1;
  }
}

namespace detail {

// The report hash covers everything that should reproduce bit-for-bit under
// the same config + seed: wall-clock timings (and the hash field itself) are
// the only excluded keys.
inline std::string report_hash(json report) {
  report.erase("timings");
  report.erase("report_hash");
  return sha256_hex(report.dump());
}

inline void write_report(const std::filesystem::path& path, const json& report) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw BadParams("cannot open " + path.string());
  out << report.dump(2) << '\n';
}

} // namespace detail

inline RunResult run_config_json(const json& raw, const std::string& out_override, int jobs) {
  // Validation happens before any file is touched: a malformed config exits
  // without leaving outputs behind.
  ExperimentConfig cfg = parse_config(raw);
  if (!out_override.empty()) cfg.output = out_override;

  RunResult rr;
  const std::filesystem::path dir(cfg.output);
  std::filesystem::create_directories(dir);
  ArtifactList artifacts{dir};

  json report;
  report["tool"] = {{"name", "pluripot"}, {"version", kVersion}};
  report["schema"] = 1;
  report["config"] = cfg.echo;
  report["partial"] = false;
  report["results"] = json::object();

  const auto t0 = std::chrono::steady_clock::now();
  int code = 0;
  try {
    code = execute_experiment(cfg, jobs, artifacts, report["results"]);
  } catch (const Error& err) {
    report["partial"] = true;
    report["error"] = {{"kind", error_kind_name(err.kind())}, {"what", err.what()}};
    code = exit_code_for(err.kind());
  }
  const std::chrono::duration<double> elapsed = std::chrono::steady_clock::now() - t0;

  report["manifest"] = artifacts.manifest;
  report["report_hash"] = detail::report_hash(report);
  report["timings"] = {{"total_seconds", elapsed.count()}};
  rr.report_path = dir / "report.json";
  detail::write_report(rr.report_path, report);
  rr.report = std::move(report);
  rr.exit_code = code;
  return rr;
}

inline RunResult run_config_file(const std::string& path, const std::string& out_override,
                                 int jobs) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read config file " + path);
  json raw;
  try {
    raw = json::parse(in);
  } catch (const json::parse_error& pe) {
    throw ConfigError("config is not valid JSON: " + std::string(pe.what()));
  }
  return run_config_json(raw, out_override, jobs);
}

// ---------------------------------------------------------------------------
// Refinement study: rerun one experiment over a decreasing h list and tabulate
// probe values, duality gap, and boundary mismatch, plus an observed order
// estimate from consecutive difference ratios (exact for a constant
// refinement ratio, an approximation otherwise).

inline RunResult run_refine_json(const json& raw, const std::vector<double>& hs,
                                 const std::string& out_override, int jobs) {
  ExperimentConfig base = parse_config(raw);
  if (!out_override.empty()) base.output = out_override;
  if (hs.size() < 2) throw ConfigError("refine needs at least two grid spacings");
  for (std::size_t i = 0; i < hs.size(); ++i) {
    if (!(hs[i] > 0.0) || !std::isfinite(hs[i]))
      throw ConfigError("grid spacings must be positive and finite");
    if (i > 0 && !(hs[i] < hs[i - 1]))
      throw ConfigError("grid spacings must be strictly decreasing");
  }
  if (base.kind != "envelope" && base.kind != "dirichlet" && base.kind != "jensen")
    throw ConfigError("refine supports the envelope, dirichlet, and jensen experiments");

  RunResult rr;
  const std::filesystem::path dir(base.output);
  std::filesystem::create_directories(dir);
  ArtifactList artifacts{dir};

  json report;
  report["tool"] = {{"name", "pluripot"}, {"version", kVersion}};
  report["schema"] = 1;
  report["config"] = base.echo;
  report["refine_h"] = hs;
  report["partial"] = false;
  json& results = report["results"] = json::object();

  const auto t0 = std::chrono::steady_clock::now();
  int code = 0;
  try {
    const auto pts = parse_probe_points(base.params, 2 * base.domain.n);
    const double nan = std::numeric_limits<double>::quiet_NaN();
    struct Row {
      double h = 0.0;
      std::vector<double> values;
      double gap = 0.0;
      double mismatch = 0.0;
      bool has_gap = false, has_mismatch = false;
    };
    std::vector<Row> table;

    for (const double h : hs) {
      ExperimentConfig cfg = base;
      cfg.h = h;
      const Lattice lat = lattice_for(cfg);
      const MaskPtr mask = classify_nodes(lat, cfg.domain, cfg.window);
      const DiscretePshCone cone = build_cone(mask, cone_config_for(cfg));
      SolverOptions solver = cfg.solver;
      solver.jobs = std::max(1, jobs);

      Row row;
      row.h = h;
      if (cfg.kind == "dirichlet") {
        const ObstacleSpec spec =
            parse_obstacle(cfg.params["boundary"], lat.dim(), "experiment.boundary");
        const GridFunction f = resolve_obstacle(spec, mask, cfg.seed);
        const DirichletResult dr = dirichlet_psh_extension(f, cone, solver);
        if (!dr.envelope.converged)
          throw NonConvergence("refine step h=" + std::to_string(h) + " stalled");
        row.mismatch = dr.boundary_mismatch;
        row.has_mismatch = true;
        for (const Point& p : pts)
          row.values.push_back(dr.envelope.envelope[nearest_closure_node(*mask, p)]);
      } else {
        const ObstacleSpec spec =
            parse_obstacle(cfg.params["obstacle"], lat.dim(), "experiment.obstacle");
        const GridFunction obstacle = resolve_obstacle(spec, mask, cfg.seed);
        const EnvelopeResult env = psh_envelope(obstacle, cone, solver);
        if (!env.converged)
          throw NonConvergence("refine step h=" + std::to_string(h) + " stalled");
        for (const Point& p : pts)
          row.values.push_back(env.envelope[nearest_closure_node(*mask, p)]);
        if (detail::duality_affordable(*mask, cone)) {
          const DualityCertificate cert =
              edwards_gap(nearest_closure_node(*mask, pts.front()), obstacle, cone, solver);
          row.gap = cert.gap;
          row.has_gap = true;
        }
      }
      table.push_back(std::move(row));
      const Row& r = table.back();
      json jr = {{"h", r.h}, {"values", r.values}};
      if (r.has_gap) jr["duality_gap"] = r.gap;
      if (r.has_mismatch) jr["boundary_mismatch"] = r.mismatch;
      results["table"].push_back(std::move(jr));
    }

    // Order estimates per probe column from consecutive triples.
    json orders = json::array();
    for (std::size_t j = 0; j < pts.size(); ++j) {
      json col = json::array();
      for (std::size_t i = 0; i + 2 < table.size(); ++i) {
        const double d1 = table[i].values[j] - table[i + 1].values[j];
        const double d2 = table[i + 1].values[j] - table[i + 2].values[j];
        double p = nan;
        if (d1 != 0.0 && d2 != 0.0)
          p = std::log(std::abs(d1 / d2)) / std::log(table[i].h / table[i + 1].h);
        col.push_back(std::isnan(p) ? json() : json(p));
      }
      orders.push_back(std::move(col));
    }
    results["observed_order"] = std::move(orders);

    artifacts.add_text("refine.csv", [&](std::ostream& os) {
      os << "h";
      for (std::size_t j = 0; j < pts.size(); ++j) os << ",value_" << (j + 1);
      os << ",duality_gap,boundary_mismatch\n";
      char buf[64];
      for (const Row& row : table) {
        std::snprintf(buf, sizeof buf, "%.17g", row.h);
        os << buf;
        for (const double v : row.values) {
          std::snprintf(buf, sizeof buf, "%.17g", v);
          os << ',' << buf;
        }
        os << ',';
        if (row.has_gap) {
          std::snprintf(buf, sizeof buf, "%.17g", row.gap);
          os << buf;
        }
        os << ',';
        if (row.has_mismatch) {
          std::snprintf(buf, sizeof buf, "%.17g", row.mismatch);
          os << buf;
        }
        os << '\n';
      }
    });
  } catch (const Error& err) {
    report["partial"] = true;
    report["error"] = {{"kind", error_kind_name(err.kind())}, {"what", err.what()}};
    code = exit_code_for(err.kind());
  }
  const std::chrono::duration<double> elapsed = std::chrono::steady_clock::now() - t0;

  report["manifest"] = artifacts.manifest;
  report["report_hash"] = detail::report_hash(report);
  report["timings"] = {{"total_seconds", elapsed.count()}};
  rr.report_path = dir / "report.json";
  detail::write_report(rr.report_path, report);
  rr.report = std::move(report);
  rr.exit_code = code;
  return rr;
}

inline RunResult run_refine_file(const std::string& path, const std::vector<double>& hs,
                                 const std::string& out_override, int jobs) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read config file " + path);
  json raw;
  try {
    raw = json::parse(in);
  } catch (const json::parse_error& pe) {
    throw ConfigError("config is not valid JSON: " + std::string(pe.what()));
  }
  return run_refine_json(raw, hs, out_override, jobs);
}

} // namespace pluripot
