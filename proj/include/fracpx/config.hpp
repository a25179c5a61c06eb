#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "fracpx/catalog.hpp"
#include "fracpx/error.hpp"
#include "fracpx/exponents.hpp"
#include "fracpx/mesh.hpp"

namespace fracpx {

enum class Mode { validate, poisson, semilinear, decompose, verify };

inline const char* mode_name(Mode m) {
  switch (m) {
    case Mode::validate: return "validate";
    case Mode::poisson: return "poisson";
    case Mode::semilinear: return "semilinear";
    case Mode::decompose: return "decompose";
    case Mode::verify: return "verify";
  }
  return "?";
}

inline std::optional<Mode> parse_mode(const std::string& s) {
  for (Mode m : {Mode::validate, Mode::poisson, Mode::semilinear, Mode::decompose, Mode::verify}) {
    if (s == mode_name(m)) return m;
  }
  return std::nullopt;
}

inline const std::vector<std::string>& known_checks() {
  static const std::vector<std::string> k{"norm_modular", "holder",     "power_norm",   "norm_of_one",
                                          "poincare",     "estimate",   "nemytsky_bound", "equivalence"};
  return k;
}

/// Every configuration error found in one pass, one line per field.
class ConfigError : public Error {
 public:
  explicit ConfigError(std::vector<std::string> errors)
      : Error(Errc::config, join(errors)), errors_(std::move(errors)) {}
  const std::vector<std::string>& errors() const { return errors_; }

 private:
  static std::string join(const std::vector<std::string>& e) {
    std::string s = "invalid configuration:";
    for (const auto& x : e) s += "\n  " + x;
    return s;
  }
  std::vector<std::string> errors_;
};

struct RunConfig {
  Mode mode = Mode::poisson;
  double R = 4.0;
  int n_cells = 0;
  std::vector<Interval> omega;
  double s = 0.4;
  int dimension = 1;
  catalog::Spec exponent;
  std::optional<catalog::Spec> r_exponent;
  catalog::Spec source{"zero", {}, {}};
  catalog::Spec boundary{"zero", {}, {}};
  catalog::Spec nonlinearity{"zero", {}, {}};
  catalog::Spec a{"zero", {}, {}};
  std::optional<double> C_growth;
  bool tails = true;
  double el_residual = 1e-8;
  int max_iterations = 50000;
  double theta = 0.5;
  int fp_max_iter = 200;
  double fp_tol = 1e-8;
  double inner_residual = 1e-10;
  bool adaptive_damping = true;
  int shells = 3;
  int max_sweeps = 200;
  double sweep_tolerance = 1e-8;
  double residual_gate = 1e-5;
  std::vector<std::string> checks;
  int samples = 100;
  std::string out_dir = "out";
  bool dump_weights = false;
  std::uint64_t seed = 0;
  /// The parsed document, echoed into the report.
  nlohmann::json document;
};

namespace detail {

using json = nlohmann::json;

class Reader {
 public:
  std::vector<std::string> errors;

  /// Rejects keys of `obj` outside `allowed`.
  void keys(const json& obj, const std::string& where, std::initializer_list<const char*> allowed) {
    if (!obj.is_object()) {
      errors.push_back(where + ": expected an object");
      return;
    }
    std::set<std::string> ok(allowed.begin(), allowed.end());
    for (auto it = obj.begin(); it != obj.end(); ++it) {
      if (!ok.count(it.key())) errors.push_back(join(where, it.key()) + ": unknown key");
    }
  }

  const json* section(const json& doc, const char* key, bool required) {
    if (!doc.contains(key)) {
      if (required) errors.push_back(std::string(key) + ": missing section");
      return nullptr;
    }
    const json& s = doc.at(key);
    if (!s.is_object()) {
      errors.push_back(std::string(key) + ": expected an object");
      return nullptr;
    }
    return &s;
  }

  void number(const json* obj, const std::string& where, const char* key, double& out, bool required) {
    if (!obj || !obj->contains(key)) {
      if (required) errors.push_back(join(where, key) + ": missing");
      return;
    }
    const json& v = obj->at(key);
    if (!v.is_number() || !std::isfinite(v.get<double>())) {
      errors.push_back(join(where, key) + ": expected a finite number");
      return;
    }
    out = v.get<double>();
  }

  void integer(const json* obj, const std::string& where, const char* key, int& out, bool required) {
    if (!obj || !obj->contains(key)) {
      if (required) errors.push_back(join(where, key) + ": missing");
      return;
    }
    const json& v = obj->at(key);
    if (!v.is_number_integer()) {
      errors.push_back(join(where, key) + ": expected an integer");
      return;
    }
    out = v.get<int>();
  }

  void boolean(const json* obj, const std::string& where, const char* key, bool& out) {
    if (!obj || !obj->contains(key)) return;
    const json& v = obj->at(key);
    if (!v.is_boolean()) {
      errors.push_back(join(where, key) + ": expected true or false");
      return;
    }
    out = v.get<bool>();
  }

  void positive(double v, const std::string& field) {
    if (!(v > 0.0)) errors.push_back(field + ": must be positive");
  }
  void positive(int v, const std::string& field) {
    if (v <= 0) errors.push_back(field + ": must be positive");
  }

 private:
  static std::string join(const std::string& where, const std::string& key) {
    return where.empty() ? key : where + "." + key;
  }
};

}  // namespace detail

/// Strict parse: unknown keys, wrong types and out-of-range values are all
/// collected and thrown together as a ConfigError.
inline RunConfig parse_config(const std::string& text, std::optional<Mode> mode = std::nullopt) {
  using json = nlohmann::json;
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError({std::string("document: ") + e.what()});
  }
  if (!doc.is_object()) throw ConfigError({"document: expected a top-level object"});

  RunConfig c;
  c.document = doc;
  detail::Reader rd;
  rd.keys(doc, "", {"mode", "mesh", "omega", "order", "dimension", "exponent", "r_exponent", "source", "boundary",
                    "nonlinearity", "kernel", "tolerances", "fixedpoint", "decompose", "checks", "verify", "output",
                    "seed"});

  if (doc.contains("mode")) {
    const auto& m = doc["mode"];
    auto parsed = m.is_string() ? parse_mode(m.get<std::string>()) : std::nullopt;
    if (!parsed) {
      rd.errors.push_back("mode: expected one of validate, poisson, semilinear, decompose, verify");
    } else {
      c.mode = *parsed;
    }
  }
  if (mode) c.mode = *mode;

  const json* mesh = rd.section(doc, "mesh", true);
  if (mesh) rd.keys(*mesh, "mesh", {"R", "n_cells"});
  rd.number(mesh, "mesh", "R", c.R, true);
  rd.integer(mesh, "mesh", "n_cells", c.n_cells, true);

  if (const json* om = rd.section(doc, "omega", true)) {
    rd.keys(*om, "omega", {"intervals"});
    if (!om->contains("intervals") || !om->at("intervals").is_array() || om->at("intervals").empty()) {
      rd.errors.push_back("omega.intervals: expected a non-empty array of [lo, hi] pairs");
    } else {
      int k = 0;
      for (const auto& iv : om->at("intervals")) {
        if (!iv.is_array() || iv.size() != 2 || !iv[0].is_number() || !iv[1].is_number()) {
          rd.errors.push_back("omega.intervals[" + std::to_string(k) + "]: expected [lo, hi]");
        } else {
          c.omega.push_back({iv[0].get<double>(), iv[1].get<double>()});
        }
        ++k;
      }
    }
  }

  const json* order = rd.section(doc, "order", true);
  if (order) rd.keys(*order, "order", {"s"});
  rd.number(order, "order", "s", c.s, true);
  if (order && order->contains("s") && !(c.s > 0.0 && c.s < 1.0)) rd.errors.push_back("order.s: must lie in (0, 1)");

  const json* dim = rd.section(doc, "dimension", false);
  if (dim) rd.keys(*dim, "dimension", {"N"});
  rd.integer(dim, "dimension", "N", c.dimension, false);
  if (c.dimension != 1) rd.errors.push_back("dimension.N: only N = 1 is supported");

  if (!doc.contains("exponent")) {
    rd.errors.push_back("exponent: missing section");
  } else {
    c.exponent = catalog::parse_spec(doc["exponent"], catalog::field_kinds(), "exponent", rd.errors);
  }
  if (doc.contains("r_exponent")) {
    c.r_exponent = catalog::parse_spec(doc["r_exponent"], catalog::scalar_exponent_kinds(), "r_exponent", rd.errors);
  }
  if (doc.contains("source")) c.source = catalog::parse_spec(doc["source"], catalog::function_kinds(), "source", rd.errors);
  if (doc.contains("boundary")) {
    c.boundary = catalog::parse_spec(doc["boundary"], catalog::function_kinds(), "boundary", rd.errors);
  }

  const bool nonlinear = c.mode == Mode::semilinear || c.mode == Mode::decompose;
  if (doc.contains("nonlinearity")) {
    const auto& nl = doc["nonlinearity"];
    c.nonlinearity = catalog::parse_spec(nl, catalog::nonlinearity_kinds(), "nonlinearity", rd.errors, {"a", "C_growth"});
    if (nl.is_object() && nl.contains("a")) {
      c.a = catalog::parse_spec(nl["a"], catalog::function_kinds(), "nonlinearity.a", rd.errors);
    }
    if (nl.is_object() && nl.contains("C_growth")) {
      double g = 0.0;
      rd.number(&nl, "nonlinearity", "C_growth", g, false);
      if (g < 0.0) rd.errors.push_back("nonlinearity.C_growth: must be nonnegative");
      c.C_growth = g;
    }
  } else if (nonlinear) {
    rd.errors.push_back("nonlinearity: required in " + std::string(mode_name(c.mode)) + " mode");
  }

  if (const json* k = rd.section(doc, "kernel", false)) {
    rd.keys(*k, "kernel", {"tails"});
    rd.boolean(k, "kernel", "tails", c.tails);
  }
  if (const json* t = rd.section(doc, "tolerances", false)) {
    rd.keys(*t, "tolerances", {"el_residual", "max_iterations"});
    rd.number(t, "tolerances", "el_residual", c.el_residual, false);
    rd.integer(t, "tolerances", "max_iterations", c.max_iterations, false);
  }
  rd.positive(c.el_residual, "tolerances.el_residual");
  rd.positive(c.max_iterations, "tolerances.max_iterations");

  if (const json* f = rd.section(doc, "fixedpoint", false)) {
    rd.keys(*f, "fixedpoint", {"theta", "max_iter", "tol", "inner_residual", "adaptive_damping"});
    rd.number(f, "fixedpoint", "theta", c.theta, false);
    rd.integer(f, "fixedpoint", "max_iter", c.fp_max_iter, false);
    rd.number(f, "fixedpoint", "tol", c.fp_tol, false);
    rd.number(f, "fixedpoint", "inner_residual", c.inner_residual, false);
    rd.boolean(f, "fixedpoint", "adaptive_damping", c.adaptive_damping);
  }
  if (!(c.theta > 0.0 && c.theta <= 1.0)) rd.errors.push_back("fixedpoint.theta: must lie in (0, 1]");
  rd.positive(c.fp_max_iter, "fixedpoint.max_iter");
  rd.positive(c.fp_tol, "fixedpoint.tol");
  rd.positive(c.inner_residual, "fixedpoint.inner_residual");

  if (const json* d = rd.section(doc, "decompose", false)) {
    rd.keys(*d, "decompose", {"shells", "max_sweeps", "sweep_tol", "residual_gate"});
    rd.integer(d, "decompose", "shells", c.shells, false);
    rd.integer(d, "decompose", "max_sweeps", c.max_sweeps, false);
    rd.number(d, "decompose", "sweep_tol", c.sweep_tolerance, false);
    rd.number(d, "decompose", "residual_gate", c.residual_gate, false);
  }
  rd.positive(c.shells, "decompose.shells");
  rd.positive(c.max_sweeps, "decompose.max_sweeps");
  rd.positive(c.sweep_tolerance, "decompose.sweep_tol");
  rd.positive(c.residual_gate, "decompose.residual_gate");

  if (doc.contains("checks")) {
    const auto& ch = doc["checks"];
    if (!ch.is_array()) {
      rd.errors.push_back("checks: expected an array of check names");
    } else {
      std::set<std::string> seen;
      for (const auto& x : ch) {
        const auto& known = known_checks();
        if (!x.is_string() || std::find(known.begin(), known.end(), x.get<std::string>()) == known.end()) {
          rd.errors.push_back("checks: unknown check " + x.dump());
        } else if (!seen.insert(x.get<std::string>()).second) {
          rd.errors.push_back("checks: duplicate check " + x.dump());
        } else {
          c.checks.push_back(x.get<std::string>());
        }
      }
    }
  } else if (c.mode == Mode::verify) {
    for (const auto& k : known_checks()) {
      if (k != "nemytsky_bound" || doc.contains("nonlinearity")) c.checks.push_back(k);
    }
  }
  if (std::find(c.checks.begin(), c.checks.end(), "nemytsky_bound") != c.checks.end() && !doc.contains("nonlinearity")) {
    rd.errors.push_back("checks: nemytsky_bound needs a nonlinearity section");
  }

  if (const json* v = rd.section(doc, "verify", false)) {
    rd.keys(*v, "verify", {"samples"});
    rd.integer(v, "verify", "samples", c.samples, false);
  }
  rd.positive(c.samples, "verify.samples");

  if (const json* o = rd.section(doc, "output", false)) {
    rd.keys(*o, "output", {"dir", "dump_weights"});
    if (o->contains("dir")) {
      if (!o->at("dir").is_string()) {
        rd.errors.push_back("output.dir: expected a string");
      } else {
        c.out_dir = o->at("dir").get<std::string>();
      }
    }
    rd.boolean(o, "output", "dump_weights", c.dump_weights);
  }

  if (doc.contains("seed")) {
    if (!doc["seed"].is_number_unsigned()) {
      rd.errors.push_back("seed: expected a nonnegative integer");
    } else {
      c.seed = doc["seed"].get<std::uint64_t>();
    }
  }

  // Geometry errors from build_mesh are reported with their field context.
  if (mesh && !c.omega.empty() && c.n_cells > 0) {
    try {
      const Mesh m = build_mesh(c.R, c.n_cells, c.omega);
      if (rd.errors.empty() && c.exponent.kind.size()) {
        const ExponentField p(catalog::make_field(c.exponent), c.s, m, c.dimension);
        if (p.p_minus() < 1.1) {
          std::ostringstream os;
          os << "exponent: p- = " << p.p_minus() << " is below the supported minimum 1.1";
          rd.errors.push_back(os.str());
        }
      }
    } catch (const Error& e) {
      rd.errors.push_back(std::string("mesh/omega: ") + e.what());
    }
  } else if (c.n_cells <= 0 && mesh && mesh->contains("n_cells")) {
    rd.errors.push_back("mesh.n_cells: must be positive");
  }

  if (!rd.errors.empty()) throw ConfigError(rd.errors);
  return c;
}

inline RunConfig load_config(const std::string& path, std::optional<Mode> mode = std::nullopt) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::io, "cannot open config file " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), mode);
}

}  // namespace fracpx
