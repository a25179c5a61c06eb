#pragma once

#include <cmath>
#include <functional>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "json.hpp"

#include "fracpx/error.hpp"
#include "fracpx/numeric.hpp"

namespace fracpx::catalog {

using json = nlohmann::json;

/// Named closed form: `{"kind": ..., "params": {...}}`.
struct Spec {
  std::string kind;
  std::map<std::string, double> params;
  std::vector<double> coefficients;  // polynomial only
};

struct KindInfo {
  std::map<std::string, double> defaults;
  bool takes_coefficients = false;
};

inline const std::map<std::string, KindInfo>& function_kinds() {
  static const std::map<std::string, KindInfo> k{
      {"zero", {}},
      {"constant", {{{"value", 0.0}}}},
      {"gaussian", {{{"amplitude", 1.0}, {"center", 0.0}, {"width", 1.0}, {"offset", 0.0}}}},
      {"sine", {{{"amplitude", 1.0}, {"frequency", 1.0}, {"phase", 0.0}, {"offset", 0.0}}}},
      {"polynomial", {{}, true}},
  };
  return k;
}

inline const std::map<std::string, KindInfo>& field_kinds() {
  static const std::map<std::string, KindInfo> k{
      {"constant", {{{"value", 2.0}}}},
      {"affine", {{{"base", 2.0}, {"slope", 0.0}}}},
      {"abs_diff", {{{"base", 2.0}, {"slope", 0.0}}}},
      {"sum_square", {{{"base", 2.0}, {"coefficient", 0.0}}}},
      {"gaussian", {{{"base", 2.0}, {"amplitude", 0.0}, {"width", 1.0}}}},
      {"radial", {{{"base", 2.0}, {"coefficient", 0.0}}}},
      {"asymmetric_affine", {{{"base", 2.0}, {"slope", 0.0}}}},
  };
  return k;
}

inline const std::map<std::string, KindInfo>& scalar_exponent_kinds() {
  static const std::map<std::string, KindInfo> k{
      {"constant", {{{"value", 2.0}}}},
      {"affine", {{{"base", 2.0}, {"slope", 0.0}}}},
      {"gaussian", {{{"base", 2.0}, {"amplitude", 0.0}, {"center", 0.0}, {"width", 1.0}}}},
      {"radial", {{{"base", 2.0}, {"coefficient", 0.0}}}},
  };
  return k;
}

inline const std::map<std::string, KindInfo>& nonlinearity_kinds() {
  static const std::map<std::string, KindInfo> k{
      {"zero", {}},
      {"source", {}},
      {"arctan", {{{"epsilon", 0.05}}}},
      {"linear", {{{"lambda", 0.0}}}},
      {"power", {{{"coefficient", 1.0}}}},
  };
  return k;
}

/// Parses and validates one catalog entry, appending field errors to `errors`.
inline Spec parse_spec(const json& j, const std::map<std::string, KindInfo>& kinds, const std::string& where,
                       std::vector<std::string>& errors, const std::set<std::string>& extra_keys = {}) {
  Spec s;
  if (!j.is_object()) {
    errors.push_back(where + ": expected an object with 'kind' and 'params'");
    return s;
  }
  for (auto it = j.begin(); it != j.end(); ++it) {
    if (it.key() != "kind" && it.key() != "params" && !extra_keys.count(it.key())) {
      errors.push_back(where + "." + it.key() + ": unknown key");
    }
  }
  if (!j.contains("kind") || !j["kind"].is_string()) {
    errors.push_back(where + ".kind: missing or not a string");
    return s;
  }
  s.kind = j["kind"].get<std::string>();
  auto info = kinds.find(s.kind);
  if (info == kinds.end()) {
    errors.push_back(where + ".kind: unknown kind '" + s.kind + "'");
    return s;
  }
  s.params = info->second.defaults;
  if (j.contains("params")) {
    const auto& p = j["params"];
    if (!p.is_object()) {
      errors.push_back(where + ".params: expected an object");
      return s;
    }
    for (auto it = p.begin(); it != p.end(); ++it) {
      if (info->second.takes_coefficients && it.key() == "coefficients") {
        if (!it.value().is_array()) {
          errors.push_back(where + ".params.coefficients: expected an array of numbers");
          continue;
        }
        for (const auto& c : it.value()) {
          if (!c.is_number()) {
            errors.push_back(where + ".params.coefficients: expected numbers");
            break;
          }
          s.coefficients.push_back(c.get<double>());
        }
        continue;
      }
      if (!s.params.count(it.key())) {
        errors.push_back(where + ".params." + it.key() + ": unknown parameter for kind '" + s.kind + "'");
        continue;
      }
      if (!it.value().is_number()) {
        errors.push_back(where + ".params." + it.key() + ": expected a number");
        continue;
      }
      s.params[it.key()] = it.value().get<double>();
    }
  }
  return s;
}

inline std::function<double(double)> make_function(const Spec& s) {
  const auto& p = s.params;
  if (s.kind == "zero") return [](double) { return 0.0; };
  if (s.kind == "constant") return [v = p.at("value")](double) { return v; };
  if (s.kind == "gaussian") {
    return [a = p.at("amplitude"), c = p.at("center"), w = p.at("width"), o = p.at("offset")](double x) {
      const double z = (x - c) / w;
      return o + a * std::exp(-z * z);
    };
  }
  if (s.kind == "sine") {
    return [a = p.at("amplitude"), f = p.at("frequency"), ph = p.at("phase"), o = p.at("offset")](double x) {
      return o + a * std::sin(f * x + ph);
    };
  }
  if (s.kind == "polynomial") {
    return [c = s.coefficients](double x) {
      double v = 0.0;
      for (auto it = c.rbegin(); it != c.rend(); ++it) v = v * x + *it;
      return v;
    };
  }
  throw Error(Errc::config, "unknown function kind '" + s.kind + "'");
}

inline std::function<double(double, double)> make_field(const Spec& s) {
  const auto& p = s.params;
  if (s.kind == "constant") return [v = p.at("value")](double, double) { return v; };
  if (s.kind == "affine") return [b = p.at("base"), m = p.at("slope")](double x, double y) { return b + m * (x + y); };
  if (s.kind == "abs_diff") {
    return [b = p.at("base"), m = p.at("slope")](double x, double y) { return b + m * std::abs(x - y); };
  }
  if (s.kind == "sum_square") {
    return [b = p.at("base"), c = p.at("coefficient")](double x, double y) { return b + c * (x + y) * (x + y); };
  }
  if (s.kind == "gaussian") {
    return [b = p.at("base"), a = p.at("amplitude"), w = p.at("width")](double x, double y) {
      const double z = (x - y) / w;
      return b + a * std::exp(-z * z);
    };
  }
  if (s.kind == "radial") {
    return [b = p.at("base"), c = p.at("coefficient")](double x, double y) { return b + c * (x * x + y * y); };
  }
  if (s.kind == "asymmetric_affine") {
    return [b = p.at("base"), m = p.at("slope")](double x, double) { return b + m * x; };
  }
  throw Error(Errc::config, "unknown exponent kind '" + s.kind + "'");
}

inline std::function<double(double)> make_scalar_exponent(const Spec& s) {
  const auto& p = s.params;
  if (s.kind == "constant") return [v = p.at("value")](double) { return v; };
  if (s.kind == "affine") return [b = p.at("base"), m = p.at("slope")](double x) { return b + m * x; };
  if (s.kind == "gaussian") {
    return [b = p.at("base"), a = p.at("amplitude"), c = p.at("center"), w = p.at("width")](double x) {
      const double z = (x - c) / w;
      return b + a * std::exp(-z * z);
    };
  }
  if (s.kind == "radial") return [b = p.at("base"), c = p.at("coefficient")](double x) { return b + c * x * x; };
  throw Error(Errc::config, "unknown scalar exponent kind '" + s.kind + "'");
}

/// f(x, t), its t-antiderivative and a growth constant C that satisfies the
/// bound for the given trace p(x, x) wherever the form allows it.
struct NonlinearityForms {
  std::function<double(double, double)> f;
  std::function<double(double, double)> potential;
  double default_growth;
};

inline NonlinearityForms make_nonlinearity(const Spec& s, std::function<double(double)> a,
                                           std::function<double(double)> pbar) {
  const auto& p = s.params;
  if (s.kind == "zero") return {[](double, double) { return 0.0; }, [](double, double) { return 0.0; }, 0.0};
  if (s.kind == "source") {
    return {[a](double x, double) { return a(x); }, [a](double x, double t) { return a(x) * t; }, 0.0};
  }
  if (s.kind == "arctan") {
    const double e = p.at("epsilon");
    return {[a, e](double x, double t) { return a(x) + e * std::atan(t); },
            [a, e](double x, double t) { return a(x) * t + e * (t * std::atan(t) - 0.5 * std::log1p(t * t)); },
            std::abs(e)};
  }
  if (s.kind == "linear") {
    const double l = p.at("lambda");
    return {[a, l](double x, double t) { return a(x) + l * t; },
            [a, l](double x, double t) { return a(x) * t + 0.5 * l * t * t; }, std::abs(l)};
  }
  if (s.kind == "power") {
    // a(x) + c |t|^{p(x,x)-2} t
    const double c = p.at("coefficient");
    return {[a, c, pbar](double x, double t) { return a(x) + c * signed_power(t, pbar(x)); },
            [a, c, pbar](double x, double t) {
              const double q = pbar(x);
              return a(x) * t + c * std::pow(std::abs(t), q) / q;
            },
            std::abs(c)};
  }
  throw Error(Errc::config, "unknown nonlinearity kind '" + s.kind + "'");
}

}  // namespace fracpx::catalog
