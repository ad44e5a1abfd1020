#pragma once

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "sgfem/basis.hpp"
#include "sgfem/error.hpp"
#include "sgfem/mesh.hpp"
#include "sgfem/problem.hpp"
#include "sgfem/solver.hpp"

namespace sgfem::cli {

/// Flat key=value settings; later sources override earlier ones.
using RawConfig = std::map<std::string, std::string>;

inline const std::vector<std::string>& known_keys() {
  static const std::vector<std::string> keys{
      "problem",      "params",       "methods",       "orders",     "mesh-sizes",     "constrained",
      "control-volumes", "jacobian",  "tol",           "max-iter",   "output",         "seed",
      "interfaces",   "kappa-scale",  "kappa-rate",    "source-poly", "manufactured-poly", "length"};
  return keys;
}

inline std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

/// Lower-case, '_' -> '-', and a few singular aliases.
inline std::string normalize_key(std::string key) {
  key = trim(key);
  for (char& c : key) {
    c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    if (c == '_') c = '-';
  }
  if (key == "method") return "methods";
  if (key == "order") return "orders";
  if (key == "mesh-size") return "mesh-sizes";
  return key;
}

inline void set_key(RawConfig& raw, const std::string& key, const std::string& value) {
  const std::string k = normalize_key(key);
  const auto& keys = known_keys();
  if (std::find(keys.begin(), keys.end(), k) == keys.end()) {
    throw Error(ErrorCode::InvalidArgument, "unknown config key '" + key + "'");
  }
  raw[k] = trim(value);
}

/// Parses "key = value" lines; '#' starts a comment.
inline RawConfig parse_config_text(const std::string& text) {
  RawConfig raw;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw Error(ErrorCode::InvalidArgument, "config line " + std::to_string(lineno) + ": expected key = value");
    }
    set_key(raw, line.substr(0, eq), line.substr(eq + 1));
  }
  return raw;
}

inline RawConfig parse_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::InvalidArgument, "cannot read config file '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config_text(ss.str());
}

inline std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream in(s);
  while (std::getline(in, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

inline double parse_double(const std::string& key, const std::string& s) {
  try {
    std::size_t pos = 0;
    const double v = std::stod(s, &pos);
    if (pos != s.size() || !std::isfinite(v)) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw Error(ErrorCode::InvalidArgument, "key '" + key + "': '" + s + "' is not a finite number");
  }
}

inline long long parse_int(const std::string& key, const std::string& s) {
  try {
    std::size_t pos = 0;
    const long long v = std::stoll(s, &pos);
    if (pos != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw Error(ErrorCode::InvalidArgument, "key '" + key + "': '" + s + "' is not an integer");
  }
}

inline std::vector<double> parse_doubles(const std::string& key, const std::string& s) {
  std::vector<double> out;
  for (const auto& item : split_list(s)) out.push_back(parse_double(key, item));
  return out;
}

inline std::vector<int> parse_ints(const std::string& key, const std::string& s) {
  std::vector<int> out;
  for (const auto& item : split_list(s)) out.push_back(static_cast<int>(parse_int(key, item)));
  return out;
}

inline bool parse_bool(const std::string& key, const std::string& s) {
  std::string v = s;
  for (char& c : v) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  throw Error(ErrorCode::InvalidArgument, "key '" + key + "': '" + s + "' is not a boolean");
}

enum class ProblemKind { Example1, Example2, Custom };

struct RunConfig {
  ProblemKind problem = ProblemKind::Example1;
  std::vector<double> params;
  std::vector<Method> methods{Method::Fem, Method::Sgfem};
  std::vector<int> orders{1, 2, 3, 4};
  std::vector<int> mesh_sizes{10, 20, 40, 80, 160};
  bool constrained = false;
  ControlVolumeKind control_volumes = ControlVolumeKind::DualMidpoint;
  ConstrainedJacobian jacobian = ConstrainedJacobian::Modified;
  double tol = 1e-10;
  int max_iter = 50;
  std::string output = "out";
  std::uint64_t seed = 0;

  double length = 1.0;
  std::vector<double> interfaces;
  std::vector<double> kappa_scale;
  std::vector<double> kappa_rate;
  std::vector<double> source_poly;
  std::vector<double> manufactured_poly;

  /// Keys given explicitly, so commands can pick their own defaults.
  std::vector<std::string> given;

  [[nodiscard]] bool has(const std::string& key) const {
    return std::find(given.begin(), given.end(), key) != given.end();
  }
};

inline std::string_view to_string(ProblemKind k) noexcept {
  switch (k) {
    case ProblemKind::Example1: return "example1";
    case ProblemKind::Example2: return "example2";
    case ProblemKind::Custom: return "custom";
  }
  return "unknown";
}

/// Interprets raw settings and checks the grid: orders in 1..4, mesh sizes
/// positive and strictly increasing, every mesh admissible for the
/// interfaces.
inline RunConfig build_config(const RawConfig& raw) {
  RunConfig cfg;
  for (const auto& [k, v] : raw) cfg.given.push_back(k);
  auto get = [&](const std::string& k) -> std::optional<std::string> {
    auto it = raw.find(k);
    if (it == raw.end()) return std::nullopt;
    return it->second;
  };
  if (auto v = get("problem")) {
    if (*v == "example1") {
      cfg.problem = ProblemKind::Example1;
    } else if (*v == "example2") {
      cfg.problem = ProblemKind::Example2;
    } else if (*v == "custom") {
      cfg.problem = ProblemKind::Custom;
    } else {
      throw Error(ErrorCode::InvalidArgument, "unknown problem '" + *v + "'");
    }
  }
  if (auto v = get("params")) cfg.params = parse_doubles("params", *v);
  if (auto v = get("methods")) {
    cfg.methods.clear();
    for (const auto& m : split_list(*v)) cfg.methods.push_back(parse_method(m));
    if (cfg.methods.empty()) throw Error(ErrorCode::InvalidArgument, "methods list is empty");
  }
  if (auto v = get("orders")) cfg.orders = parse_ints("orders", *v);
  if (auto v = get("mesh-sizes")) cfg.mesh_sizes = parse_ints("mesh-sizes", *v);
  if (auto v = get("constrained")) cfg.constrained = parse_bool("constrained", *v);
  if (auto v = get("control-volumes")) cfg.control_volumes = parse_control_volume_kind(*v);
  if (auto v = get("jacobian")) {
    if (*v == "modified") {
      cfg.jacobian = ConstrainedJacobian::Modified;
    } else if (*v == "exact") {
      cfg.jacobian = ConstrainedJacobian::Exact;
    } else {
      throw Error(ErrorCode::InvalidArgument, "jacobian must be 'modified' or 'exact'");
    }
  }
  if (auto v = get("tol")) cfg.tol = parse_double("tol", *v);
  if (auto v = get("max-iter")) cfg.max_iter = static_cast<int>(parse_int("max-iter", *v));
  if (auto v = get("output")) cfg.output = *v;
  if (auto v = get("seed")) {
    const long long s = parse_int("seed", *v);
    if (s < 0) throw Error(ErrorCode::InvalidArgument, "seed must be non-negative");
    cfg.seed = static_cast<std::uint64_t>(s);
  }
  if (auto v = get("length")) cfg.length = parse_double("length", *v);
  if (auto v = get("interfaces")) cfg.interfaces = parse_doubles("interfaces", *v);
  if (auto v = get("kappa-scale")) cfg.kappa_scale = parse_doubles("kappa-scale", *v);
  if (auto v = get("kappa-rate")) cfg.kappa_rate = parse_doubles("kappa-rate", *v);
  if (auto v = get("source-poly")) cfg.source_poly = parse_doubles("source-poly", *v);
  if (auto v = get("manufactured-poly")) cfg.manufactured_poly = parse_doubles("manufactured-poly", *v);

  if (cfg.orders.empty()) throw Error(ErrorCode::InvalidArgument, "orders list is empty");
  for (int p : cfg.orders) {
    if (p < 1 || p > 4) throw Error(ErrorCode::UnsupportedOrder, "order " + std::to_string(p) + " not in 1..4");
  }
  if (cfg.mesh_sizes.empty()) throw Error(ErrorCode::InvalidArgument, "mesh-sizes list is empty");
  for (std::size_t i = 0; i < cfg.mesh_sizes.size(); ++i) {
    if (cfg.mesh_sizes[i] < 2) throw Error(ErrorCode::InvalidArgument, "mesh sizes must be >= 2");
    if (i > 0 && cfg.mesh_sizes[i] <= cfg.mesh_sizes[i - 1]) {
      throw Error(ErrorCode::InvalidArgument, "mesh sizes must be strictly increasing");
    }
  }
  if (!(cfg.tol > 0.0)) throw Error(ErrorCode::InvalidArgument, "tol must be positive");
  if (cfg.max_iter < 1) throw Error(ErrorCode::InvalidArgument, "max-iter must be >= 1");
  if (cfg.problem != ProblemKind::Custom) {
    if (cfg.has("interfaces") || cfg.has("kappa-scale") || cfg.has("kappa-rate") || cfg.has("source-poly") ||
        cfg.has("manufactured-poly") || cfg.has("length")) {
      throw Error(ErrorCode::InvalidArgument, "custom-problem keys given for a built-in example");
    }
  }
  return cfg;
}

namespace detail {

inline double poly_eval(const std::vector<double>& c, double x, int deriv = 0) {
  double v = 0.0;
  for (int k = static_cast<int>(c.size()) - 1; k >= deriv; --k) {
    double coef = c[static_cast<std::size_t>(k)];
    for (int d = 0; d < deriv; ++d) coef *= k - d;
    v = v * x + coef;
  }
  return v;
}

}  // namespace detail

/// Problem described by the config. Custom problems use kappa_j =
/// scale_j * exp(rate_j * u); the source is either a polynomial or derived
/// from a manufactured polynomial solution, which then serves as reference.
inline Problem build_problem(const RunConfig& cfg) {
  switch (cfg.problem) {
    case ProblemKind::Example1: {
      const auto& a = cfg.params.empty() ? std::vector<double>{0.01, -6.0, 1.0} : cfg.params;
      if (a.size() != 3) throw Error(ErrorCode::PieceCountMismatch, "example1 takes 3 parameters");
      return example1(a[0], a[1], a[2]);
    }
    case ProblemKind::Example2: {
      const auto& a = cfg.params.empty() ? std::vector<double>{1.0, 0.05, 100.0, 0.1} : cfg.params;
      if (a.size() != 4) throw Error(ErrorCode::PieceCountMismatch, "example2 takes 4 parameters");
      return example2(a[0], a[1], a[2], a[3]);
    }
    case ProblemKind::Custom: break;
  }
  if (cfg.kappa_scale.empty()) throw Error(ErrorCode::InvalidArgument, "custom problem needs kappa-scale");
  std::vector<double> rates = cfg.kappa_rate;
  if (rates.empty()) rates.assign(cfg.kappa_scale.size(), 0.0);
  if (!cfg.manufactured_poly.empty() && !cfg.source_poly.empty()) {
    throw Error(ErrorCode::InvalidArgument, "give either source-poly or manufactured-poly, not both");
  }
  if (cfg.manufactured_poly.empty()) {
    return custom_exponential_problem(cfg.interfaces, cfg.kappa_scale, rates,
                                      cfg.source_poly.empty() ? std::vector<double>{1.0} : cfg.source_poly,
                                      cfg.length);
  }
  const auto u = cfg.manufactured_poly;
  const double L = cfg.length;
  const double scale = 1.0 + std::abs(detail::poly_eval(u, 0.5 * L));
  if (std::abs(detail::poly_eval(u, 0.0)) > 1e-12 * scale || std::abs(detail::poly_eval(u, L)) > 1e-12 * scale) {
    throw Error(ErrorCode::InvalidArgument, "manufactured solution must vanish at both ends");
  }
  Problem prob = custom_exponential_problem(cfg.interfaces, cfg.kappa_scale, rates, {0.0}, L);
  const std::vector<double> scales = cfg.kappa_scale;
  for (std::size_t k = 0; k < cfg.interfaces.size(); ++k) {
    const double g = cfg.interfaces[k];
    const double ug = detail::poly_eval(u, g);
    const double dg = detail::poly_eval(u, g, 1);
    const double left = scales[k] * std::exp(rates[k] * ug) * dg;
    const double right = scales[k + 1] * std::exp(rates[k + 1] * ug) * dg;
    if (std::abs(left - right) > 1e-12 * (1.0 + std::abs(left))) {
      throw Error(ErrorCode::InvalidArgument, "manufactured solution has a flux jump at an interface");
    }
  }
  const CoefficientModel model = prob.model;
  prob.source = [u, scales, rates, model](double x) {
    const auto j = static_cast<std::size_t>(model.subdomain(x));
    const double v = detail::poly_eval(u, x);
    const double d1 = detail::poly_eval(u, x, 1);
    const double d2 = detail::poly_eval(u, x, 2);
    return -scales[j] * std::exp(rates[j] * v) * (rates[j] * d1 * d1 + d2);
  };
  ReferenceSolution ref;
  ref.evaluate = [u](double x, Side) -> ReferenceSolution::Value {
    return {detail::poly_eval(u, x), detail::poly_eval(u, x, 1)};
  };
  prob.reference = std::move(ref);
  return prob;
}

/// Throws the mesh module's error for the first inadmissible (N, interfaces)
/// pair.
inline void check_grid(const RunConfig& cfg, const Problem& prob) {
  for (int n : cfg.mesh_sizes) (void)Mesh::uniform(prob.length, n, prob.interfaces);
}

}  // namespace sgfem::cli
