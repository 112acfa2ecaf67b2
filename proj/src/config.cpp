#include "twistres/config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include "twistres/errors.hpp"

namespace twistres {

using nlohmann::json;

namespace {

// nlohmann keeps the last duplicate silently; detect duplicates with a parser
// callback tracking the keys of each open object.
json parse_strict(const std::string& text) {
  std::vector<std::set<std::string>> stack;
  std::string last_key;
  auto cb = [&](int /*depth*/, json::parse_event_t event, json& parsed) {
    switch (event) {
      case json::parse_event_t::object_start:
        stack.emplace_back();
        break;
      case json::parse_event_t::key: {
        const std::string key = parsed.get<std::string>();
        if (!stack.back().insert(key).second)
          throw ConfigError("duplicate config field '" + key + "'");
        break;
      }
      case json::parse_event_t::object_end:
        stack.pop_back();
        break;
      default:
        break;
    }
    return true;
  };
  try {
    return json::parse(text, cb);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config parse error: ") + e.what());
  }
}

void check_known_fields(const json& j, const std::string& where,
                        const std::set<std::string>& allowed) {
  for (auto it = j.begin(); it != j.end(); ++it)
    if (!allowed.count(it.key()))
      throw ConfigError("unknown config field '" + where + "." + it.key() +
                        "'");
}

double get_num(const json& j, const std::string& key, double dflt) {
  if (!j.contains(key)) return dflt;
  if (!j.at(key).is_number())
    throw ConfigError("config field '" + key + "' must be a number");
  return j.at(key).get<double>();
}

}  // namespace

TwistProfile ProfileSpec::build() const {
  return make_profile(family, amplitude, width, alpha);
}

RunConfig parse_config(const std::string& text) {
  const json j = parse_strict(text);
  check_known_fields(j, "", {"schema_version", "domain", "profile", "modes",
                             "threshold", "solver", "deltas", "output"});
  RunConfig cfg;
  if (j.contains("schema_version") &&
      j.at("schema_version").get<int>() != kSchemaVersion)
    throw ConfigError("unsupported schema_version");

  if (!j.contains("domain")) throw ConfigError("config needs a 'domain' block");
  {
    const json& d = j.at("domain");
    check_known_fields(d, "domain",
                       {"kind", "width", "height", "radius", "vertices",
                        "center", "discretization", "h"});
    const std::string kind = d.value("kind", "rectangle");
    std::array<double, 2> center{0.0, 0.0};
    if (d.contains("center")) {
      const auto c = d.at("center").get<std::vector<double>>();
      if (c.size() != 2) throw ConfigError("domain.center needs 2 entries");
      center = {c[0], c[1]};
    }
    if (kind == "rectangle") {
      cfg.domain.domain = Domain2D::rectangle(get_num(d, "width", 1.0),
                                              get_num(d, "height", 1.0), center);
    } else if (kind == "disc") {
      cfg.domain.domain = Domain2D::disc(get_num(d, "radius", 1.0), center);
    } else if (kind == "polygon") {
      if (!d.contains("vertices"))
        throw ConfigError("polygon domain needs 'vertices'");
      std::vector<std::array<double, 2>> verts;
      for (const auto& v : d.at("vertices")) {
        const auto p = v.get<std::vector<double>>();
        if (p.size() != 2) throw ConfigError("polygon vertex needs 2 entries");
        verts.push_back({p[0], p[1]});
      }
      cfg.domain.domain = Domain2D::polygon(std::move(verts));
    } else {
      throw ConfigError("unknown domain kind '" + kind + "'");
    }
    std::string disc = d.value("discretization",
                               kind == "polygon" ? "fd" : "analytic");
    if (disc == "analytic") {
      if (kind == "polygon")
        throw ConfigError("polygon domains have no analytic mode backend");
      cfg.domain.backend = ModeBackend::Analytic;
    } else if (disc == "fd") {
      cfg.domain.backend = ModeBackend::FiniteDifference;
    } else {
      throw ConfigError("domain.discretization must be 'analytic' or 'fd'");
    }
    cfg.domain.h = get_num(d, "h", 1.0 / 64);
    if (!(cfg.domain.h > 0)) throw ConfigError("domain.h must be positive");
  }

  if (!j.contains("profile"))
    throw ConfigError("config needs a 'profile' block");
  {
    const json& p = j.at("profile");
    check_known_fields(p, "profile", {"family", "amplitude", "width", "alpha"});
    cfg.profile.family =
        profile_family_from_string(p.value("family", "gaussian"));
    cfg.profile.amplitude = get_num(p, "amplitude", 1.0);
    cfg.profile.width = get_num(p, "width", 1.0);
    cfg.profile.alpha = get_num(p, "alpha", 0.0);
    cfg.profile.build();  // validates
  }

  if (j.contains("modes")) {
    const json& m = j.at("modes");
    check_known_fields(m, "modes", {"Q", "cluster_tol"});
    cfg.Q = static_cast<int>(get_num(m, "Q", 60));
    cfg.cluster_tol = get_num(m, "cluster_tol", -1.0);
  }
  if (cfg.Q < 2) throw ConfigError("modes.Q must be >= 2");

  if (j.contains("threshold")) {
    const json& t = j.at("threshold");
    check_known_fields(t, "threshold", {"q0"});
    cfg.q0 = static_cast<int>(get_num(t, "q0", 1));
  }
  if (cfg.q0 < 1) throw ConfigError("threshold.q0 must be >= 1");

  if (j.contains("solver")) {
    const json& s = j.at("solver");
    check_known_fields(s, "solver",
                       {"L", "h3", "N", "r", "tol_k", "contour_rho",
                        "contour_nodes"});
    cfg.solver.L = get_num(s, "L", 15.0);
    cfg.solver.h3 = get_num(s, "h3", 1.0 / 32);
    cfg.solver.N = get_num(s, "N", 0.0);
    cfg.solver.r = get_num(s, "r", 0.0);
    cfg.solver.tol_k = get_num(s, "tol_k", 1e-10);
    cfg.solver.contour_rho = get_num(s, "contour_rho", 0.0);
    cfg.solver.contour_nodes =
        static_cast<int>(get_num(s, "contour_nodes", 64));
  }
  cfg.solver.Q = cfg.Q;
  if (!(cfg.solver.h3 > 0) || !(cfg.solver.L > 0))
    throw ConfigError("solver.L and solver.h3 must be positive");
  // static window check; spectral constraints (r < r0) are re-checked when
  // the modes are known
  {
    const TwistProfile prof = cfg.profile.build();
    const double alpha = prof.alpha();
    if (cfg.solver.N > 0.0 && !(cfg.solver.N < alpha / 2.0))
      throw ConfigError("solver.N violates N < alpha/2 (N = " +
                        std::to_string(cfg.solver.N) + ", alpha/2 = " +
                        std::to_string(alpha / 2.0) + ")");
    if (cfg.solver.N > 0.0 && cfg.solver.r > 0.0 &&
        !(cfg.solver.r < cfg.solver.N))
      throw ConfigError("solver violates r < N");
  }

  if (j.contains("deltas")) {
    cfg.deltas = j.at("deltas").get<std::vector<double>>();
    for (std::size_t i = 0; i < cfg.deltas.size(); ++i) {
      if (!(cfg.deltas[i] > 0.0))
        throw ConfigError("deltas must be positive");
      if (i > 0 && !(cfg.deltas[i] > cfg.deltas[i - 1]))
        throw ConfigError("deltas must be strictly ascending");
    }
  }

  if (j.contains("output")) {
    const json& o = j.at("output");
    check_known_fields(o, "output", {"dir", "format"});
    cfg.out_dir = o.value("dir", ".");
    cfg.format = o.value("format", "both");
    if (cfg.format != "json" && cfg.format != "csv" && cfg.format != "both")
      throw ConfigError("output.format must be json, csv or both");
  }
  return cfg;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

json config_to_json(const RunConfig& cfg) {
  json d;
  d["kind"] = to_string(cfg.domain.domain.kind);
  switch (cfg.domain.domain.kind) {
    case DomainKind::Rectangle:
      d["width"] = cfg.domain.domain.width;
      d["height"] = cfg.domain.domain.height;
      break;
    case DomainKind::Disc:
      d["radius"] = cfg.domain.domain.radius;
      break;
    case DomainKind::Polygon: {
      json verts = json::array();
      for (const auto& v : cfg.domain.domain.vertices)
        verts.push_back({v[0], v[1]});
      d["vertices"] = verts;
      break;
    }
  }
  d["center"] = {cfg.domain.domain.center[0], cfg.domain.domain.center[1]};
  d["discretization"] =
      cfg.domain.backend == ModeBackend::Analytic ? "analytic" : "fd";
  d["h"] = cfg.domain.h;

  json p;
  p["family"] = to_string(cfg.profile.family);
  p["amplitude"] = cfg.profile.amplitude;
  p["width"] = cfg.profile.width;
  p["alpha"] = cfg.profile.alpha;

  json s;
  s["L"] = cfg.solver.L;
  s["h3"] = cfg.solver.h3;
  s["N"] = cfg.solver.N;
  s["r"] = cfg.solver.r;
  s["tol_k"] = cfg.solver.tol_k;
  s["contour_rho"] = cfg.solver.contour_rho;
  s["contour_nodes"] = cfg.solver.contour_nodes;

  json out;
  out["schema_version"] = kSchemaVersion;
  out["domain"] = d;
  out["profile"] = p;
  out["modes"] = {{"Q", cfg.Q}, {"cluster_tol", cfg.cluster_tol}};
  out["threshold"] = {{"q0", cfg.q0}};
  out["solver"] = s;
  out["deltas"] = cfg.deltas;
  out["output"] = {{"dir", cfg.out_dir}, {"format", cfg.format}};
  return out;
}

ModeSet build_configured_modes(const RunConfig& cfg) {
  const Domain2D& dom = cfg.domain.domain;
  if (cfg.domain.backend == ModeBackend::Analytic) {
    if (dom.kind == DomainKind::Rectangle)
      return analytic_rectangle_modes(dom.width, dom.height, cfg.Q, dom.center,
                                      cfg.cluster_tol);
    if (dom.kind == DomainKind::Disc)
      return analytic_disc_modes(dom.radius, cfg.Q, dom.center,
                                 cfg.cluster_tol);
    throw ConfigError("no analytic modes for this domain kind");
  }
  return build_modes(dom, cfg.domain.h, cfg.Q, cfg.cluster_tol);
}

}  // namespace twistres
