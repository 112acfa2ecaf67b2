#include "twistres/cli.hpp"

#include <CLI11.hpp>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <json.hpp>

#include "twistres/config.hpp"
#include "twistres/errors.hpp"
#include "twistres/threshold_asymptotics.hpp"
#include "twistres/validate.hpp"

namespace twistres {

using nlohmann::json;

namespace {

std::string num(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

json root_json(const ResonanceRoot& r) {
  json j;
  j["re_k"] = r.k.real();
  j["im_k"] = r.k.imag();
  j["residual"] = r.residual;
  j["purity"] = r.purity;
  j["predicted_re"] = r.predicted.real();
  j["predicted_im"] = r.predicted.imag();
  j["rel_deviation"] = r.rel_deviation;
  j["multiplicity"] = r.multiplicity;
  j["residue_rank"] = r.residue_rank;
  return j;
}

json report_json(const ResonanceReport& rep) {
  json j;
  j["delta"] = rep.delta;
  j["m0"] = rep.m0;
  j["winding"] = rep.winding;
  j["winding_raw"] = rep.winding_raw;
  j["origin_multiplicity"] = rep.origin_multiplicity;
  j["contour_radius"] = rep.contour_radius;
  j["delta_T_norm"] = rep.delta_T_norm;
  j["certified"] = rep.certified;
  j["roots"] = json::array();
  for (const auto& r : rep.roots) j["roots"].push_back(root_json(r));
  j["predictions"] = json::array();
  for (const auto& p : rep.predictions)
    j["predictions"].push_back({{"re", p.real()}, {"im", p.imag()}});
  j["log"] = rep.log;
  return j;
}

json upsilon_json(const UpsilonMatrix& up) {
  json j;
  j["q0"] = up.q0 + 1;
  j["m0"] = up.m0;
  j["basis"] = up.basis_id;
  j["tail_bound"] = up.tail_bound;
  json ent = json::array();
  for (int r = 0; r < up.m0; ++r) {
    json row = json::array();
    for (int c = 0; c < up.m0; ++c)
      row.push_back({{"re", up.entries(r, c).real()},
                     {"im", up.entries(r, c).imag()}});
    ent.push_back(row);
  }
  j["entries"] = ent;
  j["eigenvalues"] = json::array();
  for (int l = 0; l < up.m0; ++l)
    j["eigenvalues"].push_back(
        {{"re", up.eigenvalues[l].real()}, {"im", up.eigenvalues[l].imag()}});
  return j;
}

// one row per (delta, root); winding column repeats per delta
std::string sweep_csv(const std::vector<ResonanceReport>& reports) {
  std::string csv =
      "delta,re_k,im_k,residual,predicted_re,predicted_im,winding\n";
  for (const auto& rep : reports) {
    for (const auto& r : rep.roots) {
      csv += num(rep.delta) + ',' + num(r.k.real()) + ',' + num(r.k.imag()) +
             ',' + num(r.residual) + ',' + num(r.predicted.real()) + ',' +
             num(r.predicted.imag()) + ',' + std::to_string(rep.winding) +
             '\n';
    }
    if (rep.roots.empty())
      csv += num(rep.delta) + ",,,,,," + std::to_string(rep.winding) + '\n';
  }
  return csv;
}

struct Emitter {
  const RunConfig& cfg;
  std::filesystem::path dir;
  std::ostream& out;

  Emitter(const RunConfig& c, std::ostream& o) : cfg(c), dir(c.out_dir), out(o) {
    std::filesystem::create_directories(dir);
  }
  bool want_json() const { return cfg.format != "csv"; }
  bool want_csv() const { return cfg.format != "json"; }
  void write_json(const std::string& name, json payload) {
    if (!want_json()) return;
    payload["schema_version"] = kSchemaVersion;
    payload["config"] = config_to_json(cfg);
    std::ofstream f(dir / name);
    f << payload.dump(2) << '\n';
    out << "wrote " << (dir / name).string() << '\n';
  }
  void write_text(const std::string& name, const std::string& text) {
    if (!want_csv()) return;
    std::ofstream f(dir / name);
    f << text;
    out << "wrote " << (dir / name).string() << '\n';
  }
};

int dispatch(const std::string& command, RunConfig cfg, double delta_override,
             std::ostream& out) {
  Emitter emit(cfg, out);

  if (command == "modes") {
    const ModeSet modes = build_configured_modes(cfg);
    json j;
    j["command"] = "modes";
    j["backend"] = modes.backend_name();
    j["eigenvalues"] = modes.lambdas;
    j["lambda_next"] = modes.lambda_next;
    j["orthonormality_residual"] = modes.orthonormality_residual();
    json cl = json::array();
    for (const auto& c : modes.clusters)
      cl.push_back({{"first", c.first + 1},
                    {"m0", c.size},
                    {"lambda", c.lambda},
                    {"r0", c.r0}});
    j["clusters"] = cl;
    emit.write_json("modes.json", j);
    emit.write_text("modes.csv", modes_to_csv(modes));
    return 0;
  }

  const TwistProfile profile = cfg.profile.build();
  const ModeSet modes = build_configured_modes(cfg);
  if (cfg.q0 > static_cast<int>(modes.clusters.size()))
    throw ConfigError("threshold.q0 exceeds the computed cluster count");
  const CouplingTable couplings = coupling_table(modes, cfg.q0 - 1);

  if (command == "mu") {
    const MuResult mu = compute_mu(modes, couplings, profile);
    json j;
    j["command"] = "mu";
    j["mu"] = mu.mu;
    j["mu_direct"] = mu.mu_direct;
    j["tail_bound"] = mu.tail_bound;
    j["tail_bound_direct"] = mu.tail_bound_direct;
    j["Q"] = mu.Q;
    emit.write_json("mu.json", j);
    std::string csv = "mode,lambda,coupling,J\n";
    for (const auto& t : mu.terms)
      csv += std::to_string(t.mode + 1) + ',' + num(t.lambda) + ',' +
             num(t.coupling) + ',' + num(t.J) + '\n';
    emit.write_text("mu_terms.csv", csv);
    return 0;
  }

  if (command == "upsilon") {
    const UpsilonMatrix up = compute_upsilon(modes, couplings, profile);
    json j;
    j["command"] = "upsilon";
    j["upsilon"] = upsilon_json(up);
    if (up.m0 == 1 && cfg.q0 > 1)
      j["im_mu_open_channels"] =
          im_mu_open_channels(modes, couplings, profile);
    emit.write_json("upsilon.json", j);
    return 0;
  }

  if (command == "resonances") {
    const double delta =
        delta_override > 0 ? delta_override
                           : (cfg.deltas.empty() ? 0.02 : cfg.deltas.front());
    const ResonanceReport rep =
        find_resonances(modes, couplings, profile, cfg.solver, delta);
    json j;
    j["command"] = "resonances";
    j["report"] = report_json(rep);
    j["upsilon"] = upsilon_json(rep.upsilon);
    emit.write_json("resonances.json", j);
    emit.write_text("resonances.csv", sweep_csv({rep}));
    return 0;
  }

  if (command == "sweep") {
    const SweepResult sw =
        run_sweep(modes, couplings, profile, cfg.solver, cfg.deltas);
    json j;
    j["command"] = "sweep";
    j["deltas"] = sw.deltas;
    j["reports"] = json::array();
    for (const auto& rep : sw.reports) j["reports"].push_back(report_json(rep));
    json fits = json::array();
    for (const auto& br : sw.branches) {
      json f;
      f["c2"] = {{"re", br.fit.c2.real()}, {"im", br.fit.c2.imag()}};
      f["c3"] = {{"re", br.fit.c3.real()}, {"im", br.fit.c3.imag()}};
      f["predicted_c2"] = {{"re", br.predicted_c2.real()},
                           {"im", br.predicted_c2.imag()}};
      f["remainder_order"] = br.fit.remainder_order;
      fits.push_back(f);
    }
    j["fits"] = fits;
    emit.write_json("sweep.json", j);
    emit.write_text("sweep.csv", sweep_csv(sw.reports));
    return 0;
  }

  if (command == "validate") {
    const std::vector<PropertyCheck> checks = run_validation(cfg);
    json j;
    j["command"] = "validate";
    json arr = json::array();
    for (const auto& c : checks) {
      out << (c.pass ? "[PASS] " : "[FAIL] ") << c.name << "  measured "
          << c.measured << "  tol " << c.tolerance << '\n';
      arr.push_back({{"name", c.name},
                     {"pass", c.pass},
                     {"measured", c.measured},
                     {"tolerance", c.tolerance}});
    }
    j["checks"] = arr;
    j["all_passed"] = all_passed(checks);
    emit.write_json("validate.json", j);
    if (!all_passed(checks)) throw ConvergenceError("validation suite failed");
    return 0;
  }

  throw ConfigError("unknown command '" + command + "'");
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out,
            std::ostream& err) {
  CLI::App app{"threshold resonances of slightly twisted waveguides"};
  app.require_subcommand(1);
  std::string config_path, out_dir, format;
  double delta_override = 0.0;
  app.add_option("--config", config_path, "JSON run configuration")
      ->required();
  app.add_option("--out", out_dir, "output directory (overrides config)");
  app.add_option("--format", format, "json|csv|both (overrides config)");

  const char* names[] = {"modes", "mu", "upsilon", "resonances", "sweep",
                         "validate"};
  const char* descr[] = {"eigenvalue/cluster table",
                         "first-threshold coefficient mu",
                         "upper-threshold coefficient matrix",
                         "locate resonances at a single delta",
                         "delta sweep with quadratic fit",
                         "run the invariant suite"};
  for (int i = 0; i < 6; ++i) {
    CLI::App* sub = app.add_subcommand(names[i], descr[i]);
    if (std::string(names[i]) == "resonances")
      sub->add_option("--delta", delta_override, "twist size delta");
  }

  std::vector<const char*> argv;
  argv.push_back("twistres");
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) {  // --help
      out << app.help();
      return 0;
    }
    err << "error: " << e.what() << '\n';
    return 2;
  }

  try {
    RunConfig cfg = load_config(config_path);
    if (!out_dir.empty()) cfg.out_dir = out_dir;
    if (!format.empty()) {
      if (format != "json" && format != "csv" && format != "both")
        throw ConfigError("--format must be json, csv or both");
      cfg.format = format;
    }
    return dispatch(app.get_subcommands().front()->get_name(), cfg,
                    delta_override, out);
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return 2;
  } catch (const GeometryError& e) {
    err << "geometry error: " << e.what() << '\n';
    return 2;
  } catch (const CertificationError& e) {
    err << "certification failure: " << e.what() << '\n';
    return 4;
  } catch (const ConvergenceError& e) {
    err << "numerical failure: " << e.what() << '\n';
    return 3;
  } catch (const std::exception& e) {
    err << "numerical failure: " << e.what() << '\n';
    return 3;
  }
}

}  // namespace twistres
