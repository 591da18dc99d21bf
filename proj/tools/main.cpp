// caplab: config-driven front end for the capillary-graph laboratory.
//
// Subcommands: solve1d, solve2d, verify, stability, killing, energy, classify,
// run, list.  Exit codes: 0 = pass, 1 = usage error, 2 = hypotheses of the
// requested check not met, 3 = numerical nonconvergence / ellipticity loss,
// 4 = pipeline ran but a requested verdict failed.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "CLI11.hpp"
#include "caplab/elliptic.hpp"
#include "caplab/energy.hpp"
#include "caplab/errors.hpp"
#include "caplab/identities.hpp"
#include "caplab/linearized.hpp"
#include "caplab/operator_profile.hpp"
#include "caplab/profile_ode.hpp"
#include "caplab/source_term.hpp"
#include "caplab/splitting.hpp"
#include "io.hpp"

using namespace caplab;
using io::json;

namespace {

std::vector<double> comma_nums(const std::string& text, const char* what) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    try {
      std::size_t used = 0;
      out.push_back(std::stod(tok, &used));
      if (used != tok.size()) throw std::invalid_argument(tok);
    } catch (const std::exception&) {
      throw std::invalid_argument(std::string(what) + ": bad number \"" + tok + "\"");
    }
  }
  if (out.empty()) throw std::invalid_argument(std::string(what) + ": empty list");
  return out;
}

OperatorProfile profile_of(const GridField& f) {
  if (f.meta().profile.empty())
    throw std::invalid_argument("field carries no operator-profile name in its metadata");
  return OperatorProfile::parse(f.meta().profile);
}

SourceTerm source_of(const GridField& f) {
  if (f.meta().source.empty())
    throw std::invalid_argument("field carries no source name in its metadata");
  return SourceTerm::parse(f.meta().source);
}

// ---------------------------------------------------------------------------
// report -> json
// ---------------------------------------------------------------------------

json to_json(const IdentityReport& r) {
  json j{{"id", r.id}, {"h", r.h}, {"sup_residual", r.sup_residual},
         {"nodes", r.nodes}, {"excluded", r.excluded}};
  if (r.ratio) j["ratio"] = *r.ratio;
  return j;
}

json to_json(const StabilityReport& r) {
  return json{{"mask", r.mask_name}, {"lambda_min", r.lambda_min}, {"shift", r.shift},
              {"iterations", r.iterations}, {"free_nodes", r.free_nodes}};
}

json to_json(const CritSummary& c) {
  return json{{"nodes", static_cast<int>(c.nodes.size())},
              {"complement_components", c.complement_components},
              {"line_residual", c.line_residual},
              {"line_point", {c.line_point[0], c.line_point[1]}},
              {"line_dir", {c.line_dir[0], c.line_dir[1]}},
              {"collinear", c.collinear},
              {"tol", c.tol}};
}

json to_json(const SplitReport& r) {
  json j{{"is_1d", r.is_1d},
         {"direction", {r.direction[0], r.direction[1]}},
         {"sup_ii2", r.sup_ii2},
         {"sup_gtm2", r.sup_gtm2},
         {"nodes_checked", r.nodes_checked},
         {"excluded", r.excluded},
         {"tol", r.tol},
         {"anchor", {r.anchor[0], r.anchor[1]}},
         {"mismatch_field", r.mismatch_field},
         {"mismatch_shoot", r.mismatch_shoot},
         {"mismatch", r.mismatch},
         {"crit", to_json(r.crit)}};
  if (r.is_1d) {
    j["profile_points"] = static_cast<int>(r.profile.t_grid.size());
    j["termination"] = termination_name(r.profile.termination);
  }
  return j;
}

json to_json(const GlueReport& r) {
  return json{{"wall_gradient_ok", r.wall_gradient_ok},
              {"min_wall_gradient", r.min_wall_gradient},
              {"wall_gradient_floor", r.wall_gradient_floor},
              {"halves_1d", r.halves_1d},
              {"left", to_json(r.left)},
              {"right", to_json(r.right)},
              {"aligned", r.aligned},
              {"direction_angle", r.direction_angle},
              {"line_angle", r.line_angle},
              {"profiles_match", r.profiles_match},
              {"profile_deviation", r.profile_deviation},
              {"profile_deviation_tol", r.profile_deviation_tol},
              {"crit", to_json(r.crit)},
              {"verdict", r.verdict}};
}

json to_json(const EnergyReport& r) {
  json entries = json::array();
  for (const auto& e : r.entries)
    entries.push_back(json{{"R", e.R}, {"lhs", e.lhs}, {"rhs", e.rhs}, {"area", e.area},
                           {"hausdorff", e.hausdorff}, {"truncated", e.truncated},
                           {"beyond_threshold", e.beyond_threshold}, {"pass", e.pass}});
  return json{{"case", r.case_tag}, {"entries", entries}, {"C_ta", r.C_ta},
              {"C0", r.C0}, {"b", r.b}, {"inf_u", r.inf_u},
              {"threshold_R", r.threshold_R}, {"verdict", r.verdict}};
}

json to_json(const DispatchReport& r) {
  const json gate{{"holds", r.gate.holds}, {"max_ratio1", r.gate.max_ratio1},
                  {"max_ratio2", r.gate.max_ratio2}, {"c1", r.gate.c1}, {"c2", r.gate.c2}};
  return json{{"gate", gate}, {"applicable", r.applicable}, {"failures", r.failures},
              {"chosen", r.chosen}, {"radii", r.radii}, {"energies", r.energies},
              {"energies_decreasing", r.energies_decreasing}, {"verdict", r.verdict}};
}

// ---------------------------------------------------------------------------
// verify dispatch (shared between `verify` and `run`)
// ---------------------------------------------------------------------------

// product tent supported on [x0,x1]x[y0,y1]; the poincare check needs a cutoff
// vanishing near the grid edge, so the default box shrinks the lattice by 5h
GridField tent_cutoff(const GridField& f, const std::string& spec) {
  const Grid& g = f.grid();
  double x0, x1, y0, y1;
  if (spec.empty()) {
    x0 = g.x0 + 5 * g.h;
    x1 = g.x_of(g.nx - 1) - 5 * g.h;
    y0 = g.y0 + 5 * g.h;
    y1 = g.y_of(g.ny - 1) - 5 * g.h;
  } else {
    if (spec.rfind("tent:", 0) != 0)
      throw std::invalid_argument("cutoff \"" + spec + "\": expected tent:x0,x1,y0,y1");
    const auto v = comma_nums(spec.substr(5), "cutoff");
    if (v.size() != 4)
      throw std::invalid_argument("cutoff \"" + spec + "\": expected four numbers");
    x0 = v[0]; x1 = v[1]; y0 = v[2]; y1 = v[3];
  }
  if (!(x0 < x1) || !(y0 < y1))
    throw std::invalid_argument("cutoff box is empty; the grid may be too small");
  auto tent = [](double t, double a, double b) {
    if (t <= a || t >= b) return 0.0;
    const double mid = 0.5 * (a + b), halfw = 0.5 * (b - a);
    return 1.0 - std::abs(t - mid) / halfw;
  };
  GridField phi(f.grid_ptr());
  phi.inject([&](double x, double y) { return tent(x, x0, x1) * tent(y, y0, y1); });
  return phi;
}

struct VerifyOutcome {
  json report;
  bool pass = false;
};

VerifyOutcome run_verify_entry(const GridField& f, const io::VerifyEntry& e) {
  const double h = f.grid().h;
  const OperatorProfile prof = profile_of(f);
  const KillingField2D X = KillingField2D::parse(e.X);
  VerifyOutcome out;

  if (e.identity.rfind("L4.1-", 0) == 0) {
    const auto reports = verify_pointwise_identities(f, prof);
    const IdentityReport* hit = nullptr;
    for (const auto& r : reports)
      if (r.id == e.identity) hit = &r;
    if (!hit) throw std::invalid_argument("identity \"" + e.identity + "\" not in the registry");
    const double tol = e.tol > 0 ? e.tol : 50 * h * h;
    out.report = to_json(*hit);
    out.report["tol"] = tol;
    out.pass = hit->sup_residual <= tol;
  } else if (e.identity == "bochner-A" || e.identity == "bochner-B") {
    std::optional<SourceTerm> src;
    if (!f.meta().source.empty()) src = SourceTerm::parse(f.meta().source);
    const auto variant = e.identity == "bochner-A" ? BochnerVariant::A : BochnerVariant::B;
    const IdentityReport r = verify_bochner(f, prof, variant, src ? &*src : nullptr);
    const double tol = e.tol > 0 ? e.tol : 50 * h * h;
    out.report = to_json(r);
    out.report["tol"] = tol;
    out.pass = r.sup_residual <= tol;
  } else if (e.identity == "poincare") {
    const SourceTerm src = source_of(f);
    const KillingDerivative kd = killing_derivative(f, prof, src, X);
    const GridField phi = tent_cutoff(f, e.cutoff);
    const PoincareReport r = verify_poincare(f, kd.w, phi, Mask::all(), prof);
    const double tol = e.tol > 0 ? e.tol : 1e-3 * std::abs(r.lhs);
    out.report = json{{"id", "poincare"}, {"X", X.describe()},
                      {"lhs", r.lhs}, {"rhs_geometry", r.rhs_geometry},
                      {"rhs_quotient", r.rhs_quotient}, {"slack", r.slack},
                      {"geometry_nodes", r.geometry_nodes}, {"cells", r.cells},
                      {"tol", tol}};
    out.pass = r.slack >= -tol;
  } else if (e.identity == "boundary") {
    const BoundaryIdentityReport r = verify_boundary_identity(f, prof, X, e.comp);
    const double tol = e.tol > 0 ? e.tol : 10 * h;
    out.report = json{{"id", "boundary"}, {"X", X.describe()}, {"comp", r.comp},
                      {"c_mean", r.c_mean}, {"sup_residual", r.sup_residual},
                      {"points", r.points}, {"skipped", r.skipped}, {"tol", tol}};
    out.pass = r.sup_residual <= tol;
  } else if (e.identity == "divergence") {
    const SourceTerm src = source_of(f);
    const FluxBalance r = flux_balance(f, prof, src);
    const double tol = e.tol > 0 ? e.tol : 10 * h;
    out.report = json{{"id", "divergence"}, {"boundary_flux_sum", r.boundary_flux_sum},
                      {"interior_source_sum", r.interior_source_sum},
                      {"mismatch", r.mismatch}, {"tol", tol}};
    out.pass = r.mismatch <= tol;
  } else {
    throw std::invalid_argument("unknown identity \"" + e.identity + "\"");
  }
  out.report["pass"] = out.pass;
  return out;
}

// ---------------------------------------------------------------------------
// subcommands
// ---------------------------------------------------------------------------

GridField solve_cfg(const io::ExperimentConfig& cfg) {
  const OperatorProfile prof = OperatorProfile::parse(cfg.profile);
  const SourceTerm src = SourceTerm::parse(cfg.source);
  auto grid = std::make_shared<const Grid>(build_grid(cfg.domain, cfg.h));
  return solve_dirichlet(prof, src, grid, cfg.solver);
}

void emit_report(const json& j, const std::string& out) {
  if (out.empty()) {
    std::printf("%s\n", j.dump(2).c_str());
  } else {
    io::write_json_file(out, j);
    std::printf("wrote %s\n", out.c_str());
  }
}

struct Solve1dArgs {
  std::string profile, source, out;
  double u0 = 0, c = 0, tmin = 0, tmax = 1, step = 1e-3, classify_tol = 1e-4;
};

int cmd_solve1d(const Solve1dArgs& a) {
  const OperatorProfile prof = OperatorProfile::parse(a.profile);
  const SourceTerm src = SourceTerm::parse(a.source);
  const ProfileSolution sol = shoot(prof, src, a.u0, a.c, {a.tmin, a.tmax}, a.step);
  io::write_profile_csv(a.out, sol.t_grid, sol.u, sol.u_prime, sol.E_trace);

  double drift = 0;
  for (double E : sol.E_trace) drift = std::max(drift, std::abs(E - sol.E_trace.front()));
  const Classification cls = classify(sol, prof, src, a.classify_tol);
  std::printf("%zu nodes on [%g, %g], termination %s, first-integral drift %.3e\n",
              sol.t_grid.size(), sol.t_grid.front(), sol.t_grid.back(),
              termination_name(sol.termination).c_str(), drift);
  std::printf("classification: %s", profile_class_name(cls.kind).c_str());
  if (cls.kind == ProfileClass::CylinderArc)
    std::printf(" (radius %.6g, center %.6g, %.6g)", cls.radius, cls.center[0], cls.center[1]);
  if (!cls.note.empty()) std::printf(" — %s", cls.note.c_str());
  std::printf("\nwrote %s\n", a.out.c_str());
  return 0;
}

int cmd_solve2d(const std::string& config, std::string out, std::string csv) {
  const io::ExperimentConfig cfg = io::parse_config(config);
  if (out.empty()) out = io::join_path(cfg.out_dir, cfg.out_field);
  if (csv.empty()) csv = io::join_path(cfg.out_dir, cfg.out_csv);
  const GridField f = solve_cfg(cfg);
  std::printf("solved %s + %s: %d newton iters, residual %.3e\n", cfg.profile.c_str(),
              cfg.source.c_str(), f.meta().newton_iters, f.meta().final_residual);
  io::write_field_json(out, f);
  std::printf("wrote %s\n", out.c_str());
  if (!csv.empty()) {
    io::write_field_csv(csv, f);
    std::printf("wrote %s\n", csv.c_str());
  }
  return 0;
}

int cmd_verify(const std::string& field, const io::VerifyEntry& e, const std::string& out) {
  const GridField f = io::read_field_json(field);
  const VerifyOutcome v = run_verify_entry(f, e);
  emit_report(v.report, out);
  return 0;
}

int cmd_stability(const std::string& field, const std::string& mask, const std::string& out) {
  const GridField f = io::read_field_json(field);
  const StabilityReport r =
      stability_lambda1(f, profile_of(f), source_of(f), io::parse_mask(mask));
  std::printf("lambda_min %.6e on mask %s (%d free nodes, %d iterations)\n", r.lambda_min,
              mask.c_str(), r.free_nodes, r.iterations);
  if (!out.empty()) emit_report(to_json(r), out);
  return 0;
}

int cmd_killing(const std::string& field, const std::string& Xspec, const std::string& out) {
  const GridField f = io::read_field_json(field);
  const KillingField2D X = KillingField2D::parse(Xspec);
  const KillingDerivative kd = killing_derivative(f, profile_of(f), source_of(f), X);
  const SignClass sign = sign_trichotomy_check(kd.w, Mask::all());
  std::printf("derivative along %s: linearized residual %.3e on %d nodes, sign %s\n",
              X.describe().c_str(), kd.sup_residual, kd.nodes_checked,
              sign_class_name(sign).c_str());
  if (!out.empty())
    emit_report(json{{"X", X.describe()}, {"sup_residual", kd.sup_residual},
                     {"nodes_checked", kd.nodes_checked},
                     {"sign", sign_class_name(sign)}},
                out);
  return 0;
}

struct EnergyArgs {
  std::string field, case_tag = "auto", radii = "2,4,8", mask = "all", out = "energy.json";
  std::optional<double> b;
};

int cmd_energy(const EnergyArgs& a) {
  const GridField f = io::read_field_json(a.field);
  const OperatorProfile prof = profile_of(f);
  const SourceTerm src = source_of(f);
  const std::vector<double> radii = comma_nums(a.radii, "--radii");
  json j;
  bool verdict = false;
  if (a.case_tag == "auto") {
    DispatchFacts facts;
    facts.radii = radii;
    facts.b = a.b;
    const DispatchReport r = moderate_energy_dispatch(f, prof, src, io::parse_mask(a.mask), facts);
    j = to_json(r);
    verdict = r.verdict;
    std::printf("dispatch chose case %s; energies %s\n",
                r.chosen.empty() ? "(none)" : r.chosen.c_str(),
                r.energies_decreasing ? "decreasing" : "NOT decreasing");
  } else {
    const auto which = parse_calib_case(a.case_tag);
    if (!which)
      throw std::invalid_argument("--case: expected auto | i | ii | iii | iv | v | vi");
    const EnergyReport r =
        calibration_bound(f, prof, src, io::parse_mask(a.mask), *which, a.b, radii);
    j = to_json(r);
    verdict = r.verdict;
  }
  std::printf("verdict: %s\n", verdict ? "pass" : "FAIL");
  emit_report(j, a.out);
  return 0;
}

int cmd_classify(const std::string& field, double tol, const std::string& out, bool glue,
                 const std::string& profile_csv) {
  const GridField f = io::read_field_json(field);
  const SplitReport r = detect_splitting(f, tol);
  json j = to_json(r);
  if (glue) j["glue"] = to_json(glue_check(f, tol));
  std::printf("is_1d=%s direction=(%.6g, %.6g) sup|II|^2=%.3e mismatch=%.3e\n",
              r.is_1d ? "true" : "false", r.direction[0], r.direction[1], r.sup_ii2,
              r.mismatch);
  if (!profile_csv.empty() && r.is_1d)
    io::write_profile_csv(profile_csv, r.profile.t_grid, r.profile.u, r.profile.u_prime,
                          r.profile.E_trace);
  emit_report(j, out);
  return 0;
}

// rethrows with the pipeline stage name prefixed so run failures name their module
template <class Fn>
auto stage_guard(const char* mod, Fn&& fn) -> decltype(fn()) {
  try {
    return fn();
  } catch (const InapplicableError& e) {
    throw InapplicableError(std::string(mod) + ": " + e.what());
  } catch (const NonConvergenceError& e) {
    throw NonConvergenceError(std::string(mod) + ": " + e.what(), e.residual_history);
  } catch (const RegimeError& e) {
    throw RegimeError(std::string(mod) + ": " + e.what());
  } catch (const std::domain_error& e) {
    throw std::domain_error(std::string(mod) + ": " + e.what());
  } catch (const std::invalid_argument& e) {
    throw std::invalid_argument(std::string(mod) + ": " + e.what());
  }
}

int cmd_run(const std::string& config, const std::string& dir_override) {
  io::ExperimentConfig cfg = io::parse_config(config);
  if (!dir_override.empty()) cfg.out_dir = dir_override;

  json stages = json::array();
  bool all_pass = true;
  const auto note = [&](const std::string& name, bool pass, json report) {
    report["stage"] = name;
    report["pass"] = pass;
    stages.push_back(std::move(report));
    all_pass = all_pass && pass;
    std::printf("%-24s %s\n", (name + ":").c_str(), pass ? "pass" : "FAIL");
  };

  const GridField f = stage_guard("solve2d", [&] { return solve_cfg(cfg); });
  const double h = f.grid().h;
  std::printf("%-24s %d newton iters, residual %.3e\n", "solve2d:", f.meta().newton_iters,
              f.meta().final_residual);
  stages.push_back(json{{"stage", "solve2d"}, {"pass", true},
                        {"newton_iters", f.meta().newton_iters},
                        {"final_residual", f.meta().final_residual}});
  io::write_field_json(io::join_path(cfg.out_dir, cfg.out_field), f);
  if (!cfg.out_csv.empty())
    io::write_field_csv(io::join_path(cfg.out_dir, cfg.out_csv), f);

  for (const auto& e : cfg.verify) {
    const VerifyOutcome v =
        stage_guard("verify", [&] { return run_verify_entry(f, e); });
    note("verify[" + e.identity + "]", v.pass, v.report);
  }

  if (cfg.stability) {
    const auto& e = *cfg.stability;
    const StabilityReport r = stage_guard("stability", [&] {
      return stability_lambda1(f, profile_of(f), source_of(f), io::parse_mask(e.mask));
    });
    json j = to_json(r);
    j["mask"] = e.mask;
    j["floor"] = e.floor;
    note("stability[" + e.mask + "]", r.lambda_min >= e.floor, j);
  }

  if (cfg.killing) {
    const auto& e = *cfg.killing;
    const KillingField2D X = KillingField2D::parse(e.X);
    const KillingDerivative kd = stage_guard(
        "killing", [&] { return killing_derivative(f, profile_of(f), source_of(f), X); });
    const SignClass sign = sign_trichotomy_check(kd.w, Mask::all());
    const double tol = e.tol > 0 ? e.tol : 10 * h;
    note("killing[" + e.X + "]", kd.sup_residual <= tol,
         json{{"X", X.describe()}, {"sup_residual", kd.sup_residual},
              {"nodes_checked", kd.nodes_checked}, {"sign", sign_class_name(sign)},
              {"tol", tol}});
  }

  if (cfg.energy) {
    const auto& e = *cfg.energy;
    json j;
    bool pass = false;
    if (e.case_tag == "auto") {
      DispatchFacts facts;
      facts.radii = e.radii;
      facts.b = e.b;
      const DispatchReport r = stage_guard(
          "energy", [&] { return moderate_energy_dispatch(f, profile_of(f), source_of(f), Mask::all(), facts); });
      j = to_json(r);
      pass = r.verdict;
    } else {
      const EnergyReport r = stage_guard("energy", [&] {
        return calibration_bound(f, profile_of(f), source_of(f), Mask::all(),
                                 *parse_calib_case(e.case_tag), e.b, e.radii);
      });
      j = to_json(r);
      pass = r.verdict;
    }
    io::write_json_file(io::join_path(cfg.out_dir, e.out), j);
    note("energy[" + e.case_tag + "]", pass, j);
  }

  if (cfg.classify) {
    const auto& e = *cfg.classify;
    const SplitReport r = stage_guard("classify", [&] { return detect_splitting(f, e.tol); });
    json j = to_json(r);
    io::write_json_file(io::join_path(cfg.out_dir, e.out), j);
    const bool pass = !e.expect_1d || r.is_1d == *e.expect_1d;
    if (e.expect_1d) j["expected_1d"] = *e.expect_1d;
    note("classify", pass, j);
  }

  io::write_json_file(io::join_path(cfg.out_dir, cfg.out_report),
                      json{{"stages", stages}, {"verdict", all_pass}});
  std::printf("verdict: %s\n", all_pass ? "pass" : "FAIL");
  return all_pass ? 0 : 4;
}

int cmd_list() {
  std::printf(
      "operator profiles (a(t) multiplies the gradient in div(a(|grad u|) grad u)):\n"
      "  mean-curvature          a(t) = 1/sqrt(1+t^2)\n"
      "  p-laplacian:<p>         a(t) = t^(p-2), p > 1\n"
      "  pq-laplacian:<p>:<q>    a(t) = t^(p-2) + t^(q-2), p, q >= 2\n"
      "  exponential             a(t) = exp(t^2)\n"
      "  polytropic:<gamma>      a(t) = (1 - (gamma-1) t^2 / 2)^(1/(gamma-1)),\n"
      "                          valid slope range [0, t*) with t* = sqrt(2/(gamma+1))\n"
      "\n"
      "sources (f in div(a grad u) + f(u) = 0):\n"
      "  const:<H>               f = H  (const:0 for the homogeneous problem)\n"
      "  capillary:<kappa>       f = -kappa u\n"
      "  expr:<f(u)>             f from an expression in u, e.g. expr:-u^3\n"
      "\n"
      "domains (JSON shapes for configs):\n"
      "  strip        {\"shape\":\"strip\",\"T\":1.0,\"y_extent\":[-2,2]}\n"
      "  rectangle    {\"shape\":\"rectangle\",\"a\":0,\"b\":1,\"c\":0,\"d\":1}\n"
      "  disk         {\"shape\":\"disk\",\"center\":[0,0],\"R\":1}\n"
      "  annulus      {\"shape\":\"annulus\",\"center\":[0,0],\"R_in\":0.5,\"R_out\":1}\n"
      "  epigraph     {\"shape\":\"epigraph\",\"phi\":\"0.1*sin(3*y)\",\"y_extent\":[-2,2],\"depth\":2}\n"
      "  slab         {\"shape\":\"slab\",\"phi1\":\"0\",\"phi2\":\"0.5\",\"y_extent\":[-1,1]}\n"
      "  components   [{\"id\":1,\"b\":0.0}, ...] sets the Dirichlet value per component\n"
      "\n"
      "identity checks (verify --identity ...):\n"
      "  L4.1-1 L4.1-2 L4.1-3 L4.1-4 L4.1-5 L4.1-6\n"
      "                          pointwise curvature identities, two discrete routes\n"
      "  bochner-A bochner-B     weighted Bochner formulas for |grad u|\n"
      "  poincare                weighted Poincare inequality on a tent cutoff\n"
      "  boundary                first-variation boundary identity (needs --X)\n"
      "  divergence              discrete divergence theorem on a solved field\n"
      "\n"
      "masks:          all | rect:x0,x1,y0,y1 | disk:cx,cy,r\n"
      "killing fields: translate:vx,vy | rotate:px,py\n"
      "energy cases:   auto | i | ii | iii | iv | v | vi\n");
  return 0;
}

} // namespace

int main(int argc, char** argv) {
  CLI::App app{"caplab — a numerical laboratory for capillary graph equations.\n"
               "Set CAPLAB_THREADS to cap pointwise parallelism (default 1)."};
  app.require_subcommand(1);
  int rc = 0;

  Solve1dArgs s1;
  auto* c1 = app.add_subcommand("solve1d", "integrate the 1D profile equation by shooting");
  c1->add_option("--profile", s1.profile, "operator profile (see `caplab list`)")->required();
  c1->add_option("--source", s1.source, "source term, e.g. capillary:1")->required();
  c1->add_option("--u0", s1.u0, "u(0)")->required();
  c1->add_option("--c", s1.c, "u'(0)")->required();
  c1->add_option("--tmax", s1.tmax, "right end of the t interval")->required();
  c1->add_option("--tmin", s1.tmin, "left end of the t interval (default 0)");
  c1->add_option("--step", s1.step, "RK4 step")->required();
  c1->add_option("--classify-tol", s1.classify_tol, "model-fit tolerance for classification");
  c1->add_option("--out", s1.out, "output CSV (t,u,uprime,E)")->required();
  c1->callback([&] { rc = cmd_solve1d(s1); });

  std::string s2_config, s2_out, s2_csv;
  auto* c2 = app.add_subcommand("solve2d", "solve the Dirichlet problem from a config");
  c2->add_option("--config", s2_config, "experiment config (JSON)")->required();
  c2->add_option("--out", s2_out, "field.json path (overrides the config)");
  c2->add_option("--csv", s2_csv, "CSV export x,y,u,|grad u| (overrides the config)");
  c2->callback([&] { rc = cmd_solve2d(s2_config, s2_out, s2_csv); });

  std::string v_field, v_out;
  io::VerifyEntry v_entry;
  auto* cv = app.add_subcommand("verify", "check a geometric identity on a solved field");
  cv->add_option("--field", v_field, "field.json")->required();
  cv->add_option("--identity", v_entry.identity, "which identity (see `caplab list`)")->required();
  cv->add_option("--X", v_entry.X, "rigid motion, translate:vx,vy | rotate:px,py");
  cv->add_option("--cutoff", v_entry.cutoff, "poincare cutoff tent:x0,x1,y0,y1");
  cv->add_option("--comp", v_entry.comp, "boundary component id (identity boundary)");
  cv->add_option("--tol", v_entry.tol, "pass/fail tolerance (0 = per-identity default)");
  cv->add_option("--out", v_out, "report JSON path (default: stdout)");
  cv->callback([&] { rc = cmd_verify(v_field, v_entry, v_out); });

  std::string st_field, st_mask = "all", st_out;
  auto* cs = app.add_subcommand("stability", "smallest linearized eigenvalue on a mask");
  cs->add_option("--field", st_field, "field.json")->required();
  cs->add_option("--mask", st_mask, "all | rect:x0,x1,y0,y1 | disk:cx,cy,r");
  cs->add_option("--out", st_out, "report JSON path");
  cs->callback([&] { rc = cmd_stability(st_field, st_mask, st_out); });

  std::string k_field, k_X = "translate:1,0", k_out;
  auto* ck = app.add_subcommand("killing", "differentiate the solution along a rigid motion");
  ck->add_option("--field", k_field, "field.json")->required();
  ck->add_option("--X", k_X, "translate:vx,vy | rotate:px,py")->required();
  ck->add_option("--out", k_out, "report JSON path");
  ck->callback([&] { rc = cmd_killing(k_field, k_X, k_out); });

  EnergyArgs en;
  double en_b = 0;
  auto* ce = app.add_subcommand("energy", "growth estimates for the Dirichlet energy");
  ce->add_option("--field", en.field, "field.json")->required();
  ce->add_option("--case", en.case_tag, "auto | i | ii | iii | iv | v | vi");
  ce->add_option("--radii", en.radii, "comparison radii, e.g. 2,4,8");
  ce->add_option("--mask", en.mask, "restrict the estimate to a mask");
  auto* opt_b = ce->add_option("--b", en_b, "boundary reference constant");
  ce->add_option("--out", en.out, "report JSON path");
  ce->callback([&] {
    if (opt_b->count()) en.b = en_b;
    rc = cmd_energy(en);
  });

  std::string cl_field, cl_out = "split.json", cl_profile_csv;
  double cl_tol = 0;
  bool cl_glue = false;
  auto* cc = app.add_subcommand("classify", "1D-splitting test on a solved field");
  cc->add_option("--field", cl_field, "field.json")->required();
  cc->add_option("--tol", cl_tol, "flatness tolerance (0 = 100 h^2)");
  cc->add_flag("--glue", cl_glue, "also run the two-piece gluing verdict");
  cc->add_option("--profile-csv", cl_profile_csv, "write the reconstructed 1D profile");
  cc->add_option("--out", cl_out, "split report JSON path");
  cc->callback([&] { rc = cmd_classify(cl_field, cl_tol, cl_out, cl_glue, cl_profile_csv); });

  std::string r_config, r_dir;
  auto* cr = app.add_subcommand("run", "solve + verify + report pipeline from a config");
  cr->add_option("--config", r_config, "experiment config (JSON)")->required();
  cr->add_option("--dir", r_dir, "output directory (overrides the config)");
  cr->callback([&] { rc = cmd_run(r_config, r_dir); });

  auto* cl = app.add_subcommand("list", "print the builtin registries");
  cl->callback([&] { rc = cmd_list(); });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  } catch (const InapplicableError& e) {
    std::fprintf(stderr, "inapplicable: %s\n", e.what());
    return 2;
  } catch (const NonConvergenceError& e) {
    std::fprintf(stderr, "nonconvergence: %s\n", e.what());
    return 3;
  } catch (const RegimeError& e) {
    std::fprintf(stderr, "ellipticity failure: %s\n", e.what());
    return 3;
  } catch (const std::invalid_argument& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  } catch (const std::domain_error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return rc;
}
