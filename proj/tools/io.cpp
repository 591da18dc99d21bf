#include "io.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "caplab/energy.hpp"
#include "caplab/operator_profile.hpp"
#include "caplab/source_term.hpp"

namespace caplab::io {
namespace {

[[noreturn]] void fail(const std::string& where, const std::string& msg) {
  throw ConfigError(where + ": " + msg);
}

void check_keys(const json& j, const std::string& where,
                std::initializer_list<const char*> allowed) {
  if (!j.is_object()) fail(where, "expected an object");
  for (const auto& el : j.items()) {
    bool known = false;
    for (const char* k : allowed)
      if (el.key() == k) { known = true; break; }
    if (!known) fail(where + "/" + el.key(), "unknown key");
  }
}

const json* find(const json& j, const char* key) {
  if (!j.is_object()) return nullptr;
  auto it = j.find(key);
  return it == j.end() ? nullptr : &*it;
}

const json& need(const json& j, const std::string& where, const char* key) {
  if (!j.is_object()) fail(where, "expected an object");
  const json* p = find(j, key);
  if (!p) fail(where, std::string("missing required key \"") + key + "\"");
  return *p;
}

double as_num(const json& j, const std::string& where) {
  if (!j.is_number()) fail(where, "expected a number");
  return j.get<double>();
}

int as_int(const json& j, const std::string& where) {
  if (!j.is_number_integer()) fail(where, "expected an integer");
  return j.get<int>();
}

bool as_bool(const json& j, const std::string& where) {
  if (!j.is_boolean()) fail(where, "expected a boolean");
  return j.get<bool>();
}

std::string as_str(const json& j, const std::string& where) {
  if (!j.is_string()) fail(where, "expected a string");
  return j.get<std::string>();
}

std::array<double, 2> as_pair(const json& j, const std::string& where) {
  if (!j.is_array() || j.size() != 2) fail(where, "expected an array of two numbers");
  return {as_num(j[0], where + "/0"), as_num(j[1], where + "/1")};
}

std::vector<double> as_num_list(const json& j, const std::string& where) {
  if (!j.is_array()) fail(where, "expected an array of numbers");
  std::vector<double> out;
  for (std::size_t k = 0; k < j.size(); ++k)
    out.push_back(as_num(j[k], where + "/" + std::to_string(k)));
  return out;
}

// comma-separated doubles after a "name:" prefix, e.g. "rect:0,1,-1,1"
std::vector<double> split_nums(const std::string& body, const std::string& where) {
  std::vector<double> out;
  std::stringstream ss(body);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    try {
      std::size_t used = 0;
      out.push_back(std::stod(tok, &used));
      if (used != tok.size()) throw std::invalid_argument(tok);
    } catch (const std::exception&) {
      fail(where, "bad number \"" + tok + "\"");
    }
  }
  return out;
}

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

} // namespace

json load_json_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError(path + ": cannot open");
  std::ostringstream ss;
  ss << in.rdbuf();
  const std::string text = ss.str();
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    // e.byte is 1-based; walk the text to turn it into line:column
    std::size_t stop = e.byte > 0 ? e.byte - 1 : 0;
    if (stop > text.size()) stop = text.size();
    std::size_t line = 1, col = 1;
    for (std::size_t k = 0; k < stop; ++k) {
      if (text[k] == '\n') { ++line; col = 1; } else ++col;
    }
    std::string what = e.what();
    // keep the reason, drop the "[json.exception...]" prefix
    if (auto cut = what.find("] "); cut != std::string::npos) what = what.substr(cut + 2);
    throw ConfigError(path + ":" + std::to_string(line) + ":" + std::to_string(col) +
                      ": " + what);
  }
}

void write_json_file(const std::string& path, const json& j) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError(path + ": cannot open for writing");
  out << j.dump(2) << "\n";
}

json domain_to_json(const DomainSpec2D& s) {
  json j;
  switch (s.shape) {
    case ShapeKind::Strip:
      j["shape"] = "strip";
      j["T"] = s.T;
      j["y_extent"] = {s.y_extent[0], s.y_extent[1]};
      break;
    case ShapeKind::Rectangle:
      j["shape"] = "rectangle";
      j["a"] = s.a; j["b"] = s.b; j["c"] = s.c; j["d"] = s.d;
      break;
    case ShapeKind::Disk:
      j["shape"] = "disk";
      j["center"] = {s.center[0], s.center[1]};
      j["R"] = s.R;
      break;
    case ShapeKind::Annulus:
      j["shape"] = "annulus";
      j["center"] = {s.center[0], s.center[1]};
      j["R_in"] = s.R_in; j["R_out"] = s.R_out;
      break;
    case ShapeKind::Epigraph:
      j["shape"] = "epigraph";
      j["phi"] = s.phi.source;
      j["y_extent"] = {s.y_extent[0], s.y_extent[1]};
      j["depth"] = s.depth;
      break;
    case ShapeKind::Slab:
      j["shape"] = "slab";
      j["phi1"] = s.phi1.source;
      j["phi2"] = s.phi2.source;
      j["y_extent"] = {s.y_extent[0], s.y_extent[1]};
      break;
  }
  json comps = json::array();
  for (const auto& c : s.components) {
    json jc;
    jc["id"] = c.id;
    jc["b"] = c.b;
    if (c.expected_neumann) jc["expected_neumann"] = *c.expected_neumann;
    comps.push_back(jc);
  }
  j["components"] = comps;
  return j;
}

namespace {
CurveFn parse_curve(const json& j, const std::string& where) {
  const std::string src = as_str(j, where);
  try {
    return CurveFn::parse(src);
  } catch (const std::exception& e) {
    fail(where, std::string("bad curve expression: ") + e.what());
  }
}
} // namespace

DomainSpec2D domain_from_json(const json& j, const std::string& where) {
  const std::string shape = as_str(need(j, where, "shape"), where + "/shape");
  DomainSpec2D s;
  if (shape == "strip") {
    check_keys(j, where, {"shape", "T", "y_extent", "components"});
    s = DomainSpec2D::strip(as_num(need(j, where, "T"), where + "/T"),
                            as_pair(need(j, where, "y_extent"), where + "/y_extent"));
  } else if (shape == "rectangle") {
    check_keys(j, where, {"shape", "a", "b", "c", "d", "components"});
    s = DomainSpec2D::rectangle(
        as_num(need(j, where, "a"), where + "/a"), as_num(need(j, where, "b"), where + "/b"),
        as_num(need(j, where, "c"), where + "/c"), as_num(need(j, where, "d"), where + "/d"));
  } else if (shape == "disk") {
    check_keys(j, where, {"shape", "center", "R", "components"});
    s = DomainSpec2D::disk(as_pair(need(j, where, "center"), where + "/center"),
                           as_num(need(j, where, "R"), where + "/R"));
  } else if (shape == "annulus") {
    check_keys(j, where, {"shape", "center", "R_in", "R_out", "components"});
    s = DomainSpec2D::annulus(as_pair(need(j, where, "center"), where + "/center"),
                              as_num(need(j, where, "R_in"), where + "/R_in"),
                              as_num(need(j, where, "R_out"), where + "/R_out"));
  } else if (shape == "epigraph") {
    check_keys(j, where, {"shape", "phi", "y_extent", "depth", "components"});
    s = DomainSpec2D::epigraph(parse_curve(need(j, where, "phi"), where + "/phi"),
                               as_pair(need(j, where, "y_extent"), where + "/y_extent"),
                               as_num(need(j, where, "depth"), where + "/depth"));
  } else if (shape == "slab") {
    check_keys(j, where, {"shape", "phi1", "phi2", "y_extent", "components"});
    s = DomainSpec2D::slab(parse_curve(need(j, where, "phi1"), where + "/phi1"),
                           parse_curve(need(j, where, "phi2"), where + "/phi2"),
                           as_pair(need(j, where, "y_extent"), where + "/y_extent"));
  } else {
    fail(where + "/shape", "unknown shape \"" + shape + "\"");
  }

  if (const json* comps = find(j, "components")) {
    if (!comps->is_array()) fail(where + "/components", "expected an array");
    for (std::size_t k = 0; k < comps->size(); ++k) {
      const std::string cw = where + "/components/" + std::to_string(k);
      const json& jc = (*comps)[k];
      check_keys(jc, cw, {"id", "b", "expected_neumann"});
      const int id = as_int(need(jc, cw, "id"), cw + "/id");
      BoundaryComponent* c = s.component(id);
      if (!c) fail(cw + "/id", "no boundary component with id " + std::to_string(id));
      if (const json* b = find(jc, "b")) c->b = as_num(*b, cw + "/b");
      if (const json* en = find(jc, "expected_neumann"))
        c->expected_neumann = as_num(*en, cw + "/expected_neumann");
    }
  }
  try {
    s.validate();
  } catch (const std::invalid_argument& e) {
    fail(where, e.what());
  }
  return s;
}

void write_field_json(const std::string& path, const GridField& f) {
  const Grid& g = f.grid();
  json j;
  j["domain"] = domain_to_json(g.spec);
  j["h"] = g.h;
  j["grid"] = {{"nx", g.nx}, {"ny", g.ny}, {"x0", g.x0}, {"y0", g.y0}};

  json vals = json::array();
  for (int k = 0; k < g.nx * g.ny; ++k) {
    const double v = f.at(k);
    if (std::isfinite(v)) vals.push_back(v); else vals.push_back(nullptr);
  }
  j["values"] = std::move(vals);

  json bvals = json::array();
  for (std::size_t k = 0; k < g.bpoints.size(); ++k) {
    const double v = f.bvalue(static_cast<int>(k));
    if (std::isfinite(v)) bvals.push_back(v); else bvals.push_back(nullptr);
  }
  j["bvalues"] = std::move(bvals);

  const FieldMetadata& m = f.meta();
  j["metadata"] = {{"profile", m.profile}, {"source", m.source}, {"note", m.note},
                   {"newton_iters", m.newton_iters}, {"final_residual", m.final_residual}};
  write_json_file(path, j);
}

GridField read_field_json(const std::string& path) {
  const json j = load_json_file(path);
  check_keys(j, path, {"domain", "h", "grid", "values", "bvalues", "metadata"});
  DomainSpec2D spec = domain_from_json(need(j, path, "domain"), path + "#/domain");
  const double h = as_num(need(j, path, "h"), path + "#/h");

  auto grid = std::make_shared<const Grid>(build_grid(spec, h));
  const json& jg = need(j, path, "grid");
  check_keys(jg, path + "#/grid", {"nx", "ny", "x0", "y0"});
  if (as_int(need(jg, path + "#/grid", "nx"), path + "#/grid/nx") != grid->nx ||
      as_int(need(jg, path + "#/grid", "ny"), path + "#/grid/ny") != grid->ny)
    fail(path + "#/grid", "stored dimensions do not match the rebuilt grid");

  GridField f(grid);
  const json& vals = need(j, path, "values");
  if (!vals.is_array() || static_cast<int>(vals.size()) != grid->nx * grid->ny)
    fail(path + "#/values", "expected " + std::to_string(grid->nx * grid->ny) + " entries");
  for (int k = 0; k < grid->nx * grid->ny; ++k)
    f.at(k) = vals[k].is_null() ? std::nan("") : as_num(vals[k], path + "#/values");

  const json& bvals = need(j, path, "bvalues");
  if (!bvals.is_array() || bvals.size() != grid->bpoints.size())
    fail(path + "#/bvalues", "expected " + std::to_string(grid->bpoints.size()) + " entries");
  for (std::size_t k = 0; k < bvals.size(); ++k)
    f.bvalue(static_cast<int>(k)) =
        bvals[k].is_null() ? std::nan("") : as_num(bvals[k], path + "#/bvalues");

  const json& jm = need(j, path, "metadata");
  check_keys(jm, path + "#/metadata",
             {"profile", "source", "note", "newton_iters", "final_residual"});
  FieldMetadata& m = f.meta();
  if (const json* p = find(jm, "profile")) m.profile = as_str(*p, path + "#/metadata/profile");
  if (const json* p = find(jm, "source")) m.source = as_str(*p, path + "#/metadata/source");
  if (const json* p = find(jm, "note")) m.note = as_str(*p, path + "#/metadata/note");
  if (const json* p = find(jm, "newton_iters"))
    m.newton_iters = as_int(*p, path + "#/metadata/newton_iters");
  if (const json* p = find(jm, "final_residual"))
    m.final_residual = as_num(*p, path + "#/metadata/final_residual");
  return f;
}

void write_field_csv(const std::string& path, const GridField& f) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError(path + ": cannot open for writing");
  out << "x,y,u,grad\n";
  const Grid& g = f.grid();
  for (int jrow = 0; jrow < g.ny; ++jrow)
    for (int i = 0; i < g.nx; ++i) {
      const int k = g.idx(i, jrow);
      const double u = f.at(k);
      if (!std::isfinite(u)) continue;
      double grad = std::nan("");
      if (g.is_interior(i, jrow)) grad = std::hypot(f.deriv_x(k), f.deriv_y(k));
      out << fmt(g.x_of(i)) << ',' << fmt(g.y_of(jrow)) << ',' << fmt(u) << ','
          << fmt(grad) << '\n';
    }
}

void write_profile_csv(const std::string& path, const std::vector<double>& t,
                       const std::vector<double>& u, const std::vector<double>& uprime,
                       const std::vector<double>& E) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError(path + ": cannot open for writing");
  out << "t,u,uprime,E\n";
  for (std::size_t k = 0; k < t.size(); ++k) {
    const double e = k < E.size() ? E[k] : std::nan("");
    out << fmt(t[k]) << ',' << fmt(u[k]) << ',' << fmt(uprime[k]) << ',' << fmt(e) << '\n';
  }
}

Mask parse_mask(const std::string& spec) {
  if (spec.empty() || spec == "all") return Mask::all();
  const auto colon = spec.find(':');
  const std::string head = spec.substr(0, colon);
  const std::string body = colon == std::string::npos ? "" : spec.substr(colon + 1);
  if (head == "rect") {
    const auto v = split_nums(body, "mask \"" + spec + "\"");
    if (v.size() != 4) fail("mask \"" + spec + "\"", "rect needs x0,x1,y0,y1");
    return Mask::rect(v[0], v[1], v[2], v[3]);
  }
  if (head == "disk") {
    const auto v = split_nums(body, "mask \"" + spec + "\"");
    if (v.size() != 3) fail("mask \"" + spec + "\"", "disk needs cx,cy,r");
    return Mask::disk(v[0], v[1], v[2]);
  }
  fail("mask \"" + spec + "\"", "unknown mask (use all | rect:x0,x1,y0,y1 | disk:cx,cy,r)");
}

namespace {

const char* const kIdentities[] = {"L4.1-1", "L4.1-2", "L4.1-3", "L4.1-4", "L4.1-5",
                                   "L4.1-6", "bochner-A", "bochner-B", "poincare",
                                   "boundary", "divergence"};

bool known_identity(const std::string& id) {
  for (const char* k : kIdentities)
    if (id == k) return true;
  return false;
}

void check_killing_spec(const std::string& text, const std::string& where) {
  try {
    (void)KillingField2D::parse(text);
  } catch (const std::exception& e) {
    fail(where, e.what());
  }
}

VerifyEntry parse_verify_entry(const json& j, const std::string& where) {
  check_keys(j, where, {"identity", "X", "cutoff", "comp", "tol"});
  VerifyEntry e;
  e.identity = as_str(need(j, where, "identity"), where + "/identity");
  if (!known_identity(e.identity))
    fail(where + "/identity", "unknown identity \"" + e.identity + "\"");
  if (const json* p = find(j, "X")) e.X = as_str(*p, where + "/X");
  check_killing_spec(e.X, where + "/X");
  if (const json* p = find(j, "cutoff")) e.cutoff = as_str(*p, where + "/cutoff");
  if (const json* p = find(j, "comp")) e.comp = as_int(*p, where + "/comp");
  if (const json* p = find(j, "tol")) e.tol = as_num(*p, where + "/tol");
  return e;
}

} // namespace

ExperimentConfig parse_config(const std::string& path) {
  const json j = load_json_file(path);
  check_keys(j, path, {"profile", "source", "domain", "h", "solver", "output", "verify",
                       "stability", "killing", "energy", "classify"});
  ExperimentConfig cfg;
  cfg.profile = as_str(need(j, path, "profile"), path + "#/profile");
  cfg.source = as_str(need(j, path, "source"), path + "#/source");
  try {
    (void)OperatorProfile::parse(cfg.profile);
  } catch (const std::exception& e) {
    fail(path + "#/profile", e.what());
  }
  try {
    (void)SourceTerm::parse(cfg.source);
  } catch (const std::exception& e) {
    fail(path + "#/source", e.what());
  }
  cfg.domain = domain_from_json(need(j, path, "domain"), path + "#/domain");
  cfg.h = as_num(need(j, path, "h"), path + "#/h");
  if (!(cfg.h > 0)) fail(path + "#/h", "spacing must be positive");

  if (const json* js = find(j, "solver")) {
    const std::string w = path + "#/solver";
    check_keys(*js, w, {"max_iter", "tol", "damping_floor", "artificial"});
    if (const json* p = find(*js, "max_iter")) cfg.solver.max_iter = as_int(*p, w + "/max_iter");
    if (const json* p = find(*js, "tol")) cfg.solver.tol = as_num(*p, w + "/tol");
    if (const json* p = find(*js, "damping_floor"))
      cfg.solver.damping_floor = as_num(*p, w + "/damping_floor");
    if (const json* p = find(*js, "artificial")) {
      const std::string pol = as_str(*p, w + "/artificial");
      if (pol == "auto") cfg.solver.artificial = ArtificialPolicy::Auto;
      else if (pol == "reflect") cfg.solver.artificial = ArtificialPolicy::Reflect;
      else if (pol == "profile-extension")
        cfg.solver.artificial = ArtificialPolicy::ProfileExtension;
      else fail(w + "/artificial", "expected auto | reflect | profile-extension");
    }
  }

  if (const json* jo = find(j, "output")) {
    const std::string w = path + "#/output";
    check_keys(*jo, w, {"dir", "field", "csv", "report"});
    if (const json* p = find(*jo, "dir")) cfg.out_dir = as_str(*p, w + "/dir");
    if (const json* p = find(*jo, "field")) cfg.out_field = as_str(*p, w + "/field");
    if (const json* p = find(*jo, "csv")) cfg.out_csv = as_str(*p, w + "/csv");
    if (const json* p = find(*jo, "report")) cfg.out_report = as_str(*p, w + "/report");
  }

  if (const json* jv = find(j, "verify")) {
    if (!jv->is_array()) fail(path + "#/verify", "expected an array");
    for (std::size_t k = 0; k < jv->size(); ++k)
      cfg.verify.push_back(
          parse_verify_entry((*jv)[k], path + "#/verify/" + std::to_string(k)));
  }

  if (const json* jst = find(j, "stability")) {
    const std::string w = path + "#/stability";
    check_keys(*jst, w, {"mask", "floor"});
    StabilityEntry e;
    if (const json* p = find(*jst, "mask")) e.mask = as_str(*p, w + "/mask");
    (void)parse_mask(e.mask);
    if (const json* p = find(*jst, "floor")) e.floor = as_num(*p, w + "/floor");
    cfg.stability = e;
  }

  if (const json* jk = find(j, "killing")) {
    const std::string w = path + "#/killing";
    check_keys(*jk, w, {"X", "tol"});
    KillingEntry e;
    if (const json* p = find(*jk, "X")) e.X = as_str(*p, w + "/X");
    check_killing_spec(e.X, w + "/X");
    if (const json* p = find(*jk, "tol")) e.tol = as_num(*p, w + "/tol");
    cfg.killing = e;
  }

  if (const json* je = find(j, "energy")) {
    const std::string w = path + "#/energy";
    check_keys(*je, w, {"case", "radii", "b", "out"});
    EnergyEntry e;
    if (const json* p = find(*je, "case")) e.case_tag = as_str(*p, w + "/case");
    if (e.case_tag != "auto" && !parse_calib_case(e.case_tag))
      fail(w + "/case", "expected auto | i | ii | iii | iv | v | vi");
    if (const json* p = find(*je, "radii")) e.radii = as_num_list(*p, w + "/radii");
    if (e.radii.empty()) fail(w + "/radii", "need at least one radius");
    if (const json* p = find(*je, "b")) e.b = as_num(*p, w + "/b");
    if (const json* p = find(*je, "out")) e.out = as_str(*p, w + "/out");
    cfg.energy = e;
  }

  if (const json* jc = find(j, "classify")) {
    const std::string w = path + "#/classify";
    check_keys(*jc, w, {"tol", "expect_1d", "out"});
    ClassifyEntry e;
    if (const json* p = find(*jc, "tol")) e.tol = as_num(*p, w + "/tol");
    if (const json* p = find(*jc, "expect_1d")) e.expect_1d = as_bool(*p, w + "/expect_1d");
    if (const json* p = find(*jc, "out")) e.out = as_str(*p, w + "/out");
    cfg.classify = e;
  }

  return cfg;
}

std::string join_path(const std::string& dir, const std::string& name) {
  if (name.empty() || name.front() == '/' || dir.empty() || dir == ".") return name;
  return dir + "/" + name;
}

} // namespace caplab::io
