#pragma once

// JSON plumbing around the core library: field files, experiment configs,
// report serialization, CSV plot data.  Everything here is strict: unknown
// config keys are rejected with their JSON-pointer path so typos never pass
// silently.

#include <array>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "caplab/domain.hpp"
#include "caplab/elliptic.hpp"
#include "caplab/grid_field.hpp"
#include "caplab/linearized.hpp"
#include "json.hpp"

namespace caplab::io {

using nlohmann::json;

// Config / field-file problem.  Derives from invalid_argument so the CLI's
// usage-error exit code (1) applies.
class ConfigError : public std::invalid_argument {
public:
  explicit ConfigError(const std::string& what) : std::invalid_argument(what) {}
};

// Parses a JSON file; parse errors are reported as "<path>:<line>:<col>: ...".
json load_json_file(const std::string& path);
void write_json_file(const std::string& path, const json& j);

// Domain spec block, e.g. {"shape":"strip","T":1.0,"y_extent":[-2,2],
// "components":[{"id":1,"b":0.0},{"id":2,"b":0.3}]}.  Epigraph/slab carry
// their curve expressions as strings.  `where` prefixes error paths.
json domain_to_json(const DomainSpec2D& spec);
DomainSpec2D domain_from_json(const json& j, const std::string& where);

// field.json: domain block + h + lattice values (row-major, null outside the
// domain) + boundary trace values + solver metadata.  Reading rebuilds the
// grid from the domain block and checks it against the stored dimensions.
void write_field_json(const std::string& path, const GridField& field);
GridField read_field_json(const std::string& path);

// CSV plot data: "x,y,u,grad" per valued node (grad = |grad u|, nan at nodes
// without a full interior stencil) and "t,u,uprime,E" per profile node.
void write_field_csv(const std::string& path, const GridField& field);
void write_profile_csv(const std::string& path, const std::vector<double>& t,
                       const std::vector<double>& u, const std::vector<double>& uprime,
                       const std::vector<double>& E);

// "all" | "rect:x0,x1,y0,y1" | "disk:cx,cy,r"
Mask parse_mask(const std::string& spec);

// ---------------------------------------------------------------------------
// Experiment configs
// ---------------------------------------------------------------------------

struct VerifyEntry {
  std::string identity;          // "L4.1-1".."L4.1-6", "bochner-A/B", "poincare",
                                 // "boundary", "divergence"
  std::string X = "translate:1,0";
  std::string cutoff;            // poincare: "tent:x0,x1,y0,y1" (default auto)
  int comp = 1;                  // boundary: component id
  double tol = 0;                // verdict tolerance; 0 = per-identity default
};

struct StabilityEntry {
  std::string mask = "all";
  double floor = -1e-6;          // verdict: lambda_min >= floor
};

struct KillingEntry {
  std::string X = "translate:1,0";
  double tol = 0;                // verdict tolerance on the residual; 0 = 10h
};

struct EnergyEntry {
  std::string case_tag = "auto"; // "auto" dispatches, "i".."vi" runs one case
  std::vector<double> radii{2, 4, 8};
  std::optional<double> b;       // reference boundary constant where a case needs one
  std::string out = "energy.json";
};

struct ClassifyEntry {
  double tol = 0;
  std::optional<bool> expect_1d; // verdict: is_1d matches; absent = report only
  std::string out = "split.json";
};

struct ExperimentConfig {
  std::string profile;
  std::string source;
  DomainSpec2D domain;
  double h = 0;
  SolveOptions solver;

  std::string out_dir = ".";
  std::string out_field = "field.json";
  std::string out_csv;           // empty = skip the CSV export
  std::string out_report = "report.json";

  std::vector<VerifyEntry> verify;
  std::optional<StabilityEntry> stability;
  std::optional<KillingEntry> killing;
  std::optional<EnergyEntry> energy;
  std::optional<ClassifyEntry> classify;
};

// Strict parse: unknown keys anywhere are an error; profile/source/domain
// references are resolved against the builtin registries up front.
ExperimentConfig parse_config(const std::string& path);

// out_dir-relative path ("" stays "", absolute paths pass through).
std::string join_path(const std::string& dir, const std::string& name);

} // namespace caplab::io
