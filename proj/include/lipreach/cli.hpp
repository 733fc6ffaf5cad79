#pragma once

#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "lipreach/models.hpp"
#include "lipreach/solvers.hpp"

namespace lipreach::cli {

/// Exit statuses of the command-line tool.
enum ExitCode : int {
    kOk = 0,
    kInternal = 1,
    kUsage = 2,
    kParse = 3,
    kBudget = 4,
    kUnsound = 5,
};

struct RunSpec {
    std::string model = "gravity-1d";
    models::CatalogOptions catalog;
    SolverConfig solver;
    /// Discount factor applied before solving (1 leaves the model alone).
    double gamma = 1.0;
    /// Avoid shapes for reach-avoid, e.g. "ball:0:0.5;0.5:0.1" or
    /// "box:0:0;0:0.2;0.2".
    std::vector<std::string> avoid;
    std::string out = "out";
    /// Grid points per non-degenerate axis for the value curve and action map.
    int curve_res = 101;
    int map_res = 41;
    /// Greedy tolerance of the action map; 0 uses the run's precision floor.
    double map_tolerance = 0;
    std::string snapshot_in;
    bool snapshot_out = false;
};

/// Loads the model, solves, and writes trace.csv, curve.csv, actionmap.csv,
/// summary.csv (byte-identical for identical spec and seed) and timing.csv
/// into spec.out. On failure a JSON error record goes to `err` and to
/// error.json. Returns an ExitCode.
int run(const RunSpec& spec, std::ostream& out, std::ostream& err);

/// Dry-run checks on a model reference; prints a report to `out`.
/// Returns kOk when there are no errors (warnings allowed).
int validate(const std::string& model, const models::CatalogOptions& catalog, std::ostream& out,
             std::ostream& err);

/// Parses "ball:<tag>:<c1;c2..>:<r>" or "box:<tag>:<lo1;..>:<hi1;..>".
RegionSet parse_shape(const std::string& text);

/// Full command line: `run ...` or `validate ...`.
int main(int argc, char** argv, std::ostream& out, std::ostream& err);

}  // namespace lipreach::cli
