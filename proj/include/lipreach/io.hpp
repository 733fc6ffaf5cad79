#pragma once

#include <string>
#include <utility>
#include <vector>

#include "lipreach/bound_store.hpp"
#include "lipreach/model.hpp"
#include "lipreach/models.hpp"
#include "lipreach/oracle.hpp"
#include "lipreach/solvers.hpp"

namespace lipreach::io {

struct FormatVersion {
    int major = 1;
    int minor = 0;
    bool operator==(const FormatVersion&) const = default;
};
inline constexpr FormatVersion kCurrentVersion{1, 0};

/// Every export starts with
///   # lipreach-<kind> <major>.<minor>
///   # key=value          (one line per entry, values escaped)
/// followed by a CSV column line and rows. Readers reject other kinds and
/// higher majors.
struct Header {
    std::string kind;
    FormatVersion version = kCurrentVersion;
    std::vector<std::pair<std::string, std::string>> meta;

    const std::string* find(const std::string& key) const;
    bool operator==(const Header&) const = default;
};

/// Points in CSV cells: "<tag>:<c1>;<c2>;..." with round-trip precision.
std::string encode_point(const std::vector<double>& coords, int tag);
std::pair<std::vector<double>, int> decode_point(const std::string& cell);

std::string write_trace(const Header& h, const std::vector<TraceRow>& rows);
std::pair<Header, std::vector<TraceRow>> read_trace(const std::string& text);

struct CurveRow {
    StatePoint state;
    double lower = 0;
    double upper = 1;
    bool operator==(const CurveRow&) const = default;
};
std::string write_curve(const Header& h, const std::vector<CurveRow>& rows);
std::pair<Header, std::vector<CurveRow>> read_curve(const std::string& text);

struct ActionMapRow {
    StatePoint state;
    std::vector<std::string> actions;  // greedy set, by label
    bool operator==(const ActionMapRow&) const = default;
};
std::string write_action_map(const Header& h, const std::vector<ActionMapRow>& rows);
std::pair<Header, std::vector<ActionMapRow>> read_action_map(const std::string& text);

/// Run summary: key,value rows.
std::string write_summary(const Header& h, const std::vector<std::pair<std::string, std::string>>& rows);
std::pair<Header, std::vector<std::pair<std::string, std::string>>> read_summary(const std::string& text);

/// Store snapshot: model fingerprint, declared constants and every record in
/// hex floats, closed by a CRC-32 of everything before it.
std::string write_snapshot(const BoundStore& store, const MdpModel& model);
/// Throws IntegrityError on a bad checksum, a foreign fingerprint or
/// different constants.
std::vector<SampleRecord> read_snapshot(const std::string& text, const MdpModel& model);
BoundStore restore_store(const std::string& text, const MdpModel& model, StoreOptions options = {});

/// Explicit finite MDP table:
///   lipreach-finite 1.0     (optional)
///   states <n>
///   initial <i>
///   target <i> [<j> ...]
///   sink <i> [<j> ...]
///   trans <state> <action> <successor> <probability>
/// '#' starts a comment. Actions of a state are numbered 0..k-1.
FiniteMdp parse_finite(const std::string& text);
std::string write_finite(const FiniteMdp& m);

/// YAML model file; see README for the schema. Unknown keys are errors.
MdpModel parse_model_file(const std::string& text);

/// Catalog name, "finite-from-file:<path>", "model-file:<path>", or a path
/// ending in .mdp / .yaml / .yml.
MdpModel resolve_model(const std::string& ref, const models::CatalogOptions& options = {});

std::string read_file(const std::string& path);
/// Writes to a temporary file next to `path` and renames it into place.
void write_file_atomic(const std::string& path, const std::string& content);

/// Header entries echoing a solver configuration.
std::vector<std::pair<std::string, std::string>> config_meta(const SolverConfig& c);

}  // namespace lipreach::io
