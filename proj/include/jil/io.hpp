#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>

#include <json.hpp>

#include "jil/core.hpp"
#include "jil/policy.hpp"

namespace jil::io {

inline constexpr const char* kSchemaVersion = "1";

/// Reads a CSV with header y,a,x1..xp. LF and CRLF line endings; '.' is the
/// only decimal separator. Rows are reported 1-based, counting the header
/// as row 1.
Dataset read_csv(std::istream& in);
Dataset read_csv(const std::filesystem::path& path);

/// 17 significant digits, independent of the global locale.
std::string format_double(double v);

void write_csv(std::ostream& out, const Dataset& d);
void write_csv(const std::filesystem::path& path, const Dataset& d);

/// Writes to a sibling temporary file and renames it over `path`.
void write_atomic(const std::filesystem::path& path, const std::string& content);

/// Min-max map of raw treatments applied at fit time.
struct TreatmentScale {
  double min = 0.0;
  double max = 1.0;

  double apply(double a) const;
};

/// Rescales treatments in place when any value falls outside [0, 1].
std::optional<TreatmentScale> normalize_if_needed(Dataset& d);

struct Provenance {
  std::size_t n = 0;
  std::size_t p = 0;
  std::uint64_t seed = 0;
  std::string created_at;
  std::optional<TreatmentScale> treatment_scale;
};

struct ModelArtifact {
  JilFit fit;
  PropensityModel propensity;
  Provenance provenance;
};

/// UTC timestamp from SOURCE_DATE_EPOCH when set, else the current time.
std::string timestamp_now();

nlohmann::json to_json(const ModelArtifact& artifact);
/// Throws Error(SchemaMismatch) on an unknown version or a malformed payload.
ModelArtifact artifact_from_json(const nlohmann::json& j);

std::string dump_artifact(const ModelArtifact& artifact);
void save_artifact(const std::filesystem::path& path, const ModelArtifact& artifact);
ModelArtifact load_artifact(const std::filesystem::path& path);

/// Covariate dimension the fitted models expect.
std::size_t model_inputs(const JilFit& fit);

}  // namespace jil::io
