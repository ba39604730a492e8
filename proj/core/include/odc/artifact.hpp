#pragma once

#include "odc/cqr_solver.hpp"
#include "odc/data_model.hpp"
#include "odc/detectors.hpp"
#include "odc/kernel_km.hpp"

#include <filesystem>
#include <map>
#include <string>

namespace odc {

std::string tool_version();

struct DatasetFingerprint {
    std::string path;   // absolute, lexically normal
    std::string sha256; // hex digest of the file bytes
};

DatasetFingerprint fingerprint_file(const std::filesystem::path& path);

/// Everything a detect run produced; enough to re-threshold scores, redraw
/// the plot or print the coefficient table without refitting.
struct AnalysisArtifact {
    std::string version;
    DatasetFingerprint fingerprint;
    CsvSchema schema;
    bool log_time = false;
    DetectorConfig detector;
    BandwidthConfig bandwidth;
    std::map<double, QuantileFit> fits;
    DetectionResult detection;
};

inline constexpr int kArtifactFormat = 1;

/// Versioned JSON; every real number is a decimal string with 17 significant
/// digits so reading it back reproduces the doubles bit for bit.
std::string artifact_to_json(const AnalysisArtifact& a);
AnalysisArtifact artifact_from_json(const std::string& text);

void save_artifact(const std::filesystem::path& path, const AnalysisArtifact& a);
AnalysisArtifact load_artifact(const std::filesystem::path& path);

/// Reloads the dataset the artifact was computed from, failing with
/// FingerprintMismatch when the file changed since.
Dataset reload_dataset(const AnalysisArtifact& a);

} // namespace odc
