#pragma once

#include "odc/data_model.hpp"
#include "odc/detectors.hpp"
#include "odc/kernel_km.hpp"

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <random>
#include <span>
#include <vector>

namespace odc {

struct GridCell {
    Method method = Method::Score;
    double cutoff = 0.0;
};

/// Default cutoff grid: k_r in {1, 1.5, 2, 3},
/// k_b in {0.5, 1, 1.5, 2}, k_s in {2, 3, 4}.
std::vector<GridCell> default_grid();

/// Heteroscedastic log-linear survival model with planted upper outliers.
struct SimConfig {
    std::size_t n_clean = 480;
    std::size_t n_outlier = 20;
    double beta0 = 10.0;
    double beta1 = -0.3;
    double c = 3.0;             // outlier shift in units of sigma_i
    double censor_upper = 40.0; // log C ~ U(0, censor_upper)
    std::size_t replicates = 100;
    std::uint64_t seed = 20140521;
    std::vector<GridCell> grid = default_grid();
    BandwidthConfig bandwidth;
    unsigned threads = 0; // 0 = hardware concurrency

    void validate() const;
};

enum class StreamPurpose : std::uint64_t { Covariate = 1, Noise = 2, Censor = 3 };

/// Random stream keyed by (seed, replicate, purpose). Uniforms are built from
/// the top 53 bits of mt19937_64 output and normals by inverse CDF, so draws
/// are identical across platforms.
class ReplicateStream {
public:
    ReplicateStream(std::uint64_t seed, std::uint64_t replicate, StreamPurpose purpose);

    double uniform();       // open interval (0, 1)
    double normal();        // N(0, 1)
    int discrete(int lo, int hi); // uniform on {lo, ..., hi}

private:
    std::mt19937_64 engine_;
};

struct SimulatedData {
    Dataset data;             // log-scale responses, unscaled covariate "x"
    std::vector<bool> truth;  // planted outliers
    double censoring_rate = 0.0; // among clean rows
};

SimulatedData generate_dataset(const SimConfig& cfg, std::size_t replicate);

struct SimMetrics {
    double accuracy = 0.0;
    double sensitivity = 0.0;
    double specificity = 0.0;
    double tp = 0.0;
    double fp = 0.0;
    double tn = 0.0;
    double fn = 0.0;
    double n_selected = 0.0;
    std::size_t replicates_used = 0;
};

SimMetrics evaluate_detection(const std::vector<bool>& flags, const std::vector<bool>& truth);

struct StudyCell {
    Method method = Method::Score;
    double cutoff = 0.0;
    double c = 0.0;
    double censor_upper = 0.0;
    SimMetrics metrics;
};

struct StudyResult {
    std::vector<StudyCell> cells; // grid order
    std::size_t replicates_requested = 0;
    std::size_t failures = 0;
    double mean_censoring_rate = 0.0;
    double mean_censored_total = 0.0; // censoring fraction over all rows
};

/// Runs every replicate (in parallel when threads allow), fits the quantile
/// levels the grid needs once per replicate, and averages confusion counts.
/// Failed replicates are dropped and counted.
StudyResult run_study(const SimConfig& cfg);

void write_study_csv(std::ostream& out, std::span<const StudyResult> results, bool header = true);
void write_study_text(std::ostream& out, std::span<const StudyResult> results);

} // namespace odc
