#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace odc {

enum class ResponseTransform { Identity, Log };

std::string_view to_string(ResponseTransform t);

/// One censored survival record: observed time, event indicator, covariates.
struct Observation {
    double time = 0.0;
    int status = 0; // 1 = event, 0 = censored
    std::vector<double> covariates;
};

/// Affine map used to bring one covariate column onto [0, 1].
struct CovariateScaling {
    double min = 0.0;
    double max = 0.0;
    bool degenerate = false; // zero range; every value was mapped to 0
};

/// Column selection for CSV input.
struct CsvSchema {
    std::string time;
    std::string status;
    std::vector<std::string> covariates;
};

/// Immutable censored-survival table. Row order is the file order and is kept
/// by every transformation so reports can cite original row numbers.
class Dataset {
public:
    Dataset(std::vector<Observation> observations, std::vector<std::string> covariate_names,
            ResponseTransform transform = ResponseTransform::Identity,
            std::optional<std::vector<CovariateScaling>> scaling = std::nullopt);

    std::size_t size() const noexcept { return observations_.size(); }
    std::size_t dimension() const noexcept { return names_.size(); }

    const std::vector<Observation>& observations() const noexcept { return observations_; }
    const Observation& operator[](std::size_t i) const { return observations_[i]; }
    const std::vector<std::string>& covariate_names() const noexcept { return names_; }
    ResponseTransform response_transform() const noexcept { return transform_; }
    const std::optional<std::vector<CovariateScaling>>& scaling() const noexcept { return scaling_; }
    bool is_scaled() const noexcept { return scaling_.has_value(); }

    std::vector<double> times() const;
    std::vector<int> statuses() const;
    std::size_t censored_count() const;

    /// Covariate j of row i on the original (pre-scaling) scale.
    double raw_covariate(std::size_t i, std::size_t j) const;
    std::vector<double> raw_covariates(std::size_t i) const;

    /// Maps coefficients fitted against scaled covariates (intercept first)
    /// back to the original covariate scale. Identity when unscaled.
    std::vector<double> unscale_coefficients(std::span<const double> beta) const;

private:
    std::vector<Observation> observations_;
    std::vector<std::string> names_;
    ResponseTransform transform_;
    std::optional<std::vector<CovariateScaling>> scaling_;
};

Dataset read_csv(std::istream& in, const CsvSchema& schema);
Dataset load_csv(const std::filesystem::path& path, const CsvSchema& schema);

/// Writes `time,status,<covariates...>` with 17 significant digits.
void write_csv(std::ostream& out, const Dataset& d, const CsvSchema& names = {});
void write_csv(const std::filesystem::path& path, const Dataset& d, const CsvSchema& names = {});

Dataset log_transform(const Dataset& d);
Dataset scale_covariates(const Dataset& d);

/// Shortest-safe decimal text: 17 significant digits, round-trips exactly.
std::string to_decimal17(double v);
std::optional<double> parse_double(std::string_view text);

} // namespace odc
