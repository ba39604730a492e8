#include "odc/data_model.hpp"

#include "odc/error.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

namespace odc {

std::string_view to_string(ResponseTransform t)
{
    return t == ResponseTransform::Log ? "log" : "identity";
}

Dataset::Dataset(std::vector<Observation> observations, std::vector<std::string> covariate_names,
                 ResponseTransform transform, std::optional<std::vector<CovariateScaling>> scaling)
    : observations_(std::move(observations))
    , names_(std::move(covariate_names))
    , transform_(transform)
    , scaling_(std::move(scaling))
{
    if (observations_.size() < 2)
        throw Error(ErrorKind::EmptyFile, "a dataset needs at least 2 observations, got " +
                                              std::to_string(observations_.size()));
    const std::size_t p = names_.size();
    if (scaling_ && scaling_->size() != p)
        throw Error(ErrorKind::DimensionMismatch, "scaling metadata does not match covariate count");

    for (std::size_t i = 0; i < observations_.size(); ++i) {
        const auto& o = observations_[i];
        const std::string where = "row " + std::to_string(i + 1);
        if (!std::isfinite(o.time))
            throw Error(ErrorKind::UnparsableCell, where + ": time is not finite");
        if (o.status != 0 && o.status != 1)
            throw Error(ErrorKind::UnparsableCell, where + ": status must be 0 or 1");
        if (o.covariates.size() != p)
            throw Error(ErrorKind::DimensionMismatch,
                        where + ": expected " + std::to_string(p) + " covariates");
        for (double v : o.covariates) {
            if (!std::isfinite(v))
                throw Error(ErrorKind::UnparsableCell, where + ": covariate is not finite");
            if (scaling_ && (v < 0.0 || v > 1.0))
                throw Error(ErrorKind::InvalidArgument, where + ": scaled covariate outside [0,1]");
        }
    }
}

std::vector<double> Dataset::times() const
{
    std::vector<double> out;
    out.reserve(size());
    for (const auto& o : observations_)
        out.push_back(o.time);
    return out;
}

std::vector<int> Dataset::statuses() const
{
    std::vector<int> out;
    out.reserve(size());
    for (const auto& o : observations_)
        out.push_back(o.status);
    return out;
}

std::size_t Dataset::censored_count() const
{
    return static_cast<std::size_t>(std::count_if(observations_.begin(), observations_.end(),
                                                  [](const Observation& o) { return o.status == 0; }));
}

double Dataset::raw_covariate(std::size_t i, std::size_t j) const
{
    const double v = observations_[i].covariates[j];
    if (!scaling_)
        return v;
    const auto& s = (*scaling_)[j];
    if (s.degenerate)
        return s.min;
    return s.min + v * (s.max - s.min);
}

std::vector<double> Dataset::raw_covariates(std::size_t i) const
{
    std::vector<double> out(dimension());
    for (std::size_t j = 0; j < out.size(); ++j)
        out[j] = raw_covariate(i, j);
    return out;
}

std::vector<double> Dataset::unscale_coefficients(std::span<const double> beta) const
{
    std::vector<double> out(beta.begin(), beta.end());
    if (!scaling_)
        return out;
    if (beta.size() != dimension() + 1)
        throw Error(ErrorKind::DimensionMismatch, "coefficient vector must have p+1 entries");
    for (std::size_t j = 0; j < dimension(); ++j) {
        const auto& s = (*scaling_)[j];
        if (s.degenerate) {
            out[j + 1] = 0.0;
            continue;
        }
        const double range = s.max - s.min;
        out[j + 1] = beta[j + 1] / range;
        out[0] -= beta[j + 1] * s.min / range;
    }
    return out;
}

// ---------------------------------------------------------------------------
// CSV

namespace {

std::string_view trim(std::string_view s)
{
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t'))
        s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r'))
        s.remove_suffix(1);
    if (s.size() >= 2 && s.front() == '"' && s.back() == '"')
        s = s.substr(1, s.size() - 2);
    return s;
}

std::vector<std::string> split_line(const std::string& line)
{
    std::vector<std::string> cells;
    std::string_view rest(line);
    while (true) {
        auto pos = rest.find(',');
        cells.emplace_back(trim(rest.substr(0, pos)));
        if (pos == std::string_view::npos)
            break;
        rest.remove_prefix(pos + 1);
    }
    return cells;
}

std::size_t column_index(const std::vector<std::string>& header, const std::string& name)
{
    auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end())
        throw Error(ErrorKind::MissingColumn, "column '" + name + "' not found in header");
    return static_cast<std::size_t>(it - header.begin());
}

[[noreturn]] void bad_cell(std::size_t row, const std::string& col, const std::string& text)
{
    throw Error(ErrorKind::UnparsableCell,
                "row " + std::to_string(row) + ", column '" + col + "': '" + text + "'");
}

} // namespace

std::optional<double> parse_double(std::string_view text)
{
    text = trim(text);
    if (!text.empty() && text.front() == '+')
        text.remove_prefix(1);
    if (text.empty())
        return std::nullopt;
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
    if (ec != std::errc() || ptr != text.data() + text.size())
        return std::nullopt;
    return v;
}

std::string to_decimal17(double v)
{
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v, std::chars_format::general, 17);
    return std::string(buf, ptr);
}

Dataset read_csv(std::istream& in, const CsvSchema& schema)
{
    std::string line;
    if (!std::getline(in, line) || trim(line).empty())
        throw Error(ErrorKind::EmptyFile, "no header row");
    const auto header = split_line(line);

    const std::size_t time_idx = column_index(header, schema.time);
    const std::size_t status_idx = column_index(header, schema.status);
    std::vector<std::size_t> cov_idx;
    for (const auto& c : schema.covariates)
        cov_idx.push_back(column_index(header, c));

    std::vector<Observation> obs;
    std::size_t row = 0;
    while (std::getline(in, line)) {
        if (trim(line).empty())
            continue;
        ++row;
        const auto cells = split_line(line);
        if (cells.size() != header.size())
            throw Error(ErrorKind::UnparsableCell, "row " + std::to_string(row) + ": expected " +
                                                       std::to_string(header.size()) + " cells, got " +
                                                       std::to_string(cells.size()));
        Observation o;
        auto t = parse_double(cells[time_idx]);
        if (!t || !std::isfinite(*t))
            bad_cell(row, schema.time, cells[time_idx]);
        if (*t <= 0.0)
            throw Error(ErrorKind::NonPositiveTime,
                        "row " + std::to_string(row) + ": time " + cells[time_idx] + " is not positive");
        o.time = *t;

        const auto& s = cells[status_idx];
        if (s == "0")
            o.status = 0;
        else if (s == "1")
            o.status = 1;
        else
            bad_cell(row, schema.status, s);

        for (std::size_t j = 0; j < cov_idx.size(); ++j) {
            auto v = parse_double(cells[cov_idx[j]]);
            if (!v || !std::isfinite(*v))
                bad_cell(row, schema.covariates[j], cells[cov_idx[j]]);
            o.covariates.push_back(*v);
        }
        obs.push_back(std::move(o));
    }
    if (obs.empty())
        throw Error(ErrorKind::EmptyFile, "header present but no data rows");
    return Dataset(std::move(obs), schema.covariates);
}

Dataset load_csv(const std::filesystem::path& path, const CsvSchema& schema)
{
    std::ifstream in(path);
    if (!in)
        throw Error(ErrorKind::IoError, "cannot open " + path.string());
    return read_csv(in, schema);
}

void write_csv(std::ostream& out, const Dataset& d, const CsvSchema& names)
{
    out << (names.time.empty() ? "time" : names.time) << ','
        << (names.status.empty() ? "status" : names.status);
    for (const auto& n : d.covariate_names())
        out << ',' << n;
    out << '\n';
    for (const auto& o : d.observations()) {
        out << to_decimal17(o.time) << ',' << o.status;
        for (double v : o.covariates)
            out << ',' << to_decimal17(v);
        out << '\n';
    }
}

void write_csv(const std::filesystem::path& path, const Dataset& d, const CsvSchema& names)
{
    std::ofstream out(path);
    if (!out)
        throw Error(ErrorKind::IoError, "cannot write " + path.string());
    write_csv(out, d, names);
}

// ---------------------------------------------------------------------------
// Transforms

Dataset log_transform(const Dataset& d)
{
    if (d.response_transform() == ResponseTransform::Log)
        throw Error(ErrorKind::AlreadyTransformed, "response is already on the log scale");
    auto obs = d.observations();
    for (std::size_t i = 0; i < obs.size(); ++i) {
        if (!(obs[i].time > 0.0))
            throw Error(ErrorKind::NonPositiveTime,
                        "row " + std::to_string(i + 1) + ": cannot take log of " + to_decimal17(obs[i].time));
        obs[i].time = std::log(obs[i].time);
    }
    return Dataset(std::move(obs), d.covariate_names(), ResponseTransform::Log, d.scaling());
}

Dataset scale_covariates(const Dataset& d)
{
    const std::size_t p = d.dimension();
    if (p == 0)
        throw Error(ErrorKind::InvalidArgument, "scale_covariates needs at least one covariate");

    auto obs = d.observations();
    std::vector<CovariateScaling> scaling(p);
    for (std::size_t j = 0; j < p; ++j) {
        double lo = obs[0].covariates[j];
        double hi = lo;
        for (const auto& o : obs) {
            lo = std::min(lo, o.covariates[j]);
            hi = std::max(hi, o.covariates[j]);
        }
        const double range = hi - lo;
        CovariateScaling s{lo, hi, !(range > 0.0)};
        for (auto& o : obs)
            o.covariates[j] = s.degenerate ? 0.0 : std::clamp((o.covariates[j] - lo) / range, 0.0, 1.0);

        // Compose with an earlier scaling so the raw scale stays recoverable.
        if (d.scaling()) {
            const auto& prev = (*d.scaling())[j];
            const double prev_range = prev.max - prev.min;
            if (prev.degenerate) {
                s = prev;
            } else {
                s.min = prev.min + lo * prev_range;
                s.max = prev.min + hi * prev_range;
            }
        }
        scaling[j] = s;
    }
    return Dataset(std::move(obs), d.covariate_names(), d.response_transform(), std::move(scaling));
}

} // namespace odc
