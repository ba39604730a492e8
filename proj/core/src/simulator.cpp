#include "odc/simulator.hpp"

#include "odc/error.hpp"
#include "odc/normal.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <iomanip>
#include <optional>
#include <ostream>
#include <set>
#include <thread>

namespace odc {

std::vector<GridCell> default_grid()
{
    std::vector<GridCell> grid;
    for (double k : {1.0, 1.5, 2.0, 3.0})
        grid.push_back({Method::Residual, k});
    for (double k : {0.5, 1.0, 1.5, 2.0})
        grid.push_back({Method::Boxplot, k});
    for (double k : {2.0, 3.0, 4.0})
        grid.push_back({Method::Score, k});
    return grid;
}

void SimConfig::validate() const
{
    if (n_clean < 1 || n_outlier < 1 || replicates < 1)
        throw Error(ErrorKind::InvalidArgument, "n_clean, n_outlier and replicates must be at least 1");
    if (!(censor_upper > 0.0))
        throw Error(ErrorKind::InvalidArgument, "censor_upper must be positive");
    if (!(c > 0.0))
        throw Error(ErrorKind::InvalidArgument, "outlier magnitude c must be positive");
    if (!(bandwidth.h > 0.0))
        throw Error(ErrorKind::InvalidArgument, "bandwidth must be positive");
    for (const auto& cell : grid) {
        if (!(cell.cutoff > 0.0))
            throw Error(ErrorKind::InvalidArgument, "grid cutoffs must be positive");
    }
}

namespace {

std::uint64_t splitmix64(std::uint64_t x)
{
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

} // namespace

ReplicateStream::ReplicateStream(std::uint64_t seed, std::uint64_t replicate, StreamPurpose purpose)
{
    std::uint64_t key = splitmix64(seed);
    key = splitmix64(key ^ replicate);
    key = splitmix64(key ^ static_cast<std::uint64_t>(purpose));
    engine_.seed(key);
}

double ReplicateStream::uniform()
{
    return (static_cast<double>(engine_() >> 11) + 0.5) * 0x1.0p-53;
}

double ReplicateStream::normal()
{
    return normal_quantile(uniform());
}

int ReplicateStream::discrete(int lo, int hi)
{
    const int span = hi - lo + 1;
    const int k = static_cast<int>(std::floor(uniform() * span));
    return lo + std::min(k, span - 1);
}

SimulatedData generate_dataset(const SimConfig& cfg, std::size_t replicate)
{
    cfg.validate();
    ReplicateStream covariate(cfg.seed, replicate, StreamPurpose::Covariate);
    ReplicateStream noise(cfg.seed, replicate, StreamPurpose::Noise);
    ReplicateStream censor(cfg.seed, replicate, StreamPurpose::Censor);

    const std::size_t n = cfg.n_clean + cfg.n_outlier;
    std::vector<Observation> obs;
    obs.reserve(n);
    std::vector<bool> truth(n, false);
    std::size_t censored_clean = 0;

    for (std::size_t i = 0; i < n; ++i) {
        const double x = covariate.discrete(1, 20);
        const double sigma = std::sqrt(std::exp(3.0 - x / 8.0));
        const double eps = sigma * noise.normal();
        const double mean = cfg.beta0 + cfg.beta1 * x;

        Observation o;
        o.covariates = {x};
        if (i < cfg.n_clean) {
            const double log_t = mean + eps;
            const double log_c = cfg.censor_upper * censor.uniform();
            o.time = std::min(log_t, log_c);
            o.status = log_t <= log_c ? 1 : 0;
            censored_clean += o.status == 0 ? 1 : 0;
        } else {
            o.time = mean + cfg.c * sigma + std::max(0.0, eps);
            o.status = 1;
            truth[i] = true;
        }
        obs.push_back(std::move(o));
    }

    SimulatedData out{Dataset(std::move(obs), {"x"}, ResponseTransform::Log), std::move(truth), 0.0};
    out.censoring_rate = static_cast<double>(censored_clean) / static_cast<double>(cfg.n_clean);
    return out;
}

SimMetrics evaluate_detection(const std::vector<bool>& flags, const std::vector<bool>& truth)
{
    if (flags.size() != truth.size())
        throw Error(ErrorKind::LengthMismatch, "flags and truth differ in length");
    SimMetrics m;
    for (std::size_t i = 0; i < flags.size(); ++i) {
        if (truth[i])
            (flags[i] ? m.tp : m.fn) += 1.0;
        else
            (flags[i] ? m.fp : m.tn) += 1.0;
    }
    const double n = static_cast<double>(flags.size());
    m.accuracy = n > 0 ? (m.tp + m.tn) / n : 0.0;
    m.sensitivity = (m.tp + m.fn) > 0 ? m.tp / (m.tp + m.fn) : 0.0;
    m.specificity = (m.tn + m.fp) > 0 ? m.tn / (m.tn + m.fp) : 0.0;
    m.n_selected = m.tp + m.fp;
    m.replicates_used = 1;
    return m;
}

namespace {

struct ReplicateOutcome {
    std::vector<SimMetrics> cells;
    double censoring_rate = 0.0;
    double censored_total = 0.0;
};

ReplicateOutcome run_replicate(const SimConfig& cfg, std::size_t replicate)
{
    const auto sim = generate_dataset(cfg, replicate);
    const Dataset data = scale_covariates(sim.data);
    const auto cdf = local_cdf_at_censored(data, cfg.bandwidth);

    std::set<double> levels;
    for (const auto& cell : cfg.grid) {
        if (cell.method == Method::Residual || cell.method == Method::Score)
            levels.insert(0.50);
        if (cell.method == Method::Boxplot || cell.method == Method::Score) {
            levels.insert(0.25);
            levels.insert(0.75);
        }
    }
    std::vector<double> q25, q50, q75;
    for (double tau : levels) {
        const auto fitted = predict_rows(fit_cqr(data, tau, cdf), data);
        (tau == 0.25 ? q25 : tau == 0.50 ? q50 : q75) = fitted;
    }

    const auto y = data.times();
    const auto statuses = data.statuses();
    std::optional<OutlyingScores> scores;

    ReplicateOutcome out;
    out.censoring_rate = sim.censoring_rate;
    out.censored_total = static_cast<double>(data.censored_count()) / static_cast<double>(data.size());
    for (const auto& cell : cfg.grid) {
        DetectorConfig dc;
        dc.method = cell.method;
        DetectionResult res;
        switch (cell.method) {
        case Method::Residual:
            dc.k_r = cell.cutoff;
            res = detect_residual(y, q50, dc);
            break;
        case Method::Boxplot:
            dc.k_b = cell.cutoff;
            res = detect_boxplot(y, q25, q75, dc);
            break;
        case Method::Score:
            if (!scores)
                scores = outlying_scores(y, q25, q50, q75);
            dc.k_s = cell.cutoff;
            res = detect_score(*scores, dc, statuses);
            break;
        }
        out.cells.push_back(evaluate_detection(res.flags, sim.truth));
    }
    return out;
}

} // namespace

StudyResult run_study(const SimConfig& cfg)
{
    cfg.validate();
    std::vector<std::optional<ReplicateOutcome>> outcomes(cfg.replicates);

    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t r = next++; r < cfg.replicates; r = next++) {
            try {
                outcomes[r] = run_replicate(cfg, r);
            } catch (const Error&) {
                outcomes[r].reset();
            }
        }
    };
    unsigned threads = cfg.threads > 0 ? cfg.threads : std::max(1u, std::thread::hardware_concurrency());
    threads = static_cast<unsigned>(std::min<std::size_t>(threads, cfg.replicates));
    if (threads <= 1) {
        worker();
    } else {
        std::vector<std::jthread> pool;
        for (unsigned t = 0; t < threads; ++t)
            pool.emplace_back(worker);
    }

    // Merge in replicate order so the table does not depend on scheduling.
    StudyResult result;
    result.replicates_requested = cfg.replicates;
    std::vector<SimMetrics> sums(cfg.grid.size());
    std::size_t used = 0;
    for (const auto& o : outcomes) {
        if (!o) {
            ++result.failures;
            continue;
        }
        ++used;
        result.mean_censoring_rate += o->censoring_rate;
        result.mean_censored_total += o->censored_total;
        for (std::size_t k = 0; k < sums.size(); ++k) {
            sums[k].tp += o->cells[k].tp;
            sums[k].fp += o->cells[k].fp;
            sums[k].tn += o->cells[k].tn;
            sums[k].fn += o->cells[k].fn;
        }
    }
    if (used > 0) {
        result.mean_censoring_rate /= static_cast<double>(used);
        result.mean_censored_total /= static_cast<double>(used);
    }

    const double n = static_cast<double>(cfg.n_clean + cfg.n_outlier);
    for (std::size_t k = 0; k < cfg.grid.size(); ++k) {
        StudyCell cell;
        cell.method = cfg.grid[k].method;
        cell.cutoff = cfg.grid[k].cutoff;
        cell.c = cfg.c;
        cell.censor_upper = cfg.censor_upper;
        SimMetrics& m = cell.metrics;
        m.replicates_used = used;
        if (used > 0) {
            const double u = static_cast<double>(used);
            m.tp = sums[k].tp / u;
            m.fp = sums[k].fp / u;
            m.tn = sums[k].tn / u;
            m.fn = sums[k].fn / u;
            m.n_selected = m.tp + m.fp;
            m.accuracy = (m.tp + m.tn) / n;
            m.sensitivity = m.tp / (m.tp + m.fn);
            m.specificity = m.tn / (m.tn + m.fp);
        }
        result.cells.push_back(cell);
    }
    return result;
}

void write_study_csv(std::ostream& out, std::span<const StudyResult> results, bool header)
{
    if (header)
        out << "c,censor_upper,method,cutoff,accuracy,sensitivity,specificity,tp,fp,tn,fn,n_selected,"
               "replicates_used\n";
    for (const auto& r : results) {
        for (const auto& cell : r.cells) {
            const auto& m = cell.metrics;
            out << to_decimal17(cell.c) << ',' << to_decimal17(cell.censor_upper) << ',' << to_string(cell.method)
                << ',' << to_decimal17(cell.cutoff) << ',' << to_decimal17(m.accuracy) << ','
                << to_decimal17(m.sensitivity) << ',' << to_decimal17(m.specificity) << ',' << to_decimal17(m.tp)
                << ',' << to_decimal17(m.fp) << ',' << to_decimal17(m.tn) << ',' << to_decimal17(m.fn) << ','
                << to_decimal17(m.n_selected) << ',' << m.replicates_used << '\n';
        }
    }
}

void write_study_text(std::ostream& out, std::span<const StudyResult> results)
{
    auto label = [](Method m) {
        switch (m) {
        case Method::Residual: return "Residual";
        case Method::Boxplot: return "Boxplot";
        case Method::Score: return "Scoring";
        }
        return "";
    };
    char line[256];
    for (const auto& r : results) {
        if (r.cells.empty())
            continue;
        std::snprintf(line, sizeof line,
                      "log C ~ U(0, %g): censoring rate %.3f (clean rows %.3f), %zu of %zu replicates used\n",
                      r.cells.front().censor_upper, r.mean_censored_total, r.mean_censoring_rate,
                      r.cells.front().metrics.replicates_used, r.replicates_requested);
        out << line;
        out << "  c*sigma  Algorithm     k  Accuracy  Sensitivity  Specificity     TP     FP      TN     FN  "
               "#Selected\n";
        Method previous = r.cells.front().method;
        bool first = true;
        for (const auto& cell : r.cells) {
            if (!first && cell.method != previous)
                out << "  " << std::string(104, '-') << '\n';
            const auto& m = cell.metrics;
            std::snprintf(line, sizeof line,
                          "  %5gs   %-9s %5.1f  %8.3f  %11.3f  %11.3f  %5.1f  %5.1f  %6.1f  %5.1f  %9.1f\n",
                          cell.c, (first || cell.method != previous) ? label(cell.method) : "", cell.cutoff,
                          m.accuracy, m.sensitivity, m.specificity, m.tp, m.fp, m.tn, m.fn, m.n_selected);
            out << line;
            previous = cell.method;
            first = false;
        }
        out << '\n';
    }
}

} // namespace odc
