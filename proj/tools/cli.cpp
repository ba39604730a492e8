#include "cli.hpp"

#include "odc/artifact.hpp"
#include "odc/cqr_solver.hpp"
#include "odc/data_model.hpp"
#include "odc/detectors.hpp"
#include "odc/error.hpp"
#include "odc/report.hpp"
#include "odc/simulator.hpp"

#include "CLI11.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <ostream>
#include <set>
#include <sstream>

namespace odc::cli {

namespace fs = std::filesystem;

namespace {

struct DetectArgs {
    std::string data;
    std::string time_col;
    std::string status_col;
    std::vector<std::string> covariates;
    bool log_time = false;
    std::string method = "score";
    double k_r = 1.5;
    double k_b = 1.5;
    std::optional<double> k_s;
    double p_ref = 0.75;
    double h = 0.05;
    std::string out = "odc-out";
    bool fast = false;
};

struct UpdateArgs {
    std::string artifact;
    double k_s = 0.0;
    std::string out;
};

struct PlotArgs {
    std::string artifact;
    std::optional<double> k_s;
    std::string out;
};

struct SimulateArgs {
    std::vector<double> c{3.0};
    std::vector<double> censor_upper{40.0};
    std::vector<std::string> methods;
    std::vector<double> k_r;
    std::vector<double> k_b;
    std::vector<double> k_s;
    std::size_t replicates = 100;
    std::uint64_t seed = SimConfig{}.seed;
    double h = 0.05;
    unsigned threads = 0;
    std::string out;
    std::string dump_dataset;
    std::size_t dump_replicate = 0;
};

std::vector<double> levels_for(Method m, bool fast)
{
    if (!fast)
        return {std::begin(kCoefLevels), std::end(kCoefLevels)};
    return required_levels(m);
}

const QuantileFit& fit_at(const std::map<double, QuantileFit>& fits, double tau)
{
    for (const auto& [t, f] : fits) {
        if (std::abs(t - tau) < 1e-12)
            return f;
    }
    throw Error(ErrorKind::MissingFit, "artifact has no fit at tau = " + std::to_string(tau));
}

bool has_fit(const std::map<double, QuantileFit>& fits, double tau)
{
    for (const auto& [t, f] : fits) {
        if (std::abs(t - tau) < 1e-12)
            return true;
    }
    return false;
}

std::optional<OutlyingScores> scores_if_available(const Dataset& d, const std::map<double, QuantileFit>& fits)
{
    if (!has_fit(fits, 0.25) || !has_fit(fits, 0.50) || !has_fit(fits, 0.75))
        return std::nullopt;
    return outlying_scores(d, fit_at(fits, 0.25), fit_at(fits, 0.50), fit_at(fits, 0.75));
}

void write_outputs(const fs::path& dir, const AnalysisArtifact& a, const Dataset& d, std::ostream& out)
{
    fs::create_directories(dir);
    save_artifact(dir / "artifact.json", a);

    ReportOptions opts;
    opts.data_label = a.fingerprint.path;
    opts.bandwidth = a.bandwidth.h;
    out << render_report(d, a.detection, a.detector, opts);

    opts.full_listing = true;
    write_text_file(dir / "report.txt", render_report(d, a.detection, a.detector, opts));

    if (auto scores = scores_if_available(d, a.fits)) {
        const auto k_s = a.detector.method == Method::Score ? a.detector.k_s : std::nullopt;
        write_text_file(dir / "qq.svg", qq_plot_svg(scores->scores, d.statuses(), k_s));
    }
}

int cmd_detect(const DetectArgs& args, std::ostream& out)
{
    DetectorConfig cfg;
    auto method = parse_method(args.method);
    if (!method)
        throw Error(ErrorKind::InvalidArgument, "unknown method '" + args.method + "'");
    cfg.method = *method;
    cfg.k_r = args.k_r;
    cfg.k_b = args.k_b;
    cfg.k_s = args.k_s;
    cfg.p_ref = args.p_ref;
    cfg.validate();
    if (!(args.h > 0.0))
        throw Error(ErrorKind::InvalidArgument, "bandwidth --h must be positive");

    AnalysisArtifact a;
    a.version = tool_version();
    a.fingerprint = fingerprint_file(args.data);
    a.schema = {args.time_col, args.status_col, args.covariates};
    a.log_time = args.log_time;
    a.detector = cfg;
    a.bandwidth.h = args.h;

    const Dataset d = reload_dataset(a);
    const Dataset fitted = d.dimension() > 0 ? scale_covariates(d) : d;
    const auto taus = levels_for(cfg.method, args.fast);
    const auto fits = fit_cqr_levels(fitted, taus, a.bandwidth);
    for (const auto& f : fits)
        a.fits.emplace(f.tau, f);

    switch (cfg.method) {
    case Method::Residual:
        a.detection = detect_residual(d, fit_at(a.fits, 0.50), cfg);
        break;
    case Method::Boxplot:
        a.detection = detect_boxplot(d, fit_at(a.fits, 0.25), fit_at(a.fits, 0.75), cfg);
        break;
    case Method::Score:
        a.detection = detect_score(*scores_if_available(d, a.fits), cfg, d.statuses());
        break;
    }

    write_outputs(args.out, a, d, out);
    return kExitOk;
}

int cmd_update(const UpdateArgs& args, std::ostream& out)
{
    AnalysisArtifact a = load_artifact(args.artifact);
    if (a.detector.method != Method::Score)
        throw Error(ErrorKind::WrongMethod, "update re-thresholds scores; artifact was produced by method '" +
                                                std::string(to_string(a.detector.method)) + "'");
    const Dataset d = reload_dataset(a);

    a.detector.k_s = args.k_s;
    a.detector.validate();
    OutlyingScores scores;
    scores.scores = a.detection.evidence;
    scores.clamped = a.detection.clamped;
    scores.upper_side = a.detection.upper_side;
    if (scores.scores.size() != d.size())
        throw Error(ErrorKind::LengthMismatch, "stored scores do not match the dataset");
    a.detection = detect_score(scores, a.detector, d.statuses());

    const fs::path dir = args.out.empty() ? fs::path(args.artifact).parent_path() : fs::path(args.out);
    write_outputs(dir.empty() ? fs::path(".") : dir, a, d, out);
    return kExitOk;
}

int cmd_plot(const PlotArgs& args, std::ostream& out)
{
    const AnalysisArtifact a = load_artifact(args.artifact);
    const Dataset d = reload_dataset(a);
    auto scores = scores_if_available(d, a.fits);
    if (!scores)
        throw Error(ErrorKind::MissingFit, "plot needs fits at tau = 0.25, 0.50 and 0.75");
    const auto k_s = args.k_s ? args.k_s : a.detector.k_s;
    const fs::path target = args.out.empty() ? fs::path(args.artifact).parent_path() / "qq.svg" : fs::path(args.out);
    write_text_file(target, qq_plot_svg(scores->scores, d.statuses(), k_s));
    out << "wrote " << target.string() << '\n';
    return kExitOk;
}

int cmd_coef(const std::string& artifact, std::ostream& out)
{
    const AnalysisArtifact a = load_artifact(artifact);
    out << coef_table(a.fits, a.schema.covariates);
    return kExitOk;
}

std::vector<GridCell> build_grid(const SimulateArgs& args)
{
    std::set<Method> methods;
    for (const auto& m : args.methods) {
        auto parsed = parse_method(m);
        if (!parsed)
            throw Error(ErrorKind::InvalidArgument, "unknown method '" + m + "'");
        methods.insert(*parsed);
    }
    if (methods.empty())
        methods = {Method::Residual, Method::Boxplot, Method::Score};

    const auto defaults = default_grid();
    std::vector<GridCell> grid;
    for (Method m : {Method::Residual, Method::Boxplot, Method::Score}) {
        if (!methods.count(m))
            continue;
        const auto& custom = m == Method::Residual ? args.k_r : m == Method::Boxplot ? args.k_b : args.k_s;
        if (!custom.empty()) {
            for (double k : custom)
                grid.push_back({m, k});
        } else {
            for (const auto& cell : defaults) {
                if (cell.method == m)
                    grid.push_back(cell);
            }
        }
    }
    return grid;
}

int cmd_simulate(const SimulateArgs& args, std::ostream& out)
{
    SimConfig base;
    base.replicates = args.replicates;
    base.seed = args.seed;
    base.bandwidth.h = args.h;
    base.threads = args.threads;
    base.grid = build_grid(args);

    if (!args.dump_dataset.empty()) {
        base.c = args.c.front();
        base.censor_upper = args.censor_upper.front();
        const auto sim = generate_dataset(base, args.dump_replicate);
        std::ofstream file(args.dump_dataset);
        if (!file)
            throw Error(ErrorKind::IoError, "cannot write " + args.dump_dataset);
        file << "id,time,status,x,planted\n";
        for (std::size_t i = 0; i < sim.data.size(); ++i) {
            const auto& o = sim.data[i];
            file << i + 1 << ',' << to_decimal17(std::exp(o.time)) << ',' << o.status << ','
                 << to_decimal17(o.covariates[0]) << ',' << (sim.truth[i] ? 1 : 0) << '\n';
        }
        out << "wrote " << sim.data.size() << " rows to " << args.dump_dataset << '\n';
        return kExitOk;
    }

    std::vector<StudyResult> results;
    for (double upper : args.censor_upper) {
        for (double c : args.c) {
            SimConfig cfg = base;
            cfg.c = c;
            cfg.censor_upper = upper;
            results.push_back(run_study(cfg));
        }
    }

    write_study_text(out, results);
    if (!args.out.empty()) {
        const fs::path dir(args.out);
        fs::create_directories(dir);
        std::ofstream csv(dir / "study.csv");
        std::ofstream txt(dir / "study.txt");
        if (!csv || !txt)
            throw Error(ErrorKind::IoError, "cannot write study tables under " + dir.string());
        write_study_csv(csv, results);
        write_study_text(txt, results);
    }
    return kExitOk;
}

int exit_code_for(const Error& e)
{
    switch (e.category()) {
    case ErrorCategory::Usage: return kExitUsage;
    case ErrorCategory::Data: return kExitData;
    case ErrorCategory::Numerical: return kExitNumerical;
    }
    return kExitData;
}

} // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err)
{
    CLI::App app{"Outlier detection for censored survival data via locally weighted censored quantile regression",
                 "odc"};
    app.require_subcommand(1);
    app.set_version_flag("--version", tool_version());

    DetectArgs detect;
    auto* det = app.add_subcommand("detect", "Fit conditional quantiles and flag outlying observations");
    det->set_help_flag("--help", "Print this help message and exit"); // -h would clash with --h
    det->add_option("--data", detect.data, "CSV file with a header row")->required();
    det->add_option("--time-col", detect.time_col, "Observed time column")->required();
    det->add_option("--status-col", detect.status_col, "Event indicator column (1 = event, 0 = censored)")->required();
    det->add_option("--covariates", detect.covariates, "Comma-separated covariate columns")->delimiter(',');
    det->add_flag("--log-time", detect.log_time, "Model log(time)");
    det->add_option("--method", detect.method, "score | boxplot | residual")
        ->check(CLI::IsMember({"score", "boxplot", "residual"}))
        ->capture_default_str();
    det->add_option("--k-r", detect.k_r, "Residual cutoff multiplier")->capture_default_str();
    det->add_option("--k-b", detect.k_b, "Boxplot fence multiplier")->capture_default_str();
    det->add_option("--k-s", detect.k_s, "Score threshold (optional; undecided when absent)");
    det->add_option("--p-ref", detect.p_ref, "Normal quantile level for the residual scale")->capture_default_str();
    det->add_option("--h", detect.h, "Kernel bandwidth on the scaled covariate axis")->capture_default_str();
    det->add_option("--out", detect.out, "Output directory")->capture_default_str();
    det->add_flag("--fast", detect.fast, "Only fit the quantile levels the method needs");

    UpdateArgs update;
    auto* upd = app.add_subcommand("update", "Re-threshold stored scores without refitting");
    upd->add_option("--artifact", update.artifact, "artifact.json from a score run")->required();
    upd->add_option("--k-s", update.k_s, "New score threshold")->required();
    upd->add_option("--out", update.out, "Output directory (default: the artifact's directory)");

    PlotArgs plot;
    auto* plt = app.add_subcommand("plot", "Write the normal QQ plot of outlying scores as SVG");
    plt->add_option("--artifact", plot.artifact, "artifact.json")->required();
    plt->add_option("--k-s", plot.k_s, "Threshold line (default: the artifact's k_s)");
    plt->add_option("--out", plot.out, "SVG path (default: qq.svg next to the artifact)");

    std::string coef_artifact;
    auto* cof = app.add_subcommand("coef", "Print the q10..q90 coefficient table");
    cof->add_option("--artifact", coef_artifact, "artifact.json")->required();

    SimulateArgs sim;
    auto* simc = app.add_subcommand("simulate", "Monte Carlo study on the heteroscedastic outlier model");
    simc->set_help_flag("--help", "Print this help message and exit");
    simc->add_option("--c", sim.c, "Outlier magnitudes (comma list)")->delimiter(',')->capture_default_str();
    simc->add_option("--censor-upper", sim.censor_upper, "Upper bounds of log C ~ U(0, b) (comma list)")
        ->delimiter(',')
        ->capture_default_str();
    simc->add_option("--method", sim.methods, "Restrict to these methods (comma list)")->delimiter(',');
    simc->add_option("--k-r", sim.k_r, "Residual cutoffs (comma list)")->delimiter(',');
    simc->add_option("--k-b", sim.k_b, "Boxplot cutoffs (comma list)")->delimiter(',');
    simc->add_option("--k-s", sim.k_s, "Score cutoffs (comma list)")->delimiter(',');
    simc->add_option("--replicates", sim.replicates, "Replicates per scenario")->capture_default_str();
    simc->add_option("--seed", sim.seed, "Base seed")->capture_default_str();
    simc->add_option("--h", sim.h, "Kernel bandwidth")->capture_default_str();
    simc->add_option("--threads", sim.threads, "Worker threads (0 = all cores)")->capture_default_str();
    simc->add_option("--out", sim.out, "Directory for study.csv and study.txt");
    simc->add_option("--dump-dataset", sim.dump_dataset, "Write one simulated dataset as CSV and exit");
    simc->add_option("--dump-replicate", sim.dump_replicate, "Replicate index for --dump-dataset");

    try {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        if (!reversed.empty())
            reversed.pop_back();
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kExitOk : kExitUsage;
    }

    try {
        if (det->parsed())
            return cmd_detect(detect, out);
        if (upd->parsed())
            return cmd_update(update, out);
        if (plt->parsed())
            return cmd_plot(plot, out);
        if (cof->parsed())
            return cmd_coef(coef_artifact, out);
        if (simc->parsed())
            return cmd_simulate(sim, out);
    } catch (const Error& e) {
        err << "odc: " << e.what() << '\n';
        return exit_code_for(e);
    } catch (const fs::filesystem_error& e) {
        err << "odc: " << e.what() << '\n';
        return kExitData;
    }
    return kExitUsage;
}

} // namespace odc::cli
