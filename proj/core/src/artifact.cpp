#include "odc/artifact.hpp"

#include "odc/error.hpp"
#include "odc/report.hpp"

#include "json.hpp"
#include <openssl/evp.h>

#include <cstdio>
#include <fstream>
#include <iterator>
#include <sstream>

#ifndef ODC_VERSION_STRING
#define ODC_VERSION_STRING "0.0.0"
#endif

namespace odc {

using json = nlohmann::ordered_json;

std::string tool_version()
{
    return ODC_VERSION_STRING;
}

namespace {

std::string read_bytes(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw Error(ErrorKind::IoError, "cannot open " + path.string());
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

std::string sha256_hex(const std::string& bytes)
{
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (EVP_Digest(bytes.data(), bytes.size(), digest, &len, EVP_sha256(), nullptr) != 1)
        throw Error(ErrorKind::IoError, "sha256 digest failed");
    std::string hex;
    char buf[3];
    for (unsigned int i = 0; i < len; ++i) {
        std::snprintf(buf, sizeof buf, "%02x", digest[i]);
        hex += buf;
    }
    return hex;
}

json num(double v)
{
    return to_decimal17(v);
}

double num(const json& j)
{
    if (j.is_number())
        return j.get<double>();
    auto v = parse_double(j.get<std::string>());
    if (!v)
        throw Error(ErrorKind::UnparsableCell, "artifact holds a malformed number: " + j.dump());
    return *v;
}

json nums(const std::vector<double>& v)
{
    json arr = json::array();
    for (double x : v)
        arr.push_back(num(x));
    return arr;
}

std::vector<double> nums(const json& j)
{
    std::vector<double> out;
    for (const auto& x : j)
        out.push_back(num(x));
    return out;
}

} // namespace

DatasetFingerprint fingerprint_file(const std::filesystem::path& path)
{
    return {std::filesystem::absolute(path).lexically_normal().string(), sha256_hex(read_bytes(path))};
}

std::string artifact_to_json(const AnalysisArtifact& a)
{
    json j;
    j["format"] = kArtifactFormat;
    j["version"] = a.version;
    j["dataset"] = {{"path", a.fingerprint.path}, {"sha256", a.fingerprint.sha256}};
    j["columns"] = {{"time", a.schema.time}, {"status", a.schema.status}, {"covariates", a.schema.covariates}};
    j["log_time"] = a.log_time;

    json cfg;
    cfg["method"] = std::string(to_string(a.detector.method));
    cfg["k_r"] = num(a.detector.k_r);
    cfg["k_b"] = num(a.detector.k_b);
    cfg["k_s"] = a.detector.k_s ? json(num(*a.detector.k_s)) : json(nullptr);
    cfg["p_ref"] = num(a.detector.p_ref);
    cfg["h"] = num(a.bandwidth.h);
    j["config"] = cfg;

    json fits = json::array();
    for (const auto& [tau, fit] : a.fits) {
        fits.push_back({{"tau", num(fit.tau)},
                        {"beta", nums(fit.beta)},
                        {"objective", num(fit.objective)},
                        {"pseudo_response", num(fit.pseudo_response)},
                        {"diagnostics",
                         {{"iterations", fit.diagnostics.iterations},
                          {"degenerate_pivots", fit.diagnostics.degenerate_pivots},
                          {"neighborhood_fallbacks", fit.diagnostics.neighborhood_fallbacks},
                          {"pseudo_retries", fit.diagnostics.pseudo_retries}}}});
    }
    j["fits"] = fits;

    const auto& det = a.detection;
    json cutoff;
    cutoff["k"] = det.cutoff.k ? json(num(*det.cutoff.k)) : json(nullptr);
    cutoff["sigma"] = det.cutoff.sigma ? json(num(*det.cutoff.sigma)) : json(nullptr);
    cutoff["threshold"] = det.cutoff.threshold ? json(num(*det.cutoff.threshold)) : json(nullptr);
    cutoff["zero_spread"] = det.cutoff.zero_spread;
    cutoff["undecided"] = det.cutoff.undecided;
    j["detection"] = {{"method", std::string(to_string(det.method))},
                      {"n_outliers", det.n_outliers},
                      {"cutoff", cutoff},
                      {"clamped", det.clamped},
                      {"flags", det.flags},
                      {"upper_side", det.upper_side},
                      {"evidence", nums(det.evidence)}};
    return j.dump(2) + "\n";
}

AnalysisArtifact artifact_from_json(const std::string& text)
{
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw Error(ErrorKind::UnparsableCell, std::string("artifact is not valid JSON: ") + e.what());
    }
    try {
        if (j.at("format").get<int>() != kArtifactFormat)
            throw Error(ErrorKind::UnparsableCell, "unsupported artifact format");
        AnalysisArtifact a;
        a.version = j.at("version").get<std::string>();
        a.fingerprint.path = j.at("dataset").at("path").get<std::string>();
        a.fingerprint.sha256 = j.at("dataset").at("sha256").get<std::string>();
        a.schema.time = j.at("columns").at("time").get<std::string>();
        a.schema.status = j.at("columns").at("status").get<std::string>();
        a.schema.covariates = j.at("columns").at("covariates").get<std::vector<std::string>>();
        a.log_time = j.at("log_time").get<bool>();

        const auto& cfg = j.at("config");
        auto method = parse_method(cfg.at("method").get<std::string>());
        if (!method)
            throw Error(ErrorKind::UnparsableCell, "unknown method in artifact");
        a.detector.method = *method;
        a.detector.k_r = num(cfg.at("k_r"));
        a.detector.k_b = num(cfg.at("k_b"));
        if (!cfg.at("k_s").is_null())
            a.detector.k_s = num(cfg.at("k_s"));
        a.detector.p_ref = num(cfg.at("p_ref"));
        a.bandwidth.h = num(cfg.at("h"));

        for (const auto& f : j.at("fits")) {
            QuantileFit fit;
            fit.tau = num(f.at("tau"));
            fit.beta = nums(f.at("beta"));
            fit.objective = num(f.at("objective"));
            fit.pseudo_response = num(f.at("pseudo_response"));
            const auto& dg = f.at("diagnostics");
            fit.diagnostics.iterations = dg.at("iterations").get<std::size_t>();
            fit.diagnostics.degenerate_pivots = dg.at("degenerate_pivots").get<std::size_t>();
            fit.diagnostics.neighborhood_fallbacks = dg.at("neighborhood_fallbacks").get<std::size_t>();
            fit.diagnostics.pseudo_retries = dg.at("pseudo_retries").get<std::size_t>();
            a.fits.emplace(fit.tau, std::move(fit));
        }

        const auto& det = j.at("detection");
        auto det_method = parse_method(det.at("method").get<std::string>());
        if (!det_method)
            throw Error(ErrorKind::UnparsableCell, "unknown detection method in artifact");
        a.detection.method = *det_method;
        a.detection.n_outliers = det.at("n_outliers").get<std::size_t>();
        const auto& cut = det.at("cutoff");
        if (!cut.at("k").is_null())
            a.detection.cutoff.k = num(cut.at("k"));
        if (!cut.at("sigma").is_null())
            a.detection.cutoff.sigma = num(cut.at("sigma"));
        if (!cut.at("threshold").is_null())
            a.detection.cutoff.threshold = num(cut.at("threshold"));
        a.detection.cutoff.zero_spread = cut.at("zero_spread").get<bool>();
        a.detection.cutoff.undecided = cut.at("undecided").get<bool>();
        a.detection.clamped = det.at("clamped").get<std::vector<std::size_t>>();
        a.detection.flags = det.at("flags").get<std::vector<bool>>();
        a.detection.evidence = nums(det.at("evidence"));
        a.detection.upper_side = det.at("upper_side").get<std::vector<bool>>();
        if (a.detection.flags.size() != a.detection.evidence.size())
            throw Error(ErrorKind::LengthMismatch, "artifact flags and evidence differ in length");
        return a;
    } catch (const json::exception& e) {
        throw Error(ErrorKind::UnparsableCell, std::string("artifact is missing fields: ") + e.what());
    }
}

void save_artifact(const std::filesystem::path& path, const AnalysisArtifact& a)
{
    write_text_file(path, artifact_to_json(a));
}

AnalysisArtifact load_artifact(const std::filesystem::path& path)
{
    return artifact_from_json(read_bytes(path));
}

Dataset reload_dataset(const AnalysisArtifact& a)
{
    const std::filesystem::path path(a.fingerprint.path);
    if (!std::filesystem::exists(path))
        throw Error(ErrorKind::FingerprintMismatch, "dataset " + a.fingerprint.path + " no longer exists");
    const std::string bytes = read_bytes(path);
    if (sha256_hex(bytes) != a.fingerprint.sha256)
        throw Error(ErrorKind::FingerprintMismatch, "dataset " + a.fingerprint.path + " changed since the fit");
    std::istringstream in(bytes);
    Dataset d = read_csv(in, a.schema);
    return a.log_time ? log_transform(d) : d;
}

} // namespace odc
