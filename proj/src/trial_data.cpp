#include "pival/trial_data.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "pival/errors.hpp"

namespace pival {

double TrialRecord::effective_exposure() const {
    if (exposure) return *exposure;
    if (arm_size) return *arm_size;
    throw DomainError("trial record " + study + "/" + outcome + "/" + arm + " has neither exposure nor arm size");
}

namespace {

std::string trim(std::string s) {
    const auto b = s.find_first_not_of(" \t\r");
    const auto e = s.find_last_not_of(" \t\r");
    return b == std::string::npos ? std::string{} : s.substr(b, e - b + 1);
}

std::vector<std::string> split(const std::string& line) {
    std::vector<std::string> out;
    std::string field;
    std::istringstream in(line);
    while (std::getline(in, field, ',')) out.push_back(trim(field));
    if (!line.empty() && line.back() == ',') out.emplace_back();
    return out;
}

[[noreturn]] void fail(const std::string& source, std::size_t row, const std::string& what) {
    throw ParseError(source + ": row " + std::to_string(row) + ": " + what);
}

double to_double(const std::string& s, const std::string& source, std::size_t row, const char* col) {
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || ptr != s.data() + s.size() || !std::isfinite(v))
        fail(source, row, std::string("non-numeric ") + col + " '" + s + "'");
    return v;
}

long to_long(const std::string& s, const std::string& source, std::size_t row, const char* col) {
    long v = 0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || ptr != s.data() + s.size())
        fail(source, row, std::string("non-integer ") + col + " '" + s + "'");
    return v;
}

}  // namespace

std::vector<TrialRecord> parse_trial_csv_text(const std::string& text, const std::string& source) {
    static const std::vector<std::string> required{"study", "outcome", "arm", "treat", "events", "exposure"};
    std::istringstream in(text);
    std::string line;
    std::size_t row = 0;
    std::vector<std::string> header;
    while (std::getline(in, line)) {
        ++row;
        if (!trim(line).empty()) {
            header = split(line);
            break;
        }
    }
    if (header.empty()) throw ParseError(source + ": empty file");
    if (header.size() < required.size()) fail(source, row, "missing column(s); expected study,outcome,arm,treat,events,exposure");
    for (std::size_t c = 0; c < required.size(); ++c)
        if (header[c] != required[c]) fail(source, row, "column " + std::to_string(c + 1) + " must be '" + required[c] + "'");
    const bool has_size = header.size() > required.size();
    if (has_size && (header.size() != 7 || header[6] != "arm_size")) fail(source, row, "unexpected extra column");

    std::vector<TrialRecord> out;
    while (std::getline(in, line)) {
        ++row;
        if (trim(line).empty()) continue;
        const auto f = split(line);
        if (f.size() != header.size()) fail(source, row, "expected " + std::to_string(header.size()) + " fields");
        TrialRecord r;
        r.study = f[0];
        r.outcome = f[1];
        r.arm = f[2];
        if (r.study.empty() || r.outcome.empty()) fail(source, row, "blank study or outcome");
        if (f[3] != "0" && f[3] != "1") fail(source, row, "treat must be 0 or 1");
        r.treat = f[3] == "1";
        r.events = to_long(f[4], source, row, "events");
        if (r.events < 0) fail(source, row, "negative events");
        if (!f[5].empty()) {
            r.exposure = to_double(f[5], source, row, "exposure");
            if (!(*r.exposure > 0.0)) fail(source, row, "exposure must be positive");
        }
        if (has_size && !f[6].empty()) {
            r.arm_size = to_double(f[6], source, row, "arm_size");
            if (!(*r.arm_size > 0.0)) fail(source, row, "arm_size must be positive");
        }
        if (!r.exposure) {
            if (!r.arm_size) fail(source, row, "blank exposure and no arm_size fallback");
            r.exposure_from_arm_size = true;
        }
        out.push_back(std::move(r));
    }
    if (out.empty()) throw ParseError(source + ": no data rows");
    return out;
}

std::vector<TrialRecord> parse_trial_csv(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot read " + path);
    std::ostringstream ss;
    ss << f.rdbuf();
    return parse_trial_csv_text(ss.str(), path);
}

std::vector<std::pair<std::string, std::string>> trial_groups(const std::vector<TrialRecord>& records) {
    std::vector<std::pair<std::string, std::string>> out;
    for (const auto& r : records) {
        std::pair<std::string, std::string> key{r.study, r.outcome};
        if (std::find(out.begin(), out.end(), key) == out.end()) out.push_back(std::move(key));
    }
    return out;
}

ModelData trial_model_data(const std::vector<TrialRecord>& records, const std::string& study,
                           const std::string& outcome, double exposure_scale) {
    if (!(exposure_scale > 0.0)) throw DomainError("exposure scale must be positive");
    std::vector<const TrialRecord*> rows;
    for (const auto& r : records)
        if (r.study == study && r.outcome == outcome) rows.push_back(&r);
    if (rows.empty()) throw DomainError("no rows for " + study + "/" + outcome);
    const auto n = static_cast<Eigen::Index>(rows.size());
    ModelData d;
    d.y.resize(n);
    d.X.resize(n, 2);
    d.offset.resize(n);
    d.weights = Eigen::VectorXd::Ones(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        d.y[i] = static_cast<double>(rows[i]->events);
        d.X(i, 0) = 1.0;
        d.X(i, 1) = rows[i]->treat;
        d.offset[i] = std::log(rows[i]->effective_exposure() / exposure_scale);
    }
    d.coef_names = {"(Intercept)", "treat"};
    return d;
}

}  // namespace pival
