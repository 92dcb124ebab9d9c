#include "spargw/bench.hpp"

#include <nlohmann/json.hpp>

#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

namespace spargw {

namespace {

using nlohmann::json;

std::string fmt_double(double x) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", x);
    return buf;
}

std::string trim(const std::string& s) {
    std::size_t b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    std::size_t e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

double parse_number(const std::string& field, const std::string& path, std::size_t line,
                    std::size_t col) {
    std::string t = trim(field);
    double out = 0.0;
    auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), out);
    if (ec != std::errc{} || ptr != t.data() + t.size() || t.empty())
        throw ParseError(path + ":" + std::to_string(line) + ":" + std::to_string(col) +
                         ": cannot parse '" + field + "' as a number");
    return out;
}

std::vector<std::vector<double>> read_rows(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw ParseError("cannot open " + path);
    std::vector<std::vector<double>> rows;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(f, line)) {
        ++lineno;
        if (trim(line).empty()) continue;
        std::vector<double> row;
        std::size_t start = 0, col = 0;
        while (true) {
            ++col;
            std::size_t comma = line.find(',', start);
            std::string field =
                comma == std::string::npos ? line.substr(start) : line.substr(start, comma - start);
            row.push_back(parse_number(field, path, lineno, col));
            if (comma == std::string::npos) break;
            start = comma + 1;
        }
        if (!rows.empty() && row.size() != rows.front().size())
            throw ParseError(path + ":" + std::to_string(lineno) + ": row has " +
                             std::to_string(row.size()) + " fields, expected " +
                             std::to_string(rows.front().size()));
        rows.push_back(std::move(row));
    }
    if (rows.empty()) throw ParseError(path + ": no rows");
    return rows;
}

}  // namespace

void write_matrix_csv(const std::string& path, const Matrix& m) {
    std::ofstream f(path);
    if (!f) throw ParseError("cannot open " + path + " for writing");
    for (Index i = 0; i < m.rows(); ++i) {
        for (Index j = 0; j < m.cols(); ++j) {
            if (j) f << ',';
            f << fmt_double(m(i, j));
        }
        f << '\n';
    }
    if (!f) throw ParseError("write to " + path + " failed");
}

Matrix read_matrix_csv(const std::string& path) {
    auto rows = read_rows(path);
    Matrix out(static_cast<Index>(rows.size()), static_cast<Index>(rows.front().size()));
    for (Index i = 0; i < out.rows(); ++i)
        for (Index j = 0; j < out.cols(); ++j)
            out(i, j) = rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
    return out;
}

void write_weights_csv(const std::string& path, const Vector& w) {
    std::ofstream f(path);
    if (!f) throw ParseError("cannot open " + path + " for writing");
    for (Index i = 0; i < w.size(); ++i) f << fmt_double(w(i)) << '\n';
    if (!f) throw ParseError("write to " + path + " failed");
}

Vector read_weights_csv(const std::string& path) {
    auto rows = read_rows(path);
    if (rows.front().size() != 1)
        throw ParseError(path + ": weight files carry one value per line");
    Vector out(static_cast<Index>(rows.size()));
    for (Index i = 0; i < out.size(); ++i) out(i) = rows[static_cast<std::size_t>(i)][0];
    return out;
}

Matrix ingest_matrix(const std::string& path) {
    Matrix m = read_matrix_csv(path);
    if (!m.allFinite()) throw ValidationError(path + ": matrix entries must be finite");
    return m;
}

Matrix ingest_relation(const std::string& path) {
    Matrix m = ingest_matrix(path);
    validate_relation(m);
    return m;
}

Distribution ingest_weights(const std::string& path, WeightMode mode) {
    Vector w = read_weights_csv(path);
    return mode == WeightMode::balanced ? Distribution::balanced(w)
                                        : Distribution::unbalanced(w);
}

long SampleBudget::resolve(Index n) const {
    double raw = per_n ? value * static_cast<double>(n) : value;
    long s = std::lround(raw);
    if (s < 1) throw ValidationError("subsample budget resolves to " + std::to_string(s));
    return s;
}

std::string SampleBudget::text() const {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%g%s", value, per_n ? "n" : "");
    return buf;
}

SampleBudget parse_budget(const std::string& text) {
    std::string t = trim(text);
    SampleBudget b;
    b.per_n = !t.empty() && (t.back() == 'n' || t.back() == 'N');
    if (b.per_n) t.pop_back();
    t = trim(t);
    auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), b.value);
    if (ec != std::errc{} || ptr != t.data() + t.size() || t.empty())
        throw ValidationError("cannot parse subsample budget '" + text + "'");
    if (!(b.value > 0.0) || !std::isfinite(b.value))
        throw ValidationError("subsample budget must be positive");
    return b;
}

namespace {

json dataset_to_json(const DatasetSpec& d) {
    json j;
    j["kind"] = d.kind;
    j["n"] = d.n;
    j["noise"] = d.noise;
    j["weights"] = d.weights;
    j["bandwidth"] = d.bandwidth;
    j["gen_seed"] = d.gen_seed;
    if (!d.cx.empty()) j["cx"] = d.cx;
    if (!d.cy.empty()) j["cy"] = d.cy;
    if (!d.a.empty()) j["a"] = d.a;
    if (!d.b.empty()) j["b"] = d.b;
    if (!d.m.empty()) j["m"] = d.m;
    return j;
}

json config_to_json(const ExperimentConfig& cfg) {
    json j;
    j["dataset"] = dataset_to_json(cfg.dataset);
    j["method"] = cfg.method;
    j["cost"] = cfg.cost;
    if (cfg.eps) j["eps"] = *cfg.eps;
    if (cfg.lambda) j["lambda"] = *cfg.lambda;
    if (cfg.alpha) j["alpha"] = *cfg.alpha;
    if (cfg.s) j["s"] = cfg.s->text();
    if (cfg.mode) j["mode"] = *cfg.mode;
    j["seeds"] = cfg.seeds;
    j["R"] = cfg.outer;
    j["H"] = cfg.inner;
    j["out"] = cfg.out_dir;
    j["retries"] = cfg.retries;
    return j;
}

void dataset_from_json(const json& j, DatasetSpec& d) {
    if (j.contains("kind")) d.kind = j.at("kind").get<std::string>();
    if (j.contains("n")) d.n = j.at("n").get<Index>();
    if (j.contains("noise")) d.noise = j.at("noise").get<double>();
    if (j.contains("weights")) d.weights = j.at("weights").get<std::string>();
    if (j.contains("bandwidth")) d.bandwidth = j.at("bandwidth").get<double>();
    if (j.contains("gen_seed")) d.gen_seed = j.at("gen_seed").get<std::uint64_t>();
    if (j.contains("cx")) d.cx = j.at("cx").get<std::string>();
    if (j.contains("cy")) d.cy = j.at("cy").get<std::string>();
    if (j.contains("a")) d.a = j.at("a").get<std::string>();
    if (j.contains("b")) d.b = j.at("b").get<std::string>();
    if (j.contains("m")) d.m = j.at("m").get<std::string>();
}

}  // namespace

ExperimentConfig config_from_json_text(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw ParseError(std::string("config: ") + e.what());
    }
    ExperimentConfig cfg;
    try {
        if (j.contains("dataset")) dataset_from_json(j.at("dataset"), cfg.dataset);
        if (j.contains("method")) cfg.method = j.at("method").get<std::string>();
        if (j.contains("cost")) cfg.cost = j.at("cost").get<std::string>();
        if (j.contains("eps")) cfg.eps = j.at("eps").get<double>();
        if (j.contains("lambda")) cfg.lambda = j.at("lambda").get<double>();
        if (j.contains("alpha")) cfg.alpha = j.at("alpha").get<double>();
        if (j.contains("s")) {
            if (j.at("s").is_string())
                cfg.s = parse_budget(j.at("s").get<std::string>());
            else
                cfg.s = SampleBudget{j.at("s").get<double>(), false};
        }
        if (j.contains("mode")) cfg.mode = j.at("mode").get<std::string>();
        if (j.contains("seeds")) cfg.seeds = j.at("seeds").get<std::vector<std::uint64_t>>();
        if (j.contains("R")) cfg.outer = j.at("R").get<long>();
        if (j.contains("H")) cfg.inner = j.at("H").get<long>();
        if (j.contains("out")) cfg.out_dir = j.at("out").get<std::string>();
        if (j.contains("retries")) cfg.retries = j.at("retries").get<long>();
    } catch (const json::exception& e) {
        throw ValidationError(std::string("config: ") + e.what());
    }
    return cfg;
}

ExperimentConfig load_config(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw ParseError("cannot open " + path);
    std::ostringstream buf;
    buf << f.rdbuf();
    return config_from_json_text(buf.str());
}

std::string config_hash(const ExperimentConfig& cfg) {
    std::string text = config_to_json(cfg).dump();
    std::uint64_t h = 14695981039346656037ULL;
    for (unsigned char c : text) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    char buf[20];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

}  // namespace spargw
