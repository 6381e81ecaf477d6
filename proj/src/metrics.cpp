#include "dcv/metrics.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace dcv {

namespace {

std::string num(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

double parse_double(const std::string& s) {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used != s.size()) throw std::runtime_error("metrics: bad number '" + s + "'");
    return v;
}

}  // namespace

MetricsFormat parse_metrics_format(std::string_view name) {
    if (name == "csv") return MetricsFormat::csv;
    if (name == "jsonl") return MetricsFormat::jsonl;
    throw std::invalid_argument("unknown metrics format '" + std::string(name) + "'");
}

std::string format_metrics(const std::vector<StepRecord>& records, MetricsFormat format) {
    std::string out;
    if (format == MetricsFormat::csv) {
        out += kMetricsHeader;
        out += '\n';
        for (const auto& r : records) {
            out += std::to_string(r.step) + ',' + num(r.objective) + ',' + num(r.grad_variance) + ',' + num(r.alpha) +
                   ',' + num(r.mean_sigma_eta) + ',' + num(r.wall_secs) + '\n';
        }
        return out;
    }
    // Numbers are emitted by hand: nlohmann's serializer picks the shortest
    // round-trip form, which is exact too but not the fixed 17 digits.
    for (const auto& r : records) {
        out += "{\"step\":" + std::to_string(r.step) + ",\"objective\":" + num(r.objective) +
               ",\"grad_variance\":" + num(r.grad_variance) + ",\"alpha\":" + num(r.alpha) +
               ",\"mean_sigma_eta\":" + num(r.mean_sigma_eta) + ",\"wall_secs\":" + num(r.wall_secs) + "}\n";
    }
    return out;
}

void write_metrics(const std::vector<StepRecord>& records, const std::string& path, MetricsFormat format) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write metrics to " + path);
    out << format_metrics(records, format);
    if (!out) throw std::runtime_error("I/O failure writing " + path);
}

std::vector<StepRecord> parse_metrics(std::string_view text, MetricsFormat format) {
    std::vector<StepRecord> records;
    std::istringstream in{std::string(text)};
    std::string line;
    if (format == MetricsFormat::csv) {
        if (!std::getline(in, line) || line != kMetricsHeader) throw std::runtime_error("metrics: missing CSV header");
        while (std::getline(in, line)) {
            if (line.empty()) continue;
            std::vector<std::string> cells;
            std::istringstream ls(line);
            std::string cell;
            while (std::getline(ls, cell, ',')) cells.push_back(cell);
            if (cells.size() != 6) throw std::runtime_error("metrics: expected 6 columns");
            StepRecord r;
            r.step = std::stoll(cells[0]);
            r.objective = parse_double(cells[1]);
            r.grad_variance = parse_double(cells[2]);
            r.alpha = parse_double(cells[3]);
            r.mean_sigma_eta = parse_double(cells[4]);
            r.wall_secs = parse_double(cells[5]);
            records.push_back(r);
        }
        return records;
    }
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const auto j = nlohmann::json::parse(line);
        StepRecord r;
        r.step = j.at("step").get<std::int64_t>();
        r.objective = j.at("objective").get<double>();
        r.grad_variance = j.at("grad_variance").get<double>();
        r.alpha = j.at("alpha").get<double>();
        r.mean_sigma_eta = j.at("mean_sigma_eta").get<double>();
        r.wall_secs = j.at("wall_secs").get<double>();
        records.push_back(r);
    }
    return records;
}

std::vector<StepRecord> read_metrics(const std::string& path, MetricsFormat format) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot read " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_metrics(ss.str(), format);
}

}  // namespace dcv
