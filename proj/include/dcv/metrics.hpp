#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace dcv {

struct StepRecord {
    std::int64_t step = 0;
    double objective = 0.0;
    double grad_variance = 0.0;
    double alpha = 0.0;
    double mean_sigma_eta = 0.0;
    double wall_secs = 0.0;

    bool operator==(const StepRecord&) const = default;
};

enum class MetricsFormat { csv, jsonl };

MetricsFormat parse_metrics_format(std::string_view name);

inline constexpr std::string_view kMetricsHeader = "step,objective,grad_variance,alpha,mean_sigma_eta,wall_secs";

// Values are written with 17 significant digits so they reparse exactly.
std::string format_metrics(const std::vector<StepRecord>& records, MetricsFormat format);
void write_metrics(const std::vector<StepRecord>& records, const std::string& path, MetricsFormat format);

std::vector<StepRecord> parse_metrics(std::string_view text, MetricsFormat format);
std::vector<StepRecord> read_metrics(const std::string& path, MetricsFormat format);

}  // namespace dcv
