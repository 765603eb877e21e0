#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>

#include "litefat/model.hpp"

namespace litefat::bench {

// Timing report mirroring the five-column efficiency table: parameter count,
// per-batch forward/backward wall time, throughput, and memory.
struct BenchReport {
  model::ModelConfig config;
  std::size_t param_count = 0;
  double forward_sec_per_batch = 0.0;
  double backward_sec_per_batch = 0.0;
  double throughput_samples_per_sec = 0.0;
  std::optional<double> peak_memory_mb;  // absent when the platform lacks it
  std::size_t batch_size = 0;
  std::size_t iterations = 0;
  std::size_t warmup = 0;

  bool operator==(const BenchReport&) const = default;
};

struct BenchOptions {
  std::size_t batch_size = 8;
  std::size_t iterations = 10;
  std::size_t warmup = 3;
  std::uint64_t seed = 1;
  // Test hooks, invoked once per iteration inside the timed sections.
  std::function<void()> forward_hook;
  std::function<void()> backward_hook;
};

// Runs warmup untimed iterations, then times `iterations` forward+backward
// passes over a seeded dummy batch and reports the median per-batch times.
BenchReport run_benchmark(const model::ModelConfig& config,
                          const BenchOptions& options);

enum class ReportFormat { kJson, kTable };

std::string render_report(const BenchReport& report, ReportFormat format);
BenchReport parse_report_json(const std::string& text);

// Peak resident set size of this process, when the platform exposes it.
std::optional<double> peak_rss_mb();

}  // namespace litefat::bench
