#include "litefat/bench.hpp"

#include <algorithm>
#include <chrono>
#include <iomanip>
#include <sstream>

#include <json.hpp>

#include "litefat/errors.hpp"
#include "litefat/rng.hpp"

#if defined(__unix__) || defined(__APPLE__)
#include <sys/resource.h>
#endif

namespace litefat::bench {

std::optional<double> peak_rss_mb() {
#if defined(__unix__) || defined(__APPLE__)
  rusage usage{};
  if (getrusage(RUSAGE_SELF, &usage) != 0) return std::nullopt;
#if defined(__APPLE__)
  return static_cast<double>(usage.ru_maxrss) / (1024.0 * 1024.0);
#else
  return static_cast<double>(usage.ru_maxrss) / 1024.0;
#endif
#else
  return std::nullopt;
#endif
}

namespace {

std::vector<model::Sample> dummy_batch(const model::ModelConfig& config,
                                       std::size_t batch_size,
                                       std::uint64_t seed) {
  Rng rng = Rng::substream(seed, 0xBE);
  std::vector<model::Sample> batch;
  batch.reserve(batch_size);
  for (std::size_t b = 0; b < batch_size; ++b) {
    model::Sample s;
    s.label = static_cast<int>(rng.bounded(config.classes));
    for (std::size_t t = 0; t < config.frames_per_sample; ++t) {
      numkit::DenseMatrix pts(config.nodes, config.landmark_features);
      for (double& v : pts.data) v = rng.uniform(0.0, 256.0);
      s.points.push_back(std::move(pts));
      std::vector<double> e(config.fused_dim);
      for (double& v : e) v = rng.uniform(-1.0, 1.0);
      s.embeddings.push_back(std::move(e));
    }
    batch.push_back(std::move(s));
  }
  return batch;
}

double median(std::vector<double> values) {
  std::sort(values.begin(), values.end());
  const std::size_t n = values.size();
  if (n % 2 == 1) return values[n / 2];
  return 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

}  // namespace

BenchReport run_benchmark(const model::ModelConfig& config,
                          const BenchOptions& options) {
  if (options.iterations == 0)
    throw InputError("run_benchmark: iterations must be >= 1");
  if (options.batch_size == 0)
    throw InputError("run_benchmark: batch size must be >= 1");
  config.validate();

  const std::vector<model::Sample> batch =
      dummy_batch(config, options.batch_size, options.seed);
  model::ModelParams params = model::init_params(config, options.seed);
  model::ModelParams grads = model::zeros_like(config);

  using clock = std::chrono::steady_clock;
  const auto seconds = [](clock::duration d) {
    return std::chrono::duration<double>(d).count();
  };

  std::vector<model::ForwardTrace> traces;
  traces.reserve(batch.size());
  const auto run_iteration = [&](double* fwd_sec, double* bwd_sec) {
    traces.clear();
    const auto t0 = clock::now();
    for (const model::Sample& sample : batch) {
      model::ForwardResult out = model::model_forward(sample, params);
      traces.push_back(std::move(out.trace));
    }
    if (options.forward_hook) options.forward_hook();
    const auto t1 = clock::now();
    model::zero_tensors(grads);
    for (std::size_t b = 0; b < batch.size(); ++b) {
      model::backward_pass(params, traces[b], batch[b].label, grads,
                           /*accumulate=*/true);
    }
    if (options.backward_hook) options.backward_hook();
    const auto t2 = clock::now();
    if (fwd_sec) *fwd_sec = seconds(t1 - t0);
    if (bwd_sec) *bwd_sec = seconds(t2 - t1);
  };

  for (std::size_t i = 0; i < options.warmup; ++i)
    run_iteration(nullptr, nullptr);

  std::vector<double> fwd_times(options.iterations);
  std::vector<double> bwd_times(options.iterations);
  for (std::size_t i = 0; i < options.iterations; ++i)
    run_iteration(&fwd_times[i], &bwd_times[i]);

  BenchReport report;
  report.config = config;
  report.param_count = model::count_parameters(config);
  report.forward_sec_per_batch = median(fwd_times);
  report.backward_sec_per_batch = median(bwd_times);
  report.throughput_samples_per_sec =
      static_cast<double>(options.batch_size) / report.forward_sec_per_batch;
  report.peak_memory_mb = peak_rss_mb();
  report.batch_size = options.batch_size;
  report.iterations = options.iterations;
  report.warmup = options.warmup;
  return report;
}

namespace {

nlohmann::ordered_json config_json(const model::ModelConfig& c) {
  nlohmann::ordered_json j;
  j["nodes"] = c.nodes;
  j["landmark_features"] = c.landmark_features;
  j["fused_dim"] = c.fused_dim;
  j["adj_embed_dim"] = c.adj_embed_dim;
  j["residual_channels"] = c.residual_channels;
  j["conv_taps"] = c.conv_taps;
  j["dilations"] = c.dilations;
  j["gcn_hidden"] = c.gcn_hidden;
  j["classes"] = c.classes;
  j["frames_per_sample"] = c.frames_per_sample;
  j["use_tcn"] = c.use_tcn;
  j["use_gcn"] = c.use_gcn;
  j["use_embedding"] = c.use_embedding;
  return j;
}

model::ModelConfig config_from_json(const nlohmann::json& j) {
  model::ModelConfig c;
  c.nodes = j.at("nodes").get<std::size_t>();
  c.landmark_features = j.at("landmark_features").get<std::size_t>();
  c.fused_dim = j.at("fused_dim").get<std::size_t>();
  c.adj_embed_dim = j.at("adj_embed_dim").get<std::size_t>();
  c.residual_channels = j.at("residual_channels").get<std::size_t>();
  c.conv_taps = j.at("conv_taps").get<std::size_t>();
  c.dilations = j.at("dilations").get<std::vector<std::size_t>>();
  c.gcn_hidden = j.at("gcn_hidden").get<std::size_t>();
  c.classes = j.at("classes").get<std::size_t>();
  c.frames_per_sample = j.at("frames_per_sample").get<std::size_t>();
  c.use_tcn = j.at("use_tcn").get<bool>();
  c.use_gcn = j.at("use_gcn").get<bool>();
  c.use_embedding = j.at("use_embedding").get<bool>();
  return c;
}

}  // namespace

std::string render_report(const BenchReport& report, ReportFormat format) {
  if (format == ReportFormat::kJson) {
    nlohmann::ordered_json j;
    j["config"] = config_json(report.config);
    j["param_count"] = report.param_count;
    j["forward_sec_per_batch"] = report.forward_sec_per_batch;
    j["backward_sec_per_batch"] = report.backward_sec_per_batch;
    j["throughput_samples_per_sec"] = report.throughput_samples_per_sec;
    if (report.peak_memory_mb) {
      j["peak_memory_mb"] = *report.peak_memory_mb;
    } else {
      j["peak_memory_mb"] = nullptr;
    }
    j["batch_size"] = report.batch_size;
    j["iterations"] = report.iterations;
    j["warmup"] = report.warmup;
    return j.dump();
  }

  std::ostringstream out;
  out << std::left << std::setw(12) << "#para." << std::setw(12) << "forw."
      << std::setw(12) << "back." << std::setw(12) << "thr." << std::setw(12)
      << "mem." << "\n";
  out << std::left << std::setw(12) << report.param_count;
  const auto put = [&](double v) {
    std::ostringstream cell;
    cell << std::setprecision(6) << v;
    out << std::setw(12) << cell.str();
  };
  put(report.forward_sec_per_batch);
  put(report.backward_sec_per_batch);
  put(report.throughput_samples_per_sec);
  if (report.peak_memory_mb) {
    put(*report.peak_memory_mb);
  } else {
    out << std::setw(12) << "-";
  }
  out << "\n";
  return out.str();
}

BenchReport parse_report_json(const std::string& text) {
  nlohmann::json j = nlohmann::json::parse(text, nullptr, false);
  if (j.is_discarded() || !j.is_object())
    throw FormatError("bench report: not a JSON object");
  try {
    BenchReport report;
    report.config = config_from_json(j.at("config"));
    report.param_count = j.at("param_count").get<std::size_t>();
    report.forward_sec_per_batch = j.at("forward_sec_per_batch").get<double>();
    report.backward_sec_per_batch =
        j.at("backward_sec_per_batch").get<double>();
    report.throughput_samples_per_sec =
        j.at("throughput_samples_per_sec").get<double>();
    if (!j.at("peak_memory_mb").is_null())
      report.peak_memory_mb = j.at("peak_memory_mb").get<double>();
    report.batch_size = j.at("batch_size").get<std::size_t>();
    report.iterations = j.at("iterations").get<std::size_t>();
    report.warmup = j.at("warmup").get<std::size_t>();
    return report;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("bench report: ") + e.what());
  }
}

}  // namespace litefat::bench
