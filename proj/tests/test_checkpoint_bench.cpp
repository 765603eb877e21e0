#include <doctest.h>

#include <chrono>
#include <cmath>
#include <sstream>
#include <thread>

#include "litefat/bench.hpp"
#include "litefat/errors.hpp"
#include "litefat/model.hpp"

using namespace litefat;
using namespace litefat::model;

namespace {

ModelConfig bench_config() {
  ModelConfig cfg;
  cfg.nodes = 12;
  cfg.fused_dim = 8;
  cfg.adj_embed_dim = 2;
  cfg.residual_channels = 4;
  cfg.gcn_hidden = 4;
  cfg.frames_per_sample = 8;
  cfg.dilations = {1, 2};
  return cfg;
}

}  // namespace

TEST_SUITE("checkpoint") {

TEST_CASE("save-load round-trips bit for bit") {
  ModelConfig cfg = bench_config();
  ModelParams params = init_params(cfg, 17);
  std::stringstream buf;
  checkpoint_save(params, buf);
  ModelParams loaded = checkpoint_load(buf);
  CHECK(loaded.config == params.config);
  const auto ra = tensor_refs(params), rb = tensor_refs(loaded);
  REQUIRE(ra.size() == rb.size());
  for (std::size_t i = 0; i < ra.size(); ++i) {
    CHECK(ra[i].name == rb[i].name);
    CHECK(*ra[i].values == *rb[i].values);
  }
}

TEST_CASE("corrupt magic is a format error with no partial model") {
  ModelParams params = init_params(bench_config(), 17);
  std::stringstream buf;
  checkpoint_save(params, buf);
  std::string bytes = buf.str();
  bytes[0] = 'X';
  std::stringstream bad(bytes);
  CHECK_THROWS_AS(checkpoint_load(bad), FormatError);
}

TEST_CASE("truncated checkpoints are rejected") {
  ModelParams params = init_params(bench_config(), 17);
  std::stringstream buf;
  checkpoint_save(params, buf);
  const std::string bytes = buf.str();
  for (std::size_t cut : {5ul, 20ul, bytes.size() - 7}) {
    std::stringstream bad(bytes.substr(0, cut));
    CHECK_THROWS_AS(checkpoint_load(bad), FormatError);
  }
}

TEST_CASE("node-count mismatch surfaces at the first forward, not at load") {
  ModelConfig small = bench_config();
  small.nodes = 5;
  ModelParams params = init_params(small, 3);
  std::stringstream buf;
  checkpoint_save(params, buf);
  ModelParams loaded = checkpoint_load(buf);  // loads fine

  Sample sample;  // built for 12 nodes
  sample.label = 0;
  for (std::size_t t = 0; t < small.frames_per_sample; ++t) {
    sample.points.emplace_back(12, 3, 0.5);
    sample.embeddings.emplace_back(small.fused_dim, 0.1);
  }
  CHECK_THROWS_AS(model_forward(sample, loaded), ShapeError);
}

TEST_CASE("config text round-trips and rejects unknown keys") {
  ModelConfig cfg = bench_config();
  cfg.use_tcn = false;
  const ModelConfig back = config_from_text(config_to_text(cfg));
  CHECK(back == cfg);
  CHECK_THROWS_AS(config_from_text("model.bogus = 1\n"), FormatError);
}

}  // TEST_SUITE

TEST_SUITE("bench") {

TEST_CASE("report satisfies the definitional identities") {
  bench::BenchOptions opts;
  opts.batch_size = 3;
  opts.iterations = 3;
  opts.warmup = 1;
  const bench::BenchReport report = bench::run_benchmark(bench_config(), opts);
  CHECK(report.forward_sec_per_batch > 0.0);
  CHECK(report.backward_sec_per_batch > 0.0);
  CHECK(std::abs(report.throughput_samples_per_sec -
                 3.0 / report.forward_sec_per_batch) /
            report.throughput_samples_per_sec <
        1e-9);
  CHECK(report.param_count == count_parameters(bench_config()));
  CHECK(report.peak_memory_mb.has_value());  // Linux exposes peak RSS
  if (report.peak_memory_mb) CHECK(*report.peak_memory_mb > 0.0);
}

TEST_CASE("wider stacks strictly increase the parameter count") {
  ModelConfig narrow = bench_config();
  ModelConfig wide = bench_config();
  wide.residual_channels = 8;
  CHECK(count_parameters(wide) > count_parameters(narrow));
}

TEST_CASE("an injected 10 ms delay raises the measured forward time") {
  bench::BenchOptions plain;
  plain.batch_size = 1;
  plain.iterations = 3;
  plain.warmup = 0;
  const auto base = bench::run_benchmark(bench_config(), plain);

  bench::BenchOptions delayed = plain;
  delayed.forward_hook = [] {
    std::this_thread::sleep_for(std::chrono::milliseconds(10));
  };
  const auto slow = bench::run_benchmark(bench_config(), delayed);
  CHECK(slow.forward_sec_per_batch - base.forward_sec_per_batch >= 0.009);
}

TEST_CASE("json rendering round-trips exactly") {
  bench::BenchReport report;
  report.config = bench_config();
  report.param_count = count_parameters(report.config);
  report.forward_sec_per_batch = 0.01234567890123;
  report.backward_sec_per_batch = 0.04567;
  report.throughput_samples_per_sec = 81.234;
  report.peak_memory_mb = 512.75;
  report.batch_size = 8;
  report.iterations = 10;
  report.warmup = 3;
  const std::string json = bench::render_report(report, bench::ReportFormat::kJson);
  CHECK(bench::parse_report_json(json) == report);

  SUBCASE("absent memory renders as null and stays absent") {
    report.peak_memory_mb.reset();
    const std::string j2 = bench::render_report(report, bench::ReportFormat::kJson);
    CHECK(j2.find("\"peak_memory_mb\":null") != std::string::npos);
    CHECK(bench::parse_report_json(j2) == report);
  }
}

TEST_CASE("table format carries the five column names") {
  bench::BenchReport report;
  report.config = bench_config();
  report.param_count = 123;
  report.forward_sec_per_batch = 0.5;
  report.backward_sec_per_batch = 0.25;
  report.throughput_samples_per_sec = 16.0;
  const std::string table = bench::render_report(report, bench::ReportFormat::kTable);
  for (const char* token : {"#para.", "forw.", "back.", "thr.", "mem."})
    CHECK(table.find(token) != std::string::npos);
  CHECK(table.find('-') != std::string::npos);  // absent memory
}

}  // TEST_SUITE
