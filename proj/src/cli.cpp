#include "litefat/cli.hpp"

#include <chrono>
#include <deque>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "litefat/bench.hpp"
#include "litefat/embed.hpp"
#include "litefat/errors.hpp"
#include "litefat/ingest.hpp"
#include "litefat/kv.hpp"
#include "litefat/model.hpp"
#include "litefat/rng.hpp"

namespace fs = std::filesystem;

namespace litefat::cli {

namespace {

struct RunConfig {
  model::ModelConfig model;
  struct {
    std::size_t max_epochs = 100;
    std::size_t patience = 3;
    double learning_rate = 1e-4;
    std::size_t batch_size = 1;
    std::uint64_t seed = 1;
  } train;
  struct {
    std::string kind = "file";  // file | synthetic | constant
    std::string path;           // defaults to <data>/embeddings.ndjson
    std::uint64_t seed = 1;
    double value = 1.0;
  } embed;
};

std::string slurp(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open file: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

RunConfig load_run_config(const std::string& path) {
  RunConfig rc;
  if (path.empty()) return rc;
  for (const auto& [key, value] : parse_kv(slurp(path))) {
    if (model::apply_config_key(rc.model, key, value)) continue;
    if (key == "train.max_epochs") {
      rc.train.max_epochs = kv_to_count(key, value);
    } else if (key == "train.patience") {
      rc.train.patience = kv_to_count(key, value);
    } else if (key == "train.learning_rate") {
      rc.train.learning_rate = kv_to_double(key, value);
    } else if (key == "train.batch_size") {
      rc.train.batch_size = kv_to_count(key, value);
    } else if (key == "train.seed") {
      rc.train.seed = kv_to_u64(key, value);
    } else if (key == "embed.kind") {
      if (value != "file" && value != "synthetic" && value != "constant")
        throw FormatError("config key embed.kind: expected file, synthetic "
                          "or constant");
      rc.embed.kind = value;
    } else if (key == "embed.path") {
      rc.embed.path = value;
    } else if (key == "embed.seed") {
      rc.embed.seed = kv_to_u64(key, value);
    } else if (key == "embed.value") {
      rc.embed.value = kv_to_double(key, value);
    } else {
      throw FormatError("config: unknown key " + key);
    }
  }
  rc.model.validate();
  return rc;
}

embed::Provider make_provider(const RunConfig& rc, const std::string& data_dir) {
  embed::ProviderSpec spec;
  spec.dim = rc.model.fused_dim;
  spec.seed = rc.embed.seed;
  spec.value = rc.embed.value;
  if (rc.embed.kind == "file") {
    spec.kind = embed::ProviderKind::kFile;
    spec.path = rc.embed.path.empty()
                    ? (fs::path(data_dir) / "embeddings.ndjson").string()
                    : rc.embed.path;
  } else if (rc.embed.kind == "synthetic") {
    spec.kind = embed::ProviderKind::kSynthetic;
  } else {
    spec.kind = embed::ProviderKind::kConstant;
  }
  return embed::Provider::make(spec);
}

std::vector<std::string> read_class_names(const std::string& data_dir) {
  const std::string path = (fs::path(data_dir) / "classes.txt").string();
  std::ifstream in(path);
  if (!in) throw IoError("cannot open class list: " + path);
  std::vector<std::string> names;
  std::string line;
  while (std::getline(in, line)) {
    line = trim(line);
    if (!line.empty()) names.push_back(line);
  }
  if (names.size() < 2)
    throw FormatError("class list " + path + " needs at least two entries");
  return names;
}

std::vector<ingest::ClipSample> load_split_samples(
    const std::string& data_dir, const std::string& split,
    const RunConfig& rc, const embed::Provider& provider,
    const std::vector<std::string>& class_names) {
  const std::string path = (fs::path(data_dir) / (split + ".ndjson")).string();
  std::ifstream in(path);
  if (!in) throw IoError("cannot open landmark stream: " + path);
  auto frames = ingest::parse_landmark_stream(in);
  if (frames.empty())
    throw InputError("landmark stream " + path + " holds no frames");
  const auto clips = ingest::group_clips(std::move(frames));
  const ingest::EmbedFn embed_fn = [&](const ingest::LandmarkFrame& frame) {
    return provider.get(frame.clip_id, frame.frame_index, frame.points);
  };
  return ingest::build_samples(clips, rc.model.frames_per_sample, embed_fn,
                               class_names);
}

void write_lines(const std::string& path,
                 const std::vector<std::string>& lines) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open file for writing: " + path);
  for (const auto& line : lines) out << line << "\n";
  out.close();
  if (!out) throw IoError("write failed: " + path);
}

// ---------------------------------------------------------------------------

int cmd_synth(const std::string& out_dir, std::size_t clips,
              std::size_t classes, std::uint64_t seed, std::size_t embed_dim,
              std::ostream& err) {
  const ingest::ClipSplit split = ingest::synth_clip_split(seed, clips, classes);
  fs::create_directories(out_dir);

  write_lines((fs::path(out_dir) / "classes.txt").string(), split.class_names);

  std::vector<std::string> embedding_lines;
  const auto dump_split = [&](const char* name,
                              const std::vector<ingest::Clip>& split_clips) {
    std::vector<std::string> lines;
    for (const auto& clip : split_clips) {
      for (const auto& frame : clip.frames) {
        lines.push_back(ingest::serialize_landmark_frame(frame));
        embed::FrameEmbedding e{
            frame.clip_id, frame.frame_index,
            embed::synthetic_embedding(frame.points, embed_dim, seed)};
        embedding_lines.push_back(embed::serialize_embedding(e));
      }
    }
    write_lines((fs::path(out_dir) / (std::string(name) + ".ndjson")).string(),
                lines);
    err << "synth: wrote " << split_clips.size() << " clips to " << name
        << ".ndjson\n";
  };
  dump_split("train", split.train);
  dump_split("validation", split.validation);
  dump_split("test", split.test);
  write_lines((fs::path(out_dir) / "embeddings.ndjson").string(),
              embedding_lines);
  err << "synth: wrote " << embedding_lines.size() << " embeddings\n";
  return 0;
}

int cmd_train(const std::string& data_dir, const RunConfig& rc,
              const std::string& ckpt_path, std::ostream& out,
              std::ostream& err) {
  const auto class_names = read_class_names(data_dir);
  if (class_names.size() != rc.model.classes) {
    std::ostringstream msg;
    msg << "data dir " << data_dir << " lists " << class_names.size()
        << " classes but the model config expects " << rc.model.classes;
    throw InputError(msg.str());
  }
  const embed::Provider provider = make_provider(rc, data_dir);
  const auto samples =
      load_split_samples(data_dir, "train", rc, provider, class_names);
  err << "train: " << samples.size() << " clips, "
      << model::count_parameters(rc.model) << " parameters\n";

  model::TrainOptions opts;
  opts.max_epochs = rc.train.max_epochs;
  opts.patience = rc.train.patience;
  opts.learning_rate = rc.train.learning_rate;
  opts.batch_size = rc.train.batch_size;
  opts.seed = rc.train.seed;
  const model::TrainResult result = model::train_loop(
      samples, rc.model, opts, [&](std::size_t epoch, double loss) {
        err << "epoch " << epoch << " loss " << loss << "\n";
      });

  model::checkpoint_save(result.params, ckpt_path);
  out << "epochs " << result.history.epoch_loss.size() << "\n"
      << "best_epoch " << result.history.best_epoch << "\n"
      << "best_loss " << result.history.best_loss << "\n"
      << "checkpoint " << ckpt_path << "\n";
  return 0;
}

int cmd_eval(const std::string& data_dir, const std::string& ckpt_path,
             const std::string& split, bool as_json, const RunConfig& rc_in,
             std::ostream& out) {
  const model::ModelParams params = model::checkpoint_load(ckpt_path);
  RunConfig rc = rc_in;
  rc.model = params.config;
  const auto class_names = read_class_names(data_dir);
  if (class_names.size() != rc.model.classes) {
    std::ostringstream msg;
    msg << "data dir " << data_dir << " lists " << class_names.size()
        << " classes but the checkpoint expects " << rc.model.classes;
    throw InputError(msg.str());
  }
  const embed::Provider provider = make_provider(rc, data_dir);
  const auto samples =
      load_split_samples(data_dir, split, rc, provider, class_names);

  std::vector<std::vector<double>> clip_probs;
  std::vector<int> labels;
  for (const auto& clip : samples) {
    const model::Sample sample = model::to_sample(clip);
    const model::ForwardResult fwd = model::model_forward(sample, params);
    clip_probs.push_back(model::mean_probs(fwd.probs));
    labels.push_back(clip.label);
  }
  const model::Metrics m =
      model::classification_metrics(clip_probs, labels, rc.model.classes);

  if (as_json) {
    nlohmann::ordered_json j;
    j["split"] = split;
    j["clips"] = samples.size();
    j["accuracy"] = m.accuracy;
    j["precision"] = m.precision;
    j["recall"] = m.recall;
    j["f1"] = m.f1;
    j["auc"] = m.auc;
    out << j.dump() << "\n";
  } else {
    out << "split " << split << "\n"
        << "clips " << samples.size() << "\n"
        << "accuracy " << m.accuracy << "\n"
        << "precision " << m.precision << "\n"
        << "recall " << m.recall << "\n"
        << "f1 " << m.f1 << "\n"
        << "auc " << m.auc << "\n";
  }
  return 0;
}

int cmd_predict(const std::string& ckpt_path, const std::string& input_path,
                const std::string& out_path, const RunConfig& rc_in,
                std::ostream& err) {
  const model::ModelParams params = model::checkpoint_load(ckpt_path);
  RunConfig rc = rc_in;
  rc.model = params.config;
  const std::size_t window = rc.model.frames_per_sample;
  // A file-backed provider defaults to embeddings.ndjson beside the input.
  const embed::Provider provider =
      make_provider(rc, fs::path(input_path).parent_path().string());

  std::ifstream in(input_path);
  if (!in) throw IoError("cannot open input stream: " + input_path);
  std::ofstream out(out_path);
  if (!out) throw IoError("cannot open output file: " + out_path);

  // Rolling per-clip windows; short histories are padded in front with the
  // all-ones fallback frame.
  ingest::LandmarkFrame pad;
  pad.clip_id = "";
  pad.frame_index = -1;
  pad.detected = false;
  pad.points = numkit::DenseMatrix(ingest::kLandmarkCount,
                                   ingest::kPointFeatures, 1.0);
  const std::vector<double> file_pad_vec(rc.model.fused_dim, 0.0);
  const auto pad_embedding = [&]() {
    // File-backed tables cannot answer for synthetic pad frames.
    if (rc.embed.kind == "file") return file_pad_vec;
    return provider.get(pad.clip_id, pad.frame_index, pad.points);
  };

  struct Window {
    std::deque<ingest::LandmarkFrame> frames;
    std::deque<std::vector<double>> embeddings;
  };
  std::map<std::string, Window> windows;

  std::string line;
  std::size_t line_no = 0;
  std::size_t emitted = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const ingest::LandmarkFrame frame =
        ingest::parse_landmark_record(line, line_no);
    Window& w = windows[frame.clip_id];
    if (w.frames.empty()) {
      for (std::size_t i = 0; i + 1 < window; ++i) {
        w.frames.push_back(pad);
        w.embeddings.push_back(pad_embedding());
      }
    }
    w.frames.push_back(frame);
    w.embeddings.push_back(
        provider.get(frame.clip_id, frame.frame_index, frame.points));
    while (w.frames.size() > window) {
      w.frames.pop_front();
      w.embeddings.pop_front();
    }

    model::Sample sample;
    sample.label = 0;
    for (std::size_t i = 0; i < window; ++i) {
      sample.points.push_back(w.frames[i].points);
      sample.embeddings.push_back(w.embeddings[i]);
    }
    const model::ForwardResult fwd = model::model_forward(sample, params);
    std::vector<double> probs(rc.model.classes);
    for (std::size_t m = 0; m < rc.model.classes; ++m)
      probs[m] = fwd.probs.at(window - 1, m);

    nlohmann::ordered_json rec;
    rec["clip"] = frame.clip_id;
    rec["frame"] = frame.frame_index;
    rec["pred"] = model::predict_class(probs);
    rec["probs"] = probs;
    out << rec.dump() << "\n";
    ++emitted;
  }
  out.close();
  if (!out) throw IoError("write failed: " + out_path);
  err << "predict: " << emitted << " records -> " << out_path << "\n";
  return 0;
}

int cmd_bench(const RunConfig& rc, std::size_t batch, std::size_t iters,
              std::size_t warmup, std::uint64_t seed, bool as_json,
              std::ostream& out) {
  bench::BenchOptions opts;
  opts.batch_size = batch;
  opts.iterations = iters;
  opts.warmup = warmup;
  opts.seed = seed;
  const bench::BenchReport report = bench::run_benchmark(rc.model, opts);
  out << bench::render_report(report, as_json ? bench::ReportFormat::kJson
                                              : bench::ReportFormat::kTable);
  if (as_json) out << "\n";
  return 0;
}

int cmd_gradcheck(double tol, std::uint64_t seed, std::ostream& out,
                  std::ostream& err) {
  model::ModelConfig cfg;
  cfg.nodes = 5;
  cfg.landmark_features = 3;
  cfg.fused_dim = 4;
  cfg.adj_embed_dim = 2;
  cfg.residual_channels = 3;
  cfg.gcn_hidden = 3;
  cfg.classes = 3;
  cfg.frames_per_sample = 8;
  cfg.conv_taps = 2;
  cfg.dilations = {1, 2};

  Rng rng(seed);
  model::Sample sample;
  sample.label = static_cast<int>(rng.bounded(cfg.classes));
  for (std::size_t t = 0; t < cfg.frames_per_sample; ++t) {
    numkit::DenseMatrix pts(cfg.nodes, cfg.landmark_features);
    for (double& v : pts.data) v = rng.uniform(-1.0, 1.0);
    sample.points.push_back(std::move(pts));
    std::vector<double> e(cfg.fused_dim);
    for (double& v : e) v = rng.uniform(-1.0, 1.0);
    sample.embeddings.push_back(std::move(e));
  }

  model::ModelParams params = model::init_params(cfg, seed + 1);
  model::ModelParams grads = model::zeros_like(cfg);
  model::ForwardResult fwd = model::model_forward(sample, params);
  model::backward_pass(params, fwd.trace, sample.label, grads);

  const auto p_refs = model::tensor_refs(params);
  const auto g_refs = model::tensor_refs(grads);
  bool ok = true;
  for (std::size_t i = 0; i < p_refs.size(); ++i) {
    std::vector<double>& tensor = *p_refs[i].values;
    const auto loss_of = [&](std::span<const double> values) {
      std::vector<double> saved = tensor;
      std::copy(values.begin(), values.end(), tensor.begin());
      const model::ForwardResult probe = model::model_forward(sample, params);
      std::copy(saved.begin(), saved.end(), tensor.begin());
      return model::cross_entropy_loss(probe.probs, sample.label);
    };
    const std::vector<double> fd =
        numkit::finite_difference_grad(loss_of, tensor, 1e-5);
    double gap = 0.0, scale = 0.0;
    const std::vector<double>& analytic = *g_refs[i].values;
    for (std::size_t j = 0; j < fd.size(); ++j) {
      gap = std::max(gap, std::abs(fd[j] - analytic[j]));
      scale = std::max({scale, std::abs(fd[j]), std::abs(analytic[j])});
    }
    const double rel = gap / std::max(scale, 1e-8);
    out << p_refs[i].name << " " << rel << "\n";
    if (!(rel < tol)) ok = false;
  }
  if (!ok) {
    err << "gradcheck: at least one tensor exceeds tolerance " << tol << "\n";
    return 3;
  }
  return 0;
}

}  // namespace

int run_command(const std::vector<std::string>& args, std::ostream& out,
                std::ostream& err) {
  CLI::App app{"Spatio-temporal graph classifier for facial-landmark "
               "streams"};
  app.require_subcommand(1);

  // synth
  auto* synth = app.add_subcommand(
      "synth", "Generate a synthetic landmark dataset with embeddings");
  std::string synth_out;
  std::size_t synth_clips = 0;
  std::size_t synth_classes = 3;
  std::uint64_t synth_seed = 1;
  std::size_t synth_dim = 64;
  synth->add_option("--out", synth_out, "Output directory")->required();
  synth->add_option("--clips", synth_clips, "Clips per class")->required();
  synth->add_option("--classes", synth_classes, "Class count (2 or 3)")
      ->capture_default_str();
  synth->add_option("--seed", synth_seed, "Generator seed")
      ->capture_default_str();
  synth->add_option("--embed-dim", synth_dim, "Embedding dimension")
      ->capture_default_str();

  // train
  auto* train = app.add_subcommand("train", "Train a model on a dataset dir");
  std::string train_data, train_config, train_ckpt;
  std::size_t f_epochs = 0, f_patience = 0, f_batch = 0;
  double f_lr = 0.0;
  std::uint64_t f_seed = 0;
  train->add_option("--data", train_data, "Dataset directory")->required();
  train->add_option("--config", train_config, "Key-value config file");
  train->add_option("--out", train_ckpt, "Checkpoint path")->required();
  auto* opt_epochs =
      train->add_option("--epochs", f_epochs, "Max epochs (default 100)");
  auto* opt_patience = train->add_option(
      "--patience", f_patience, "Early-stop patience (default 3)");
  auto* opt_lr =
      train->add_option("--lr", f_lr, "Learning rate (default 1e-4)");
  auto* opt_batch =
      train->add_option("--batch", f_batch, "Batch size (default 1)");
  auto* opt_seed = train->add_option("--seed", f_seed, "Seed (default 1)");

  // eval
  auto* eval = app.add_subcommand("eval", "Evaluate a checkpoint on a split");
  std::string eval_data, eval_ckpt, eval_config;
  std::string eval_split = "test";
  bool eval_json = false;
  eval->add_option("--data", eval_data, "Dataset directory")->required();
  eval->add_option("--model", eval_ckpt, "Checkpoint path")->required();
  eval->add_option("--config", eval_config, "Key-value config file");
  eval->add_option("--split", eval_split, "train, validation or test")
      ->capture_default_str();
  eval->add_flag("--json", eval_json, "Emit JSON");

  // predict
  auto* predict = app.add_subcommand(
      "predict", "Streaming per-frame prediction over a landmark file");
  std::string pred_ckpt, pred_in, pred_out, pred_config;
  predict->add_option("--model", pred_ckpt, "Checkpoint path")->required();
  predict->add_option("--input", pred_in, "Landmark stream file")->required();
  predict->add_option("--out", pred_out, "Output records file")->required();
  predict->add_option("--config", pred_config,
                      "Key-value config file (embedding provider)");

  // bench
  auto* bench_cmd = app.add_subcommand(
      "bench", "Measure forward/backward time, throughput and memory");
  std::string bench_config;
  std::size_t bench_batch = 8, bench_iters = 10, bench_warmup = 3;
  std::uint64_t bench_seed = 1;
  bool bench_json = false;
  bench_cmd->add_option("--config", bench_config, "Key-value config file");
  bench_cmd->add_option("--batch", bench_batch, "Batch size")
      ->capture_default_str();
  bench_cmd->add_option("--iters", bench_iters, "Timed iterations")
      ->capture_default_str();
  bench_cmd->add_option("--warmup", bench_warmup, "Untimed warmup iterations")
      ->capture_default_str();
  bench_cmd->add_option("--seed", bench_seed, "Dummy-batch seed")
      ->capture_default_str();
  bench_cmd->add_flag("--json", bench_json, "Emit JSON");

  // gradcheck
  auto* grad = app.add_subcommand(
      "gradcheck",
      "Compare analytic gradients against central finite differences");
  double grad_tol = 1e-4;
  std::uint64_t grad_seed = 1;
  grad->add_option("--tol", grad_tol, "Per-tensor relative tolerance")
      ->capture_default_str();
  grad->add_option("--seed", grad_seed, "Sample seed")->capture_default_str();

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "usage error: " << e.what() << "\n";
    return 1;
  }

  try {
    if (synth->parsed()) {
      return cmd_synth(synth_out, synth_clips, synth_classes, synth_seed,
                       synth_dim, err);
    }
    if (train->parsed()) {
      RunConfig rc = load_run_config(train_config);
      if (opt_epochs->count()) rc.train.max_epochs = f_epochs;
      if (opt_patience->count()) rc.train.patience = f_patience;
      if (opt_lr->count()) rc.train.learning_rate = f_lr;
      if (opt_batch->count()) rc.train.batch_size = f_batch;
      if (opt_seed->count()) rc.train.seed = f_seed;
      return cmd_train(train_data, rc, train_ckpt, out, err);
    }
    if (eval->parsed()) {
      if (eval_split != "train" && eval_split != "validation" &&
          eval_split != "test")
        throw InputError("eval: unknown split " + eval_split);
      return cmd_eval(eval_data, eval_ckpt, eval_split, eval_json,
                      load_run_config(eval_config), out);
    }
    if (predict->parsed()) {
      return cmd_predict(pred_ckpt, pred_in, pred_out,
                         load_run_config(pred_config), err);
    }
    if (bench_cmd->parsed()) {
      return cmd_bench(load_run_config(bench_config), bench_batch, bench_iters,
                       bench_warmup, bench_seed, bench_json, out);
    }
    if (grad->parsed()) {
      return cmd_gradcheck(grad_tol, grad_seed, out, err);
    }
  } catch (const NumericError& e) {
    err << "numeric failure: " << e.what() << "\n";
    return 3;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  }
  err << "usage error: no subcommand\n";
  return 1;
}

}  // namespace litefat::cli
