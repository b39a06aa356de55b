#include "uninfo/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <mutex>
#include <numeric>
#include <set>
#include <thread>

#include "uninfo/checkpoint.hpp"
#include "uninfo/diagnostics.hpp"
#include "uninfo/logging.hpp"
#include "uninfo/prompt_bank.hpp"

namespace uninfo {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

void check_keys(const json& obj, const std::string& where, std::initializer_list<const char*> allowed) {
  require(obj.is_object(), ErrorCode::ConfigError, where + " must be an object");
  for (const auto& [key, _] : obj.items()) {
    bool ok = false;
    for (const char* a : allowed) ok |= key == a;
    require(ok, ErrorCode::ConfigError, "unknown key '" + key + "' in " + where);
  }
}

template <typename T>
void read(const json& obj, const char* key, T& dst) {
  if (!obj.contains(key)) return;
  try {
    dst = obj.at(key).get<T>();
  } catch (const json::exception& e) {
    fail(ErrorCode::ConfigError, std::string("bad value for '") + key + "': " + e.what());
  }
}

std::string seed_dir(std::uint64_t seed) { return "seed_" + std::to_string(seed); }

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.10g", v);
  return buf;
}

/// Runs fn(i) for i in [0, n) on up to `threads` workers. The first error
/// is rethrown after all workers stop.
template <typename Fn>
void parallel_for(std::size_t n, int threads, Fn&& fn) {
  if (threads <= 1 || n <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::mutex mu;
  std::size_t next = 0;
  std::exception_ptr error;
  auto worker = [&] {
    for (;;) {
      std::size_t i;
      {
        std::lock_guard<std::mutex> lock(mu);
        if (next >= n || error) return;
        i = next++;
      }
      try {
        fn(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(mu);
        if (!error) error = std::current_exception();
      }
    }
  };
  std::vector<std::thread> pool;
  for (int t = 0; t < std::min<int>(threads, static_cast<int>(n)); ++t) pool.emplace_back(worker);
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

}  // namespace

void ExperimentConfig::validate() const {
  require(!seeds.empty(), ErrorCode::ConfigError, "seeds must not be empty");
  require(!kinds.empty(), ErrorCode::EmptyKinds, "no corruption kinds requested");
  require(severity >= 1 && severity <= 5, ErrorCode::ConfigError, "severity must be in 1..5");
  require(inference == "teacher" || inference == "student" || inference == "auto", ErrorCode::ConfigError,
          "inference must be teacher, student or auto");
  require(prototypes.temperature > 0.0, ErrorCode::ConfigError, "temperature must be positive");
  require(threads >= 1, ErrorCode::ConfigError, "threads must be positive");
  apply_preset(preset, tta.balance);
  tta.validate();
  encoder.validate();
  if (!stem.empty()) require(fs::exists(stem), ErrorCode::IoError, "stem checkpoint not found: " + stem);
  if (!dataset.path.empty()) require(fs::exists(dataset.path), ErrorCode::IoError, "dataset not found: " + dataset.path);
  if (!prototypes.path.empty()) {
    require(fs::exists(prototypes.path), ErrorCode::IoError, "prototype archive not found: " + prototypes.path);
  }
}

TTAConfig ExperimentConfig::tta_for(std::uint64_t seed) const {
  TTAConfig t = tta;
  t.balance = apply_preset(preset, tta.balance);
  t.seed = seed;
  t.lora.seed = derive_seed(seed, 0x10a0);
  if (inference == "teacher") {
    t.inference = InferenceSource::Teacher;
  } else if (inference == "student") {
    t.inference = InferenceSource::Student;
  } else {
    // Without distillation the teacher plays no part in the objective.
    t.inference = t.balance.pl_enabled ? InferenceSource::Teacher : InferenceSource::Student;
  }
  return t;
}

ExperimentConfig parse_experiment_config(const json& doc) {
  ExperimentConfig cfg;
  check_keys(doc, "config",
             {"dataset", "prototypes", "stem", "encoder", "tta", "corruptions", "preset", "out", "seeds", "pretrain"});
  if (doc.contains("dataset")) {
    const json& d = doc["dataset"];
    check_keys(d, "dataset", {"path", "count", "image_size", "seed"});
    read(d, "path", cfg.dataset.path);
    read(d, "count", cfg.dataset.count);
    read(d, "image_size", cfg.dataset.image_size);
    read(d, "seed", cfg.dataset.seed);
  }
  if (doc.contains("prototypes")) {
    const json& p = doc["prototypes"];
    check_keys(p, "prototypes", {"path", "classes", "seed", "temperature"});
    read(p, "path", cfg.prototypes.path);
    read(p, "classes", cfg.prototypes.classes);
    read(p, "seed", cfg.prototypes.seed);
    read(p, "temperature", cfg.prototypes.temperature);
  }
  read(doc, "stem", cfg.stem);
  if (doc.contains("encoder")) {
    check_keys(doc["encoder"], "encoder",
               {"image_size", "patch_size", "depth", "width", "heads", "mlp_ratio", "embed_dim"});
    cfg.encoder = encoder_config_from_json(doc["encoder"]);
  }
  if (doc.contains("tta")) {
    const json& t = doc["tta"];
    check_keys(t, "tta",
               {"batch_size", "lr", "weight_decay", "beta1", "beta2", "eps", "momentum", "lambda", "i0", "lora_rank",
                "lora_alpha", "inference", "posthoc_eval"});
    read(t, "batch_size", cfg.tta.batch_size);
    read(t, "lr", cfg.tta.optimizer.lr);
    read(t, "weight_decay", cfg.tta.optimizer.weight_decay);
    read(t, "beta1", cfg.tta.optimizer.beta1);
    read(t, "beta2", cfg.tta.optimizer.beta2);
    read(t, "eps", cfg.tta.optimizer.eps);
    read(t, "momentum", cfg.tta.momentum);
    read(t, "lambda", cfg.tta.balance.lambda);
    read(t, "i0", cfg.tta.balance.i0);
    read(t, "lora_rank", cfg.tta.lora.rank);
    read(t, "lora_alpha", cfg.tta.lora.alpha);
    read(t, "inference", cfg.inference);
    read(t, "posthoc_eval", cfg.tta.posthoc_eval);
  }
  if (doc.contains("corruptions")) {
    const json& c = doc["corruptions"];
    check_keys(c, "corruptions", {"kinds", "severity"});
    if (c.contains("kinds")) {
      std::vector<std::string> names;
      read(c, "kinds", names);
      cfg.kinds.clear();
      try {
        for (const auto& n : names) cfg.kinds.push_back(parse_corruption_kind(n));
      } catch (const Error& e) {
        fail(ErrorCode::ConfigError, e.what());
      }
    }
    read(c, "severity", cfg.severity);
  }
  read(doc, "preset", cfg.preset);
  read(doc, "out", cfg.out);
  read(doc, "seeds", cfg.seeds);
  if (doc.contains("pretrain")) {
    const json& p = doc["pretrain"];
    check_keys(p, "pretrain", {"steps", "batch_size", "lr", "weight_decay", "warmup", "eval_size", "seed",
                             "label_smoothing", "noise_augment"});
    read(p, "steps", cfg.pretrain.steps);
    read(p, "batch_size", cfg.pretrain.batch_size);
    read(p, "lr", cfg.pretrain.lr);
    read(p, "weight_decay", cfg.pretrain.weight_decay);
    read(p, "warmup", cfg.pretrain.warmup);
    read(p, "eval_size", cfg.pretrain.eval_size);
    read(p, "seed", cfg.pretrain.seed);
    read(p, "label_smoothing", cfg.pretrain.label_smoothing);
    read(p, "noise_augment", cfg.pretrain.noise_augment);
  }
  cfg.threads = threads_from_env();
  return cfg;
}

ExperimentConfig load_experiment_config(const fs::path& path) {
  require(fs::exists(path), ErrorCode::IoError, "config not found: " + path.string());
  json doc;
  try {
    doc = json::parse(read_file(path));
  } catch (const json::exception& e) {
    fail(ErrorCode::ConfigError, path.string() + ": " + e.what());
  }
  return parse_experiment_config(doc);
}

json experiment_config_to_json(const ExperimentConfig& cfg) {
  std::vector<std::string> kinds;
  for (auto k : cfg.kinds) kinds.emplace_back(to_string(k));
  return {{"dataset",
           {{"path", cfg.dataset.path},
            {"count", cfg.dataset.count},
            {"image_size", cfg.dataset.image_size},
            {"seed", cfg.dataset.seed}}},
          {"prototypes",
           {{"path", cfg.prototypes.path},
            {"classes", cfg.prototypes.classes},
            {"seed", cfg.prototypes.seed},
            {"temperature", cfg.prototypes.temperature}}},
          {"stem", cfg.stem},
          {"encoder", encoder_config_to_json(cfg.encoder)},
          {"tta",
           {{"batch_size", cfg.tta.batch_size},
            {"lr", cfg.tta.optimizer.lr},
            {"weight_decay", cfg.tta.optimizer.weight_decay},
            {"beta1", cfg.tta.optimizer.beta1},
            {"beta2", cfg.tta.optimizer.beta2},
            {"eps", cfg.tta.optimizer.eps},
            {"momentum", cfg.tta.momentum},
            {"lambda", cfg.tta.balance.lambda},
            {"i0", cfg.tta.balance.i0},
            {"lora_rank", cfg.tta.lora.rank},
            {"lora_alpha", cfg.tta.lora.alpha},
            {"inference", cfg.inference},
            {"posthoc_eval", cfg.tta.posthoc_eval}}},
          {"corruptions", {{"kinds", kinds}, {"severity", cfg.severity}}},
          {"preset", cfg.preset},
          {"out", cfg.out},
          {"seeds", cfg.seeds},
          {"pretrain",
           {{"steps", cfg.pretrain.steps},
            {"batch_size", cfg.pretrain.batch_size},
            {"lr", cfg.pretrain.lr},
            {"weight_decay", cfg.pretrain.weight_decay},
            {"warmup", cfg.pretrain.warmup},
            {"eval_size", cfg.pretrain.eval_size},
            {"seed", cfg.pretrain.seed},
            {"label_smoothing", cfg.pretrain.label_smoothing},
            {"noise_augment", cfg.pretrain.noise_augment}}}};
}

int threads_from_env() {
  const char* v = std::getenv("UNINFO_THREADS");
  if (v == nullptr || *v == '\0') return 1;
  char* end = nullptr;
  const long n = std::strtol(v, &end, 10);
  require(end != nullptr && *end == '\0' && n >= 1, ErrorCode::ConfigError,
          std::string("UNINFO_THREADS must be a positive integer, got '") + v + "'");
  return static_cast<int>(std::min<long>(n, 256));
}

LabeledImages load_clean_dataset(const DatasetSource& src) {
  if (src.path.empty()) return make_shapes_dataset(src.count, src.image_size, src.seed);
  const fs::path p(src.path);
  require(fs::exists(p), ErrorCode::IoError, "dataset not found: " + p.string());
  if (fs::exists(p / TensorArchive::kManifest)) return load_image_archive(p);
  return load_png_dir(p);
}

PrototypeBank<float> load_bank(const ExperimentConfig& cfg) {
  const auto tau = static_cast<float>(cfg.prototypes.temperature);
  if (!cfg.prototypes.path.empty()) return load_prompt_bank(cfg.prototypes.path, tau);
  auto bank = make_toy_bank<float>(cfg.prototypes.classes, cfg.encoder.embed_dim, cfg.prototypes.seed, tau);
  if (cfg.prototypes.classes == kShapeClasses) {
    bank = PrototypeBank<float>(bank.prototypes(), tau, shape_class_names());
  }
  return bank;
}

EncoderWeights<float> load_encoder(const ExperimentConfig& cfg) {
  if (!cfg.stem.empty()) return load_stem(cfg.stem);
  log_warning("no stem checkpoint configured; using a randomly initialized encoder");
  return init_stem<float>(cfg.encoder, cfg.pretrain.seed);
}

std::uint64_t fnv1a(const void* data, std::size_t size, std::uint64_t h) {
  const auto* p = static_cast<const unsigned char*>(data);
  for (std::size_t i = 0; i < size; ++i) {
    h ^= p[i];
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::uint64_t content_hash(const LabeledImages& data) {
  const auto& px = data.images.pixels;
  const int dims[2] = {data.images.height, data.images.width};
  std::uint64_t h = fnv1a(dims, sizeof(dims));
  h = fnv1a(px.data(), static_cast<std::size_t>(px.size()) * sizeof(float), h);
  return fnv1a(data.labels.data(), data.labels.size() * sizeof(int), h);
}

namespace {

std::string hex(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

struct StreamJob {
  CorruptionKind kind;
  std::uint64_t seed;
};

std::vector<StreamJob> stream_jobs(const ExperimentConfig& cfg) {
  std::vector<StreamJob> jobs;
  for (auto k : cfg.kinds) {
    for (auto s : cfg.seeds) jobs.push_back({k, s});
  }
  return jobs;
}

CorruptionSpec spec_for(const ExperimentConfig& cfg, const StreamJob& job) {
  return {job.kind, cfg.severity, derive_seed(job.seed, 0xc0 + static_cast<std::uint64_t>(job.kind)), std::nullopt};
}

/// Loads a cached corrupted stream, or builds and caches it.
LabeledImages corrupted_stream(const LabeledImages& clean, std::uint64_t clean_hash, const CorruptionSpec& spec,
                               std::uint64_t run_seed, const fs::path& root, CorruptedStream* info) {
  const std::string label = spec.label();
  const std::uint64_t key = fnv1a(label.data(), label.size(), clean_hash);
  const fs::path dir = root / (std::string(to_string(spec.kind)) + "-s" + std::to_string(spec.severity) + "-" +
                               seed_dir(run_seed) + "-" + hex(key));
  if (info) *info = {spec, run_seed, dir, false};
  if (fs::exists(dir / TensorArchive::kManifest)) {
    if (info) info->cache_hit = true;
    return load_image_archive(dir);
  }
  LabeledImages out{apply_corruption(clean.images, spec), clean.labels};
  save_image_archive(dir, out,
                     {{"kind", to_string(spec.kind)},
                      {"severity", spec.severity},
                      {"corruption_seed", spec.seed},
                      {"run_seed", run_seed},
                      {"spec", label},
                      {"clean_hash", hex(clean_hash)},
                      {"content_hash", hex(key)}});
  return out;
}

struct Prepared {
  LabeledImages clean;
  std::uint64_t clean_hash = 0;
  fs::path cache_root;
};

Prepared prepare(const ExperimentConfig& cfg) {
  cfg.validate();
  Prepared p;
  p.clean = load_clean_dataset(cfg.dataset);
  p.clean_hash = content_hash(p.clean);
  p.cache_root = fs::path(cfg.out) / "corrupted";
  return p;
}

}  // namespace

std::vector<CorruptedStream> cmd_corrupt(const ExperimentConfig& cfg) {
  const Prepared prep = prepare(cfg);
  const auto jobs = stream_jobs(cfg);
  std::vector<CorruptedStream> out(jobs.size());
  parallel_for(jobs.size(), cfg.threads, [&](std::size_t i) {
    corrupted_stream(prep.clean, prep.clean_hash, spec_for(cfg, jobs[i]), jobs[i].seed, prep.cache_root, &out[i]);
  });
  json manifest = json::array();
  for (const auto& s : out) {
    manifest.push_back({{"kind", to_string(s.spec.kind)},
                        {"severity", s.spec.severity},
                        {"corruption_seed", s.spec.seed},
                        {"run_seed", s.run_seed},
                        {"path", s.path.filename().string()}});
  }
  write_file_atomic(prep.cache_root / "streams.json", manifest.dump(2) + "\n");
  return out;
}

double sample_std(const std::vector<double>& values) {
  if (values.size() < 2) return 0.0;
  const double mean = std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());
  double ss = 0.0;
  for (double v : values) ss += (v - mean) * (v - mean);
  return std::sqrt(ss / static_cast<double>(values.size() - 1));
}

namespace {

void summarize(RunReport& report, const ExperimentConfig& cfg) {
  for (auto kind : cfg.kinds) {
    KindSummary s;
    s.kind = to_string(kind);
    for (const auto& r : report.runs) {
      if (r.kind == s.kind) s.per_seed.push_back(r.accuracy);
    }
    s.mean = std::accumulate(s.per_seed.begin(), s.per_seed.end(), 0.0) / static_cast<double>(s.per_seed.size());
    s.std = sample_std(s.per_seed);
    report.summary.push_back(s);
  }
  double total = 0.0;
  for (const auto& s : report.summary) total += s.mean;
  report.mean_over_kinds = total / static_cast<double>(report.summary.size());
}

void write_summary(const RunReport& report, const ExperimentConfig& cfg, const std::string& mode) {
  const fs::path out(cfg.out);
  write_file_atomic(out / "summary.csv", summary_csv(report));
  json runs = json::array();
  for (const auto& r : report.runs) {
    json j = {{"kind", r.kind}, {"seed", r.seed}, {"accuracy", r.accuracy}, {"metrics", r.metrics_path.string()}};
    if (r.posthoc_accuracy) j["posthoc_accuracy"] = *r.posthoc_accuracy;
    runs.push_back(j);
  }
  json doc = {{"mode", mode},
              {"preset", cfg.preset},
              {"mean_over_kinds", report.mean_over_kinds},
              {"runs", runs},
              {"config", experiment_config_to_json(cfg)}};
  write_file_atomic(out / "summary.json", doc.dump(2) + "\n");
}

}  // namespace

std::string summary_csv(const RunReport& report) {
  std::string s = "kind,mean,std,seeds\n";
  for (const auto& k : report.summary) {
    s += k.kind + "," + fmt(k.mean) + "," + fmt(k.std) + "," + std::to_string(k.per_seed.size()) + "\n";
  }
  const std::size_t n = report.summary.empty() ? 0 : report.summary.front().per_seed.size();
  s += "mean," + fmt(report.mean_over_kinds) + ",," + std::to_string(n) + "\n";
  return s;
}

RunReport cmd_run(const ExperimentConfig& cfg) {
  const Prepared prep = prepare(cfg);
  const auto bank = load_bank(cfg);
  const auto stem = load_encoder(cfg);
  const auto jobs = stream_jobs(cfg);
  RunReport report;
  report.runs.resize(jobs.size());
  parallel_for(jobs.size(), cfg.threads, [&](std::size_t i) {
    const auto& job = jobs[i];
    const LabeledImages stream =
        corrupted_stream(prep.clean, prep.clean_hash, spec_for(cfg, job), job.seed, prep.cache_root, nullptr);
    const fs::path dir = fs::path(cfg.out) / "runs" / to_string(job.kind) / seed_dir(job.seed);
    const TTAConfig tcfg = cfg.tta_for(job.seed);
    auto dump = [&](const TTAState& st, const std::vector<MetricsRecord>& records) {
      const fs::path fail_dir = dir / "failed";
      save_lora(fail_dir / "student", st.student);
      save_lora(fail_dir / "teacher", st.teacher.ema);
      write_file_atomic(fail_dir / "metrics.csv", metrics_csv(records));
      write_file_atomic(fail_dir / "state.json", json{{"step", st.step}, {"optimizer_step", st.optimizer.step}}.dump(2));
    };
    RunOutcome& r = report.runs[i];
    r.kind = to_string(job.kind);
    r.seed = job.seed;
    r.stream = run_stream(stem, stream, bank, tcfg, dump);
    r.accuracy = r.stream.online_accuracy;
    r.posthoc_accuracy = r.stream.posthoc_accuracy;
    r.metrics_path = dir / "metrics.csv";
    write_file_atomic(r.metrics_path, metrics_csv(r.stream.records));
    save_lora(dir / "student", r.stream.final_state.student);
    save_lora(dir / "teacher", r.stream.final_state.teacher.ema);
  });
  summarize(report, cfg);
  write_summary(report, cfg, "adapt");
  return report;
}

RunReport cmd_eval(const ExperimentConfig& cfg) {
  const Prepared prep = prepare(cfg);
  const auto bank = load_bank(cfg);
  const auto stem = load_encoder(cfg);
  const auto jobs = stream_jobs(cfg);
  RunReport report;
  report.runs.resize(jobs.size());
  parallel_for(jobs.size(), cfg.threads, [&](std::size_t i) {
    const auto& job = jobs[i];
    const LabeledImages stream =
        corrupted_stream(prep.clean, prep.clean_hash, spec_for(cfg, job), job.seed, prep.cache_root, nullptr);
    const fs::path dir = fs::path(cfg.out) / "eval" / to_string(job.kind) / seed_dir(job.seed);
    RunOutcome& r = report.runs[i];
    r.kind = to_string(job.kind);
    r.seed = job.seed;
    r.stream = evaluate_stream(stem, stream, bank, cfg.tta.batch_size);
    r.accuracy = r.stream.online_accuracy;
    r.metrics_path = dir / "metrics.csv";
    write_file_atomic(r.metrics_path, metrics_csv(r.stream.records));

    // Stream-level diagnostics on a bounded sample.
    const Index n = std::min<Index>(stream.images.size(), 512);
    const Matrix<float> z = encoder_forward<float>(stem, nullptr, stream.images.pixels.topRows(n).eval()).data();
    const auto zd = EmbeddingBatch<double>::from_unit_rows(z.cast<double>());
    const auto bank_d = bank.cast<double>();
    const auto pred = zero_shot_probs(zd, bank_d);
    std::optional<std::span<const int>> truth;
    if (!stream.labels.empty()) truth = std::span<const int>(stream.labels.data(), static_cast<std::size_t>(n));
    const DiagnosticsReport rep = collect_batch_metrics(zd, pred, bank_d, truth);
    json diag = {{"samples", n},
                 {"mean_entropy", rep.mean_entropy},
                 {"uniformity_metric", rep.uniformity_metric},
                 {"emd_modality_gap", rep.emd_modality_gap},
                 {"mutual_information", rep.mutual_information},
                 {"histogram", rep.histogram}};
    if (rep.accuracy) diag["accuracy"] = *rep.accuracy;
    write_file_atomic(dir / "diagnostics.json", diag.dump(2) + "\n");
    const SphericalProjection proj = spherical_pca_project(zd, bank_d);
    std::string csv = "set,x,y\n";
    for (Index k = 0; k < proj.images.rows(); ++k) csv += "image," + fmt(proj.images(k, 0)) + "," + fmt(proj.images(k, 1)) + "\n";
    for (Index k = 0; k < proj.texts.rows(); ++k) csv += "text," + fmt(proj.texts(k, 0)) + "," + fmt(proj.texts(k, 1)) + "\n";
    write_file_atomic(dir / "projection.csv", csv);
  });
  summarize(report, cfg);
  write_summary(report, cfg, "eval");
  return report;
}

SweepParam parse_sweep_param(const std::string& name) {
  if (name == "lambda") return SweepParam::Lambda;
  if (name == "i0") return SweepParam::I0;
  fail(ErrorCode::ConfigError, "sweep parameter must be lambda or i0, got '" + name + "'");
}

std::vector<SweepRow> cmd_sweep(const ExperimentConfig& cfg, SweepParam param, std::vector<double> values) {
  require(!values.empty(), ErrorCode::ConfigError, "sweep needs at least one value");
  std::vector<double> unique;
  for (double v : values) {
    if (std::find(unique.begin(), unique.end(), v) != unique.end()) {
      log_warning("dropping duplicate sweep value " + fmt(v));
      continue;
    }
    unique.push_back(v);
  }
  const char* pname = param == SweepParam::Lambda ? "lambda" : "i0";
  std::vector<SweepRow> rows;
  for (double v : unique) {
    ExperimentConfig c = cfg;
    (param == SweepParam::Lambda ? c.tta.balance.lambda : c.tta.balance.i0) = v;
    c.out = (fs::path(cfg.out) / (std::string("sweep_") + pname + "_" + fmt(v))).string();
    const RunReport rep = cmd_run(c);
    // Per-seed mean over kinds, then spread across seeds.
    std::vector<double> per_seed;
    for (std::size_t s = 0; s < cfg.seeds.size(); ++s) {
      double acc = 0.0;
      for (const auto& k : rep.summary) acc += k.per_seed[s];
      per_seed.push_back(acc / static_cast<double>(rep.summary.size()));
    }
    const double mean = std::accumulate(per_seed.begin(), per_seed.end(), 0.0) / static_cast<double>(per_seed.size());
    rows.push_back({v, mean, sample_std(per_seed)});
  }
  write_file_atomic(fs::path(cfg.out) / (std::string("sweep_") + pname + ".csv"), sweep_csv(rows));
  return rows;
}

std::string sweep_csv(const std::vector<SweepRow>& rows) {
  std::string s = "value,mean,std\n";
  for (const auto& r : rows) s += fmt(r.value) + "," + fmt(r.mean) + "," + fmt(r.std) + "\n";
  return s;
}

PretrainResult cmd_pretrain(const ExperimentConfig& cfg) {
  const auto bank = load_bank(cfg);
  const fs::path out(cfg.out);
  PretrainResult r = pretrain_stem(cfg.encoder, bank, cfg.pretrain, [](int step, double loss, double lr) {
    if (step % 250 == 0) log_info("pretrain step " + std::to_string(step) + " loss " + fmt(loss) + " lr " + fmt(lr));
  });
  save_stem(out / "stem", r.stem);
  save_prototype_bank(out / "prototypes", bank);
  write_file_atomic(out / "pretrain.json", json{{"clean_accuracy", r.clean_accuracy},
                                                {"config", experiment_config_to_json(cfg)}}
                                                   .dump(2) + "\n");
  return r;
}

}  // namespace uninfo
