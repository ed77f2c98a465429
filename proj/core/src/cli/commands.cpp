#include "ssp/cli/commands.hpp"

#include <algorithm>
#include <chrono>
#include <filesystem>
#include <ostream>

#include "json.hpp"
#include "ssp/common/allocator.hpp"
#include "ssp/common/binary_io.hpp"
#include "ssp/common/parallel.hpp"
#include "ssp/config.hpp"
#include "ssp/eval/report.hpp"
#include "ssp/model/checkpoint.hpp"
#include "ssp/pipeline/adaptation.hpp"
#include "ssp/pipeline/batch.hpp"
#include "ssp/pipeline/train.hpp"
#include "ssp/synthdata/dataset_io.hpp"

namespace ssp::cli {
namespace {

namespace fs = std::filesystem;
using nlohmann::ordered_json;

struct Context {
  const Request& req;
  RunConfig cfg;
  std::string config_text;
  std::ostream& out;
  std::ostream& log;
  std::vector<std::string> outputs;
};

const std::string* find_option(const Request& r, const std::string& key) {
  const auto it = r.options.find(key);
  return it == r.options.end() ? nullptr : &it->second;
}

const std::string& require_option(const Request& r, const std::string& key) {
  const auto* v = find_option(r, key);
  if (!v || v->empty()) throw ConfigError("--" + key, "is required for '" + r.command + "'");
  return *v;
}

std::size_t parse_count(const std::string& key, const std::string& text) {
  std::size_t pos = 0;
  long long v = 0;
  try {
    v = std::stoll(text, &pos);
  } catch (const std::exception&) {
    pos = 0;
  }
  if (pos != text.size() || v < 0) throw ConfigError("--" + key, "expected a non-negative integer, got '" + text + "'");
  return static_cast<std::size_t>(v);
}

void require_out(const Request& r) {
  if (r.out.empty()) throw ConfigError("--out", "is required for '" + r.command + "'");
}

std::string file_stem(const std::string& path) { return fs::path(path).stem().string(); }

pipeline::TrainOptions train_options(Context& ctx, const pipeline::RunDir& run) {
  pipeline::TrainOptions o;
  o.run = &run;
  if (const auto* r = find_option(ctx.req, "resume")) o.resume_from = *r;
  if (!ctx.req.quiet) {
    o.log = [&log = ctx.log](const std::string& line) { log << line << std::endl; };
    o.log_every = 100;
  }
  return o;
}

std::vector<eval::EvalPair> validation_pairs(const Context& ctx) {
  if (const auto* v = find_option(ctx.req, "validation")) return eval::read_eval_set(*v);
  return eval::make_eval_set(ctx.cfg.eval_set, ctx.cfg.validation_pairs,
                             pipeline::stream_seed(ctx.cfg.seed, pipeline::Stream::Validation));
}

void cmd_gen(Context& ctx) {
  require_out(ctx.req);
  const auto* kind = find_option(ctx.req, "kind");
  const auto& cfg = ctx.cfg;
  if (kind && *kind == "eval") {
    const auto* p = find_option(ctx.req, "pairs");
    const std::size_t n = p ? parse_count("pairs", *p) : cfg.eval_pairs;
    if (n == 0) throw ConfigError("--pairs", "must be > 0");
    eval::write_eval_set(eval::make_eval_set(cfg.eval_set, n, pipeline::stream_seed(cfg.seed, pipeline::Stream::Evaluation)),
                         ctx.req.out);
  } else if (!kind || *kind == "train") {
    const auto* c = find_option(ctx.req, "count");
    const std::size_t n = c ? parse_count("count", *c) : cfg.train_count;
    std::vector<synth::ImageSample> samples(n);
    const auto base = pipeline::stream_seed(cfg.seed, pipeline::Stream::Data);
    parallel_for(n, cfg.workers, [&](std::size_t i) { samples[i] = synth::render_scene(cfg.scene, derive_seed(base, i)); });
    synth::write_dataset(samples, ctx.req.out);
  } else {
    throw ConfigError("--kind", "expected 'train' or 'eval', got '" + *kind + "'");
  }
  ctx.outputs.push_back(ctx.req.out);
  ctx.out << ctx.req.out << "\n";
}

void cmd_pretrain(Context& ctx) {
  require_out(ctx.req);
  const auto data = synth::read_dataset(require_option(ctx.req, "data"));
  const auto validation = validation_pairs(ctx);
  pipeline::RunDir run(ctx.req.out);
  io::write_text_file(run.config_path(), ctx.config_text);
  const auto res = pipeline::pretrain_magicpoint(ctx.cfg.pretrain, data, validation, train_options(ctx, run));
  ctx.outputs.push_back(res.best_path);
  for (const auto& e : res.evaluations) ctx.outputs.push_back(e.path);
  ctx.out << res.best_path << "\n";
}

void cmd_label(Context& ctx) {
  require_out(ctx.req);
  auto net = model::instantiate(model::load_checkpoint(require_option(ctx.req, "checkpoint")));
  const auto& data_path = require_option(ctx.req, "data");
  const auto data = synth::read_dataset(data_path);
  pipeline::RunDir run(ctx.req.out);
  io::write_text_file(run.config_path(), ctx.config_text);
  const auto labeled = pipeline::label_dataset(net, data, ctx.cfg.adaptation);
  const auto path = run.labels_path(file_stem(data_path));
  synth::write_dataset(labeled, path);
  ctx.outputs.push_back(path);
  ctx.out << path << "\n";
}

void cmd_train(Context& ctx) {
  require_out(ctx.req);
  const auto data = synth::read_dataset(require_option(ctx.req, "data"));
  const auto validation = validation_pairs(ctx);
  pipeline::RunDir run(ctx.req.out);
  io::write_text_file(run.config_path(), ctx.config_text);
  const auto res = pipeline::joint_train(ctx.cfg.train, data, validation, train_options(ctx, run));
  ctx.outputs.push_back(res.best_path);
  for (const auto& e : res.evaluations) ctx.outputs.push_back(e.path);
  ctx.out << res.best_path << "\n";
}

void cmd_eval(Context& ctx) {
  require_out(ctx.req);
  if (ctx.req.inputs.empty()) throw ConfigError("checkpoint", "eval needs at least one checkpoint");
  std::vector<eval::EvalPair> pairs;
  if (const auto* set = find_option(ctx.req, "eval-set")) {
    pairs = eval::read_eval_set(*set);
  } else {
    const auto* p = find_option(ctx.req, "pairs");
    const std::size_t n = p ? parse_count("pairs", *p) : ctx.cfg.eval_pairs;
    if (n == 0) throw ConfigError("--pairs", "must be > 0");
    pairs = eval::make_eval_set(ctx.cfg.eval_set, n, pipeline::stream_seed(ctx.cfg.seed, pipeline::Stream::Evaluation));
  }
  if (pairs.empty()) throw ConfigError("--eval-set", "contains no pairs");

  // Load everything first so a bad checkpoint fails before any report is written.
  std::vector<model::Checkpoint> ckpts;
  for (const auto& path : ctx.req.inputs) ckpts.push_back(model::load_checkpoint(path));
  std::vector<std::string> names;
  for (std::size_t i = 0; i < ckpts.size(); ++i) {
    std::string name = ckpts.size() == 1 && find_option(ctx.req, "name") ? *find_option(ctx.req, "name")
                                                                          : file_stem(ctx.req.inputs[i]);
    if (std::find(names.begin(), names.end(), name) != names.end()) name += "_" + std::to_string(i);
    names.push_back(name);
  }
  fs::create_directories(ctx.req.out);
  std::vector<eval::MetricReport> reports;
  for (std::size_t i = 0; i < ckpts.size(); ++i) {
    auto net = model::instantiate(ckpts[i]);
    reports.push_back(eval::evaluate_model(net, pairs, ctx.cfg.eval, names[i]));
    const auto path = (fs::path(ctx.req.out) / (names[i] + ".json")).string();
    io::write_text_file(path, eval::report_json(reports.back()));
    ctx.outputs.push_back(path);
  }
  const auto csv = (fs::path(ctx.req.out) / "reports.csv").string();
  io::write_text_file(csv, eval::reports_csv(reports));
  ctx.outputs.push_back(csv);
  ctx.out << eval::reports_csv(reports);
}

void cmd_compare(Context& ctx) {
  if (ctx.req.inputs.empty()) throw ConfigError("report", "compare needs at least one report");
  std::vector<eval::MetricReport> reports;
  for (const auto& path : ctx.req.inputs) reports.push_back(eval::parse_report_json(io::read_text_file(path)));
  const auto table = eval::ranking_table(reports);
  if (!ctx.req.out.empty()) {
    io::write_text_file(ctx.req.out, table);
    ctx.outputs.push_back(ctx.req.out);
  }
  ctx.out << table;
}

std::pair<RunConfig, std::string> resolve_config(const Request& r) {
  TextConfig text;
  if (!r.config_text.empty()) {
    text = TextConfig::parse(r.config_text);
  } else {
    if (!r.config_path.empty()) {
      if (!fs::exists(r.config_path)) throw ConfigError("--config", "file not found: " + r.config_path);
      text = TextConfig::load(r.config_path);
    }
    if (r.preset) text.set("run.preset", *r.preset);
    if (r.scale) text.set("run.scale", *r.scale);
    if (r.seed) text.set("run.seed", std::to_string(*r.seed));
    if (r.workers) text.set("run.workers", std::to_string(*r.workers));
  }
  auto cfg = load_run_config(text);
  cfg.validate();
  return {cfg, to_text(cfg).serialize()};
}

ordered_json request_json(const Request& r) {
  ordered_json j;
  j["config_path"] = r.config_path;
  j["out"] = r.out;
  j["options"] = r.options;
  j["inputs"] = r.inputs;
  return j;
}

void write_manifest(const Context& ctx, const std::string& status, int code, double seconds) {
  const auto path = manifest_path(ctx.req);
  if (path.empty()) return;
  ordered_json j;
  j["command"] = ctx.req.command;
  j["tool_version"] = tool_version();
  j["seed"] = ctx.cfg.seed;
  j["status"] = status;
  j["exit_code"] = code;
  j["request"] = request_json(ctx.req);
  j["config"] = ctx.config_text;
  j["outputs"] = ctx.outputs;
  j["timings"] = {{"wall_seconds", seconds}};
  io::write_text_file(path, j.dump(2) + "\n");
}

}  // namespace

std::string_view tool_version() { return "0.3.0"; }

std::string manifest_path(const Request& r) {
  if (r.out.empty()) return {};
  if (r.command == "gen" || r.command == "compare") return r.out + ".manifest.json";
  return (fs::path(r.out) / "manifest.json").string();
}

int run(const Request& req, std::ostream& out, std::ostream& log) {
  configure_allocator();
  static const std::map<std::string, void (*)(Context&)> commands{
      {"gen", cmd_gen},     {"pretrain", cmd_pretrain}, {"label", cmd_label},
      {"train", cmd_train}, {"eval", cmd_eval},         {"compare", cmd_compare}};
  const auto it = commands.find(req.command);
  if (it == commands.end()) {
    log << "error: unknown command '" << req.command << "'\n";
    return kExitUsage;
  }
  std::optional<Context> ctx;
  const auto started = std::chrono::steady_clock::now();
  const auto elapsed = [&] {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  };
  int code = kExitOk;
  try {
    auto [cfg, text] = resolve_config(req);
    ctx.emplace(Context{req, std::move(cfg), std::move(text), out, log, {}});
    write_manifest(*ctx, "running", -1, 0.0);
    it->second(*ctx);
  } catch (const pipeline::TrainingAborted& e) {
    log << "error: " << e.what() << "\n";
    log << "last checkpoint: " << (e.last_checkpoint().empty() ? "(none)" : e.last_checkpoint()) << "\n";
    code = kExitNumeric;
  } catch (const NumericError& e) {
    log << "error: " << e.what() << "\n";
    code = kExitNumeric;
  } catch (const Error& e) {
    log << "error: " << e.what() << "\n";
    code = kExitUsage;
  } catch (const fs::filesystem_error& e) {
    log << "error: " << e.what() << "\n";
    code = kExitUsage;
  } catch (const std::exception& e) {
    log << "internal error: " << e.what() << "\n";
    code = kExitFailure;
  }
  if (ctx) {
    try {
      write_manifest(*ctx, code == kExitOk ? "ok" : "failed", code, elapsed());
    } catch (const std::exception& e) {
      log << "error: cannot write manifest: " << e.what() << "\n";
      if (code == kExitOk) code = kExitUsage;
    }
  }
  return code;
}

Request request_from_manifest(const std::string& path) {
  const auto j = ordered_json::parse(io::read_text_file(path), nullptr, false);
  if (j.is_discarded()) throw FormatError("manifest is not valid JSON", 0, "manifest");
  Request r;
  try {
    r.command = j.at("command").get<std::string>();
    r.config_text = j.at("config").get<std::string>();
    const auto& q = j.at("request");
    r.config_path = q.at("config_path").get<std::string>();
    r.out = q.at("out").get<std::string>();
    r.options = q.at("options").get<std::map<std::string, std::string>>();
    r.inputs = q.at("inputs").get<std::vector<std::string>>();
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("manifest is incomplete: ") + e.what(), 0, "manifest");
  }
  return r;
}

}  // namespace ssp::cli
