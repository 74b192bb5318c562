// SPDX-License-Identifier: Apache-2.0
#include "cli_app.hpp"

#include <algorithm>
#include <fstream>
#include <iostream>
#include <set>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"
#include "trajkit/agent.hpp"
#include "trajkit/curation.hpp"
#include "trajkit/dataset.hpp"
#include "trajkit/errors.hpp"
#include "trajkit/eval.hpp"
#include "trajkit/sim_env.hpp"
#include "trajkit/thought_completion.hpp"
#include "trajkit/traj_boost.hpp"

namespace trajkit::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Workspace {
  fs::path root;
  fs::path raw() const { return root / "raw"; }
  fs::path curated() const { return root / "curated"; }
  fs::path thoughts() const { return root / "thoughts"; }
  fs::path trees() const { return root / "trees"; }
  fs::path dataset() const { return root / "dataset"; }
  fs::path reports() const { return root / "reports"; }
  fs::path runs() const { return root / "runs"; }
  fs::path checkpoints() const { return root / "checkpoints"; }
  ImageStore images() const { return ImageStore(root); }
};

// Failure of a stage that is not a library error (e.g. some inputs failed).
class StageFailure : public Error {
 public:
  explicit StageFailure(const std::string& why) : Error("StageFailure", why) {}
};

void write_text_file(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  const auto tmp = fs::path(path.string() + ".tmp");
  {
    std::ofstream out(tmp, std::ios::binary);
    out << text;
    if (!out) throw IoError("cannot write '" + tmp.string() + "'");
  }
  fs::rename(tmp, path);
}

std::string read_text_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

std::string jsonl(const std::vector<json>& records) {
  std::string s;
  for (const auto& r : records) s += r.dump() + "\n";
  return s;
}

void error_record(std::ostream& err, const std::string& stage, const std::string& kind, const std::string& message,
                  const json& extra = json::object()) {
  json j = {{"error", kind}, {"stage", stage}, {"message", message}};
  for (const auto& [k, v] : extra.items()) j[k] = v;
  err << j.dump() << '\n';
}

struct Globals {
  std::optional<std::string> config;
  ConfigOverrides overrides;
};

struct Context {
  PipelineConfig config;
  Workspace ws;
  std::ostream& out;
  std::ostream& err;

  std::shared_ptr<Gateway> gateway() const { return make_gateway(config.gateway); }
  bool gateway_configured() const { return config.gateway.mock_script.has_value() || !config.gateway.model.empty(); }
};

// ---- ingest ---------------------------------------------------------------

void cmd_ingest(Context& ctx, const fs::path& src) {
  if (!fs::is_directory(src)) throw IoError("'" + src.string() + "' is not a directory");
  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(src)) {
    if (e.is_regular_file() && e.path().extension() == ".jsonl") files.push_back(e.path());
  }
  std::sort(files.begin(), files.end());

  TrajectoryStore store(ctx.ws.raw());
  const auto images = ctx.ws.images();
  std::vector<Trajectory> ingested;
  int failed = 0;
  for (const auto& f : files) {
    try {
      auto t = load_trajectory_file(f);
      for (auto& s : t.steps) {
        const auto candidate = f.parent_path() / s.observation.screenshot_ref;
        if (!s.observation.screenshot_ref.empty() && fs::is_regular_file(candidate)) {
          s.observation.screenshot_ref = images.put_file(candidate);
        }
      }
      store.save(t);
      ingested.push_back(std::move(t));
    } catch (const Error& e) {
      ++failed;
      error_record(ctx.err, "ingest", e.kind(), e.what(), {{"file", f.string()}});
    }
  }
  ctx.out << corpus_stats_json(corpus_stats(ingested)).dump(2) << '\n';
  if (failed > 0) throw StageFailure(std::to_string(failed) + " file(s) could not be ingested");
}

// ---- curate ---------------------------------------------------------------

struct CurateArgs {
  std::optional<std::string> rules;
  std::optional<std::string> benchmark;
  std::optional<double> ngram_max;
  std::optional<double> cosine_max;
  std::optional<int> ngram_n;
  std::optional<int> max_steps;
  bool success_only = false;
  bool no_semantic = false;
};

void cmd_curate(Context& ctx, const CurateArgs& a) {
  const auto stage = ctx.config.stage("curate");
  auto filter_cfg = trajectory_filter_config_from_json(stage.value("filter", json(nullptr)));
  if (a.rules) filter_cfg = trajectory_filter_config_from_json(json::parse(read_text_file(*a.rules)));
  if (a.max_steps) filter_cfg.max_steps = *a.max_steps;
  if (a.success_only) filter_cfg.success_only = true;
  const auto images = ctx.ws.images();
  filter_cfg.steps.screenshot_exists = [images](const std::string& ref) { return images.exists(ref); };

  const auto raw = TrajectoryStore(ctx.ws.raw()).load_all();
  auto outcome = filter_trajectories(raw, filter_cfg);

  std::vector<json> filter_records;
  for (const auto& r : outcome.reports) filter_records.push_back(filter_report_to_json(r));
  write_text_file(ctx.ws.reports() / "filter.jsonl", jsonl(filter_records));

  std::vector<Trajectory> kept = std::move(outcome.kept);
  std::size_t decontaminated = 0;
  if (a.benchmark || stage.contains("benchmark_tasks")) {
    const fs::path bench_path = a.benchmark ? fs::path(*a.benchmark) : fs::path(stage["benchmark_tasks"].get<std::string>());
    const auto bench = load_benchmark_tasks(bench_path);
    DecontaminationOptions opts;
    const auto th = stage.value("thresholds", json::object());
    opts.thresholds.ngram_n = a.ngram_n.value_or(th.value("ngram_n", opts.thresholds.ngram_n));
    opts.thresholds.ngram_max = a.ngram_max.value_or(th.value("ngram_max", opts.thresholds.ngram_max));
    opts.thresholds.cosine_max = a.cosine_max.value_or(th.value("cosine_max", opts.thresholds.cosine_max));
    std::shared_ptr<Gateway> gw;
    if (!a.no_semantic && ctx.gateway_configured()) {
      gw = ctx.gateway();
      opts.embedder = gw.get();
    }
    std::vector<NamedTask> tasks;
    for (const auto& t : kept) tasks.push_back({t.id, t.task_description});
    std::vector<DecontaminationVerdict> verdicts;
    try {
      verdicts = decontaminate(tasks, bench, opts);
    } catch (const EmbedderUnavailable& e) {
      error_record(ctx.err, "curate", e.kind(), e.what(), {{"task_ids", e.task_ids()}});
      throw StageFailure("decontamination could not compute semantic scores");
    }
    std::vector<json> records;
    std::set<std::string> removed;
    for (const auto& v : verdicts) {
      records.push_back(verdict_to_json(v));
      if (v.removed) removed.insert(v.task_id);
    }
    write_text_file(ctx.ws.reports() / "decontamination.jsonl", jsonl(records));
    decontaminated = removed.size();
    std::erase_if(kept, [&](const Trajectory& t) { return removed.contains(t.id); });
  }

  fs::remove_all(ctx.ws.curated());
  TrajectoryStore curated(ctx.ws.curated());
  for (const auto& t : kept) curated.save(t);
  json summary = {{"input", raw.size()},
                  {"kept", kept.size()},
                  {"dropped_by_filter", raw.size() - kept.size() - decontaminated},
                  {"dropped_by_decontamination", decontaminated}};
  ctx.out << summary.dump(2) << '\n';
}

// ---- complete-thoughts ------------------------------------------------------

void cmd_complete_thoughts(Context& ctx, bool force, std::optional<int> width, const std::string& from) {
  const auto stage = ctx.config.stage("complete_thoughts");
  const fs::path input = from == "raw" ? ctx.ws.raw() : ctx.ws.curated();
  const auto corpus = TrajectoryStore(input).load_all();
  ThoughtOptions opts;
  opts.force = force;
  opts.checkpoint_dir = ctx.ws.checkpoints() / "thoughts";
  opts.loader = store_screenshot_loader(ctx.ws.images());
  opts.temperature = stage.value("temperature", opts.temperature);
  opts.max_tokens = stage.value("max_tokens", opts.max_tokens);
  opts.history_cap = stage.value("history_cap", opts.history_cap);
  fs::create_directories(*opts.checkpoint_dir);

  TrajectoryStore out_store(ctx.ws.thoughts());
  std::vector<Trajectory> todo;
  std::size_t skipped = 0;
  for (const auto& t : corpus) {
    if (!force && out_store.contains(t.id)) {
      ++skipped;
      continue;
    }
    todo.push_back(t);
  }
  auto gw = ctx.gateway();
  const auto run = complete_thoughts_corpus(todo, *gw, opts, width.value_or(stage.value("width", 4)));
  std::size_t warnings = 0;
  for (const auto& t : run.completed) {
    out_store.save(t);
    if (t.annotator_meta.contains("thought_warnings")) warnings += t.annotator_meta["thought_warnings"].size();
  }
  for (const auto& e : run.errors) error_record(ctx.err, "complete-thoughts", "StageAborted", e);
  ctx.out << json{{"completed", run.completed.size()},
                  {"skipped", skipped},
                  {"failed", run.errors.size()},
                  {"thought_warnings", warnings}}
                 .dump(2)
          << '\n';
  if (!run.errors.empty()) throw StageFailure(std::to_string(run.errors.size()) + " trajectory(ies) failed");
}

// ---- boost ------------------------------------------------------------------

void cmd_boost(Context& ctx, std::optional<int> n, std::optional<int> parallelism, bool force) {
  const auto stage = ctx.config.stage("boost");
  BoostConfig cfg;
  cfg.n = n.value_or(stage.value("n", cfg.n));
  cfg.temperature = stage.value("temperature", cfg.temperature);
  cfg.max_tokens = stage.value("max_tokens", cfg.max_tokens);
  cfg.step_parallelism = parallelism.value_or(stage.value("step_parallelism", cfg.step_parallelism));
  cfg.checkpoint_dir = ctx.ws.checkpoints() / "boost";
  cfg.images = provider_from_loader(store_screenshot_loader(ctx.ws.images()));
  fs::create_directories(*cfg.checkpoint_dir);

  const auto corpus = TrajectoryStore(ctx.ws.thoughts()).load_all();
  TreeStore trees(ctx.ws.trees());
  auto gw = ctx.gateway();
  std::size_t built = 0, skipped = 0, leaves = 0, drops = 0, duplicates = 0;
  int failed = 0;
  for (const auto& t : corpus) {
    if (!force && trees.contains(t.id)) {
      ++skipped;
      continue;
    }
    try {
      auto tree = boost_trajectory(t, *gw, cfg);
      leaves += tree.leaf_count();
      drops += tree.drops.size();
      duplicates += tree.duplicate_leaves();
      trees.save(tree);
      ++built;
    } catch (const Error& e) {
      ++failed;
      error_record(ctx.err, "boost", e.kind(), e.what(), {{"trajectory_id", t.id}});
    }
  }
  ctx.out << json{{"trees", built},          {"skipped", skipped}, {"failed", failed},
                  {"leaves", leaves},        {"drops", drops},     {"duplicate_leaves", duplicates}}
                 .dump(2)
          << '\n';
  if (failed > 0) throw StageFailure(std::to_string(failed) + " trajectory(ies) failed");
}

// ---- build-dataset ----------------------------------------------------------

void cmd_build_dataset(Context& ctx, std::optional<int> scaling, std::optional<std::uint64_t> seed,
                       std::optional<std::string> format, std::optional<int> context_cap) {
  const auto stage = ctx.config.stage("build_dataset");
  const int s_prime = scaling.value_or(stage.value("scaling_factor", 10));
  const auto sel = BoostSelection::from_scaling_factor(s_prime, seed.value_or(stage.value("seed", std::uint64_t{0})));
  ExportOptions opts;
  opts.selection = sel;
  opts.format = dataset_format_from_name(format.value_or(stage.value("format", std::string("messages"))));
  opts.flatten.context_token_cap = context_cap.value_or(stage.value("context_token_cap", opts.flatten.context_token_cap));
  opts.flatten.image_tokens = stage.value("image_tokens", opts.flatten.image_tokens);
  const auto images = ctx.ws.images();
  opts.image_exists = [images](const std::string& ref) { return images.exists(ref); };

  const auto trees = TreeStore(ctx.ws.trees()).load_all();
  const auto instances = flatten_corpus(trees, sel, opts.flatten);
  std::ostringstream body;
  const auto manifest = export_dataset(instances, body, opts);
  write_text_file(ctx.ws.dataset() / "train.jsonl", body.str());
  write_text_file(ctx.ws.dataset() / "manifest.json", manifest.to_json().dump(2) + "\n");
  ctx.out << manifest.to_json().dump(2) << '\n';
}

// ---- run-agent --------------------------------------------------------------

void cmd_run_agent(Context& ctx, const std::string& scenario_path, const std::string& task,
                   std::optional<int> max_steps, const std::string& task_id) {
  const auto stage = ctx.config.stage("agent");
  auto scenario = std::make_shared<const Scenario>(load_scenario_file(scenario_path));
  SimulatedEnvironment env(scenario);
  AgentConfig cfg;
  cfg.max_steps = max_steps.value_or(stage.value("max_steps", cfg.max_steps));
  cfg.temperature = stage.value("temperature", cfg.temperature);
  cfg.max_tokens = stage.value("max_tokens", cfg.max_tokens);
  cfg.images = synthetic_image_provider();
  auto gw = ctx.gateway();
  const auto rec = run_episode(env, task_id, task, *gw, cfg);

  std::ostringstream body, timing;
  save_run_record(rec, body, false);
  json times = json::array();
  for (const auto& e : rec.entries) times.push_back(e.wall_ms);
  write_text_file(ctx.ws.runs() / (task_id + ".jsonl"), body.str());
  write_text_file(ctx.ws.runs() / (task_id + ".md"), export_run_markdown(rec));
  write_text_file(ctx.ws.runs() / (task_id + ".timing.json"), json{{"wall_ms", times}}.dump() + "\n");
  ctx.out << json{{"task_id", task_id},
                  {"terminal", std::string(run_terminal_name(rec.terminal))},
                  {"steps", rec.entries.size()},
                  {"final_state", env.state()}}
                 .dump(2)
          << '\n';
}

// ---- evaluate ---------------------------------------------------------------

struct EvaluateArgs {
  std::string suite;
  bool include_infeasible = false;
  bool exclude_init_failures = false;
  bool no_reset = false;
  std::optional<std::uint64_t> seed;
  std::optional<double> init_fault_p;
  std::optional<int> max_steps;
  std::optional<int> parallelism;
};

void cmd_evaluate(Context& ctx, const EvaluateArgs& a) {
  const auto stage = ctx.config.stage("evaluate");
  const auto suite = load_suite(a.suite);
  EvalPolicy policy;
  policy.include_infeasible = a.include_infeasible || stage.value("include_infeasible", false);
  policy.init_failure_counts = !a.exclude_init_failures && stage.value("init_failure_counts", true);
  policy.reset_between_tasks = !a.no_reset && stage.value("reset_between_tasks", true);
  policy.seed = a.seed.value_or(stage.value("seed", std::uint64_t{0}));
  policy.init_fault_probability = a.init_fault_p.value_or(stage.value("init_fault_probability", 0.0));
  policy.max_init_attempts = stage.value("max_init_attempts", policy.max_init_attempts);
  policy.parallelism = a.parallelism.value_or(stage.value("parallelism", 1));
  AgentConfig agent;
  agent.max_steps = a.max_steps.value_or(ctx.config.stage("agent").value("max_steps", agent.max_steps));
  agent.images = synthetic_image_provider();
  auto gw = ctx.gateway();
  const auto report = run_suite(suite, agent, *gw, policy);
  write_text_file(ctx.ws.reports() / "eval.json", report.to_json().dump(2) + "\n");
  write_text_file(ctx.ws.reports() / "eval.md", report.to_markdown());
  ctx.out << report.to_json().dump(2) << '\n';
}

// ---- inspect ----------------------------------------------------------------

void cmd_inspect(Context& ctx, const std::string& kind, const std::string& id, const std::string& stage_name) {
  if (kind == "trajectory") {
    std::vector<fs::path> dirs;
    if (stage_name.empty()) {
      dirs = {ctx.ws.thoughts(), ctx.ws.curated(), ctx.ws.raw()};
    } else {
      dirs = {ctx.ws.root / stage_name};
    }
    for (const auto& d : dirs) {
      TrajectoryStore store(d);
      if (store.contains(id)) {
        ctx.out << export_markdown(store.load(id));
        return;
      }
    }
    throw IoError("no trajectory '" + id + "' in the workspace");
  }
  if (kind == "tree") {
    TreeStore store(ctx.ws.trees());
    if (!store.contains(id)) throw IoError("no tree '" + id + "' in the workspace");
    ctx.out << export_tree_markdown(store.load(id));
    return;
  }
  if (kind == "dataset") {
    const auto dir = ctx.ws.dataset();
    const auto manifest_j = json::parse(read_text_file(dir / "manifest.json"));
    DatasetManifest m;
    m.count = manifest_j.at("count").get<std::size_t>();
    m.human = manifest_j.at("human").get<std::size_t>();
    m.synthesized = manifest_j.at("synthesized").get<std::size_t>();
    m.seed = manifest_j.at("seed").get<std::uint64_t>();
    m.s = manifest_j.at("s").get<int>();
    m.s_prime = manifest_j.at("s_prime").get<int>();
    m.format = manifest_j.at("format").get<std::string>();
    ctx.out << export_dataset_markdown(m, {}, 0);
    // Preview: the first records, or those of one trajectory when id is not "train".
    std::istringstream lines(read_text_file(dir / "train.jsonl"));
    std::string line;
    int shown = 0;
    while (std::getline(lines, line) && shown < 3) {
      const auto j = json::parse(line);
      if (id != "train" && j["provenance"].value("trajectory_id", "") != id) continue;
      ctx.out << "```json\n" << j.dump(2) << "\n```\n\n";
      ++shown;
    }
    return;
  }
  if (kind == "run") {
    std::ifstream in(ctx.ws.runs() / (id + ".jsonl"));
    if (!in) throw IoError("no run '" + id + "' in the workspace");
    ctx.out << export_run_markdown(load_run_record(in));
    return;
  }
  throw PreconditionError("unknown inspect kind '" + kind + "' (trajectory, tree, dataset, run)");
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err, const EnvLookup& env) {
  CLI::App app{"Computer-use trajectory pipeline: ingest, curate, annotate, augment, train-set export, evaluate."};
  app.name("trajkit");
  app.require_subcommand(1);
  app.fallthrough();

  Globals g;
  app.add_option("--config", g.config, "Pipeline config file (JSON)");
  app.add_option("--workspace", g.overrides.workspace, "Workspace directory");
  app.add_option("--endpoint", g.overrides.endpoint, "Model endpoint base URL");
  app.add_option("--model", g.overrides.model, "Model name");
  app.add_option("--mock-script", g.overrides.mock_script, "Answer model calls from a scripted mock");

  std::string stage;
  std::function<void(Context&)> action;

  auto* ingest = app.add_subcommand("ingest", "Import recorded trajectories into the workspace");
  std::string ingest_dir;
  ingest->add_option("dir", ingest_dir, "Directory of .jsonl trajectories")->required();
  ingest->callback([&] {
    stage = "ingest";
    action = [&](Context& c) { cmd_ingest(c, ingest_dir); };
  });

  auto* curate = app.add_subcommand("curate", "Filter steps and trajectories, remove benchmark look-alikes");
  CurateArgs ca;
  curate->add_option("--rules", ca.rules, "Filter rules file (JSON)");
  curate->add_option("--benchmark-tasks", ca.benchmark, "Benchmark tasks (text or JSON)");
  curate->add_option("--ngram-max", ca.ngram_max, "Jaccard removal threshold");
  curate->add_option("--cosine-max", ca.cosine_max, "Cosine removal threshold");
  curate->add_option("--ngram-n", ca.ngram_n, "n-gram size");
  curate->add_option("--max-steps", ca.max_steps, "Drop longer trajectories");
  curate->add_flag("--success-only", ca.success_only, "Drop fail-terminated trajectories");
  curate->add_flag("--no-semantic", ca.no_semantic, "Skip the embedding similarity branch");
  curate->callback([&] {
    stage = "curate";
    action = [&](Context& c) { cmd_curate(c, ca); };
  });

  auto* thoughts = app.add_subcommand("complete-thoughts", "Reconstruct the thought behind every step");
  bool th_force = false;
  std::optional<int> th_width;
  std::string th_from = "curated";
  thoughts->add_option("--model-config", g.config, "Config file with the gateway section");
  thoughts->add_flag("--force", th_force, "Redo trajectories that already have thoughts");
  thoughts->add_option("--width", th_width, "Trajectories processed concurrently");
  thoughts->add_option("--from", th_from, "Input store")->check(CLI::IsMember({"raw", "curated"}));
  thoughts->callback([&] {
    stage = "complete-thoughts";
    action = [&](Context& c) { cmd_complete_thoughts(c, th_force, th_width, th_from); };
  });

  auto* boost = app.add_subcommand("boost", "Sample alternative decisions at every step");
  std::optional<int> boost_n, boost_par;
  bool boost_force = false;
  boost->add_option("--n", boost_n, "Samples per step")->check(CLI::PositiveNumber);
  boost->add_option("--model-config", g.config, "Config file with the gateway section");
  boost->add_option("--step-parallelism", boost_par, "Steps sampled concurrently")->check(CLI::PositiveNumber);
  boost->add_flag("--force", boost_force, "Rebuild existing trees");
  boost->callback([&] {
    stage = "boost";
    action = [&](Context& c) { cmd_boost(c, boost_n, boost_par, boost_force); };
  });

  auto* dataset = app.add_subcommand("build-dataset", "Flatten trees into training instances");
  std::optional<int> ds_scaling, ds_cap;
  std::optional<std::uint64_t> ds_seed;
  std::optional<std::string> ds_format;
  dataset->add_option("--scaling-factor", ds_scaling, "s' = 1 + sampled decisions per step")->check(CLI::PositiveNumber);
  dataset->add_option("--seed", ds_seed, "Subsampling seed");
  dataset->add_option("--format", ds_format, "messages or sharegpt");
  dataset->add_option("--context-cap", ds_cap, "Token budget per instance (0 disables)");
  dataset->callback([&] {
    stage = "build-dataset";
    action = [&](Context& c) { cmd_build_dataset(c, ds_scaling, ds_seed, ds_format, ds_cap); };
  });

  auto* agent = app.add_subcommand("run-agent", "Run one episode in a simulated environment");
  std::string ag_scenario, ag_task, ag_id = "run";
  std::optional<int> ag_steps;
  agent->add_option("--scenario", ag_scenario, "Scenario file")->required();
  agent->add_option("--task", ag_task, "Task instruction")->required();
  agent->add_option("--max-steps", ag_steps, "Step limit")->check(CLI::PositiveNumber);
  agent->add_option("--task-id", ag_id, "Name of the run record");
  agent->callback([&] {
    stage = "run-agent";
    action = [&](Context& c) { cmd_run_agent(c, ag_scenario, ag_task, ag_steps, ag_id); };
  });

  auto* evaluate = app.add_subcommand("evaluate", "Run a task suite and score it");
  EvaluateArgs ea;
  evaluate->add_option("--suite", ea.suite, "Suite manifest")->required();
  evaluate->add_flag("--include-infeasible", ea.include_infeasible, "Score infeasible tasks too");
  evaluate->add_flag("--exclude-init-failures", ea.exclude_init_failures, "Leave init failures out of the rates");
  evaluate->add_flag("--no-reset", ea.no_reset, "Do not restore snapshots between tasks");
  evaluate->add_option("--seed", ea.seed, "Fault-injection seed");
  evaluate->add_option("--init-fault-p", ea.init_fault_p, "Per-attempt init fault probability");
  evaluate->add_option("--max-steps", ea.max_steps, "Step limit per task");
  evaluate->add_option("--parallelism", ea.parallelism, "Concurrent tasks");
  evaluate->callback([&] {
    stage = "evaluate";
    action = [&](Context& c) { cmd_evaluate(c, ea); };
  });

  auto* inspect = app.add_subcommand("inspect", "Markdown view of a stored object");
  std::string in_kind, in_id, in_stage;
  inspect->add_option("kind", in_kind, "trajectory, tree, dataset or run")->required();
  inspect->add_option("id", in_id, "Object id")->required();
  inspect->add_option("--stage", in_stage, "Trajectory store (raw, curated, thoughts)");
  inspect->callback([&] {
    stage = "inspect";
    action = [&](Context& c) { cmd_inspect(c, in_kind, in_id, in_stage); };
  });

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    error_record(err, "cli", "UsageError", e.what());
    return kExitUsage;
  }

  try {
    std::optional<fs::path> config_file;
    if (g.config) config_file = fs::path(*g.config);
    Context ctx{resolve_config(config_file, g.overrides, env), Workspace{}, out, err};
    ctx.ws.root = ctx.config.workspace;
    if (stage != "inspect") fs::create_directories(ctx.ws.root);
    action(ctx);
    return kExitOk;
  } catch (const ConfigError& e) {
    error_record(err, stage, e.kind(), e.what());
    return kExitUsage;
  } catch (const Error& e) {
    error_record(err, stage, e.kind(), e.what());
    return kExitStageFailure;
  } catch (const std::exception& e) {
    error_record(err, stage, "InternalError", e.what());
    return kExitStageFailure;
  }
}

}  // namespace trajkit::cli
