#pragma once

// Command-line front end: gen-synth, ingest-check, train, evaluate, sweep,
// compare. Configuration precedence is defaults < --config file < flags.
// Exit codes: 0 success, 2 usage/config error, 3 data error, 4 numerical
// failure.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "prefroute/prefroute.hpp"

namespace prefroute::cli {

namespace fs = std::filesystem;
using nlohmann::json;

enum ExitCode : int { kOk = 0, kUsage = 2, kData = 3, kNumerical = 4 };

inline constexpr const char* kOutputRootEnv = "PREFROUTE_OUTPUT_ROOT";

struct RunConfig {
  std::string command;

  // data
  std::string data;
  std::string format = "auto";
  std::string embeddings;
  bool strict = false;
  std::uint64_t split_seed = 0;
  std::vector<std::string> ood_tasks;
  std::optional<double> tau;
  double tau_quantile = 0.95;

  // learner
  std::string learner = "reinforce";  // reinforce | linucb | lints | egreedy
  std::string head = "mlp";
  int pref_hidden = 64;
  int pref_dim = 64;
  int head_hidden = 256;
  int bilinear_rank = 8;
  int epochs = 100;
  int batch_size = 32;
  double lr = 1e-4;
  double beta = 0.05;
  std::uint64_t seed = 0;
  int checkpoint_every = 0;
  double lambda = 1.0;
  double alpha = 1.0;
  double nu = 0.5;
  double epsilon = 0.1;

  // evaluation
  std::string checkpoint;
  std::string split = "test";
  double w_c = 0.5;
  std::vector<double> grid = default_sweep_grid();
  std::string reference;
  std::string candidate;

  // synthetic data
  std::string synth_kind = "piecewise";
  int arms = 2;
  int embed_dim = 8;
  int records = 2000;
  int tasks = 1;
  double cost_scale = 0.01;

  std::string out;
};

inline json to_json(const RunConfig& c) {
  return {{"command", c.command},
          {"data", c.data},
          {"format", c.format},
          {"embeddings", c.embeddings},
          {"strict", c.strict},
          {"split_seed", c.split_seed},
          {"ood_tasks", c.ood_tasks},
          {"tau", c.tau ? json(*c.tau) : json(nullptr)},
          {"tau_quantile", c.tau_quantile},
          {"learner", c.learner},
          {"head", c.head},
          {"pref_hidden", c.pref_hidden},
          {"pref_dim", c.pref_dim},
          {"head_hidden", c.head_hidden},
          {"bilinear_rank", c.bilinear_rank},
          {"epochs", c.epochs},
          {"batch_size", c.batch_size},
          {"lr", c.lr},
          {"beta", c.beta},
          {"seed", c.seed},
          {"checkpoint_every", c.checkpoint_every},
          {"lambda", c.lambda},
          {"alpha", c.alpha},
          {"nu", c.nu},
          {"epsilon", c.epsilon},
          {"checkpoint", c.checkpoint},
          {"split", c.split},
          {"w_c", c.w_c},
          {"grid", c.grid},
          {"reference", c.reference},
          {"candidate", c.candidate},
          {"synth_kind", c.synth_kind},
          {"arms", c.arms},
          {"embed_dim", c.embed_dim},
          {"records", c.records},
          {"tasks", c.tasks},
          {"cost_scale", c.cost_scale},
          {"out", c.out}};
}

/// Overlays `patch` onto `c`. Unknown keys are rejected so typos surface.
inline void merge_into(RunConfig& c, const json& patch) {
  if (!patch.is_object()) throw ConfigError("configuration must be a JSON object");
  const json known = to_json(c);
  for (const auto& [key, _] : patch.items()) {
    if (!known.contains(key)) throw ConfigError("unknown configuration key '" + key + "'");
  }
  try {
    auto get = [&](const char* key, auto& field) {
      if (patch.contains(key)) patch.at(key).get_to(field);
    };
    get("command", c.command);
    get("data", c.data);
    get("format", c.format);
    get("embeddings", c.embeddings);
    get("strict", c.strict);
    get("split_seed", c.split_seed);
    get("ood_tasks", c.ood_tasks);
    if (patch.contains("tau")) {
      c.tau = patch["tau"].is_null() ? std::nullopt : std::optional<double>(patch["tau"].get<double>());
    }
    get("tau_quantile", c.tau_quantile);
    get("learner", c.learner);
    get("head", c.head);
    get("pref_hidden", c.pref_hidden);
    get("pref_dim", c.pref_dim);
    get("head_hidden", c.head_hidden);
    get("bilinear_rank", c.bilinear_rank);
    get("epochs", c.epochs);
    get("batch_size", c.batch_size);
    get("lr", c.lr);
    get("beta", c.beta);
    get("seed", c.seed);
    get("checkpoint_every", c.checkpoint_every);
    get("lambda", c.lambda);
    get("alpha", c.alpha);
    get("nu", c.nu);
    get("epsilon", c.epsilon);
    get("checkpoint", c.checkpoint);
    get("split", c.split);
    get("w_c", c.w_c);
    get("grid", c.grid);
    get("reference", c.reference);
    get("candidate", c.candidate);
    get("synth_kind", c.synth_kind);
    get("arms", c.arms);
    get("embed_dim", c.embed_dim);
    get("records", c.records);
    get("tasks", c.tasks);
    get("cost_scale", c.cost_scale);
    get("out", c.out);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("bad configuration value: ") + e.what());
  }
}

inline json read_json_file(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

inline void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write " + path.string());
  out << text;
}

inline void write_json(const fs::path& path, const json& j) { write_text(path, j.dump(2) + "\n"); }

inline std::string hex64(std::uint64_t v) {
  std::ostringstream ss;
  ss << std::hex << std::setw(16) << std::setfill('0') << v;
  return ss.str();
}

inline fs::path output_dir(const RunConfig& c) {
  if (!c.out.empty()) return c.out;
  const char* root = std::getenv(kOutputRootEnv);
  return fs::path(root && *root ? root : "runs") / c.command;
}

/// Validates inputs, then creates the output directory and writes the
/// resolved configuration into it before any computation happens.
inline fs::path prepare_output(const RunConfig& c) {
  const fs::path dir = output_dir(c);
  fs::create_directories(dir);
  write_json(dir / "run_config.json", to_json(c));
  return dir;
}

inline void require_file(const std::string& path, const char* what) {
  if (path.empty()) throw ConfigError(std::string("missing ") + what + " path");
  if (!fs::is_regular_file(path)) throw ConfigError(std::string(what) + " not found: " + path);
}

inline IngestOptions ingest_options(const RunConfig& c) {
  IngestOptions o;
  o.strict = c.strict;
  o.split_seed = c.split_seed;
  o.ood_tasks = {c.ood_tasks.begin(), c.ood_tasks.end()};
  if (!c.embeddings.empty()) o.embeddings = c.embeddings;
  return o;
}

inline RewardSpec resolve_reward(const RunConfig& c, const LoggedDataset& ds) {
  if (c.tau) return RewardSpec(*c.tau);
  if (!(c.tau_quantile > 0.0 && c.tau_quantile <= 1.0)) throw ConfigError("tau_quantile must lie in (0, 1]");
  return default_reward_spec(ds, c.tau_quantile);
}

inline json dataset_meta(const RunConfig& c, const LoggedDataset& ds, const RewardSpec& spec) {
  json arms = json::array();
  for (const auto& a : ds.arms.arms()) arms.push_back(a.id);
  return {{"data", c.data},         {"format", c.format},         {"embeddings", c.embeddings},
          {"strict", c.strict},     {"split_seed", c.split_seed}, {"ood_tasks", c.ood_tasks},
          {"tau", spec.tau()},      {"arms", arms},               {"embed_dim", ds.embed_dim},
          {"learner", c.learner}};
}

// ---------------------------------------------------------------------------

inline int cmd_gen_synth(const RunConfig& c, std::ostream& out) {
  SyntheticSpec spec;
  spec.kind = parse_synthetic_kind(c.synth_kind);
  spec.arms = c.arms;
  spec.embed_dim = c.embed_dim;
  spec.records = c.records;
  spec.tasks = c.tasks;
  spec.cost_scale = c.cost_scale;
  const auto ds = gen_synthetic(spec, c.seed);
  const fs::path dir = prepare_output(c);
  write_dataset(ds, dir / "dataset.jsonl");
  out << "wrote " << ds.records.size() << " records to " << (dir / "dataset.jsonl").string() << "\n";
  return kOk;
}

inline int cmd_ingest_check(const RunConfig& c, std::ostream& out) {
  require_file(c.data, "dataset");
  const auto ds = ingest(c.data, c.format, ingest_options(c));
  const auto spec = resolve_reward(c, ds);
  json summary{{"records", ds.records.size()},
               {"arms", ds.arm_count()},
               {"embed_dim", ds.embed_dim},
               {"tasks", ds.tasks},
               {"train", ds.indices(Split::train).size()},
               {"test", ds.indices(Split::test).size()},
               {"ood", ds.indices(Split::ood).size()},
               {"hashed_embeddings", ds.hashed_embeddings},
               {"tau", spec.tau()},
               {"warnings", ds.warnings}};
  out << summary.dump(2) << "\n";
  return kOk;
}

inline int cmd_train(const RunConfig& c, std::ostream& out) {
  require_file(c.data, "dataset");
  const bool is_policy = c.learner == "reinforce";
  const HeadKind head = parse_head_kind(c.head);
  std::optional<AgentKind> agent_kind;
  if (!is_policy) agent_kind = parse_agent_kind(c.learner);
  TrainingConfig tc;
  tc.epochs = c.epochs;
  tc.batch_size = c.batch_size;
  tc.lr = c.lr;
  tc.beta = c.beta;
  tc.seed = c.seed;
  tc.head = head;
  tc.validate();
  if (c.checkpoint_every < 0) throw ConfigError("checkpoint_every must be >= 0");

  auto ds = std::make_shared<const LoggedDataset>(ingest(c.data, c.format, ingest_options(c)));
  const RewardSpec spec = resolve_reward(c, *ds);
  BanditEnvironment env(ds, spec);
  const json meta = dataset_meta(c, *ds, spec);
  const fs::path dir = prepare_output(c);

  std::string trace_text;
  json timing = json::array();
  if (is_policy) {
    PolicyDims dims;
    dims.embed_dim = ds->embed_dim;
    dims.arms = static_cast<int>(ds->arm_count());
    dims.pref_hidden = c.pref_hidden;
    dims.pref_dim = c.pref_dim;
    dims.head_hidden = c.head_hidden;
    dims.bilinear_rank = c.bilinear_rank;
    PolicyNetwork net = PolicyNetwork::initialized(head, dims, c.seed);
    ReinforceTrainer trainer(net, tc);
    auto save = [&](const fs::path& path, int epochs_done) {
      json m = meta;
      m["epochs_completed"] = epochs_done;
      write_json(path, checkpoint_to_json({net, c.seed, trainer.adam().t, m}));
    };
    const auto trace = trainer.run(env, [&](const EpochStats& s) {
      timing.push_back({{"epoch", s.epoch}, {"seconds", s.seconds}});
      if (c.checkpoint_every > 0 && (s.epoch + 1) % c.checkpoint_every == 0 && s.epoch + 1 < c.epochs) {
        save(dir / ("checkpoint_epoch" + std::to_string(s.epoch + 1) + ".json"), s.epoch + 1);
      }
    });
    trace_text = trace_to_jsonl(trace);
    save(dir / "checkpoint.json", c.epochs);
    out << "epoch 0 mean reward " << trace.epochs.front().mean_reward << ", final " << trace.epochs.back().mean_reward
        << "\n";
  } else {
    AgentConfig ac;
    ac.kind = *agent_kind;
    ac.lambda = c.lambda;
    ac.alpha = c.alpha;
    ac.nu = c.nu;
    ac.epsilon = c.epsilon;
    LinearBanditAgent agent(ac, ds->arm_count(), ds->embed_dim + 2);
    const auto stats = train_agent(agent, env, c.epochs, c.seed);
    for (const auto& s : stats) {
      trace_text += json{{"epoch", s.epoch}, {"mean_reward", s.mean_reward}, {"samples", s.samples}}.dump() + "\n";
    }
    json m = meta;
    m["epochs_completed"] = c.epochs;
    write_json(dir / "checkpoint.json", agent_to_json(agent, c.seed, m));
    out << "epoch 0 mean reward " << stats.front().mean_reward << ", final " << stats.back().mean_reward << "\n";
  }
  write_text(dir / "trace.jsonl", trace_text);
  write_json(dir / "timing.json", timing);
  out << "wrote " << (dir / "checkpoint.json").string() << "\n";
  return kOk;
}

/// A loaded checkpoint of either kind plus the environment it was trained on.
struct LoadedModel {
  json raw;
  std::optional<PolicyNetwork> policy;
  std::optional<LinearBanditAgent> agent;
  std::shared_ptr<const LoggedDataset> dataset;
  std::unique_ptr<BanditEnvironment> env;
  std::string checkpoint_id;

  Router router() const { return policy ? policy_router(*policy) : agent_router(*agent); }
};

inline LoadedModel load_model(const RunConfig& c) {
  require_file(c.checkpoint, "checkpoint");
  LoadedModel m;
  std::ifstream in(c.checkpoint, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  m.checkpoint_id = hex64(fnv1a64(ss.str()));
  try {
    m.raw = json::parse(ss.str());
  } catch (const json::parse_error& e) {
    throw DataError(c.checkpoint + ": " + e.what());
  }
  const json meta = m.raw.value("meta", json::object());
  const std::string kind = m.raw.value("kind", "");
  if (kind == "policy") {
    m.policy = checkpoint_from_json(m.raw).network;
  } else if (kind == "agent") {
    m.agent = agent_from_json(m.raw);
  } else {
    throw DataError(c.checkpoint + ": unknown checkpoint kind '" + kind + "'");
  }

  // Dataset defaults to the one recorded at training time; split and cost
  // cap always follow the checkpoint so evaluation sees the same partition.
  RunConfig dc = c;
  if (dc.data.empty()) dc.data = meta.value("data", "");
  if (dc.embeddings.empty()) dc.embeddings = meta.value("embeddings", "");
  dc.format = meta.value("format", dc.format);
  dc.split_seed = meta.value("split_seed", dc.split_seed);
  dc.ood_tasks = meta.value("ood_tasks", dc.ood_tasks);
  dc.strict = meta.value("strict", dc.strict);
  require_file(dc.data, "dataset");
  m.dataset = std::make_shared<const LoggedDataset>(ingest(dc.data, dc.format, ingest_options(dc)));

  const int k = m.policy ? m.policy->dims().arms : static_cast<int>(m.agent->arm_count());
  const int de = m.policy ? m.policy->dims().embed_dim : m.agent->dim() - 2;
  if (k != static_cast<int>(m.dataset->arm_count()) || de != m.dataset->embed_dim) {
    throw DataError("checkpoint expects K = " + std::to_string(k) + ", d_e = " + std::to_string(de) + " but dataset " +
                    dc.data + " has K = " + std::to_string(m.dataset->arm_count()) +
                    ", d_e = " + std::to_string(m.dataset->embed_dim));
  }
  const RewardSpec spec = c.tau ? RewardSpec(*c.tau)
                                : (meta.contains("tau") ? RewardSpec(meta["tau"].get<double>())
                                                        : default_reward_spec(*m.dataset, c.tau_quantile));
  m.env = std::make_unique<BanditEnvironment>(m.dataset, spec);
  return m;
}

inline json report_meta(const RunConfig& c, const LoadedModel& m) {
  return {{"checkpoint_id", m.checkpoint_id},
          {"seed", m.raw.value("seed", std::uint64_t{0})},
          {"split", c.split},
          {"kind", m.raw.value("kind", "")},
          {"tau", m.env->reward_spec().tau()}};
}

inline int cmd_evaluate(const RunConfig& c, std::ostream& out) {
  const Split split = parse_split(c.split);
  const auto w = PreferenceVector::from_cost_weight(c.w_c);
  auto m = load_model(c);
  const fs::path dir = prepare_output(c);
  EvaluationReport report;
  report.point = evaluate(m.router(), *m.env, split, w, AccessToken::evaluation());
  report.meta = report_meta(c, m);
  write_json(dir / "report.json", report_to_json(report));
  write_text(dir / "report.csv", fragments_to_csv({report.point}));
  out << "avg score " << format_fixed(report.point.score_pct) << "%, avg cost " << report.point.cost_usd
      << " USD, avg reward " << report.point.mean_reward << "\n";
  return kOk;
}

inline int cmd_sweep(const RunConfig& c, std::ostream& out) {
  const Split split = parse_split(c.split);
  const auto w = PreferenceVector::from_cost_weight(c.w_c);
  auto m = load_model(c);
  const fs::path dir = prepare_output(c);
  const auto token = AccessToken::evaluation();
  EvaluationReport report;
  report.point = evaluate(m.router(), *m.env, split, w, token);
  report.sweep = sweep_preferences(m.router(), *m.env, split, c.grid, token);
  report.meta = report_meta(c, m);
  write_json(dir / "sweep.json", report_to_json(report));
  write_text(dir / "sweep.csv", fragments_to_csv(report.sweep));
  for (const auto& p : report.sweep) {
    out << "w_c " << p.w_c << ": score " << format_fixed(p.score_pct) << "%, cost " << p.cost_usd << " USD\n";
  }
  return kOk;
}

inline int cmd_compare(const RunConfig& c, std::ostream& out) {
  require_file(c.reference, "reference report");
  require_file(c.candidate, "candidate report");
  const auto ref = report_from_json(read_json_file(c.reference));
  const auto cand = report_from_json(read_json_file(c.candidate));
  const auto cmp = compare(ref, cand);
  out << "score improvement " << format_fixed(cmp.score_improvement_pct) << "%\n"
      << "cost reduction " << format_fixed(cmp.cost_reduction_pct) << "%\n";
  if (!c.out.empty()) {
    const fs::path dir = prepare_output(c);
    write_json(dir / "compare.json", {{"reference", c.reference},
                                      {"candidate", c.candidate},
                                      {"score_improvement_pct", cmp.score_improvement_pct},
                                      {"cost_reduction_pct", cmp.cost_reduction_pct},
                                      {"score_improvement_pct_2dp", format_fixed(cmp.score_improvement_pct)},
                                      {"cost_reduction_pct_2dp", format_fixed(cmp.cost_reduction_pct)}});
  }
  return kOk;
}

// ---------------------------------------------------------------------------

inline int run(const std::vector<std::string>& args, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  CLI::App app{"Preference-conditioned bandit router: train, evaluate and sweep LLM routing policies"};
  app.require_subcommand(1);
  json overrides = json::object();
  std::string config_path;

  // Each flag writes into `overrides` under its configuration key.
  auto flag_opt = [&overrides](CLI::App* sub, const std::string& flag, const std::string& key, auto sample,
                               const std::string& help) {
    using T = decltype(sample);
    sub->add_option_function<T>(flag, [&overrides, key](const T& v) { overrides[key] = v; }, help);
  };
  auto common = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "JSON configuration file (flags override it)");
    flag_opt(sub, "--out", "out", std::string{}, "output directory (default $" + std::string(kOutputRootEnv) + "/<command>)");
  };
  auto data_opts = [&](CLI::App* sub) {
    flag_opt(sub, "--data", "data", std::string{}, "dataset log (.jsonl or RouterBench-style .csv)");
    flag_opt(sub, "--format", "format", std::string{}, "jsonl | csv | auto");
    flag_opt(sub, "--embeddings", "embeddings", std::string{}, "embedding sidecar base path (<base>.bin/.idx)");
    sub->add_flag_callback("--strict", [&overrides] { overrides["strict"] = true; }, "reject out-of-range scores");
    flag_opt(sub, "--split-seed", "split_seed", std::uint64_t{}, "seed of the 80/20 split");
    flag_opt(sub, "--ood-tasks", "ood_tasks", std::vector<std::string>{}, "tasks held out entirely");
    flag_opt(sub, "--tau", "tau", double{}, "cost cap in USD (default: quantile of train costs)");
    flag_opt(sub, "--tau-quantile", "tau_quantile", double{}, "quantile used for the default cost cap");
  };
  auto eval_opts = [&](CLI::App* sub) {
    flag_opt(sub, "--checkpoint", "checkpoint", std::string{}, "checkpoint.json from train");
    flag_opt(sub, "--split", "split", std::string{}, "train | test | ood");
    flag_opt(sub, "--w-c", "w_c", double{}, "cost weight of the evaluation preference");
  };

  auto* gen = app.add_subcommand("gen-synth", "generate a synthetic oracle dataset");
  common(gen);
  flag_opt(gen, "--kind", "synth_kind", std::string{}, "linear | piecewise | xor");
  flag_opt(gen, "--arms", "arms", int{}, "number of arms");
  flag_opt(gen, "--embed-dim", "embed_dim", int{}, "embedding width");
  flag_opt(gen, "--records", "records", int{}, "number of records");
  flag_opt(gen, "--tasks", "tasks", int{}, "number of task ids");
  flag_opt(gen, "--cost-scale", "cost_scale", double{}, "cost of the expensive arm in USD");
  flag_opt(gen, "--seed", "seed", std::uint64_t{}, "generator seed");

  auto* check = app.add_subcommand("ingest-check", "validate a dataset and print a summary");
  common(check);
  data_opts(check);

  auto* train = app.add_subcommand("train", "train a policy (REINFORCE) or a linear bandit agent");
  common(train);
  data_opts(train);
  flag_opt(train, "--learner", "learner", std::string{}, "reinforce | linucb | lints | egreedy");
  flag_opt(train, "--head", "head", std::string{}, "linear | bilinear | mlp");
  flag_opt(train, "--pref-hidden", "pref_hidden", int{}, "preference encoder hidden width");
  flag_opt(train, "--pref-dim", "pref_dim", int{}, "preference embedding width");
  flag_opt(train, "--head-hidden", "head_hidden", int{}, "MLP head hidden width");
  flag_opt(train, "--bilinear-rank", "bilinear_rank", int{}, "rank of the bilinear interaction");
  flag_opt(train, "--epochs", "epochs", int{}, "training epochs");
  flag_opt(train, "--batch-size", "batch_size", int{}, "mini-batch size");
  flag_opt(train, "--lr", "lr", double{}, "Adam learning rate");
  flag_opt(train, "--beta", "beta", double{}, "entropy coefficient");
  flag_opt(train, "--seed", "seed", std::uint64_t{}, "run seed");
  flag_opt(train, "--checkpoint-every", "checkpoint_every", int{}, "extra checkpoint every N epochs (0 = off)");
  flag_opt(train, "--lambda", "lambda", double{}, "ridge prior for linear agents");
  flag_opt(train, "--alpha", "alpha", double{}, "LinUCB exploration width");
  flag_opt(train, "--nu", "nu", double{}, "LinTS posterior scale");
  flag_opt(train, "--epsilon", "epsilon", double{}, "epsilon-greedy rate");

  auto* eval = app.add_subcommand("evaluate", "argmax routing report at one preference");
  common(eval);
  data_opts(eval);
  eval_opts(eval);

  auto* sweep = app.add_subcommand("sweep", "evaluate across a grid of cost weights");
  common(sweep);
  data_opts(sweep);
  eval_opts(sweep);
  flag_opt(sweep, "--grid", "grid", std::vector<double>{}, "cost weights (default 0 0.2 0.4 0.5 0.6 0.8 1)");

  auto* cmp = app.add_subcommand("compare", "relative score gain and cost reduction between two reports");
  common(cmp);
  flag_opt(cmp, "--reference", "reference", std::string{}, "reference report.json");
  flag_opt(cmp, "--candidate", "candidate", std::string{}, "candidate report.json");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return kOk;
  } catch (const CLI::CallForAllHelp& e) {
    out << app.help("", CLI::AppFormatMode::All);
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n" << "run with --help for usage\n";
    return kUsage;
  }

  try {
    const CLI::App* sub = app.get_subcommands().front();
    RunConfig cfg;
    if (!config_path.empty()) merge_into(cfg, read_json_file(config_path));
    merge_into(cfg, overrides);
    cfg.command = sub->get_name();
    if (sub == gen) return cmd_gen_synth(cfg, out);
    if (sub == check) return cmd_ingest_check(cfg, out);
    if (sub == train) return cmd_train(cfg, out);
    if (sub == eval) return cmd_evaluate(cfg, out);
    if (sub == sweep) return cmd_sweep(cfg, out);
    if (sub == cmp) return cmd_compare(cfg, out);
    return kUsage;
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << "\n";
    return kUsage;
  } catch (const NumericalError& e) {
    err << "numerical failure: " << e.what() << "\n";
    return kNumerical;
  } catch (const Error& e) {
    err << "data error: " << e.what() << "\n";
    return kData;
  } catch (const fs::filesystem_error& e) {
    err << "io error: " << e.what() << "\n";
    return kData;
  }
}

}  // namespace prefroute::cli
