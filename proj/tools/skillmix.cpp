// Command-line front end: dataset generation, graph learning, selection runs,
// skill recovery, plotting, and replay verification.

#include "skillmix/graph_learn.hpp"
#include "skillmix/harness.hpp"
#include "skillmix/io.hpp"
#include "skillmix/plot.hpp"
#include "skillmix/recover.hpp"
#include "skillmix/synth.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <filesystem>
#include <iostream>

namespace fs = std::filesystem;
using nlohmann::json;
using namespace skillmix;

namespace {

json load_config(const std::string& path) {
  if (path.empty()) return json::object();
  return json::parse(read_text_file(path));
}

// Config-file fallback: a flag not given on the command line takes its value
// from the JSON key of the same name.
template <typename T>
void merge(const CLI::App& app, const json& cfg, const std::string& flag, T& value) {
  const auto* opt = app.get_option_no_throw("--" + flag);
  const bool seen = opt != nullptr && opt->count() > 0;
  if (!seen && cfg.contains(flag)) value = cfg.at(flag).get<T>();
}

std::vector<long> parse_counts(const std::string& csv) {
  std::vector<long> counts;
  std::stringstream ss(csv);
  std::string cell;
  while (std::getline(ss, cell, ',')) counts.push_back(std::stol(cell));
  return counts;
}

// Counts may come from --counts "a,b,c", a config "counts" array, or a flat
// per-skill default.
std::vector<long> resolve_counts(const json& cfg, const std::string& counts_csv, long fallback,
                                 std::size_t skills) {
  if (!counts_csv.empty()) return parse_counts(counts_csv);
  if (cfg.contains("counts")) return cfg.at("counts").get<std::vector<long>>();
  return std::vector<long>(skills, fallback);
}

void write_dataset(const std::vector<Sample>& samples, const std::vector<SkillId>& skills,
                   const std::string& out, bool split, std::uint64_t seed) {
  if (split) {
    fs::create_directories(out);
    for (const auto& skill : skills) {
      std::vector<Sample> subset;
      for (const auto& s : samples) {
        if (s.skill == skill.index) subset.push_back(s);
      }
      write_samples_jsonl(subset, skills, out + "/" + skill.name + ".jsonl");
      std::cout << out << "/" << skill.name << ".jsonl: " << subset.size() << " samples\n";
    }
    return;
  }
  std::vector<Sample> shuffled = samples;
  RngStream rng(derive_seed(seed, 0x5f1e));
  rng.shuffle(shuffled);
  write_samples_jsonl(shuffled, skills, out);
  std::cout << out << ": " << shuffled.size() << " samples\n";
}

int cmd_gen_lego(const CLI::App& app, const json& cfg, int k, std::string structure,
                 std::string parents_csv, std::string alphabet, std::uint64_t seed,
                 std::string counts_csv, long count, std::string out, bool split) {
  merge(app, cfg, "k", k);
  merge(app, cfg, "structure", structure);
  merge(app, cfg, "alphabet", alphabet);
  merge(app, cfg, "seed", seed);
  merge(app, cfg, "count", count);
  merge(app, cfg, "out", out);
  merge(app, cfg, "split", split);

  LegoSpec spec;
  spec.k = k;
  spec.alphabet = alphabet;
  spec.seed = seed;
  if (parents_csv.empty() && cfg.contains("parents")) {
    spec.parents = cfg.at("parents").get<std::vector<int>>();
  }
  if (structure == "tree") {
    if (parents_csv.empty() && spec.parents.empty()) {
      throw CLI::ValidationError("--parents required for tree structure");
    }
    for (long p : parse_counts(parents_csv)) spec.parents.push_back(static_cast<int>(p));
  } else if (structure != "chain") {
    throw CLI::ValidationError("--structure must be chain or tree");
  }
  const auto counts = resolve_counts(cfg, counts_csv, count, spec.skill_names().size());
  const auto samples = gen_lego(spec, counts);
  write_dataset(samples, SkillSet::from_names(spec.skill_names()).skills(), out, split, seed);
  return 0;
}

int cmd_gen_addition(const CLI::App& app, const json& cfg, int digits, std::uint64_t seed,
                     std::string counts_csv, long count, std::string out, bool split) {
  merge(app, cfg, "digits", digits);
  merge(app, cfg, "seed", seed);
  merge(app, cfg, "count", count);
  merge(app, cfg, "out", out);
  merge(app, cfg, "split", split);

  AdditionSpec spec;
  spec.digits = digits;
  spec.seed = seed;
  const auto counts = resolve_counts(cfg, counts_csv, count, static_cast<std::size_t>(digits));
  const auto samples = gen_addition(spec, counts);
  write_dataset(samples, SkillSet::from_names(spec.skill_names()).skills(), out, split, seed);
  return 0;
}

int cmd_learn_graph(bool brute, const std::string& config_path, const std::string& out,
                    const std::string& probe_log) {
  ExperimentSpec spec = experiment_from_json(load_config(config_path));
  spec.graph.source = brute ? "learn_bruteforce" : "learn_approximate";
  const ResolvedContext ctx = resolve_context(spec);
  const GraphLearnResult learned = build_graph(spec, ctx);
  if (!probe_log.empty()) write_text_file(probe_log, probes_to_jsonl(learned.probes));
  if (!learned.graph) {
    std::cerr << "graph learning failed; probe log has the failing probes\n";
    return 1;
  }
  write_adjacency_csv(*learned.graph, out);
  const double d = learned.graph->density();
  std::cout << "graph: " << learned.graph->train_count() << " x " << learned.graph->eval_count()
            << " skills, density " << d << " (" << SkillsGraph::density_label(d) << ") -> " << out
            << "\n";
  return 0;
}

int cmd_run(const CLI::App& app, const json& cfg_json, const std::string& config_path,
            std::string out, std::uint64_t seed, bool seed_seen) {
  if (config_path.empty()) throw CLI::ValidationError("run needs --config");
  ExperimentSpec spec = experiment_from_json(cfg_json);
  if (seed_seen) {
    spec.seed = seed;
    spec.seed_set = true;
  }
  if (!spec.seed_set) throw CLI::ValidationError("run: seed is mandatory (config key \"seed\")");
  merge(app, cfg_json, "out", out);
  if (!out.empty()) spec.output_dir = out;

  const ExperimentResult result = run_experiment_to_dir(spec);
  int failures = 0;
  for (const auto& run : result.runs) {
    if (run.failed) {
      ++failures;
      std::cout << run.label << ": FAILED (" << run.error << ")\n";
    } else {
      const auto& final = run.log.rounds.back().losses_after;
      std::cout << run.label << ": final average loss " << final.mean() << "\n";
    }
  }
  std::cout << "wrote " << spec.output_dir << "/summary.csv\n";
  return failures == 0 ? 0 : 1;
}

int cmd_recover(const CLI::App& app, const json& cfg, std::string traj_path, int k,
                std::uint64_t seed, int restarts, bool zscore, std::string out) {
  merge(app, cfg, "traj", traj_path);
  merge(app, cfg, "k", k);
  merge(app, cfg, "seed", seed);
  merge(app, cfg, "restarts", restarts);
  merge(app, cfg, "zscore", zscore);
  merge(app, cfg, "out", out);
  if (traj_path.empty()) throw CLI::ValidationError("recover needs --traj (or config key traj)");
  const TrajectoryMatrix traj = read_trajectories(traj_path);
  const auto assignment = cluster_trajectories(traj, k, seed, restarts, zscore);

  std::ostringstream csv;
  csv << "id,cluster\n";
  for (std::size_t i = 0; i < assignment.size(); ++i) {
    csv << (i < traj.ids.size() ? traj.ids[i] : std::to_string(i)) << "," << assignment[i] << "\n";
  }
  if (!out.empty()) write_text_file(out, csv.str());

  if (!traj.labels.empty()) {
    std::cout << "matched accuracy: " << matched_accuracy(assignment, traj.labels) << "\n";
  } else {
    std::cout << "clustered " << assignment.size() << " samples into " << k << " groups\n";
  }
  return 0;
}

int cmd_plot(const std::vector<std::string>& runlogs, const std::string& skills_csv,
             const std::string& out) {
  std::vector<RunLog> logs;
  for (const auto& path : runlogs) {
    RunLog log;
    log.rounds = read_runlog_jsonl(path);
    log.config.label = fs::path(path).stem().stem().string();  // strip .runlog.jsonl
    logs.push_back(std::move(log));
  }
  std::vector<std::string> eval_names;
  if (!skills_csv.empty()) {
    std::stringstream ss(skills_csv);
    std::string cell;
    while (std::getline(ss, cell, ',')) eval_names.push_back(cell);
  }
  const auto written = export_plots(logs, eval_names, out);
  std::cout << "wrote " << written.size() << " files under " << out << "\n";
  return 0;
}

int cmd_replay(const std::string& experiment_json) {
  const auto mismatches = replay_check(experiment_json);
  if (mismatches.empty()) {
    std::cout << "replay: run logs reproduced byte-identically\n";
    return 0;
  }
  for (const auto& m : mismatches) std::cout << "replay mismatch: " << m << "\n";
  return 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"skills-graph data mixture planning and experiment harness"};
  app.require_subcommand(1);

  std::string config_path;

  // gen
  auto* gen = app.add_subcommand("gen", "generate a synthetic skill dataset");
  gen->require_subcommand(1);
  int lego_k = 5;
  std::string lego_structure = "chain", lego_parents, lego_alphabet = "abcdefghijklmnopqrstuvwxyz";
  std::uint64_t gen_seed = 0;
  std::string gen_counts, gen_out = "dataset.jsonl";
  long gen_count = 100;
  bool gen_split = false;
  auto* lego = gen->add_subcommand("lego", "reasoning-chain dataset");
  lego->add_option("--config", config_path, "JSON config file");
  lego->add_option("--k", lego_k, "variable count");
  lego->add_option("--structure", lego_structure, "chain or tree");
  lego->add_option("--parents", lego_parents, "tree parents for nodes 1..k-1, comma separated");
  lego->add_option("--alphabet", lego_alphabet, "variable letters");
  lego->add_option("--seed", gen_seed, "generation seed");
  lego->add_option("--counts", gen_counts, "per-skill sample counts, comma separated");
  lego->add_option("--count", gen_count, "samples per skill (when --counts absent)");
  lego->add_option("--out", gen_out, "output file (or directory with --split)");
  lego->add_flag("--split", gen_split, "one file per skill");

  int add_digits = 3;
  auto* addition = gen->add_subcommand("addition", "d-digit addition dataset");
  addition->add_option("--config", config_path, "JSON config file");
  addition->add_option("--digits", add_digits, "digits per operand");
  addition->add_option("--seed", gen_seed, "generation seed");
  addition->add_option("--counts", gen_counts, "per-skill sample counts, comma separated");
  addition->add_option("--count", gen_count, "samples per skill (when --counts absent)");
  addition->add_option("--out", gen_out, "output file (or directory with --split)");
  addition->add_flag("--split", gen_split, "one file per skill");

  // learn-graph
  auto* learn = app.add_subcommand("learn-graph", "estimate the skills graph");
  learn->require_subcommand(1);
  std::string graph_out = "graph.csv", probe_log;
  auto* brute = learn->add_subcommand("brute", "pairwise probes (Hk^2)");
  auto* approx = learn->add_subcommand("approx", "per-skill probes (hk)");
  for (auto* sub : {brute, approx}) {
    sub->add_option("--config", config_path, "experiment JSON with trainer + skills")->required();
    sub->add_option("--out", graph_out, "adjacency CSV to write");
    sub->add_option("--probe-log", probe_log, "probe JSONL to write");
  }

  // run
  auto* run = app.add_subcommand("run", "run the selectors of an experiment config");
  std::string run_out;
  std::uint64_t run_seed = 0;
  run->add_option("--config", config_path, "experiment JSON")->required();
  run->add_option("--out", run_out, "output directory (overrides config)");
  auto* run_seed_opt = run->add_option("--seed", run_seed, "seed (overrides config)");

  // recover
  auto* recover = app.add_subcommand("recover", "cluster loss trajectories into skills");
  std::string traj_path, recover_out;
  int recover_k = 5, restarts = 10;
  std::uint64_t recover_seed = 0;
  bool zscore = false;
  recover->add_option("--config", config_path, "JSON config file");
  recover->add_option("--traj", traj_path, "trajectory file");
  recover->add_option("--k", recover_k, "cluster count");
  recover->add_option("--seed", recover_seed, "clustering seed");
  recover->add_option("--restarts", restarts, "k-means restarts");
  recover->add_flag("--zscore", zscore, "standardize features first");
  recover->add_option("--out", recover_out, "assignment CSV to write");

  // plot
  auto* plot = app.add_subcommand("plot", "loss and mixture charts from run logs");
  std::vector<std::string> plot_logs;
  std::string plot_skills, plot_out = "plots";
  plot->add_option("--runlog", plot_logs, "run log JSONL (repeatable)")->required();
  plot->add_option("--skills", plot_skills, "eval skill names, comma separated");
  plot->add_option("--out", plot_out, "output directory");

  // replay
  auto* replay = app.add_subcommand("replay", "verify a run reproduces byte-identically");
  std::string replay_path;
  replay->add_option("--experiment", replay_path, "experiment.json of a finished run")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    const json cfg = load_config(config_path);
    if (lego->parsed()) {
      return cmd_gen_lego(*lego, cfg, lego_k, lego_structure, lego_parents, lego_alphabet,
                          gen_seed, gen_counts, gen_count, gen_out, gen_split);
    }
    if (addition->parsed()) {
      return cmd_gen_addition(*addition, cfg, add_digits, gen_seed, gen_counts, gen_count, gen_out,
                              gen_split);
    }
    if (brute->parsed() || approx->parsed()) {
      return cmd_learn_graph(brute->parsed(), config_path, graph_out, probe_log);
    }
    if (run->parsed()) {
      return cmd_run(*run, cfg, config_path, run_out, run_seed, run_seed_opt->count() > 0);
    }
    if (recover->parsed()) {
      return cmd_recover(*recover, cfg, traj_path, recover_k, recover_seed, restarts, zscore,
                         recover_out);
    }
    if (plot->parsed()) return cmd_plot(plot_logs, plot_skills, plot_out);
    if (replay->parsed()) return cmd_replay(replay_path);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
