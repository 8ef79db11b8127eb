#pragma once

#include "skillmix/core.hpp"
#include "skillmix/graph_learn.hpp"
#include "skillmix/rng.hpp"
#include "skillmix/synth.hpp"
#include "skillmix/trainer.hpp"

#include <json.hpp>

#include <map>
#include <optional>
#include <string>
#include <vector>

namespace skillmix {

struct DatasetSpec {
  std::string kind = "none";  // none | jsonl | lego | addition
  std::string path;           // jsonl
  int val_per_skill = 0;
  LegoSpec lego;
  AdditionSpec addition;
  std::vector<long> counts;   // per-skill sample counts for the synthetics
};

struct GraphSpec {
  std::string source = "identity";  // identity | all_ones | csv |
                                    // learn_bruteforce | learn_approximate
  std::string path;                 // csv
  GraphLearnConfig learn;
};

struct TrainerSpec {
  std::string kind = "sim";  // sim | external
  MatrixXd a_true;           // inline ground truth (sim)
  std::string a_true_csv;    // or a CSV path
  VectorXd initial_losses;
  double noise_sigma = 0.0;
  std::vector<std::string> command;  // external
  long timeout_ms = 30000;
};

/// A full experiment: one dataset + trainer + graph shared across a list of
/// selectors, compared under paired seeding.
struct ExperimentSpec {
  std::uint64_t seed = 0;
  bool seed_set = false;
  std::string output_dir = "out";
  Setting setting = Setting::kContinual;
  std::vector<std::string> train_names;  // optional; resolved from the dataset
  std::vector<std::string> eval_names;   // or trainer spec when omitted
  DatasetSpec dataset;
  GraphSpec graph;
  TrainerSpec trainer;
  std::vector<RunConfig> selectors;
};

nlohmann::json experiment_to_json(const ExperimentSpec& spec);
ExperimentSpec experiment_from_json(const nlohmann::json& j);

/// Dataset plus resolved train/eval skill names for a spec (explicit names
/// win, then dataset skills, then s1..sk from the trainer matrix).
struct ResolvedContext {
  std::optional<SkillSet> dataset;
  std::vector<std::string> train_names;
  std::vector<std::string> eval_names;
};

ResolvedContext resolve_context(const ExperimentSpec& spec);

/// Fresh trainers for the spec; `stream` seeds the sim trainer's noise.
TrainerFactory make_trainer_factory(const ExperimentSpec& spec, const ResolvedContext& ctx);

/// Builds the graph estimate named by spec.graph (loading, constructing, or
/// learning it with the spec's trainer).
GraphLearnResult build_graph(const ExperimentSpec& spec, const ResolvedContext& ctx);

struct SelectorOutcome {
  std::string label;
  bool failed = false;
  std::string error;
  RunLog log;  // complete on success; holds the rounds finished before a failure
};

struct ExperimentResult {
  std::optional<SkillsGraph> graph;
  std::vector<ProbeRecord> probes;      // when the graph was learned
  std::vector<SelectorOutcome> runs;
  std::optional<SkillSet> dataset;
  std::vector<std::string> train_names;
  std::vector<std::string> eval_names;
};

/// Runs every selector of the spec against identically seeded dataset and
/// trainer streams. A failing run is recorded and the rest continue.
ExperimentResult run_experiment(const ExperimentSpec& spec);

/// Final plus per-round-average loss per skill, one row per (selector, skill),
/// with an `average` row per selector. Failed runs get a status column entry.
std::string summary_csv(const ExperimentResult& result);

/// run_experiment + writes experiment.json, one <label>.runlog.jsonl per
/// selector, summary.csv, graph.csv (and probes.jsonl when learned) under
/// spec.output_dir.
ExperimentResult run_experiment_to_dir(const ExperimentSpec& spec);

/// Re-runs a persisted experiment and byte-compares the regenerated run logs
/// against the stored ones. Returns the per-file mismatch report (empty =
/// reproduced exactly).
std::vector<std::string> replay_check(const std::string& experiment_json_path);

/// Largest-remainder allocation of `budget` over the mixture, capped by pool
/// sizes; shortfall from exhausted pools is re-apportioned over the skills
/// with remaining capacity (by renormalized mixture, uniform when that mass
/// is zero). Empty `pool_sizes` means unlimited pools.
VectorXi allocate_counts(const Mixture& p, long budget, const std::vector<long>& pool_sizes);

/// Multinomial alternative behind the same interface (fidelity mode).
VectorXi allocate_counts_multinomial(const Mixture& p, long budget,
                                     const std::vector<long>& pool_sizes, RngStream& rng);

struct DrawnAllocation {
  VectorXi counts;
  std::vector<std::vector<int>> sample_indices;  // per skill, into its pool
};

/// Uniform without-replacement draws of counts(i) indices from each pool
/// (decks reset every round).
std::vector<std::vector<int>> draw_without_replacement(const VectorXi& counts,
                                                       const SkillSet& pools, RngStream& rng);

/// allocate_counts plus the without-replacement draws.
DrawnAllocation allocate_samples(const Mixture& p, long budget, const SkillSet& pools,
                                 RngStream& rng);

/// Shipped hyperparameter presets (eta, T, w, n) keyed by experiment name,
/// e.g. "lego-pretrain", "addition-pretrain", "lego-finetune".
const std::map<std::string, RunConfig>& presets();

}  // namespace skillmix
