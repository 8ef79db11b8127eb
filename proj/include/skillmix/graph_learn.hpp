#pragma once

#include "skillmix/core.hpp"
#include "skillmix/trainer.hpp"

#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace skillmix {

enum class WeightScheme { kBinaryHalf, kRawDelta };
enum class CompareMode { kStepsToThreshold, kDelta };

WeightScheme weight_scheme_from_string(const std::string& s);
CompareMode compare_mode_from_string(const std::string& s);

struct GraphLearnConfig {
  int steps = 5;               // H: steps per probe run (brute force)
  int probe_steps = 3;         // h <= H: steps per probe run (approximate)
  double threshold_loss = 0.01;
  WeightScheme scheme = WeightScheme::kBinaryHalf;
  CompareMode compare = CompareMode::kDelta;
  int batch_size = 32;         // per-step sample counts handed to the trainer
  int parallelism = 1;
  std::uint64_t seed = 0;      // probe trainer stream derivation
  double tie_tolerance = 1e-9; // ties count as "no edge"

  void check() const;
};

/// Yields a fresh base-model trainer. `stream` is a stable per-probe tag so a
/// probe's result cannot depend on execution order.
using TrainerFactory = std::function<std::unique_ptr<Trainer>(std::uint64_t stream)>;

struct ProbeRecord {
  std::vector<int> train_on;          // one skill (solo) or two (pair)
  int steps = 0;
  VectorXd losses_before;
  VectorXd losses_after;
  std::vector<VectorXd> trajectory;   // losses after each step
  bool failed = false;
  std::string error;
};

struct GraphLearnResult {
  std::optional<SkillsGraph> graph;   // present only when every probe succeeded
  std::vector<ProbeRecord> probes;
};

/// Pairwise probes over one skill set (eval == train): k solo runs measure
/// delta_j^j, k^2 pair runs measure delta_j^{i,j}; edge i -> j when the pair
/// run beats the solo run. O(H k^2) trainer steps.
GraphLearnResult learn_graph_bruteforce(const SkillSet& skills, const TrainerFactory& factory,
                                        const GraphLearnConfig& config);

/// Linear-time probes: one run per training skill, edge weight from the loss
/// delta on each eval skill. Works in all three settings; never trains on
/// eval-skill data. O(h k) trainer steps.
GraphLearnResult learn_graph_approximate(const std::vector<SkillId>& train_skills,
                                         const std::vector<SkillId>& eval_skills, Setting setting,
                                         const TrainerFactory& factory,
                                         const GraphLearnConfig& config);

/// Probe log JSONL: one line per probe with the skills trained on, step
/// count, and before/after losses.
std::string probes_to_jsonl(const std::vector<ProbeRecord>& probes);

}  // namespace skillmix
