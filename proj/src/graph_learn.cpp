#include "skillmix/graph_learn.hpp"

#include "skillmix/io.hpp"
#include "skillmix/rng.hpp"

#include <cmath>
#include <future>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace skillmix {

WeightScheme weight_scheme_from_string(const std::string& s) {
  if (s == "binary_half") return WeightScheme::kBinaryHalf;
  if (s == "raw_delta") return WeightScheme::kRawDelta;
  throw std::invalid_argument("unknown weight scheme: " + s);
}

CompareMode compare_mode_from_string(const std::string& s) {
  if (s == "steps_to_threshold") return CompareMode::kStepsToThreshold;
  if (s == "delta") return CompareMode::kDelta;
  throw std::invalid_argument("unknown compare mode: " + s);
}

void GraphLearnConfig::check() const {
  if (steps < 1) throw std::invalid_argument("graph learn: H must be >= 1");
  if (probe_steps < 0 || probe_steps > steps) {
    throw std::invalid_argument("graph learn: h must lie in [0, H]");
  }
  if (threshold_loss <= 0.0) throw std::invalid_argument("graph learn: threshold must be > 0");
  if (batch_size < 1) throw std::invalid_argument("graph learn: batch size must be >= 1");
  if (parallelism < 1) throw std::invalid_argument("graph learn: parallelism must be >= 1");
}

namespace {

// Trains a fresh trainer on a fixed mixture for `steps` steps, recording the
// eval losses after every step.
ProbeRecord run_probe(const TrainerFactory& factory, std::uint64_t stream,
                      std::vector<int> train_on, const VectorXd& mixture, const VectorXi& counts,
                      int steps) {
  ProbeRecord rec;
  rec.train_on = std::move(train_on);
  rec.steps = steps;
  try {
    auto trainer = factory(stream);
    trainer->reset();
    rec.losses_before = trainer->observe().losses;
    VectorXd last = rec.losses_before;
    for (int s = 0; s < steps; ++s) {
      trainer->step(BatchAlloc{counts, mixture});
      last = trainer->observe().losses;
      rec.trajectory.push_back(last);
    }
    rec.losses_after = last;
  } catch (const std::exception& e) {
    rec.failed = true;
    rec.error = e.what();
  }
  return rec;
}

// First step (1-based) at which eval skill j drops to the threshold, or
// infinity if it never does within the run.
double steps_to_threshold(const ProbeRecord& rec, int j, double threshold) {
  for (std::size_t s = 0; s < rec.trajectory.size(); ++s) {
    if (rec.trajectory[s](j) <= threshold) return static_cast<double>(s + 1);
  }
  return std::numeric_limits<double>::infinity();
}

// Runs `tasks` with at most `parallelism` in flight; results land in slots
// keyed by task index, so execution order cannot matter.
std::vector<ProbeRecord> run_all(const std::vector<std::function<ProbeRecord()>>& tasks,
                                 int parallelism) {
  std::vector<ProbeRecord> out(tasks.size());
  if (parallelism <= 1) {
    for (std::size_t i = 0; i < tasks.size(); ++i) out[i] = tasks[i]();
    return out;
  }
  std::size_t next = 0;
  while (next < tasks.size()) {
    const std::size_t batch = std::min<std::size_t>(parallelism, tasks.size() - next);
    std::vector<std::future<ProbeRecord>> futs;
    futs.reserve(batch);
    for (std::size_t b = 0; b < batch; ++b) {
      futs.push_back(std::async(std::launch::async, tasks[next + b]));
    }
    for (std::size_t b = 0; b < batch; ++b) out[next + b] = futs[b].get();
    next += batch;
  }
  return out;
}

VectorXd solo_mixture(int k, int i) {
  VectorXd p = VectorXd::Zero(k);
  p(i) = 1.0;
  return p;
}

VectorXi solo_counts(int k, int i, int batch) {
  VectorXi c = VectorXi::Zero(k);
  c(i) = batch;
  return c;
}

// Balanced pair pool: floor(batch/2) from skill i, the remainder to skill j.
VectorXi pair_counts(int k, int i, int j, int batch) {
  VectorXi c = VectorXi::Zero(k);
  c(i) += batch / 2;
  c(j) += batch - batch / 2;
  return c;
}

}  // namespace

GraphLearnResult learn_graph_bruteforce(const SkillSet& skills, const TrainerFactory& factory,
                                        const GraphLearnConfig& config) {
  config.check();
  const int k = skills.size();

  std::vector<std::function<ProbeRecord()>> tasks;
  tasks.reserve(k + k * k);
  for (int j = 0; j < k; ++j) {
    tasks.push_back([&, j] {
      return run_probe(factory, derive_seed(config.seed, 1, j), {j}, solo_mixture(k, j),
                       solo_counts(k, j, config.batch_size), config.steps);
    });
  }
  for (int i = 0; i < k; ++i) {
    for (int j = 0; j < k; ++j) {
      tasks.push_back([&, i, j] {
        VectorXd p = VectorXd::Zero(k);
        if (i == j) {
          p(j) = 1.0;
        } else {
          p(i) = 0.5;
          p(j) = 0.5;
        }
        return run_probe(factory, derive_seed(config.seed, 2, static_cast<std::uint64_t>(i) * k + j),
                         {i, j}, p, pair_counts(k, i, j, config.batch_size), config.steps);
      });
    }
  }

  GraphLearnResult result;
  result.probes = run_all(tasks, config.parallelism);
  for (const auto& rec : result.probes) {
    if (rec.failed) return result;
  }

  const auto* solo = result.probes.data();
  const auto* pair = result.probes.data() + k;
  auto solo_delta = [&](int j) { return solo[j].losses_before(j) - solo[j].losses_after(j); };
  auto pair_delta = [&](int i, int j) {
    const ProbeRecord& rec = pair[i * k + j];
    return rec.losses_before(j) - rec.losses_after(j);
  };

  auto edge_present = [&](int i, int j) {
    if (config.compare == CompareMode::kStepsToThreshold) {
      const double s_pair = steps_to_threshold(pair[i * k + j], j, config.threshold_loss);
      const double s_solo = steps_to_threshold(solo[j], j, config.threshold_loss);
      if (std::isfinite(s_pair) || std::isfinite(s_solo)) return s_pair < s_solo;
      // Neither run reached the threshold: fall back to comparing deltas.
    }
    return pair_delta(i, j) > solo_delta(j) + config.tie_tolerance;
  };

  MatrixXd a = MatrixXd::Zero(k, k);
  for (int j = 0; j < k; ++j) {
    const bool diag_learns = solo_delta(j) > config.tie_tolerance;
    if (diag_learns) {
      a(j, j) = config.scheme == WeightScheme::kBinaryHalf ? 1.0 : std::max(0.0, solo_delta(j));
    }
    for (int i = 0; i < k; ++i) {
      if (i == j) continue;
      if (!edge_present(i, j)) continue;
      a(i, j) = config.scheme == WeightScheme::kBinaryHalf
                    ? 0.5
                    : std::max(0.0, pair_delta(i, j) - solo_delta(j));
    }
  }
  result.graph = SkillsGraph(skills.skills(), skills.skills(), std::move(a), Setting::kContinual);
  return result;
}

GraphLearnResult learn_graph_approximate(const std::vector<SkillId>& train_skills,
                                         const std::vector<SkillId>& eval_skills, Setting setting,
                                         const TrainerFactory& factory,
                                         const GraphLearnConfig& config) {
  config.check();
  const int k = static_cast<int>(train_skills.size());
  const int m = static_cast<int>(eval_skills.size());

  std::vector<std::function<ProbeRecord()>> tasks;
  tasks.reserve(k);
  for (int i = 0; i < k; ++i) {
    tasks.push_back([&, i] {
      return run_probe(factory, derive_seed(config.seed, 3, i), {i}, solo_mixture(k, i),
                       solo_counts(k, i, config.batch_size), config.probe_steps);
    });
  }

  GraphLearnResult result;
  result.probes = run_all(tasks, config.parallelism);
  for (const auto& rec : result.probes) {
    if (rec.failed) return result;
  }

  MatrixXd a = MatrixXd::Zero(k, m);
  for (int i = 0; i < k; ++i) {
    const ProbeRecord& rec = result.probes[i];
    for (int j = 0; j < m; ++j) {
      const double delta = rec.losses_before(j) - rec.losses_after(j);
      if (config.scheme == WeightScheme::kRawDelta) {
        a(i, j) = std::max(0.0, delta);
      } else if (delta > config.tie_tolerance) {
        a(i, j) = train_skills[i].name == eval_skills[j].name ? 1.0 : 0.5;
      }
    }
  }
  result.graph = SkillsGraph(train_skills, eval_skills, std::move(a), setting);
  return result;
}

std::string probes_to_jsonl(const std::vector<ProbeRecord>& probes) {
  std::ostringstream out;
  for (const auto& rec : probes) {
    nlohmann::json j;
    j["train_on"] = rec.train_on;
    j["steps"] = rec.steps;
    j["losses_before"] = vector_to_json(rec.losses_before);
    j["losses_after"] = vector_to_json(rec.losses_after);
    j["failed"] = rec.failed;
    if (rec.failed) j["error"] = rec.error;
    out << j.dump() << "\n";
  }
  return out.str();
}

}  // namespace skillmix
