#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <string>
#include <vector>

namespace skillmix {

using Eigen::MatrixXd;
using Eigen::VectorXd;
using Eigen::VectorXi;

/// One named skill inside a SkillSet; `index` is its position there.
struct SkillId {
  int index = 0;
  std::string name;
};

/// A single text sample, tagged with the skill it exercises.
struct Sample {
  int skill = 0;  // index into the owning SkillSet
  std::string input;
  std::string output;
};

enum class Setting { kContinual, kFineTune, kOutOfDomain };

Setting setting_from_string(const std::string& s);
std::string to_string(Setting s);

/// A point on the (k-1)-simplex: per-skill sampling proportions for one round.
/// Construction validates nonnegativity and unit sum (1e-9), so any Mixture in
/// flight is known valid.
class Mixture {
 public:
  explicit Mixture(VectorXd p);
  static Mixture uniform(int k);
  /// Uniform over `support`; zero elsewhere.
  static Mixture uniform_over(int k, const std::vector<int>& support);

  const VectorXd& vec() const { return p_; }
  int size() const { return static_cast<int>(p_.size()); }
  double operator[](int i) const { return p_(i); }

 private:
  VectorXd p_;
};

/// weights / sum(weights). Order-preserving; rejects all-zero or non-finite
/// input with "degenerate weight vector".
Mixture normalize(const VectorXd& weights);

/// Softmax of `logits` computed with a max shift, so exponents up to ~1e300
/// stay finite. Equal logits come out exactly equal.
VectorXd softmax(const VectorXd& logits);

/// Largest-remainder apportionment of `budget` into counts proportional to
/// mixture `p`. Ties in the remainders are broken by ascending index. Counts
/// sum to `budget` exactly and each is within 1 of budget*p_i.
VectorXi apportion_largest_remainder(const VectorXd& p, long budget);

/// An ordered collection of skills, each with a training pool and a held-out
/// validation pool. Pools are disjoint per skill (checked on construction by
/// exact input/output match).
class SkillSet {
 public:
  SkillSet(std::vector<SkillId> skills, std::vector<std::vector<Sample>> pools,
           std::vector<std::vector<Sample>> validation);
  explicit SkillSet(std::vector<SkillId> skills);
  static SkillSet from_names(const std::vector<std::string>& names);

  int size() const { return static_cast<int>(skills_.size()); }
  const std::vector<SkillId>& skills() const { return skills_; }
  const SkillId& skill(int i) const { return skills_.at(i); }
  const std::vector<Sample>& pool(int i) const { return pools_.at(i); }
  const std::vector<Sample>& validation(int i) const { return validation_.at(i); }
  std::vector<long> pool_sizes() const;
  /// Index of a skill by name, or -1.
  int find(const std::string& name) const;

 private:
  std::vector<SkillId> skills_;
  std::vector<std::vector<Sample>> pools_;
  std::vector<std::vector<Sample>> validation_;
};

/// Weighted skills graph: k training skills, m evaluation skills, and a k x m
/// adjacency matrix whose entry (i, j) is the strength of edge i -> j.
/// Negative entries are clamped to zero at construction. The setting tag
/// records how eval skills relate to train skills; `validate()` reports any
/// violated relation rather than throwing.
class SkillsGraph {
 public:
  SkillsGraph(std::vector<SkillId> train_skills, std::vector<SkillId> eval_skills,
              MatrixXd a, Setting setting);

  static SkillsGraph identity(const std::vector<SkillId>& skills);
  static SkillsGraph all_ones(const std::vector<SkillId>& skills);

  int train_count() const { return static_cast<int>(train_.size()); }
  int eval_count() const { return static_cast<int>(eval_.size()); }
  const std::vector<SkillId>& train_skills() const { return train_; }
  const std::vector<SkillId>& eval_skills() const { return eval_; }
  const MatrixXd& adjacency() const { return a_; }
  Setting setting() const { return setting_; }

  /// Empty when the graph satisfies every invariant of its setting.
  std::vector<std::string> validate() const;

  /// Fraction of nonzero off-diagonal entries ("diagonal" = cells whose train
  /// and eval skill share a name). Diagnostic only.
  double density() const;
  /// Reporting label for `density()`: "empty" (< 0.1), "complete" (> 0.9),
  /// else "intermediate". Thresholds are reporting-only.
  static std::string density_label(double density);

  /// Returns a copy with the identity matrix in place of A (the no-graph
  /// ablation). Only valid when eval skills == train skills.
  SkillsGraph with_identity() const;

 private:
  std::vector<SkillId> train_;
  std::vector<SkillId> eval_;
  MatrixXd a_;
  Setting setting_;
};

/// Validation losses over the eval skills at a round boundary.
struct LossState {
  VectorXd losses;
  int round = 0;
};

/// Selector kind plus its options, as carried inside a RunConfig.
struct SelectorOptions {
  std::string kind = "skillit";  // random | stratified | skill_stratified |
                                 // curriculum | anticurriculum | skillit
  bool no_graph = false;         // skillit ablation: substitute identity A
  bool static_mixture = false;   // skillit ablation: hold the initial mixture
  int epochs = 5;                // curriculum pacing epochs M
  double frac_previous = 0.4;    // mass reserved for previously introduced skills
  VectorXd weights;              // random: pool proportions (empty -> pool sizes)
};

/// Inputs of a selection run: learning rate eta, T rounds, n total samples,
/// window w, and the seed that makes the run reproducible.
struct RunConfig {
  double eta = 0.5;
  int rounds = 1;      // T
  long samples = 1;    // n
  int window = 1;      // w
  std::uint64_t seed = 0;
  SelectorOptions selector;
  std::string label;
  /// Round-budget allocation: deterministic largest-remainder counts, or
  /// stochastic per-sample draws from the mixture.
  std::string alloc = "largest_remainder";  // or "multinomial"

  void check() const;  // throws on violated invariants (n >= T, w <= T, ...)
};

struct RoundRecord {
  int round = 0;  // 1-based
  VectorXd mixture;
  VectorXi allocation;
  VectorXd losses_before;
  VectorXd losses_after;
};

/// Append-only record of a full selection run.
struct RunLog {
  RunConfig config;
  std::vector<RoundRecord> rounds;
};

}  // namespace skillmix
