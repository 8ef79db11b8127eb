#pragma once

#include "skillmix/core.hpp"

#include <json.hpp>

#include <deque>
#include <memory>
#include <vector>

namespace skillmix {

/// Produces the training mixture for each round. `first` sees the base
/// model's initial losses and returns p_1; `update` is called at the end of
/// round t with the losses observed at that round's start and returns p_{t+1}.
class Selector {
 public:
  virtual ~Selector() = default;
  virtual Mixture first(const LossState& initial) = 0;
  virtual Mixture update(const LossState& observed) = 0;

  /// Resume support: enough state to continue a run mid-way.
  virtual nlohmann::json state() const { return nlohmann::json::object(); }
  virtual void restore(const nlohmann::json&) {}
};

/// p_1 proportional to exp(eta * rowsum_i(A)), computed in log space. Row
/// sums run over every eval column, diagonal included.
Mixture graph_softmax_init(const SkillsGraph& graph, double eta);

/// Windowed multiplicative-weights state over a skills-graph estimate. The
/// mixture is recomputed from the initialization each round:
///   u_i = p_1^i * exp(eta * sum_{tau in window} sum_j A_ij * L_j(f_tau))
/// with the window holding the last w observations (the full history while
/// fewer than w exist). All weights live in log space until normalization.
class GraphWeightState {
 public:
  GraphWeightState(const SkillsGraph& graph, double eta, int window);

  void observe(const VectorXd& losses);
  /// Mixture from the current window; errors with "must observe before first
  /// update" while the window is empty.
  Mixture mixture() const;
  Mixture initial() const;

  const std::deque<VectorXd>& history() const { return history_; }
  nlohmann::json state() const;
  void restore(const nlohmann::json& j);

 private:
  MatrixXd a_;
  double eta_;
  int window_;
  VectorXd base_logits_;  // eta * rowsums
  std::deque<VectorXd> history_;
};

/// Push one observation and return the next mixture (the per-round update).
Mixture graph_weight_update(GraphWeightState& state, const LossState& observed);

/// Closed-form KL proximal step on the simplex:
///   argmin_p <eta*g, p> + KL(p || p_prev)  ==  p_i proportional to
///   p_prev_i * exp(-eta * g_i).
/// p_prev must be strictly positive (KL is undefined otherwise).
Mixture proximal_step(const VectorXd& p_prev, const VectorXd& gradient, double eta);

/// Uniform over all k training skills.
Mixture stratified(int k);

/// Uniform over the relevant skills of the graph's setting: everything for
/// continual, prerequisites plus targets for fine-tuning, prerequisites only
/// out of domain. Prerequisites are the rows with any positive entry.
Mixture skill_stratified(const SkillsGraph& graph);

/// Skill-level curriculum state: skills ranked by base-model loss, an
/// expanding eligible set paced over H steps in M epochs, and a fraction of
/// mass reserved for previously introduced skills.
struct CurriculumState {
  VectorXd scores;            // per train skill
  int epochs = 5;             // M
  int total_steps = 1;        // H
  bool anticurriculum = false;
  double frac_previous = 0.4;
};

struct CurriculumRound {
  std::vector<int> eligible;  // skill indices, ranked order
  Mixture mixture;
};

CurriculumRound curriculum_allocate(const CurriculumState& state, int step);

// -- Selector implementations ------------------------------------------------

/// Static mixture proportional to fixed weights (pool sizes for the random
/// baseline; uniform when none are given).
class RandomSelector : public Selector {
 public:
  RandomSelector(int k, VectorXd weights = {});
  Mixture first(const LossState&) override { return mixture_; }
  Mixture update(const LossState&) override { return mixture_; }

 private:
  Mixture mixture_;
};

class StratifiedSelector : public Selector {
 public:
  explicit StratifiedSelector(int k) : mixture_(Mixture::uniform(k)) {}
  Mixture first(const LossState&) override { return mixture_; }
  Mixture update(const LossState&) override { return mixture_; }

 private:
  Mixture mixture_;
};

class SkillStratifiedSelector : public Selector {
 public:
  explicit SkillStratifiedSelector(const SkillsGraph& graph) : mixture_(skill_stratified(graph)) {}
  Mixture first(const LossState&) override { return mixture_; }
  Mixture update(const LossState&) override { return mixture_; }

 private:
  Mixture mixture_;
};

/// Skill-level (anti)curriculum over T rounds. Scores come from the initial
/// observation, so this selector requires eval skills == train skills.
class CurriculumSelector : public Selector {
 public:
  CurriculumSelector(int k, int rounds, int epochs, double frac_previous, bool anticurriculum);
  Mixture first(const LossState& initial) override;
  Mixture update(const LossState&) override;
  nlohmann::json state() const override;
  void restore(const nlohmann::json& j) override;

 private:
  int k_;
  CurriculumState state_;
  int step_ = 0;
  bool scored_ = false;
};

struct SkillItOptions {
  bool no_graph = false;        // replace A with the identity
  bool static_mixture = false;  // hold p_1 for the whole run
};

/// The online mirror-descent selector over the skills-graph estimate.
class SkillItSelector : public Selector {
 public:
  SkillItSelector(const SkillsGraph& graph, double eta, int window, SkillItOptions opts = {});
  Mixture first(const LossState&) override;
  Mixture update(const LossState& observed) override;
  nlohmann::json state() const override;
  void restore(const nlohmann::json& j) override;

 private:
  GraphWeightState state_;
  SkillItOptions opts_;
};

/// Builds a selector from run-config options. `graph` may be null for kinds
/// that do not use it; pool_sizes feed the random baseline's proportions.
std::unique_ptr<Selector> make_selector(const SelectorOptions& opts, const SkillsGraph* graph,
                                        int k, int rounds, double eta, int window,
                                        const std::vector<long>& pool_sizes = {});

}  // namespace skillmix
