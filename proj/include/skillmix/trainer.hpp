#pragma once

#include "skillmix/core.hpp"
#include "skillmix/rng.hpp"

#include <functional>
#include <memory>

namespace skillmix {

class Selector;

/// One round's training batch: per-train-skill sample counts plus the mixture
/// they were apportioned from. The simulated trainer evolves on the mixture
/// (the dynamics are defined on simplex points); counts are bookkeeping and
/// the payload of the external-trainer wire format.
struct BatchAlloc {
  VectorXi counts;
  VectorXd mixture;
};

struct TrainerSnapshot {
  virtual ~TrainerSnapshot() = default;
};

/// The training process behind a run: consumes batches, reports validation
/// losses over the eval skills. observe() after reset() returns the initial
/// losses and is idempotent between steps; step() is the only state mutator.
class Trainer {
 public:
  virtual ~Trainer() = default;
  virtual void reset() = 0;
  virtual LossState observe() = 0;
  virtual void step(const BatchAlloc& batch) = 0;
  virtual std::unique_ptr<TrainerSnapshot> snapshot() const = 0;
  virtual void restore(const TrainerSnapshot& snap) = 0;
  virtual int train_count() const = 0;
  virtual int eval_count() const = 0;
};

/// Ground truth for the simulated trainer. Every entry of a_true must lie in
/// [0, 1] so each round's multiplicative loss factor stays in [0, 1].
struct SimDynamics {
  MatrixXd a_true;          // k x m
  VectorXd initial_losses;  // m, strictly positive
  double noise_sigma = 0.0; // multiplicative log-normal noise on observations
  std::uint64_t seed = 0;

  void check() const;
  /// Rescales an arbitrary nonnegative matrix by its max entry so it is a
  /// valid a_true.
  static MatrixXd scale_to_unit(MatrixXd m);
};

/// One round of the loss dynamics: L'_j = L_j * (1 - dot(a_true[:,j], p)).
/// Throws "dynamics overshoot" when a column rate exceeds 1.
VectorXd sim_step(const VectorXd& losses, const VectorXd& p, const MatrixXd& a_true);

/// Trainer that evolves losses under SimDynamics. The noiseless latent state
/// is kept separately from the (possibly noisy) observations; with
/// noise_sigma = 0 the two coincide.
class SimTrainer : public Trainer {
 public:
  explicit SimTrainer(SimDynamics dynamics);

  void reset() override;
  LossState observe() override;
  void step(const BatchAlloc& batch) override;
  std::unique_ptr<TrainerSnapshot> snapshot() const override;
  void restore(const TrainerSnapshot& snap) override;
  int train_count() const override { return static_cast<int>(dynamics_.a_true.rows()); }
  int eval_count() const override { return static_cast<int>(dynamics_.a_true.cols()); }

  const VectorXd& latent() const { return latent_; }
  const SimDynamics& dynamics() const { return dynamics_; }

 private:
  void refresh_observed();

  SimDynamics dynamics_;
  VectorXd latent_;
  VectorXd observed_;
  int round_ = 0;
  RngStream rng_;
};

/// Maps (mixture, round budget, round index) to the batch handed to the
/// trainer. The default apportions the budget by largest remainder with no
/// pool limits; the harness supplies a pool-aware one.
using Allocator = std::function<BatchAlloc(const Mixture& p, long budget, int round)>;

/// Runs T rounds of observe -> select -> train. Round t logs the mixture p_t,
/// the allocation, and the losses at the round's start and end. The round
/// budget is n/T with the remainder spread over the first n mod T rounds.
RunLog run_simulation(const RunConfig& config, Selector& selector, Trainer& trainer,
                      const Allocator& allocator = {});

/// Same loop, appending into a caller-owned log so the rounds finished before
/// an aborting failure can still be flushed.
void run_simulation_into(RunLog& log, const RunConfig& config, Selector& selector,
                         Trainer& trainer, const Allocator& allocator = {});

}  // namespace skillmix
