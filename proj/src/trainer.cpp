#include "skillmix/trainer.hpp"

#include "skillmix/selector.hpp"

#include <cmath>
#include <stdexcept>

namespace skillmix {

void SimDynamics::check() const {
  if (a_true.rows() < 1 || a_true.cols() < 1) {
    throw std::invalid_argument("sim dynamics: empty a_true");
  }
  for (Eigen::Index i = 0; i < a_true.rows(); ++i) {
    for (Eigen::Index j = 0; j < a_true.cols(); ++j) {
      const double v = a_true(i, j);
      if (!std::isfinite(v) || v < 0.0 || v > 1.0) {
        throw std::invalid_argument("sim dynamics: a_true entries must lie in [0, 1]");
      }
    }
  }
  if (initial_losses.size() != a_true.cols()) {
    throw std::invalid_argument("sim dynamics: initial losses must match eval skill count");
  }
  for (Eigen::Index j = 0; j < initial_losses.size(); ++j) {
    if (!std::isfinite(initial_losses(j)) || initial_losses(j) <= 0.0) {
      throw std::invalid_argument("sim dynamics: initial losses must be finite and positive");
    }
  }
  if (noise_sigma < 0.0) throw std::invalid_argument("sim dynamics: negative noise sigma");
}

MatrixXd SimDynamics::scale_to_unit(MatrixXd m) {
  m = m.cwiseMax(0.0);
  const double top = m.maxCoeff();
  if (top > 1.0) m /= top;
  return m;
}

VectorXd sim_step(const VectorXd& losses, const VectorXd& p, const MatrixXd& a_true) {
  if (p.size() != a_true.rows() || losses.size() != a_true.cols()) {
    throw std::invalid_argument("sim step: dimension mismatch");
  }
  VectorXd rates = a_true.transpose() * p;
  VectorXd out(losses.size());
  for (Eigen::Index j = 0; j < losses.size(); ++j) {
    if (rates(j) > 1.0 + 1e-12) throw std::runtime_error("dynamics overshoot");
    out(j) = losses(j) * (1.0 - std::min(rates(j), 1.0));
  }
  return out;
}

SimTrainer::SimTrainer(SimDynamics dynamics)
    : dynamics_(std::move(dynamics)), rng_(dynamics_.seed) {
  dynamics_.check();
  reset();
}

void SimTrainer::reset() {
  latent_ = dynamics_.initial_losses;
  round_ = 0;
  rng_ = RngStream(dynamics_.seed);
  refresh_observed();
}

void SimTrainer::refresh_observed() {
  if (dynamics_.noise_sigma > 0.0) {
    observed_.resize(latent_.size());
    for (Eigen::Index j = 0; j < latent_.size(); ++j) {
      observed_(j) = latent_(j) * std::exp(dynamics_.noise_sigma * rng_.normal());
    }
  } else {
    observed_ = latent_;
  }
}

LossState SimTrainer::observe() { return {observed_, round_}; }

void SimTrainer::step(const BatchAlloc& batch) {
  VectorXd p;
  if (batch.mixture.size() > 0 && batch.mixture.size() != dynamics_.a_true.rows()) {
    throw std::invalid_argument("sim trainer: batch mixture does not match train skill count");
  }
  if (batch.mixture.size() == dynamics_.a_true.rows()) {
    p = batch.mixture;
  } else if (batch.counts.size() == dynamics_.a_true.rows()) {
    // Counts-only batch (e.g. replayed from a wire log): use the empirical
    // mixture. An all-zero batch trains on nothing and leaves losses alone.
    const double total = batch.counts.sum();
    p = total > 0 ? (batch.counts.cast<double>() / total).eval()
                  : VectorXd::Zero(dynamics_.a_true.rows()).eval();
  } else {
    throw std::invalid_argument("sim trainer: batch does not match train skill count");
  }
  latent_ = sim_step(latent_, p, dynamics_.a_true);
  ++round_;
  refresh_observed();
}

namespace {

struct SimSnapshot : TrainerSnapshot {
  VectorXd latent;
  VectorXd observed;
  int round = 0;
  RngStream rng{0};
};

}  // namespace

std::unique_ptr<TrainerSnapshot> SimTrainer::snapshot() const {
  auto snap = std::make_unique<SimSnapshot>();
  snap->latent = latent_;
  snap->observed = observed_;
  snap->round = round_;
  snap->rng = rng_;
  return snap;
}

void SimTrainer::restore(const TrainerSnapshot& snap) {
  const auto* s = dynamic_cast<const SimSnapshot*>(&snap);
  if (s == nullptr) throw std::invalid_argument("sim trainer: foreign snapshot");
  latent_ = s->latent;
  observed_ = s->observed;
  round_ = s->round;
  rng_ = s->rng;
}

RunLog run_simulation(const RunConfig& config, Selector& selector, Trainer& trainer,
                      const Allocator& allocator) {
  RunLog log;
  run_simulation_into(log, config, selector, trainer, allocator);
  return log;
}

void run_simulation_into(RunLog& log, const RunConfig& config, Selector& selector,
                         Trainer& trainer, const Allocator& allocator) {
  config.check();
  const Allocator allocate =
      allocator ? allocator : [](const Mixture& p, long budget, int) {
        return BatchAlloc{apportion_largest_remainder(p.vec(), budget), p.vec()};
      };

  trainer.reset();
  log.config = config;
  log.rounds.clear();

  const int k = trainer.train_count();
  const long per_round = config.samples / config.rounds;
  const long remainder = config.samples % config.rounds;

  Mixture p = selector.first(trainer.observe());
  for (int t = 1; t <= config.rounds; ++t) {
    if (p.size() != k) {
      throw std::runtime_error("selector produced a mixture of size " + std::to_string(p.size()) +
                               " for " + std::to_string(k) + " train skills (round " +
                               std::to_string(t) + ")");
    }
    const LossState before = trainer.observe();
    const long budget = per_round + (t <= remainder ? 1 : 0);
    BatchAlloc batch = allocate(p, budget, t);
    trainer.step(batch);
    const LossState after = trainer.observe();

    RoundRecord rec;
    rec.round = t;
    rec.mixture = p.vec();
    rec.allocation = batch.counts;
    rec.losses_before = before.losses;
    rec.losses_after = after.losses;
    log.rounds.push_back(std::move(rec));

    if (t < config.rounds) p = selector.update(before);
  }
}

}  // namespace skillmix
