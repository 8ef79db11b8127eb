#pragma once

#include "skillmix/trainer.hpp"

#include <string>
#include <vector>

namespace skillmix {

/// Adapter for a real training process. The child speaks one JSON object per
/// round in each direction over stdin/stdout:
///   request  {"round": t, "allocation": {"skill": count, ...}}
///   response {"round": t, "losses": {"eval_skill": value, ...}}
/// Round 0 with an empty allocation probes the initial losses. A timeout,
/// EOF, or malformed response aborts the run.
class ExternalTrainer : public Trainer {
 public:
  ExternalTrainer(std::vector<std::string> command, std::vector<std::string> train_names,
                  std::vector<std::string> eval_names, long timeout_ms = 30000);
  ~ExternalTrainer() override;

  ExternalTrainer(const ExternalTrainer&) = delete;
  ExternalTrainer& operator=(const ExternalTrainer&) = delete;

  void reset() override;
  LossState observe() override;
  void step(const BatchAlloc& batch) override;
  std::unique_ptr<TrainerSnapshot> snapshot() const override;
  void restore(const TrainerSnapshot&) override;
  int train_count() const override { return static_cast<int>(train_names_.size()); }
  int eval_count() const override { return static_cast<int>(eval_names_.size()); }

 private:
  void spawn();
  void shutdown();
  VectorXd exchange(int round, const VectorXi& counts);
  std::string read_line_with_deadline();

  std::vector<std::string> command_;
  std::vector<std::string> train_names_;
  std::vector<std::string> eval_names_;
  long timeout_ms_;

  int child_pid_ = -1;
  int to_child_ = -1;
  int from_child_ = -1;
  std::string read_buffer_;

  VectorXd observed_;
  bool observed_ready_ = false;
  int round_ = 0;
};

}  // namespace skillmix
