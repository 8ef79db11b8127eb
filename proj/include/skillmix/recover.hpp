#pragma once

#include "skillmix/core.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace skillmix {

/// Per-sample loss trajectories across R runs and C checkpoints per run: one
/// row per sample, R*C features. Labels are optional and only used for
/// scoring.
struct TrajectoryMatrix {
  std::vector<std::string> ids;  // N
  MatrixXd features;             // N x (R*C)
  int runs = 1;
  int checkpoints = 1;
  std::vector<int> labels;       // empty when unknown

  void check() const;
};

/// File format: first line a JSON header {"N", "R", "C", optional "labels"},
/// then N CSV rows of `id,feature,feature,...`.
std::string trajectories_to_text(const TrajectoryMatrix& traj);
TrajectoryMatrix trajectories_from_text(const std::string& text);
void write_trajectories(const TrajectoryMatrix& traj, const std::string& path);
TrajectoryMatrix read_trajectories(const std::string& path);

struct KMeansResult {
  std::vector<int> assignment;
  MatrixXd centers;  // k x F
  double inertia = 0.0;
};

/// Lloyd's algorithm with k-means++ seeding; `restarts` independent starts,
/// best inertia wins with ties going to the earlier restart. Deterministic
/// given the seed.
KMeansResult kmeans(const MatrixXd& features, int k, std::uint64_t seed, int restarts = 10,
                    int max_iters = 100);

/// Cluster the trajectory features into k groups. `zscore` standardizes each
/// feature column first (off by default; features are used raw).
std::vector<int> cluster_trajectories(const TrajectoryMatrix& traj, int k, std::uint64_t seed,
                                      int restarts = 10, bool zscore = false);

/// Maximum-total-score assignment of rows to columns of a square score
/// matrix (Hungarian method). Returns the matched column per row.
std::vector<int> max_score_assignment(const MatrixXd& score);

/// Fraction of samples whose cluster maps to their true label under the best
/// cluster-to-label bijection.
double matched_accuracy(const std::vector<int>& assignment, const std::vector<int>& labels);

}  // namespace skillmix
