#include "skillmix/recover.hpp"

#include "skillmix/io.hpp"
#include "skillmix/rng.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace skillmix {

void TrajectoryMatrix::check() const {
  if (runs < 1 || checkpoints < 1) {
    throw std::invalid_argument("trajectories: need R >= 1 and C >= 1");
  }
  if (features.rows() < 1) throw std::invalid_argument("trajectories: no samples");
  if (features.cols() != static_cast<Eigen::Index>(runs) * checkpoints) {
    throw std::invalid_argument("trajectories: feature width must be R*C");
  }
  if (!ids.empty() && static_cast<Eigen::Index>(ids.size()) != features.rows()) {
    throw std::invalid_argument("trajectories: id count mismatch");
  }
  if (!labels.empty() && static_cast<Eigen::Index>(labels.size()) != features.rows()) {
    throw std::invalid_argument("trajectories: label count mismatch");
  }
  if (!features.allFinite()) throw std::invalid_argument("trajectories: missing or non-finite entries");
}

std::string trajectories_to_text(const TrajectoryMatrix& traj) {
  traj.check();
  nlohmann::json header;
  header["N"] = traj.features.rows();
  header["R"] = traj.runs;
  header["C"] = traj.checkpoints;
  if (!traj.labels.empty()) header["labels"] = traj.labels;

  std::ostringstream out;
  out << header.dump() << "\n";
  for (Eigen::Index i = 0; i < traj.features.rows(); ++i) {
    out << (traj.ids.empty() ? "s" + std::to_string(i) : traj.ids[i]);
    for (Eigen::Index f = 0; f < traj.features.cols(); ++f) {
      out << "," << format_double(traj.features(i, f));
    }
    out << "\n";
  }
  return out.str();
}

TrajectoryMatrix trajectories_from_text(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("trajectory file: empty");
  const nlohmann::json header = nlohmann::json::parse(line);

  TrajectoryMatrix traj;
  const Eigen::Index n = header.at("N").get<Eigen::Index>();
  traj.runs = header.at("R").get<int>();
  traj.checkpoints = header.at("C").get<int>();
  if (header.contains("labels")) traj.labels = header.at("labels").get<std::vector<int>>();

  traj.features.resize(n, static_cast<Eigen::Index>(traj.runs) * traj.checkpoints);
  Eigen::Index row = 0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    if (row >= n) throw std::runtime_error("trajectory file: more rows than header N");
    std::istringstream cells(line);
    std::string cell;
    if (!std::getline(cells, cell, ',')) throw std::runtime_error("trajectory file: bad row");
    traj.ids.push_back(cell);
    for (Eigen::Index f = 0; f < traj.features.cols(); ++f) {
      if (!std::getline(cells, cell, ',')) {
        throw std::runtime_error("trajectory file: short row " + std::to_string(row));
      }
      traj.features(row, f) = std::stod(cell);
    }
    ++row;
  }
  if (row != n) throw std::runtime_error("trajectory file: fewer rows than header N");
  traj.check();
  return traj;
}

void write_trajectories(const TrajectoryMatrix& traj, const std::string& path) {
  write_text_file(path, trajectories_to_text(traj));
}

TrajectoryMatrix read_trajectories(const std::string& path) {
  return trajectories_from_text(read_text_file(path));
}

namespace {

// Squared distances from every row of `x` to `center`.
VectorXd sq_dist_to(const MatrixXd& x, const Eigen::RowVectorXd& center) {
  return (x.rowwise() - center).rowwise().squaredNorm();
}

MatrixXd kmeanspp_init(const MatrixXd& x, int k, RngStream& rng) {
  const Eigen::Index n = x.rows();
  MatrixXd centers(k, x.cols());
  centers.row(0) = x.row(static_cast<Eigen::Index>(rng.below(n)));
  VectorXd best = sq_dist_to(x, centers.row(0));
  for (int c = 1; c < k; ++c) {
    const double total = best.sum();
    Eigen::Index pick = 0;
    if (total > 0.0) {
      // D^2 sampling: walk the cumulative weights to a uniform draw.
      const double target = rng.uniform01() * total;
      double acc = 0.0;
      pick = n - 1;
      for (Eigen::Index i = 0; i < n; ++i) {
        acc += best(i);
        if (acc >= target && best(i) > 0.0) {
          pick = i;
          break;
        }
      }
    } else {
      pick = static_cast<Eigen::Index>(rng.below(n));
    }
    centers.row(c) = x.row(pick);
    best = best.cwiseMin(sq_dist_to(x, centers.row(c)));
  }
  return centers;
}

double lloyd(const MatrixXd& x, MatrixXd& centers, std::vector<int>& assignment, int max_iters) {
  const Eigen::Index n = x.rows();
  const int k = static_cast<int>(centers.rows());
  assignment.assign(n, 0);

  for (int iter = 0; iter < max_iters; ++iter) {
    bool changed = false;
    for (Eigen::Index i = 0; i < n; ++i) {
      int best_c = 0;
      double best_d = std::numeric_limits<double>::infinity();
      for (int c = 0; c < k; ++c) {
        const double d = (x.row(i) - centers.row(c)).squaredNorm();
        if (d < best_d) {
          best_d = d;
          best_c = c;
        }
      }
      if (assignment[i] != best_c) {
        assignment[i] = best_c;
        changed = true;
      }
    }
    if (!changed && iter > 0) break;

    MatrixXd sums = MatrixXd::Zero(k, x.cols());
    std::vector<Eigen::Index> counts(k, 0);
    for (Eigen::Index i = 0; i < n; ++i) {
      sums.row(assignment[i]) += x.row(i);
      ++counts[assignment[i]];
    }
    for (int c = 0; c < k; ++c) {
      if (counts[c] > 0) {
        centers.row(c) = sums.row(c) / static_cast<double>(counts[c]);
      } else {
        // Empty cluster: reseat at the point farthest from its center.
        Eigen::Index far = 0;
        double far_d = -1.0;
        for (Eigen::Index i = 0; i < n; ++i) {
          const double d = (x.row(i) - centers.row(assignment[i])).squaredNorm();
          if (d > far_d) {
            far_d = d;
            far = i;
          }
        }
        centers.row(c) = x.row(far);
      }
    }
  }

  double inertia = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    inertia += (x.row(i) - centers.row(assignment[i])).squaredNorm();
  }
  return inertia;
}

}  // namespace

KMeansResult kmeans(const MatrixXd& features, int k, std::uint64_t seed, int restarts,
                    int max_iters) {
  if (k < 1) throw std::invalid_argument("kmeans: k must be >= 1");
  if (features.rows() < k) throw std::invalid_argument("kmeans: k exceeds sample count");
  if (restarts < 1) throw std::invalid_argument("kmeans: need at least one restart");

  KMeansResult best;
  best.inertia = std::numeric_limits<double>::infinity();
  for (int r = 0; r < restarts; ++r) {
    RngStream rng(derive_seed(seed, r));
    MatrixXd centers = kmeanspp_init(features, k, rng);
    std::vector<int> assignment;
    const double inertia = lloyd(features, centers, assignment, max_iters);
    if (inertia < best.inertia) {  // ties keep the earlier restart
      best.inertia = inertia;
      best.centers = std::move(centers);
      best.assignment = std::move(assignment);
    }
  }
  return best;
}

std::vector<int> cluster_trajectories(const TrajectoryMatrix& traj, int k, std::uint64_t seed,
                                      int restarts, bool zscore) {
  traj.check();
  if (k > traj.features.rows()) throw std::invalid_argument("cluster: k exceeds sample count");
  MatrixXd x = traj.features;
  if (zscore) {
    for (Eigen::Index f = 0; f < x.cols(); ++f) {
      const double mean = x.col(f).mean();
      const double var = (x.col(f).array() - mean).square().sum() / x.rows();
      const double sd = std::sqrt(var);
      x.col(f) = (x.col(f).array() - mean) / (sd > 0.0 ? sd : 1.0);
    }
  }
  return kmeans(x, k, seed, restarts).assignment;
}

std::vector<int> max_score_assignment(const MatrixXd& score) {
  if (score.rows() != score.cols()) {
    throw std::invalid_argument("assignment: score matrix must be square");
  }
  const int n = static_cast<int>(score.rows());
  // Hungarian algorithm with potentials on the minimization form.
  MatrixXd cost = -score;
  const double kInf = std::numeric_limits<double>::infinity();
  std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0);
  std::vector<int> match(n + 1, 0);  // match[col 1..n] = row, 0 = free
  std::vector<int> way(n + 1, 0);

  for (int i = 1; i <= n; ++i) {
    match[0] = i;
    int j0 = 0;
    std::vector<double> minv(n + 1, kInf);
    std::vector<char> used(n + 1, false);
    do {
      used[j0] = true;
      const int i0 = match[j0];
      double delta = kInf;
      int j1 = 0;
      for (int j = 1; j <= n; ++j) {
        if (used[j]) continue;
        const double cur = cost(i0 - 1, j - 1) - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (int j = 0; j <= n; ++j) {
        if (used[j]) {
          u[match[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (match[j0] != 0);
    do {
      const int j1 = way[j0];
      match[j0] = match[j1];
      j0 = j1;
    } while (j0 != 0);
  }

  std::vector<int> row_to_col(n, -1);
  for (int j = 1; j <= n; ++j) {
    if (match[j] > 0) row_to_col[match[j] - 1] = j - 1;
  }
  return row_to_col;
}

double matched_accuracy(const std::vector<int>& assignment, const std::vector<int>& labels) {
  if (assignment.size() != labels.size()) {
    throw std::invalid_argument("matched accuracy: length mismatch");
  }
  if (assignment.empty()) throw std::invalid_argument("matched accuracy: empty input");
  int k = 0;
  for (std::size_t i = 0; i < assignment.size(); ++i) {
    if (assignment[i] < 0 || labels[i] < 0) {
      throw std::invalid_argument("matched accuracy: negative ids");
    }
    k = std::max({k, assignment[i] + 1, labels[i] + 1});
  }
  MatrixXd contingency = MatrixXd::Zero(k, k);
  for (std::size_t i = 0; i < assignment.size(); ++i) {
    contingency(assignment[i], labels[i]) += 1.0;
  }
  const auto match = max_score_assignment(contingency);
  double hits = 0.0;
  for (int c = 0; c < k; ++c) hits += contingency(c, match[c]);
  return hits / static_cast<double>(assignment.size());
}

}  // namespace skillmix
