#include "skillmix/core.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <stdexcept>
#include <unordered_set>

namespace skillmix {

Setting setting_from_string(const std::string& s) {
  if (s == "continual") return Setting::kContinual;
  if (s == "fine_tune") return Setting::kFineTune;
  if (s == "out_of_domain") return Setting::kOutOfDomain;
  throw std::invalid_argument("unknown setting: " + s);
}

std::string to_string(Setting s) {
  switch (s) {
    case Setting::kContinual: return "continual";
    case Setting::kFineTune: return "fine_tune";
    case Setting::kOutOfDomain: return "out_of_domain";
  }
  return "?";
}

Mixture::Mixture(VectorXd p) : p_(std::move(p)) {
  if (p_.size() == 0) throw std::invalid_argument("mixture: empty vector");
  double sum = 0.0;
  for (Eigen::Index i = 0; i < p_.size(); ++i) {
    const double v = p_(i);
    if (!std::isfinite(v)) throw std::invalid_argument("mixture: non-finite entry");
    if (v < 0.0) throw std::invalid_argument("mixture: negative entry");
    sum += v;
  }
  if (std::abs(sum - 1.0) > 1e-9) {
    throw std::invalid_argument("mixture: entries sum to " + std::to_string(sum));
  }
}

Mixture Mixture::uniform(int k) {
  if (k <= 0) throw std::invalid_argument("mixture: k must be positive");
  return Mixture(VectorXd::Constant(k, 1.0 / k));
}

Mixture Mixture::uniform_over(int k, const std::vector<int>& support) {
  if (support.empty()) throw std::invalid_argument("mixture: empty support");
  VectorXd p = VectorXd::Zero(k);
  for (int i : support) p(i) = 1.0 / static_cast<double>(support.size());
  return Mixture(std::move(p));
}

Mixture normalize(const VectorXd& weights) {
  double sum = 0.0;
  for (Eigen::Index i = 0; i < weights.size(); ++i) {
    if (!std::isfinite(weights(i)) || weights(i) < 0.0) {
      throw std::invalid_argument("degenerate weight vector");
    }
    sum += weights(i);
  }
  if (weights.size() == 0 || sum <= 0.0) {
    throw std::invalid_argument("degenerate weight vector");
  }
  return Mixture(weights / sum);
}

VectorXd softmax(const VectorXd& logits) {
  const double shift = logits.maxCoeff();
  VectorXd e = (logits.array() - shift).exp();
  return e / e.sum();
}

VectorXi apportion_largest_remainder(const VectorXd& p, long budget) {
  const int k = static_cast<int>(p.size());
  if (budget < 0) throw std::invalid_argument("apportion: negative budget");
  VectorXi counts = VectorXi::Zero(k);
  long assigned = 0;
  std::vector<std::pair<double, int>> rem(k);
  for (int i = 0; i < k; ++i) {
    const double q = static_cast<double>(budget) * p(i);
    counts(i) = static_cast<int>(std::floor(q));
    assigned += counts(i);
    rem[i] = {q - std::floor(q), i};
  }
  // Remainders descending, ties by ascending skill index.
  std::sort(rem.begin(), rem.end(), [](const auto& a, const auto& b) {
    if (a.first != b.first) return a.first > b.first;
    return a.second < b.second;
  });
  for (long r = budget - assigned, j = 0; r > 0; --r, ++j) {
    counts(rem[static_cast<std::size_t>(j) % rem.size()].second) += 1;
  }
  return counts;
}

namespace {

void check_skill_names(const std::vector<SkillId>& skills) {
  if (skills.empty()) throw std::invalid_argument("skill set: need at least one skill");
  std::unordered_set<std::string> names;
  for (std::size_t i = 0; i < skills.size(); ++i) {
    if (skills[i].name.empty()) throw std::invalid_argument("skill set: empty skill name");
    if (skills[i].index != static_cast<int>(i)) {
      throw std::invalid_argument("skill set: index mismatch for " + skills[i].name);
    }
    if (!names.insert(skills[i].name).second) {
      throw std::invalid_argument("skill set: duplicate skill name " + skills[i].name);
    }
  }
}

}  // namespace

SkillSet::SkillSet(std::vector<SkillId> skills, std::vector<std::vector<Sample>> pools,
                   std::vector<std::vector<Sample>> validation)
    : skills_(std::move(skills)), pools_(std::move(pools)), validation_(std::move(validation)) {
  check_skill_names(skills_);
  if (pools_.size() != skills_.size() || validation_.size() != skills_.size()) {
    throw std::invalid_argument("skill set: pool count does not match skill count");
  }
  for (std::size_t i = 0; i < skills_.size(); ++i) {
    std::unordered_set<std::string> val_keys;
    for (const Sample& s : validation_[i]) val_keys.insert(s.input + "\x1f" + s.output);
    for (const Sample& s : pools_[i]) {
      if (s.output.empty()) throw std::invalid_argument("skill set: sample with empty output");
      if (val_keys.count(s.input + "\x1f" + s.output)) {
        throw std::invalid_argument("skill set: training/validation pools overlap for " +
                                    skills_[i].name);
      }
    }
  }
}

SkillSet::SkillSet(std::vector<SkillId> skills)
    : skills_(std::move(skills)), pools_(skills_.size()), validation_(skills_.size()) {
  check_skill_names(skills_);
}

SkillSet SkillSet::from_names(const std::vector<std::string>& names) {
  std::vector<SkillId> skills;
  skills.reserve(names.size());
  for (std::size_t i = 0; i < names.size(); ++i) {
    skills.push_back({static_cast<int>(i), names[i]});
  }
  return SkillSet(std::move(skills));
}

std::vector<long> SkillSet::pool_sizes() const {
  std::vector<long> sizes;
  sizes.reserve(pools_.size());
  for (const auto& p : pools_) sizes.push_back(static_cast<long>(p.size()));
  return sizes;
}

int SkillSet::find(const std::string& name) const {
  for (const auto& s : skills_) {
    if (s.name == name) return s.index;
  }
  return -1;
}

SkillsGraph::SkillsGraph(std::vector<SkillId> train_skills, std::vector<SkillId> eval_skills,
                         MatrixXd a, Setting setting)
    : train_(std::move(train_skills)), eval_(std::move(eval_skills)), a_(std::move(a)),
      setting_(setting) {
  check_skill_names(train_);
  check_skill_names(eval_);
  if (a_.rows() != static_cast<Eigen::Index>(train_.size()) ||
      a_.cols() != static_cast<Eigen::Index>(eval_.size())) {
    throw std::invalid_argument("skills graph: adjacency shape does not match skill counts");
  }
  a_ = a_.cwiseMax(0.0);
}

SkillsGraph SkillsGraph::identity(const std::vector<SkillId>& skills) {
  const int k = static_cast<int>(skills.size());
  return SkillsGraph(skills, skills, MatrixXd::Identity(k, k), Setting::kContinual);
}

SkillsGraph SkillsGraph::all_ones(const std::vector<SkillId>& skills) {
  const int k = static_cast<int>(skills.size());
  return SkillsGraph(skills, skills, MatrixXd::Ones(k, k), Setting::kContinual);
}

std::vector<std::string> SkillsGraph::validate() const {
  std::vector<std::string> report;
  if ((a_.array() < 0.0).any()) report.push_back("adjacency has negative entries");

  std::set<std::string> train_names, eval_names;
  for (const auto& s : train_) train_names.insert(s.name);
  for (const auto& s : eval_) eval_names.insert(s.name);

  switch (setting_) {
    case Setting::kContinual: {
      bool same = train_.size() == eval_.size();
      for (std::size_t i = 0; same && i < train_.size(); ++i) {
        same = train_[i].name == eval_[i].name;
      }
      if (!same) report.push_back("continual setting requires eval skills == train skills");
      break;
    }
    case Setting::kFineTune: {
      bool subset = std::includes(train_names.begin(), train_names.end(),
                                  eval_names.begin(), eval_names.end());
      if (!subset || eval_names.size() >= train_names.size()) {
        report.push_back("eval must be strict subset of train skills");
      }
      break;
    }
    case Setting::kOutOfDomain: {
      std::vector<std::string> common;
      std::set_intersection(train_names.begin(), train_names.end(), eval_names.begin(),
                            eval_names.end(), std::back_inserter(common));
      if (!common.empty()) report.push_back("train/eval overlap: " + common.front());
      break;
    }
  }
  return report;
}

double SkillsGraph::density() const {
  int off_diag = 0;
  int nonzero = 0;
  for (int i = 0; i < train_count(); ++i) {
    for (int j = 0; j < eval_count(); ++j) {
      if (train_[i].name == eval_[j].name) continue;
      ++off_diag;
      if (a_(i, j) != 0.0) ++nonzero;
    }
  }
  return off_diag == 0 ? 0.0 : static_cast<double>(nonzero) / off_diag;
}

std::string SkillsGraph::density_label(double density) {
  if (density > 0.9) return "complete";
  if (density < 0.1) return "empty";
  return "intermediate";
}

SkillsGraph SkillsGraph::with_identity() const {
  if (train_.size() != eval_.size()) {
    throw std::logic_error("no-graph ablation needs eval skills == train skills");
  }
  return SkillsGraph(train_, eval_, MatrixXd::Identity(train_count(), eval_count()), setting_);
}

void RunConfig::check() const {
  if (eta <= 0.0) throw std::invalid_argument("run config: eta must be > 0");
  if (rounds < 1) throw std::invalid_argument("run config: T must be >= 1");
  if (samples < rounds) throw std::invalid_argument("run config: n must be >= T");
  if (window < 1) throw std::invalid_argument("run config: w must be >= 1");
  if (window > rounds) throw std::invalid_argument("run config: w must be <= T");
  if (alloc != "largest_remainder" && alloc != "multinomial") {
    throw std::invalid_argument("run config: unknown alloc mode " + alloc);
  }
}

}  // namespace skillmix
