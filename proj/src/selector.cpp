#include "skillmix/selector.hpp"

#include "skillmix/io.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <stdexcept>

namespace skillmix {

Mixture graph_softmax_init(const SkillsGraph& graph, double eta) {
  if (eta < 0.0) throw std::invalid_argument("eta must be >= 0");
  const VectorXd rowsums = graph.adjacency().rowwise().sum();
  return Mixture(softmax(eta * rowsums));
}

GraphWeightState::GraphWeightState(const SkillsGraph& graph, double eta, int window)
    : a_(graph.adjacency()), eta_(eta), window_(window) {
  if (eta_ <= 0.0) throw std::invalid_argument("eta must be > 0");
  if (window_ < 1) throw std::invalid_argument("window must be >= 1");
  base_logits_ = eta_ * a_.rowwise().sum();
}

void GraphWeightState::observe(const VectorXd& losses) {
  if (losses.size() != a_.cols()) {
    throw std::invalid_argument("observed losses do not match eval skill count");
  }
  for (Eigen::Index j = 0; j < losses.size(); ++j) {
    if (!std::isfinite(losses(j)) || losses(j) < 0.0) {
      throw std::invalid_argument("observed losses must be finite and nonnegative");
    }
  }
  history_.push_back(losses);
  while (static_cast<int>(history_.size()) > window_) history_.pop_front();
}

Mixture GraphWeightState::mixture() const {
  if (history_.empty()) throw std::logic_error("must observe before first update");
  VectorXd logits = base_logits_;
  for (const VectorXd& losses : history_) logits += eta_ * (a_ * losses);
  return Mixture(softmax(logits));
}

Mixture GraphWeightState::initial() const { return Mixture(softmax(base_logits_)); }

nlohmann::json GraphWeightState::state() const {
  nlohmann::json h = nlohmann::json::array();
  for (const VectorXd& losses : history_) h.push_back(vector_to_json(losses));
  return {{"history", h}};
}

void GraphWeightState::restore(const nlohmann::json& j) {
  history_.clear();
  for (const auto& row : j.at("history")) observe(vector_from_json(row));
}

Mixture graph_weight_update(GraphWeightState& state, const LossState& observed) {
  state.observe(observed.losses);
  return state.mixture();
}

Mixture proximal_step(const VectorXd& p_prev, const VectorXd& gradient, double eta) {
  if (p_prev.size() != gradient.size()) {
    throw std::invalid_argument("proximal step: dimension mismatch");
  }
  for (Eigen::Index i = 0; i < p_prev.size(); ++i) {
    if (p_prev(i) <= 0.0) {
      throw std::invalid_argument("proximal step: p_prev has zero entries, KL undefined");
    }
  }
  const VectorXd logits = p_prev.array().log().matrix() - eta * gradient;
  return Mixture(softmax(logits));
}

Mixture stratified(int k) { return Mixture::uniform(k); }

Mixture skill_stratified(const SkillsGraph& graph) {
  const int k = graph.train_count();
  if (graph.setting() == Setting::kContinual) return Mixture::uniform(k);

  std::vector<int> support;
  for (int i = 0; i < k; ++i) {
    if ((graph.adjacency().row(i).array() > 0.0).any()) support.push_back(i);
  }
  if (graph.setting() == Setting::kFineTune) {
    std::set<std::string> eval_names;
    for (const auto& e : graph.eval_skills()) eval_names.insert(e.name);
    for (int i = 0; i < k; ++i) {
      if (eval_names.count(graph.train_skills()[i].name) &&
          std::find(support.begin(), support.end(), i) == support.end()) {
        support.push_back(i);
      }
    }
    std::sort(support.begin(), support.end());
  }
  if (support.empty()) throw std::runtime_error("no prerequisite edges; graph empty");
  return Mixture::uniform_over(k, support);
}

CurriculumRound curriculum_allocate(const CurriculumState& state, int step) {
  const int k = static_cast<int>(state.scores.size());
  if (k < 1) throw std::invalid_argument("curriculum: no skills");
  if (state.epochs < 1) throw std::invalid_argument("curriculum: M must be >= 1");
  if (step < 0 || step >= state.total_steps) {
    throw std::invalid_argument("curriculum: step outside [0, H)");
  }

  // Rank skills by score, ascending for curriculum, descending for
  // anticurriculum; ties keep ascending skill index.
  std::vector<int> ranked(k);
  std::iota(ranked.begin(), ranked.end(), 0);
  std::stable_sort(ranked.begin(), ranked.end(), [&](int a, int b) {
    return state.anticurriculum ? state.scores(a) > state.scores(b)
                                : state.scores(a) < state.scores(b);
  });

  const int epoch = static_cast<int>(static_cast<long>(step) * state.epochs / state.total_steps);
  auto group_size = [&](int e) {
    if (e <= 0) return 0;
    return std::min(k, static_cast<int>((static_cast<long>(e) * k + state.epochs - 1) /
                                        state.epochs));  // ceil(e*k/M)
  };
  const int eligible_count = group_size(epoch + 1);
  const int previous_count = group_size(epoch);

  CurriculumRound out{{ranked.begin(), ranked.begin() + eligible_count}, Mixture::uniform(1)};
  VectorXd p = VectorXd::Zero(k);
  const int new_count = eligible_count - previous_count;
  if (previous_count == 0 || state.frac_previous <= 0.0 || new_count == 0) {
    for (int r = 0; r < eligible_count; ++r) p(ranked[r]) = 1.0 / eligible_count;
  } else {
    for (int r = 0; r < previous_count; ++r) p(ranked[r]) = state.frac_previous / previous_count;
    for (int r = previous_count; r < eligible_count; ++r) {
      p(ranked[r]) = (1.0 - state.frac_previous) / new_count;
    }
  }
  out.mixture = Mixture(std::move(p));
  return out;
}

RandomSelector::RandomSelector(int k, VectorXd weights)
    : mixture_(weights.size() > 0 ? normalize(weights) : Mixture::uniform(k)) {
  if (weights.size() > 0 && weights.size() != k) {
    throw std::invalid_argument("random selector: weight count does not match skills");
  }
}

CurriculumSelector::CurriculumSelector(int k, int rounds, int epochs, double frac_previous,
                                       bool anticurriculum)
    : k_(k) {
  state_.epochs = std::min(epochs, rounds);
  state_.total_steps = rounds;
  state_.frac_previous = frac_previous;
  state_.anticurriculum = anticurriculum;
}

Mixture CurriculumSelector::first(const LossState& initial) {
  if (initial.losses.size() != k_) {
    throw std::invalid_argument(
        "curriculum selector needs per-train-skill losses (continual setting)");
  }
  state_.scores = initial.losses;
  scored_ = true;
  step_ = 0;
  return curriculum_allocate(state_, 0).mixture;
}

Mixture CurriculumSelector::update(const LossState&) {
  if (!scored_) throw std::logic_error("curriculum selector: update before first");
  step_ = std::min(step_ + 1, state_.total_steps - 1);
  return curriculum_allocate(state_, step_).mixture;
}

nlohmann::json CurriculumSelector::state() const {
  nlohmann::json j;
  j["step"] = step_;
  j["scored"] = scored_;
  if (scored_) j["scores"] = vector_to_json(state_.scores);
  return j;
}

void CurriculumSelector::restore(const nlohmann::json& j) {
  step_ = j.at("step").get<int>();
  scored_ = j.at("scored").get<bool>();
  if (scored_) state_.scores = vector_from_json(j.at("scores"));
}

SkillItSelector::SkillItSelector(const SkillsGraph& graph, double eta, int window,
                                 SkillItOptions opts)
    : state_(opts.no_graph ? graph.with_identity() : graph, eta, window), opts_(opts) {}

Mixture SkillItSelector::first(const LossState&) { return state_.initial(); }

Mixture SkillItSelector::update(const LossState& observed) {
  if (opts_.static_mixture) {
    state_.observe(observed.losses);  // keep the window current for resume
    return state_.initial();
  }
  return graph_weight_update(state_, observed);
}

nlohmann::json SkillItSelector::state() const { return state_.state(); }

void SkillItSelector::restore(const nlohmann::json& j) { state_.restore(j); }

std::unique_ptr<Selector> make_selector(const SelectorOptions& opts, const SkillsGraph* graph,
                                        int k, int rounds, double eta, int window,
                                        const std::vector<long>& pool_sizes) {
  if (opts.kind == "random") {
    VectorXd w = opts.weights;
    if (w.size() == 0 && !pool_sizes.empty()) {
      w.resize(static_cast<Eigen::Index>(pool_sizes.size()));
      for (std::size_t i = 0; i < pool_sizes.size(); ++i) {
        w(static_cast<Eigen::Index>(i)) = static_cast<double>(pool_sizes[i]);
      }
      if (w.sum() <= 0.0) w.resize(0);  // empty pools: fall back to uniform
    }
    return std::make_unique<RandomSelector>(k, std::move(w));
  }
  if (opts.kind == "stratified") return std::make_unique<StratifiedSelector>(k);
  if (opts.kind == "skill_stratified") {
    if (graph == nullptr) throw std::invalid_argument("skill_stratified needs a graph");
    return std::make_unique<SkillStratifiedSelector>(*graph);
  }
  if (opts.kind == "curriculum" || opts.kind == "anticurriculum") {
    return std::make_unique<CurriculumSelector>(k, rounds, opts.epochs, opts.frac_previous,
                                                opts.kind == "anticurriculum");
  }
  if (opts.kind == "skillit") {
    if (graph == nullptr) throw std::invalid_argument("skillit needs a graph");
    return std::make_unique<SkillItSelector>(
        *graph, eta, window, SkillItOptions{opts.no_graph, opts.static_mixture});
  }
  throw std::invalid_argument("unknown selector kind: " + opts.kind);
}

}  // namespace skillmix
