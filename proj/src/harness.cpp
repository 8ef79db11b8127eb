#include "skillmix/harness.hpp"

#include "skillmix/external_trainer.hpp"
#include "skillmix/io.hpp"
#include "skillmix/selector.hpp"

#include <algorithm>
#include <cctype>
#include <filesystem>
#include <numeric>
#include <set>
#include <sstream>
#include <stdexcept>

namespace skillmix {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

json matrix_to_json(const MatrixXd& m) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(row);
  }
  return rows;
}

MatrixXd matrix_from_json(const json& j) {
  if (j.empty()) return {};
  MatrixXd m(j.size(), j[0].size());
  for (std::size_t i = 0; i < j.size(); ++i) {
    for (std::size_t c = 0; c < j[i].size(); ++c) {
      m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(c)) = j[i][c].get<double>();
    }
  }
  return m;
}

json graph_learn_config_to_json(const GraphLearnConfig& c) {
  json j;
  j["steps"] = c.steps;
  j["probe_steps"] = c.probe_steps;
  j["threshold_loss"] = c.threshold_loss;
  j["scheme"] = c.scheme == WeightScheme::kBinaryHalf ? "binary_half" : "raw_delta";
  j["compare"] = c.compare == CompareMode::kStepsToThreshold ? "steps_to_threshold" : "delta";
  j["batch_size"] = c.batch_size;
  j["parallelism"] = c.parallelism;
  j["seed"] = c.seed;
  return j;
}

GraphLearnConfig graph_learn_config_from_json(const json& j) {
  GraphLearnConfig c;
  c.steps = j.value("steps", c.steps);
  c.probe_steps = j.value("probe_steps", c.probe_steps);
  c.threshold_loss = j.value("threshold_loss", c.threshold_loss);
  if (j.contains("scheme")) c.scheme = weight_scheme_from_string(j.at("scheme"));
  if (j.contains("compare")) c.compare = compare_mode_from_string(j.at("compare"));
  c.batch_size = j.value("batch_size", c.batch_size);
  c.parallelism = j.value("parallelism", c.parallelism);
  c.seed = j.value("seed", c.seed);
  return c;
}

}  // namespace

json experiment_to_json(const ExperimentSpec& spec) {
  json j;
  j["seed"] = spec.seed;
  j["output_dir"] = spec.output_dir;
  j["setting"] = to_string(spec.setting);
  if (!spec.train_names.empty()) j["train_skills"] = spec.train_names;
  if (!spec.eval_names.empty()) j["eval_skills"] = spec.eval_names;

  json ds;
  ds["kind"] = spec.dataset.kind;
  if (spec.dataset.kind == "jsonl") ds["path"] = spec.dataset.path;
  if (spec.dataset.kind == "lego") {
    ds["k"] = spec.dataset.lego.k;
    if (!spec.dataset.lego.parents.empty()) ds["parents"] = spec.dataset.lego.parents;
    ds["alphabet"] = spec.dataset.lego.alphabet;
    ds["seed"] = spec.dataset.lego.seed;
  }
  if (spec.dataset.kind == "addition") {
    ds["digits"] = spec.dataset.addition.digits;
    ds["seed"] = spec.dataset.addition.seed;
  }
  if (!spec.dataset.counts.empty()) ds["counts"] = spec.dataset.counts;
  if (spec.dataset.val_per_skill > 0) ds["val_per_skill"] = spec.dataset.val_per_skill;
  j["dataset"] = ds;

  json g;
  g["source"] = spec.graph.source;
  if (spec.graph.source == "csv") g["path"] = spec.graph.path;
  if (spec.graph.source == "learn_bruteforce" || spec.graph.source == "learn_approximate") {
    g["learn"] = graph_learn_config_to_json(spec.graph.learn);
  }
  j["graph"] = g;

  json tr;
  tr["kind"] = spec.trainer.kind;
  if (spec.trainer.kind == "sim") {
    if (!spec.trainer.a_true_csv.empty()) {
      tr["a_true_csv"] = spec.trainer.a_true_csv;
    } else {
      tr["a_true"] = matrix_to_json(spec.trainer.a_true);
    }
    tr["initial_losses"] = vector_to_json(spec.trainer.initial_losses);
    tr["noise_sigma"] = spec.trainer.noise_sigma;
  } else {
    tr["command"] = spec.trainer.command;
    tr["timeout_ms"] = spec.trainer.timeout_ms;
  }
  j["trainer"] = tr;

  json sels = json::array();
  for (const auto& cfg : spec.selectors) sels.push_back(run_config_to_json(cfg));
  j["selectors"] = sels;
  return j;
}

ExperimentSpec experiment_from_json(const json& j) {
  ExperimentSpec spec;
  if (j.contains("seed")) {
    spec.seed = j.at("seed").get<std::uint64_t>();
    spec.seed_set = true;
  }
  spec.output_dir = j.value("output_dir", spec.output_dir);
  spec.setting = setting_from_string(j.value("setting", "continual"));
  if (j.contains("train_skills")) spec.train_names = j.at("train_skills").get<std::vector<std::string>>();
  if (j.contains("eval_skills")) spec.eval_names = j.at("eval_skills").get<std::vector<std::string>>();

  if (j.contains("dataset")) {
    const json& ds = j.at("dataset");
    spec.dataset.kind = ds.value("kind", "none");
    spec.dataset.path = ds.value("path", "");
    spec.dataset.val_per_skill = ds.value("val_per_skill", 0);
    if (ds.contains("counts")) spec.dataset.counts = ds.at("counts").get<std::vector<long>>();
    if (spec.dataset.kind == "lego") {
      spec.dataset.lego.k = ds.value("k", spec.dataset.lego.k);
      if (ds.contains("parents")) spec.dataset.lego.parents = ds.at("parents").get<std::vector<int>>();
      spec.dataset.lego.alphabet = ds.value("alphabet", spec.dataset.lego.alphabet);
      spec.dataset.lego.seed = ds.value("seed", spec.dataset.lego.seed);
    }
    if (spec.dataset.kind == "addition") {
      spec.dataset.addition.digits = ds.value("digits", spec.dataset.addition.digits);
      spec.dataset.addition.seed = ds.value("seed", spec.dataset.addition.seed);
    }
  }

  if (j.contains("graph")) {
    const json& g = j.at("graph");
    spec.graph.source = g.value("source", "identity");
    spec.graph.path = g.value("path", "");
    if (g.contains("learn")) spec.graph.learn = graph_learn_config_from_json(g.at("learn"));
  }

  if (j.contains("trainer")) {
    const json& tr = j.at("trainer");
    spec.trainer.kind = tr.value("kind", "sim");
    if (tr.contains("a_true")) spec.trainer.a_true = matrix_from_json(tr.at("a_true"));
    spec.trainer.a_true_csv = tr.value("a_true_csv", "");
    if (tr.contains("initial_losses")) {
      spec.trainer.initial_losses = vector_from_json(tr.at("initial_losses"));
    }
    spec.trainer.noise_sigma = tr.value("noise_sigma", 0.0);
    if (tr.contains("command")) spec.trainer.command = tr.at("command").get<std::vector<std::string>>();
    spec.trainer.timeout_ms = tr.value("timeout_ms", spec.trainer.timeout_ms);
  }

  if (j.contains("selectors")) {
    for (const auto& s : j.at("selectors")) spec.selectors.push_back(run_config_from_json(s));
  }
  return spec;
}

// -- Allocation ---------------------------------------------------------------

VectorXi allocate_counts(const Mixture& p, long budget, const std::vector<long>& pool_sizes) {
  const int k = p.size();
  if (budget < 0) throw std::invalid_argument("allocate: negative budget");
  if (pool_sizes.empty()) return apportion_largest_remainder(p.vec(), budget);
  if (static_cast<int>(pool_sizes.size()) != k) {
    throw std::invalid_argument("allocate: pool count does not match mixture");
  }

  VectorXi counts = VectorXi::Zero(k);
  std::vector<long> capacity = pool_sizes;
  std::vector<int> active(k);
  std::iota(active.begin(), active.end(), 0);
  long want = budget;

  while (want > 0) {
    active.erase(std::remove_if(active.begin(), active.end(),
                                [&](int i) { return capacity[i] <= 0; }),
                 active.end());
    if (active.empty()) throw std::runtime_error("insufficient data");

    VectorXd sub = VectorXd::Zero(active.size());
    double mass = 0.0;
    for (std::size_t a = 0; a < active.size(); ++a) {
      sub(static_cast<Eigen::Index>(a)) = p[active[a]];
      mass += p[active[a]];
    }
    if (mass > 0.0) {
      sub /= mass;
    } else {
      sub.setConstant(1.0 / static_cast<double>(active.size()));
    }

    const VectorXi add = apportion_largest_remainder(sub, want);
    for (std::size_t a = 0; a < active.size(); ++a) {
      const int i = active[a];
      const long take = std::min<long>(add(static_cast<Eigen::Index>(a)), capacity[i]);
      counts(i) += static_cast<int>(take);
      capacity[i] -= take;
      want -= take;
    }
  }
  return counts;
}

VectorXi allocate_counts_multinomial(const Mixture& p, long budget,
                                     const std::vector<long>& pool_sizes, RngStream& rng) {
  const int k = p.size();
  VectorXi counts = VectorXi::Zero(k);
  std::vector<long> capacity =
      pool_sizes.empty() ? std::vector<long>(k, budget) : pool_sizes;
  if (static_cast<int>(capacity.size()) != k) {
    throw std::invalid_argument("allocate: pool count does not match mixture");
  }
  for (long s = 0; s < budget; ++s) {
    // Draw a skill from the mixture restricted to non-exhausted pools.
    double mass = 0.0;
    for (int i = 0; i < k; ++i) {
      if (counts(i) < capacity[i]) mass += p[i];
    }
    const bool uniform_fallback = mass <= 0.0;
    double n_active = 0;
    for (int i = 0; i < k; ++i) {
      if (counts(i) < capacity[i]) n_active += 1.0;
    }
    if (n_active == 0) throw std::runtime_error("insufficient data");
    double target = rng.uniform01() * (uniform_fallback ? n_active : mass);
    double acc = 0.0;
    int pick = -1;
    for (int i = 0; i < k; ++i) {
      if (counts(i) >= capacity[i]) continue;
      acc += uniform_fallback ? 1.0 : p[i];
      pick = i;
      if (acc >= target && (uniform_fallback || p[i] > 0.0)) break;
    }
    if (pick < 0) throw std::runtime_error("insufficient data");
    counts(pick) += 1;
  }
  return counts;
}

std::vector<std::vector<int>> draw_without_replacement(const VectorXi& counts,
                                                       const SkillSet& pools, RngStream& rng) {
  std::vector<std::vector<int>> drawn(pools.size());
  for (int i = 0; i < pools.size(); ++i) {
    const int want = counts(i);
    if (want == 0) continue;
    if (want > static_cast<int>(pools.pool(i).size())) {
      throw std::runtime_error("insufficient data");
    }
    // Partial Fisher-Yates: the first `want` entries are a uniform draw
    // without replacement.
    std::vector<int> deck(pools.pool(i).size());
    std::iota(deck.begin(), deck.end(), 0);
    for (int d = 0; d < want; ++d) {
      const std::size_t pick = d + rng.below(deck.size() - d);
      std::swap(deck[d], deck[pick]);
      drawn[i].push_back(deck[d]);
    }
  }
  return drawn;
}

DrawnAllocation allocate_samples(const Mixture& p, long budget, const SkillSet& pools,
                                 RngStream& rng) {
  DrawnAllocation out;
  out.counts = allocate_counts(p, budget, pools.pool_sizes());
  out.sample_indices = draw_without_replacement(out.counts, pools, rng);
  return out;
}

// -- Experiment orchestration -------------------------------------------------

namespace {

std::vector<SkillId> ids_from(const std::vector<std::string>& names) {
  std::vector<SkillId> ids;
  for (std::size_t i = 0; i < names.size(); ++i) ids.push_back({static_cast<int>(i), names[i]});
  return ids;
}

std::optional<SkillSet> build_dataset(const ExperimentSpec& spec) {
  const DatasetSpec& ds = spec.dataset;
  if (ds.kind == "none") return std::nullopt;
  if (ds.kind == "jsonl") return read_samples_jsonl(ds.path, ds.val_per_skill);

  std::vector<Sample> samples;
  std::vector<std::string> names;
  std::vector<long> counts = ds.counts;
  if (ds.kind == "lego") {
    LegoSpec lego = ds.lego;
    names = lego.skill_names();
    if (counts.empty()) counts.assign(names.size(), 100);
    samples = gen_lego(lego, counts);
  } else if (ds.kind == "addition") {
    AdditionSpec add = ds.addition;
    names = add.skill_names();
    if (counts.empty()) counts.assign(names.size(), 100);
    samples = gen_addition(add, counts);
  } else {
    throw std::invalid_argument("unknown dataset kind: " + ds.kind);
  }

  // Held-out pool first, then the training pool, skipping exact duplicates of
  // validation samples so the pools stay disjoint.
  std::vector<std::vector<Sample>> pools(names.size()), validation(names.size());
  std::vector<std::set<std::string>> val_keys(names.size());
  for (const Sample& s : samples) {
    auto key = s.input + "\x1f" + s.output;
    if (static_cast<int>(validation[s.skill].size()) < ds.val_per_skill) {
      validation[s.skill].push_back(s);
      val_keys[s.skill].insert(key);
    } else if (!val_keys[s.skill].count(key)) {
      pools[s.skill].push_back(s);
    }
  }
  return SkillSet(ids_from(names), std::move(pools), std::move(validation));
}

// Ground truth for the simulated trainer. Accepts a k x m matrix directly,
// or a full k x k train-by-train matrix when every eval skill is a train
// skill (fine-tuning); the eval columns are then sliced out by name.
MatrixXd load_a_true(const TrainerSpec& tr, const std::vector<std::string>& train_names,
                     const std::vector<std::string>& eval_names) {
  const int k = static_cast<int>(train_names.size());
  const int m = static_cast<int>(eval_names.size());
  MatrixXd a = tr.a_true;
  if (!tr.a_true_csv.empty()) {
    a = read_adjacency_csv(tr.a_true_csv, Setting::kContinual).adjacency();
  }
  if (a.size() == 0) throw std::invalid_argument("sim trainer: a_true required");
  if (a.rows() != k) throw std::invalid_argument("sim trainer: a_true rows must be train skills");
  if (a.cols() == m) return SimDynamics::scale_to_unit(std::move(a));
  if (a.cols() == k) {
    MatrixXd sliced(k, m);
    for (int j = 0; j < m; ++j) {
      const auto it = std::find(train_names.begin(), train_names.end(), eval_names[j]);
      if (it == train_names.end()) {
        throw std::invalid_argument("sim trainer: k x k a_true needs eval skills within train "
                                    "skills (missing " + eval_names[j] + ")");
      }
      sliced.col(j) = a.col(it - train_names.begin());
    }
    return SimDynamics::scale_to_unit(std::move(sliced));
  }
  throw std::invalid_argument("sim trainer: a_true shape does not match skills");
}

TrainerFactory sim_or_external_factory(const ExperimentSpec& spec,
                                       const std::vector<std::string>& train_names,
                                       const std::vector<std::string>& eval_names) {
  const int m = static_cast<int>(eval_names.size());
  if (spec.trainer.kind == "sim") {
    SimDynamics base;
    base.a_true = load_a_true(spec.trainer, train_names, eval_names);
    base.initial_losses = spec.trainer.initial_losses.size() == m ? spec.trainer.initial_losses
                                                                  : VectorXd::Ones(m);
    base.noise_sigma = spec.trainer.noise_sigma;
    return [base](std::uint64_t stream) -> std::unique_ptr<Trainer> {
      SimDynamics dyn = base;
      dyn.seed = stream;
      return std::make_unique<SimTrainer>(std::move(dyn));
    };
  }
  if (spec.trainer.kind == "external") {
    const TrainerSpec tr = spec.trainer;
    return [tr, train_names, eval_names](std::uint64_t) -> std::unique_ptr<Trainer> {
      return std::make_unique<ExternalTrainer>(tr.command, train_names, eval_names,
                                               tr.timeout_ms);
    };
  }
  throw std::invalid_argument("unknown trainer kind: " + spec.trainer.kind);
}

}  // namespace

ResolvedContext resolve_context(const ExperimentSpec& spec) {
  ResolvedContext ctx;
  ctx.dataset = build_dataset(spec);

  // Explicit spec names > dataset skills > s1..sk from the trainer matrix.
  ctx.train_names = spec.train_names;
  if (ctx.train_names.empty() && ctx.dataset) {
    for (const auto& s : ctx.dataset->skills()) ctx.train_names.push_back(s.name);
  }
  if (ctx.train_names.empty()) {
    const Eigen::Index k = spec.trainer.a_true.rows();
    for (Eigen::Index i = 0; i < k; ++i) ctx.train_names.push_back("s" + std::to_string(i + 1));
  }
  if (ctx.train_names.empty()) throw std::invalid_argument("experiment: cannot resolve skills");
  ctx.eval_names = spec.eval_names;
  if (ctx.eval_names.empty()) {
    if (spec.setting != Setting::kContinual) {
      throw std::invalid_argument("experiment: eval_skills required outside the continual setting");
    }
    ctx.eval_names = ctx.train_names;
  }
  return ctx;
}

TrainerFactory make_trainer_factory(const ExperimentSpec& spec, const ResolvedContext& ctx) {
  return sim_or_external_factory(spec, ctx.train_names, ctx.eval_names);
}

GraphLearnResult build_graph(const ExperimentSpec& spec, const ResolvedContext& ctx) {
  const int k = static_cast<int>(ctx.train_names.size());
  const int m = static_cast<int>(ctx.eval_names.size());
  const auto train_ids = ids_from(ctx.train_names);
  const auto eval_ids = ids_from(ctx.eval_names);

  GraphLearnResult out;
  if (spec.graph.source == "identity" || spec.graph.source == "all_ones") {
    if (ctx.train_names != ctx.eval_names) {
      throw std::invalid_argument(spec.graph.source + " graph needs eval skills == train skills");
    }
    out.graph = spec.graph.source == "identity" ? SkillsGraph::identity(train_ids)
                                                : SkillsGraph::all_ones(train_ids);
    return out;
  }
  if (spec.graph.source == "csv") {
    out.graph = read_adjacency_csv(spec.graph.path, spec.setting);
    return out;
  }
  if (spec.graph.source != "learn_bruteforce" && spec.graph.source != "learn_approximate") {
    throw std::invalid_argument("unknown graph source: " + spec.graph.source);
  }

  GraphLearnConfig learn = spec.graph.learn;
  if (learn.seed == 0) learn.seed = derive_seed(spec.seed, 0x9b0be5);
  if (spec.graph.source == "learn_bruteforce") {
    // Pairwise probes observe losses on every train skill, so the probe
    // trainers run in a train-by-train configuration even when the
    // experiment evaluates a subset.
    const TrainerFactory probe_factory =
        sim_or_external_factory(spec, ctx.train_names, ctx.train_names);
    out = learn_graph_bruteforce(SkillSet::from_names(ctx.train_names), probe_factory, learn);
    if (out.graph && spec.setting == Setting::kFineTune) {
      // Keep only the target columns of the full pairwise graph.
      MatrixXd a(k, m);
      for (int j = 0; j < m; ++j) {
        int col = -1;
        for (int c = 0; c < k; ++c) {
          if (ctx.train_names[c] == ctx.eval_names[j]) col = c;
        }
        if (col < 0) throw std::invalid_argument("fine_tune eval skill missing from train set");
        a.col(j) = out.graph->adjacency().col(col);
      }
      out.graph = SkillsGraph(train_ids, eval_ids, std::move(a), Setting::kFineTune);
    }
  } else {
    out = learn_graph_approximate(train_ids, eval_ids, spec.setting,
                                  make_trainer_factory(spec, ctx), learn);
  }
  return out;
}

ExperimentResult run_experiment(const ExperimentSpec& spec) {
  if (spec.selectors.empty()) throw std::invalid_argument("experiment: selector list empty");
  if (!spec.seed_set) throw std::invalid_argument("experiment: seed required");

  ResolvedContext ctx = resolve_context(spec);
  ExperimentResult result;
  result.train_names = ctx.train_names;
  result.eval_names = ctx.eval_names;

  const int k = static_cast<int>(result.train_names.size());
  const auto make_trainer = make_trainer_factory(spec, ctx);

  GraphLearnResult learned = build_graph(spec, ctx);
  result.probes = learned.probes;
  if (!learned.graph) throw std::runtime_error("graph learning failed; see probe log");
  result.graph = learned.graph;
  result.dataset = std::move(ctx.dataset);

  const auto violations = result.graph->validate();
  if (!violations.empty()) {
    throw std::invalid_argument("graph violates its setting: " + violations.front());
  }
  for (int i = 0; i < result.graph->train_count(); ++i) {
    if (i >= k || result.graph->train_skills()[i].name != result.train_names[i]) {
      throw std::invalid_argument("graph train skills do not match the experiment train skills");
    }
  }
  if (result.graph->train_count() != k) {
    throw std::invalid_argument("graph train skills do not match the experiment train skills");
  }

  // One run per selector.
  const std::vector<long> pool_sizes =
      result.dataset ? result.dataset->pool_sizes() : std::vector<long>{};
  for (std::size_t s = 0; s < spec.selectors.size(); ++s) {
    RunConfig cfg = spec.selectors[s];
    if (cfg.label.empty()) cfg.label = cfg.selector.kind + "-" + std::to_string(s);
    for (char& c : cfg.label) {  // labels become file names
      if (!std::isalnum(static_cast<unsigned char>(c)) && c != '-' && c != '_' && c != '.') {
        c = '_';
      }
    }
    if (cfg.seed == 0) cfg.seed = derive_seed(spec.seed, 0x5e1ec7, s);

    SelectorOutcome outcome;
    outcome.label = cfg.label;
    outcome.log.config = cfg;
    try {
      auto selector = make_selector(cfg.selector, &*result.graph, k, cfg.rounds, cfg.eta,
                                    cfg.window, pool_sizes);
      auto trainer = make_trainer(spec.seed);

      Allocator allocator;
      const bool multinomial = cfg.alloc == "multinomial";
      if (result.dataset) {
        auto rng = std::make_shared<RngStream>(derive_seed(cfg.seed, 0xa110c));
        const SkillSet& pools = *result.dataset;
        allocator = [&pools, rng, multinomial](const Mixture& p, long budget, int) {
          VectorXi counts = multinomial
                                ? allocate_counts_multinomial(p, budget, pools.pool_sizes(), *rng)
                                : allocate_counts(p, budget, pools.pool_sizes());
          return BatchAlloc{std::move(counts), p.vec()};
        };
      } else if (multinomial) {
        auto rng = std::make_shared<RngStream>(derive_seed(cfg.seed, 0xa110c));
        allocator = [rng](const Mixture& p, long budget, int) {
          return BatchAlloc{allocate_counts_multinomial(p, budget, {}, *rng), p.vec()};
        };
      }
      run_simulation_into(outcome.log, cfg, *selector, *trainer, allocator);
    } catch (const std::exception& e) {
      outcome.failed = true;
      outcome.error = e.what();
    }
    result.runs.push_back(std::move(outcome));
  }
  return result;
}

std::string summary_csv(const ExperimentResult& result) {
  std::ostringstream out;
  out << "selector,skill,final_loss,mean_loss,status\n";
  for (const auto& run : result.runs) {
    if (run.failed || run.log.rounds.empty()) {
      out << run.label << ",average,,," << (run.failed ? "failed" : "empty") << "\n";
      continue;
    }
    const auto& rounds = run.log.rounds;
    const Eigen::Index m = rounds.back().losses_after.size();
    VectorXd mean = VectorXd::Zero(m);
    for (const auto& r : rounds) mean += r.losses_after;
    mean /= static_cast<double>(rounds.size());
    const VectorXd& last = rounds.back().losses_after;
    for (Eigen::Index j = 0; j < m; ++j) {
      const std::string name = j < static_cast<Eigen::Index>(result.eval_names.size())
                                   ? result.eval_names[j]
                                   : "skill" + std::to_string(j);
      out << run.label << "," << name << "," << format_double(last(j)) << ","
          << format_double(mean(j)) << ",ok\n";
    }
    out << run.label << ",average," << format_double(last.mean()) << ","
        << format_double(mean.mean()) << ",ok\n";
  }
  return out.str();
}

ExperimentResult run_experiment_to_dir(const ExperimentSpec& spec) {
  ExperimentResult result = run_experiment(spec);
  fs::create_directories(spec.output_dir);
  write_text_file(spec.output_dir + "/experiment.json", experiment_to_json(spec).dump(2) + "\n");
  if (result.graph) write_adjacency_csv(*result.graph, spec.output_dir + "/graph.csv");
  if (!result.probes.empty()) {
    write_text_file(spec.output_dir + "/probes.jsonl", probes_to_jsonl(result.probes));
  }
  for (const auto& run : result.runs) {
    // Failed runs flush whatever rounds completed before the abort.
    write_runlog_jsonl(run.log, spec.output_dir + "/" + run.label + ".runlog.jsonl");
  }
  write_text_file(spec.output_dir + "/summary.csv", summary_csv(result));
  return result;
}

std::vector<std::string> replay_check(const std::string& experiment_json_path) {
  const ExperimentSpec spec =
      experiment_from_json(json::parse(read_text_file(experiment_json_path)));
  const fs::path dir = fs::path(experiment_json_path).parent_path();
  const ExperimentResult rerun = run_experiment(spec);

  std::vector<std::string> mismatches;
  for (const auto& run : rerun.runs) {
    const fs::path stored = dir / (run.label + ".runlog.jsonl");
    if (run.failed) {
      mismatches.push_back(run.label + ": rerun failed: " + run.error);
      continue;
    }
    if (!fs::exists(stored)) {
      mismatches.push_back(run.label + ": stored run log missing");
      continue;
    }
    if (read_text_file(stored.string()) != runlog_to_jsonl(run.log)) {
      mismatches.push_back(run.label + ": run log differs");
    }
  }
  return mismatches;
}

const std::map<std::string, RunConfig>& presets() {
  static const std::map<std::string, RunConfig> table = [] {
    std::map<std::string, RunConfig> t;
    auto add = [&](const std::string& name, double eta, int rounds, int window, long samples) {
      RunConfig cfg;
      cfg.eta = eta;
      cfg.rounds = rounds;
      cfg.window = window;
      cfg.samples = samples;
      cfg.selector.kind = "skillit";
      cfg.label = name;
      t[name] = cfg;
    };
    add("lego-pretrain", 0.5, 6, 3, 6000);
    add("addition-pretrain", 0.1, 5, 3, 6000);
    add("ni-pretrain", 0.2, 1, 1, 5000);
    add("lego-finetune", 0.5, 10, 3, 6000);
    add("addition-finetune", 0.1, 5, 3, 6000);
    add("spanish-qg-finetune", 0.8, 6, 3, 600);
    add("stance-finetune", 0.2, 6, 3, 600);
    add("ni-out-of-domain", 0.2, 10, 3, 5000);
    return t;
  }();
  return table;
}

}  // namespace skillmix
