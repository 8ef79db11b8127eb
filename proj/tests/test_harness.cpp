#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "oracles.hpp"
#include "skillmix/harness.hpp"
#include "skillmix/io.hpp"
#include "skillmix/plot.hpp"
#include "skillmix/recover.hpp"
#include "skillmix/selector.hpp"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <set>

using namespace skillmix;
namespace fs = std::filesystem;

namespace {

fs::path fresh_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("skillmix_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

ExperimentSpec sim_spec(const fs::path& out, double noise = 0.0) {
  ExperimentSpec spec;
  spec.seed = 31337;
  spec.seed_set = true;
  spec.output_dir = out.string();
  spec.setting = Setting::kContinual;
  spec.trainer.kind = "sim";
  spec.trainer.a_true = oracles::planted_prerequisites(5, 777).a_true;
  spec.trainer.initial_losses = VectorXd::Ones(5);
  spec.trainer.noise_sigma = noise;
  spec.graph.source = "identity";

  RunConfig base;
  base.eta = 0.5;
  base.rounds = 6;
  base.samples = 600;
  base.window = 3;
  base.selector.kind = "random";
  base.label = "random";
  spec.selectors.push_back(base);
  base.selector.kind = "stratified";
  base.label = "stratified";
  spec.selectors.push_back(base);
  base.selector.kind = "skillit";
  base.label = "skillit";
  spec.selectors.push_back(base);
  return spec;
}

}  // namespace

TEST_CASE("allocation worked examples") {
  CHECK(allocate_counts(Mixture::uniform(4), 8, {}).isApprox((VectorXi(4) << 2, 2, 2, 2).finished()));

  const Mixture p = Mixture((VectorXd(3) << 0.5, 0.3, 0.2).finished());
  const VectorXi counts = allocate_counts(p, 10, {});
  CHECK(counts(0) == 5);
  CHECK(counts(1) == 3);
  CHECK(counts(2) == 2);

  // Redistribution: all mass on an exhausted pool flows to the other skill.
  const Mixture degenerate = Mixture((VectorXd(2) << 1.0, 0.0).finished());
  const VectorXi redistributed = allocate_counts(degenerate, 3, {2, 10});
  CHECK(redistributed(0) == 2);
  CHECK(redistributed(1) == 1);

  CHECK_THROWS_WITH_AS(allocate_counts(degenerate, 20, {2, 10}), "insufficient data",
                       std::runtime_error);
}

TEST_CASE("allocation sums to the budget and stays within 1 of the target") {
  RngStream rng(123);
  for (int trial = 0; trial < 1000; ++trial) {
    const int k = rng.uniform_int(1, 8);
    VectorXd w(k);
    for (int i = 0; i < k; ++i) w(i) = rng.uniform(1e-3, 1.0);
    const Mixture p = normalize(w);
    const long budget = rng.uniform_int(0, 2000);
    const VectorXi counts = allocate_counts(p, budget, {});
    CHECK(counts.sum() == budget);
    for (int i = 0; i < k; ++i) CHECK(std::abs(counts(i) - budget * p[i]) <= 1.0);
  }
}

TEST_CASE("tie-breaking is by ascending skill index") {
  const VectorXi counts = allocate_counts(Mixture::uniform(3), 4, {});
  CHECK(counts(0) == 2);
  CHECK(counts(1) == 1);
  CHECK(counts(2) == 1);
}

TEST_CASE("multinomial allocation respects the budget and pools") {
  RngStream rng(321);
  const Mixture p = Mixture((VectorXd(3) << 0.6, 0.3, 0.1).finished());
  const VectorXi counts = allocate_counts_multinomial(p, 50, {40, 40, 2}, rng);
  CHECK(counts.sum() == 50);
  CHECK(counts(2) <= 2);

  RngStream rng_a(5), rng_b(5);
  CHECK(allocate_counts_multinomial(p, 30, {}, rng_a) ==
        allocate_counts_multinomial(p, 30, {}, rng_b));
}

TEST_CASE("sample draws are without replacement within a round") {
  std::vector<SkillId> skills{{0, "a"}, {1, "b"}};
  std::vector<std::vector<Sample>> pools(2), validation(2);
  for (int i = 0; i < 30; ++i) pools[0].push_back({0, "a" + std::to_string(i), "x"});
  for (int i = 0; i < 5; ++i) pools[1].push_back({1, "b" + std::to_string(i), "x"});
  const SkillSet set(skills, pools, validation);

  RngStream rng(9);
  const Mixture half = Mixture((VectorXd(2) << 0.5, 0.5).finished());
  const DrawnAllocation drawn = allocate_samples(half, 12, set, rng);
  // Pool b holds 5 samples, so its overflow lands on pool a.
  CHECK(drawn.counts.sum() == 12);
  CHECK(drawn.counts(1) == 5);
  CHECK(drawn.counts(0) == 7);
  for (int i = 0; i < 2; ++i) {
    std::set<int> unique(drawn.sample_indices[i].begin(), drawn.sample_indices[i].end());
    CHECK(unique.size() == drawn.sample_indices[i].size());
    CHECK(static_cast<int>(unique.size()) == drawn.counts(i));
    for (int idx : unique) CHECK(idx < static_cast<int>(set.pool(i).size()));
  }
}

TEST_CASE("experiment produces one run log per selector and a summary") {
  const auto dir = fresh_dir("exp_basic");
  const ExperimentSpec spec = sim_spec(dir);
  const ExperimentResult result = run_experiment_to_dir(spec);

  REQUIRE(result.runs.size() == 3);
  for (const auto& run : result.runs) {
    CHECK(!run.failed);
    CHECK(run.log.rounds.size() == 6);
    CHECK(fs::exists(dir / (run.label + ".runlog.jsonl")));
  }
  CHECK(fs::exists(dir / "experiment.json"));
  CHECK(fs::exists(dir / "summary.csv"));
  CHECK(fs::exists(dir / "graph.csv"));

  const std::string summary = read_text_file((dir / "summary.csv").string());
  CHECK(summary.find("skillit,average,") != std::string::npos);
  fs::remove_all(dir);
}

TEST_CASE("identical specs give byte-identical summaries and run logs") {
  const auto dir1 = fresh_dir("exp_det1");
  const auto dir2 = fresh_dir("exp_det2");
  ExperimentSpec s1 = sim_spec(dir1, 0.2);
  ExperimentSpec s2 = sim_spec(dir2, 0.2);
  run_experiment_to_dir(s1);
  run_experiment_to_dir(s2);
  CHECK(read_text_file((dir1 / "summary.csv").string()) ==
        read_text_file((dir2 / "summary.csv").string()));
  CHECK(read_text_file((dir1 / "skillit.runlog.jsonl").string()) ==
        read_text_file((dir2 / "skillit.runlog.jsonl").string()));
  fs::remove_all(dir1);
  fs::remove_all(dir2);
}

TEST_CASE("paired seeding: selectors see identical initial observations") {
  const auto dir = fresh_dir("exp_paired");
  const ExperimentSpec spec = sim_spec(dir, 0.3);
  const ExperimentResult result = run_experiment(spec);
  REQUIRE(result.runs.size() == 3);
  const VectorXd first = result.runs[0].log.rounds[0].losses_before;
  for (const auto& run : result.runs) {
    CHECK((run.log.rounds[0].losses_before - first).cwiseAbs().maxCoeff() == 0.0);
  }
  fs::remove_all(dir);
}

TEST_CASE("a failing selector is reported while the others complete") {
  const auto dir = fresh_dir("exp_fail");
  ExperimentSpec spec = sim_spec(dir);
  spec.selectors[1].selector.kind = "skill_stratified";
  spec.selectors[1].label = "will-fail";
  // Out-of-domain stratified needs prerequisite edges; an all-zero graph has
  // none. Forcing the failure through a zero CSV graph:
  const fs::path graph_csv = dir / "zero_graph.csv";
  {
    std::vector<SkillId> train, eval;
    for (int i = 0; i < 5; ++i) train.push_back({i, "s" + std::to_string(i + 1)});
    for (int i = 0; i < 5; ++i) eval.push_back({i, "e" + std::to_string(i + 1)});
    write_adjacency_csv(SkillsGraph(train, eval, MatrixXd::Zero(5, 5), Setting::kOutOfDomain),
                        graph_csv.string());
  }
  spec.setting = Setting::kOutOfDomain;
  spec.eval_names = {"e1", "e2", "e3", "e4", "e5"};
  spec.graph.source = "csv";
  spec.graph.path = graph_csv.string();

  const ExperimentResult result = run_experiment_to_dir(spec);
  REQUIRE(result.runs.size() == 3);
  CHECK(!result.runs[0].failed);
  CHECK(result.runs[1].failed);
  CHECK(result.runs[1].error.find("no prerequisite edges") != std::string::npos);
  CHECK(!result.runs[2].failed);
  const std::string summary = read_text_file((dir / "summary.csv").string());
  CHECK(summary.find("will-fail,average,,,failed") != std::string::npos);
  fs::remove_all(dir);
}

TEST_CASE("replay reproduces a persisted run byte-identically") {
  const auto dir = fresh_dir("exp_replay");
  ExperimentSpec spec = sim_spec(dir, 0.25);
  run_experiment_to_dir(spec);
  CHECK(replay_check((dir / "experiment.json").string()).empty());

  // Corrupt one stored log: replay must notice.
  const fs::path log = dir / "skillit.runlog.jsonl";
  std::ofstream(log, std::ios::app) << "{\"round\": 99}\n";
  const auto mismatches = replay_check((dir / "experiment.json").string());
  REQUIRE(mismatches.size() == 1);
  CHECK(mismatches[0].find("skillit") == 0);
  fs::remove_all(dir);
}

TEST_CASE("experiment with a synthetic dataset draws real sample counts") {
  const auto dir = fresh_dir("exp_lego");
  ExperimentSpec spec = sim_spec(dir);
  spec.dataset.kind = "lego";
  spec.dataset.lego.k = 5;
  spec.dataset.lego.seed = 2;
  spec.dataset.counts = {400, 400, 400, 400, 400};
  spec.dataset.val_per_skill = 20;
  const ExperimentResult result = run_experiment(spec);
  REQUIRE(result.dataset.has_value());
  CHECK(result.dataset->validation(0).size() == 20);
  CHECK(result.train_names == std::vector<std::string>{"depth1", "depth2", "depth3", "depth4",
                                                       "depth5"});
  for (const auto& run : result.runs) {
    CHECK(!run.failed);
    for (const auto& r : run.log.rounds) CHECK(r.allocation.sum() == 100);
  }
  fs::remove_all(dir);
}

TEST_CASE("learned-graph source feeds the selectors") {
  const auto dir = fresh_dir("exp_learn");
  ExperimentSpec spec = sim_spec(dir);
  spec.graph.source = "learn_bruteforce";
  spec.graph.learn.steps = 4;
  const ExperimentResult result = run_experiment(spec);
  REQUIRE(result.graph.has_value());
  CHECK(!result.probes.empty());
  // The planted chain has prerequisite edges, so some off-diagonal weight
  // must have been recovered.
  CHECK(result.graph->density() > 0.0);
  fs::remove_all(dir);
}

TEST_CASE("fine-tune experiment: full pairwise probes, eval-column run") {
  const auto dir = fresh_dir("exp_finetune");
  ExperimentSpec spec = sim_spec(dir);
  spec.setting = Setting::kFineTune;
  spec.train_names = {"s1", "s2", "s3", "s4", "s5"};
  spec.eval_names = {"s3"};

  // Full train-by-train ground truth; the run slices out the s3 column.
  MatrixXd a_true = MatrixXd::Zero(5, 5);
  a_true(0, 0) = 0.5;
  for (int j = 1; j < 5; ++j) {
    a_true(j, j) = 0.15;
    a_true(j - 1, j) = 0.6;
  }
  spec.trainer.a_true = a_true;
  spec.trainer.initial_losses = VectorXd{};  // default to ones over eval skills
  spec.graph.source = "learn_bruteforce";
  spec.graph.learn.steps = 4;

  spec.selectors.clear();
  RunConfig cfg;
  cfg.eta = 0.5;
  cfg.rounds = 6;
  cfg.samples = 600;
  cfg.window = 3;
  cfg.selector.kind = "skill_stratified";
  cfg.label = "stratified";
  spec.selectors.push_back(cfg);
  cfg.selector.kind = "skillit";
  cfg.label = "skillit";
  spec.selectors.push_back(cfg);

  const ExperimentResult result = run_experiment(spec);
  REQUIRE(result.graph.has_value());
  CHECK(result.graph->train_count() == 5);
  CHECK(result.graph->eval_count() == 1);
  CHECK(result.graph->setting() == Setting::kFineTune);
  CHECK(result.graph->validate().empty());
  // The probes ran train-by-train: k solo + k*k pair runs.
  CHECK(result.probes.size() == 5 + 25);

  for (const auto& run : result.runs) {
    REQUIRE(!run.failed);
    CHECK(run.log.rounds.back().losses_before.size() == 1);  // eval skill only
  }
  // Skill-stratified mass sits on the target and its prerequisite(s) only.
  const VectorXd strat = result.runs[0].log.rounds[0].mixture;
  CHECK(strat(2) > 0.0);
  CHECK(strat(4) == 0.0);
  fs::remove_all(dir);
}

TEST_CASE("out-of-domain experiment with a linearly learned graph") {
  const auto dir = fresh_dir("exp_ood");
  ExperimentSpec spec = sim_spec(dir);
  spec.setting = Setting::kOutOfDomain;
  spec.train_names = {"s1", "s2", "s3"};
  spec.eval_names = {"e1"};
  MatrixXd a_true = MatrixXd::Zero(3, 1);
  a_true(1, 0) = 0.5;
  spec.trainer.a_true = a_true;
  spec.trainer.initial_losses = VectorXd::Constant(1, 2.0);
  spec.graph.source = "learn_approximate";
  spec.graph.learn.probe_steps = 3;
  spec.graph.learn.scheme = WeightScheme::kRawDelta;

  spec.selectors.clear();
  RunConfig cfg;
  cfg.eta = 0.5;
  cfg.rounds = 4;
  cfg.samples = 400;
  cfg.window = 2;
  cfg.selector.kind = "skill_stratified";
  cfg.label = "stratified";
  spec.selectors.push_back(cfg);
  cfg.selector.kind = "skillit";
  cfg.label = "skillit";
  spec.selectors.push_back(cfg);

  const ExperimentResult result = run_experiment(spec);
  REQUIRE(result.graph.has_value());
  CHECK(result.graph->setting() == Setting::kOutOfDomain);
  CHECK(result.graph->adjacency()(1, 0) > 0.0);
  CHECK(result.graph->adjacency()(0, 0) == 0.0);
  for (const auto& run : result.runs) {
    REQUIRE(!run.failed);
    // All useful mass should sit on the one prerequisite skill.
    CHECK(run.log.rounds[0].mixture(1) > 0.3);
    CHECK(run.log.rounds.back().losses_after(0) < 2.0);
  }
  fs::remove_all(dir);
}

TEST_CASE("multinomial allocation mode runs and replays deterministically") {
  const auto dir = fresh_dir("exp_multinomial");
  ExperimentSpec spec = sim_spec(dir);
  for (auto& cfg : spec.selectors) cfg.alloc = "multinomial";
  run_experiment_to_dir(spec);
  CHECK(replay_check((dir / "experiment.json").string()).empty());

  const auto rounds = read_runlog_jsonl((dir / "skillit.runlog.jsonl").string());
  for (const auto& r : rounds) CHECK(r.allocation.sum() == 100);
  fs::remove_all(dir);

  RunConfig bad;
  bad.samples = 10;
  bad.alloc = "dice";
  CHECK_THROWS_AS(bad.check(), std::invalid_argument);
}

TEST_CASE("chain instance at the shipped preset: online beats uniform") {
  // Binary prerequisite-chain graph estimate, eta/T/w from the lego-pretrain
  // preset, dynamics with a strong chain structure.
  const int k = 5;
  MatrixXd a_true = MatrixXd::Zero(k, k);
  a_true(0, 0) = 0.5;
  for (int j = 1; j < k; ++j) {
    a_true(j, j) = 0.1;
    a_true(j - 1, j) = 0.7;
  }
  MatrixXd estimate = MatrixXd::Identity(k, k);
  for (int j = 1; j < k; ++j) estimate(j - 1, j) = 0.5;

  const auto dir = fresh_dir("exp_preset");
  ExperimentSpec spec = sim_spec(dir);
  spec.trainer.a_true = a_true;
  spec.selectors.clear();
  RunConfig cfg = presets().at("lego-pretrain");
  cfg.samples = 600;
  cfg.selector.kind = "skill_stratified";
  cfg.label = "stratified";
  spec.selectors.push_back(cfg);
  cfg.selector.kind = "skillit";
  cfg.label = "skillit";
  spec.selectors.push_back(cfg);

  const fs::path graph_csv = dir / "estimate.csv";
  std::vector<SkillId> ids;
  for (int i = 0; i < k; ++i) ids.push_back({i, "s" + std::to_string(i + 1)});
  write_adjacency_csv(SkillsGraph(ids, ids, estimate, Setting::kContinual), graph_csv.string());
  spec.graph.source = "csv";
  spec.graph.path = graph_csv.string();
  spec.train_names.clear();
  for (const auto& id : ids) spec.train_names.push_back(id.name);

  const ExperimentResult result = run_experiment(spec);
  REQUIRE(result.runs.size() == 2);
  REQUIRE(!result.runs[0].failed);
  REQUIRE(!result.runs[1].failed);
  const double stratified = result.runs[0].log.rounds.back().losses_after.mean();
  const double skillit = result.runs[1].log.rounds.back().losses_after.mean();
  CHECK(skillit <= stratified);
  fs::remove_all(dir);
}

TEST_CASE("presets carry the shipped hyperparameters") {
  const auto& table = presets();
  CHECK(table.at("lego-pretrain").eta == 0.5);
  CHECK(table.at("lego-pretrain").rounds == 6);
  CHECK(table.at("lego-pretrain").window == 3);
  CHECK(table.at("addition-pretrain").eta == 0.1);
  CHECK(table.at("addition-pretrain").rounds == 5);
  CHECK(table.at("lego-finetune").rounds == 10);
  CHECK(table.at("spanish-qg-finetune").eta == 0.8);
  CHECK(table.at("stance-finetune").eta == 0.2);
  for (const auto& [name, cfg] : table) CHECK_NOTHROW(cfg.check());
}

TEST_CASE("experiment json round trip") {
  ExperimentSpec spec = sim_spec(fs::temp_directory_path() / "never_used");
  spec.dataset.kind = "addition";
  spec.dataset.addition.digits = 3;
  spec.dataset.counts = {10, 10, 10};
  const ExperimentSpec back = experiment_from_json(experiment_to_json(spec));
  CHECK(back.seed == spec.seed);
  CHECK(back.setting == spec.setting);
  CHECK(back.dataset.kind == "addition");
  CHECK(back.selectors.size() == spec.selectors.size());
  CHECK(back.selectors[2].selector.kind == "skillit");
  CHECK((back.trainer.a_true - spec.trainer.a_true).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("export_plots writes series, loss charts, and mixture charts") {
  const auto dir = fresh_dir("plots");
  RunConfig cfg;
  cfg.rounds = 3;
  cfg.samples = 30;
  cfg.label = "demo";
  RunLog log;
  log.config = cfg;
  for (int t = 1; t <= 3; ++t) {
    RoundRecord r;
    r.round = t;
    r.mixture = (VectorXd(2) << 0.5, 0.5).finished();
    r.allocation = (VectorXi(2) << 5, 5).finished();
    r.losses_before = VectorXd::Constant(2, 1.0 / t);
    r.losses_after = VectorXd::Constant(2, 1.0 / (t + 1));
    log.rounds.push_back(r);
  }
  const auto written = export_plots({log}, {"alpha", "beta"}, dir.string());
  // 2 series files + 2 loss charts + 1 mixture chart.
  CHECK(written.size() == 5);
  const std::string series = read_text_file((dir / "demo__alpha.csv").string());
  CHECK(series.find("0,1\n") != std::string::npos);        // losses_before of round 1
  CHECK(series.find("3,0.25\n") != std::string::npos);     // losses_after of round 3
  CHECK(read_text_file((dir / "loss_beta.svg").string()).find("<svg") == 0);

  CHECK_THROWS_WITH_AS(export_plots({}, {}, dir.string()), "no data", std::invalid_argument);
  RunLog empty;
  empty.config = cfg;
  CHECK_THROWS_AS(export_plots({empty}, {}, dir.string()), std::invalid_argument);
  fs::remove_all(dir);
}

#ifdef SKILLMIX_CLI_PATH
TEST_CASE("cli end to end: gen, run, replay, recover, plot") {
  const auto dir = fresh_dir("cli");
  const std::string cli = SKILLMIX_CLI_PATH;
  auto sh = [&](const std::string& cmd) { return std::system((cmd + " > /dev/null 2>&1").c_str()); };

  CHECK(sh(cli + " gen lego --k 4 --seed 3 --count 25 --out " + (dir / "lego.jsonl").string()) ==
        0);
  CHECK(fs::exists(dir / "lego.jsonl"));
  CHECK(sh(cli + " gen addition --digits 2 --seed 3 --count 25 --split --out " +
           (dir / "add").string()) == 0);
  CHECK(fs::exists(dir / "add" / "A0.jsonl"));
  CHECK(fs::exists(dir / "add" / "A1.jsonl"));

  // Experiment config for run/replay.
  ExperimentSpec spec = sim_spec(dir / "run_out");
  const fs::path cfg_path = dir / "experiment.json";
  write_text_file(cfg_path.string(), experiment_to_json(spec).dump(2));
  CHECK(sh(cli + " run --config " + cfg_path.string()) == 0);
  CHECK(fs::exists(dir / "run_out" / "summary.csv"));
  CHECK(sh(cli + " replay --experiment " + (dir / "run_out" / "experiment.json").string()) == 0);

  CHECK(sh(cli + " learn-graph brute --config " + cfg_path.string() + " --out " +
           (dir / "graph.csv").string() + " --probe-log " + (dir / "probes.jsonl").string()) == 0);
  CHECK(fs::exists(dir / "graph.csv"));
  CHECK(fs::exists(dir / "probes.jsonl"));

  CHECK(sh(cli + " plot --runlog " + (dir / "run_out" / "skillit.runlog.jsonl").string() +
           " --out " + (dir / "plots").string()) == 0);
  CHECK(fs::exists(dir / "plots"));

  // recover on a tiny trajectory file.
  TrajectoryMatrix traj;
  traj.runs = 1;
  traj.checkpoints = 2;
  traj.features = (MatrixXd(4, 2) << 0, 0, 0, 0.1, 5, 5, 5, 5.1).finished();
  traj.labels = {0, 0, 1, 1};
  write_trajectories(traj, (dir / "traj.csv").string());
  CHECK(sh(cli + " recover --traj " + (dir / "traj.csv").string() + " --k 2 --out " +
           (dir / "assign.csv").string()) == 0);
  CHECK(fs::exists(dir / "assign.csv"));
  fs::remove_all(dir);
}
#endif
