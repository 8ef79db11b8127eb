#include "skillmix/io.hpp"

#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <unordered_set>

namespace skillmix {

using nlohmann::json;

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::ostringstream out;
  out << in.rdbuf();
  return out.str();
}

void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << content;
  if (!out) throw std::runtime_error("write failed: " + path);
}

std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      cells.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur += c;
    }
  }
  cells.push_back(cur);
  return cells;
}

double parse_cell(const std::string& s) {
  std::size_t pos = 0;
  const double v = std::stod(s, &pos);
  if (pos != s.size()) throw std::runtime_error("bad numeric cell: " + s);
  return v;
}

std::vector<SkillId> ids_from_names(const std::vector<std::string>& names) {
  std::vector<SkillId> ids;
  ids.reserve(names.size());
  for (std::size_t i = 0; i < names.size(); ++i) ids.push_back({static_cast<int>(i), names[i]});
  return ids;
}

}  // namespace

std::string adjacency_to_csv(const SkillsGraph& graph) {
  std::ostringstream out;
  out << "skill";
  for (const auto& e : graph.eval_skills()) out << "," << e.name;
  out << "\n";
  for (int i = 0; i < graph.train_count(); ++i) {
    out << graph.train_skills()[i].name;
    for (int j = 0; j < graph.eval_count(); ++j) {
      out << "," << format_double(graph.adjacency()(i, j));
    }
    out << "\n";
  }
  return out.str();
}

void write_adjacency_csv(const SkillsGraph& graph, const std::string& path) {
  write_text_file(path, adjacency_to_csv(graph));
}

SkillsGraph adjacency_from_csv(const std::string& text, Setting setting) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("adjacency csv: empty file");
  auto header = split_csv_line(line);
  if (header.size() < 2) throw std::runtime_error("adjacency csv: header needs eval skills");
  std::vector<std::string> eval_names(header.begin() + 1, header.end());

  std::vector<std::string> train_names;
  std::vector<std::vector<double>> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    auto cells = split_csv_line(line);
    if (cells.size() != header.size()) {
      throw std::runtime_error("adjacency csv: ragged row for " + cells.front());
    }
    train_names.push_back(cells.front());
    std::vector<double> row;
    for (std::size_t j = 1; j < cells.size(); ++j) row.push_back(parse_cell(cells[j]));
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw std::runtime_error("adjacency csv: no train skill rows");
  MatrixXd a(rows.size(), eval_names.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t j = 0; j < eval_names.size(); ++j) a(i, j) = rows[i][j];
  }
  return SkillsGraph(ids_from_names(train_names), ids_from_names(eval_names), std::move(a),
                     setting);
}

SkillsGraph read_adjacency_csv(const std::string& path, Setting setting) {
  return adjacency_from_csv(read_text_file(path), setting);
}

std::string samples_to_jsonl(const std::vector<Sample>& samples,
                             const std::vector<SkillId>& skills) {
  std::ostringstream out;
  for (const Sample& s : samples) {
    json j;
    j["skill"] = skills.at(s.skill).name;
    j["input"] = s.input;
    j["output"] = s.output;
    out << j.dump() << "\n";
  }
  return out.str();
}

void write_samples_jsonl(const std::vector<Sample>& samples, const std::vector<SkillId>& skills,
                         const std::string& path) {
  write_text_file(path, samples_to_jsonl(samples, skills));
}

SkillSet read_samples_jsonl(const std::string& path, int val_per_skill) {
  std::istringstream in(read_text_file(path));
  std::string line;
  std::vector<std::string> names;
  std::map<std::string, std::vector<Sample>> by_skill;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    json j = json::parse(line);
    const std::string name = j.at("skill").get<std::string>();
    if (!by_skill.count(name)) names.push_back(name);
    by_skill[name].push_back({0, j.at("input").get<std::string>(),
                              j.at("output").get<std::string>()});
  }
  if (names.empty()) throw std::runtime_error("dataset jsonl: no samples in " + path);

  std::vector<SkillId> skills = ids_from_names(names);
  std::vector<std::vector<Sample>> pools(names.size()), validation(names.size());
  for (std::size_t i = 0; i < names.size(); ++i) {
    auto& all = by_skill[names[i]];
    std::unordered_set<std::string> val_keys;
    for (auto& s : all) s.skill = static_cast<int>(i);
    const int nval = std::min<int>(val_per_skill, static_cast<int>(all.size()));
    for (int v = 0; v < nval; ++v) {
      validation[i].push_back(all[v]);
      val_keys.insert(all[v].input + "\x1f" + all[v].output);
    }
    for (std::size_t t = nval; t < all.size(); ++t) {
      if (val_keys.count(all[t].input + "\x1f" + all[t].output)) continue;
      pools[i].push_back(all[t]);
    }
  }
  return SkillSet(std::move(skills), std::move(pools), std::move(validation));
}

nlohmann::json vector_to_json(const VectorXd& v) {
  json arr = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) arr.push_back(v(i));
  return arr;
}

VectorXd vector_from_json(const json& j) {
  VectorXd v(j.size());
  for (std::size_t i = 0; i < j.size(); ++i) v(static_cast<Eigen::Index>(i)) = j[i].get<double>();
  return v;
}

nlohmann::json selector_options_to_json(const SelectorOptions& opts) {
  json j;
  j["kind"] = opts.kind;
  j["no_graph"] = opts.no_graph;
  j["static"] = opts.static_mixture;
  j["epochs"] = opts.epochs;
  j["frac_previous"] = opts.frac_previous;
  if (opts.weights.size() > 0) j["weights"] = vector_to_json(opts.weights);
  return j;
}

SelectorOptions selector_options_from_json(const json& j) {
  SelectorOptions opts;
  opts.kind = j.value("kind", opts.kind);
  opts.no_graph = j.value("no_graph", opts.no_graph);
  opts.static_mixture = j.value("static", opts.static_mixture);
  opts.epochs = j.value("epochs", opts.epochs);
  opts.frac_previous = j.value("frac_previous", opts.frac_previous);
  if (j.contains("weights")) opts.weights = vector_from_json(j.at("weights"));
  return opts;
}

nlohmann::json run_config_to_json(const RunConfig& cfg) {
  json j;
  j["eta"] = cfg.eta;
  j["T"] = cfg.rounds;
  j["n"] = cfg.samples;
  j["w"] = cfg.window;
  j["seed"] = cfg.seed;
  j["label"] = cfg.label;
  j["alloc"] = cfg.alloc;
  j["selector"] = selector_options_to_json(cfg.selector);
  return j;
}

RunConfig run_config_from_json(const json& j) {
  RunConfig cfg;
  cfg.eta = j.value("eta", cfg.eta);
  cfg.rounds = j.value("T", cfg.rounds);
  cfg.samples = j.value("n", cfg.samples);
  cfg.window = j.value("w", cfg.window);
  cfg.seed = j.value("seed", cfg.seed);
  cfg.label = j.value("label", cfg.label);
  cfg.alloc = j.value("alloc", cfg.alloc);
  if (j.contains("selector")) cfg.selector = selector_options_from_json(j.at("selector"));
  return cfg;
}

std::string runlog_to_jsonl(const RunLog& log) {
  std::ostringstream out;
  for (const RoundRecord& r : log.rounds) {
    json j;
    j["round"] = r.round;
    j["mixture"] = vector_to_json(r.mixture);
    json alloc = json::array();
    for (Eigen::Index i = 0; i < r.allocation.size(); ++i) alloc.push_back(r.allocation(i));
    j["allocation"] = alloc;
    j["losses_before"] = vector_to_json(r.losses_before);
    j["losses_after"] = vector_to_json(r.losses_after);
    out << j.dump() << "\n";
  }
  return out.str();
}

void write_runlog_jsonl(const RunLog& log, const std::string& path) {
  write_text_file(path, runlog_to_jsonl(log));
}

std::vector<RoundRecord> read_runlog_jsonl(const std::string& path) {
  std::istringstream in(read_text_file(path));
  std::string line;
  std::vector<RoundRecord> rounds;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    json j = json::parse(line);
    RoundRecord r;
    r.round = j.at("round").get<int>();
    r.mixture = vector_from_json(j.at("mixture"));
    const auto& alloc = j.at("allocation");
    r.allocation.resize(static_cast<Eigen::Index>(alloc.size()));
    for (std::size_t i = 0; i < alloc.size(); ++i) {
      r.allocation(static_cast<Eigen::Index>(i)) = alloc[i].get<int>();
    }
    r.losses_before = vector_from_json(j.at("losses_before"));
    r.losses_after = vector_from_json(j.at("losses_after"));
    rounds.push_back(std::move(r));
  }
  return rounds;
}

}  // namespace skillmix
