#pragma once

#include "skillmix/core.hpp"

#include <json.hpp>

#include <string>
#include <vector>

namespace skillmix {

std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& content);

/// Adjacency CSV: header row carries the eval skill names, first column the
/// train skill names, cells the edge weights.
std::string adjacency_to_csv(const SkillsGraph& graph);
void write_adjacency_csv(const SkillsGraph& graph, const std::string& path);
SkillsGraph adjacency_from_csv(const std::string& text, Setting setting);
SkillsGraph read_adjacency_csv(const std::string& path, Setting setting);

/// Skill dataset JSONL: one object per sample with fields `skill` (name),
/// `input`, `output`.
std::string samples_to_jsonl(const std::vector<Sample>& samples,
                             const std::vector<SkillId>& skills);
void write_samples_jsonl(const std::vector<Sample>& samples, const std::vector<SkillId>& skills,
                         const std::string& path);

/// Loads a JSONL dataset, grouping samples by skill name in order of first
/// appearance. The first `val_per_skill` samples of each skill become its
/// validation pool; training samples that exactly duplicate a validation
/// sample are dropped so the pools stay disjoint.
SkillSet read_samples_jsonl(const std::string& path, int val_per_skill = 0);

nlohmann::json selector_options_to_json(const SelectorOptions& opts);
SelectorOptions selector_options_from_json(const nlohmann::json& j);
nlohmann::json run_config_to_json(const RunConfig& cfg);
RunConfig run_config_from_json(const nlohmann::json& j);

/// RunLog rounds as JSONL: one object per round with keys round, mixture,
/// allocation, losses_before, losses_after.
std::string runlog_to_jsonl(const RunLog& log);
void write_runlog_jsonl(const RunLog& log, const std::string& path);
std::vector<RoundRecord> read_runlog_jsonl(const std::string& path);

nlohmann::json vector_to_json(const VectorXd& v);
VectorXd vector_from_json(const nlohmann::json& j);

/// Exact round-trip formatting used in CSV output ("%.17g").
std::string format_double(double v);

}  // namespace skillmix
