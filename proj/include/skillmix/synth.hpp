#pragma once

#include "skillmix/core.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace skillmix {

/// Reasoning-chain dataset spec. Each sample assigns k single-letter variables
/// through a chain (or tree) of `val`/`not` clauses and asks for the value of
/// the variable at one depth. Skill i = answering the depth-i variable.
struct LegoSpec {
  int k = 5;
  /// Parents for nodes 1..k-1 (node 0 is the root). Empty means chain, i.e.
  /// parent(i) = i-1. Each entry must point at an earlier node.
  std::vector<int> parents;
  std::string alphabet = "abcdefghijklmnopqrstuvwxyz";
  std::uint64_t seed = 0;

  void check() const;
  /// Resolved parent array of size k; entry 0 is -1.
  std::vector<int> parent_array() const;
  /// Depth of every node, root = 1.
  std::vector<int> depths() const;
  int max_depth() const;
  /// "depth1".."depthD" where D = max_depth().
  std::vector<std::string> skill_names() const;
};

/// d-digit addition dataset: skill i predicts the output digit at place value
/// 10^(i-1); the carry past the top digit is truncated (sum mod 10^d).
struct AdditionSpec {
  int digits = 3;
  std::uint64_t seed = 0;

  void check() const;
  /// "A0".."A{d-1}", matching the query token of the input text.
  std::vector<std::string> skill_names() const;
};

/// count_per_skill[i] samples for skill i+1. Each skill draws from its own
/// seed-derived stream, so generation is reproducible under reordering.
std::vector<Sample> gen_lego(const LegoSpec& spec, const std::vector<long>& count_per_skill);
std::vector<Sample> gen_addition(const AdditionSpec& spec,
                                 const std::vector<long>& count_per_skill);

/// Canonical one-line rendering, "Input: ... Output: ...". LEGO lines carry a
/// terminal period after the answer; addition lines do not.
std::string render_lego_text(const Sample& s);
std::string render_addition_text(const Sample& s);

/// Inverse of the renderers (whitespace-tolerant). The returned skill index is
/// recomputed from the text: queried-variable depth for LEGO, query digit
/// position for addition.
Sample parse_lego_text(const std::string& text);
Sample parse_addition_text(const std::string& text);

/// One parsed LEGO clause: `var = op arg` where op is "val" or "not" and arg
/// is either another variable or a literal bit.
struct LegoClause {
  char var = 0;
  bool negate = false;
  char arg = 0;      // 0 when the clause assigns a literal
  int literal = -1;  // -1 when the clause references another variable
};

std::vector<LegoClause> parse_lego_clauses(const std::string& input);

}  // namespace skillmix
