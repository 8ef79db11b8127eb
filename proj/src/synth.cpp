#include "skillmix/synth.hpp"

#include "skillmix/rng.hpp"

#include <algorithm>
#include <cctype>
#include <map>
#include <sstream>
#include <stdexcept>
#include <unordered_set>

namespace skillmix {

void LegoSpec::check() const {
  if (k < 2) throw std::invalid_argument("lego: k must be >= 2");
  if (static_cast<int>(alphabet.size()) < k) {
    throw std::invalid_argument("lego: alphabet smaller than k");
  }
  std::unordered_set<char> seen;
  for (char c : alphabet) {
    if (c < 'a' || c > 'z') throw std::invalid_argument("lego: alphabet must be lowercase letters");
    if (!seen.insert(c).second) throw std::invalid_argument("lego: duplicate alphabet letter");
  }
  if (!parents.empty()) {
    if (static_cast<int>(parents.size()) != k - 1) {
      throw std::invalid_argument("lego: parent array must cover nodes 1..k-1");
    }
    for (int i = 0; i < k - 1; ++i) {
      if (parents[i] < 0 || parents[i] > i) {
        throw std::invalid_argument("lego: parent of node " + std::to_string(i + 1) +
                                    " must be an earlier node");
      }
    }
  }
}

std::vector<int> LegoSpec::parent_array() const {
  std::vector<int> pa(k);
  pa[0] = -1;
  for (int i = 1; i < k; ++i) pa[i] = parents.empty() ? i - 1 : parents[i - 1];
  return pa;
}

std::vector<int> LegoSpec::depths() const {
  const auto pa = parent_array();
  std::vector<int> depth(k);
  depth[0] = 1;
  for (int i = 1; i < k; ++i) depth[i] = depth[pa[i]] + 1;
  return depth;
}

int LegoSpec::max_depth() const {
  const auto d = depths();
  return *std::max_element(d.begin(), d.end());
}

std::vector<std::string> LegoSpec::skill_names() const {
  std::vector<std::string> names;
  for (int d = 1; d <= max_depth(); ++d) names.push_back("depth" + std::to_string(d));
  return names;
}

void AdditionSpec::check() const {
  if (digits < 1) throw std::invalid_argument("addition: digits must be >= 1");
}

std::vector<std::string> AdditionSpec::skill_names() const {
  std::vector<std::string> names;
  for (int i = 0; i < digits; ++i) names.push_back("A" + std::to_string(i));
  return names;
}

namespace {

Sample make_lego_sample(const LegoSpec& spec, const std::vector<int>& pa,
                        const std::vector<std::vector<int>>& nodes_at_depth, int depth,
                        RngStream& rng) {
  const int k = spec.k;

  // Distinct letters, one per node.
  std::vector<char> letters(spec.alphabet.begin(), spec.alphabet.end());
  rng.shuffle(letters);
  letters.resize(k);

  const int root_bit = rng.coin() ? 1 : 0;
  std::vector<bool> negate(k, false);
  std::vector<int> bit(k);
  bit[0] = root_bit;
  for (int i = 1; i < k; ++i) {
    negate[i] = rng.coin();
    bit[i] = negate[i] ? 1 - bit[pa[i]] : bit[pa[i]];
  }

  const auto& candidates = nodes_at_depth[depth];
  const int query = candidates[rng.below(candidates.size())];

  std::vector<int> order(k);
  for (int i = 0; i < k; ++i) order[i] = i;
  rng.shuffle(order);

  std::ostringstream input;
  for (std::size_t pos = 0; pos < order.size(); ++pos) {
    const int node = order[pos];
    if (pos > 0) input << ", ";
    input << letters[node] << " = ";
    if (node == 0) {
      input << "val " << bit[0];
    } else {
      input << (negate[node] ? "not " : "val ") << letters[pa[node]];
    }
  }
  input << ".";

  Sample s;
  s.skill = depth - 1;
  s.input = input.str();
  s.output = std::string(1, letters[query]) + " = " + std::to_string(bit[query]);
  return s;
}

}  // namespace

std::vector<Sample> gen_lego(const LegoSpec& spec, const std::vector<long>& count_per_skill) {
  spec.check();
  const int max_d = spec.max_depth();
  if (static_cast<int>(count_per_skill.size()) > max_d) {
    throw std::invalid_argument("lego: count requested for depth beyond the reasoning structure");
  }
  const auto pa = spec.parent_array();
  const auto depth = spec.depths();
  std::vector<std::vector<int>> nodes_at_depth(max_d + 1);
  for (int i = 0; i < spec.k; ++i) nodes_at_depth[depth[i]].push_back(i);

  std::vector<Sample> out;
  for (std::size_t d = 0; d < count_per_skill.size(); ++d) {
    if (count_per_skill[d] < 0) throw std::invalid_argument("lego: negative sample count");
    RngStream rng(derive_seed(spec.seed, d + 1));
    for (long c = 0; c < count_per_skill[d]; ++c) {
      out.push_back(make_lego_sample(spec, pa, nodes_at_depth, static_cast<int>(d) + 1, rng));
    }
  }
  return out;
}

std::vector<Sample> gen_addition(const AdditionSpec& spec,
                                 const std::vector<long>& count_per_skill) {
  spec.check();
  if (static_cast<int>(count_per_skill.size()) > spec.digits) {
    throw std::invalid_argument("addition: skill index exceeds digit count");
  }
  long modulus = 1;
  for (int i = 0; i < spec.digits; ++i) modulus *= 10;

  std::vector<Sample> out;
  for (std::size_t sk = 0; sk < count_per_skill.size(); ++sk) {
    if (count_per_skill[sk] < 0) throw std::invalid_argument("addition: negative sample count");
    RngStream rng(derive_seed(spec.seed, sk + 1));
    for (long c = 0; c < count_per_skill[sk]; ++c) {
      const long a = static_cast<long>(rng.below(static_cast<std::uint64_t>(modulus)));
      const long b = static_cast<long>(rng.below(static_cast<std::uint64_t>(modulus)));
      const long sum = (a + b) % modulus;

      auto spaced = [&](long v) {
        std::string digits = std::to_string(v);
        digits.insert(0, spec.digits - digits.size(), '0');
        std::string s;
        for (std::size_t i = 0; i < digits.size(); ++i) {
          if (i > 0) s += ' ';
          s += digits[i];
        }
        return s;
      };

      long place = 1;
      for (std::size_t i = 0; i < sk; ++i) place *= 10;
      const int digit = static_cast<int>((sum / place) % 10);

      Sample s;
      s.skill = static_cast<int>(sk);
      s.input = "A = " + spaced(a) + " + " + spaced(b) + " , A " + std::to_string(sk) + " = ?";
      s.output = std::to_string(digit);
      out.push_back(std::move(s));
    }
  }
  return out;
}

std::string render_lego_text(const Sample& s) {
  return "Input: " + s.input + " Output: " + s.output + ".";
}

std::string render_addition_text(const Sample& s) {
  return "Input: " + s.input + " Output: " + s.output;
}

namespace {

std::string collapse_spaces(const std::string& s) {
  std::string out;
  bool prev_space = false;
  for (char c : s) {
    const bool space = std::isspace(static_cast<unsigned char>(c)) != 0;
    if (space && prev_space) continue;
    out += space ? ' ' : c;
    prev_space = space;
  }
  while (!out.empty() && out.front() == ' ') out.erase(out.begin());
  while (!out.empty() && out.back() == ' ') out.pop_back();
  return out;
}

std::pair<std::string, std::string> split_input_output(const std::string& text) {
  const auto in_pos = text.find("Input:");
  const auto out_pos = text.find("Output:");
  if (in_pos == std::string::npos || out_pos == std::string::npos || out_pos < in_pos) {
    throw std::invalid_argument("sample text must contain 'Input:' then 'Output:'");
  }
  std::string input = collapse_spaces(text.substr(in_pos + 6, out_pos - in_pos - 6));
  std::string output = collapse_spaces(text.substr(out_pos + 7));
  return {input, output};
}

}  // namespace

std::vector<LegoClause> parse_lego_clauses(const std::string& input) {
  std::string body = collapse_spaces(input);
  if (!body.empty() && body.back() == '.') body.pop_back();

  std::vector<LegoClause> clauses;
  std::istringstream parts(body);
  std::string piece;
  while (std::getline(parts, piece, ',')) {
    piece = collapse_spaces(piece);
    std::istringstream tok(piece);
    std::string var, eq, op, arg;
    if (!(tok >> var >> eq >> op >> arg) || var.size() != 1 || eq != "=" ||
        (op != "val" && op != "not") || arg.size() != 1) {
      throw std::invalid_argument("malformed lego clause: " + piece);
    }
    LegoClause c;
    c.var = var[0];
    c.negate = op == "not";
    if (arg == "0" || arg == "1") {
      c.literal = arg[0] - '0';
    } else {
      c.arg = arg[0];
    }
    clauses.push_back(c);
  }
  if (clauses.empty()) throw std::invalid_argument("lego sample has no clauses");
  return clauses;
}

Sample parse_lego_text(const std::string& text) {
  auto [input, output] = split_input_output(text);
  if (!output.empty() && output.back() == '.') output = collapse_spaces(output.substr(0, output.size() - 1));

  const auto clauses = parse_lego_clauses(input);
  std::map<char, int> node_of;
  int root = -1;
  for (std::size_t i = 0; i < clauses.size(); ++i) {
    if (node_of.count(clauses[i].var)) throw std::invalid_argument("lego: duplicate variable");
    node_of[clauses[i].var] = static_cast<int>(i);
    if (clauses[i].literal >= 0) {
      if (root >= 0) throw std::invalid_argument("lego: multiple root clauses");
      root = static_cast<int>(i);
    }
  }
  if (root < 0) throw std::invalid_argument("lego: no root clause");

  // Depth of every variable via parent links.
  std::vector<int> depth(clauses.size(), 0);
  auto depth_of = [&](auto&& self, int i) -> int {
    if (depth[i] > 0) return depth[i];
    if (depth[i] < 0) throw std::invalid_argument("lego: cyclic clause graph");
    if (clauses[i].literal >= 0) return depth[i] = 1;
    depth[i] = -1;
    const auto it = node_of.find(clauses[i].arg);
    if (it == node_of.end()) throw std::invalid_argument("lego: undefined variable reference");
    return depth[i] = self(self, it->second) + 1;
  };
  for (std::size_t i = 0; i < clauses.size(); ++i) depth_of(depth_of, static_cast<int>(i));

  std::istringstream tok(output);
  std::string var, eq, bit;
  if (!(tok >> var >> eq >> bit) || var.size() != 1 || eq != "=" || (bit != "0" && bit != "1")) {
    throw std::invalid_argument("malformed lego output: " + output);
  }
  const auto it = node_of.find(var[0]);
  if (it == node_of.end()) throw std::invalid_argument("lego: queried variable not defined");

  Sample s;
  s.skill = depth[it->second] - 1;
  s.input = input;
  s.output = output;
  return s;
}

Sample parse_addition_text(const std::string& text) {
  auto [input, output] = split_input_output(text);
  std::istringstream tok(input);
  std::string t;
  std::vector<std::string> tokens;
  while (tok >> t) tokens.push_back(t);
  // A = d .. d + d .. d , A <i> = ?
  if (tokens.size() < 9 || tokens[0] != "A" || tokens[1] != "=" || tokens.back() != "?") {
    throw std::invalid_argument("malformed addition input: " + input);
  }
  const auto query_a = std::find(tokens.begin() + 2, tokens.end(), "A");
  if (query_a == tokens.end() || query_a + 1 == tokens.end()) {
    throw std::invalid_argument("addition: missing query token");
  }
  const int place = std::stoi(*(query_a + 1));
  if (output.size() != 1 || !std::isdigit(static_cast<unsigned char>(output[0]))) {
    throw std::invalid_argument("malformed addition output: " + output);
  }
  Sample s;
  s.skill = place;
  s.input = input;
  s.output = output;
  return s;
}

}  // namespace skillmix
