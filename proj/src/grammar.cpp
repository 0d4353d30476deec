#include "rvc/grammar.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <functional>
#include <limits>
#include <map>
#include <sstream>
#include <unordered_map>

#include "rvc/error.hpp"
#include "rvc/image_io.hpp"

namespace rvc {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

double log_add(double a, double b) {
  if (a == kNegInf) return b;
  if (b == kNegInf) return a;
  const double m = std::max(a, b);
  return m + std::log(std::exp(a - m) + std::exp(b - m));
}

std::string trim(std::string_view s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return std::string(s.substr(b, e - b));
}

bool is_identifier(std::string_view s) {
  if (s.empty() || !(std::isalpha(static_cast<unsigned char>(s[0])) || s[0] == '_')) return false;
  return std::all_of(s.begin(), s.end(),
                     [](char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_'; });
}

// RHS token: quoted terminal run or nonterminal name.
struct Token {
  bool quoted;
  std::string text;
};

std::vector<std::vector<Token>> split_alternatives(std::string_view rhs, int line_no) {
  std::vector<std::vector<Token>> alts(1);
  std::size_t i = 0;
  auto fail = [&](const std::string& what) {
    throw ParseError("grammar line " + std::to_string(line_no) + ": " + what);
  };
  while (i < rhs.size()) {
    const char c = rhs[i];
    if (std::isspace(static_cast<unsigned char>(c))) {
      ++i;
    } else if (c == '|') {
      alts.emplace_back();
      ++i;
    } else if (c == '"') {
      const std::size_t close = rhs.find('"', i + 1);
      if (close == std::string_view::npos) fail("unterminated string");
      alts.back().push_back({true, std::string(rhs.substr(i + 1, close - i - 1))});
      i = close + 1;
    } else {
      std::size_t j = i;
      while (j < rhs.size() && !std::isspace(static_cast<unsigned char>(rhs[j])) && rhs[j] != '|' &&
             rhs[j] != '"') {
        ++j;
      }
      std::string name(rhs.substr(i, j - i));
      if (!is_identifier(name)) fail("bad nonterminal name '" + name + "'");
      alts.back().push_back({false, name});
      i = j;
    }
  }
  return alts;
}

}  // namespace

MetaGrammar MetaGrammar::parse(std::string_view text) {
  MetaGrammar g;
  std::vector<std::pair<std::string, std::vector<std::vector<Token>>>> raw;
  std::map<std::string, std::size_t> index;
  bool have_angles = false;
  std::istringstream in{std::string(text)};
  std::string line;
  int line_no = 0;
  std::string current;
  while (std::getline(in, line)) {
    ++line_no;
    // Strip comments that are not inside quotes.
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
      if (line[i] == '"') quoted = !quoted;
      if (line[i] == '#' && !quoted) {
        line.resize(i);
        break;
      }
    }
    const std::string t = trim(line);
    if (t.empty()) continue;
    if (t.rfind("angles:", 0) == 0) {
      std::istringstream nums(t.substr(7));
      double a;
      g.angles_.clear();
      while (nums >> a) g.angles_.push_back(a);
      if (g.angles_.empty()) throw ParseError("grammar line " + std::to_string(line_no) + ": empty angle list");
      have_angles = true;
      continue;
    }
    if (t.rfind("axiom:", 0) == 0) {
      g.axiom_ = SymbolString(trim(t.substr(6)));
      continue;
    }
    if (t.rfind("g_rule:", 0) == 0) {
      g.g_rule_ = SymbolString(trim(t.substr(7)));
      continue;
    }
    std::string_view rhs;
    if (t[0] == '|') {
      if (current.empty()) throw ParseError("grammar line " + std::to_string(line_no) + ": continuation without rule");
      rhs = std::string_view(t).substr(1);
      auto alts = split_alternatives(rhs, line_no);
      auto& target = raw[index[current]].second;
      for (auto& a : alts) target.push_back(std::move(a));
      continue;
    }
    const std::size_t arrow = t.find("->");
    if (arrow == std::string::npos) throw ParseError("grammar line " + std::to_string(line_no) + ": expected '->'");
    std::string lhs = trim(std::string_view(t).substr(0, arrow));
    if (!is_identifier(lhs)) throw ParseError("grammar line " + std::to_string(line_no) + ": bad nonterminal '" + lhs + "'");
    auto alts = split_alternatives(std::string_view(t).substr(arrow + 2), line_no);
    auto it = index.find(lhs);
    if (it == index.end()) {
      index[lhs] = raw.size();
      raw.push_back({lhs, std::move(alts)});
    } else {
      for (auto& a : alts) raw[it->second].second.push_back(std::move(a));
    }
    current = lhs;
  }
  if (!have_angles) throw ParseError("grammar has no 'angles:' line");
  if (raw.empty()) throw ParseError("grammar has no productions");

  for (auto& [name, alts] : raw) {
    Nonterminal nt;
    nt.name = name;
    for (auto& alt : alts) {
      Production p;
      for (auto& tok : alt) {
        if (tok.quoted) {
          for (char c : tok.text) {
            if (!is_symbol(c)) throw ParseError("terminal '" + std::string(1, c) + "' outside the symbol set");
            p.rhs.push_back({true, c, 0});
          }
        } else {
          auto it = index.find(tok.text);
          if (it == index.end()) throw ParseError("undefined nonterminal '" + tok.text + "'");
          p.rhs.push_back({false, 0, static_cast<std::uint16_t>(it->second)});
          ++p.nonterminal_children;
        }
      }
      nt.productions.push_back(std::move(p));
    }
    g.nts_.push_back(std::move(nt));
  }
  auto s = index.find("Start");
  g.start_ = s == index.end() ? 0 : static_cast<std::uint16_t>(s->second);
  g.finalize();
  return g;
}

void MetaGrammar::finalize() {
  const std::size_t n = nts_.size();
  if (n > 65535) throw ParseError("too many nonterminals");
  choice_logp_.assign(n, 0.0);
  for (std::size_t a = 0; a < n; ++a) {
    if (nts_[a].productions.empty()) throw ParseError("nonterminal '" + nts_[a].name + "' has no productions");
    if (nts_[a].productions.size() > 65535) throw ParseError("too many productions");
    choice_logp_[a] = -std::log(static_cast<double>(nts_[a].productions.size()));
  }
  angle_logp_ = -std::log(static_cast<double>(angles_.size()));

  // Shortest yields; an unproductive nonterminal never gets a finite value.
  constexpr std::size_t kInf = std::numeric_limits<std::size_t>::max();
  min_len_.assign(n, kInf);
  for (bool changed = true; changed;) {
    changed = false;
    for (std::size_t a = 0; a < n; ++a) {
      for (const auto& p : nts_[a].productions) {
        std::size_t len = 0;
        for (const auto& sym : p.rhs) {
          const std::size_t add = sym.terminal ? 1 : min_len_[sym.nonterminal];
          if (add == kInf) {
            len = kInf;
            break;
          }
          len += add;
        }
        if (len < min_len_[a]) {
          min_len_[a] = len;
          changed = true;
        }
      }
    }
  }
  for (std::size_t a = 0; a < n; ++a) {
    if (min_len_[a] == kInf) throw ParseError("nonterminal '" + nts_[a].name + "' derives no terminal string");
  }
  nullable_.assign(n, 0);
  for (std::size_t a = 0; a < n; ++a) nullable_[a] = min_len_[a] == 0;

  // Unit/epsilon cycles would make parse counts infinite.
  std::vector<std::vector<std::uint16_t>> same_span(n);
  for (std::size_t a = 0; a < n; ++a) {
    for (const auto& p : nts_[a].productions) {
      for (std::size_t k = 0; k < p.rhs.size(); ++k) {
        if (p.rhs[k].terminal) continue;
        bool others_nullable = true;
        for (std::size_t m = 0; m < p.rhs.size(); ++m) {
          if (m == k) continue;
          if (p.rhs[m].terminal || !nullable_[p.rhs[m].nonterminal]) others_nullable = false;
        }
        if (others_nullable) same_span[a].push_back(p.rhs[k].nonterminal);
      }
    }
  }
  std::vector<int> color(n, 0);
  std::function<void(std::size_t)> visit = [&](std::size_t a) {
    color[a] = 1;
    for (auto b : same_span[a]) {
      if (color[b] == 1) throw ParseError("grammar has a unit/epsilon cycle through '" + nts_[b].name + "'");
      if (color[b] == 0) visit(b);
    }
    color[a] = 2;
  };
  for (std::size_t a = 0; a < n; ++a) {
    if (color[a] == 0) visit(a);
  }

  // Expected derivation size solves (I - M) x = 1 with M the mean-offspring matrix.
  std::vector<std::vector<double>> m(n, std::vector<double>(n + 1, 0.0));
  for (std::size_t a = 0; a < n; ++a) {
    const double w = 1.0 / static_cast<double>(nts_[a].productions.size());
    m[a][a] = 1.0;
    m[a][n] = 1.0;
    for (const auto& p : nts_[a].productions) {
      for (const auto& sym : p.rhs) {
        if (!sym.terminal) m[a][sym.nonterminal] -= w;
      }
    }
  }
  for (std::size_t col = 0; col < n; ++col) {
    std::size_t piv = col;
    for (std::size_t r = col + 1; r < n; ++r) {
      if (std::abs(m[r][col]) > std::abs(m[piv][col])) piv = r;
    }
    if (std::abs(m[piv][col]) < 1e-12) throw ParseError("grammar has infinite expected derivation length");
    std::swap(m[col], m[piv]);
    for (std::size_t r = 0; r < n; ++r) {
      if (r == col) continue;
      const double f = m[r][col] / m[col][col];
      for (std::size_t c = col; c <= n; ++c) m[r][c] -= f * m[col][c];
    }
  }
  expected_size_.assign(n, 0.0);
  for (std::size_t a = 0; a < n; ++a) {
    expected_size_[a] = m[a][n] / m[a][a];
    if (!(expected_size_[a] >= 1.0) || !std::isfinite(expected_size_[a])) {
      throw ParseError("grammar has infinite expected derivation length");
    }
  }
}

MetaGrammar MetaGrammar::load(const std::filesystem::path& path) { return parse(read_file(path)); }

std::string_view MetaGrammar::builtin_text() {
  static constexpr std::string_view text =
#include "builtin_grammar.inc"
      ;
  return text;
}

const MetaGrammar& MetaGrammar::builtin() {
  static const MetaGrammar g = parse(builtin_text());
  return g;
}

std::string MetaGrammar::to_text() const {
  std::ostringstream out;
  out << "angles:";
  for (double a : angles_) out << ' ' << a;
  out << "\naxiom: " << axiom_.str() << "\ng_rule: " << g_rule_.str() << "\n";
  for (const auto& nt : nts_) {
    out << nt.name << " ->";
    for (std::size_t p = 0; p < nt.productions.size(); ++p) {
      if (p) out << " |";
      const auto& rhs = nt.productions[p].rhs;
      if (rhs.empty()) out << " \"\"";
      std::size_t i = 0;
      while (i < rhs.size()) {
        if (rhs[i].terminal) {
          out << " \"";
          while (i < rhs.size() && rhs[i].terminal) out << rhs[i++].terminal_char;
          out << '"';
        } else {
          out << ' ' << nts_[rhs[i++].nonterminal].name;
        }
      }
    }
    out << "\n";
  }
  return out.str();
}

std::size_t subtree_end(const MetaGrammar& g, const DerivationTree& t, std::size_t i) {
  std::size_t pending = 1;
  std::size_t j = i;
  while (pending > 0) {
    if (j >= t.nodes.size()) throw Error("malformed derivation tree");
    const Choice c = t.nodes[j];
    pending += g.nonterminal(c.nonterminal).productions[c.production].nonterminal_children;
    --pending;
    ++j;
  }
  return j;
}

namespace {

std::size_t emit_yield(const MetaGrammar& g, const DerivationTree& t, std::size_t pos, std::string& out) {
  if (pos >= t.nodes.size()) throw Error("malformed derivation tree");
  const Choice c = t.nodes[pos];
  const Production& p = g.nonterminal(c.nonterminal).productions[c.production];
  std::size_t next = pos + 1;
  for (const auto& sym : p.rhs) {
    if (sym.terminal) {
      out += sym.terminal_char;
    } else {
      if (next >= t.nodes.size() || t.nodes[next].nonterminal != sym.nonterminal) {
        throw Error("malformed derivation tree");
      }
      next = emit_yield(g, t, next, out);
    }
  }
  return next;
}

}  // namespace

std::string derivation_yield(const MetaGrammar& g, const DerivationTree& t) {
  std::string out;
  if (t.nodes.empty() || t.nodes[0].nonterminal != g.start()) throw Error("derivation does not start at Start");
  if (emit_yield(g, t, 0, out) != t.nodes.size()) throw Error("malformed derivation tree");
  return out;
}

LSystem to_lsystem(const MetaGrammar& g, const DerivationTree& t) {
  LSystem l;
  l.axiom = g.axiom();
  l.g_rule = g.g_rule();
  l.f_rule = SymbolString::trusted(derivation_yield(g, t));
  l.angle_deg = g.angles().at(t.angle_index);
  return l;
}

double nodes_log_prob(const MetaGrammar& g, const DerivationTree& t, std::size_t begin, std::size_t end) {
  double lp = 0.0;
  for (std::size_t i = begin; i < end; ++i) lp += g.choice_log_prob(t.nodes[i].nonterminal);
  return lp;
}

double derivation_log_prob(const MetaGrammar& g, const DerivationTree& t) {
  return nodes_log_prob(g, t, 0, t.nodes.size()) + g.angle_log_prob();
}

void sample_subtree(const MetaGrammar& g, std::uint16_t nt, Rng& rng, std::vector<Choice>& out,
                    std::size_t max_nodes) {
  // Explicit stack of nonterminals still to expand, in preorder.
  std::vector<std::uint16_t> stack{nt};
  std::size_t produced = 0;
  while (!stack.empty()) {
    const std::uint16_t a = stack.back();
    stack.pop_back();
    const auto& prods = g.nonterminal(a).productions;
    const auto k = static_cast<std::uint16_t>(uniform_index(rng, prods.size()));
    out.push_back({a, k});
    if (++produced > max_nodes) throw DerivationTooLarge("sampled derivation exceeded node limit");
    const auto& rhs = prods[k].rhs;
    for (auto it = rhs.rbegin(); it != rhs.rend(); ++it) {
      if (!it->terminal) stack.push_back(it->nonterminal);
    }
  }
}

DerivationTree sample_derivation(const MetaGrammar& g, Rng& rng) {
  for (;;) {
    DerivationTree t;
    t.angle_index = uniform_index(rng, g.angles().size());
    try {
      sample_subtree(g, g.start(), rng, t.nodes);
      return t;
    } catch (const DerivationTooLarge&) {
    }
  }
}

std::pair<LSystem, DerivationTree> sample_lsystem(const MetaGrammar& g, Rng& rng, SampleMode mode,
                                                  std::size_t rejection_limit, TurnConvention turns) {
  std::map<std::string, std::size_t> failures;
  for (std::size_t attempt = 0; attempt < rejection_limit; ++attempt) {
    DerivationTree t = sample_derivation(g, rng);
    LSystem l = to_lsystem(g, t);
    if (mode == SampleMode::Prior) return {std::move(l), std::move(t)};
    // Guard against pathological rules whose S_2 is enormous.
    if (expanded_length(l.f_rule, l) > 64 * kMaxSymbols) {
      ++failures["length"];
      continue;
    }
    const ConstraintReport r = validate_stimulus_constraints(l, turns);
    if (r.all_pass()) return {std::move(l), std::move(t)};
    ++failures[r.first_failure()];
  }
  std::string worst = "none";
  std::size_t worst_n = 0;
  for (const auto& [name, count] : failures) {
    if (count > worst_n) {
      worst = name;
      worst_n = count;
    }
  }
  throw RejectionLimitExceeded(rejection_limit, worst);
}

namespace {

// Inside probabilities over spans of one string, computed lazily.
class Chart {
 public:
  Chart(const MetaGrammar& g, std::string_view s)
      : g_(g), s_(s), n_(s.size()), table_(g.nonterminals().size() * (n_ + 1) * (n_ + 1), -1.0) {}

  double inside(std::uint16_t a, std::size_t i, std::size_t j) {
    double& cell = table_[(static_cast<std::size_t>(a) * (n_ + 1) + i) * (n_ + 1) + j];
    if (cell >= 0.0) return cell;
    if (g_.min_length(a) > j - i) {
      cell = 0.0;
      return cell;
    }
    double total = 0.0;
    const auto& prods = g_.nonterminal(a).productions;
    const double w = 1.0 / static_cast<double>(prods.size());
    for (const auto& p : prods) total += w * production_inside(p, i, j);
    cell = total;
    return cell;
  }

  double production_inside(const Production& p, std::size_t i, std::size_t j) {
    // reach[e - i]: probability that the first k symbols derive s[i, e).
    std::vector<double> reach(j - i + 1, 0.0), next(j - i + 1);
    reach[0] = 1.0;
    std::size_t rest_min = 0;
    for (const auto& sym : p.rhs) rest_min += sym.terminal ? 1 : g_.min_length(sym.nonterminal);
    for (const auto& sym : p.rhs) {
      const std::size_t sym_min = sym.terminal ? 1 : g_.min_length(sym.nonterminal);
      rest_min -= sym_min;
      std::fill(next.begin(), next.end(), 0.0);
      for (std::size_t e0 = i; e0 <= j; ++e0) {
        const double r = reach[e0 - i];
        if (r == 0.0) continue;
        if (sym.terminal) {
          if (e0 < j && s_[e0] == sym.terminal_char) next[e0 + 1 - i] += r;
        } else {
          for (std::size_t e1 = e0 + sym_min; e1 + rest_min <= j; ++e1) {
            const double v = inside(sym.nonterminal, e0, e1);
            if (v > 0.0) next[e1 - i] += r * v;
          }
        }
      }
      std::swap(reach, next);
    }
    return reach[j - i];
  }

  // Appends up to `limit` derivations of s[i, j) from `a`, each in preorder.
  void derivations(std::uint16_t a, std::size_t i, std::size_t j, std::size_t limit,
                   std::vector<std::vector<Choice>>& out) {
    if (inside(a, i, j) == 0.0) return;
    const auto& prods = g_.nonterminal(a).productions;
    for (std::size_t k = 0; k < prods.size() && out.size() < limit; ++k) {
      if (production_inside(prods[k], i, j) == 0.0) continue;
      std::vector<Choice> prefix{{a, static_cast<std::uint16_t>(k)}};
      expand_rhs(prods[k], 0, i, j, prefix, limit, out);
    }
  }

 private:
  void expand_rhs(const Production& p, std::size_t k, std::size_t pos, std::size_t j,
                  std::vector<Choice>& prefix, std::size_t limit, std::vector<std::vector<Choice>>& out) {
    if (out.size() >= limit) return;
    if (k == p.rhs.size()) {
      if (pos == j) out.push_back(prefix);
      return;
    }
    const auto& sym = p.rhs[k];
    if (sym.terminal) {
      if (pos < j && s_[pos] == sym.terminal_char) expand_rhs(p, k + 1, pos + 1, j, prefix, limit, out);
      return;
    }
    for (std::size_t e = pos; e <= j && out.size() < limit; ++e) {
      if (inside(sym.nonterminal, pos, e) == 0.0) continue;
      std::vector<std::vector<Choice>> subs;
      derivations(sym.nonterminal, pos, e, limit, subs);
      for (auto& sub : subs) {
        const std::size_t mark = prefix.size();
        prefix.insert(prefix.end(), sub.begin(), sub.end());
        expand_rhs(p, k + 1, e, j, prefix, limit, out);
        prefix.resize(mark);
        if (out.size() >= limit) return;
      }
    }
  }

  const MetaGrammar& g_;
  std::string_view s_;
  std::size_t n_;
  std::vector<double> table_;
};

std::optional<std::size_t> angle_index_of(const MetaGrammar& g, double angle) {
  for (std::size_t i = 0; i < g.angles().size(); ++i) {
    if (std::abs(g.angles()[i] - angle) < 1e-9) return i;
  }
  return std::nullopt;
}

}  // namespace

double rule_log_prob(const MetaGrammar& g, std::string_view f_rule) {
  Chart chart(g, f_rule);
  const double p = chart.inside(g.start(), 0, f_rule.size());
  return p > 0.0 ? std::log(p) : kNegInf;
}

double log_prior(const MetaGrammar& g, const LSystem& l) {
  if (!(l.axiom == g.axiom()) || !(l.g_rule == g.g_rule())) {
    throw NotInSupport("axiom or G-rule differs from the grammar's");
  }
  if (!angle_index_of(g, l.angle_deg)) throw NotInSupport("angle is not in the grammar's angle set");
  const double lp = rule_log_prob(g, l.f_rule.view());
  if (lp == kNegInf) throw NotInSupport("F-rule '" + l.f_rule.str() + "' is not derivable");
  return lp + g.angle_log_prob();
}

std::vector<DerivationTree> parse_derivations(const MetaGrammar& g, const LSystem& l, std::size_t max_trees) {
  std::vector<DerivationTree> trees;
  if (!(l.axiom == g.axiom()) || !(l.g_rule == g.g_rule())) return trees;
  const auto angle = angle_index_of(g, l.angle_deg);
  if (!angle) return trees;
  Chart chart(g, l.f_rule.view());
  std::vector<std::vector<Choice>> raw;
  chart.derivations(g.start(), 0, l.f_rule.raw_size(), max_trees, raw);
  for (auto& nodes : raw) trees.push_back({std::move(nodes), *angle});
  return trees;
}

double regeneration_log_q(const MetaGrammar& g, const DerivationTree& from, const DerivationTree& to,
                          double program_extra, bool same_context) {
  const std::size_t nf = from.nodes.size();
  const std::size_t nt = to.nodes.size();
  const double pick = -std::log(static_cast<double>(nf + 1));
  // The program node redraws the angle and the whole rule.
  double total =
      pick - std::log(static_cast<double>(g.angles().size())) + program_extra + nodes_log_prob(g, to, 0, nt);
  if (!same_context || from.angle_index != to.angle_index) return total;
  std::size_t prefix = 0;
  while (prefix < nf && prefix < nt && from.nodes[prefix] == to.nodes[prefix]) ++prefix;
  // Node i qualifies when both trees agree outside the subtree rooted at i.
  for (std::size_t i = 0; i < nf && i <= prefix && i < nt; ++i) {
    if (from.nodes[i].nonterminal != to.nodes[i].nonterminal) break;
    const std::size_t ef = subtree_end(g, from, i);
    const std::size_t et = subtree_end(g, to, i);
    if (nf - ef != nt - et) continue;
    if (!std::equal(from.nodes.begin() + static_cast<std::ptrdiff_t>(ef), from.nodes.end(),
                    to.nodes.begin() + static_cast<std::ptrdiff_t>(et))) {
      continue;
    }
    total = log_add(total, pick + nodes_log_prob(g, to, i, et));
  }
  return total;
}

SubtreeProposal regenerate_subtree(const MetaGrammar& g, const DerivationTree& t, Rng& rng) {
  std::size_t i = uniform_index(rng, t.nodes.size() + 1);
  SubtreeProposal p;
  p.tree.angle_index = t.angle_index;
  if (i == t.nodes.size()) {
    p.tree.angle_index = uniform_index(rng, g.angles().size());
    p.whole_program = true;
    i = 0;
  }
  const std::size_t end = subtree_end(g, t, i);
  std::vector<Choice> fresh;
  sample_subtree(g, t.nodes[i].nonterminal, rng, fresh);
  p.tree.nodes.reserve(t.nodes.size() - (end - i) + fresh.size());
  p.tree.nodes.insert(p.tree.nodes.end(), t.nodes.begin(), t.nodes.begin() + static_cast<std::ptrdiff_t>(i));
  p.tree.nodes.insert(p.tree.nodes.end(), fresh.begin(), fresh.end());
  p.tree.nodes.insert(p.tree.nodes.end(), t.nodes.begin() + static_cast<std::ptrdiff_t>(end), t.nodes.end());
  p.forward_logq = regeneration_log_q(g, t, p.tree);
  p.reverse_logq = regeneration_log_q(g, p.tree, t);
  return p;
}

std::vector<SupportEntry> enumerate_support(const MetaGrammar& g, std::size_t max_len, std::size_t limit) {
  std::map<std::string, double> mass;  // yield -> summed log-probability
  std::size_t derivations = 0;
  std::string prefix;
  std::vector<GrammarSymbol> pending;  // reversed: back() is expanded next
  std::size_t pending_min = 0;

  std::function<void(double)> walk = [&](double lp) {
    if (prefix.size() + pending_min > max_len) return;
    if (pending.empty()) {
      if (++derivations > limit) throw SupportTooLarge("support exceeds " + std::to_string(limit) + " derivations");
      auto [it, inserted] = mass.try_emplace(prefix, lp);
      if (!inserted) it->second = log_add(it->second, lp);
      return;
    }
    const GrammarSymbol sym = pending.back();
    pending.pop_back();
    if (sym.terminal) {
      pending_min -= 1;
      prefix.push_back(sym.terminal_char);
      walk(lp);
      prefix.pop_back();
      pending_min += 1;
    } else {
      pending_min -= g.min_length(sym.nonterminal);
      const auto& prods = g.nonterminal(sym.nonterminal).productions;
      for (const auto& p : prods) {
        std::size_t added = 0;
        for (auto it = p.rhs.rbegin(); it != p.rhs.rend(); ++it) {
          pending.push_back(*it);
          added += it->terminal ? 1 : g.min_length(it->nonterminal);
        }
        pending_min += added;
        walk(lp + g.choice_log_prob(sym.nonterminal));
        pending_min -= added;
        pending.resize(pending.size() - p.rhs.size());
      }
      pending_min += g.min_length(sym.nonterminal);
    }
    pending.push_back(sym);
  };
  pending.push_back({false, 0, g.start()});
  pending_min = g.min_length(g.start());
  walk(0.0);

  std::vector<SupportEntry> out;
  out.reserve(mass.size() * g.angles().size());
  for (const auto& [rule, lp] : mass) {
    for (double angle : g.angles()) {
      LSystem l;
      l.axiom = g.axiom();
      l.g_rule = g.g_rule();
      l.f_rule = SymbolString::trusted(rule);
      l.angle_deg = angle;
      out.push_back({std::move(l), lp + g.angle_log_prob()});
    }
  }
  return out;
}

std::vector<double> length_distribution(const MetaGrammar& g, std::size_t max_len) {
  const std::size_t n = g.nonterminals().size();
  std::vector<std::vector<double>> dist(n, std::vector<double>(max_len + 1, 0.0));
  const std::size_t max_iters = (max_len + 2) * (n + 2);
  for (std::size_t iter = 0; iter < max_iters; ++iter) {
    bool changed = false;
    for (std::size_t a = 0; a < n; ++a) {
      std::vector<double> acc(max_len + 1, 0.0);
      const auto& prods = g.nonterminal(static_cast<std::uint16_t>(a)).productions;
      const double w = 1.0 / static_cast<double>(prods.size());
      for (const auto& p : prods) {
        std::vector<double> cur(max_len + 1, 0.0);
        cur[0] = 1.0;
        for (const auto& sym : p.rhs) {
          std::vector<double> nxt(max_len + 1, 0.0);
          for (std::size_t x = 0; x <= max_len; ++x) {
            if (cur[x] == 0.0) continue;
            if (sym.terminal) {
              if (x + 1 <= max_len) nxt[x + 1] += cur[x];
            } else {
              const auto& d = dist[sym.nonterminal];
              for (std::size_t y = 0; x + y <= max_len; ++y) nxt[x + y] += cur[x] * d[y];
            }
          }
          cur = std::move(nxt);
        }
        for (std::size_t x = 0; x <= max_len; ++x) acc[x] += w * cur[x];
      }
      if (acc != dist[a]) {
        dist[a] = std::move(acc);
        changed = true;
      }
    }
    if (!changed) break;
  }
  return dist[g.start()];
}

}  // namespace rvc
