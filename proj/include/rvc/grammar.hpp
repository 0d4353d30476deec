#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "rvc/lsystem.hpp"
#include "rvc/random.hpp"
#include "rvc/turtle.hpp"

namespace rvc {

struct GrammarSymbol {
  bool terminal = true;
  char terminal_char = 0;
  std::uint16_t nonterminal = 0;
  friend bool operator==(const GrammarSymbol&, const GrammarSymbol&) = default;
};

struct Production {
  std::vector<GrammarSymbol> rhs;
  std::uint16_t nonterminal_children = 0;
};

struct Nonterminal {
  std::string name;
  std::vector<Production> productions;
};

/// Probabilistic context-free grammar over F-rules. Every applicable
/// production is chosen with equal probability; the turn angle is drawn
/// uniformly from a discrete set.
///
/// Text format (see docs/grammar.md):
///
///     angles: 30 45 60 90
///     Start -> "G-" Start "-G" | Core
///     Core  -> "F" | "G"
///
/// Quoted strings are sequences of terminals; `""` is the empty string.
class MetaGrammar {
 public:
  /// Throws ParseError on malformed text or an invalid grammar.
  static MetaGrammar parse(std::string_view text);
  static MetaGrammar load(const std::filesystem::path& path);
  /// The built-in grammar shipped with the library.
  static const MetaGrammar& builtin();
  static std::string_view builtin_text();

  const std::vector<Nonterminal>& nonterminals() const { return nts_; }
  const Nonterminal& nonterminal(std::uint16_t i) const { return nts_[i]; }
  std::uint16_t start() const { return start_; }
  const std::vector<double>& angles() const { return angles_; }
  const SymbolString& axiom() const { return axiom_; }
  const SymbolString& g_rule() const { return g_rule_; }

  /// -log of the number of productions of nonterminal `nt`.
  double choice_log_prob(std::uint16_t nt) const { return choice_logp_[nt]; }
  double angle_log_prob() const { return angle_logp_; }
  bool nullable(std::uint16_t nt) const { return nullable_[nt] != 0; }
  /// Shortest yield (in terminals) derivable from `nt`.
  std::size_t min_length(std::uint16_t nt) const { return min_len_[nt]; }
  /// Expected number of derivation nodes below each nonterminal.
  const std::vector<double>& expected_size() const { return expected_size_; }

  std::string to_text() const;

 private:
  void finalize();

  std::vector<Nonterminal> nts_;
  std::uint16_t start_ = 0;
  std::vector<double> angles_;
  SymbolString axiom_{"F"};
  SymbolString g_rule_{"G"};
  std::vector<double> choice_logp_;
  double angle_logp_ = 0.0;
  std::vector<std::uint8_t> nullable_;
  std::vector<std::size_t> min_len_;
  std::vector<double> expected_size_;
};

/// One applied production.
struct Choice {
  std::uint16_t nonterminal = 0;
  std::uint16_t production = 0;
  friend bool operator==(const Choice&, const Choice&) = default;
};

/// A derivation of an F-rule (productions in preorder) plus the angle choice.
struct DerivationTree {
  std::vector<Choice> nodes;
  std::size_t angle_index = 0;
  friend bool operator==(const DerivationTree&, const DerivationTree&) = default;
};

/// Default limit on the number of nodes in a sampled derivation.
inline constexpr std::size_t kMaxDerivationNodes = 4096;

/// Index one past the last node of the subtree rooted at `i`.
std::size_t subtree_end(const MetaGrammar& g, const DerivationTree& t, std::size_t i);

std::string derivation_yield(const MetaGrammar& g, const DerivationTree& t);
LSystem to_lsystem(const MetaGrammar& g, const DerivationTree& t);

/// Sum of choice log-probabilities over nodes [begin, end).
double nodes_log_prob(const MetaGrammar& g, const DerivationTree& t, std::size_t begin,
                      std::size_t end);
/// Log-probability of the whole derivation, including the angle choice.
double derivation_log_prob(const MetaGrammar& g, const DerivationTree& t);

/// Appends a fresh derivation of `nt` in preorder. Throws DerivationTooLarge.
void sample_subtree(const MetaGrammar& g, std::uint16_t nt, Rng& rng, std::vector<Choice>& out,
                    std::size_t max_nodes = kMaxDerivationNodes);
DerivationTree sample_derivation(const MetaGrammar& g, Rng& rng);

enum class SampleMode {
  Prior,     ///< any derivation
  Stimulus,  ///< rejection-sampled until every stimulus constraint holds
};

inline constexpr std::size_t kRejectionLimit = 10000;

/// Samples a concept type and its derivation. Throws RejectionLimitExceeded.
std::pair<LSystem, DerivationTree> sample_lsystem(const MetaGrammar& g, Rng& rng,
                                                  SampleMode mode = SampleMode::Prior,
                                                  std::size_t rejection_limit = kRejectionLimit,
                                                  TurnConvention turns = kDefaultTurns);

/// log P(f_rule), summed over every parse. Returns -infinity if underivable.
double rule_log_prob(const MetaGrammar& g, std::string_view f_rule);

/// log P(L). Throws NotInSupport when L cannot be derived.
double log_prior(const MetaGrammar& g, const LSystem& l);

/// Every derivation tree of `l` (up to `max_trees`). Empty if not derivable.
std::vector<DerivationTree> parse_derivations(const MetaGrammar& g, const LSystem& l,
                                              std::size_t max_trees = 64);

struct SubtreeProposal {
  DerivationTree tree;
  double forward_logq = 0.0;
  double reverse_logq = 0.0;
  bool whole_program = false;  ///< the program node was picked
};

/// Picks a node uniformly and resamples its subtree from the grammar. Besides
/// the rule's nodes there is one program node, which redraws the angle and the
/// whole rule. The returned densities sum over every node whose regeneration
/// could produce the same move, so they are exact for Metropolis-Hastings.
SubtreeProposal regenerate_subtree(const MetaGrammar& g, const DerivationTree& t, Rng& rng);

/// log q(from -> to) under regenerate_subtree; -infinity if unreachable.
/// `program_extra` adds the log-density of anything else the program node
/// redraws; `same_context` is false when that extra state differs, which rules
/// out every path except the program node.
double regeneration_log_q(const MetaGrammar& g, const DerivationTree& from, const DerivationTree& to,
                          double program_extra = 0.0, bool same_context = true);

struct SupportEntry {
  LSystem lsystem;
  double log_prior = 0.0;
};

inline constexpr std::size_t kSupportLimit = 200000;

/// Every system whose F-rule has at most `max_len` terminals, with exact
/// priors. Throws SupportTooLarge past `limit` derivations.
std::vector<SupportEntry> enumerate_support(const MetaGrammar& g, std::size_t max_len,
                                            std::size_t limit = kSupportLimit);

/// P(|f_rule| = n) for n = 0..max_len, by dynamic programming over the grammar.
std::vector<double> length_distribution(const MetaGrammar& g, std::size_t max_len);

}  // namespace rvc
