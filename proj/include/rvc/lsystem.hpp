#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>

namespace rvc {

/// Upper bound on the length of any expanded string considered during inference.
inline constexpr std::size_t kMaxSymbols = 512;

/// Largest recursion depth a token can have.
inline constexpr int kMaxDepth = 4;

enum class Symbol : char {
  Grow = 'F',
  Inert = 'G',
  Plus = '+',
  Minus = '-',
  Separator = ' ',
};

constexpr bool is_symbol(char c) {
  return c == 'F' || c == 'G' || c == '+' || c == '-' || c == ' ';
}
constexpr bool is_forward(char c) { return c == 'F' || c == 'G'; }
constexpr bool is_turn(char c) { return c == '+' || c == '-'; }

/// A string over {F, G, +, -, space}. Separators carry no turtle action and
/// are excluded from length().
class SymbolString {
 public:
  SymbolString() = default;
  /// Throws ParseError on characters outside the symbol set.
  explicit SymbolString(std::string_view text);
  SymbolString(const char* text) : SymbolString(std::string_view(text)) {}

  /// Wraps text already known to be valid (no check).
  static SymbolString trusted(std::string text);

  const std::string& str() const { return chars_; }
  std::string_view view() const { return chars_; }
  std::size_t raw_size() const { return chars_.size(); }
  bool empty() const { return chars_.empty(); }
  char operator[](std::size_t i) const { return chars_[i]; }
  auto begin() const { return chars_.begin(); }
  auto end() const { return chars_.end(); }

  std::size_t length() const;
  std::size_t count_grow() const;
  std::size_t count_inert() const;
  std::size_t count_forward() const { return count_grow() + count_inert(); }
  std::size_t count_turns() const;

  friend bool operator==(const SymbolString&, const SymbolString&) = default;

 private:
  std::string chars_;
};

/// A concept type: axiom, turn angle and rewrite rules for F and G.
struct LSystem {
  SymbolString axiom{"F"};
  double angle_deg = 60.0;
  SymbolString f_rule{"F"};
  SymbolString g_rule{"G"};

  friend bool operator==(const LSystem&, const LSystem&) = default;
};

/// Length of expand_once(s, l) without building it.
std::size_t expanded_length(const SymbolString& s, const LSystem& l);

/// One parallel rewrite of every F and G. Throws CapExceeded when the result
/// is longer than `cap`.
SymbolString expand_once(const SymbolString& s, const LSystem& l, std::size_t cap = kMaxSymbols);

/// As expand_once, but returns nullopt instead of throwing.
std::optional<SymbolString> try_expand_once(const SymbolString& s, const LSystem& l,
                                            std::size_t cap = kMaxSymbols);

/// S_depth: the axiom rewritten `depth` times. CapExceeded carries the first
/// depth whose string is too long.
SymbolString expand_to_depth(const LSystem& l, int depth, std::size_t cap = kMaxSymbols);

/// Swaps F and G at `index`. Throws NotAForwardSymbol otherwise.
SymbolString toggle_segment(const SymbolString& s, std::size_t index);

}  // namespace rvc
