#include "rvc/lsystem.hpp"

#include <algorithm>

#include "rvc/error.hpp"

namespace rvc {

SymbolString::SymbolString(std::string_view text) : chars_(text) {
  for (std::size_t i = 0; i < chars_.size(); ++i) {
    if (!is_symbol(chars_[i])) {
      throw ParseError("invalid symbol '" + std::string(1, chars_[i]) + "' at position " +
                       std::to_string(i));
    }
  }
}

SymbolString SymbolString::trusted(std::string text) {
  SymbolString s;
  s.chars_ = std::move(text);
  return s;
}

std::size_t SymbolString::length() const {
  return chars_.size() - static_cast<std::size_t>(std::count(chars_.begin(), chars_.end(), ' '));
}

std::size_t SymbolString::count_grow() const {
  return static_cast<std::size_t>(std::count(chars_.begin(), chars_.end(), 'F'));
}

std::size_t SymbolString::count_inert() const {
  return static_cast<std::size_t>(std::count(chars_.begin(), chars_.end(), 'G'));
}

std::size_t SymbolString::count_turns() const {
  return static_cast<std::size_t>(
      std::count_if(chars_.begin(), chars_.end(), [](char c) { return is_turn(c); }));
}

std::size_t expanded_length(const SymbolString& s, const LSystem& l) {
  const std::size_t f_len = l.f_rule.length();
  const std::size_t g_len = l.g_rule.length();
  std::size_t n = 0;
  for (char c : s) {
    if (c == 'F') {
      n += f_len;
    } else if (c == 'G') {
      n += g_len;
    } else if (c != ' ') {
      ++n;
    }
  }
  return n;
}

std::optional<SymbolString> try_expand_once(const SymbolString& s, const LSystem& l,
                                            std::size_t cap) {
  if (expanded_length(s, l) > cap) return std::nullopt;
  std::string out;
  out.reserve(s.raw_size() + s.count_grow() * l.f_rule.raw_size() +
              s.count_inert() * l.g_rule.raw_size());
  for (char c : s) {
    if (c == 'F') {
      out += l.f_rule.str();
    } else if (c == 'G') {
      out += l.g_rule.str();
    } else {
      out += c;
    }
  }
  return SymbolString::trusted(std::move(out));
}

SymbolString expand_once(const SymbolString& s, const LSystem& l, std::size_t cap) {
  auto out = try_expand_once(s, l, cap);
  if (!out) throw CapExceeded(expanded_length(s, l), cap);
  return std::move(*out);
}

SymbolString expand_to_depth(const LSystem& l, int depth, std::size_t cap) {
  if (depth < 0) throw Error("negative recursion depth");
  if (l.axiom.length() > cap) throw CapExceeded(l.axiom.length(), cap, 0);
  SymbolString s = l.axiom;
  for (int d = 1; d <= depth; ++d) {
    auto next = try_expand_once(s, l, cap);
    if (!next) throw CapExceeded(expanded_length(s, l), cap, d);
    s = std::move(*next);
  }
  return s;
}

SymbolString toggle_segment(const SymbolString& s, std::size_t index) {
  if (index >= s.raw_size() || !is_forward(s[index])) {
    throw NotAForwardSymbol("position " + std::to_string(index) + " does not hold F or G");
  }
  std::string out = s.str();
  out[index] = out[index] == 'F' ? 'G' : 'F';
  return SymbolString::trusted(std::move(out));
}

}  // namespace rvc
