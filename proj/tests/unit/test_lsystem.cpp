#include <doctest.h>

#include <random>
#include <string>

#include "rvc/error.hpp"
#include "rvc/lsystem.hpp"

using namespace rvc;

namespace {

std::string naive_rewrite(const std::string& s, const std::string& f, const std::string& g) {
  std::string out;
  for (char c : s) {
    if (c == 'F') {
      out += f;
    } else if (c == 'G') {
      out += g;
    } else {
      out += c;
    }
  }
  return out;
}

std::string random_string(std::mt19937& rng, int max_len) {
  static const char alphabet[] = {'F', 'G', '+', '-', ' '};
  std::uniform_int_distribution<int> len(0, max_len), pick(0, 4);
  std::string s;
  for (int i = len(rng); i > 0; --i) s += alphabet[pick(rng)];
  return s;
}

const LSystem kSprout{"F", 60.0, "G-G+F+G-G", "G"};

}  // namespace

TEST_CASE("expand_once matches naive substitution on 200 random cases") {
  std::mt19937 rng(2024);
  for (int i = 0; i < 200; ++i) {
    const std::string s = random_string(rng, 30);
    const std::string f = random_string(rng, 9);
    const std::string g = random_string(rng, 4);
    LSystem l{"F", 45.0, SymbolString(f), SymbolString(g)};
    const std::string want = naive_rewrite(s, f, g);
    CHECK(expand_once(SymbolString(s), l, 100000).str() == want);
    CHECK(expanded_length(SymbolString(s), l) == SymbolString(want).length());
  }
}

TEST_CASE("a sprouting system rewrites") {
  CHECK(expand_once("F", kSprout).str() == "G-G+F+G-G");
  CHECK(expand_to_depth(kSprout, 0).str() == "F");
  CHECK(expand_to_depth(kSprout, 1).str() == "G-G+F+G-G");
  const SymbolString s2 = expand_to_depth(kSprout, 2);
  CHECK(s2.str() == naive_rewrite("G-G+F+G-G", "G-G+F+G-G", "G"));
  CHECK(s2.length() == 17);
  CHECK(s2.count_grow() == 1);
  CHECK(s2.count_inert() == 8);
  CHECK(s2.count_turns() == 8);
}

TEST_CASE("length recurrence with an inert G rule") {
  const LSystem l{"F", 60.0, "F-G+F+G-F", "G"};
  SymbolString s = l.axiom;
  for (int d = 1; d <= 4; ++d) {
    const SymbolString next = expand_to_depth(l, d, 100000);
    CHECK(next.length() == s.length() + s.count_grow() * (l.f_rule.length() - 1));
    s = next;
  }
}

TEST_CASE("identity rules are a fixed point") {
  const LSystem l{"F", 90.0, "F", "G"};
  CHECK(expand_to_depth(l, 4).str() == "F");
}

TEST_CASE("cap handling") {
  const LSystem l{"F", 60.0, "F-F+F+F-F", "G"};
  CHECK_THROWS_AS(expand_once(expand_to_depth(l, 3, 10000), l, 512), CapExceeded);
  CHECK_FALSE(try_expand_once(expand_to_depth(l, 3, 10000), l, 512).has_value());
  try {
    expand_to_depth(l, 4, 100);
    FAIL("expected CapExceeded");
  } catch (const CapExceeded& e) {
    CHECK(e.depth() == 3);
    CHECK(e.cap() == 100);
    CHECK(e.length() > 100);
  }
}

TEST_CASE("separators are copied and excluded from length") {
  const SymbolString s("F F");
  CHECK(s.length() == 2);
  CHECK(s.raw_size() == 3);
  const LSystem l{"F", 60.0, "F+F", "G"};
  CHECK(expand_once(s, l).str() == "F+F F+F");
}

TEST_CASE("toggle_segment") {
  CHECK(toggle_segment("G-G+F+G-G", 4).str() == "G-G+G+G-G");
  CHECK(toggle_segment("G-G+G+G-G", 0).str() == "F-G+G+G-G");
  const SymbolString s("G-G+F+G-G");
  CHECK(toggle_segment(toggle_segment(s, 2), 2) == s);
  CHECK_THROWS_AS(toggle_segment(s, 1), NotAForwardSymbol);
}

TEST_CASE("invalid characters are rejected") {
  CHECK_THROWS_AS(SymbolString("F+X"), ParseError);
  CHECK_THROWS_AS(SymbolString("F[F]"), ParseError);
}
