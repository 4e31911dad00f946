#include <algorithm>
#include <chrono>
#include <map>
#include <numeric>
#include <random>
#include <set>

#include <gtest/gtest.h>

#include "sprayoid/completion.hpp"
#include "sprayoid/errors.hpp"

namespace sprayoid {
namespace {

std::string fixture(const std::string& name) { return std::string(SPRAYOID_SOURCE_DIR) + "/tables/" + name; }

int value_of(const LocalGroupoidTable& tbl, int arrow) { return std::stoi(tbl.arrow_name(arrow)); }

int letter_sum(const LocalGroupoidTable& tbl, const Word& w) {
  int s = 0;
  for (int a : w.letters) s += value_of(tbl, a);
  return s;
}

Word word_of(const LocalGroupoidTable& tbl, std::initializer_list<int> values) {
  Word w;
  for (int v : values) w.letters.push_back(tbl.arrow(std::to_string(v)));
  return w;
}

Word random_word(const LocalGroupoidTable& tbl, int max_len, std::mt19937_64& rng) {
  std::uniform_int_distribution<int> len(1, max_len), letter(0, tbl.arrow_count() - 1);
  Word w;
  const int l = len(rng);
  for (int q = 0; q < l; ++q) w.letters.push_back(letter(rng));
  return w;
}

// Number of words of length 1..max_len over {-k..k} with each letter sum.
std::map<int, std::uint64_t> sum_histogram(int k, int max_len) {
  std::map<int, std::uint64_t> layer{{0, 1}}, total;
  for (int l = 1; l <= max_len; ++l) {
    std::map<int, std::uint64_t> next;
    for (const auto& [s, c] : layer)
      for (int g = -k; g <= k; ++g) next[s + g] += c;
    for (const auto& [s, c] : next) total[s] += c;
    layer = std::move(next);
  }
  return total;
}

std::vector<int> all_arrows(const LocalGroupoidTable& tbl) {
  std::vector<int> out(static_cast<std::size_t>(tbl.arrow_count()));
  std::iota(out.begin(), out.end(), 0);
  return out;
}

std::vector<int> window_in(const LocalGroupoidTable& group, int k) {
  std::vector<int> out;
  for (int v = -k; v <= k; ++v) out.push_back(group.arrow(std::to_string(v)));
  return out;
}

// --- table format -----------------------------------------------------------

TEST(TableParser, ReadsAllSections) {
  const LocalGroupoidTable t = parse_table(R"(
# two objects joined by an arrow and its inverse
objects: x, y
arrows:
  1x: x -> x
  1y: y -> y
  f: x -> y
  g: y -> x
units:
  x: 1x
  y: 1y
inv:
  f g
  g f
  1x 1x
  1y 1y
prod:
  1y f = f
  f 1x = f
  1x g = g
  g 1y = g
  f g = 1y
  g f = 1x
  1x 1x = 1x
  1y 1y = 1y
)");
  EXPECT_EQ(t.object_count(), 2);
  EXPECT_EQ(t.arrow_count(), 4);
  const int f = t.arrow("f"), g = t.arrow("g");
  EXPECT_EQ(t.source(f), t.object("x"));
  EXPECT_EQ(t.target(f), t.object("y"));
  EXPECT_EQ(t.inverse(f), g);
  EXPECT_EQ(t.product(f, g), t.arrow("1y"));
  EXPECT_FALSE(t.defined(f, f));
  EXPECT_TRUE(validate_table(t).valid());
  EXPECT_TRUE(t.total());
}

TEST(TableParser, RejectsBadInput) {
  EXPECT_THROW(parse_table("objects: x x\n"), MalformedTable);
  EXPECT_THROW(parse_table("objects: x\narrows:\n  a: x -> x\n  a: x -> x\n"), MalformedTable);
  EXPECT_THROW(parse_table("objects: x\narrows:\n  a: x -> z\n"), MalformedTable);
  EXPECT_THROW(parse_table("objects: x\narrows:\n  a: x -> x\nprod:\n  a b = a\n"), MalformedTable);
  EXPECT_THROW(parse_table("objects: x y\narrows:\n  a: x -> y\nprod:\n  a a = a\n"), MalformedTable);
  EXPECT_THROW(parse_table("objects: x\narrows:\n  a: x -> x\nprod:\n  a a = a\n  a a = a\n"), MalformedTable);
  EXPECT_THROW(parse_table("bogus: 1\n"), MalformedTable);
  try {
    parse_table("objects: x\narrows:\n  a: x -> x\nprod:\n  a a\n");
    FAIL() << "expected MalformedTable";
  } catch (const MalformedTable& e) {
    EXPECT_NE(std::string(e.what()).find("line 5"), std::string::npos) << e.what();
  }
}

TEST(TableParser, FormatRoundtrip) {
  for (const std::string name : {"pentagon_associator.tbl", "not_4_associative.tbl", "z12_window5.tbl"}) {
    const LocalGroupoidTable t = load_table(fixture(name));
    EXPECT_EQ(format_table(parse_table(format_table(t))), format_table(t)) << name;
  }
}

TEST(TableFixtures, GeneratedFilesMatchBuilders) {
  EXPECT_EQ(format_table(load_table(fixture("z_window2.tbl"))), format_table(z_window(2)));
  EXPECT_EQ(format_table(load_table(fixture("z12_window5.tbl"))), format_table(zmod_window(12, 5)));
  EXPECT_EQ(format_table(load_table(fixture("z12_window2.tbl"))), format_table(zmod_window(12, 2)));
  EXPECT_EQ(format_table(load_table(fixture("z12.tbl"))), format_table(zmod_group(12)));
  EXPECT_EQ(format_table(table_from_spec("builtin:zmod:12:5")), format_table(zmod_window(12, 5)));
  EXPECT_THROW(table_from_spec("builtin:nope"), InvalidParams);
}

// --- axioms -----------------------------------------------------------------

TEST(ValidateTable, Examples) {
  EXPECT_TRUE(validate_table(zmod_group(12)).valid());
  EXPECT_TRUE(validate_table(zmod_group(5)).valid());
  EXPECT_TRUE(validate_table(z_window(2)).valid());
  EXPECT_TRUE(validate_table(load_table(fixture("pentagon_associator.tbl"))).valid());
  EXPECT_TRUE(validate_table(load_table(fixture("not_4_associative.tbl"))).valid());

  LocalGroupoidTable no_11 = z_window(2);
  no_11.clear_product(no_11.arrow("1"), no_11.arrow("1"));
  EXPECT_TRUE(validate_table(no_11).valid());

  LocalGroupoidTable no_unit_pair = z_window(2);
  no_unit_pair.clear_product(no_unit_pair.arrow("1"), no_unit_pair.arrow("0"));
  const TableReport rep = validate_table(no_unit_pair);
  ASSERT_FALSE(rep.valid());
  EXPECT_EQ(rep.violations.front().axiom, "A3");
  EXPECT_EQ(rep.violations.front().witness, (std::vector<int>{no_unit_pair.arrow("1"), no_unit_pair.arrow("0")}));
}

TEST(ValidateTable, DetectsBrokenAxioms) {
  LocalGroupoidTable t = z_window(2);
  t.clear_product(t.arrow("1"), t.arrow("1"));
  t.set_product(t.arrow("1"), t.arrow("1"), t.arrow("1"));
  const TableReport rep = validate_table(t);
  ASSERT_FALSE(rep.valid());
  std::set<std::string> axioms;
  for (const Violation& v : rep.violations) axioms.insert(v.axiom);
  EXPECT_TRUE(axioms.count("A2")) << "(1 1) -1 = 0 but 1 (1 -1) = 1";

  LocalGroupoidTable bad_inverse = z_window(2);
  bad_inverse.clear_inverse(bad_inverse.arrow("1"));
  bad_inverse.set_inverse(bad_inverse.arrow("1"), bad_inverse.arrow("2"));
  EXPECT_FALSE(validate_table(bad_inverse).valid());
}

// --- words ------------------------------------------------------------------

TEST(Words, Contractions) {
  const LocalGroupoidTable t = z_window(2);
  EXPECT_EQ(contractions(t, word_of(t, {2, 0})), std::vector<Word>{word_of(t, {2})});
  EXPECT_TRUE(contractions(t, word_of(t, {2, 2})).empty());
  const std::vector<Word> c = contractions(t, word_of(t, {1, 1, -2}));
  EXPECT_EQ(c.size(), 2u);
  for (const Word& w : c) {
    EXPECT_EQ(w.letters.size(), 2u);
    EXPECT_EQ(letter_sum(t, w), 0);
  }
}

TEST(Words, ExpansionsMatchBruteForce) {
  const LocalGroupoidTable t = z_window(2);
  std::set<Word> expected;
  for (int g = -2; g <= 2; ++g)
    for (int h = -2; h <= 2; ++h)
      if (g + h == 2) expected.insert(word_of(t, {g, h}));
  const std::vector<Word> got = expansions(t, word_of(t, {2}), 2);
  EXPECT_EQ(std::set<Word>(got.begin(), got.end()), expected);
  EXPECT_EQ(expected, (std::set<Word>{word_of(t, {1, 1}), word_of(t, {2, 0}), word_of(t, {0, 2})}));
  EXPECT_TRUE(expansions(t, word_of(t, {2}), 1).empty());
  for (const Word& w : expansions(t, word_of(t, {1, -1, 2}), 4)) {
    EXPECT_EQ(w.letters.size(), 4u);
    EXPECT_EQ(letter_sum(t, w), 2);
  }
}

TEST(Words, ParseAndFormat) {
  const LocalGroupoidTable t = load_table(fixture("pentagon_associator.tbl"));
  const Word w = parse_word(t, "g h k l");
  EXPECT_EQ(format_word(t, w), "(g, h, k, l)");
  EXPECT_EQ(parse_word(t, "g,h"), parse_word(t, "(g, h)"));
  EXPECT_THROW(parse_word(t, "g zz"), MalformedTable);
}

// --- AC(G) ------------------------------------------------------------------

TEST(ACQuotient, SingleUnit) {
  const LocalGroupoidTable t = parse_table("objects: x\narrows:\n  e: x -> x\nunits:\n  x: e\ninv:\n  e e\nprod:\n  e e = e\n");
  const ACClassification ac = ac_quotient(t, 4, 6);
  EXPECT_EQ(ac.classes().size(), 1u);
  EXPECT_EQ(ac.classes()[0].words, 4u);
  EXPECT_TRUE(ac.stable());
}

TEST(ACQuotient, IntegerWindowCarriesTheSum) {
  const auto t0 = std::chrono::steady_clock::now();
  const LocalGroupoidTable t = z_window(2);
  const ACClassification ac = ac_quotient(t, 6, 10);
  EXPECT_EQ(ac.classes().size(), 25u);
  EXPECT_TRUE(ac.stable());
  const std::map<int, std::uint64_t> hist = sum_histogram(2, 6);
  std::set<int> sums;
  for (const ACClass& c : ac.classes()) {
    const int s = letter_sum(t, c.representative);
    EXPECT_TRUE(sums.insert(s).second);
    EXPECT_EQ(c.words, hist.at(s)) << s;
  }
  EXPECT_EQ(*sums.begin(), -12);
  EXPECT_EQ(*sums.rbegin(), 12);

  std::mt19937_64 rng(61);
  for (int q = 0; q < 2000; ++q) {
    const Word w = random_word(t, 6, rng);
    const auto c = ac.class_of(w);
    ASSERT_TRUE(c.has_value());
    EXPECT_EQ(letter_sum(t, ac.classes()[static_cast<std::size_t>(*c)].representative), letter_sum(t, w));
  }
  EXPECT_LT(std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count(), 30.0);
}

TEST(ACQuotient, ClassProductsAreWellDefined) {
  const LocalGroupoidTable t = z_window(2);
  const ACClassification ac = ac_quotient(t, 6, 10);
  std::mt19937_64 rng(62);
  std::map<int, std::vector<Word>> by_class;
  for (int q = 0; q < 4000; ++q) {
    const Word w = random_word(t, 3, rng);
    by_class[*ac.class_of(w)].push_back(w);
  }
  std::vector<int> ids;
  for (const auto& [id, words] : by_class) ids.push_back(id);
  std::uniform_int_distribution<std::size_t> pick_class(0, ids.size() - 1);
  for (int q = 0; q < 1000; ++q) {
    const std::vector<Word>& a = by_class[ids[pick_class(rng)]];
    const std::vector<Word>& b = by_class[ids[pick_class(rng)]];
    std::uniform_int_distribution<std::size_t> pa(0, a.size() - 1), pb(0, b.size() - 1);
    const Word& w1 = a[pa(rng)];
    const Word& w1p = a[pa(rng)];
    const Word& w2 = b[pb(rng)];
    const Word& w2p = b[pb(rng)];
    Word lhs = w1, rhs = w1p;
    lhs.letters.insert(lhs.letters.end(), w2.letters.begin(), w2.letters.end());
    rhs.letters.insert(rhs.letters.end(), w2p.letters.begin(), w2p.letters.end());
    EXPECT_EQ(ac.class_of(lhs), ac.class_of(rhs));
  }
  const int c1 = *ac.class_of(word_of(t, {2, 2})), c2 = *ac.class_of(word_of(t, {-1}));
  EXPECT_EQ(ac.product(c1, c2), ac.class_of(word_of(t, {2, 1})));
  EXPECT_EQ(ac.inverse(c1), ac.class_of(word_of(t, {-2, -2})));
  EXPECT_EQ(ac.unit_class(0), ac.class_of(word_of(t, {1, -1})));
}

TEST(ACQuotient, CyclicWindowWrapsAround) {
  const auto t0 = std::chrono::steady_clock::now();
  const LocalGroupoidTable t = load_table(fixture("z12_window5.tbl"));
  const ACClassification ac = ac_quotient(t, 4, 10);
  EXPECT_EQ(ac.class_of(word_of(t, {4, 4, 4})), ac.unit_class(0));
  EXPECT_EQ(ac.class_of(word_of(t, {5, 5, 5, -3})), ac.unit_class(0));
  EXPECT_EQ(ac.classes().size(), 12u);
  EXPECT_TRUE(ac.stable());
  for (const ACClass& c : ac.classes()) {
    std::mt19937_64 rng(static_cast<std::uint64_t>(c.id) + 63);
    for (int q = 0; q < 50; ++q) {
      const Word w = random_word(t, 4, rng);
      if (ac.class_of(w) == c.id)
        EXPECT_EQ(((letter_sum(t, w) - letter_sum(t, c.representative)) % 12 + 12) % 12, 0);
    }
  }
  EXPECT_LT(std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count(), 30.0);
}

TEST(ACQuotient, BudgetIsEnforced) {
  SearchLimits tiny;
  tiny.max_states = 10;
  EXPECT_THROW(ac_quotient(z_window(2), 4, 10, tiny), Budget);
  EXPECT_THROW(ac_quotient(z_window(2), 4, 3), InvalidParams);
}

// --- associators and associativity ------------------------------------------

TEST(Associators, Examples) {
  EXPECT_TRUE(associators(z_window(2), 10).empty());
  const LocalGroupoidTable group = zmod_group(12);
  EXPECT_TRUE(associators(group.restrict_to(window_in(group, 5)), 10).empty());
  EXPECT_TRUE(associators(group.restrict_to(window_in(group, 3)), 8).empty());
  const LocalGroupoidTable pent = load_table(fixture("pentagon_associator.tbl"));
  EXPECT_EQ(associators(pent, 6), std::vector<int>{pent.arrow("P")});
}

TEST(GlobalAssociativity, Examples) {
  EXPECT_TRUE(global_associativity_check(zmod_group(6), 5).ok());
  EXPECT_TRUE(global_associativity_check(z_window(2), 6).ok());
  const LocalGroupoidTable group = zmod_group(12);
  EXPECT_TRUE(global_associativity_check(group.restrict_to(window_in(group, 4)), 6).ok());

  const LocalGroupoidTable pent = load_table(fixture("pentagon_associator.tbl"));
  EXPECT_TRUE(global_associativity_check(pent, 3).ok());
  const AssociativityResult r = global_associativity_check(pent, 4);
  ASSERT_FALSE(r.ok());
  EXPECT_EQ(r.counterexample->word, parse_word(pent, "g h k l"));
  EXPECT_NE(r.counterexample->first, r.counterexample->second);

  const LocalGroupoidTable found = load_table(fixture("not_4_associative.tbl"));
  EXPECT_TRUE(global_associativity_check(found, 3).ok());
  const AssociativityResult f = global_associativity_check(found, 4);
  ASSERT_FALSE(f.ok());
  EXPECT_EQ(f.counterexample->word.letters.size(), 4u);
}

TEST(CounterexampleSearch, SmallSizesAreExhaustivelyEmpty) {
  const SearchResult r = counterexample_search(3, 1'000'000);
  EXPECT_FALSE(r.found());
  EXPECT_TRUE(r.exhaustive);
}

TEST(CounterexampleSearch, FoundTableIsTheFrozenFixture) {
  const SearchResult r = counterexample_search(12, 100'000);
  ASSERT_TRUE(r.found());
  EXPECT_TRUE(validate_table(*r.table).valid());
  EXPECT_EQ(format_table(*r.table), format_table(load_table(fixture("not_4_associative.tbl"))));
  ASSERT_TRUE(r.witness.has_value());
  EXPECT_EQ(r.witness->word.letters.size(), 4u);
}

// --- generation and full neighbourhoods -------------------------------------

TEST(Generation, Examples) {
  const LocalGroupoidTable t = z_window(2);
  EXPECT_TRUE(generation_check(t, all_arrows(t)).empty());
  EXPECT_TRUE(generation_check(t, {t.arrow("-1"), t.arrow("0"), t.arrow("1")}).empty());
  EXPECT_EQ(generation_check(t, {t.arrow("0"), t.arrow("2")}),
            (std::vector<int>{t.arrow("-2"), t.arrow("-1"), t.arrow("1")}));
}

TEST(FullCheck, CyclicWindows) {
  const LocalGroupoidTable group = load_table(fixture("z12.tbl"));
  auto t0 = std::chrono::steady_clock::now();
  const FullCheckResult wide = full_check(group, window_in(group, 5));
  EXPECT_EQ(wide.verdict, FullVerdict::iso);
  EXPECT_TRUE(wide.stable);
  EXPECT_EQ(wide.classes, 12);
  EXPECT_LT(std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count(), 30.0);

  t0 = std::chrono::steady_clock::now();
  const std::vector<int> narrow_window = window_in(group, 2);
  const FullCheckResult narrow = full_check(group, narrow_window);
  EXPECT_EQ(narrow.verdict, FullVerdict::proper_cover);
  EXPECT_TRUE(narrow.surjective);
  EXPECT_FALSE(narrow.injective);
  ASSERT_TRUE(narrow.collision.has_value());
  // Collision words are spelled in the ambient table; the window keeps its
  // arrows in index order.
  const LocalGroupoidTable sub = group.restrict_to(narrow_window);
  const auto to_sub = [&](const Word& w) {
    Word out;
    for (int a : w.letters)
      out.letters.push_back(static_cast<int>(std::find(narrow_window.begin(), narrow_window.end(), a) -
                                             narrow_window.begin()));
    return out;
  };
  const ACClassification ac = ac_quotient(sub, narrow.length_bound, narrow.exploration_bound);
  const auto first = ac.class_of(to_sub(narrow.collision->first));
  const auto second = ac.class_of(to_sub(narrow.collision->second));
  ASSERT_TRUE(first && second);
  EXPECT_NE(first, second);
  EXPECT_NE(letter_sum(group, narrow.collision->first), letter_sum(group, narrow.collision->second));
  EXPECT_EQ(evaluate_in(group, all_arrows(group), narrow.collision->first), narrow.image);
  EXPECT_EQ(evaluate_in(group, all_arrows(group), narrow.collision->second), narrow.image);
  EXPECT_LT(std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count(), 30.0);

  EXPECT_EQ(full_check(group, all_arrows(group)).verdict, FullVerdict::iso);
  EXPECT_EQ(to_string(FullVerdict::proper_cover), "proper_cover");
}

TEST(FullCheck, NonGeneratingWindow) {
  const LocalGroupoidTable group = zmod_group(12);
  const FullCheckResult r = full_check(group, {group.arrow("0"), group.arrow("3"), group.arrow("-3")});
  EXPECT_FALSE(r.surjective);
  EXPECT_EQ(r.unreached.size(), 8u);
}

// --- morphisms ----------------------------------------------------------------

TEST(Morphisms, CompletionMapCommutesWithClasses) {
  const LocalGroupoidTable window = z_window(2);
  const LocalGroupoidTable group = zmod_group(12);
  std::vector<int> map;
  for (int a = 0; a < window.arrow_count(); ++a) map.push_back(group.arrow(window.arrow_name(a)));
  EXPECT_EQ(morphism_defect(window, group, map), "");

  const ACClassification ac = ac_quotient(window, 6, 10);
  std::mt19937_64 rng(64);
  std::map<int, int> image_of_class;
  for (int q = 0; q < 3000; ++q) {
    const Word w = random_word(window, 6, rng);
    const int img = evaluate_in(group, map, w);
    const auto [it, fresh] = image_of_class.emplace(*ac.class_of(w), img);
    if (!fresh) EXPECT_EQ(it->second, img);
  }

  std::vector<int> broken = map;
  std::swap(broken[0], broken[1]);
  EXPECT_NE(morphism_defect(window, group, broken), "");
}

}  // namespace
}  // namespace sprayoid
