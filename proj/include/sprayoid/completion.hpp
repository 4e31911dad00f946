#pragma once

// Finite local groupoids given by partial multiplication tables, words over
// them, and the associative completion AC(G) = words / (contraction ~ expansion)
// explored up to a word-length bound.
//
// Conventions: a product g h is only meaningful when s(g) = t(h); a word
// (w_1, ..., w_l) is well formed when s(w_i) = t(w_{i+1}) and stands for the
// product w_1 w_2 ... w_l, with target t(w_1) and source s(w_l).

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace sprayoid {

class LocalGroupoidTable {
 public:
  static constexpr int kUndefined = -1;

  int add_object(const std::string& name);
  int add_arrow(const std::string& name, int source, int target);
  void set_unit(int object, int arrow);
  void set_inverse(int arrow, int inverse);
  void set_product(int g, int h, int gh);
  void clear_product(int g, int h);
  void clear_inverse(int arrow);

  int object_count() const noexcept { return static_cast<int>(objects_.size()); }
  int arrow_count() const noexcept { return static_cast<int>(arrows_.size()); }
  const std::string& object_name(int o) const { return objects_.at(o); }
  const std::string& arrow_name(int a) const { return arrows_.at(a); }
  std::optional<int> find_object(std::string_view name) const;
  std::optional<int> find_arrow(std::string_view name) const;
  /// Throws MalformedTable on unknown names.
  int object(std::string_view name) const;
  int arrow(std::string_view name) const;

  int source(int a) const { return source_.at(a); }
  int target(int a) const { return target_.at(a); }
  /// kUndefined when the object has no unit.
  int unit(int object) const { return units_.at(object); }
  bool is_unit(int a) const;
  int inverse(int a) const { return inverse_.at(a); }
  int product(int g, int h) const { return prod_[index(g, h)]; }
  bool defined(int g, int h) const { return product(g, h) != kUndefined; }
  /// Pairs (g, h) with g h = c.
  const std::vector<std::pair<int, int>>& factorizations(int c) const { return factors_.at(c); }
  /// Arrows whose target is the object, in index order.
  const std::vector<int>& arrows_into_target(int object) const { return by_target_.at(object); }
  std::size_t product_count() const noexcept { return product_count_; }
  /// Every composable pair has a product.
  bool total() const;

  /// Sub-table on the given arrows (which must contain every unit): a product
  /// survives when both factors and the result are kept, an inverse when both
  /// ends are kept.
  LocalGroupoidTable restrict_to(const std::vector<int>& arrows) const;

 private:
  std::size_t index(int g, int h) const;
  void grow();

  std::vector<std::string> objects_;
  std::vector<std::string> arrows_;
  std::map<std::string, int, std::less<>> object_index_;
  std::map<std::string, int, std::less<>> arrow_index_;
  std::vector<int> source_, target_, units_, inverse_;
  std::vector<int> prod_;
  std::vector<std::vector<std::pair<int, int>>> factors_;
  std::vector<std::vector<int>> by_target_;
  std::size_t product_count_ = 0;
};

/// Parses the text table format:
///
///   # comment
///   objects: x y
///   arrows:
///     g: x -> y
///   units:
///     x: 1x
///   inv:
///     g h          (inverse of g is h)
///   prod:
///     g h = k
///
/// Items may be separated by commas or blanks. Duplicates, dangling names and
/// products on non-composable pairs raise MalformedTable with a line number.
LocalGroupoidTable parse_table(std::string_view text);
LocalGroupoidTable load_table(const std::string& path);
std::string format_table(const LocalGroupoidTable& tbl);

/// Z window {-k..k}: one object "*", g h defined iff |g + h| <= k.
LocalGroupoidTable z_window(int k);
/// Z_N window of representatives {-k..k} (2k < N): g h defined iff the
/// representative of g + h mod N lies in the window.
LocalGroupoidTable zmod_window(int modulus, int k);
/// Cyclic group Z_N, arrows named by representatives in (-N/2, N/2].
LocalGroupoidTable zmod_group(int modulus);
/// Resolves "builtin:z:K", "builtin:zmod:N:K", "builtin:zmodgroup:N" or a path.
LocalGroupoidTable table_from_spec(const std::string& spec);

struct Word {
  std::vector<int> letters;
  bool operator==(const Word&) const = default;
  bool operator<(const Word& o) const { return letters < o.letters; }
};

bool well_formed(const LocalGroupoidTable& tbl, const Word& w);
/// Throws InvalidParams when the word is empty or ill formed.
void require_well_formed(const LocalGroupoidTable& tbl, const Word& w);
std::string format_word(const LocalGroupoidTable& tbl, const Word& w);
Word parse_word(const LocalGroupoidTable& tbl, std::string_view text);

std::vector<Word> contractions(const LocalGroupoidTable& tbl, const Word& w);
std::vector<Word> expansions(const LocalGroupoidTable& tbl, const Word& w, int max_len);

struct Violation {
  std::string axiom;  // "A1" .. "A5"
  std::string detail;
  std::vector<int> witness;
};

struct TableReport {
  std::vector<Violation> violations;
  bool valid() const { return violations.empty(); }
};

/// Checks A1-A5 exhaustively; throws MalformedTable on dangling references.
TableReport validate_table(const LocalGroupoidTable& tbl);

/// Work limits for the word searches.
struct SearchLimits {
  std::uint64_t max_states = 10'000'000;
};

struct ACClass {
  int id = 0;
  Word representative;  // shortest, then lexicographically least
  int target = 0;
  int source = 0;
  std::uint64_t words = 0;  // explored words of length <= L in the class
  /// A member made of invertible letters, when one was explored.
  std::optional<Word> invertible_representative;
};

/// Partition of all well-formed words of length <= length_bound. Equivalence
/// is certified only through words of length <= exploration_bound; `stable`
/// records whether rerunning with exploration_bound + 2 left the partition
/// unchanged.
class ACClassification {
 public:
  struct Graph;

  const std::vector<ACClass>& classes() const noexcept { return classes_; }
  int length_bound() const noexcept { return length_bound_; }
  int exploration_bound() const noexcept { return exploration_bound_; }
  bool stable() const noexcept { return stable_; }
  std::uint64_t states() const noexcept { return states_; }

  /// Class of any word whose trace stays in the explored graph and lands on a
  /// listed class.
  std::optional<int> class_of(const Word& w) const;
  /// Class of the concatenation of representatives.
  std::optional<int> product(int a, int b) const;
  /// Class of (w_l^-1, ..., w_1^-1) for an invertible representative; empty
  /// when no explored member is made of invertible letters.
  std::optional<int> inverse(int c) const;
  /// Class of the one-letter word (u(x)).
  std::optional<int> unit_class(int object) const;

 private:
  friend ACClassification ac_quotient(const LocalGroupoidTable&, int, int, const SearchLimits&);
  std::shared_ptr<const Graph> graph_;
  std::vector<ACClass> classes_;
  std::vector<int> class_by_state_;
  std::vector<int> unit_arrows_;
  int length_bound_ = 0;
  int exploration_bound_ = 0;
  bool stable_ = false;
  std::uint64_t states_ = 0;
};

/// Throws Budget when the state count exceeds the limit and PreconditionError
/// for invalid tables.
ACClassification ac_quotient(const LocalGroupoidTable& tbl, int length_bound, int exploration_bound,
                             const SearchLimits& limits = {});

/// Non-unit loops g with (g) ~ (u(t g)) within the exploration bound.
std::vector<int> associators(const LocalGroupoidTable& tbl, int exploration_bound, const SearchLimits& limits = {});

struct AssociativityCounterexample {
  Word word;
  int first = 0;
  int second = 0;
  std::string first_bracketing;
  std::string second_bracketing;
};

struct AssociativityResult {
  std::optional<AssociativityCounterexample> counterexample;
  std::uint64_t words_checked = 0;
  bool ok() const { return !counterexample; }
};

/// Every full contraction sequence of every well-formed word of length <= order
/// ends at the same arrow. Reports a shortest counterexample.
AssociativityResult global_associativity_check(const LocalGroupoidTable& tbl, int order,
                                               std::uint64_t max_words = 50'000'000);

struct SearchResult {
  std::optional<LocalGroupoidTable> table;
  std::optional<AssociativityCounterexample> witness;
  bool exhaustive = false;
  std::uint64_t attempts = 0;
  bool found() const { return table.has_value(); }
};

/// Looks for a valid table on <= size_bound arrows that is not 4-associative.
/// Small sizes are enumerated exhaustively (one object; every assignment of
/// products); otherwise single-object tables are grown by random product
/// insertions that keep A1-A5, with `budget` bounding the insertion attempts.
SearchResult counterexample_search(int size_bound, std::uint64_t budget, std::uint64_t seed = 20240917);

/// Arrows not reachable from U by repeated products; empty means U generates.
std::vector<int> generation_check(const LocalGroupoidTable& tbl, const std::vector<int>& generators);

enum class FullVerdict { iso, proper_cover, proper_embedding, neither };
std::string to_string(FullVerdict v);

struct FullCheckResult {
  FullVerdict verdict = FullVerdict::neither;
  bool surjective = false;
  bool injective = false;
  std::vector<int> unreached;  // group arrows outside the generated subgroupoid
  std::optional<std::pair<Word, Word>> collision;  // inequivalent words, same image
  int image = 0;                                   // shared group arrow of the collision
  int classes = 0;
  bool stable = false;
  int length_bound = 0;
  int exploration_bound = 0;
};

/// Compares AC(window) with the ambient total table through the map sending a
/// word to the product of its letters. Injectivity holds up to the bounds.
FullCheckResult full_check(const LocalGroupoidTable& group, const std::vector<int>& window, int length_bound = 4,
                           int exploration_bound = 10, const SearchLimits& limits = {});

/// Map of arrows G -> H preserving s, t, units and every defined product.
/// Returns the first failure, or an empty string.
std::string morphism_defect(const LocalGroupoidTable& from, const LocalGroupoidTable& to,
                            const std::vector<int>& arrow_map);

/// Value of a word in a total table H after mapping letters by arrow_map.
int evaluate_in(const LocalGroupoidTable& to, const std::vector<int>& arrow_map, const Word& w);

}  // namespace sprayoid
