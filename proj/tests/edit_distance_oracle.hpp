// Test-only reference for word edit distance. Enumerates every alignment
// path by plain recursion (no dynamic programming) so it shares nothing with
// the implementation under test.

#ifndef CONFCORRECT_TESTS_EDIT_DISTANCE_ORACLE_HPP
#define CONFCORRECT_TESTS_EDIT_DISTANCE_ORACLE_HPP

#include <algorithm>
#include <map>
#include <string>
#include <vector>

namespace oracle {

inline std::size_t exhaustive_distance(const std::vector<int>& a, std::size_t i, const std::vector<int>& b,
                                       std::size_t j) {
  if (i == a.size()) return b.size() - j;
  if (j == b.size()) return a.size() - i;
  const std::size_t sub = exhaustive_distance(a, i + 1, b, j + 1) + (a[i] == b[j] ? 0 : 1);
  const std::size_t del = exhaustive_distance(a, i + 1, b, j) + 1;
  const std::size_t ins = exhaustive_distance(a, i, b, j + 1) + 1;
  return std::min({sub, del, ins});
}

inline std::size_t exhaustive_distance(const std::vector<int>& a, const std::vector<int>& b) {
  return exhaustive_distance(a, 0, b, 0);
}

/// Memoizes the exhaustive search over pairs that are identical up to a
/// renaming of symbols; edit distance cannot tell those apart.
class CanonicalDistanceCache {
 public:
  std::size_t operator()(const std::vector<int>& a, const std::vector<int>& b) {
    std::map<int, int> rename;
    std::vector<int> ca, cb;
    for (int x : a) ca.push_back(rename.emplace(x, static_cast<int>(rename.size())).first->second);
    for (int x : b) cb.push_back(rename.emplace(x, static_cast<int>(rename.size())).first->second);
    auto key = std::make_pair(ca, cb);
    auto it = memo_.find(key);
    if (it != memo_.end()) return it->second;
    const auto d = exhaustive_distance(ca, cb);
    memo_.emplace(std::move(key), d);
    return d;
  }

 private:
  std::map<std::pair<std::vector<int>, std::vector<int>>, std::size_t> memo_;
};

inline std::vector<std::string> to_words(const std::vector<int>& xs) {
  static const char* kAlphabet[] = {"A", "B", "C", "D", "E", "F"};
  std::vector<std::string> out;
  for (int x : xs) out.push_back(kAlphabet[x]);
  return out;
}

/// Every sequence over {0..symbols-1} of length <= max_len.
inline std::vector<std::vector<int>> all_sequences(int symbols, std::size_t max_len) {
  std::vector<std::vector<int>> out{{}};
  std::vector<std::vector<int>> frontier{{}};
  for (std::size_t len = 1; len <= max_len; ++len) {
    std::vector<std::vector<int>> next;
    for (const auto& s : frontier) {
      for (int c = 0; c < symbols; ++c) {
        auto t = s;
        t.push_back(c);
        next.push_back(t);
      }
    }
    out.insert(out.end(), next.begin(), next.end());
    frontier = std::move(next);
  }
  return out;
}

}  // namespace oracle

#endif  // CONFCORRECT_TESTS_EDIT_DISTANCE_ORACLE_HPP
