#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "motionkit/error.hpp"

namespace motionkit::harness {

struct SplitSpec {
  std::vector<std::string> train_users;
  std::vector<std::string> test_users;
  std::vector<std::string> val_users;
  std::uint64_t seed = 0;

  bool is_train(const std::string& u) const { return std::find(train_users.begin(), train_users.end(), u) != train_users.end(); }
  bool is_test(const std::string& u) const { return std::find(test_users.begin(), test_users.end(), u) != test_users.end(); }
  bool is_val(const std::string& u) const { return std::find(val_users.begin(), val_users.end(), u) != val_users.end(); }
};

/// Seeded 70/20/10 split. Sizes: train = floor(0.7 n), test = round(0.2 n),
/// val = the rest (35/10/5 at 50 users, 7/2/1 at 10, 8/2/2 at 12).
inline SplitSpec split_users(std::vector<std::string> users, std::uint64_t seed) {
  std::sort(users.begin(), users.end());
  users.erase(std::unique(users.begin(), users.end()), users.end());
  const auto n = users.size();
  if (n < 10) fail(ErrorCode::TooFewUsers, "need at least 10 users, got " + std::to_string(n));
  std::mt19937_64 rng(seed);
  // Fisher-Yates with an explicit draw so the order does not depend on the
  // standard library's shuffle implementation.
  for (std::size_t i = n - 1; i > 0; --i) {
    const std::size_t j = static_cast<std::size_t>(rng() % (i + 1));
    std::swap(users[i], users[j]);
  }
  const auto n_test = static_cast<std::size_t>(std::lround(0.2 * static_cast<double>(n)));
  const auto n_train = static_cast<std::size_t>(std::floor(0.7 * static_cast<double>(n) + 1e-9));
  const auto n_val = n - n_train - n_test;
  SplitSpec s;
  s.seed = seed;
  s.test_users.assign(users.begin(), users.begin() + static_cast<std::ptrdiff_t>(n_test));
  s.val_users.assign(users.begin() + static_cast<std::ptrdiff_t>(n_test),
                     users.begin() + static_cast<std::ptrdiff_t>(n_test + n_val));
  s.train_users.assign(users.begin() + static_cast<std::ptrdiff_t>(n_test + n_val), users.end());
  for (auto* v : {&s.train_users, &s.test_users, &s.val_users}) std::sort(v->begin(), v->end());
  return s;
}

}  // namespace motionkit::harness
