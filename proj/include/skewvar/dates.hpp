#pragma once

#include <compare>
#include <string>
#include <vector>

namespace skewvar {

// Quarterly period identifier, e.g. "1974Q4".
struct Quarter {
  int year = 0;
  int q = 1;  // 1..4

  static Quarter parse(const std::string& s);
  static Quarter from_index(int idx) { return Quarter{idx / 4, idx % 4 + 1}; }

  std::string str() const;
  int index() const { return year * 4 + (q - 1); }
  Quarter plus(int n) const { return from_index(index() + n); }

  auto operator<=>(const Quarter&) const = default;
};

// Inclusive count of quarters in [a, b]; 0 when b precedes a.
int quarters_inclusive(Quarter a, Quarter b);

std::vector<Quarter> quarter_range(Quarter first, Quarter last);

}  // namespace skewvar
