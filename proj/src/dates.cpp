#include "skewvar/dates.hpp"

#include <cctype>
#include <cstdlib>

#include "skewvar/error.hpp"

namespace skewvar {

Quarter Quarter::parse(const std::string& s) {
  // Accepts "1974Q4" and "1974-Q4".
  auto pos = s.find_first_of("Qq");
  require(pos != std::string::npos && pos > 0 && pos + 1 < s.size(),
          "cannot parse quarter '{}': expected YYYYQn", s);
  std::string ypart = s.substr(0, pos);
  if (!ypart.empty() && (ypart.back() == '-' || ypart.back() == ' ')) ypart.pop_back();
  char* end = nullptr;
  long year = std::strtol(ypart.c_str(), &end, 10);
  require(end && *end == '\0', "cannot parse quarter '{}': bad year '{}'", s, ypart);
  long q = std::strtol(s.c_str() + pos + 1, &end, 10);
  require(end && *end == '\0' && q >= 1 && q <= 4, "cannot parse quarter '{}': bad quarter index", s);
  return Quarter{static_cast<int>(year), static_cast<int>(q)};
}

std::string Quarter::str() const { return std::to_string(year) + "Q" + std::to_string(q); }

int quarters_inclusive(Quarter a, Quarter b) {
  int n = b.index() - a.index() + 1;
  return n > 0 ? n : 0;
}

std::vector<Quarter> quarter_range(Quarter first, Quarter last) {
  std::vector<Quarter> out;
  for (int i = first.index(); i <= last.index(); ++i) out.push_back(Quarter::from_index(i));
  return out;
}

}  // namespace skewvar
