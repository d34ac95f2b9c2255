#include "infoputs/format.hpp"

#include <cmath>
#include <cstdio>

namespace infoputs {

std::string num(double x) {
  if (x == 0.0) return "0";  // folds -0
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.9g", x);
  return buf;
}

}  // namespace infoputs
