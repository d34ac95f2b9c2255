#pragma once

#include <string>

namespace infoputs {

// Nine significant digits; the single numeric format of every emitted file.
std::string num(double x);

}  // namespace infoputs
