#pragma once

#include <string>

#include "smcsr/expr.hpp"

namespace smcsr {

struct parse_error : std::runtime_error {
  int offset;
  parse_error(const std::string& msg, int off)
      : std::runtime_error(msg + " at offset " + std::to_string(off)), offset(off) {}
};

// Infix grammar: + - * / ^, function calls sin(...) cos(...) exp(...)
// log(...) sqrt(...), variables x0..x{N-1}, fitted constants c0..c{N-1},
// decimal float literals, unary minus, whitespace-insensitive.
// Each c{i} token may appear once; constants are re-slotted in appearance
// order with initialization hint 1.0.
Expression parse(const std::string& text);

std::string format(const Expression& e);

}  // namespace smcsr
