#pragma once

#include <string>
#include <string_view>

namespace perfcost {

// Shortest decimal string that parses back to exactly the same double.
std::string format_exact(double value);
// Inverse of format_exact; throws SchemaError on malformed input.
double parse_exact(std::string_view text);
// Fixed-point rendering with the given number of decimals.
std::string format_fixed(double value, int decimals);
// Rounds to the given number of decimals (for fixed-precision report fields).
double round_to(double value, int decimals);

}  // namespace perfcost
