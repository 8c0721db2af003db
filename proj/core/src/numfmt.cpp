#include "perfcost/numfmt.hpp"

#include <charconv>
#include <system_error>

#include "perfcost/types.hpp"

namespace perfcost {

std::string format_exact(double value) {
  char buffer[64];
  auto [ptr, ec] = std::to_chars(buffer, buffer + sizeof(buffer), value);
  return std::string(buffer, ptr);
}

double parse_exact(std::string_view text) {
  double value = 0.0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc() || ptr != text.data() + text.size()) {
    throw SchemaError("malformed decimal '" + std::string(text) + "'");
  }
  return value;
}

std::string format_fixed(double value, int decimals) {
  char buffer[64];
  auto [ptr, ec] = std::to_chars(buffer, buffer + sizeof(buffer), value, std::chars_format::fixed,
                                 decimals);
  return std::string(buffer, ptr);
}

double round_to(double value, int decimals) { return parse_exact(format_fixed(value, decimals)); }

}  // namespace perfcost
