#pragma once

#include <charconv>
#include <cmath>
#include <string>

namespace abcgan {

/// Shortest round-trip text of `v` (used for machine-readable output).
inline std::string format_roundtrip(double v) {
  if (std::isnan(v)) return "nan";
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

/// Fixed-point text with `decimals` places, rounding the value's shortest
/// decimal representation half-to-even: 0.12345 -> "0.1234",
/// 0.12355 -> "0.1236". Working on the decimal digits (not the binary value)
/// keeps ties like 0.12345 ties.
inline std::string format_fixed(double v, int decimals = 4) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[512];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v, std::chars_format::fixed);
  std::string text(buf, ptr);

  bool negative = false;
  if (!text.empty() && text[0] == '-') {
    negative = true;
    text.erase(0, 1);
  }
  const std::size_t dot = text.find('.');
  std::string int_part = dot == std::string::npos ? text : text.substr(0, dot);
  std::string frac = dot == std::string::npos ? std::string() : text.substr(dot + 1);

  // digits = int_part + first `decimals` fraction digits; the rest decide rounding
  const auto keep = static_cast<std::size_t>(decimals);
  std::string kept = frac.substr(0, std::min(keep, frac.size()));
  kept.resize(keep, '0');
  const std::string rest = frac.size() > keep ? frac.substr(keep) : std::string();

  std::string digits = int_part + kept;
  bool round_up = false;
  if (!rest.empty()) {
    if (rest[0] > '5') {
      round_up = true;
    } else if (rest[0] == '5') {
      const bool beyond = rest.find_first_not_of('0', 1) != std::string::npos;
      const bool last_odd = ((digits.back() - '0') % 2) == 1;
      round_up = beyond || last_odd;
    }
  }
  if (round_up) {
    std::size_t i = digits.size();
    while (i > 0) {
      --i;
      if (digits[i] == '9') {
        digits[i] = '0';
      } else {
        ++digits[i];
        break;
      }
      if (i == 0) digits.insert(digits.begin(), '1');
    }
  }
  const std::size_t int_len = digits.size() - keep;
  std::string out = digits.substr(0, int_len);
  if (out.empty()) out = "0";
  if (keep > 0) out += "." + digits.substr(int_len);
  const bool all_zero = out.find_first_not_of("0.") == std::string::npos;
  if (negative && !all_zero) out.insert(out.begin(), '-');
  return out;
}

}  // namespace abcgan
