#include "truthkit/money.hpp"

#include <cctype>
#include <cstdio>
#include <cstdlib>

#include "truthkit/error.hpp"

namespace truthkit {

Money Money::parse(std::string_view text) {
  std::string_view s = text;
  auto fail = [&] { throw Error(ErrorCode::InvalidArgument, "bad amount '" + std::string(text) + "'"); };
  bool negative = false;
  if (!s.empty() && s.front() == '-') {
    negative = true;
    s.remove_prefix(1);
  }
  if (!s.empty() && s.front() == '$') s.remove_prefix(1);
  if (s.empty()) fail();
  std::int64_t whole = 0;
  std::int64_t frac = 0;
  int frac_digits = 0;
  bool seen_dot = false;
  bool seen_digit = false;
  for (char c : s) {
    if (c == '.') {
      if (seen_dot) fail();
      seen_dot = true;
    } else if (std::isdigit(static_cast<unsigned char>(c))) {
      seen_digit = true;
      if (seen_dot) {
        if (++frac_digits > 6) fail();
        frac = frac * 10 + (c - '0');
      } else {
        whole = whole * 10 + (c - '0');
      }
    } else {
      fail();
    }
  }
  if (!seen_digit) fail();
  for (int i = frac_digits; i < 6; ++i) frac *= 10;
  std::int64_t micros = whole * 1'000'000 + frac;
  return Money(negative ? -micros : micros);
}

std::int64_t Money::rounded_cents() const {
  const std::int64_t mag = std::llabs(micros_);
  const std::int64_t cents = (mag + 5'000) / 10'000;
  return micros_ < 0 ? -cents : cents;
}

std::string Money::to_cents_string() const {
  const std::int64_t cents = rounded_cents();
  const std::int64_t mag = std::llabs(cents);
  char buf[48];
  std::snprintf(buf, sizeof buf, "%s%lld.%02lld", cents < 0 ? "-" : "",
                static_cast<long long>(mag / 100), static_cast<long long>(mag % 100));
  return buf;
}

std::string Money::to_dollars_string() const {
  const std::int64_t mag = micros_ < 0 ? -micros_ : micros_;
  char buf[48];
  std::snprintf(buf, sizeof buf, "%s%lld.%06lld", micros_ < 0 ? "-" : "",
                static_cast<long long>(mag / 1'000'000), static_cast<long long>(mag % 1'000'000));
  std::string out = buf;
  while (out.size() > 1 && out.back() == '0' && out[out.size() - 3] != '.') out.pop_back();
  return out;
}

Money cost_for_tokens(std::int64_t tokens, Money rate_per_1k) {
  std::int64_t product = 0;
  if (__builtin_mul_overflow(tokens, rate_per_1k.micros(), &product))
    throw Error(ErrorCode::InvalidArgument, "token cost overflows");
  return Money::from_micros(product / 1000);
}

}  // namespace truthkit
