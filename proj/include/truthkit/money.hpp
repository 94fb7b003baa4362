#pragma once

#include <compare>
#include <cstdint>
#include <string>
#include <string_view>

namespace truthkit {

/// Exact monetary amount in millionths of a dollar. Price tiers and
/// per-1K-token rates are exact decimals, so no binary floating point here.
class Money {
 public:
  constexpr Money() = default;

  static constexpr Money from_micros(std::int64_t micros) { return Money(micros); }
  static constexpr Money from_cents(std::int64_t cents) { return Money(cents * 10'000); }
  /// Parses "0.17", "$122.08", "3" (at most six fractional digits).
  static Money parse(std::string_view text);

  constexpr std::int64_t micros() const { return micros_; }
  /// Rounded half away from zero to whole cents.
  std::int64_t rounded_cents() const;
  /// "122.08"
  std::string to_cents_string() const;
  /// Exact, trailing zeros trimmed to two decimals: "0.03", "75.217200" -> "75.2172"
  std::string to_dollars_string() const;
  double to_dollars() const { return static_cast<double>(micros_) / 1e6; }

  constexpr Money operator+(Money o) const { return Money(micros_ + o.micros_); }
  constexpr Money operator-(Money o) const { return Money(micros_ - o.micros_); }
  constexpr Money operator*(std::int64_t k) const { return Money(micros_ * k); }
  Money& operator+=(Money o) {
    micros_ += o.micros_;
    return *this;
  }
  constexpr auto operator<=>(const Money&) const = default;

 private:
  constexpr explicit Money(std::int64_t micros) : micros_(micros) {}
  std::int64_t micros_ = 0;
};

/// tokens / 1000 * rate_per_1k, exact to the micro-dollar (truncated only
/// when the product has more than six fractional digits).
Money cost_for_tokens(std::int64_t tokens, Money rate_per_1k);

}  // namespace truthkit
