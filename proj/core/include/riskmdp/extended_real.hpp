#pragma once

#include <compare>
#include <iosfwd>

namespace riskmdp {

/// A real number or negative infinity.
///
/// Rewards of the kernel-choosing player are -inf when the chosen row is not
/// absolutely continuous with respect to the controlled row. Arithmetic:
///   -inf + finite = -inf,  -inf + -inf = -inf,
///   0 * -inf = 0,  w * -inf = -inf for w > 0.
/// Negative weights are not used anywhere and are rejected.
class ExtendedReal {
 public:
  constexpr ExtendedReal() = default;
  constexpr ExtendedReal(double value) : value_(value) {}  // NOLINT: implicit by design of the arithmetic

  static constexpr ExtendedReal neg_inf() {
    ExtendedReal r;
    r.neg_inf_ = true;
    return r;
  }

  [[nodiscard]] constexpr bool is_finite() const { return !neg_inf_; }
  [[nodiscard]] constexpr bool is_neg_inf() const { return neg_inf_; }

  /// Finite value; throws std::domain_error on -inf.
  [[nodiscard]] double value() const;

  /// Finite value, or `replacement` for -inf (used for LP sentinels).
  [[nodiscard]] constexpr double value_or(double replacement) const {
    return neg_inf_ ? replacement : value_;
  }

  /// IEEE view: -inf maps to -std::numeric_limits<double>::infinity().
  [[nodiscard]] double to_double() const;

  /// w * x with the 0 * -inf = 0 rule. Requires w >= 0.
  [[nodiscard]] ExtendedReal weighted(double w) const;

  friend ExtendedReal operator+(ExtendedReal a, ExtendedReal b) {
    if (a.neg_inf_ || b.neg_inf_) return neg_inf();
    return ExtendedReal(a.value_ + b.value_);
  }
  ExtendedReal& operator+=(ExtendedReal other) { return *this = *this + other; }

  friend bool operator==(ExtendedReal a, ExtendedReal b) {
    if (a.neg_inf_ || b.neg_inf_) return a.neg_inf_ == b.neg_inf_;
    return a.value_ == b.value_;
  }
  friend std::partial_ordering operator<=>(ExtendedReal a, ExtendedReal b) {
    if (a.neg_inf_ && b.neg_inf_) return std::partial_ordering::equivalent;
    if (a.neg_inf_) return std::partial_ordering::less;
    if (b.neg_inf_) return std::partial_ordering::greater;
    return a.value_ <=> b.value_;
  }

 private:
  double value_ = 0.0;
  bool neg_inf_ = false;
};

ExtendedReal max(ExtendedReal a, ExtendedReal b);
std::ostream& operator<<(std::ostream& os, ExtendedReal x);

}  // namespace riskmdp
