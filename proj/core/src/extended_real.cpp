#include "riskmdp/extended_real.hpp"

#include <limits>
#include <ostream>
#include <stdexcept>

namespace riskmdp {

double ExtendedReal::value() const {
  if (neg_inf_) throw std::domain_error("ExtendedReal::value() on -inf");
  return value_;
}

double ExtendedReal::to_double() const {
  return neg_inf_ ? -std::numeric_limits<double>::infinity() : value_;
}

ExtendedReal ExtendedReal::weighted(double w) const {
  if (!(w >= 0.0)) throw std::domain_error("ExtendedReal::weighted requires a nonnegative weight");
  if (w == 0.0) return ExtendedReal(0.0);
  if (neg_inf_) return neg_inf();
  return ExtendedReal(w * value_);
}

ExtendedReal max(ExtendedReal a, ExtendedReal b) { return (a < b) ? b : a; }

std::ostream& operator<<(std::ostream& os, ExtendedReal x) {
  if (x.is_neg_inf()) return os << "-inf";
  return os << x.value_or(0.0);
}

}  // namespace riskmdp
