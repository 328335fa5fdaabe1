#include <doctest.h>

#include <cmath>
#include <sstream>
#include <stdexcept>

#include "riskmdp/extended_real.hpp"

using riskmdp::ExtendedReal;

TEST_CASE("finite arithmetic") {
  const ExtendedReal a(1.5), b(-0.25);
  CHECK((a + b).value() == 1.25);
  CHECK(a.weighted(2.0).value() == 3.0);
  CHECK(a > b);
}

TEST_CASE("negative infinity absorbs addition") {
  const ExtendedReal ninf = ExtendedReal::neg_inf();
  CHECK((ninf + 3.0).is_neg_inf());
  CHECK((ninf + ninf).is_neg_inf());
  CHECK(ninf < ExtendedReal(-1e300));
  CHECK(ninf == ExtendedReal::neg_inf());
  CHECK(std::isinf(ninf.to_double()));
  CHECK(ninf.value_or(-1e6) == -1e6);
  CHECK_THROWS_AS((void)ninf.value(), std::domain_error);
}

TEST_CASE("zero times negative infinity is zero") {
  const ExtendedReal ninf = ExtendedReal::neg_inf();
  CHECK(ninf.weighted(0.0) == ExtendedReal(0.0));
  CHECK(ninf.weighted(1e-300).is_neg_inf());
  CHECK_THROWS((void)ninf.weighted(-1.0));
}

TEST_CASE("max and printing") {
  CHECK(max(ExtendedReal::neg_inf(), ExtendedReal(2.0)) == ExtendedReal(2.0));
  std::ostringstream os;
  os << ExtendedReal::neg_inf();
  CHECK(os.str() == "-inf");
}
