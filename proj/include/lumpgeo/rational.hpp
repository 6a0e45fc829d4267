#pragma once

// Exact rational scalars for the matrix templates (lump_matrix, embed_matrix, block_row_sums).

#include <string>

#include <boost/rational.hpp>
#include <Eigen/Core>

namespace lumpgeo {
using Rational = boost::rational<long long>;

inline std::string to_string(const Rational& r) {
  return r.denominator() == 1 ? std::to_string(r.numerator())
                              : std::to_string(r.numerator()) + "/" + std::to_string(r.denominator());
}
}  // namespace lumpgeo

namespace Eigen {
template <>
struct NumTraits<lumpgeo::Rational> : GenericNumTraits<lumpgeo::Rational> {
  using Real = lumpgeo::Rational;
  using NonInteger = lumpgeo::Rational;
  using Nested = lumpgeo::Rational;
  using Literal = lumpgeo::Rational;
  enum {
    IsComplex = 0,
    IsInteger = 0,
    IsSigned = 1,
    RequireInitialization = 1,
    ReadCost = 2,
    AddCost = 8,
    MulCost = 8
  };
  static inline Real epsilon() { return Real(0); }
  static inline Real dummy_precision() { return Real(0); }
  static inline int digits10() { return 0; }
};
}  // namespace Eigen
