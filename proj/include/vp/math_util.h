#ifndef VP_MATH_UTIL_H_
#define VP_MATH_UTIL_H_

#include <cmath>

namespace vp {

inline double Sigmoid(double z) {
  if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

// log(1 + exp(z)) without overflow.
inline double Softplus(double z) {
  return z > 0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z));
}

}  // namespace vp

#endif  // VP_MATH_UTIL_H_
