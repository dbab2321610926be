#pragma once

#include <cmath>
#include <cstdint>
#include <sstream>
#include <stdexcept>
#include <string>

namespace inf2vec {

// Scalar type for all numeric kernels. Tests and acceptance runs require the
// 64-bit default; define INF2VEC_REAL32 to trade verification headroom for speed.
#ifdef INF2VEC_REAL32
using Real = float;
#else
using Real = double;
#endif

struct error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

template <class... A>
std::string cat(A&&... a) {
  std::ostringstream os;
  (os << ... << a);
  return os.str();
}

inline void require(bool cond, const std::string& msg) {
  if (!cond) throw error(msg);
}

inline constexpr double kPi = 3.14159265358979323846;
inline constexpr double kLogTwoPi = 1.8378770664093454836;

}  // namespace inf2vec
