#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include <cstdint>
#include <optional>
#include <random>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace mint {

template <typename Scalar>
using MatT = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <typename Scalar>
using VecT = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
template <typename Scalar>
using SpMatT = Eigen::SparseMatrix<Scalar>;

using Mat = MatT<double>;
using Vec = VecT<double>;
using SpMat = SpMatT<double>;

struct MintError : std::runtime_error {
  explicit MintError(const std::string& msg) : std::runtime_error(msg) {}
};

// Bad input files, malformed rows, inconsistent id spaces.
struct DataError : MintError {
  explicit DataError(const std::string& msg) : MintError(msg) {}
};

// Invalid configuration values or impossible generator settings.
struct ConfigError : MintError {
  explicit ConfigError(const std::string& msg) : MintError(msg) {}
};

// Non-finite loss during training; names the offending component.
struct DivergenceError : MintError {
  std::string component;
  DivergenceError(const std::string& comp, const std::string& msg)
      : MintError(msg), component(comp) {}
};

using WarningList = std::vector<std::string>;

inline void warn(WarningList* sink, const std::string& msg) {
  if (sink) sink->push_back(msg);
}

// Deterministic RNG. All randomness in the project flows through this
// wrapper so results do not depend on libstdc++'s distribution
// implementations.
class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0) : eng_(seed) {}

  std::uint64_t u64() { return eng_(); }

  // Uniform in [0, 1) with 53-bit resolution.
  double unit() { return static_cast<double>(eng_() >> 11) * 0x1.0p-53; }

  // Uniform integer in [0, n). n must be > 0.
  std::uint64_t below(std::uint64_t n) {
    // rejection sampling to avoid modulo bias
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    std::uint64_t v = eng_();
    while (v >= limit) v = eng_();
    return v % n;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * unit(); }

  // Box-Muller; caches the spare deviate.
  double normal() {
    if (spare_) {
      double v = *spare_;
      spare_.reset();
      return v;
    }
    double u1 = unit();
    while (u1 <= 0.0) u1 = unit();
    const double u2 = unit();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double theta = 6.283185307179586476925286766559 * u2;
    spare_ = r * std::sin(theta);
    return r * std::cos(theta);
  }

  double normal(double mean, double stddev) { return mean + stddev * normal(); }

  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::swap(v[i - 1], v[below(i)]);
    }
  }

  // Weighted index draw; weights must be non-negative with positive sum.
  std::size_t weighted(const std::vector<double>& w) {
    double total = 0.0;
    for (double x : w) total += x;
    double r = unit() * total;
    for (std::size_t i = 0; i < w.size(); ++i) {
      r -= w[i];
      if (r < 0.0) return i;
    }
    return w.size() - 1;
  }

  std::string serialize() const {
    std::ostringstream os;
    os << eng_;
    if (spare_) os << " 1 " << *spare_;
    else os << " 0";
    return os.str();
  }

  void deserialize(const std::string& s) {
    std::istringstream is(s);
    is >> eng_;
    int has_spare = 0;
    is >> has_spare;
    if (has_spare) {
      double v = 0.0;
      is >> v;
      spare_ = v;
    } else {
      spare_.reset();
    }
  }

 private:
  std::mt19937_64 eng_;
  std::optional<double> spare_;
};

}  // namespace mint
