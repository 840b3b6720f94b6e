#ifndef SPEARMIX_COMMON_HPP
#define SPEARMIX_COMMON_HPP

#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>

namespace spearmix {

/// Error thrown by all spearmix operations on invalid input or state.
class error : public std::runtime_error {
public:
    explicit error(const std::string& what) : std::runtime_error(what) {}
};

inline constexpr double neg_inf = -std::numeric_limits<double>::infinity();

/// log(exp(a) + exp(b)) staying in the log domain.
inline double log_add(double a, double b) {
    if (a == neg_inf) return b;
    if (b == neg_inf) return a;
    if (a < b) std::swap(a, b);
    return a + std::log1p(std::exp(b - a));
}

/// log(exp(a) - exp(b)), requires a >= b.
inline double log_sub(double a, double b) {
    if (b == neg_inf) return a;
    if (b > a) throw error("log_sub: negative difference");
    if (b == a) return neg_inf;
    return a + std::log1p(-std::exp(b - a));
}

/// log sum exp over a span; -inf entries contribute nothing.
inline double log_sum_exp(std::span<const double> xs) {
    double m = neg_inf;
    for (double x : xs) m = std::max(m, x);
    if (m == neg_inf) return neg_inf;
    double s = 0.0;
    for (double x : xs)
        if (x != neg_inf) s += std::exp(x - m);
    return m + std::log(s);
}

inline double log_factorial(int n) { return std::lgamma(static_cast<double>(n) + 1.0); }

// Exact distance counts need more than 64 bits: 14! fits, but the signed
// inclusion-exclusion accumulator does not.
using int128 = __int128;

inline std::string int128_to_string(int128 v) {
    if (v == 0) return "0";
    bool neg = v < 0;
    unsigned __int128 u = neg ? -static_cast<unsigned __int128>(v) : static_cast<unsigned __int128>(v);
    std::string digits;
    while (u > 0) {
        digits.push_back(static_cast<char>('0' + static_cast<int>(u % 10)));
        u /= 10;
    }
    if (neg) digits.push_back('-');
    return {digits.rbegin(), digits.rend()};
}

inline int128 int128_from_string(const std::string& s) {
    if (s.empty()) throw error("int128_from_string: empty string");
    std::size_t i = 0;
    bool neg = false;
    if (s[0] == '-' || s[0] == '+') {
        neg = s[0] == '-';
        i = 1;
    }
    if (i == s.size()) throw error("int128_from_string: no digits in '" + s + "'");
    int128 v = 0;
    for (; i < s.size(); ++i) {
        if (s[i] < '0' || s[i] > '9') throw error("int128_from_string: bad digit in '" + s + "'");
        v = v * 10 + (s[i] - '0');
    }
    return neg ? -v : v;
}

/// splitmix64 mix of a root seed and a stream id; used to derive independent
/// RNG streams for restarts, replicates and chains.
inline std::uint64_t derive_seed(std::uint64_t root, std::uint64_t salt) {
    std::uint64_t z = root + 0x9e3779b97f4a7c15ULL * (salt + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

/// Uniform double in [0, 1) with 53 random bits.
template <class Rng>
double uniform01(Rng& rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

/// Uniform integer in [0, m).
template <class Rng>
std::size_t uniform_index(Rng& rng, std::size_t m) {
    return static_cast<std::size_t>(uniform01(rng) * static_cast<double>(m)) % m;
}

} // namespace spearmix

#endif // SPEARMIX_COMMON_HPP
