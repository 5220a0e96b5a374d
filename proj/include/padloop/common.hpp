#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>

namespace padloop {

// Error hierarchy. Callers that surface these to a process boundary map
// invalid_input/degenerate_input to "bad request", numerical_failure to
// "computation failed", io_error/version_error to "artifact problem".
struct error : std::runtime_error {
    explicit error(const std::string& msg) : std::runtime_error(msg) {}
};

struct invalid_input : error {
    explicit invalid_input(const std::string& msg) : error("invalid input: " + msg) {}
};

struct degenerate_input : error {
    explicit degenerate_input(const std::string& msg) : error("degenerate input: " + msg) {}
};

struct numerical_failure : error {
    explicit numerical_failure(const std::string& msg) : error("numerical failure: " + msg) {}
};

struct io_error : error {
    explicit io_error(const std::string& msg) : error("io error: " + msg) {}
};

struct version_error : error {
    explicit version_error(const std::string& msg) : error("version error: " + msg) {}
};

namespace detail {

inline std::uint64_t splitmix64(std::uint64_t& state) {
    state += 0x9e3779b97f4a7c15ULL;
    std::uint64_t z = state;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

} // namespace detail

// Deterministic random stream. All stochastic code in the library draws from
// this class only, so a seed pins every result bit-for-bit on one platform.
// uniform() maps the top 53 bits of a 64-bit draw onto [0,1); normal() is
// Box-Muller with the spare value cached.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : state_(seed) {
        // splitmix warmup decorrelates small consecutive seeds
        std::uint64_t s = seed;
        state_ = detail::splitmix64(s);
        state_b_ = detail::splitmix64(s);
        if (state_ == 0 && state_b_ == 0) state_ = 0x853c49e6748fea9bULL;
    }

    std::uint64_t next_u64() {
        // xorshift128+ keeps the generator self-contained and portable
        std::uint64_t x = state_;
        const std::uint64_t y = state_b_;
        state_ = y;
        x ^= x << 23;
        state_b_ = x ^ y ^ (x >> 17) ^ (y >> 26);
        return state_b_ + y;
    }

    double uniform() {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    // uniform integer in [0, n)
    std::uint64_t uniform_int(std::uint64_t n) {
        if (n == 0) throw invalid_input("uniform_int: n must be positive");
        // rejection sampling removes modulo bias
        const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() - std::numeric_limits<std::uint64_t>::max() % n;
        std::uint64_t v = next_u64();
        while (v >= limit) v = next_u64();
        return v % n;
    }

    double normal() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        const double u1 = uniform();
        const double u2 = uniform();
        const double r = std::sqrt(-2.0 * std::log1p(-u1));
        const double theta = 2.0 * M_PI * u2;
        spare_ = r * std::sin(theta);
        has_spare_ = true;
        return r * std::cos(theta);
    }

    // Derives a child seed for an independent substream. Deterministic in
    // (seed, stream) and insensitive to how much the parent has been used.
    static std::uint64_t derive(std::uint64_t seed, std::uint64_t stream) {
        std::uint64_t s = seed ^ (0x9e3779b97f4a7c15ULL * (stream + 1));
        std::uint64_t a = detail::splitmix64(s);
        std::uint64_t b = detail::splitmix64(s);
        return a ^ (b << 1);
    }

private:
    std::uint64_t state_;
    std::uint64_t state_b_ = 0;
    bool has_spare_ = false;
    double spare_ = 0.0;
};

inline void require(bool cond, const std::string& msg) {
    if (!cond) throw invalid_input(msg);
}

inline bool finite(double v) { return std::isfinite(v); }

} // namespace padloop
