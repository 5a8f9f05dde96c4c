#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace paps {

// Error categories map to CLI exit codes: user errors exit 1, internal errors exit 2.
enum class ErrorKind { User, Internal };

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, std::string code, const std::string& message)
        : std::runtime_error(code + ": " + message), kind_(kind), code_(std::move(code)) {}
    ErrorKind kind() const { return kind_; }
    const std::string& code() const { return code_; }

private:
    ErrorKind kind_;
    std::string code_;
};

struct ParseError : Error {
    explicit ParseError(const std::string& msg) : Error(ErrorKind::User, "parse-error", msg) {}
};
struct ConfigError : Error {
    explicit ConfigError(const std::string& msg) : Error(ErrorKind::User, "config-error", msg) {}
};
struct ShapeError : Error {
    explicit ShapeError(const std::string& msg) : Error(ErrorKind::Internal, "shape-error", msg) {}
};
struct NumericalError : Error {
    explicit NumericalError(const std::string& msg) : Error(ErrorKind::Internal, "numerical-error", msg) {}
};
struct GenerationError : Error {
    explicit GenerationError(const std::string& msg) : Error(ErrorKind::User, "generation-failure", msg) {}
};
struct OrderingError : Error {
    explicit OrderingError(const std::string& msg) : Error(ErrorKind::User, "ordering-error", msg) {}
};
struct InvariantError : Error {
    explicit InvariantError(const std::string& msg) : Error(ErrorKind::Internal, "invariant-violation", msg) {}
};
struct IoError : Error {
    explicit IoError(const std::string& msg) : Error(ErrorKind::User, "io-error", msg) {}
};
struct ValidationError : Error {
    explicit ValidationError(const std::string& msg) : Error(ErrorKind::User, "validation-error", msg) {}
};

// Plane of doubles, channel-major (c, y, x). Plain data, no autograd.
struct Array3 {
    int c = 0, h = 0, w = 0;
    std::vector<double> v;

    Array3() = default;
    Array3(int c_, int h_, int w_, double fill = 0.0)
        : c(c_), h(h_), w(w_), v(static_cast<size_t>(c_) * h_ * w_, fill) {}

    double& at(int ci, int y, int x) { return v[(static_cast<size_t>(ci) * h + y) * w + x]; }
    double at(int ci, int y, int x) const { return v[(static_cast<size_t>(ci) * h + y) * w + x]; }
    size_t size() const { return v.size(); }
    bool empty() const { return v.empty(); }
};

// Deterministic RNG built on mt19937_64 with self-contained distributions so
// results do not depend on libstdc++ internals.
class Rng {
public:
    explicit Rng(uint64_t seed) : s_(splitmix(seed)), inc_(splitmix(seed ^ 0x9e3779b97f4a7c15ull) | 1ull) {}

    uint64_t next_u64() {
        // xorshift128+ style step over two lanes seeded from splitmix
        uint64_t x = s_;
        uint64_t y = inc_;
        s_ = y;
        x ^= x << 23;
        inc_ = x ^ y ^ (x >> 17) ^ (y >> 26);
        return inc_ + y;
    }

    // Uniform integer in [lo, hi] inclusive.
    int64_t uniform_int(int64_t lo, int64_t hi) {
        uint64_t span = static_cast<uint64_t>(hi - lo) + 1;
        return lo + static_cast<int64_t>(next_u64() % span);
    }

    // Uniform real in [0, 1).
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // Standard normal via Box-Muller (first value only; deterministic).
    double normal() {
        double u1 = uniform();
        double u2 = uniform();
        if (u1 < 1e-300) u1 = 1e-300;
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586 * u2);
    }

    uint64_t fork(uint64_t stream) { return splitmix(s_ ^ (stream * 0xbf58476d1ce4e5b9ull)); }

private:
    static uint64_t splitmix(uint64_t x) {
        x += 0x9e3779b97f4a7c15ull;
        x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
        x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
        return x ^ (x >> 31);
    }

    uint64_t s_;
    uint64_t inc_;
};

}  // namespace paps
