#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace abstain {

// A point of the input space. All shipped domains are piecewise-constant over
// finitely many cells, so a point carries its cell index alongside the raw
// coordinate; everything downstream (functions, eta, features) is resolved
// per cell.
struct Point {
    double x = 0.0;
    int region = 0;
};

enum class DomainKind { FiniteSupport, IntervalRegions };

struct Cell {
    double mass = 0.0;
    double lo = 0.0;  // FiniteSupport: lo == hi == support coordinate
    double hi = 0.0;
};

struct Domain {
    DomainKind kind = DomainKind::FiniteSupport;
    std::vector<Cell> cells;

    int size() const { return static_cast<int>(cells.size()); }
    Point representative(int region) const {
        const Cell& c = cells.at(static_cast<std::size_t>(region));
        return Point{0.5 * (c.lo + c.hi), region};
    }
    void validate() const;
};

enum class BoundMode { Exact, Approximate };

struct ConfidenceInterval {
    double lcb = 0.0;
    double ucb = 1.0;
    BoundMode mode = BoundMode::Exact;
    double slack = 0.0;  // one-sided slack in Approximate mode

    double width() const { return ucb - lcb; }
    bool contains(const ConfidenceInterval& inner) const {
        return lcb <= inner.lcb && inner.ucb <= ucb;
    }
};

// Three-valued classifier action. Abstain is the reject option.
enum class Action : int { Neg = -1, Abstain = 0, Pos = +1 };

inline int sign_label(double value) { return value >= 0.5 ? +1 : -1; }  // tie at 1/2 -> +1

// ---- deterministic RNG helpers (no std::*_distribution: those are
//      implementation-defined, and traces must be reproducible) ----

struct SplitMix64 {
    std::uint64_t state;
    explicit SplitMix64(std::uint64_t seed) : state(seed) {}
    std::uint64_t next() {
        std::uint64_t z = (state += 0x9e3779b97f4a7c15ull);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
        return z ^ (z >> 31);
    }
};

// xoshiro256** — small, fast, stable across platforms.
class Rng {
  public:
    explicit Rng(std::uint64_t seed) {
        SplitMix64 sm(seed);
        for (auto& w : s_) w = sm.next();
    }
    std::uint64_t next_u64() {
        const std::uint64_t result = rotl(s_[1] * 5, 7) * 9;
        const std::uint64_t t = s_[1] << 17;
        s_[2] ^= s_[0];
        s_[3] ^= s_[1];
        s_[1] ^= s_[2];
        s_[0] ^= s_[3];
        s_[2] ^= t;
        s_[3] = rotl(s_[3], 45);
        return result;
    }
    // uniform in [0, 1)
    double next_double() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }
    // uniform integer in [0, n)
    std::uint64_t next_below(std::uint64_t n) {
        // rejection sampling, no modulo bias
        const std::uint64_t limit = ~std::uint64_t(0) - (~std::uint64_t(0) % n);
        std::uint64_t v = next_u64();
        while (v >= limit) v = next_u64();
        return v % n;
    }

  private:
    static std::uint64_t rotl(std::uint64_t v, int k) { return (v << k) | (v >> (64 - k)); }
    std::uint64_t s_[4];
};

inline std::uint64_t derive_seed(std::uint64_t base, std::uint64_t a, std::uint64_t b = 0) {
    SplitMix64 sm(base ^ (0x9e3779b97f4a7c15ull * (a + 1)));
    std::uint64_t s = sm.next();
    SplitMix64 sm2(s ^ (0xc2b2ae3d27d4eb4full * (b + 1)));
    return sm2.next();
}

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

}  // namespace abstain
