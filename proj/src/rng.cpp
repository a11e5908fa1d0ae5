#include "boxde/rng.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace boxde {

std::uint64_t mix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

std::uint64_t hash_string(std::string_view s) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return mix64(h);
}

namespace {

std::uint64_t derive_key(std::uint64_t seed, const std::vector<std::uint64_t>& path) {
    std::uint64_t key = mix64(seed);
    for (auto p : path) key = mix64(key ^ mix64(p + 0x632be59bd9b4e019ULL));
    return key;
}

[[noreturn]] void bad_params() { throw std::invalid_argument("invalid distribution parameters"); }

}  // namespace

RngStream::RngStream(std::uint64_t seed, std::vector<std::uint64_t> path)
    : seed_(seed), path_(std::move(path)), engine_(derive_key(seed_, path_)) {}

RngStream RngStream::split(std::uint64_t key) const {
    auto child = path_;
    child.push_back(key);
    return RngStream(seed_, std::move(child));
}

double RngStream::next_unit() {
    // 53 random bits, offset by half an ulp so that 0 and 1 are never returned.
    return (static_cast<double>(engine_() >> 11) + 0.5) * 0x1.0p-53;
}

std::size_t RngStream::below(std::size_t n) {
    if (n == 0) throw std::invalid_argument("below(0)");
    // Lemire's nearly-divisionless rejection.
    const std::uint64_t range = n;
    std::uint64_t x = engine_();
    __uint128_t m = static_cast<__uint128_t>(x) * range;
    auto low = static_cast<std::uint64_t>(m);
    if (low < range) {
        const std::uint64_t threshold = -range % range;
        while (low < threshold) {
            x = engine_();
            m = static_cast<__uint128_t>(x) * range;
            low = static_cast<std::uint64_t>(m);
        }
    }
    return static_cast<std::size_t>(m >> 64);
}

double ScriptedUnits::next_unit() {
    if (values_.empty()) throw std::logic_error("ScriptedUnits has no values");
    return values_[consumed_++ % values_.size()];
}

double draw_gamma(UnitSource& src, double shape) {
    if (!(shape > 0.0) || !std::isfinite(shape)) bad_params();
    if (shape < 1.0) {
        const double g = draw_gamma(src, shape + 1.0);
        return g * std::pow(src.next_unit(), 1.0 / shape);
    }
    const double d = shape - 1.0 / 3.0;
    const double c = 1.0 / std::sqrt(9.0 * d);
    for (;;) {
        double x = 0.0;
        double v = 0.0;
        do {
            x = draw(src, NormalDist{0.0, 1.0});
            v = 1.0 + c * x;
        } while (v <= 0.0);
        v = v * v * v;
        const double u = src.next_unit();
        if (u < 1.0 - 0.0331 * x * x * x * x) return d * v;
        if (std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v))) return d * v;
    }
}

double draw(UnitSource& src, const Distribution& dist) {
    return std::visit(
        [&src](const auto& d) -> double {
            using T = std::decay_t<decltype(d)>;
            if constexpr (std::is_same_v<T, UniformDist>) {
                if (!(d.high > d.low) || !std::isfinite(d.low) || !std::isfinite(d.high)) bad_params();
                return d.low + (d.high - d.low) * src.next_unit();
            } else if constexpr (std::is_same_v<T, NormalDist>) {
                if (!(d.stddev > 0.0)) bad_params();
                // Box-Muller, cosine branch only; the stream stays stateless.
                const double u1 = src.next_unit();
                const double u2 = src.next_unit();
                const double z = std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
                return d.mean + d.stddev * z;
            } else if constexpr (std::is_same_v<T, CauchyDist>) {
                if (!(d.scale > 0.0)) bad_params();
                return d.location + d.scale * std::tan(std::numbers::pi * (src.next_unit() - 0.5));
            } else {
                if (!(d.alpha > 0.0) || !(d.beta > 0.0)) bad_params();
                const double x = draw_gamma(src, d.alpha);
                const double y = draw_gamma(src, d.beta);
                const double sum = x + y;
                if (sum <= 0.0) return d.alpha / (d.alpha + d.beta);
                return x / sum;
            }
        },
        dist);
}

}  // namespace boxde
