#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>
#include <span>
#include <string_view>
#include <variant>
#include <vector>

namespace boxde {

/// Source of unit draws. Everything stochastic in the library consumes
/// randomness through this interface so that tests can script the exact
/// values an operator sees.
class UnitSource {
public:
    virtual ~UnitSource() = default;

    /// A value in the open interval (0, 1).
    virtual double next_unit() = 0;
};

/// 64-bit finalizer from SplitMix64.
std::uint64_t mix64(std::uint64_t x);

/// Stable 64-bit hash of a string (FNV-1a followed by mix64).
std::uint64_t hash_string(std::string_view s);

/// Hierarchically keyed random stream.
///
/// A stream is identified by a seed and a path of split keys
/// (experiment -> function -> instance -> run -> role). The generator
/// state is a pure function of that identity, so runs can be scheduled in
/// any order or on any thread and still see the same draws.
class RngStream final : public UnitSource {
public:
    explicit RngStream(std::uint64_t seed, std::vector<std::uint64_t> path = {});

    std::uint64_t seed() const { return seed_; }
    const std::vector<std::uint64_t>& path() const { return path_; }

    /// Child stream with `key` appended to the path. The parent is not advanced.
    RngStream split(std::uint64_t key) const;
    RngStream split(std::string_view key) const { return split(hash_string(key)); }

    double next_unit() override;
    std::uint64_t next_u64() { return engine_(); }

    /// Uniform integer in [0, n).
    std::size_t below(std::size_t n);

private:
    std::uint64_t seed_;
    std::vector<std::uint64_t> path_;
    std::mt19937_64 engine_;
};

/// Replays a fixed list of unit draws, cycling when exhausted.
class ScriptedUnits final : public UnitSource {
public:
    ScriptedUnits(std::initializer_list<double> values) : values_(values) {}
    explicit ScriptedUnits(std::vector<double> values) : values_(std::move(values)) {}

    double next_unit() override;
    std::size_t consumed() const { return consumed_; }

private:
    std::vector<double> values_;
    std::size_t consumed_ = 0;
};

struct UniformDist {
    double low;
    double high;
};

struct NormalDist {
    double mean;
    double stddev;
};

struct CauchyDist {
    double location;
    double scale;
};

struct BetaDist {
    double alpha;
    double beta;
};

using Distribution = std::variant<UniformDist, NormalDist, CauchyDist, BetaDist>;

/// Draws one value from `dist`. Throws std::invalid_argument with
/// "invalid distribution parameters" on bad parameters.
///
/// All samplers are written against UnitSource rather than <random>
/// distributions so that results are identical across standard libraries.
double draw(UnitSource& src, const Distribution& dist);

/// Gamma(shape, 1) by Marsaglia-Tsang, with the shape < 1 boost.
double draw_gamma(UnitSource& src, double shape);

}  // namespace boxde
