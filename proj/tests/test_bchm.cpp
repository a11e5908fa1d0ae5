#include <doctest.h>

#include <cmath>
#include <numeric>

#include "boxde/bchm.hpp"

using namespace boxde;

namespace {

const Bounds kBox1 = Bounds::cube(1, -5, 5);
const Bounds kBox2 = Bounds::cube(2, -5, 5);

Vector random_vector(RngStream& rng, std::size_t n, double lo, double hi) {
    Vector v(n);
    for (auto& x : v) x = draw(rng, UniformDist{lo, hi});
    return v;
}

double norm(const Vector& v) { return std::sqrt(std::inner_product(v.begin(), v.end(), v.begin(), 0.0)); }

}  // namespace

TEST_SUITE("bchm") {

TEST_CASE("method ids round trip") {
    for (auto m : kAllMethods) CHECK(parse_method(method_id(m)) == m);
    CHECK(method_id(Method::ExpBest) == "expBest");
    CHECK(method_id(Method::VectorMidpoint) == "vectorMidpoint");
    CHECK_THROWS_WITH(parse_method("clip"), "unknown method: clip");
}

TEST_CASE("saturate examples") {
    CHECK(*saturate(Vector{7.0}, kBox1).corrected == Vector{5.0});
    auto o = saturate(Vector{0.0}, kBox1);
    CHECK(*o.corrected == Vector{0.0});
    CHECK(o.components_corrected == 0);
    o = saturate(Vector{-9.0, 3.0}, kBox2);
    CHECK(*o.corrected == Vector{-5.0, 3.0});
    CHECK(o.components_corrected == 1);
    CHECK_FALSE(o.vector_alpha);
}

TEST_CASE("mirror examples") {
    CHECK(mirror(Vector{6.2}, kBox1).corrected->at(0) == doctest::Approx(3.8).epsilon(1e-12));
    CHECK(*mirror(Vector{2.0}, kBox1).corrected == Vector{2.0});
    CHECK(mirror(Vector{17.0}, kBox1).corrected->at(0) == doctest::Approx(-3.0).epsilon(1e-12));
    CHECK(mirror(Vector{-26.0}, kBox1).corrected->at(0) == doctest::Approx(-4.0).epsilon(1e-12));
}

TEST_CASE("mirror recovers singly reflected points") {
    RngStream rng(31);
    const auto box = Bounds::cube(5, -5, 5);
    for (int t = 0; t < 10000; ++t) {
        const auto x = random_vector(rng, 5, -5, 5);
        Vector image = x;
        for (std::size_t i = 0; i < 5; ++i)
            if (rng.next_unit() < 0.5) image[i] = x[i] >= 0 ? 10.0 - x[i] : -10.0 - x[i];
        const auto back = *mirror(image, box).corrected;
        for (std::size_t i = 0; i < 5; ++i) REQUIRE(std::abs(back[i] - x[i]) < 1e-12);
    }
}

TEST_CASE("uniform resample examples") {
    ScriptedUnits u{0.25};
    CHECK(*uniform_resample(Vector{9.0}, kBox1, u).corrected == Vector{-2.5});
    ScriptedUnits v{0.25};
    CHECK(*uniform_resample(Vector{1.0, 1.0}, kBox2, v).corrected == Vector{1.0, 1.0});
    CHECK(v.consumed() == 0);

    RngStream rng(4);
    double s = 0;
    for (int i = 0; i < 100000; ++i) s += uniform_resample(Vector{9.0}, kBox1, rng).corrected->at(0);
    CHECK(std::abs(s / 100000) < 0.05);
}

TEST_CASE("beta fit examples") {
    PopulationStats st{{0.0}, {1.0}};
    auto p = fit_beta_params(st, kBox1);
    CHECK(std::abs(p.m[0] - 0.5) < 1e-12);
    CHECK(std::abs(p.v[0] - 0.01) < 1e-12);
    CHECK(std::abs(p.alpha[0] - 12.0) < 1e-12);
    CHECK(std::abs(p.beta[0] - 12.0) < 1e-12);
    CHECK_FALSE(p.fallback_mask[0]);

    p = fit_beta_params(PopulationStats{{-5.0}, {0.5}}, kBox1);
    CHECK(p.m[0] == doctest::Approx(0.1).epsilon(1e-12));
    p = fit_beta_params(PopulationStats{{5.0}, {0.5}}, kBox1, 0.2);
    CHECK(p.m[0] == doctest::Approx(0.8).epsilon(1e-12));

    p = fit_beta_params(PopulationStats{{0.0}, {25.0}}, kBox1);
    CHECK(std::abs(p.alpha[0]) < 1e-12);
    CHECK(p.fallback_mask[0]);

    p = fit_beta_params(PopulationStats{{1.0}, {0.0}}, kBox1);
    CHECK(p.fallback_mask[0]);
}

TEST_CASE("beta fit shapes are positive off the fallback mask") {
    RngStream rng(77);
    const auto box = Bounds::cube(8, -5, 5);
    for (int t = 0; t < 2000; ++t) {
        PopulationStats st{random_vector(rng, 8, -6, 6), random_vector(rng, 8, 0, 30)};
        const auto p = fit_beta_params(st, box);
        for (std::size_t i = 0; i < 8; ++i) {
            REQUIRE(p.m[i] >= 0.1);
            REQUIRE(p.m[i] <= 0.9);
            if (!p.fallback_mask[i]) {
                REQUIRE(p.alpha[i] > 0.0);
                REQUIRE(p.beta[i] > 0.0);
            }
        }
    }
}

TEST_CASE("beta correction preserves the population moments") {
    RngStream rng(5);
    const PopulationStats st{{0.0}, {1.0}};
    const auto params = fit_beta_params(st, kBox1);
    const int n = 100000;
    double s = 0, s2 = 0;
    for (int i = 0; i < n; ++i) {
        const double c = beta_correct(Vector{9.0}, kBox1, params, rng).corrected->at(0);
        s += c;
        s2 += c * c;
    }
    const double mean = s / n;
    const double var = s2 / n - mean * mean;
    CHECK(std::abs(mean) < 0.05);
    CHECK(std::abs(var - 1.0) < 0.1);
}

TEST_CASE("beta fallback component equals uniform resample") {
    const PopulationStats st{{0.0, 0.0}, {25.0, 1.0}};
    ScriptedUnits a{0.3, 0.8};
    ScriptedUnits b{0.3, 0.8};
    const Vector y{9.0, 1.0};
    const auto viaBeta = beta_correct(y, kBox2, st, a);
    const auto viaUniform = uniform_resample(y, kBox2, b);
    CHECK(*viaBeta.corrected == *viaUniform.corrected);
    CHECK(a.consumed() == b.consumed());
    ScriptedUnits c{0.5};
    CHECK(*beta_correct(Vector{2.0}, kBox1, PopulationStats{{0.0}, {1.0}}, c).corrected == Vector{2.0});
}

TEST_CASE("exp confined limits") {
    CHECK(std::abs(exp_confined_component(-7.0, -5, 5, 1.5, 0.0) - (-5.0)) < 1e-12);
    CHECK(std::abs(exp_confined_component(-7.0, -5, 5, 1.5, 1.0) - 1.5) < 1e-12);
    CHECK(std::abs(exp_confined_component(8.0, -5, 5, -2.0, 1.0) - 5.0) < 1e-12);
    CHECK(std::abs(exp_confined_component(8.0, -5, 5, -2.0, 0.0) - (-2.0)) < 1e-12);
    CHECK(exp_confined_component(3.0, -5, 5, 0.0, 0.4) == 3.0);
}

TEST_CASE("exp confined is monotone and range-restricted") {
    const double R = 0.7;
    double prev = -5.0;
    for (int k = 1; k < 1000; ++k) {
        const double c = exp_confined_component(-6.0, -5, 5, R, k / 1000.0);
        REQUIRE(c > -5.0);
        REQUIRE(c < R);
        REQUIRE(c >= prev);
        prev = c;
    }
    RngStream rng(6);
    for (int t = 0; t < 10000; ++t) {
        const double Ru = draw(rng, UniformDist{-4.9, 4.9});
        const double c = exp_confined(Vector{6.0}, kBox1, Vector{Ru}, rng).corrected->at(0);
        REQUIRE(c > Ru);
        REQUIRE(c < 5.0);
    }
}

TEST_CASE("vector alpha examples") {
    const Vector R{0.0, 0.0};
    CHECK(std::abs(vector_alpha(Vector{10.0, 2.0}, R, kBox2) - 0.5) < 1e-12);
    CHECK(vector_alpha(Vector{1.0, 2.0}, R, kBox2) == 1.0);
    CHECK(std::abs(vector_alpha(Vector{10.0, -20.0}, R, kBox2) - 0.25) < 1e-12);
    CHECK_THROWS_WITH(vector_alpha(Vector{-6.0, 0.0}, Vector{-6.0, 0.0}, kBox2), "degenerate reference");
}

TEST_CASE("vector correct examples") {
    const auto o = vector_correct(Vector{10.0, 2.0}, Vector{0.0, 0.0}, kBox2);
    CHECK(std::abs(o.corrected->at(0) - 5.0) < 1e-12);
    CHECK(std::abs(o.corrected->at(1) - 1.0) < 1e-12);
    CHECK(*o.vector_alpha == doctest::Approx(0.5));
    CHECK(*vector_correct(Vector{1.0, 2.0}, Vector{0.0, 0.0}, kBox2).corrected == Vector{1.0, 2.0});
}

TEST_CASE("vector correction collinearity and bound contact") {
    RngStream rng(13);
    const auto box = Bounds::cube(6, -5, 5);
    for (int t = 0; t < 20000; ++t) {
        const auto R = random_vector(rng, 6, -5, 5);
        auto y = random_vector(rng, 6, -12, 12);
        if (count_violations(y, box) == 0) y[0] = 7.5;
        const auto o = vector_correct(y, R, box);
        const double alpha = *o.vector_alpha;
        REQUIRE(alpha >= 0.0);
        REQUIRE(alpha < 1.0);
        const auto& c = *o.corrected;
        REQUIRE(box.contains(c));
        Vector cr(6), yr(6);
        for (std::size_t i = 0; i < 6; ++i) {
            cr[i] = c[i] - R[i];
            yr[i] = y[i] - R[i];
        }
        REQUIRE(std::abs(norm(cr) - alpha * norm(yr)) < 1e-9);
        const double cosine = std::inner_product(cr.begin(), cr.end(), yr.begin(), 0.0) / (norm(cr) * norm(yr));
        if (norm(cr) > 1e-9) REQUIRE(cosine >= 1 - 1e-9);
        bool on_bound = false;
        for (std::size_t i = 0; i < 6; ++i) on_bound = on_bound || std::abs(std::abs(c[i]) - 5.0) < 1e-9;
        REQUIRE(on_bound);
    }
}

TEST_CASE("dismiss") {
    CHECK(dismiss(Vector{6.0, 0.0}, kBox2).dismissed());
    CHECK(dismiss(Vector{6.0, 0.0}, kBox2).components_corrected == 1);
    CHECK(*dismiss(Vector{1.0, 0.0}, kBox2).corrected == Vector{1.0, 0.0});
}

TEST_CASE("every method is idempotent on feasible input and feasible on infeasible input") {
    RngStream rng(21);
    const std::size_t n = 10;
    const auto box = Bounds::cube(n, -5, 5);
    const auto target = random_vector(rng, n, -5, 5);
    const auto pbest = random_vector(rng, n, -5, 5);
    const auto mean = random_vector(rng, n, -1, 1);
    const auto beta = fit_beta_params(PopulationStats{mean, Vector(n, 4.0)}, box);
    const CorrectionContext ctx{&box, target, pbest, mean, &beta};
    for (auto m : kAllMethods) {
        if (m == Method::Adaptive) {
            CHECK_THROWS(correct(m, Vector(n, 9.0), ctx, rng));
            continue;
        }
        CAPTURE(method_id(m));
        for (int t = 0; t < 20000; ++t) {
            const auto x = random_vector(rng, n, -5, 5);
            ScriptedUnits stub{0.5};
            const auto same = correct(m, x, ctx, stub);
            REQUIRE(*same.corrected == x);
            REQUIRE(stub.consumed() == 0);

            const auto y = random_vector(rng, n, -15, 15);
            const auto o = correct(m, y, ctx, rng);
            if (m == Method::Dismiss) {
                REQUIRE(o.dismissed() == (count_violations(y, box) > 0));
                continue;
            }
            REQUIRE(box.contains(*o.corrected));
            for (std::size_t i = 0; i < n; ++i)
                if (box.contains(i, y[i]) && m != Method::VectorTarget && m != Method::VectorBest &&
                    m != Method::VectorMidpoint)
                    REQUIRE(o.corrected->at(i) == y[i]);
        }
    }
}

TEST_CASE("adaptive selection") {
    auto s = AdaptiveState::fresh();
    CHECK(s.pool == std::vector<Method>{Method::VectorBest, Method::ExpBest, Method::Saturation,
                                        Method::VectorTarget, Method::Beta});
    for (double p : s.probabilities) CHECK(p == doctest::Approx(0.2));
    ScriptedUnits zero{0.0};
    CHECK(adaptive_select(s, zero) == 0);
    ScriptedUnits high{0.999};
    CHECK(adaptive_select(s, high) == 4);
    CHECK(s.uses[0] == 1);
    CHECK(s.uses[4] == 1);
}

TEST_CASE("adaptive update examples") {
    auto s = AdaptiveState::fresh();
    auto u = adaptive_update(s);
    for (double p : u.probabilities) CHECK(p == doctest::Approx(0.2).epsilon(1e-12));

    s.successes = {2, 0, 0, 0, 0};
    s.uses = {10, 10, 10, 10, 10};
    u = adaptive_update(s);
    for (std::size_t k = 1; k < 5; ++k) CHECK(u.probabilities[0] > u.probabilities[k]);
    CHECK(u.uses == std::vector<std::uint64_t>(5, 0));
    CHECK(u.successes == std::vector<std::uint64_t>(5, 0));

    s.successes = {5, 0, 0, 0, 0};
    s.uses = {5, 5, 5, 5, 5};
    u = adaptive_update(s);
    CHECK(std::abs(u.probabilities[0] - 0.6) < 1e-12);
    for (std::size_t k = 1; k < 5; ++k) CHECK(std::abs(u.probabilities[k] - 0.1) < 1e-12);

    // Scores (26/27, 1/27 x4) normalise to (0.8667, 0.0333 x4); the floor
    // lifts the four small entries to 0.05.
    s.successes = {25, 0, 0, 0, 0};
    s.uses = {25, 25, 25, 25, 25};
    u = adaptive_update(s);
    CHECK(std::abs(u.probabilities[0] - 0.8) < 1e-12);
    for (std::size_t k = 1; k < 5; ++k) CHECK(std::abs(u.probabilities[k] - 0.05) < 1e-12);
}

TEST_CASE("probability floor keeps the simplex") {
    RngStream rng(44);
    for (int t = 0; t < 5000; ++t) {
        Vector p(5);
        for (auto& v : p) v = std::pow(rng.next_unit(), 6);
        const double total = std::accumulate(p.begin(), p.end(), 0.0);
        for (auto& v : p) v /= total;
        const auto f = apply_probability_floor(p, 0.05);
        REQUIRE(std::abs(std::accumulate(f.begin(), f.end(), 0.0) - 1.0) < 1e-12);
        for (double v : f) REQUIRE(v >= 0.05 - 1e-15);
    }
    const auto z = apply_probability_floor(Vector{1.0, 0.0, 0.0}, 0.1);
    CHECK(z[0] == doctest::Approx(0.8));
    CHECK(z[1] == doctest::Approx(0.1));
}

}
