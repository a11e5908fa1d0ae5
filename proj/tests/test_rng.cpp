#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "boxde/rng.hpp"

using namespace boxde;

TEST_SUITE("rng") {

TEST_CASE("uniform is a linear map of the unit draw") {
    ScriptedUnits u{0.25};
    CHECK(draw(u, UniformDist{-5, 5}) == -2.5);
    CHECK(u.consumed() == 1);
}

TEST_CASE("invalid parameters") {
    ScriptedUnits u{0.5};
    CHECK_THROWS_WITH(draw(u, UniformDist{1, 1}), "invalid distribution parameters");
    CHECK_THROWS_WITH(draw(u, NormalDist{0, 0}), "invalid distribution parameters");
    CHECK_THROWS_WITH(draw(u, CauchyDist{0, -1}), "invalid distribution parameters");
    CHECK_THROWS_WITH(draw(u, BetaDist{0, 1}), "invalid distribution parameters");
    CHECK_THROWS_WITH(draw(u, BetaDist{1, -2}), "invalid distribution parameters");
}

TEST_CASE("units lie in the open interval") {
    RngStream rng(3);
    for (int i = 0; i < 100000; ++i) {
        const double u = rng.next_unit();
        REQUIRE(u > 0.0);
        REQUIRE(u < 1.0);
    }
}

TEST_CASE("streams are deterministic and split independently") {
    RngStream a(42), b(42);
    for (int i = 0; i < 100; ++i) CHECK(a.next_u64() == b.next_u64());

    const RngStream root(42);
    auto c1 = root.split("variation");
    auto c2 = root.split("variation");
    auto d = root.split("correction");
    CHECK(c1.path() == c2.path());
    bool differs = false;
    for (int i = 0; i < 10; ++i) {
        const auto x = c1.next_u64();
        CHECK(x == c2.next_u64());
        differs = differs || x != d.next_u64();
    }
    CHECK(differs);
    CHECK(RngStream(1).next_u64() != RngStream(2).next_u64());
}

TEST_CASE("below stays in range") {
    RngStream rng(5);
    std::vector<int> hist(7, 0);
    for (int i = 0; i < 70000; ++i) ++hist[rng.below(7)];
    for (int h : hist) CHECK(std::abs(h - 10000) < 500);
}

TEST_CASE("beta(1,1) matches uniform by KS statistic") {
    RngStream rng(2024);
    const int n = 100000;
    std::vector<double> xs(n);
    for (auto& x : xs) x = draw(rng, BetaDist{1, 1});
    std::sort(xs.begin(), xs.end());
    double ks = 0.0;
    for (int i = 0; i < n; ++i) {
        ks = std::max(ks, std::abs((i + 1.0) / n - xs[i]));
        ks = std::max(ks, std::abs(xs[i] - static_cast<double>(i) / n));
    }
    CHECK(ks < 0.01);
}

TEST_CASE("cauchy median equals location") {
    RngStream rng(99);
    const int n = 100000;
    std::vector<double> xs(n);
    for (auto& x : xs) x = draw(rng, CauchyDist{0.5, 0.1});
    std::nth_element(xs.begin(), xs.begin() + n / 2, xs.end());
    CHECK(std::abs(xs[n / 2] - 0.5) < 0.01);
}

TEST_CASE("normal moments") {
    RngStream rng(17);
    const int n = 100000;
    double s = 0, s2 = 0;
    for (int i = 0; i < n; ++i) {
        const double x = draw(rng, NormalDist{2.0, 0.5});
        s += x;
        s2 += x * x;
    }
    const double mean = s / n;
    CHECK(std::abs(mean - 2.0) < 0.01);
    CHECK(std::abs(s2 / n - mean * mean - 0.25) < 0.01);
}

TEST_CASE("beta moments") {
    RngStream rng(18);
    const double a = 2.5, b = 0.7;
    const int n = 100000;
    double s = 0, s2 = 0;
    for (int i = 0; i < n; ++i) {
        const double x = draw(rng, BetaDist{a, b});
        REQUIRE(x >= 0.0);
        REQUIRE(x <= 1.0);
        s += x;
        s2 += x * x;
    }
    const double mean = s / n;
    const double var = s2 / n - mean * mean;
    CHECK(std::abs(mean - a / (a + b)) < 0.01);
    CHECK(std::abs(var - a * b / ((a + b) * (a + b) * (a + b + 1))) < 0.005);
}

TEST_CASE("scripted units cycle") {
    ScriptedUnits u{0.1, 0.2};
    CHECK(u.next_unit() == 0.1);
    CHECK(u.next_unit() == 0.2);
    CHECK(u.next_unit() == 0.1);
    CHECK(u.consumed() == 3);
}

}
