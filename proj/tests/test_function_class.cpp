#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <filesystem>

#include "abstain/function_class.hpp"

using namespace abstain;

TEST_CASE("finite evaluation returns the table value") {
    ClassPtr cls = FunctionClass::make_finite({{0.3, 0.3}});
    const RegressionFunction f = cls->member(0);
    CHECK(evaluate(f, Point{0.1, 0}) == 0.3);
    CHECK(evaluate(f, Point{0.9, 1}) == 0.3);
    SUBCASE("re-evaluation is bitwise identical") {
        const double a = evaluate(f, Point{0.1, 0});
        const double b = evaluate(f, Point{0.1, 0});
        CHECK(std::memcmp(&a, &b, sizeof a) == 0);
    }
    SUBCASE("points outside the domain are rejected") {
        CHECK_THROWS_AS(evaluate(f, Point{0.5, 7}), ConfigError);
    }
}

TEST_CASE("linear evaluation clamps and counts clamp events") {
    ClassPtr cls = FunctionClass::make_linear({{1.0, 1.0}}, 2.0);
    SUBCASE("inner product inside the range leaves the counter alone") {
        const RegressionFunction f = cls->linear_member({0.5, 0.5});
        CHECK(evaluate(f, Point{0.0, 0}) == 1.0);  // exactly 1, no clamp event
        CHECK(cls->clamp_events() == 0);
    }
    SUBCASE("values above 1 clamp and are counted") {
        const RegressionFunction f = cls->linear_member({0.8, 0.8});
        CHECK(evaluate(f, Point{0.0, 0}) == 1.0);
        CHECK(cls->clamp_events() == 1);
    }
    SUBCASE("dimension mismatches are rejected") {
        CHECK_THROWS_AS((void)cls->linear_member({0.1}), ConfigError);
    }
}

TEST_CASE("induced label is sgn(2 f(x) - 1) with ties sent to +1") {
    ClassPtr cls = FunctionClass::make_finite({{0.7}, {0.2}, {0.5}});
    CHECK(induced_label(cls->member(0), Point{0, 0}) == +1);
    CHECK(induced_label(cls->member(1), Point{0, 0}) == -1);
    CHECK(induced_label(cls->member(2), Point{0, 0}) == +1);
}

TEST_CASE("induced label agrees with the sign of the evaluation everywhere") {
    Rng rng(3);
    std::vector<std::vector<double>> table;
    for (int f = 0; f < 30; ++f) {
        std::vector<double> row;
        for (int p = 0; p < 6; ++p) row.push_back(rng.next_double());
        table.push_back(row);
    }
    ClassPtr cls = FunctionClass::make_finite(table);
    for (int f = 0; f < cls->size(); ++f) {
        for (int p = 0; p < cls->num_points(); ++p) {
            const double v = evaluate(cls->member(f), Point{0, p});
            if (v == 0.5) continue;
            CHECK(induced_label(cls->member(f), Point{0, p}) == (v > 0.5 ? +1 : -1));
        }
    }
}

TEST_CASE("class construction validates its invariants") {
    CHECK_THROWS_AS(FunctionClass::make_finite({}), ConfigError);
    CHECK_THROWS_AS(FunctionClass::make_finite({{0.2}, {1.4}}), ConfigError);
    CHECK_THROWS_AS(FunctionClass::make_finite({{0.2, 0.3}, {0.4}}), ConfigError);
    CHECK_THROWS_AS(FunctionClass::make_linear({{1.0}}, 0.0), ConfigError);
    CHECK(FunctionClass::make_finite({{0.5}})->complexity() > 0.0);
    CHECK(FunctionClass::make_linear({{1.0, 0.0}}, 1.0)->complexity() == 3.0);
}

TEST_CASE("finite classes round-trip through the plain-text table format") {
    ClassPtr cls = FunctionClass::make_finite({{0.1, 0.9, 0.5}, {0.25, 0.125, 1.0}});
    const std::string path = (std::filesystem::temp_directory_path() / "abstain_class.txt").string();
    FILE* f = std::fopen(path.c_str(), "w");
    std::fputs(finite_class_to_text(*cls).c_str(), f);
    std::fclose(f);
    ClassPtr loaded = load_finite_class(path);
    REQUIRE(loaded->size() == cls->size());
    REQUIRE(loaded->num_points() == cls->num_points());
    for (int i = 0; i < cls->size(); ++i)
        for (int p = 0; p < cls->num_points(); ++p)
            CHECK(loaded->value(i, p) == cls->value(i, p));
    std::filesystem::remove(path);
}

TEST_CASE("domain masses must sum to one") {
    Domain d;
    d.cells = {Cell{0.5, 0.0, 0.5}, Cell{0.5, 0.5, 1.0}};
    CHECK_NOTHROW(d.validate());
    d.cells[0].mass = 0.6;
    CHECK_THROWS_AS(d.validate(), ConfigError);
}
