#include <doctest.h>

#include <filesystem>

#include "semicirc/fixtures.hpp"

using namespace semicirc;

TEST_CASE("fixture families have their defining shapes") {
    auto nat = make_semiring("nat");

    auto forest = fixture_structure("forest", 7, 1, nat);
    CHECK(forest.n() == 7);
    CHECK(forest.tuples("E").size() <= 6);

    auto grid = fixture_structure("grid", 30, 2, nat); // 5x5
    CHECK(grid.n() == 25);
    CHECK(grid.tuples("E").size() == 2 * 5 * 4);

    auto bd = fixture_structure("bounded-degree", 40, 3, nat);
    std::vector<int> deg(bd.n(), 0);
    for (const auto& t : bd.tuples("E")) {
        deg[t[0]]++;
        deg[t[1]]++;
    }
    for (int d : deg) CHECK(d <= 3);

    auto dg = fixture_structure("2-degenerate", 40, 4, nat);
    std::vector<int> back(dg.n(), 0);
    for (const auto& t : dg.tuples("E")) back[std::max(t[0], t[1])]++;
    for (int b : back) CHECK(b <= 2);

    CHECK_THROWS_WITH_AS(fixture_structure("moebius", 5, 1, nat),
                         doctest::Contains("SyntaxError"), Error);

    // same seed, same structure
    auto again = fixture_structure("2-degenerate", 40, 4, nat);
    CHECK(again.tuples("E") == dg.tuples("E"));
    for (const auto& [key, val] : dg.weight_entries())
        CHECK(nat->eq(again.weight(key.first, key.second), val));
}

TEST_CASE("fixtures round-trip through the flat-file loader") {
    auto nat = make_semiring("nat");
    auto s = fixture_structure("2-degenerate", 20, 7, nat);
    auto dir = std::filesystem::temp_directory_path() / "semicirc_fixture_test";
    write_fixture(s, dir.string());
    auto back = load_structure(s.sig, dir.string(), nat);
    CHECK(back.n() == s.n());
    CHECK(back.tuples("E").size() == s.tuples("E").size());
    for (const auto& t : s.tuples("E")) {
        CHECK(back.has_tuple("E", t));
        CHECK(nat->eq(back.weight("v", t), s.weight("v", t)));
    }
    for (int i = 0; i < s.n(); i++) CHECK(nat->eq(back.weight("w", {i}), s.weight("w", {i})));
    std::filesystem::remove_all(dir);
}
