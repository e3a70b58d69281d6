#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>
#include <set>

#include "habitat/rng.hpp"
#include "habitat/taxonomy.hpp"
#include "support/oracles.hpp"

using namespace habitat;

namespace {

const std::string kDataDir = HABITAT_DATA_DIR;

TransitionRuleSet default_rules(int num_classes = 23) {
    return TransitionRuleSet::from_csv(kDataDir + "/transition_categories.csv",
                                       kDataDir + "/transition_rules.csv", num_classes);
}

TransitionRuleSet tiny_rules(int num_classes) {
    std::vector<ClassInfo> cats{{0, "No change", {}}, {1, "Clearcut", {}},
                                {2, "Other Transition", {}}};
    std::map<std::pair<int, int>, int> rules{{{0, 1}, 1}};
    return TransitionRuleSet(ClassScheme(std::move(cats)), std::move(rules), num_classes);
}

} // namespace

TEST_CASE("shipped 23-class scheme loads with disambiguated duplicate names") {
    const ClassScheme scheme = ClassScheme::from_csv(kDataDir + "/classes_23.csv");
    CHECK(scheme.size() == 23);
    CHECK(scheme.info(0).name == "Rock");
    REQUIRE(scheme.info(0).area_ha.has_value());
    CHECK(*scheme.info(0).area_ha == doctest::Approx(2632.8));
    // The table lists "Young coniferous (growth, thicket)" twice.
    CHECK(scheme.info(11).name == "Young coniferous (growth, thicket)");
    CHECK(scheme.info(17).name == "Young coniferous (growth, thicket) #17");
    std::set<std::string> names;
    for (const ClassInfo& info : scheme.classes()) names.insert(info.name);
    CHECK(names.size() == 23);
}

TEST_CASE("scheme rejects non-contiguous ids") {
    CHECK_THROWS(ClassScheme({{0, "a", {}}, {2, "b", {}}}));
    CHECK_THROWS(ClassScheme({{1, "a", {}}}));
}

TEST_CASE("remap_labels") {
    GeoGrid grid(3, 2, 1.0);
    Band& band = grid.add_band(BandKind::Categorical, Tag::Label);
    band.nodata = 255.0;
    band.values = {5, 7, 5, 7, 255, 5};

    SUBCASE("identity table") {
        RemapTable table;
        table.entries = {{5, 5}, {7, 7}};
        const GeoGrid out = remap_labels(grid, table);
        CHECK(out.bands[0].values == band.values);
    }
    SUBCASE("merge two classes") {
        RemapTable table;
        table.entries = {{5, 2}, {7, 2}};
        const GeoGrid out = remap_labels(grid, table);
        CHECK(out.bands[0].values == std::vector<double>{2, 2, 2, 2, 255, 2});
    }
    SUBCASE("unmapped value under default=error names value and pixel") {
        band.values[3] = 99;
        RemapTable table;
        table.entries = {{5, 2}, {7, 2}};
        CHECK_THROWS_WITH_AS(remap_labels(grid, table),
                             doctest::Contains("unmapped class value 99"), std::runtime_error);
        CHECK_THROWS_WITH_AS(remap_labels(grid, table), doctest::Contains("pixel index 3"),
                             std::runtime_error);
    }
    SUBCASE("pass-through and fixed defaults") {
        band.values[3] = 99;
        RemapTable table;
        table.entries = {{5, 2}};
        table.default_policy = RemapDefault::PassThrough;
        CHECK(remap_labels(grid, table).bands[0].values ==
              std::vector<double>{2, 7, 2, 99, 255, 2});
        table.default_policy = RemapDefault::Fixed;
        table.fixed_target = 0;
        CHECK(remap_labels(grid, table).bands[0].values ==
              std::vector<double>{2, 0, 2, 0, 255, 2});
    }
    SUBCASE("identity remap asset covers the 23-class scheme") {
        const RemapTable table = RemapTable::from_csv(kDataDir + "/remap_identity.csv");
        for (int c = 0; c < 23; ++c) CHECK(table.apply(c, 0) == c);
    }
}

TEST_CASE("map_transition_pair: identity, rules, fallback, validation") {
    const TransitionRuleSet rules = tiny_rules(4);
    for (int k = 0; k < 4; ++k) CHECK(rules.map_pair(k, k) == rules.no_change_id());
    CHECK(rules.map_pair(0, 1) == 1);                    // explicit rule
    CHECK(rules.map_pair(1, 0) == rules.fallback_id());  // unlisted pair
    CHECK(rules.map_pair(2, 3) == rules.fallback_id());
    CHECK_THROWS_WITH_AS(rules.map_pair(-1, 0), doctest::Contains("invalid class id"),
                         std::runtime_error);
    CHECK_THROWS_WITH_AS(rules.map_pair(0, 4), doctest::Contains("invalid class id"),
                         std::runtime_error);
}

TEST_CASE("rule set refuses identity rules that are not no-change") {
    std::vector<ClassInfo> cats{{0, "No change", {}}, {1, "Clearcut", {}},
                                {2, "Other Transition", {}}};
    std::map<std::pair<int, int>, int> bad{{{1, 1}, 1}};
    CHECK_THROWS_WITH_AS(TransitionRuleSet(ClassScheme(std::move(cats)), std::move(bad), 3),
                         doctest::Contains("must map to 'No change'"), std::runtime_error);
}

TEST_CASE("shipped transition rule assets load and honor table semantics") {
    const TransitionRuleSet rules = default_rules();
    CHECK(rules.categories().size() == 9);
    CHECK(rules.no_change_id() == 0);
    CHECK(rules.fallback_id() == 8);
    CHECK(rules.categories().info(7).name == "Clearcut");
    // Forest to clearcut-areas maps to the Clearcut category.
    CHECK(rules.map_pair(2, 13) == 7);
    // Canopy-cover loss within mature conifer forest.
    CHECK(rules.map_pair(3, 2) == 1);
    // Unlisted pair lands in Other Transition.
    CHECK(rules.map_pair(0, 21) == 8);
}

TEST_CASE("build_transition_map") {
    const TransitionRuleSet rules = tiny_rules(4);
    GeoGrid t1 = oracle::random_labels(8, 8, 4, 21);

    SUBCASE("identical epochs give all no-change") {
        const GeoGrid out = build_transition_map(t1, t1, rules);
        for (double v : out.bands[0].values) CHECK(v == rules.no_change_id());
    }
    SUBCASE("single differing pixel under an explicit rule") {
        GeoGrid t2 = t1;
        t1.bands[0].values[12] = 0;
        t2.bands[0].values[12] = 1;
        const GeoGrid out = build_transition_map(t1, t2, rules);
        int clearcut_count = 0;
        for (double v : out.bands[0].values) {
            if (v == 1.0) ++clearcut_count;
        }
        CHECK(clearcut_count == 1);
        CHECK(out.bands[0].values[12] == 1.0);
    }
    SUBCASE("nodata in either epoch blanks the pixel") {
        GeoGrid t2 = t1;
        t1.bands[0].values[3] = 255;
        t2.bands[0].values[9] = 255;
        const GeoGrid out = build_transition_map(t1, t2, rules);
        CHECK(out.bands[0].is_nodata(out.bands[0].values[3]));
        CHECK(out.bands[0].is_nodata(out.bands[0].values[9]));
        CHECK_FALSE(out.bands[0].is_nodata(out.bands[0].values[0]));
    }
    SUBCASE("misaligned epochs refused") {
        GeoGrid t2 = t1;
        t2.origin_y += 0.1;
        CHECK_THROWS_WITH_AS(build_transition_map(t1, t2, rules),
                             doctest::Contains("not co-registered"), std::runtime_error);
    }
}

TEST_CASE("binarize_change") {
    const TransitionRuleSet rules = tiny_rules(4);
    GeoGrid transition(4, 2, 1.0);
    Band& band = transition.add_band(BandKind::Categorical, Tag::Label);
    band.nodata = 255.0;

    SUBCASE("all no-change becomes zero") {
        band.values.assign(band.values.size(), 0.0);
        const GeoGrid out = binarize_change(transition, rules);
        for (double v : out.bands[0].values) CHECK(v == 0.0);
    }
    SUBCASE("all clearcut becomes one") {
        band.values.assign(band.values.size(), 1.0);
        const GeoGrid out = binarize_change(transition, rules);
        for (double v : out.bands[0].values) CHECK(v == 1.0);
    }
    SUBCASE("mixed grid binarizes per definition and keeps nodata") {
        band.values = {0, 1, 2, 0, 255, 2, 0, 1};
        const GeoGrid out = binarize_change(transition, rules);
        CHECK(out.bands[0].values == std::vector<double>{0, 1, 1, 0, 255, 1, 0, 1});
    }
    SUBCASE("category outside the set is refused") {
        band.values.assign(band.values.size(), 7.0);
        CHECK_THROWS_WITH_AS(binarize_change(transition, rules),
                             doctest::Contains("outside category set"), std::runtime_error);
    }
}

TEST_CASE("binarization is invariant to relabelings that keep the change set") {
    // Any t2 relabeling that flips the same pixel set produces the same
    // binary map, whatever categories the rules assign.
    const TransitionRuleSet rules = default_rules(23);
    std::mt19937_64 gen(31);
    const GeoGrid t1 = oracle::random_labels(16, 16, 23, 99);
    GeoGrid t2a = t1, t2b = t1;
    for (std::size_t i = 0; i < t1.bands[0].values.size(); ++i) {
        if (rng::bounded(gen, 10) == 0) {
            const int orig = static_cast<int>(t1.bands[0].values[i]);
            t2a.bands[0].values[i] = (orig + 1) % 23;
            t2b.bands[0].values[i] = (orig + 7) % 23;
        }
    }
    const GeoGrid bin_a = binarize_change(build_transition_map(t1, t2a, rules), rules);
    const GeoGrid bin_b = binarize_change(build_transition_map(t1, t2b, rules), rules);
    CHECK(bin_a.bands[0].values == bin_b.bands[0].values);
}

TEST_CASE("remap then transition equals transition under the composed rules") {
    // Brute-force equivalence on small random grids: remapping both epochs
    // through M and applying rules R equals applying the composed table
    // R'(a,b) = R(M(a), M(b)) to the original grids.
    RemapTable merge_map;
    merge_map.entries = {{0, 0}, {1, 0}, {2, 1}, {3, 2}};
    const TransitionRuleSet rules = tiny_rules(3);

    std::mt19937_64 gen(55);
    for (int round = 0; round < 20; ++round) {
        const GeoGrid t1 = oracle::random_labels(6, 6, 4, gen());
        const GeoGrid t2 = oracle::random_labels(6, 6, 4, gen());
        const GeoGrid mapped =
            build_transition_map(remap_labels(t1, merge_map), remap_labels(t2, merge_map), rules);
        for (std::size_t i = 0; i < mapped.bands[0].values.size(); ++i) {
            const int a = merge_map.apply(static_cast<int>(t1.bands[0].values[i]), i);
            const int b = merge_map.apply(static_cast<int>(t2.bands[0].values[i]), i);
            CHECK(mapped.bands[0].values[i] == static_cast<double>(rules.map_pair(a, b)));
        }
    }
}

TEST_CASE("area_stats") {
    SUBCASE("single-class grid is 100 percent") {
        const ClassScheme scheme({{0, "a", {}}, {1, "b", {}}});
        GeoGrid grid(10, 10, 10.0);
        grid.add_band(BandKind::Categorical, Tag::Label, 1.0);
        const auto stats = area_stats(grid, scheme);
        CHECK(stats[0].share_percent == 0.0);
        CHECK(stats[1].share_percent == 100.0);
        // 100 pixels x (10 m)^2 = 10000 m^2 = 1 ha
        CHECK(stats[1].area_ha == doctest::Approx(1.0));
    }
    SUBCASE("shares sum to 100 over non-nodata pixels") {
        const ClassScheme scheme({{0, "a", {}}, {1, "b", {}}, {2, "c", {}}});
        std::mt19937_64 gen(8);
        for (int round = 0; round < 10; ++round) {
            GeoGrid grid = oracle::random_labels(17, 13, 3, gen());
            grid.bands[0].values[0] = 255;  // nodata
            grid.bands[0].values[5] = 255;
            double total = 0;
            for (const AreaStat& s : area_stats(grid, scheme)) total += s.share_percent;
            CHECK(total == doctest::Approx(100.0).epsilon(1e-11));
        }
    }
    SUBCASE("label outside scheme refused") {
        const ClassScheme scheme({{0, "a", {}}});
        GeoGrid grid(2, 2, 1.0);
        grid.add_band(BandKind::Categorical, Tag::Label, 3.0);
        CHECK_THROWS_WITH_AS(area_stats(grid, scheme), doctest::Contains("outside scheme"),
                             std::runtime_error);
    }
}
