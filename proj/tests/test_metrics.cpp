#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <random>

#include "habitat/metrics.hpp"
#include "habitat/rng.hpp"
#include "support/oracles.hpp"

using namespace habitat;
namespace fs = std::filesystem;

namespace {

std::vector<std::optional<double>> defined(const std::vector<double>& v) {
    return {v.begin(), v.end()};
}

} // namespace

TEST_CASE("accumulate counts per-pixel agreement") {
    SUBCASE("perfect prediction on a single-class grid") {
        GeoGrid ref(10, 10, 1.0);
        ref.add_band(BandKind::Categorical, Tag::Label, 3.0);
        const ConfusionMatrix c = accumulate(ref, ref, 5);
        CHECK(c.total() == 100);
        CHECK(c.at(3, 3) == 100);
        CHECK(c.at(0, 0) == 0);
    }
    SUBCASE("2x2 worked example") {
        GeoGrid ref(2, 2, 1.0);
        ref.add_band(BandKind::Categorical, Tag::Label);
        ref.bands[0].values = {0, 0, 1, 1};
        GeoGrid pred = ref;
        pred.bands[0].values = {0, 1, 1, 1};
        const ConfusionMatrix c = accumulate(pred, ref, 2);
        // counts[r][p] by brute force: [[1,1],[0,2]]
        CHECK(c.at(0, 0) == 1);
        CHECK(c.at(0, 1) == 1);
        CHECK(c.at(1, 0) == 0);
        CHECK(c.at(1, 1) == 2);
    }
    SUBCASE("mask excludes exactly its nodata pixels") {
        const GeoGrid ref = oracle::random_labels(10, 10, 4, 5);
        const GeoGrid pred = oracle::random_labels(10, 10, 4, 6);
        GeoGrid mask(10, 10, 1.0);
        Band& mb = mask.add_band(BandKind::Categorical, Tag::Label, 1.0);
        mb.nodata = 255.0;
        for (int i = 0; i < 50; ++i) mb.values[i * 2] = 255.0;  // half the pixels
        const ConfusionMatrix whole = accumulate(pred, ref, 4);
        const ConfusionMatrix half = accumulate(pred, ref, 4, &mask);
        CHECK(whole.total() == 100);
        CHECK(half.total() == 50);
    }
    SUBCASE("nodata on either side is excluded") {
        GeoGrid ref = oracle::random_labels(4, 4, 3, 7);
        GeoGrid pred = oracle::random_labels(4, 4, 3, 8);
        ref.bands[0].values[0] = 255;
        pred.bands[0].values[1] = 255;
        CHECK(accumulate(pred, ref, 3).total() == 14);
    }
    SUBCASE("label outside the scheme is refused") {
        GeoGrid ref(2, 2, 1.0);
        ref.add_band(BandKind::Categorical, Tag::Label, 7.0);
        CHECK_THROWS_WITH_AS(accumulate(ref, ref, 3), doctest::Contains("outside scheme"),
                             std::runtime_error);
    }
    SUBCASE("misaligned grids are refused") {
        GeoGrid ref = oracle::random_labels(4, 4, 3, 9);
        GeoGrid pred = ref;
        pred.pixel_size = 2.0;
        CHECK_THROWS_WITH_AS(accumulate(pred, ref, 3),
                             doctest::Contains("not co-registered"), std::runtime_error);
    }
}

TEST_CASE("merge is an abelian monoid and matches whole-image accumulation") {
    const GeoGrid ref = oracle::random_labels(32, 32, 5, 11);
    const GeoGrid pred = oracle::random_labels(32, 32, 5, 12);
    const ConfusionMatrix whole = accumulate(pred, ref, 5);

    SUBCASE("zero matrix is the identity") {
        const ConfusionMatrix merged = merge(whole, ConfusionMatrix(5));
        for (int r = 0; r < 5; ++r)
            for (int p = 0; p < 5; ++p) CHECK(merged.at(r, p) == whole.at(r, p));
    }
    SUBCASE("commutativity") {
        const ConfusionMatrix a = accumulate(pred, ref, 5);
        ConfusionMatrix b(5);
        b.add(0, 1, 3);
        b.add(4, 4, 9);
        const ConfusionMatrix ab = merge(a, b);
        const ConfusionMatrix ba = merge(b, a);
        for (int r = 0; r < 5; ++r)
            for (int p = 0; p < 5; ++p) CHECK(ab.at(r, p) == ba.at(r, p));
    }
    SUBCASE("tile-wise matrices merge to the whole-image matrix") {
        // Split rows into 4 shards accumulated separately.
        ConfusionMatrix merged(5);
        for (int shard = 0; shard < 4; ++shard) {
            GeoGrid ref_shard = ref;
            GeoGrid pred_shard = pred;
            for (int r = 0; r < 32; ++r) {
                if (r % 4 == shard) continue;
                for (int c = 0; c < 32; ++c) {
                    ref_shard.bands[0].values[ref.index(r, c)] = 255;
                    pred_shard.bands[0].values[ref.index(r, c)] = 255;
                }
            }
            merged.merge(accumulate(pred_shard, ref_shard, 5));
        }
        for (int r = 0; r < 5; ++r)
            for (int p = 0; p < 5; ++p) CHECK(merged.at(r, p) == whole.at(r, p));
    }
    SUBCASE("class-count mismatch is refused") {
        CHECK_THROWS(merge(whole, ConfusionMatrix(4)));
    }
}

TEST_CASE("per-class metric formulas") {
    SUBCASE("perfect diagonal -> all 1.0") {
        ConfusionMatrix c(3);
        c.add(0, 0, 10);
        c.add(1, 1, 20);
        c.add(2, 2, 30);
        for (const auto& v : per_class_iou(c)) CHECK(*v == 1.0);
        for (const auto& v : per_class_f1(c)) CHECK(*v == 1.0);
        for (const auto& v : per_class_recall(c)) CHECK(*v == 1.0);
        CHECK(overall_accuracy(c) == 1.0);
    }
    SUBCASE("TP=50 FP=25 FN=25 -> IoU 0.5") {
        ConfusionMatrix c(2);
        c.add(0, 0, 50);
        c.add(1, 0, 25);  // FP for class 0
        c.add(0, 1, 25);  // FN for class 0
        CHECK(*per_class_iou(c)[0] == 0.5);
    }
    SUBCASE("a matrix built for IoU 0.80 reports exactly 0.80") {
        ConfusionMatrix c(2);
        c.add(0, 0, 80);
        c.add(0, 1, 10);
        c.add(1, 0, 10);
        c.add(1, 1, 900);
        CHECK(*per_class_iou(c)[0] == doctest::Approx(0.8).epsilon(1e-12));
    }
    SUBCASE("precision 1.0, recall 0.5 -> F1 2/3") {
        ConfusionMatrix c(2);
        c.add(0, 0, 5);
        c.add(0, 1, 5);  // half the reference missed, nothing falsely claimed
        CHECK(*per_class_precision(c)[0] == 1.0);
        CHECK(*per_class_recall(c)[0] == 0.5);
        CHECK(*per_class_f1(c)[0] == doctest::Approx(2.0 / 3.0).epsilon(1e-15));
    }
    SUBCASE("TP=3 FN=1 -> recall 0.75") {
        ConfusionMatrix c(2);
        c.add(0, 0, 3);
        c.add(0, 1, 1);
        CHECK(*per_class_recall(c)[0] == 0.75);
    }
    SUBCASE("uniform 2x2 matrix -> OA 0.5") {
        ConfusionMatrix c(2);
        for (int r = 0; r < 2; ++r)
            for (int p = 0; p < 2; ++p) c.add(r, p, 7);
        CHECK(overall_accuracy(c) == 0.5);
    }
    SUBCASE("empty matrix refused") {
        CHECK_THROWS(overall_accuracy(ConfusionMatrix(2)));
    }
}

TEST_CASE("metrics equal the brute-force per-pixel oracle exactly") {
    std::mt19937_64 gen(100);
    for (int round = 0; round < 30; ++round) {
        const int w = 4 + static_cast<int>(rng::bounded(gen, 61));
        const int h = 4 + static_cast<int>(rng::bounded(gen, 61));
        const int k = 2 + static_cast<int>(rng::bounded(gen, 8));
        const GeoGrid ref = oracle::random_labels(w, h, k, gen());
        const GeoGrid pred = oracle::random_labels(w, h, k, gen());
        const ConfusionMatrix c = accumulate(pred, ref, k);
        const auto oracle_m =
            oracle::brute_force_metrics(oracle::band_as_ints(pred), oracle::band_as_ints(ref), k);

        CHECK(overall_accuracy(c) == oracle_m.overall_accuracy);
        const auto iou = per_class_iou(c);
        const auto f1 = per_class_f1(c);
        const auto recall = per_class_recall(c);
        const auto precision = per_class_precision(c);
        for (int cls = 0; cls < k; ++cls) {
            CHECK(iou[cls] == oracle_m.iou[cls]);
            CHECK(f1[cls] == oracle_m.f1[cls]);
            CHECK(recall[cls] == oracle_m.recall[cls]);
            CHECK(precision[cls] == oracle_m.precision[cls]);
            if (iou[cls]) {
                // Algebraic identity, 1e-12 per class.
                CHECK(std::abs(*f1[cls] - 2.0 * *iou[cls] / (1.0 + *iou[cls])) < 1e-12);
                CHECK(*iou[cls] <= *f1[cls]);
                CHECK(*f1[cls] <= 1.0);
            }
        }
    }
}

TEST_CASE("macro_average") {
    SUBCASE("table 6 macro rows (paper arithmetic)") {
        // Clay v1.0 per-class columns, in the paper's row order.
        const std::vector<double> oa{0.57, 0.56, 0.36, 0.66, 0.41, 0.72, 0.25, 0.33, 0.74};
        const std::vector<double> iou{0.56, 0.1, 0.23, 0.4, 0.11, 0.02, 0.15, 0.01, 0.1};
        const std::vector<double> f1{0.72, 0.18, 0.38, 0.57, 0.2, 0.04, 0.25, 0.02, 0.18};
        CHECK(macro_average(defined(oa)) == doctest::Approx(0.51).epsilon(0.01));
        CHECK(std::abs(macro_average(defined(oa)) - 0.51) < 0.005);
        CHECK(std::abs(macro_average(defined(iou)) - 0.19) < 0.005);
        CHECK(std::abs(macro_average(defined(f1)) - 0.28) < 0.005);
    }
    SUBCASE("undefined entries are excluded by default, zero under the flag") {
        const std::vector<std::optional<double>> values{0.5, std::nullopt, 1.0};
        CHECK(macro_average(values) == doctest::Approx(0.75));
        CHECK(macro_average(values, UndefinedPolicy::Zero) == doctest::Approx(0.5));
    }
    SUBCASE("permutation invariance") {
        const std::vector<std::optional<double>> a{0.1, 0.4, 0.9};
        const std::vector<std::optional<double>> b{0.9, 0.1, 0.4};
        CHECK(macro_average(a) == macro_average(b));
    }
    SUBCASE("all undefined refused") {
        CHECK_THROWS(macro_average({std::nullopt, std::nullopt}));
    }
}

TEST_CASE("overall accuracy is invariant under a simultaneous class permutation") {
    const GeoGrid ref = oracle::random_labels(24, 24, 5, 41);
    const GeoGrid pred = oracle::random_labels(24, 24, 5, 42);
    const int perm[5] = {3, 0, 4, 2, 1};
    GeoGrid ref_p = ref, pred_p = pred;
    for (std::size_t i = 0; i < ref.pixel_count(); ++i) {
        ref_p.bands[0].values[i] = perm[static_cast<int>(ref.bands[0].values[i])];
        pred_p.bands[0].values[i] = perm[static_cast<int>(pred.bands[0].values[i])];
    }
    CHECK(overall_accuracy(accumulate(pred, ref, 5)) ==
          overall_accuracy(accumulate(pred_p, ref_p, 5)));
}

TEST_CASE("report assembles per-class rows, macros and files") {
    const ClassScheme scheme({{0, "No change", {}}, {1, "Clearcut", {}}, {2, "Unseen", {}}});
    ConfusionMatrix c(3);
    c.add(0, 0, 90);
    c.add(0, 1, 10);
    c.add(1, 1, 15);
    c.add(1, 0, 5);
    // class 2 never appears: zero union -> undefined, excluded from macros.
    const MetricReport rep = report(c, scheme);
    CHECK(rep.total_pixels == 120);
    CHECK(rep.overall_accuracy == doctest::Approx(105.0 / 120.0));
    REQUIRE(rep.per_class.size() == 3);
    CHECK_FALSE(rep.per_class[2].iou.has_value());
    CHECK(rep.per_class[2].support == 0);
    CHECK(rep.macro_iou ==
          doctest::Approx((*rep.per_class[0].iou + *rep.per_class[1].iou) / 2.0));
    CHECK(rep.per_class[0].frequency_percent == doctest::Approx(100.0 * 100.0 / 120.0));

    const fs::path dir = fs::temp_directory_path() / "habitat_test_metrics";
    fs::create_directories(dir);
    write_report_json({{"multiclass", rep}}, (dir / "report.json").string());
    write_report_csv({{"multiclass", rep}}, (dir / "report.csv").string());
    c.to_csv((dir / "confusion.csv").string());

    // The CSV marks the undefined row and the JSON uses null.
    std::ifstream csv_in(dir / "report.csv");
    std::string csv_text((std::istreambuf_iterator<char>(csv_in)),
                         std::istreambuf_iterator<char>());
    CHECK(csv_text.find("undefined") != std::string::npos);
    CHECK(csv_text.find("No change") != std::string::npos);
    std::ifstream json_in(dir / "report.json");
    std::string json_text((std::istreambuf_iterator<char>(json_in)),
                          std::istreambuf_iterator<char>());
    CHECK(json_text.find("\"iou\": null") != std::string::npos);

    // Confusion CSV round-trips.
    const ConfusionMatrix back = ConfusionMatrix::from_csv((dir / "confusion.csv").string());
    for (int r = 0; r < 3; ++r)
        for (int p = 0; p < 3; ++p) CHECK(back.at(r, p) == c.at(r, p));
}

TEST_CASE("report with a diagonal matrix is all ones") {
    const ClassScheme scheme = binary_scheme();
    ConfusionMatrix c(2);
    c.add(0, 0, 10);
    c.add(1, 1, 10);
    const MetricReport rep = report(c, scheme);
    CHECK(rep.overall_accuracy == 1.0);
    CHECK(rep.macro_iou == 1.0);
    CHECK(rep.macro_f1 == 1.0);
}
