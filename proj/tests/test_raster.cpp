#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstring>
#include <filesystem>
#include <fstream>
#include <random>

#include "habitat/raster_io.hpp"
#include "habitat/rng.hpp"
#include "support/oracles.hpp"

using namespace habitat;
namespace fs = std::filesystem;

namespace {

fs::path tmp_dir() {
    const fs::path dir = fs::temp_directory_path() / "habitat_test_raster";
    fs::create_directories(dir);
    return dir;
}

GeoGrid sample_grid() {
    GeoGrid grid(4, 3, 0.5, 100.0, 200.0, 32633);
    Band& labels = grid.add_band(BandKind::Categorical, Tag::Label);
    labels.nodata = 255.0;
    for (std::size_t i = 0; i < labels.values.size(); ++i)
        labels.values[i] = static_cast<double>(i % 23);
    labels.values[5] = 255.0;
    return grid;
}

// Minimal TIFF assembled from the format specification, byte by byte --
// deliberately independent of write_geotiff.
std::vector<std::uint8_t> handmade_rgb_tiff(bool big_endian) {
    std::vector<std::uint8_t> out;
    auto put16 = [&](std::uint16_t v) {
        if (big_endian) { out.push_back(v >> 8); out.push_back(v & 0xFF); }
        else { out.push_back(v & 0xFF); out.push_back(v >> 8); }
    };
    auto put32 = [&](std::uint32_t v) {
        if (big_endian) for (int i = 3; i >= 0; --i) out.push_back((v >> (8 * i)) & 0xFF);
        else for (int i = 0; i < 4; ++i) out.push_back((v >> (8 * i)) & 0xFF);
    };
    auto put_double = [&](double d) {
        std::uint64_t bits;
        std::memcpy(&bits, &d, 8);
        if (big_endian) for (int i = 7; i >= 0; --i) out.push_back((bits >> (8 * i)) & 0xFF);
        else for (int i = 0; i < 8; ++i) out.push_back((bits >> (8 * i)) & 0xFF);
    };

    // 2x2, 3 samples/pixel, chunky, uncompressed.
    const std::uint8_t pixels[12] = {10, 20, 30, 40, 50, 60, 70, 80, 90, 100, 110, 120};

    out.push_back(big_endian ? 'M' : 'I');
    out.push_back(big_endian ? 'M' : 'I');
    put16(42);
    const std::size_t ifd_slot = out.size();
    put32(0);

    const std::size_t strip_off = out.size();
    out.insert(out.end(), pixels, pixels + 12);

    const std::size_t bits_off = out.size();
    put16(8); put16(8); put16(8);
    const std::size_t scale_off = out.size();
    put_double(0.2); put_double(0.2); put_double(0.0);
    const std::size_t tie_off = out.size();
    put_double(0); put_double(0); put_double(0);
    put_double(500000.0); put_double(5250000.0); put_double(0);
    const std::size_t keys_off = out.size();
    for (std::uint16_t v : {1, 1, 0, 3, 1024, 0, 1, 1, 1025, 0, 1, 1, 3072, 0, 1}) put16(v);
    put16(32633);

    // Patch the header's IFD pointer now that the offset is known.
    const std::size_t ifd_off = out.size();
    for (int i = 0; i < 4; ++i) {
        const std::uint32_t v = static_cast<std::uint32_t>(ifd_off);
        out[ifd_slot + i] = big_endian ? (v >> (8 * (3 - i))) & 0xFF : (v >> (8 * i)) & 0xFF;
    }

    struct E { std::uint16_t tag, type; std::uint32_t count, value; bool short_inline; };
    const std::vector<E> entries = {
        {256, 4, 1, 2, false},                                   // width
        {257, 4, 1, 2, false},                                   // height
        {258, 3, 3, static_cast<std::uint32_t>(bits_off), false},
        {259, 3, 1, 1, true},                                    // uncompressed
        {262, 3, 1, 2, true},                                    // RGB
        {273, 4, 1, static_cast<std::uint32_t>(strip_off), false},
        {277, 3, 1, 3, true},
        {278, 4, 1, 2, false},
        {279, 4, 1, 12, false},
        {284, 3, 1, 1, true},
        {33550, 12, 3, static_cast<std::uint32_t>(scale_off), false},
        {33922, 12, 6, static_cast<std::uint32_t>(tie_off), false},
        {34735, 3, 16, static_cast<std::uint32_t>(keys_off), false},
    };
    put16(static_cast<std::uint16_t>(entries.size()));
    for (const E& e : entries) {
        put16(e.tag);
        put16(e.type);
        put32(e.count);
        if (e.short_inline) { put16(static_cast<std::uint16_t>(e.value)); put16(0); }
        else put32(e.value);
    }
    put32(0);
    return out;
}

} // namespace

TEST_CASE("geotiff round-trip preserves values, geometry, kinds and nodata") {
    const GeoGrid grid = sample_grid();
    const std::string path = (tmp_dir() / "roundtrip.tif").string();
    write_raster(grid, path);
    const GeoGrid back = read_raster(path);

    CHECK(back.width == grid.width);
    CHECK(back.height == grid.height);
    CHECK(back.pixel_size == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(back.origin_x == doctest::Approx(100.0).epsilon(1e-12));
    CHECK(back.origin_y == doctest::Approx(200.0).epsilon(1e-12));
    CHECK(back.epsg == 32633);
    REQUIRE(back.bands.size() == 1);
    CHECK(back.bands[0].kind == BandKind::Categorical);
    CHECK(back.bands[0].tag == Tag::Label);
    REQUIRE(back.bands[0].nodata.has_value());
    CHECK(*back.bands[0].nodata == 255.0);
    CHECK(back.bands[0].values == grid.bands[0].values);  // bit-exact
}

TEST_CASE("geotiff round-trip is exact for every dtype") {
    for (DType dt : {DType::U8, DType::U16, DType::I32, DType::F32}) {
        GeoGrid grid(3, 2, 1.0);
        Band& band = grid.add_band(dt == DType::F32 ? BandKind::Continuous
                                                    : BandKind::Categorical);
        band.dtype = dt;
        const double values[6] = {0, 1, 7, 42, 200, 31};
        for (int i = 0; i < 6; ++i)
            band.values[i] = dt == DType::F32 ? values[i] + 0.125 : values[i];
        const std::string path = (tmp_dir() / "dtype.tif").string();
        write_raster(grid, path);
        const GeoGrid back = read_raster(path);
        CHECK(back.bands[0].dtype == dt);
        CHECK(back.bands[0].values == grid.bands[0].values);
    }
}

TEST_CASE("float32 values survive the file layer within 0 ulp") {
    GeoGrid grid(2, 2, 1.0);
    Band& band = grid.add_band(BandKind::Continuous, Tag::DTM);
    band.values = {1.0f / 3.0f, 2734.125, -17.75, 3.4e37};
    const std::string path = (tmp_dir() / "float.tif").string();
    write_raster(grid, path);
    const GeoGrid back = read_raster(path);
    for (int i = 0; i < 4; ++i) {
        const float expected = static_cast<float>(grid.bands[0].values[i]);
        CHECK(static_cast<float>(back.bands[0].values[i]) == expected);
        CHECK(back.bands[0].values[i] == static_cast<double>(expected));
    }
}

TEST_CASE("multiband stack round-trips through one file") {
    GeoGrid grid(5, 4, 0.2);
    const Tag tags[4] = {Tag::R, Tag::G, Tag::B, Tag::NIR};
    std::mt19937_64 gen(11);
    for (Tag t : tags) {
        Band& band = grid.add_band(BandKind::Continuous, t);
        band.dtype = DType::U8;
        for (double& v : band.values) v = static_cast<double>(rng::bounded(gen, 256));
    }
    const std::string path = (tmp_dir() / "multi.tif").string();
    write_raster(grid, path);
    const GeoGrid back = read_raster(path);
    REQUIRE(back.bands.size() == 4);
    for (int b = 0; b < 4; ++b) {
        CHECK(back.bands[b].tag == tags[b]);
        CHECK(back.bands[b].values == grid.bands[b].values);
    }
}

TEST_CASE("hand-assembled rgb tiff reads byte-exactly (both byte orders)") {
    for (bool big_endian : {false, true}) {
        CAPTURE(big_endian);
        const auto bytes = handmade_rgb_tiff(big_endian);
        const std::string path = (tmp_dir() / "handmade.tif").string();
        {
            std::ofstream out(path, std::ios::binary | std::ios::trunc);
            out.write(reinterpret_cast<const char*>(bytes.data()),
                      static_cast<std::streamsize>(bytes.size()));
        }
        const GeoGrid grid = read_raster(path);
        CHECK(grid.width == 2);
        CHECK(grid.height == 2);
        CHECK(grid.pixel_size == 0.2);
        CHECK(grid.origin_x == 500000.0);
        CHECK(grid.origin_y == 5250000.0);
        CHECK(grid.epsg == 32633);
        REQUIRE(grid.bands.size() == 3);
        // No habitat description: 3-band 8-bit imagery is continuous R,G,B.
        CHECK(grid.bands[0].kind == BandKind::Continuous);
        CHECK(grid.bands[0].tag == Tag::R);
        CHECK(grid.bands[1].tag == Tag::G);
        CHECK(grid.bands[2].tag == Tag::B);
        const double expect_r[4] = {10, 40, 70, 100};
        const double expect_g[4] = {20, 50, 80, 110};
        const double expect_b[4] = {30, 60, 90, 120};
        for (int i = 0; i < 4; ++i) {
            CHECK(grid.bands[0].values[i] == expect_r[i]);
            CHECK(grid.bands[1].values[i] == expect_g[i]);
            CHECK(grid.bands[2].values[i] == expect_b[i]);
        }
    }
}

TEST_CASE("reader rejects what it cannot represent") {
    const GeoGrid grid = sample_grid();
    const std::string path = (tmp_dir() / "reject.tif").string();
    write_raster(grid, path);

    SUBCASE("unsupported extension") {
        CHECK_THROWS_WITH_AS(read_raster("/nonexistent/file.png"),
                             doctest::Contains("unsupported raster format"),
                             std::runtime_error);
    }
    SUBCASE("anisotropic pixels") {
        // Corrupt the pixel scale: sy != sx.
        std::fstream f(path, std::ios::in | std::ios::out | std::ios::binary);
        std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(f)),
                                        std::istreambuf_iterator<char>());
        // write_geotiff stores ModelPixelScale as three consecutive doubles;
        // find the 0.5,0.5 pair and bump the second.
        double sx = 0.5, sy = 0.7;
        std::uint64_t sx_bits, sy_bits;
        std::memcpy(&sx_bits, &sx, 8);
        std::memcpy(&sy_bits, &sy, 8);
        for (std::size_t i = 0; i + 16 <= bytes.size(); ++i) {
            std::uint64_t a, b;
            std::memcpy(&a, bytes.data() + i, 8);
            std::memcpy(&b, bytes.data() + i + 8, 8);
            if (a == sx_bits && b == sx_bits) {
                std::memcpy(bytes.data() + i + 8, &sy_bits, 8);
                break;
            }
        }
        f.seekp(0);
        f.write(reinterpret_cast<const char*>(bytes.data()),
                static_cast<std::streamsize>(bytes.size()));
        f.close();
        CHECK_THROWS_WITH_AS(read_raster(path), doctest::Contains("anisotropic"),
                             std::runtime_error);
    }
    SUBCASE("missing geotransform") {
        // A bare TIFF without ModelPixelScale/Tiepoint.
        auto bytes = handmade_rgb_tiff(false);
        // Drop the geo tags by rewriting the entry count and filtering.
        // Easier: write a fresh minimal TIFF without geo tags.
        std::vector<std::uint8_t> out;
        auto put16 = [&](std::uint16_t v) { out.push_back(v & 0xFF); out.push_back(v >> 8); };
        auto put32 = [&](std::uint32_t v) {
            for (int i = 0; i < 4; ++i) out.push_back((v >> (8 * i)) & 0xFF);
        };
        out = {'I', 'I'};
        put16(42);
        put32(8 + 4);  // IFD right after header + pixel
        out.push_back(7);  // one 1x1 u8 pixel
        out.push_back(0); out.push_back(0); out.push_back(0);  // pad
        put16(7);
        struct E { std::uint16_t tag, type; std::uint32_t count, value; };
        for (const E& e : {E{256, 4, 1, 1}, E{257, 4, 1, 1}, E{258, 3, 1, 8}, E{259, 3, 1, 1},
                           E{273, 4, 1, 8}, E{277, 3, 1, 1}, E{279, 4, 1, 1}}) {
            put16(e.tag);
            put16(e.type);
            put32(e.count);
            if (e.type == 3) { put16(static_cast<std::uint16_t>(e.value)); put16(0); }
            else put32(e.value);
        }
        put32(0);
        const std::string bare = (tmp_dir() / "bare.tif").string();
        std::ofstream f(bare, std::ios::binary | std::ios::trunc);
        f.write(reinterpret_cast<const char*>(out.data()),
                static_cast<std::streamsize>(out.size()));
        f.close();
        CHECK_THROWS_WITH_AS(read_raster(bare), doctest::Contains("missing geotransform"),
                             std::runtime_error);
    }
    SUBCASE("mixed dtypes refused on write") {
        GeoGrid mixed(2, 2, 1.0);
        mixed.add_band(BandKind::Categorical).dtype = DType::U8;
        mixed.add_band(BandKind::Continuous).dtype = DType::F32;
        CHECK_THROWS_WITH_AS(write_raster(mixed, (tmp_dir() / "mixed.tif").string()),
                             doctest::Contains("mixed band dtypes"), std::runtime_error);
    }
}

TEST_CASE("text grid format round-trips") {
    const GeoGrid grid = sample_grid();
    const std::string path = (tmp_dir() / "fixture.grid").string();
    write_raster(grid, path);
    const GeoGrid back = read_raster(path);
    CHECK(back.bands[0].values == grid.bands[0].values);
    CHECK(back.pixel_size == grid.pixel_size);
    CHECK(back.bands[0].kind == BandKind::Categorical);
    REQUIRE(back.bands[0].nodata.has_value());
    CHECK(*back.bands[0].nodata == 255.0);
}

TEST_CASE("nearest-neighbor upsampling at an integer ratio makes constant blocks") {
    GeoGrid grid(3, 3, 1.0);
    Band& band = grid.add_band(BandKind::Categorical, Tag::Label);
    for (std::size_t i = 0; i < band.values.size(); ++i) band.values[i] = static_cast<double>(i);

    const GeoGrid fine = resample_to(grid, 0.2, grid.extent());
    CHECK(fine.width == 15);
    CHECK(fine.height == 15);
    for (int r = 0; r < 15; ++r) {
        for (int c = 0; c < 15; ++c) {
            CHECK(fine.at(0, r, c) == grid.at(0, r / 5, c / 5));
        }
    }
}

TEST_CASE("nearest-neighbor never invents labels") {
    std::mt19937_64 gen(5);
    for (int round = 0; round < 10; ++round) {
        const int w = 3 + static_cast<int>(rng::bounded(gen, 8));
        const int h = w;  // square so one pixel size aligns both axes
        GeoGrid grid = oracle::random_labels(w, h, 5, gen());
        const double ratio = 0.3 + 0.1 * static_cast<double>(rng::bounded(gen, 12));
        // Snap the pixel size so the extent is integer in target pixels.
        const Extent e = grid.extent();
        const double target_px = e.width() / std::ceil(e.width() / ratio);
        const GeoGrid resampled = resample_to(grid, target_px, e);
        for (double v : resampled.bands[0].values) {
            const bool in_source =
                std::find(grid.bands[0].values.begin(), grid.bands[0].values.end(), v) !=
                grid.bands[0].values.end();
            CHECK(in_source);
        }
    }
}

TEST_CASE("bilinear keeps constants and affine ramps exact") {
    SUBCASE("constant") {
        GeoGrid grid(6, 6, 1.0);
        grid.add_band(BandKind::Continuous, Tag::DTM, 7.5);
        const GeoGrid out = resample_to(grid, 0.4, grid.extent());
        for (double v : out.bands[0].values) CHECK(v == doctest::Approx(7.5).epsilon(1e-12));
    }
    SUBCASE("ramp z = x, downsample and upsample") {
        GeoGrid grid(20, 20, 1.0);
        Band& band = grid.add_band(BandKind::Continuous, Tag::DTM);
        for (int r = 0; r < 20; ++r)
            for (int c = 0; c < 20; ++c) band.values[grid.index(r, c)] = grid.pixel_x(c);
        for (double px : {0.5, 2.0}) {
            const GeoGrid out = resample_to(grid, px, grid.extent());
            // Interior pixels only; the clamped border repeats edge samples.
            for (int r = 1; r < out.height - 1; ++r) {
                for (int c = 1; c < out.width - 1; ++c) {
                    CHECK(out.at(0, r, c) ==
                          doctest::Approx(out.pixel_x(c)).epsilon(1e-6));
                }
            }
        }
    }
}

TEST_CASE("bilinear nodata propagates, never fills") {
    GeoGrid grid(4, 4, 1.0);
    Band& band = grid.add_band(BandKind::Continuous, Tag::DTM, 5.0);
    band.nodata = -9999.0;
    band.values[grid.index(1, 1)] = -9999.0;
    const GeoGrid out = resample_to(grid, 0.5, grid.extent());
    // Any output pixel whose 4-neighborhood touches the hole is nodata.
    int nodata_count = 0;
    for (double v : out.bands[0].values) {
        if (v == -9999.0) ++nodata_count;
    }
    CHECK(nodata_count > 0);
    // The far corner is untouched.
    CHECK(out.at(0, 7, 7) == doctest::Approx(5.0));
}

TEST_CASE("resample rejects an empty intersection") {
    GeoGrid grid(4, 4, 1.0);
    grid.add_band(BandKind::Continuous, Tag::DTM, 1.0);
    CHECK_THROWS_WITH_AS(resample_to(grid, 1.0, {100.0, 100.0, 104.0, 104.0}),
                         doctest::Contains("empty intersection"), std::runtime_error);
}

TEST_CASE("stack concatenates in the requested order and checks alignment") {
    GeoGrid rgb(4, 4, 0.2);
    rgb.add_band(BandKind::Continuous, Tag::R, 1.0);
    rgb.add_band(BandKind::Continuous, Tag::G, 2.0);
    rgb.add_band(BandKind::Continuous, Tag::B, 3.0);
    GeoGrid nir(4, 4, 0.2);
    nir.add_band(BandKind::Continuous, Tag::NIR, 4.0);
    GeoGrid ndsm_grid(4, 4, 0.2);
    ndsm_grid.add_band(BandKind::Continuous, Tag::NDSM, 5.0);

    SUBCASE("rgb + nir") {
        const GeoGrid out = stack({rgb, nir}, {"R", "G", "B", "NIR"});
        REQUIRE(out.bands.size() == 4);
        CHECK(out.bands[3].values[0] == 4.0);
    }
    SUBCASE("five-band rgb+nir+ndsm stack (ablation level iii)") {
        const GeoGrid out = stack({rgb, nir, ndsm_grid}, {"R", "G", "B", "NIR", "NDSM"});
        REQUIRE(out.bands.size() == 5);
        CHECK(out.bands[0].tag == Tag::R);
        CHECK(out.bands[4].tag == Tag::NDSM);
        CHECK(out.bands[4].values[0] == 5.0);
    }
    SUBCASE("misaligned origins are refused") {
        GeoGrid shifted = nir;
        shifted.origin_x += 0.1;
        CHECK_THROWS_WITH_AS(stack({rgb, shifted}, {"R", "NIR"}),
                             doctest::Contains("grids not co-registered"), std::runtime_error);
    }
    SUBCASE("missing tag is refused") {
        CHECK_THROWS_WITH_AS(stack({rgb}, {"R", "NIR"}),
                             doctest::Contains("missing requested tag"), std::runtime_error);
    }
    SUBCASE("inputs are left untouched") {
        const std::vector<double> before = rgb.bands[0].values;
        (void)stack({rgb, nir}, {"NIR", "R"});
        CHECK(rgb.bands[0].values == before);
        CHECK(rgb.bands.size() == 3);
    }
}

TEST_CASE("grid invariants are enforced") {
    CHECK_THROWS(GeoGrid(0, 4, 1.0).validate());
    CHECK_THROWS(GeoGrid(4, 4, -1.0).validate());
    GeoGrid grid(2, 2, 1.0);
    Band& band = grid.add_band(BandKind::Categorical);
    band.values[0] = 1.5;  // non-integer categorical value
    CHECK_THROWS(grid.validate());
}
