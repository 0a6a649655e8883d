#include <doctest.h>

#include <cstring>

#include "odisphere/error.hpp"
#include "odisphere/io.hpp"
#include "test_util.hpp"

using namespace odisphere;

TEST_CASE("pfm round trip")
{
    const auto dir = testutil::temp_dir("pfm");
    for (std::size_t ch : {1u, 3u}) {
        Raster img = testutil::random_raster(7, 5, ch, ch, -2, 2);
        for (double& v : img.values()) v = static_cast<float>(v);
        write_pfm(dir / "a.pfm", img);
        const Raster back = read_pfm(dir / "a.pfm");
        CHECK(back == img);
        CHECK(encode_pfm(back) == read_bytes(dir / "a.pfm"));
    }
}

TEST_CASE("pfm layout")
{
    Raster img(2, 1);
    img(0, 0) = 1.0;  // top row
    img(1, 0) = 2.0;
    const auto bytes = encode_pfm(img);
    const std::string header = "Pf\n1 2\n-1.0\n";
    REQUIRE(bytes.size() == header.size() + 8);
    CHECK(std::string(bytes.begin(), bytes.begin() + long(header.size())) == header);
    float first, second;
    std::memcpy(&first, bytes.data() + header.size(), 4);
    std::memcpy(&second, bytes.data() + header.size() + 4, 4);
    CHECK(first == 2.0f);  // rows are stored bottom to top
    CHECK(second == 1.0f);
}

TEST_CASE("pfm big-endian input")
{
    std::string h = "Pf\n2 1\n1.0\n";
    std::vector<std::uint8_t> bytes(h.begin(), h.end());
    for (float f : {0.5f, -3.0f}) {
        std::uint8_t b[4];
        std::memcpy(b, &f, 4);
        bytes.insert(bytes.end(), {b[3], b[2], b[1], b[0]});
    }
    const Raster img = decode_pfm(bytes);
    CHECK(img(0, 0) == 0.5);
    CHECK(img(0, 1) == -3.0);
}

TEST_CASE("pfm errors")
{
    const std::string bad = "P6\n1 1\n-1.0\n";
    CHECK_THROWS_AS(decode_pfm({bad.begin(), bad.end()}), IoError);
    std::string shortp = "Pf\n2 2\n-1.0\n";
    std::vector<std::uint8_t> b(shortp.begin(), shortp.end());
    b.resize(b.size() + 12);
    CHECK_THROWS_AS(decode_pfm(b), IoError);
    CHECK_THROWS_AS(read_pfm("/nonexistent/x.pfm"), IoError);
    CHECK_THROWS_AS(encode_pfm(Raster(2, 2, 2)), std::invalid_argument);
}

TEST_CASE("png preview and read back")
{
    const auto dir = testutil::temp_dir("png");
    Raster m(4, 6);
    m(1, 2) = 3.0;
    write_png_preview(dir / "p.png", m);
    const Raster back = read_png(dir / "p.png");
    CHECK(back.rows() == 4);
    CHECK(back.cols() == 6);
    CHECK(back(1, 2, 0) == doctest::Approx(1.0));
    CHECK(back(0, 0, 0) == doctest::Approx(0.0));
    CHECK(read_image(dir / "p.png").rows() == 4);
    CHECK_THROWS_AS(read_image(dir / "p.bmp"), IoError);
}

TEST_CASE("osb1 bias layout")
{
    BiasGrid g(1, 2, {0.25});
    g.weights()[0] = 1.0;
    g.weights()[1] = 2.0;
    const auto bytes = encode_osb1(g);
    REQUIRE(bytes.size() == 4 + 4 * 4 + 3 * 8);
    CHECK(std::memcmp(bytes.data(), "OSB1", 4) == 0);
    std::uint32_t u[4];
    std::memcpy(u, bytes.data() + 4, 16);
    CHECK(u[0] == 1);
    CHECK(u[1] == 1);
    CHECK(u[2] == 1);
    CHECK(u[3] == 2);
    double d[3];
    std::memcpy(d, bytes.data() + 20, 24);
    CHECK(d[0] == 0.25);
    CHECK(d[1] == 1.0);
    CHECK(d[2] == 2.0);
    CHECK(peek_osb1_kind(bytes) == Osb1Kind::bias_grid);
}

TEST_CASE("osb1 round trips")
{
    BiasGrid g = BiasGrid::equator(20, 20);
    const Raster w = testutil::random_raster(1, g.weights().size(), 1, 3, 0.1, 2);
    std::copy(w.values().begin(), w.values().end(), g.weights().begin());
    const auto gb = encode_osb1(g);
    CHECK(decode_osb1_bias(gb) == g);
    CHECK(encode_osb1(decode_osb1_bias(gb)) == gb);

    for (int a = 1; a <= 4; ++a) {
        const AttentionParams p = AttentionParams::make(architecture_from_int(a), 3, 4, 3, std::uint64_t(a));
        const auto pb = encode_osb1(p);
        CHECK(peek_osb1_kind(pb) == Osb1Kind::attention);
        CHECK(decode_osb1_attention(pb) == p);
        CHECK(encode_osb1(decode_osb1_attention(pb)) == pb);
    }
}

TEST_CASE("osb1 rejects malformed files")
{
    const auto gb = encode_osb1(BiasGrid::center(2, 2));
    auto truncated = gb;
    truncated.pop_back();
    CHECK_THROWS_AS(decode_osb1_bias(truncated), IoError);
    auto trailing = gb;
    trailing.push_back(0);
    CHECK_THROWS_AS(decode_osb1_bias(trailing), IoError);
    auto magic = gb;
    magic[0] = 'X';
    CHECK_THROWS_AS(decode_osb1_bias(magic), IoError);
    CHECK_THROWS_AS(decode_osb1_attention(gb), IoError);

    // relabel an arch-1 stack as arch 2: the layer shapes no longer fit
    auto pb = encode_osb1(AttentionParams::make(Architecture::shallow_maps, 2, 2, 2, 0));
    pb[8] = 2;
    CHECK_THROWS_AS(decode_osb1_attention(pb), IoError);
}

TEST_CASE("sha256")
{
    const std::string abc = "abc";
    CHECK(sha256_hex({abc.begin(), abc.end()}) == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}
