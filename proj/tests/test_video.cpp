#include "doctest.h"

#include <fstream>

#include "test_support.hpp"
#include "vnlnet/video.hpp"

using namespace vnl;

TEST_CASE("reflect_index follows symmetric reflection without repeat")
{
    CHECK(reflect_index(-1, 3) == 1);
    CHECK(reflect_index(3, 3) == 1);
    CHECK(reflect_index(-2, 3) == 2);
    CHECK(reflect_index(4, 3) == 0);
    CHECK(reflect_index(0, 1) == 0);
    CHECK(reflect_index(-17, 1) == 0);
    // far out of range folds repeatedly: period 2(n-1) = 8 for n = 5
    for (int i = -40; i < 40; ++i) {
        const int r = reflect_index(i, 5);
        CHECK(r >= 0);
        CHECK(r < 5);
        CHECK(r == reflect_index(i + 8, 5));
    }
}

TEST_CASE("sample_extended")
{
    SUBCASE("constant video")
    {
        const Video v(3, 1, 4, 5, 7.f);
        for (int t = -5; t < 8; ++t)
            for (int y = -6; y < 9; ++y)
                for (int x = -7; x < 11; ++x)
                    CHECK(sample_extended(v, x, y, t, 0) == 7.f);
    }
    SUBCASE("temporal mirroring")
    {
        Video v(3, 1, 1, 1);
        v(0, 0, 0, 0) = 10;
        v(1, 0, 0, 0) = 11;
        v(2, 0, 0, 0) = 12;
        CHECK(sample_extended(v, 0, 0, -1, 0) == 11);
        CHECK(sample_extended(v, 0, 0, 3, 0) == 11);
    }
    SUBCASE("2x2 frame")
    {
        Video v(1, 1, 2, 2);
        v(0, 0, 0, 0) = 1;
        v(0, 0, 0, 1) = 2;
        v(0, 0, 1, 0) = 3;
        v(0, 0, 1, 1) = 4;
        CHECK(sample_extended(v, -1, 0, 0, 0) == 2);
    }
    SUBCASE("agrees with direct indexing in range and is involutive at depth one")
    {
        const Video v = testing::random_video(4, 3, 6, 7, 11);
        for (int t = 0; t < 4; ++t)
            for (int c = 0; c < 3; ++c)
                for (int y = 0; y < 6; ++y)
                    for (int x = 0; x < 7; ++x) {
                        CHECK(sample_extended(v, x, y, t, c) == v(t, c, y, x));
                        CHECK(sample_extended(v, -x, y, t, c) == v(t, c, y, x));
                        CHECK(sample_extended(v, x, -y, -t, c) == v(t, c, y, x));
                    }
    }
}

TEST_CASE("video invariants")
{
    CHECK_THROWS_AS(Video(1, 2, 4, 4), Error);
    CHECK_THROWS_AS(Video(0, 1, 4, 4), Error);
    const Video v(2, 3, 4, 5);
    CHECK(v.data().size() == 2u * 3 * 4 * 5);
}

TEST_CASE("sequence I/O")
{
    const auto dir = testing::scratch_dir("video_io");

    SUBCASE("round trip of integer-valued video is bit exact")
    {
        for (int C : {1, 3}) {
            const Video v = testing::random_integer_video(3, C, 16, 16, 5 + C);
            const auto files = write_sequence(v, dir / std::to_string(C));
            REQUIRE(files.size() == 3);
            const Video back = read_sequence(files);
            CHECK(back.frames() == 3);
            CHECK(back.channels() == C);
            CHECK(back.rows() == 16);
            CHECK(back.cols() == 16);
            CHECK(back == v);
            CHECK(read_sequence(list_sequence(dir / std::to_string(C))) == v);
        }
    }
    SUBCASE("clamping and rounding on write")
    {
        Video v(1, 1, 1, 4);
        v(0, 0, 0, 0) = 255.7f;
        v(0, 0, 0, 1) = -3.f;
        v(0, 0, 0, 2) = 254.5f;
        v(0, 0, 0, 3) = 12.49f;
        const Video back = read_sequence(write_sequence(v, dir / "clamp"));
        CHECK(back(0, 0, 0, 0) == 255.f);
        CHECK(back(0, 0, 0, 1) == 0.f);
        CHECK(back(0, 0, 0, 2) == 255.f);
        CHECK(back(0, 0, 0, 3) == 12.f);
    }
    SUBCASE("byte 255 is read as 255.0")
    {
        const Video v(1, 1, 2, 2, 255.f);
        CHECK(read_sequence(write_sequence(v, dir / "white"))(0, 0, 1, 1) == 255.f);
    }
    SUBCASE("mixed PPM and PGM is rejected")
    {
        auto a = write_sequence(Video(1, 1, 4, 4), dir / "mixed_a");
        auto b = write_sequence(Video(1, 3, 4, 4), dir / "mixed_b");
        CHECK_THROWS_AS(read_sequence({a[0], b[0]}), Error);
    }
    SUBCASE("mismatched dimensions name the offending file")
    {
        auto a = write_sequence(Video(1, 1, 4, 4), dir / "dim_a");
        auto b = write_sequence(Video(1, 1, 5, 4), dir / "dim_b");
        try {
            read_sequence({a[0], b[0]});
            FAIL("expected an error");
        } catch (const Error& e) {
            CHECK(std::string(e.what()).find(b[0].string()) != std::string::npos);
        }
    }
    SUBCASE("unsupported magic number")
    {
        const auto path = dir / "ascii.pgm";
        std::ofstream(path) << "P2\n2 2\n255\n0 0 0 0\n";
        CHECK_THROWS_AS(read_sequence({path}), Error);
    }
    SUBCASE("header comments are skipped")
    {
        const auto path = dir / "comment.pgm";
        {
            std::ofstream out(path, std::ios::binary);
            out << "P5\n# made by hand\n2 1\n255\n";
            out.put(char(9));
            out.put(char(200));
        }
        const Video v = read_sequence({path});
        CHECK(v(0, 0, 0, 0) == 9.f);
        CHECK(v(0, 0, 0, 1) == 200.f);
    }
    SUBCASE("unwritable directory")
    {
        const auto blocker = dir / "file_not_dir";
        std::ofstream(blocker) << "x";
        CHECK_THROWS_AS(write_sequence(Video(1, 1, 2, 2), blocker / "sub"), Error);
    }
}
