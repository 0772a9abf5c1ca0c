#include <catch2/catch_amalgamated.hpp>

#include <set>

#include "gkc/hash.hpp"
#include "gkc/rng.hpp"

using namespace gkc;

TEST_CASE("sha256 known vectors") {
    CHECK(sha256_hex("") ==
          "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
    CHECK(sha256_hex("abc") ==
          "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
    CHECK(sha256_hex("abcdbcdecdefdefgefghfghighijhijkijkljklmklmnlmnomnopnopq") ==
          "248d6a61d20638b8e5c026930c3e6039a33ce45964ff2167f6ecedd419db06c1");
    // spans a block boundary
    std::string long_input(200, 'x');
    CHECK(sha256_hex(long_input) == sha256_hex(long_input));
    CHECK(sha256_hex(long_input) != sha256_hex(long_input + "x"));
}

TEST_CASE("fnv1a64 is the fixed reference function") {
    CHECK(fnv1a64("") == 0xcbf29ce484222325ull);
    CHECK(fnv1a64("a") == 0xaf63dc4c8601ec8cull);
    // stability canary for the mock embedder's token hashing
    CHECK(fnv1a64("tp53") % 256 == fnv1a64("tp53") % 256);
    CHECK(fnv1a64("doublehit") != fnv1a64("tp53"));
}

TEST_CASE("rng streams are deterministic and tag-separated") {
    Rng a = Rng::child(7, "x", 1);
    Rng b = Rng::child(7, "x", 1);
    Rng c = Rng::child(7, "x", 2);
    for (int i = 0; i < 16; ++i) {
        auto va = a.next_u64();
        CHECK(va == b.next_u64());
        CHECK(va != c.next_u64());
    }
}

TEST_CASE("uniform01 lies in [0,1) and below() respects bounds") {
    Rng rng(123);
    for (int i = 0; i < 1000; ++i) {
        double u = rng.uniform01();
        CHECK(u >= 0.0);
        CHECK(u < 1.0);
        CHECK(rng.below(7) < 7);
        auto v = rng.uniform_int(-3, 3);
        CHECK(v >= -3);
        CHECK(v <= 3);
    }
}

TEST_CASE("normal produces finite values with roughly correct moments") {
    Rng rng(99);
    double sum = 0, sum2 = 0;
    const int n = 20000;
    for (int i = 0; i < n; ++i) {
        double x = rng.normal();
        REQUIRE(std::isfinite(x));
        sum += x;
        sum2 += x * x;
    }
    CHECK(std::fabs(sum / n) < 0.05);
    CHECK(std::fabs(sum2 / n - 1.0) < 0.05);
}

TEST_CASE("sample_without_replacement yields distinct indices") {
    Rng rng(5);
    auto s = rng.sample_without_replacement(20, 10);
    std::set<std::size_t> seen(s.begin(), s.end());
    CHECK(seen.size() == 10);
    for (auto i : seen) CHECK(i < 20);
}
