#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "relserre/modmat.hpp"

using namespace relserre;
using namespace relserre::modmat;

namespace {

ResidueMatrix random_matrix(std::mt19937_64& rng, uint32_t n) {
    std::uniform_int_distribution<int64_t> d(-2 * static_cast<int64_t>(n), 2 * n);
    return ResidueMatrix(n, d(rng), d(rng), d(rng), d(rng));
}

ResidueMatrix random_invertible(std::mt19937_64& rng, uint32_t n) {
    while (true) {
        ResidueMatrix A = random_matrix(rng, n);
        if (is_invertible(A)) return A;
    }
}

}  // namespace

TEST_CASE("construction reduces negative and unreduced entries") {
    ResidueMatrix A(4, -1, 7, 4, -5);
    CHECK(A == ResidueMatrix(4, 3, 3, 0, 3));
}

TEST_CASE("mat_mul basics") {
    CHECK(mat_mul(identity(4), identity(4)) == identity(4));
    ResidueMatrix A(4, 3, 0, 0, 1), B(4, 1, 1, 1, 0);
    CHECK(mat_mul(A, B) == ResidueMatrix(4, 3, 3, 1, 0));
    CHECK_THROWS_AS(mat_mul(identity(4), identity(8)), Error);
}

TEST_CASE("mat_inv basics and inverse law") {
    CHECK(mat_inv(identity(8)) == identity(8));
    CHECK(mat_inv(ResidueMatrix(2, 0, 1, 1, 1)) == ResidueMatrix(2, 1, 1, 1, 0));
    CHECK(mat_inv(ResidueMatrix(4, 1, 2, 0, 1)) == ResidueMatrix(4, 1, 2, 0, 1));
    // non-invertible: error names the determinant
    ResidueMatrix S(4, 2, 0, 0, 1);
    CHECK_THROWS_WITH_AS(mat_inv(S), doctest::Contains("det = 2"), Error);

    std::mt19937_64 rng(7);
    for (int i = 0; i < 500; ++i) {
        uint32_t n = (i % 2) ? 8 : 9;
        ResidueMatrix A = random_invertible(rng, n);
        CHECK(mat_mul(A, mat_inv(A)) == identity(n));
    }
}

TEST_CASE("char_poly") {
    CHECK(char_poly(identity(6)) == CharPolyData{6, 2, 1});
    // x^2 - 0x + 3 for diag(3,1) mod 4
    CHECK(char_poly(ResidueMatrix(4, 3, 0, 0, 1)) == CharPolyData{4, 0, 3});
}

TEST_CASE("crt split and join examples") {
    auto parts = crt_split(identity(12));
    REQUIRE(parts.size() == 2);
    CHECK(parts[0] == identity(4));
    CHECK(parts[1] == identity(3));

    auto p2 = crt_split(ResidueMatrix(12, 7, 0, 0, 1));
    CHECK(p2[0] == ResidueMatrix(4, 3, 0, 0, 1));
    CHECK(p2[1] == ResidueMatrix(3, 1, 0, 0, 1));

    ResidueMatrix j = crt_join({identity(4), ResidueMatrix(3, 2, 0, 0, 2)});
    CHECK(j == ResidueMatrix(12, 5, 0, 0, 5));

    CHECK_THROWS_AS(crt_join({identity(4), identity(6)}), Error);
}

TEST_CASE("crt round-trip on random matrices") {
    std::mt19937_64 rng(11);
    for (uint32_t n : {12u, 36u, 56u, 276u, 420u}) {
        for (int i = 0; i < 10000; ++i) {
            ResidueMatrix A = random_matrix(rng, n);
            CHECK(crt_join(crt_split(A)) == A);
        }
    }
}

TEST_CASE("det is multiplicative") {
    std::mt19937_64 rng(13);
    for (uint32_t n : {12u, 36u, 420u}) {
        for (int i = 0; i < 2000; ++i) {
            ResidueMatrix A = random_matrix(rng, n), B = random_matrix(rng, n);
            CHECK(det(mat_mul(A, B)) ==
                  static_cast<uint32_t>(static_cast<uint64_t>(det(A)) * det(B) % n));
        }
    }
}

TEST_CASE("invertible count matches N^4 prod (1-1/p)(1-1/p^2)") {
    for (uint32_t n : {2u, 3u, 4u, 8u, 9u}) {
        uint64_t count = 0;
        for (uint32_t a = 0; a < n; ++a)
            for (uint32_t b = 0; b < n; ++b)
                for (uint32_t c = 0; c < n; ++c)
                    for (uint32_t d = 0; d < n; ++d)
                        if (is_invertible(ResidueMatrix(n, a, b, c, d))) ++count;
        CHECK(count == gl2_order(n));
    }
    CHECK(gl2_order(2) == 6);
    CHECK(gl2_order(4) == 96);
    CHECK(gl2_order(8) == 1536);
    CHECK(gl2_order(9) == 3888);
}

TEST_CASE("packed keys round-trip and multiply") {
    std::mt19937_64 rng(17);
    for (int i = 0; i < 2000; ++i) {
        uint32_t n = 420;
        ResidueMatrix A = random_matrix(rng, n), B = random_matrix(rng, n);
        CHECK(unpack_key(n, pack_key(A)) == A);
        CHECK(mul_keys(n, pack_key(A), pack_key(B)) == pack_key(mat_mul(A, B)));
    }
}

TEST_CASE("matrix text format") {
    ResidueMatrix A = parse_matrix("3,0,2,3", 4);
    CHECK(A == ResidueMatrix(4, 3, 0, 2, 3));
    CHECK(to_text(A) == "3,0,2,3");
    auto gens = parse_generator_list("1,1,0,1;1,0,1,1", 8);
    REQUIRE(gens.size() == 2);
    CHECK(gens[1] == ResidueMatrix(8, 1, 0, 1, 1));
    CHECK(generator_list_text(gens) == "1,1,0,1;1,0,1,1");
    CHECK_THROWS_AS(parse_matrix("1,2,3", 4), Error);
    CHECK_THROWS_AS(parse_matrix("1,2,x,4", 4), Error);
}
