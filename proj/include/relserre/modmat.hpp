#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "relserre/error.hpp"

namespace relserre::modmat {

// 2x2 matrix over Z/NZ. Entries are stored reduced; the modulus travels with
// the value so that matrices at different moduli (4, 8, 9, 36, 276, 420, ...)
// mix freely in one program.
struct ResidueMatrix {
    uint32_t n = 2;  // modulus, >= 2
    uint32_t a = 0, b = 0, c = 0, d = 0;

    ResidueMatrix() = default;
    ResidueMatrix(uint32_t mod, int64_t a_, int64_t b_, int64_t c_, int64_t d_);

    bool operator==(const ResidueMatrix& o) const = default;
};

// trace/determinant pair; the characteristic polynomial is x^2 - t*x + d.
struct CharPolyData {
    uint32_t n = 2;
    uint32_t t = 0;
    uint32_t d = 0;

    bool operator==(const CharPolyData& o) const = default;
};

uint32_t reduce_mod(int64_t x, uint32_t n);

ResidueMatrix identity(uint32_t n);
ResidueMatrix mat_mul(const ResidueMatrix& A, const ResidueMatrix& B);
uint32_t det(const ResidueMatrix& A);
uint32_t trace(const ResidueMatrix& A);
bool is_invertible(const ResidueMatrix& A);

// Inverse via the adjugate; requires gcd(det, n) = 1, else Inconsistency
// naming the offending determinant.
ResidueMatrix mat_inv(const ResidueMatrix& A);

CharPolyData char_poly(const ResidueMatrix& A);

// Reduction along modulus divisibility: m | n.
ResidueMatrix project(const ResidueMatrix& A, uint32_t m);

// CRT decomposition across the prime-power factorization of the modulus, in
// increasing prime order; crt_join is the inverse ring isomorphism.
std::vector<ResidueMatrix> crt_split(const ResidueMatrix& A);
ResidueMatrix crt_join(const std::vector<ResidueMatrix>& parts);

// Packed canonical key: ((a*n + b)*n + c)*n + d. Requires n <= 65535 so the
// key fits in 64 bits; this bounds the moduli we ever materialize sets at.
uint64_t pack_key(const ResidueMatrix& A);
uint64_t pack_key(uint32_t n, uint32_t a, uint32_t b, uint32_t c, uint32_t d);
ResidueMatrix unpack_key(uint32_t n, uint64_t key);

// Key-level multiply loop support: unpack, multiply mod n, repack.
uint64_t mul_keys(uint32_t n, uint64_t x, uint64_t y);
uint64_t inv_key(uint32_t n, uint64_t x);

// |GL2(Z/NZ)| = N^4 prod_{p|N} (1 - 1/p)(1 - 1/p^2), |SL2| = |GL2|/phi(N).
uint64_t gl2_order(uint32_t n);
uint64_t sl2_order(uint32_t n);
uint64_t euler_phi(uint32_t n);

std::vector<std::pair<uint32_t, uint32_t>> prime_power_factorization(uint32_t n);

// Text format used in data files, CLI and JSON: "a,b,c,d" row-major;
// generator lists are ";"-separated.
std::string to_text(const ResidueMatrix& A);
ResidueMatrix parse_matrix(const std::string& text, uint32_t n);
std::vector<ResidueMatrix> parse_generator_list(const std::string& text, uint32_t n);
std::string generator_list_text(const std::vector<ResidueMatrix>& gens);

}  // namespace relserre::modmat
