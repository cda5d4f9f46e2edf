#pragma once

#include <gmpxx.h>

#include <cstdint>
#include <vector>

#include "relserre/error.hpp"

namespace relserre::arith {

bool is_prime_u64(uint64_t n);  // deterministic Miller-Rabin bases for < 2^64
uint64_t pollard_rho(uint64_t n);

// Prime factorization, sorted. Trial division to 10^6, then rho with
// Miller-Rabin certification. A composite cofactor above 64 bits is a loud
// resource error, never a silent guess.
std::vector<std::pair<uint64_t, unsigned>> factor_u64(uint64_t n);
std::vector<std::pair<uint64_t, unsigned>> factor_mpz(const mpz_class& n);

std::vector<uint32_t> primes_up_to(uint32_t bound);

// Kronecker symbol (a|n), full domain.
int kronecker(const mpz_class& a, const mpz_class& n);
int kronecker_ll(long long a, long long n);

// Signed squarefree part of a nonzero integer, result must fit in 64 bits.
long long squarefree_part(const mpz_class& n);

bool is_perfect_square(const mpz_class& n);
mpz_class isqrt(const mpz_class& n);

uint64_t mulmod_u64(uint64_t a, uint64_t b, uint64_t m);
uint64_t powmod_u64(uint64_t a, uint64_t e, uint64_t m);

// ---- dense polynomials over F_p (p < 2^31), for division-polynomial and
// splitting-behavior computations ----

struct PolyP {
    uint32_t p = 2;
    std::vector<uint32_t> c;  // coefficients, low to high; normalized (no top zeros)

    void normalize();
    bool is_zero() const { return c.empty(); }
    size_t degree() const { return c.empty() ? 0 : c.size() - 1; }
};

PolyP poly_from_mpz(const std::vector<mpz_class>& coeffs, uint32_t p);
PolyP poly_mul(const PolyP& a, const PolyP& b);
PolyP poly_mod(const PolyP& a, const PolyP& m);
PolyP poly_gcd(PolyP a, PolyP b);
PolyP poly_powmod_x(uint64_t e, const PolyP& m);  // x^e mod m
PolyP poly_sub(const PolyP& a, const PolyP& b);

// number of distinct roots of f in F_p: deg gcd(x^p - x, f)
size_t count_roots_fp(const PolyP& f);
std::vector<uint32_t> roots_fp(const PolyP& f);  // the roots themselves

}  // namespace relserre::arith
