#pragma once

#include <gmpxx.h>

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "relserre/error.hpp"

namespace relserre::ellq {

// Integral Weierstrass model y^2 + a1 xy + a3 y = x^3 + a2 x^2 + a4 x + a6,
// together with a reduced short form y^2 = x^3 + Ax + B (obtained from
// -27c4/-54c6 by stripping u^4|A, u^6|B prime powers). The short form has
// the same 2-division field and the same discriminant up to 12th powers.
struct CurveModel {
    std::array<long long, 5> a{};  // a1, a2, a3, a4, a6
    mpz_class disc;                // discriminant of the given model
    long long A = 0, B = 0;        // reduced short model
    mpz_class disc_short;          // -16(4A^3 + 27B^2)
};

CurveModel make_curve(long long a1, long long a2, long long a3, long long a4, long long a6);
CurveModel make_curve_short(long long A, long long B);

// CLI / CSV curve formats: "a1,a2,a3,a4,a6" or "A,B".
CurveModel parse_curve(const std::string& text);
std::string curve_text(const CurveModel& E);

// 2-division cubic factorization shape over Q (computed on the short model).
struct Split {
    long long r1, r2, r3;  // sorted by (|r|, r)
};
struct PartialSplit {
    long long a, b, c;  // (x^2 + ax + b)(x + c), quadratic irreducible
};
struct IrreducibleCubic {};  // cyclic: disc is a nonzero square -> mod-2 image 2Cn
struct FullMod2 {};          // irreducible, nonsquare disc -> full GL2(Z/2)
using TwoTorsionShape = std::variant<Split, PartialSplit, IrreducibleCubic, FullMod2>;

TwoTorsionShape classify_mod2(const CurveModel& E);
const char* shape_class_name(const TwoTorsionShape& s);  // "2Cs","2B","2Cn","full"

// ---- entanglement data (quadratic/cubic subfield bookkeeping) ----

long long n_prime(long long N);  // squarefree N >= 1 -> N' with N' = 1 mod 4
int k_of(long long N);           // 3 if N even, 2 if N odd

struct QuadEntanglement {
    long long N = 0;       // squarefree positive
    long long Nprime = 0;  // N' (odd, = 1 mod 4)
    int k = 2;             // 2 or 3
};

struct EntanglementData {
    std::vector<QuadEntanglement> quads;
    // 2Cn only:
    long long D_E = 0;            // (sqrt(disc))_sf, positive
    unsigned long long cubic_f = 0;  // conductor of the cubic 2-division field
};

// S-set of a split curve: squarefree parts of {A,B,C,AB,AC,BC,ABC} minus {1,2}
// with A = r1-r2, B = r1-r3, C = r2-r3.
std::vector<long long> s_set_2cs(const Split& s);
std::vector<long long> s_set_2b(const PartialSplit& s);

// two_adic_index in {6,12,24} selects how many N_i exist (3/2/1).
EntanglementData entanglement_data_2cs(const Split& s, int two_adic_index);
// is_level2_label: true for the index-3 level-2 image (two triples), false
// otherwise (single triple with N' != 1).
EntanglementData entanglement_data_2b(const PartialSplit& s, bool is_level2_label);
// with_quadratic: true for the level-2 image (extra D_E entanglement).
EntanglementData entanglement_data_2cn(const CurveModel& E, bool with_quadratic);

// Conductor of the cyclic cubic field Q[x]/(x^3 + c2 x^2 + c1 x + c0);
// requires a nonzero square discriminant. Computed as sqrt(disc(O_K)) with
// the maximal order found by p-maximalization at every p^2 | disc, and
// checked against f = 9^e * (distinct primes = 1 mod 3).
unsigned long long cubic_field_conductor(const mpz_class& c2, const mpz_class& c1,
                                         const mpz_class& c0);

// ---- point counts ----

bool is_good_prime(const CurveModel& E, uint32_t p);
// a_p by naive counting; requires p good and p <= bound.
long long ap(const CurveModel& E, uint32_t p, uint32_t bound = 100000);
// #E(F_p) including the point at infinity.
unsigned long long point_count(const CurveModel& E, uint32_t p, uint32_t bound = 100000);

}  // namespace relserre::ellq
