#include "relserre/arith.hpp"

#include <algorithm>
#include <numeric>

namespace relserre::arith {

uint64_t mulmod_u64(uint64_t a, uint64_t b, uint64_t m) {
    return static_cast<uint64_t>(static_cast<unsigned __int128>(a) * b % m);
}

uint64_t powmod_u64(uint64_t a, uint64_t e, uint64_t m) {
    uint64_t r = 1 % m;
    a %= m;
    while (e) {
        if (e & 1) r = mulmod_u64(r, a, m);
        a = mulmod_u64(a, a, m);
        e >>= 1;
    }
    return r;
}

bool is_prime_u64(uint64_t n) {
    if (n < 2) return false;
    for (uint64_t p : {2ull, 3ull, 5ull, 7ull, 11ull, 13ull, 17ull, 19ull, 23ull, 29ull, 31ull, 37ull}) {
        if (n % p == 0) return n == p;
    }
    uint64_t d = n - 1;
    int s = 0;
    while ((d & 1) == 0) {
        d >>= 1;
        ++s;
    }
    // deterministic witness set for n < 2^64
    for (uint64_t a : {2ull, 3ull, 5ull, 7ull, 11ull, 13ull, 17ull, 19ull, 23ull, 29ull, 31ull, 37ull}) {
        uint64_t x = powmod_u64(a, d, n);
        if (x == 1 || x == n - 1) continue;
        bool witness = true;
        for (int i = 1; i < s; ++i) {
            x = mulmod_u64(x, x, n);
            if (x == n - 1) {
                witness = false;
                break;
            }
        }
        if (witness) return false;
    }
    return true;
}

uint64_t pollard_rho(uint64_t n) {
    if (n % 2 == 0) return 2;
    for (uint64_t c = 1;; ++c) {
        auto step = [&](uint64_t x) { return (mulmod_u64(x, x, n) + c) % n; };
        uint64_t x = 2, y = 2, d = 1;
        while (d == 1) {
            x = step(x);
            y = step(step(y));
            uint64_t diff = x > y ? x - y : y - x;
            if (diff == 0) break;
            d = std::gcd(diff, n);
        }
        if (d != 1 && d != n) return d;
    }
}

static void factor_u64_into(uint64_t n, std::vector<uint64_t>& primes) {
    if (n == 1) return;
    if (is_prime_u64(n)) {
        primes.push_back(n);
        return;
    }
    uint64_t d = pollard_rho(n);
    factor_u64_into(d, primes);
    factor_u64_into(n / d, primes);
}

std::vector<std::pair<uint64_t, unsigned>> factor_u64(uint64_t n) {
    require(n >= 1, ErrorKind::Inconsistency, "factor_u64: zero input");
    std::vector<uint64_t> primes;
    for (uint64_t p = 2; p <= 1000000 && p * p <= n; p += (p == 2 ? 1 : 2)) {
        while (n % p == 0) {
            primes.push_back(p);
            n /= p;
        }
    }
    factor_u64_into(n, primes);
    std::sort(primes.begin(), primes.end());
    std::vector<std::pair<uint64_t, unsigned>> out;
    for (uint64_t p : primes) {
        if (!out.empty() && out.back().first == p)
            ++out.back().second;
        else
            out.emplace_back(p, 1);
    }
    return out;
}

std::vector<std::pair<uint64_t, unsigned>> factor_mpz(const mpz_class& n_in) {
    mpz_class n = abs(n_in);
    require(n != 0, ErrorKind::Inconsistency, "factorization of zero");
    std::vector<std::pair<uint64_t, unsigned>> out;
    for (uint64_t p = 2; p <= 1000000; p += (p == 2 ? 1 : 2)) {
        if (mpz_cmp_ui(n.get_mpz_t(), p * p) < 0) break;
        if (mpz_divisible_ui_p(n.get_mpz_t(), p)) {
            unsigned e = 0;
            while (mpz_divisible_ui_p(n.get_mpz_t(), p)) {
                mpz_divexact_ui(n.get_mpz_t(), n.get_mpz_t(), p);
                ++e;
            }
            out.emplace_back(p, e);
        }
    }
    if (n != 1) {
        require(n.fits_ulong_p() || mpz_sizeinbase(n.get_mpz_t(), 2) <= 64, ErrorKind::ResourceCap,
                "factorization cofactor exceeds 64 bits; cannot certify: " + n.get_str());
        uint64_t m = 0;
        {
            mpz_class lo = n & mpz_class(0xFFFFFFFFul);
            mpz_class hi = n >> 32;
            m = (static_cast<uint64_t>(hi.get_ui()) << 32) | lo.get_ui();
        }
        for (auto [p, e] : factor_u64(m)) out.emplace_back(p, e);
    }
    std::sort(out.begin(), out.end());
    return out;
}

std::vector<uint32_t> primes_up_to(uint32_t bound) {
    std::vector<bool> comp(bound + 1, false);
    std::vector<uint32_t> out;
    for (uint32_t i = 2; i <= bound; ++i) {
        if (!comp[i]) {
            out.push_back(i);
            for (uint64_t j = static_cast<uint64_t>(i) * i; j <= bound; j += i) comp[j] = true;
        }
    }
    return out;
}

int kronecker(const mpz_class& a, const mpz_class& n) {
    return mpz_kronecker(a.get_mpz_t(), n.get_mpz_t());
}

int kronecker_ll(long long a, long long n) {
    return mpz_kronecker(mpz_class(static_cast<long>(a)).get_mpz_t(),
                         mpz_class(static_cast<long>(n)).get_mpz_t());
}

long long squarefree_part(const mpz_class& n) {
    require(n != 0, ErrorKind::Inconsistency, "squarefree part of zero");
    mpz_class r = 1;
    for (auto [p, e] : factor_mpz(n)) {
        if (e % 2) r *= mpz_class(static_cast<unsigned long>(p));
    }
    if (n < 0) r = -r;
    require(r.fits_slong_p(), ErrorKind::ResourceCap, "squarefree part exceeds 64 bits");
    return r.get_si();
}

bool is_perfect_square(const mpz_class& n) {
    return n >= 0 && mpz_perfect_square_p(n.get_mpz_t());
}

mpz_class isqrt(const mpz_class& n) {
    mpz_class r;
    mpz_sqrt(r.get_mpz_t(), n.get_mpz_t());
    return r;
}

// ---- polynomials over F_p ----

void PolyP::normalize() {
    while (!c.empty() && c.back() == 0) c.pop_back();
}

PolyP poly_from_mpz(const std::vector<mpz_class>& coeffs, uint32_t p) {
    PolyP f;
    f.p = p;
    for (const auto& x : coeffs) {
        mpz_class r = x % p;
        if (r < 0) r += p;
        f.c.push_back(static_cast<uint32_t>(r.get_ui()));
    }
    f.normalize();
    return f;
}

PolyP poly_mul(const PolyP& a, const PolyP& b) {
    PolyP r;
    r.p = a.p;
    if (a.is_zero() || b.is_zero()) return r;
    std::vector<uint64_t> acc(a.c.size() + b.c.size() - 1, 0);
    for (size_t i = 0; i < a.c.size(); ++i) {
        if (!a.c[i]) continue;
        for (size_t j = 0; j < b.c.size(); ++j) {
            acc[i + j] = (acc[i + j] + static_cast<uint64_t>(a.c[i]) * b.c[j]) % a.p;
        }
    }
    r.c.assign(acc.begin(), acc.end());
    r.normalize();
    return r;
}

PolyP poly_mod(const PolyP& a, const PolyP& m) {
    require(!m.is_zero(), ErrorKind::Inconsistency, "poly_mod by zero");
    PolyP r = a;
    uint32_t p = a.p;
    uint32_t lead = m.c.back();
    uint64_t lead_inv = powmod_u64(lead, p - 2, p);  // p prime
    while (!r.is_zero() && r.c.size() >= m.c.size()) {
        uint64_t q = mulmod_u64(r.c.back(), lead_inv, p);
        size_t shift = r.c.size() - m.c.size();
        for (size_t i = 0; i < m.c.size(); ++i) {
            uint64_t sub = mulmod_u64(q, m.c[i], p);
            uint64_t cur = r.c[shift + i];
            r.c[shift + i] = static_cast<uint32_t>((cur + p - sub) % p);
        }
        r.normalize();
    }
    return r;
}

PolyP poly_sub(const PolyP& a, const PolyP& b) {
    PolyP r;
    r.p = a.p;
    r.c.resize(std::max(a.c.size(), b.c.size()), 0);
    for (size_t i = 0; i < r.c.size(); ++i) {
        uint32_t x = i < a.c.size() ? a.c[i] : 0;
        uint32_t y = i < b.c.size() ? b.c[i] : 0;
        r.c[i] = (x + a.p - y) % a.p;
    }
    r.normalize();
    return r;
}

PolyP poly_gcd(PolyP a, PolyP b) {
    while (!b.is_zero()) {
        PolyP r = poly_mod(a, b);
        a = std::move(b);
        b = std::move(r);
    }
    // monic normalization
    if (!a.is_zero()) {
        uint64_t inv = powmod_u64(a.c.back(), a.p - 2, a.p);
        for (auto& x : a.c) x = static_cast<uint32_t>(mulmod_u64(x, inv, a.p));
    }
    return a;
}

PolyP poly_powmod_x(uint64_t e, const PolyP& m) {
    PolyP base;
    base.p = m.p;
    base.c = {0, 1};
    base = poly_mod(base, m);
    PolyP r;
    r.p = m.p;
    r.c = {1};
    while (e) {
        if (e & 1) r = poly_mod(poly_mul(r, base), m);
        base = poly_mod(poly_mul(base, base), m);
        e >>= 1;
    }
    return r;
}

size_t count_roots_fp(const PolyP& f) {
    require(!f.is_zero(), ErrorKind::Inconsistency, "root count of zero polynomial");
    // gcd(x^p - x, f)
    PolyP xp = poly_powmod_x(f.p, f);
    PolyP x;
    x.p = f.p;
    x.c = {0, 1};
    PolyP g = poly_gcd(poly_sub(xp, poly_mod(x, f)), f);
    return g.is_zero() ? 0 : g.degree();
}

std::vector<uint32_t> roots_fp(const PolyP& f) {
    std::vector<uint32_t> out;
    for (uint32_t x = 0; x < f.p; ++x) {
        uint64_t v = 0;
        for (size_t i = f.c.size(); i-- > 0;) v = (v * x + f.c[i]) % f.p;
        if (v == 0) out.push_back(x);
    }
    return out;
}

}  // namespace relserre::arith
