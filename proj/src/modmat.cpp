#include "relserre/modmat.hpp"

#include <numeric>
#include <sstream>

namespace relserre::modmat {

uint32_t reduce_mod(int64_t x, uint32_t n) {
    int64_t r = x % static_cast<int64_t>(n);
    if (r < 0) r += n;
    return static_cast<uint32_t>(r);
}

ResidueMatrix::ResidueMatrix(uint32_t mod, int64_t a_, int64_t b_, int64_t c_, int64_t d_) {
    require(mod >= 2, ErrorKind::Parse, "matrix modulus must be >= 2");
    n = mod;
    a = reduce_mod(a_, mod);
    b = reduce_mod(b_, mod);
    c = reduce_mod(c_, mod);
    d = reduce_mod(d_, mod);
}

ResidueMatrix identity(uint32_t n) { return ResidueMatrix(n, 1, 0, 0, 1); }

static uint32_t mulmod(uint32_t x, uint32_t y, uint32_t n) {
    return static_cast<uint32_t>((static_cast<uint64_t>(x) * y) % n);
}

static uint32_t addmod(uint32_t x, uint32_t y, uint32_t n) {
    uint64_t s = static_cast<uint64_t>(x) + y;
    return static_cast<uint32_t>(s >= n ? s - n : s);
}

static uint32_t submod(uint32_t x, uint32_t y, uint32_t n) {
    return x >= y ? x - y : x + n - y;
}

ResidueMatrix mat_mul(const ResidueMatrix& A, const ResidueMatrix& B) {
    require(A.n == B.n, ErrorKind::Inconsistency,
            "modulus mismatch in matrix product: " + std::to_string(A.n) + " vs " +
                std::to_string(B.n));
    uint32_t n = A.n;
    ResidueMatrix R;
    R.n = n;
    R.a = addmod(mulmod(A.a, B.a, n), mulmod(A.b, B.c, n), n);
    R.b = addmod(mulmod(A.a, B.b, n), mulmod(A.b, B.d, n), n);
    R.c = addmod(mulmod(A.c, B.a, n), mulmod(A.d, B.c, n), n);
    R.d = addmod(mulmod(A.c, B.b, n), mulmod(A.d, B.d, n), n);
    return R;
}

uint32_t det(const ResidueMatrix& A) {
    return submod(mulmod(A.a, A.d, A.n), mulmod(A.b, A.c, A.n), A.n);
}

uint32_t trace(const ResidueMatrix& A) { return addmod(A.a, A.d, A.n); }

bool is_invertible(const ResidueMatrix& A) {
    return std::gcd(static_cast<uint64_t>(det(A)), static_cast<uint64_t>(A.n)) == 1;
}

// Inverse of a unit mod n by extended Euclid.
static uint32_t unit_inverse(uint32_t x, uint32_t n) {
    int64_t r0 = n, r1 = x % n, s0 = 0, s1 = 1;
    while (r1 != 0) {
        int64_t q = r0 / r1;
        r0 -= q * r1;
        std::swap(r0, r1);
        s0 -= q * s1;
        std::swap(s0, s1);
    }
    require(r0 == 1, ErrorKind::Inconsistency,
            std::to_string(x) + " is not a unit mod " + std::to_string(n));
    return reduce_mod(s0, n);
}

ResidueMatrix mat_inv(const ResidueMatrix& A) {
    uint32_t dt = det(A);
    require(std::gcd(static_cast<uint64_t>(dt), static_cast<uint64_t>(A.n)) == 1,
            ErrorKind::Inconsistency,
            "matrix not invertible mod " + std::to_string(A.n) + ": det = " +
                std::to_string(dt));
    uint32_t di = unit_inverse(dt, A.n);
    uint32_t n = A.n;
    ResidueMatrix R;
    R.n = n;
    R.a = mulmod(A.d, di, n);
    R.b = mulmod(submod(0, A.b, n), di, n);
    R.c = mulmod(submod(0, A.c, n), di, n);
    R.d = mulmod(A.a, di, n);
    return R;
}

CharPolyData char_poly(const ResidueMatrix& A) { return CharPolyData{A.n, trace(A), det(A)}; }

ResidueMatrix project(const ResidueMatrix& A, uint32_t m) {
    require(m >= 1 && A.n % m == 0, ErrorKind::Inconsistency,
            "cannot reduce mod " + std::to_string(m) + " a matrix mod " + std::to_string(A.n));
    require(m >= 2, ErrorKind::Inconsistency, "reduction target modulus must be >= 2");
    return ResidueMatrix(m, A.a % m, A.b % m, A.c % m, A.d % m);
}

std::vector<std::pair<uint32_t, uint32_t>> prime_power_factorization(uint32_t n) {
    std::vector<std::pair<uint32_t, uint32_t>> out;
    for (uint32_t p = 2; static_cast<uint64_t>(p) * p <= n; ++p) {
        if (n % p == 0) {
            uint32_t q = 1;
            while (n % p == 0) {
                n /= p;
                q *= p;
            }
            out.emplace_back(p, q);
        }
    }
    if (n > 1) out.emplace_back(n, n);
    return out;
}

std::vector<ResidueMatrix> crt_split(const ResidueMatrix& A) {
    auto fac = prime_power_factorization(A.n);
    std::vector<ResidueMatrix> parts;
    parts.reserve(fac.size());
    for (auto [p, q] : fac) parts.push_back(project(A, q));
    return parts;
}

ResidueMatrix crt_join(const std::vector<ResidueMatrix>& parts) {
    require(!parts.empty(), ErrorKind::Inconsistency, "crt_join of empty list");
    // Pairwise-coprime check, then iterated 2-part CRT.
    uint64_t n = 1;
    for (const auto& P : parts) {
        require(std::gcd(n, static_cast<uint64_t>(P.n)) == 1, ErrorKind::Inconsistency,
                "crt_join: component moduli not coprime");
        n *= P.n;
        require(n <= 0xFFFFFFFFull, ErrorKind::ResourceCap, "crt_join: modulus exceeds 32 bits");
    }
    auto lift_entry = [](uint32_t r1, uint32_t n1, uint32_t r2, uint32_t n2) -> uint32_t {
        // x = r1 mod n1, x = r2 mod n2
        uint64_t inv = unit_inverse(n1 % n2, n2);
        uint64_t t = ((r2 + static_cast<uint64_t>(n2) - r1 % n2) * inv) % n2;
        return static_cast<uint32_t>((r1 + static_cast<uint64_t>(n1) * t) % (static_cast<uint64_t>(n1) * n2));
    };
    ResidueMatrix R = parts[0];
    for (size_t i = 1; i < parts.size(); ++i) {
        const auto& P = parts[i];
        uint32_t m = R.n * P.n;
        ResidueMatrix J;
        J.n = m;
        J.a = lift_entry(R.a, R.n, P.a, P.n);
        J.b = lift_entry(R.b, R.n, P.b, P.n);
        J.c = lift_entry(R.c, R.n, P.c, P.n);
        J.d = lift_entry(R.d, R.n, P.d, P.n);
        R = J;
    }
    return R;
}

uint64_t pack_key(uint32_t n, uint32_t a, uint32_t b, uint32_t c, uint32_t d) {
    // n <= 65535 keeps ((a*n+b)*n+c)*n+d < 2^64.
    uint64_t k = a;
    k = k * n + b;
    k = k * n + c;
    k = k * n + d;
    return k;
}

uint64_t pack_key(const ResidueMatrix& A) {
    require(A.n <= 65535, ErrorKind::ResourceCap,
            "packed keys require modulus <= 65535, got " + std::to_string(A.n));
    return pack_key(A.n, A.a, A.b, A.c, A.d);
}

ResidueMatrix unpack_key(uint32_t n, uint64_t key) {
    ResidueMatrix R;
    R.n = n;
    R.d = static_cast<uint32_t>(key % n);
    key /= n;
    R.c = static_cast<uint32_t>(key % n);
    key /= n;
    R.b = static_cast<uint32_t>(key % n);
    key /= n;
    R.a = static_cast<uint32_t>(key);
    return R;
}

uint64_t mul_keys(uint32_t n, uint64_t x, uint64_t y) {
    uint64_t n2 = static_cast<uint64_t>(n) * n;
    uint64_t n3 = n2 * n;
    uint32_t xa = static_cast<uint32_t>(x / n3), xb = static_cast<uint32_t>(x / n2 % n),
             xc = static_cast<uint32_t>(x / n % n), xd = static_cast<uint32_t>(x % n);
    uint32_t ya = static_cast<uint32_t>(y / n3), yb = static_cast<uint32_t>(y / n2 % n),
             yc = static_cast<uint32_t>(y / n % n), yd = static_cast<uint32_t>(y % n);
    uint64_t ra = (static_cast<uint64_t>(xa) * ya + static_cast<uint64_t>(xb) * yc) % n;
    uint64_t rb = (static_cast<uint64_t>(xa) * yb + static_cast<uint64_t>(xb) * yd) % n;
    uint64_t rc = (static_cast<uint64_t>(xc) * ya + static_cast<uint64_t>(xd) * yc) % n;
    uint64_t rd = (static_cast<uint64_t>(xc) * yb + static_cast<uint64_t>(xd) * yd) % n;
    return ((ra * n + rb) * n + rc) * n + rd;
}

uint64_t inv_key(uint32_t n, uint64_t x) { return pack_key(mat_inv(unpack_key(n, x))); }

uint64_t euler_phi(uint32_t n) {
    uint64_t r = n;
    for (auto [p, q] : prime_power_factorization(n)) r = r / p * (p - 1);
    return r;
}

uint64_t gl2_order(uint32_t n) {
    // q^4 (1-1/p)(1-1/p^2) per prime power q = p^k, multiplicative by CRT.
    uint64_t r = 1;
    for (auto [p, q] : prime_power_factorization(n)) {
        uint64_t q4 = 1;
        for (int i = 0; i < 4; ++i) q4 *= q;
        r *= q4 / p / (static_cast<uint64_t>(p) * p) * (p - 1) * (static_cast<uint64_t>(p) * p - 1);
    }
    return r;
}

uint64_t sl2_order(uint32_t n) { return gl2_order(n) / euler_phi(n); }

std::string to_text(const ResidueMatrix& A) {
    std::ostringstream os;
    os << A.a << ',' << A.b << ',' << A.c << ',' << A.d;
    return os.str();
}

ResidueMatrix parse_matrix(const std::string& text, uint32_t n) {
    std::array<int64_t, 4> e{};
    size_t pos = 0;
    for (int i = 0; i < 4; ++i) {
        size_t next = text.find(',', pos);
        std::string tok = text.substr(pos, next == std::string::npos ? next : next - pos);
        try {
            size_t used = 0;
            e[i] = std::stoll(tok, &used);
            while (used < tok.size() && std::isspace(static_cast<unsigned char>(tok[used]))) ++used;
            require(used == tok.size() && !tok.empty(), ErrorKind::Parse, "");
        } catch (const Error&) {
            fail(ErrorKind::Parse, "bad matrix entry '" + tok + "' in \"" + text + "\"");
        } catch (const std::exception&) {
            fail(ErrorKind::Parse, "bad matrix entry '" + tok + "' in \"" + text + "\"");
        }
        require((i == 3) == (next == std::string::npos), ErrorKind::Parse,
                "matrix text must have exactly 4 entries: \"" + text + "\"");
        pos = next + 1;
    }
    return ResidueMatrix(n, e[0], e[1], e[2], e[3]);
}

std::vector<ResidueMatrix> parse_generator_list(const std::string& text, uint32_t n) {
    std::vector<ResidueMatrix> out;
    size_t pos = 0;
    while (pos <= text.size()) {
        size_t next = text.find(';', pos);
        std::string tok =
            text.substr(pos, next == std::string::npos ? std::string::npos : next - pos);
        if (!tok.empty()) out.push_back(parse_matrix(tok, n));
        if (next == std::string::npos) break;
        pos = next + 1;
    }
    return out;
}

std::string generator_list_text(const std::vector<ResidueMatrix>& gens) {
    std::string s;
    for (size_t i = 0; i < gens.size(); ++i) {
        if (i) s += ';';
        s += to_text(gens[i]);
    }
    return s;
}

}  // namespace relserre::modmat
