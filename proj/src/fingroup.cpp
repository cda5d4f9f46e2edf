#include "relserre/fingroup.hpp"

#include <algorithm>
#include <map>
#include <numeric>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

namespace relserre::fingroup {

using modmat::identity;
using modmat::mat_inv;
using modmat::mat_mul;
using modmat::mul_keys;
using modmat::pack_key;
using modmat::project;
using modmat::unpack_key;

namespace {

// Open-addressing set of packed keys; sentinel = ~0 (never a valid key since
// moduli are capped at 65535, so keys < 65535^4 < 2^64 - 1).
class KeySet {
  public:
    explicit KeySet(size_t expect = 64) { rehash(round_up(expect * 2)); }

    bool insert(uint64_t k) {
        if ((size_ + 1) * 10 >= cap_ * 7) rehash(cap_ * 2);
        size_t i = slot(k);
        while (table_[i] != kEmpty) {
            if (table_[i] == k) return false;
            i = (i + 1) & mask_;
        }
        table_[i] = k;
        ++size_;
        return true;
    }

    bool contains(uint64_t k) const {
        size_t i = slot(k);
        while (table_[i] != kEmpty) {
            if (table_[i] == k) return true;
            i = (i + 1) & mask_;
        }
        return false;
    }

    size_t size() const { return size_; }

  private:
    static constexpr uint64_t kEmpty = ~0ull;

    static size_t round_up(size_t n) {
        size_t c = 64;
        while (c < n) c <<= 1;
        return c;
    }

    size_t slot(uint64_t k) const {
        uint64_t h = k * 0x9E3779B97F4A7C15ull;
        return static_cast<size_t>(h >> shift_) & mask_;
    }

    void rehash(size_t newcap) {
        std::vector<uint64_t> old = std::move(table_);
        cap_ = round_up(newcap);
        mask_ = cap_ - 1;
        shift_ = 64 - std::countr_zero(cap_);
        table_.assign(cap_, kEmpty);
        size_ = 0;
        for (uint64_t k : old)
            if (k != kEmpty) insert(k);
    }

    std::vector<uint64_t> table_;
    size_t cap_ = 0, mask_ = 0, size_ = 0;
    int shift_ = 64;
};

uint64_t vec_hash(const std::vector<uint64_t>& v) {
    uint64_t h = 0xcbf29ce484222325ull ^ v.size();
    for (uint64_t x : v) {
        h ^= x + 0x9E3779B97F4A7C15ull + (h << 6) + (h >> 2);
    }
    return h;
}

// Deduplicating store of subgroups by exact element set.
class SubgroupStore {
  public:
    // returns index, or SIZE_MAX if already present
    size_t add(std::vector<uint64_t> elems) {
        uint64_t h = vec_hash(elems);
        auto range = by_hash_.equal_range(h);
        for (auto it = range.first; it != range.second; ++it) {
            if (sets_[it->second] == elems) return SIZE_MAX;
        }
        sets_.push_back(std::move(elems));
        by_hash_.emplace(h, sets_.size() - 1);
        return sets_.size() - 1;
    }

    bool seen(const std::vector<uint64_t>& elems) const {
        uint64_t h = vec_hash(elems);
        auto range = by_hash_.equal_range(h);
        for (auto it = range.first; it != range.second; ++it) {
            if (sets_[it->second] == elems) return true;
        }
        return false;
    }

    const std::vector<std::vector<uint64_t>>& sets() const { return sets_; }

  private:
    std::vector<std::vector<uint64_t>> sets_;
    std::unordered_multimap<uint64_t, size_t> by_hash_;
};

std::vector<uint64_t> gen_keys(const GroupSlice& G) {
    std::vector<uint64_t> ks;
    ks.reserve(G.generators().size());
    for (const auto& g : G.generators()) ks.push_back(pack_key(g));
    return ks;
}

}  // namespace

GroupSlice::GroupSlice(uint32_t modulus, std::vector<ResidueMatrix> gens)
    : modulus_(modulus), gens_(std::move(gens)) {
    for (const auto& g : gens_) {
        require(g.n == modulus_, ErrorKind::Inconsistency,
                "generator modulus mismatch in group slice");
        require(modmat::is_invertible(g), ErrorKind::Inconsistency,
                "generator not invertible mod " + std::to_string(modulus_) + ": " +
                    modmat::to_text(g));
    }
}

const std::vector<uint64_t>& GroupSlice::elements() const {
    require(elems_ != nullptr, ErrorKind::Inconsistency,
            "group slice not materialized (modulus " + std::to_string(modulus_) + ")");
    return *elems_;
}

uint64_t GroupSlice::order() const {
    require(order_ != 0, ErrorKind::Inconsistency, "group order not known");
    return order_;
}

bool GroupSlice::contains_key(uint64_t key) const {
    const auto& e = elements();
    return std::binary_search(e.begin(), e.end(), key);
}

bool GroupSlice::contains(const ResidueMatrix& g) const {
    require(g.n == modulus_, ErrorKind::Inconsistency, "membership test across moduli");
    return contains_key(pack_key(g));
}

GroupSlice GroupSlice::with_elements(uint32_t modulus, std::vector<ResidueMatrix> gens,
                                     std::vector<uint64_t> sorted_elems) {
    GroupSlice G(modulus, std::move(gens));
    G.order_ = sorted_elems.size();
    G.elems_ = std::make_shared<const std::vector<uint64_t>>(std::move(sorted_elems));
    return G;
}

GroupSlice GroupSlice::with_order_only(uint32_t modulus, std::vector<ResidueMatrix> gens,
                                       uint64_t order) {
    GroupSlice G(modulus, std::move(gens));
    G.order_ = order;
    return G;
}

bool GroupSlice::same_element_set(const GroupSlice& other) const {
    return modulus_ == other.modulus_ && elements() == other.elements();
}

std::vector<uint64_t> closure_keys(uint32_t modulus, const std::vector<uint64_t>& seeds,
                                   uint64_t cap) {
    uint64_t id = pack_key(identity(modulus));
    KeySet seen(seeds.size() + 16);
    std::vector<uint64_t> out;
    std::vector<uint64_t> work;
    auto push = [&](uint64_t k) {
        if (seen.insert(k)) {
            require(seen.size() <= cap, ErrorKind::ResourceCap,
                    "group closure exceeds cap of " + std::to_string(cap) +
                        " elements at modulus " + std::to_string(modulus));
            out.push_back(k);
            work.push_back(k);
        }
    };
    push(id);
    for (uint64_t s : seeds) push(s);
    // Right Cayley orbit; in a finite cancellative setting this is the
    // generated subgroup (inverses arise as powers).
    std::vector<uint64_t> gens;
    for (uint64_t s : seeds)
        if (s != id) gens.push_back(s);
    std::sort(gens.begin(), gens.end());
    gens.erase(std::unique(gens.begin(), gens.end()), gens.end());
    for (size_t i = 0; i < work.size(); ++i) {
        uint64_t x = work[i];
        for (uint64_t g : gens) push(mul_keys(modulus, x, g));
    }
    std::sort(out.begin(), out.end());
    return out;
}

GroupSlice closure(const std::vector<ResidueMatrix>& gens, uint32_t modulus, uint64_t cap) {
    std::vector<uint64_t> seeds;
    seeds.reserve(gens.size());
    for (const auto& g : gens) {
        require(g.n == modulus, ErrorKind::Inconsistency, "closure: generator modulus mismatch");
        require(modmat::is_invertible(g), ErrorKind::Inconsistency,
                "closure: generator not invertible: " + modmat::to_text(g));
        seeds.push_back(pack_key(g));
    }
    auto elems = closure_keys(modulus, seeds, cap);
    return GroupSlice::with_elements(modulus, gens, std::move(elems));
}

GroupSlice trivial_group(uint32_t modulus) {
    return closure({identity(modulus)}, modulus);
}

namespace {

// Generators of (Z/q)^x for a prime power q.
std::vector<uint32_t> unit_group_generators(uint32_t q) {
    if (q <= 2) return {};
    if (q == 4) return {3};
    if (q % 2 == 0 && (q & (q - 1)) == 0) return {q - 1, 5};  // 2^k, k >= 3
    // odd prime power: cyclic; search for a primitive root
    uint64_t phi = modmat::euler_phi(q);
    auto fac = modmat::prime_power_factorization(static_cast<uint32_t>(phi));
    auto powmod = [&](uint64_t b, uint64_t e) {
        uint64_t r = 1 % q;
        b %= q;
        while (e) {
            if (e & 1) r = r * b % q;
            b = b * b % q;
            e >>= 1;
        }
        return r;
    };
    for (uint32_t g = 2; g < q; ++g) {
        if (std::gcd(static_cast<uint64_t>(g), static_cast<uint64_t>(q)) != 1) continue;
        bool primitive = true;
        for (auto [p, pk] : fac) {
            if (powmod(g, phi / p) == 1) {
                primitive = false;
                break;
            }
        }
        if (primitive) return {g};
    }
    fail(ErrorKind::Inconsistency, "no primitive root mod " + std::to_string(q));
}

std::vector<ResidueMatrix> gl2_generators(uint32_t n) {
    auto fac = modmat::prime_power_factorization(n);
    std::vector<ResidueMatrix> gens;
    for (size_t i = 0; i < fac.size(); ++i) {
        uint32_t q = fac[i].second;
        std::vector<ResidueMatrix> local;
        local.push_back(ResidueMatrix(q, 1, 1, 0, 1));
        local.push_back(ResidueMatrix(q, 1, 0, 1, 1));
        for (uint32_t u : unit_group_generators(q)) local.push_back(ResidueMatrix(q, u, 0, 0, 1));
        for (const auto& L : local) {
            std::vector<ResidueMatrix> parts;
            for (size_t j = 0; j < fac.size(); ++j)
                parts.push_back(j == i ? L : identity(fac[j].second));
            gens.push_back(modmat::crt_join(parts));
        }
    }
    return gens;
}

}  // namespace

GroupSlice gl2(uint32_t n) {
    GroupSlice G = closure(gl2_generators(n), n);
    require(G.order() == modmat::gl2_order(n), ErrorKind::Inconsistency,
            "GL2 generator defect at modulus " + std::to_string(n));
    return G;
}

GroupSlice sl2(uint32_t n) {
    auto fac = modmat::prime_power_factorization(n);
    std::vector<ResidueMatrix> gens;
    for (size_t i = 0; i < fac.size(); ++i) {
        for (const auto& L : {ResidueMatrix(fac[i].second, 1, 1, 0, 1),
                              ResidueMatrix(fac[i].second, 1, 0, 1, 1)}) {
            std::vector<ResidueMatrix> parts;
            for (size_t j = 0; j < fac.size(); ++j)
                parts.push_back(j == i ? L : identity(fac[j].second));
            gens.push_back(modmat::crt_join(parts));
        }
    }
    GroupSlice G = closure(gens, n);
    require(G.order() == modmat::sl2_order(n), ErrorKind::Inconsistency,
            "SL2 generator defect at modulus " + std::to_string(n));
    return G;
}

GroupSlice reduce_mod(const GroupSlice& G, uint32_t m) {
    require(m >= 2 && G.modulus() % m == 0, ErrorKind::Inconsistency,
            "reduce_mod: " + std::to_string(m) + " does not divide " +
                std::to_string(G.modulus()));
    std::vector<ResidueMatrix> gens;
    gens.reserve(G.generators().size());
    for (const auto& g : G.generators()) gens.push_back(project(g, m));
    if (m == G.modulus()) return G;
    if (!G.materialized()) return closure(gens, m);
    std::vector<uint64_t> img;
    img.reserve(G.elements().size());
    for (uint64_t k : G.elements()) img.push_back(pack_key(project(unpack_key(G.modulus(), k), m)));
    std::sort(img.begin(), img.end());
    img.erase(std::unique(img.begin(), img.end()), img.end());
    return GroupSlice::with_elements(m, std::move(gens), std::move(img));
}

GroupSlice preimage_at(const GroupSlice& G, uint32_t N, uint64_t cap) {
    uint32_t m = G.modulus();
    require(N % m == 0 && N > m, ErrorKind::Inconsistency, "preimage_at: modulus must properly lift");
    std::vector<ResidueMatrix> gens;
    for (const auto& g : G.generators())
        gens.push_back(ResidueMatrix(N, g.a, g.b, g.c, g.d));  // any lift works
    // kernel of GL2(Z/N) -> GL2(Z/m): I + m'*E_ij at every intermediate level
    // m' = m*d, d | N/m (a single level is not enough when N/m is not squarefree)
    uint32_t k = N / m;
    for (uint32_t d = 1; d < k; ++d) {
        if (k % d != 0) continue;
        uint32_t mp = m * d;
        gens.push_back(ResidueMatrix(N, 1 + mp, 0, 0, 1));
        gens.push_back(ResidueMatrix(N, 1, mp, 0, 1));
        gens.push_back(ResidueMatrix(N, 1, 0, mp, 1));
        gens.push_back(ResidueMatrix(N, 1, 0, 0, 1 + mp));
    }
    GroupSlice P = closure(gens, N, cap);
    uint64_t expected = G.order() * (modmat::gl2_order(N) / modmat::gl2_order(m));
    require(P.order() == expected, ErrorKind::Inconsistency,
            "preimage order mismatch: got " + std::to_string(P.order()) + ", expected " +
                std::to_string(expected));
    return P;
}

GroupSlice commutator_subgroup(const GroupSlice& G, uint64_t cap) {
    uint32_t n = G.modulus();
    const auto& elems = G.elements();
    std::vector<uint64_t> gks = gen_keys(G);
    std::vector<uint64_t> ginv;
    for (uint64_t g : gks) ginv.push_back(modmat::inv_key(n, g));

    // seeds [g, x] = g x g^-1 x^-1 over generators g and all x
    KeySet seedset(elems.size());
    std::vector<uint64_t> seeds;
    for (size_t i = 0; i < gks.size(); ++i) {
        for (uint64_t x : elems) {
            uint64_t xinv = modmat::inv_key(n, x);
            uint64_t k = mul_keys(n, mul_keys(n, gks[i], x), mul_keys(n, ginv[i], xinv));
            if (seedset.insert(k)) seeds.push_back(k);
        }
    }
    auto cur = closure_keys(n, seeds, cap);
    // normal closure under G: conjugate by generators until stable
    for (bool changed = true; changed;) {
        changed = false;
        std::vector<uint64_t> extra;
        for (size_t i = 0; i < gks.size(); ++i) {
            for (uint64_t x : cur) {
                uint64_t y = mul_keys(n, mul_keys(n, gks[i], x), ginv[i]);
                if (!std::binary_search(cur.begin(), cur.end(), y)) extra.push_back(y);
            }
        }
        if (!extra.empty()) {
            changed = true;
            std::vector<uint64_t> seeds2 = cur;
            seeds2.insert(seeds2.end(), extra.begin(), extra.end());
            cur = closure_keys(n, seeds2, cap);
        }
    }
    GroupSlice C = GroupSlice::with_elements(n, {}, std::move(cur));
    return GroupSlice::with_elements(n, small_generating_set(C),
                                     std::vector<uint64_t>(C.elements()));
}

uint64_t index_in(const GroupSlice& H, const GroupSlice& G) {
    require(H.modulus() == G.modulus(), ErrorKind::Inconsistency, "index_in: modulus mismatch");
    for (const auto& h : H.generators())
        require(G.contains(h), ErrorKind::Inconsistency,
                "index_in: not a subgroup (generator " + modmat::to_text(h) + " outside)");
    require(G.order() % H.order() == 0, ErrorKind::Inconsistency,
            "index_in: Lagrange violation");
    return G.order() / H.order();
}

std::vector<uint32_t> determinant_image(const GroupSlice& G) {
    uint32_t n = G.modulus();
    // subgroup of (Z/n)^x generated by the generator determinants
    std::vector<uint32_t> dets;
    for (const auto& g : G.generators()) dets.push_back(modmat::det(g));
    std::vector<uint32_t> out{1 % n};
    std::unordered_set<uint32_t> seen(out.begin(), out.end());
    std::vector<uint32_t> work = out;
    for (size_t i = 0; i < work.size(); ++i) {
        for (uint32_t d : dets) {
            uint32_t v = static_cast<uint32_t>(static_cast<uint64_t>(work[i]) * d % n);
            if (seen.insert(v).second) {
                out.push_back(v);
                work.push_back(v);
            }
        }
    }
    std::sort(out.begin(), out.end());
    return out;
}

bool det_surjective(const GroupSlice& G) {
    return determinant_image(G).size() == modmat::euler_phi(G.modulus());
}

bool is_subgroup_of(const GroupSlice& H, const GroupSlice& G) {
    if (H.modulus() != G.modulus()) return false;
    for (const auto& h : H.generators())
        if (!G.contains(h)) return false;
    return true;
}

bool is_normal_in(const GroupSlice& H, const GroupSlice& G) {
    uint32_t n = G.modulus();
    for (uint64_t g : G.elements()) {
        uint64_t gi = modmat::inv_key(n, g);
        for (const auto& h : H.generators()) {
            uint64_t y = mul_keys(n, mul_keys(n, g, pack_key(h)), gi);
            if (!H.contains_key(y)) return false;
        }
    }
    return true;
}

GroupSlice conjugate_subgroup(const GroupSlice& H, const ResidueMatrix& g) {
    uint32_t n = H.modulus();
    require(g.n == n, ErrorKind::Inconsistency, "conjugation across moduli");
    uint64_t gk = pack_key(g), gi = modmat::inv_key(n, gk);
    std::vector<uint64_t> elems;
    elems.reserve(H.elements().size());
    for (uint64_t x : H.elements()) elems.push_back(mul_keys(n, mul_keys(n, gk, x), gi));
    std::sort(elems.begin(), elems.end());
    std::vector<ResidueMatrix> gens;
    for (const auto& h : H.generators())
        gens.push_back(unpack_key(n, mul_keys(n, mul_keys(n, gk, pack_key(h)), gi)));
    return GroupSlice::with_elements(n, std::move(gens), std::move(elems));
}

std::vector<ResidueMatrix> small_generating_set(const GroupSlice& G) {
    uint32_t n = G.modulus();
    const auto& elems = G.elements();
    if (elems.size() == 1) return {identity(n)};
    std::vector<uint64_t> gens;
    std::vector<uint64_t> cur = {pack_key(identity(n))};
    while (cur.size() < elems.size()) {
        uint64_t next = 0;
        for (uint64_t e : elems) {
            if (!std::binary_search(cur.begin(), cur.end(), e)) {
                next = e;
                break;
            }
        }
        gens.push_back(next);
        std::vector<uint64_t> seeds = gens;
        seeds.insert(seeds.end(), cur.begin(), cur.end());
        cur = closure_keys(n, seeds, elems.size() + 1);
    }
    std::vector<ResidueMatrix> out;
    for (uint64_t g : gens) out.push_back(unpack_key(n, g));
    return out;
}

namespace {

GroupSlice slice_from_elems(uint32_t n, std::vector<uint64_t> elems) {
    GroupSlice tmp = GroupSlice::with_elements(n, {}, std::move(elems));
    auto gens = small_generating_set(tmp);
    return GroupSlice::with_elements(n, std::move(gens), std::vector<uint64_t>(tmp.elements()));
}

}  // namespace

std::vector<GroupSlice> all_subgroups(const GroupSlice& G, uint64_t cap) {
    require(G.order() <= cap, ErrorKind::ResourceCap,
            "all_subgroups: |G| = " + std::to_string(G.order()) + " exceeds cap " +
                std::to_string(cap));
    uint32_t n = G.modulus();
    // distinct cyclic subgroups
    SubgroupStore cyclics;
    for (uint64_t e : G.elements()) cyclics.add(closure_keys(n, {e}, G.order()));
    SubgroupStore store;
    store.add(closure_keys(n, {}, 1));
    for (const auto& c : cyclics.sets()) store.add(std::vector<uint64_t>(c));
    // join BFS
    for (size_t i = 0; i < store.sets().size(); ++i) {
        std::vector<uint64_t> base = store.sets()[i];
        for (const auto& c : cyclics.sets()) {
            if (std::includes(base.begin(), base.end(), c.begin(), c.end())) continue;
            std::vector<uint64_t> seeds = base;
            seeds.insert(seeds.end(), c.begin(), c.end());
            store.add(closure_keys(n, seeds, G.order()));
        }
    }
    std::vector<GroupSlice> out;
    out.reserve(store.sets().size());
    for (const auto& s : store.sets()) out.push_back(slice_from_elems(n, std::vector<uint64_t>(s)));
    return out;
}

std::vector<GroupSlice> subgroups_over(const GroupSlice& G, const GroupSlice& C) {
    uint32_t n = G.modulus();
    require(is_subgroup_of(C, G), ErrorKind::Inconsistency, "subgroups_over: C not inside G");
    SubgroupStore store;
    store.add(std::vector<uint64_t>(C.elements()));
    for (size_t i = 0; i < store.sets().size(); ++i) {
        std::vector<uint64_t> base = store.sets()[i];
        for (uint64_t e : G.elements()) {
            if (std::binary_search(base.begin(), base.end(), e)) continue;
            std::vector<uint64_t> seeds = base;
            seeds.push_back(e);
            store.add(closure_keys(n, seeds, G.order()));
        }
    }
    std::vector<GroupSlice> out;
    for (const auto& s : store.sets()) out.push_back(slice_from_elems(n, std::vector<uint64_t>(s)));
    return out;
}

namespace {

// Element conjugacy classes: list of (representative, class members).
std::vector<std::vector<uint64_t>> element_classes(const GroupSlice& G) {
    uint32_t n = G.modulus();
    const auto& elems = G.elements();
    std::unordered_set<uint64_t> assigned;
    std::vector<std::vector<uint64_t>> classes;
    std::vector<uint64_t> invs;
    invs.reserve(elems.size());
    for (uint64_t e : elems) invs.push_back(modmat::inv_key(n, e));
    for (uint64_t x : elems) {
        if (assigned.count(x)) continue;
        std::vector<uint64_t> cls;
        for (size_t i = 0; i < elems.size(); ++i) {
            uint64_t y = mul_keys(n, mul_keys(n, elems[i], x), invs[i]);
            if (assigned.insert(y).second) cls.push_back(y);
        }
        std::sort(cls.begin(), cls.end());
        classes.push_back(std::move(cls));
    }
    return classes;
}

}  // namespace

std::vector<GroupSlice> normal_subgroups(const GroupSlice& G, uint64_t cap) {
    require(G.order() <= cap, ErrorKind::ResourceCap,
            "normal_subgroups: |G| = " + std::to_string(G.order()) + " exceeds cap " +
                std::to_string(cap));
    uint32_t n = G.modulus();
    auto classes = element_classes(G);
    // normal closures of single elements = closures of whole classes
    SubgroupStore ncls;
    for (const auto& cls : classes) ncls.add(closure_keys(n, cls, G.order()));
    SubgroupStore store;
    store.add(closure_keys(n, {}, 1));
    for (const auto& s : ncls.sets()) store.add(std::vector<uint64_t>(s));
    for (size_t i = 0; i < store.sets().size(); ++i) {
        std::vector<uint64_t> base = store.sets()[i];
        for (const auto& s : ncls.sets()) {
            if (std::includes(base.begin(), base.end(), s.begin(), s.end())) continue;
            std::vector<uint64_t> seeds = base;
            seeds.insert(seeds.end(), s.begin(), s.end());
            store.add(closure_keys(n, seeds, G.order()));
        }
    }
    // closures of unions of full classes are exactly the normal subgroups
    std::vector<GroupSlice> out;
    for (const auto& s : store.sets()) out.push_back(slice_from_elems(n, std::vector<uint64_t>(s)));
    return out;
}

std::vector<std::vector<size_t>> conjugacy_partition(const std::vector<GroupSlice>& subs,
                                                     const GroupSlice& within) {
    uint32_t n = within.modulus();
    const auto& W = within.elements();
    std::vector<uint64_t> winv;
    winv.reserve(W.size());
    for (uint64_t w : W) winv.push_back(modmat::inv_key(n, w));

    // canonical form = lexicographically least conjugate element vector
    std::map<std::vector<uint64_t>, std::vector<size_t>> buckets;
    for (size_t si = 0; si < subs.size(); ++si) {
        require(subs[si].modulus() == n, ErrorKind::Inconsistency,
                "conjugacy_partition: modulus mismatch");
        const auto& elems = subs[si].elements();
        std::vector<uint64_t> best = elems;
        std::vector<uint64_t> tmp(elems.size());
        for (size_t wi = 0; wi < W.size(); ++wi) {
            for (size_t j = 0; j < elems.size(); ++j)
                tmp[j] = mul_keys(n, mul_keys(n, W[wi], elems[j]), winv[wi]);
            std::sort(tmp.begin(), tmp.end());
            if (tmp < best) best = tmp;
        }
        buckets[best].push_back(si);
    }
    std::vector<std::vector<size_t>> out;
    for (auto& [k, v] : buckets) out.push_back(std::move(v));
    return out;
}

std::vector<GroupSlice> m_set(const GroupSlice& G, const std::optional<GroupSlice>& within) {
    require(G.order() <= kSubgroupCap, ErrorKind::ResourceCap,
            "m_set: |G| exceeds cap " + std::to_string(kSubgroupCap));
    GroupSlice C = commutator_subgroup(G);
    auto detG = determinant_image(G);
    // every member contains [G,G], so enumerate the interval [C, G]
    auto cands = subgroups_over(G, C);
    std::vector<GroupSlice> kept;
    for (auto& H : cands) {
        if (determinant_image(H) != detG) continue;
        if (!commutator_subgroup(H).same_element_set(C)) continue;
        kept.push_back(std::move(H));
    }
    GroupSlice W = within ? *within : gl2(G.modulus());
    auto part = conjugacy_partition(kept, W);
    std::vector<GroupSlice> reps;
    for (const auto& cls : part) {
        size_t best = cls[0];
        for (size_t i : cls)
            if (kept[i].elements() < kept[best].elements()) best = i;
        reps.push_back(kept[best]);
    }
    // deterministic order: by order desc, then element vector
    std::sort(reps.begin(), reps.end(), [](const GroupSlice& a, const GroupSlice& b) {
        if (a.order() != b.order()) return a.order() > b.order();
        return a.elements() < b.elements();
    });
    return reps;
}

// ---- small groups ----

uint32_t SmallGroup::inverse(uint32_t x) const {
    for (uint32_t y = 0; y < size; ++y)
        if (op(x, y) == 0) return y;
    fail(ErrorKind::Inconsistency, "small group element without inverse");
}

uint32_t SmallGroup::element_order(uint32_t x) const {
    uint32_t o = 1, y = x;
    while (y != 0) {
        y = op(y, x);
        ++o;
        require(o <= size, ErrorKind::Inconsistency, "element order exceeds group size");
    }
    return o;
}

SmallGroup quotient_group(const GroupSlice& G, const GroupSlice& N) {
    return quotient_group_with_map(G, N, nullptr);
}

SmallGroup quotient_group_with_map(const GroupSlice& G, const GroupSlice& N,
                                   std::vector<uint32_t>* coset_index) {
    uint32_t n = G.modulus();
    require(is_subgroup_of(N, G), ErrorKind::Inconsistency, "quotient: N not a subgroup");
    const auto& elems = G.elements();
    const auto& nels = N.elements();
    // coset representative = least key in the coset x*N
    std::unordered_map<uint64_t, uint64_t> rep_of;
    rep_of.reserve(elems.size() * 2);
    std::vector<uint64_t> reps;
    for (uint64_t x : elems) {
        if (rep_of.count(x)) continue;
        std::vector<uint64_t> coset;
        coset.reserve(nels.size());
        for (uint64_t m : nels) coset.push_back(mul_keys(n, x, m));
        uint64_t r = *std::min_element(coset.begin(), coset.end());
        for (uint64_t y : coset) rep_of[y] = r;
        reps.push_back(r);
    }
    std::sort(reps.begin(), reps.end());
    // identity's coset must be index 0
    uint64_t idrep = rep_of[pack_key(identity(n))];
    std::vector<uint64_t> ordered{idrep};
    for (uint64_t r : reps)
        if (r != idrep) ordered.push_back(r);
    std::unordered_map<uint64_t, uint32_t> index_of;
    for (uint32_t i = 0; i < ordered.size(); ++i) index_of[ordered[i]] = i;

    SmallGroup Q;
    Q.size = static_cast<uint32_t>(ordered.size());
    Q.mul.assign(static_cast<size_t>(Q.size) * Q.size, 0);
    for (uint32_t i = 0; i < Q.size; ++i)
        for (uint32_t j = 0; j < Q.size; ++j)
            Q.mul[static_cast<size_t>(i) * Q.size + j] =
                index_of.at(rep_of.at(mul_keys(n, ordered[i], ordered[j])));
    if (coset_index) {
        coset_index->resize(elems.size());
        for (size_t i = 0; i < elems.size(); ++i)
            (*coset_index)[i] = index_of.at(rep_of.at(elems[i]));
    }
    return Q;
}

namespace {

std::vector<uint32_t> small_subgroup_closure(const SmallGroup& G, std::vector<uint32_t> seeds) {
    std::vector<char> in(G.size, 0);
    std::vector<uint32_t> work{0};
    in[0] = 1;
    for (uint32_t s : seeds)
        if (!in[s]) {
            in[s] = 1;
            work.push_back(s);
        }
    std::vector<uint32_t> gens = work;
    for (size_t i = 0; i < work.size(); ++i) {
        for (uint32_t g : gens) {
            uint32_t y = G.op(work[i], g);
            if (!in[y]) {
                in[y] = 1;
                work.push_back(y);
            }
        }
    }
    std::vector<uint32_t> out;
    for (uint32_t x = 0; x < G.size; ++x)
        if (in[x]) out.push_back(x);
    return out;
}

SmallGroup small_quotient(const SmallGroup& G, const std::vector<uint32_t>& normal) {
    std::vector<char> in(G.size, 0);
    for (uint32_t x : normal) in[x] = 1;
    std::vector<int64_t> rep(G.size, -1);
    std::vector<uint32_t> reps;
    for (uint32_t x = 0; x < G.size; ++x) {
        if (rep[x] >= 0) continue;
        uint32_t r = x;
        std::vector<uint32_t> coset;
        for (uint32_t m : normal) coset.push_back(G.op(x, m));
        for (uint32_t y : coset) r = std::min(r, y);
        for (uint32_t y : coset) rep[y] = r;
        reps.push_back(r);
    }
    std::sort(reps.begin(), reps.end());
    std::vector<uint32_t> ordered;
    uint32_t idrep = static_cast<uint32_t>(rep[0]);
    ordered.push_back(idrep);
    for (uint32_t r : reps)
        if (r != idrep) ordered.push_back(r);
    std::unordered_map<uint32_t, uint32_t> idx;
    for (uint32_t i = 0; i < ordered.size(); ++i) idx[ordered[i]] = i;
    SmallGroup Q;
    Q.size = static_cast<uint32_t>(ordered.size());
    Q.mul.assign(static_cast<size_t>(Q.size) * Q.size, 0);
    for (uint32_t i = 0; i < Q.size; ++i)
        for (uint32_t j = 0; j < Q.size; ++j)
            Q.mul[static_cast<size_t>(i) * Q.size + j] =
                idx.at(static_cast<uint32_t>(rep[G.op(ordered[i], ordered[j])]));
    return Q;
}

SmallGroup small_commutator_quotient(const SmallGroup& G) {
    std::vector<uint32_t> seeds;
    for (uint32_t x = 0; x < G.size; ++x)
        for (uint32_t y = 0; y < G.size; ++y) {
            uint32_t c = G.op(G.op(x, y), G.op(G.inverse(x), G.inverse(y)));
            if (c != 0) seeds.push_back(c);
        }
    auto comm = small_subgroup_closure(G, seeds);
    return small_quotient(G, comm);
}

// Elementary divisors of an abelian small group. For each prime p let
// m_k = #{x : x^(p^k) = e} and s_k = log_p m_k; the number of cyclic p^k
// factors is (s_k - s_{k-1}) - (s_{k+1} - s_k).
std::vector<uint32_t> abelian_elementary_divisors(const SmallGroup& A) {
    std::vector<uint32_t> divisors;
    std::vector<uint32_t> orders(A.size);
    for (uint32_t x = 0; x < A.size; ++x) orders[x] = A.element_order(x);
    for (auto [p, q] : modmat::prime_power_factorization(A.size)) {
        std::vector<uint32_t> s{0};
        for (uint32_t pk = p;; pk *= p) {
            uint64_t m = 0;
            for (uint32_t o : orders) {
                uint32_t t = o;
                while (t % p == 0) t /= p;
                if (t == 1 && pk % o == 0) ++m;  // o is a p-power dividing pk
            }
            uint32_t lg = 0;
            while (m > 1) {
                require(m % p == 0, ErrorKind::Inconsistency, "abelian p-count not a p-power");
                m /= p;
                ++lg;
            }
            s.push_back(lg);
            if (pk >= q) break;
        }
        for (size_t k = 1; k < s.size(); ++k) {
            uint32_t ge_k = s[k] - s[k - 1];
            uint32_t ge_k1 = (k + 1 < s.size()) ? s[k + 1] - s[k] : 0;
            uint32_t pk = 1;
            for (size_t i = 0; i < k; ++i) pk *= p;
            for (uint32_t c = ge_k1; c < ge_k; ++c) divisors.push_back(pk);
        }
    }
    std::sort(divisors.begin(), divisors.end());
    return divisors;
}

}  // namespace

QuotientFingerprint fingerprint(const SmallGroup& Q) {
    QuotientFingerprint fp;
    fp.order = Q.size;
    std::map<uint32_t, uint64_t> hist;
    uint32_t expo = 1;
    for (uint32_t x = 0; x < Q.size; ++x) {
        uint32_t o = Q.element_order(x);
        hist[o]++;
        expo = static_cast<uint32_t>(std::lcm(expo, o));
    }
    fp.exponent = expo;
    fp.order_histogram.assign(hist.begin(), hist.end());
    // conjugacy classes
    std::vector<char> seen(Q.size, 0);
    uint32_t classes = 0;
    for (uint32_t x = 0; x < Q.size; ++x) {
        if (seen[x]) continue;
        ++classes;
        for (uint32_t g = 0; g < Q.size; ++g) seen[Q.op(Q.op(g, x), Q.inverse(g))] = 1;
    }
    fp.conjugacy_classes = classes;
    fp.abelianization = abelian_elementary_divisors(small_commutator_quotient(Q));
    return fp;
}

std::string QuotientFingerprint::describe() const {
    if (order == 1) return "0";
    if (is_cyclic()) return "Z/" + std::to_string(order);
    std::ostringstream os;
    os << "group(order=" << order << ",exp=" << exponent << ")";
    return os.str();
}

namespace {

std::vector<uint32_t> small_generating_sequence(const SmallGroup& G) {
    std::vector<uint32_t> gens;
    std::vector<uint32_t> cur{0};
    while (cur.size() < G.size) {
        // prefer a high-order element outside the current subgroup
        uint32_t best = 0, besto = 0;
        std::vector<char> in(G.size, 0);
        for (uint32_t x : cur) in[x] = 1;
        for (uint32_t x = 0; x < G.size; ++x) {
            if (in[x]) continue;
            uint32_t o = G.element_order(x);
            if (o > besto) {
                besto = o;
                best = x;
            }
        }
        gens.push_back(best);
        cur = small_subgroup_closure(G, gens);
    }
    return gens;
}

bool try_isomorphism(const SmallGroup& A, const SmallGroup& B,
                     const std::vector<uint32_t>& agens, const std::vector<uint32_t>& bimgs) {
    // grow the map over the subgroup generated so far
    std::vector<int64_t> img(A.size, -1);
    img[0] = 0;
    std::vector<uint32_t> work{0};
    for (size_t i = 0; i < work.size(); ++i) {
        for (size_t gi = 0; gi < agens.size(); ++gi) {
            uint32_t x = A.op(work[i], agens[gi]);
            uint32_t y = B.op(static_cast<uint32_t>(img[work[i]]), bimgs[gi]);
            if (img[x] < 0) {
                img[x] = y;
                work.push_back(x);
            } else if (img[x] != y) {
                return false;
            }
        }
    }
    if (work.size() != A.size) return false;
    std::vector<char> hit(B.size, 0);
    for (uint32_t x = 0; x < A.size; ++x) {
        if (hit[img[x]]) return false;
        hit[static_cast<uint32_t>(img[x])] = 1;
    }
    for (uint32_t x = 0; x < A.size; ++x)
        for (uint32_t y = 0; y < A.size; ++y)
            if (img[A.op(x, y)] != B.op(static_cast<uint32_t>(img[x]), static_cast<uint32_t>(img[y])))
                return false;
    return true;
}

bool iso_search(const SmallGroup& A, const SmallGroup& B) {
    if (A.size != B.size) return false;
    if (A.size == 1) return true;
    auto agens = small_generating_sequence(A);
    std::vector<uint32_t> aorders;
    for (uint32_t g : agens) aorders.push_back(A.element_order(g));
    std::vector<std::vector<uint32_t>> candidates(agens.size());
    for (size_t i = 0; i < agens.size(); ++i)
        for (uint32_t y = 0; y < B.size; ++y)
            if (B.element_order(y) == aorders[i]) candidates[i].push_back(y);
    std::vector<uint32_t> pick(agens.size(), 0);
    std::vector<size_t> idx(agens.size(), 0);
    size_t depth = 0;
    while (true) {
        if (idx[depth] == candidates[depth].size()) {
            if (depth == 0) return false;
            idx[depth] = 0;
            --depth;
            ++idx[depth];
            continue;
        }
        pick[depth] = candidates[depth][idx[depth]];
        if (depth + 1 == agens.size()) {
            if (try_isomorphism(A, B, agens, pick)) return true;
            ++idx[depth];
        } else {
            ++depth;
        }
    }
}

}  // namespace

bool isomorphic(const SmallGroup& A, const SmallGroup& B) {
    if (A.size != B.size) return false;
    if (!(fingerprint(A) == fingerprint(B))) return false;
    return iso_search(A, B);
}

std::vector<QuotientFingerprint> quo_intersection(const GroupSlice& G1, const GroupSlice& G2) {
    uint64_t bound = std::gcd(G1.order(), G2.order());
    auto side = [&](const GroupSlice& G) {
        std::vector<std::pair<QuotientFingerprint, SmallGroup>> out;
        for (const auto& N : normal_subgroups(G)) {
            if (G.order() / N.order() > bound) continue;
            SmallGroup Q = quotient_group(G, N);
            QuotientFingerprint fp = fingerprint(Q);
            bool dup = false;
            for (auto& [ofp, oq] : out) {
                if (ofp == fp) {
                    require(Q.size <= 64, ErrorKind::Inconsistency,
                            "fingerprint collision unresolved by isomorphism search");
                    if (isomorphic(oq, Q)) {
                        dup = true;
                        break;
                    }
                }
            }
            if (!dup) out.emplace_back(std::move(fp), std::move(Q));
        }
        return out;
    };
    auto q1 = side(G1), q2 = side(G2);
    std::vector<QuotientFingerprint> common;
    for (auto& [fp1, Q1] : q1) {
        for (auto& [fp2, Q2] : q2) {
            if (fp1 == fp2) {
                require(Q1.size <= 64, ErrorKind::Inconsistency,
                        "fingerprint collision unresolved by isomorphism search");
                if (isomorphic(Q1, Q2)) {
                    common.push_back(fp1);
                    break;
                }
            }
        }
    }
    std::sort(common.begin(), common.end(),
              [](const QuotientFingerprint& a, const QuotientFingerprint& b) {
                  if (a.order != b.order) return a.order < b.order;
                  return a.order_histogram < b.order_histogram;
              });
    return common;
}

// ---- characters ----

uint8_t Character::value_of_key(uint64_t key) const {
    auto it = std::lower_bound(elems->begin(), elems->end(), key);
    require(it != elems->end() && *it == key, ErrorKind::Inconsistency,
            "character evaluated outside its group");
    return vals[static_cast<size_t>(it - elems->begin())];
}

std::vector<uint8_t> extend_hom_to_cyclic(const GroupSlice& G, const std::vector<uint8_t>& on_gens,
                                          uint32_t q) {
    require(on_gens.size() == G.generators().size(), ErrorKind::Inconsistency,
            "hom extension: one value per generator required");
    uint32_t n = G.modulus();
    const auto& elems = G.elements();
    std::unordered_map<uint64_t, uint32_t> val;
    val.reserve(elems.size() * 2);
    uint64_t id = pack_key(identity(n));
    val[id] = 0;
    std::vector<uint64_t> work{id};
    for (size_t i = 0; i < work.size(); ++i) {
        uint64_t x = work[i];
        uint32_t vx = val[x];
        for (size_t gi = 0; gi < G.generators().size(); ++gi) {
            uint64_t y = mul_keys(n, x, pack_key(G.generators()[gi]));
            uint32_t vy = (vx + on_gens[gi]) % q;
            auto it = val.find(y);
            if (it == val.end()) {
                val[y] = vy;
                work.push_back(y);
            } else {
                require(it->second == vy, ErrorKind::Inconsistency,
                        "generator assignment does not extend to a homomorphism");
            }
        }
    }
    require(work.size() == elems.size(), ErrorKind::Inconsistency,
            "hom extension did not reach the whole group");
    std::vector<uint8_t> out(elems.size());
    for (size_t i = 0; i < elems.size(); ++i) out[i] = static_cast<uint8_t>(val.at(elems[i]));
    return out;
}

namespace {

// Characters factor through the abelianization; enumerate there.
std::vector<Character> cyclic_characters(const GroupSlice& G, uint32_t q) {
    auto shared = std::make_shared<const std::vector<uint64_t>>(G.elements());
    GroupSlice C = commutator_subgroup(G);
    std::vector<uint32_t> coset_of;
    SmallGroup A = quotient_group_with_map(G, C, &coset_of);

    auto agens = small_generating_sequence(A);
    size_t r = agens.size();
    require(r <= 12, ErrorKind::ResourceCap, "character enumeration: abelianization rank too big");
    std::vector<Character> out;
    std::vector<std::vector<uint8_t>> maps_seen;
    uint64_t total = 1;
    for (size_t i = 0; i < r; ++i) total *= q;
    for (uint64_t code = 1; code < total; ++code) {
        std::vector<uint8_t> assign(r);
        uint64_t cc = code;
        for (size_t i = 0; i < r; ++i) {
            assign[i] = static_cast<uint8_t>(cc % q);
            cc /= q;
        }
        // extend over the table; reject non-homomorphic assignments
        std::vector<int> val(A.size, -1);
        val[0] = 0;
        std::vector<uint32_t> work{0};
        bool ok = true;
        for (size_t i = 0; i < work.size() && ok; ++i) {
            for (size_t gi = 0; gi < r && ok; ++gi) {
                uint32_t y = A.op(work[i], agens[gi]);
                int vy = (val[work[i]] + assign[gi]) % static_cast<int>(q);
                if (val[y] < 0) {
                    val[y] = vy;
                    work.push_back(y);
                } else if (val[y] != vy) {
                    ok = false;
                }
            }
        }
        if (!ok || work.size() != A.size) continue;
        bool surj = false;
        for (int v : val)
            if (v != 0) surj = true;
        if (!surj) continue;
        std::vector<uint8_t> avals(A.size);
        for (uint32_t i = 0; i < A.size; ++i) avals[i] = static_cast<uint8_t>(val[i]);
        if (q == 3) {
            // one character per kernel: first nonzero value canonicalized to 1
            for (uint8_t v : avals)
                if (v != 0) {
                    if (v == 2)
                        for (auto& w : avals) w = static_cast<uint8_t>((2 * w) % 3);
                    break;
                }
        }
        if (std::find(maps_seen.begin(), maps_seen.end(), avals) != maps_seen.end()) continue;
        maps_seen.push_back(avals);
        Character chi;
        chi.order = q;
        chi.elems = shared;
        chi.vals.resize(shared->size());
        for (size_t i = 0; i < shared->size(); ++i) chi.vals[i] = avals[coset_of[i]];
        out.push_back(std::move(chi));
    }
    return out;
}

}  // namespace

std::vector<Character> order2_characters(const GroupSlice& G) { return cyclic_characters(G, 2); }
std::vector<Character> order3_characters(const GroupSlice& G) { return cyclic_characters(G, 3); }

GroupSlice character_kernel(const Character& chi, const GroupSlice& G) {
    const auto& elems = G.elements();
    require(chi.elems->size() == elems.size(), ErrorKind::Inconsistency,
            "character does not belong to this group");
    std::vector<uint64_t> ker;
    for (size_t i = 0; i < elems.size(); ++i)
        if (chi.vals[i] == 0) ker.push_back(elems[i]);
    return slice_from_elems(G.modulus(), std::move(ker));
}

std::vector<GroupSlice> index2_and_index3_characters(const GroupSlice& G) {
    std::vector<GroupSlice> out;
    for (const auto& chi : order2_characters(G)) out.push_back(character_kernel(chi, G));
    for (const auto& chi : order3_characters(G)) out.push_back(character_kernel(chi, G));
    return out;
}

// ---- fiber products ----

GroupSlice fiber_product(const FiberProductSpec& spec, uint64_t cap) {
    const GroupSlice& G1 = spec.g1;
    const GroupSlice& G2 = spec.g2;
    uint32_t m1 = G1.modulus(), m2 = G2.modulus();
    require(std::gcd(m1, m2) == 1, ErrorKind::Inconsistency,
            "fiber product requires coprime moduli");
    require(spec.q >= 1, ErrorKind::Inconsistency, "fiber product: quotient order must be >= 1");
    uint32_t q = spec.q;

    auto psi1 = extend_hom_to_cyclic(G1, spec.psi1_on_gens, q);
    auto psi2 = extend_hom_to_cyclic(G2, spec.psi2_on_gens, q);
    auto check_surjective = [&](const std::vector<uint8_t>& vals, const char* side) {
        std::vector<char> hit(q, 0);
        for (uint8_t v : vals) hit[v] = 1;
        for (uint32_t v = 0; v < q; ++v)
            require(hit[v], ErrorKind::Inconsistency,
                    std::string("fiber product: psi not surjective on ") + side);
    };
    check_surjective(psi1, "G1");
    check_surjective(psi2, "G2");

    require(G1.order() * G2.order() % q == 0, ErrorKind::Inconsistency, "fiber order not integral");
    uint64_t order = G1.order() / q * G2.order();
    uint64_t m = static_cast<uint64_t>(m1) * m2;
    require(m <= 0xFFFFFFFFull, ErrorKind::ResourceCap, "fiber product modulus too large");
    uint32_t mm = static_cast<uint32_t>(m);

    // generators: matched lifts of G1's generators, plus 1 x ker(psi2)
    std::vector<ResidueMatrix> gens;
    const auto& e2 = G2.elements();
    for (size_t gi = 0; gi < G1.generators().size(); ++gi) {
        uint8_t v = spec.psi1_on_gens[gi];
        size_t pick = SIZE_MAX;
        for (size_t j = 0; j < e2.size(); ++j)
            if (psi2[j] == v) {
                pick = j;
                break;
            }
        require(pick != SIZE_MAX, ErrorKind::Inconsistency, "fiber product: unmatched psi value");
        gens.push_back(
            modmat::crt_join({G1.generators()[gi], unpack_key(m2, e2[pick])}));
    }
    std::vector<uint64_t> ker2;
    for (size_t j = 0; j < e2.size(); ++j)
        if (psi2[j] == 0) ker2.push_back(e2[j]);
    GroupSlice K2 = slice_from_elems(m2, std::move(ker2));
    for (const auto& k : K2.generators())
        gens.push_back(modmat::crt_join({identity(m1), k}));

    if (order > cap || mm > 65535) {
        return GroupSlice::with_order_only(mm, std::move(gens), order);
    }
    // materialize by value-matched CRT merge
    std::vector<std::vector<uint64_t>> buckets(q);
    for (size_t j = 0; j < e2.size(); ++j) buckets[psi2[j]].push_back(e2[j]);
    const auto& e1 = G1.elements();
    std::vector<uint64_t> elems;
    elems.reserve(order);
    for (size_t i = 0; i < e1.size(); ++i) {
        ResidueMatrix a = unpack_key(m1, e1[i]);
        for (uint64_t k2 : buckets[psi1[i]])
            elems.push_back(pack_key(modmat::crt_join({a, unpack_key(m2, k2)})));
    }
    std::sort(elems.begin(), elems.end());
    require(elems.size() == order, ErrorKind::Inconsistency,
            "fiber product order formula violated");
    return GroupSlice::with_elements(mm, std::move(gens), std::move(elems));
}

}  // namespace relserre::fingroup
