#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <vector>

#include "relserre/modmat.hpp"

namespace relserre::fingroup {

using modmat::ResidueMatrix;

inline constexpr uint64_t kClosureCap = 10'000'000;  // element cap for materialization
inline constexpr uint64_t kSubgroupCap = 512;        // |G| cap for full subgroup sweeps
inline constexpr uint64_t kNormalCap = 4096;         // |G| cap for normal-subgroup sweeps

// A subgroup of GL2(Z/NZ), given by modulus + generators, with the element
// set materialized lazily as a sorted vector of packed keys. A slice with a
// known order but no element set stands for a group too large to enumerate
// (fiber products at large moduli).
class GroupSlice {
  public:
    GroupSlice() = default;
    GroupSlice(uint32_t modulus, std::vector<ResidueMatrix> gens);

    uint32_t modulus() const { return modulus_; }
    const std::vector<ResidueMatrix>& generators() const { return gens_; }

    bool materialized() const { return elems_ != nullptr; }
    const std::vector<uint64_t>& elements() const;
    bool order_known() const { return order_ != 0; }
    uint64_t order() const;

    bool contains_key(uint64_t key) const;
    bool contains(const ResidueMatrix& g) const;

    // All generators of a valid slice are invertible; enforced on construction.
    static GroupSlice with_elements(uint32_t modulus, std::vector<ResidueMatrix> gens,
                                    std::vector<uint64_t> sorted_elems);
    static GroupSlice with_order_only(uint32_t modulus, std::vector<ResidueMatrix> gens,
                                      uint64_t order);

    bool same_element_set(const GroupSlice& other) const;

  private:
    uint32_t modulus_ = 2;
    std::vector<ResidueMatrix> gens_;
    std::shared_ptr<const std::vector<uint64_t>> elems_;
    uint64_t order_ = 0;
};

// Closure of a generator list; errors with a resource message if the group
// would exceed `cap` elements. Never truncates silently.
GroupSlice closure(const std::vector<ResidueMatrix>& gens, uint32_t modulus,
                   uint64_t cap = kClosureCap);
std::vector<uint64_t> closure_keys(uint32_t modulus, const std::vector<uint64_t>& seeds,
                                   uint64_t cap);

GroupSlice trivial_group(uint32_t modulus);
GroupSlice gl2(uint32_t modulus);
GroupSlice sl2(uint32_t modulus);

// Image of G under reduction mod m (m | N).
GroupSlice reduce_mod(const GroupSlice& G, uint32_t m);

// Full preimage of G under GL2(Z/N) -> GL2(Z/m).
GroupSlice preimage_at(const GroupSlice& G, uint32_t N, uint64_t cap = kClosureCap);

GroupSlice commutator_subgroup(const GroupSlice& G, uint64_t cap = kClosureCap);

// |G| / |H| with H <= G verified by generator membership.
uint64_t index_in(const GroupSlice& H, const GroupSlice& G);

// det(G) as a sorted list of residues; a multiplicative subgroup of (Z/N)^x.
std::vector<uint32_t> determinant_image(const GroupSlice& G);
bool det_surjective(const GroupSlice& G);

bool is_subgroup_of(const GroupSlice& H, const GroupSlice& G);
bool is_normal_in(const GroupSlice& H, const GroupSlice& G);

GroupSlice conjugate_subgroup(const GroupSlice& H, const ResidueMatrix& g);

// Every subgroup, by BFS joins with cyclic subgroups; |G| <= cap required.
std::vector<GroupSlice> all_subgroups(const GroupSlice& G, uint64_t cap = kSubgroupCap);

// Subgroups of G containing the (normal) subgroup C.
std::vector<GroupSlice> subgroups_over(const GroupSlice& G, const GroupSlice& C);

// All normal subgroups, by joins of normal closures of single elements.
std::vector<GroupSlice> normal_subgroups(const GroupSlice& G, uint64_t cap = kNormalCap);

// Partition of `subs` into conjugacy classes under conjugation by elements
// of `within` (exhaustive).
std::vector<std::vector<size_t>> conjugacy_partition(const std::vector<GroupSlice>& subs,
                                                     const GroupSlice& within);

// M(G) = { H <= G : det(H) = det(G), [H,H] = [G,G] }, one representative per
// conjugacy class under `within` (defaults to the ambient GL2).
std::vector<GroupSlice> m_set(const GroupSlice& G,
                              const std::optional<GroupSlice>& within = std::nullopt);

// ---- small quotient groups, fingerprints, isomorphism ----

// Multiplication-table group on 0..size-1 with identity 0.
struct SmallGroup {
    uint32_t size = 1;
    std::vector<uint32_t> mul;  // row-major size x size

    uint32_t op(uint32_t x, uint32_t y) const { return mul[static_cast<size_t>(x) * size + y]; }
    uint32_t inverse(uint32_t x) const;
    uint32_t element_order(uint32_t x) const;
};

SmallGroup quotient_group(const GroupSlice& G, const GroupSlice& N);

// Same, optionally exposing the element -> coset-index map (aligned with
// G's sorted element list).
SmallGroup quotient_group_with_map(const GroupSlice& G, const GroupSlice& N,
                                   std::vector<uint32_t>* coset_index);

struct QuotientFingerprint {
    uint64_t order = 1;
    std::vector<uint32_t> abelianization;  // elementary divisors, sorted
    uint32_t exponent = 1;
    uint32_t conjugacy_classes = 1;
    std::vector<std::pair<uint32_t, uint64_t>> order_histogram;

    bool operator==(const QuotientFingerprint&) const = default;
    bool is_cyclic() const { return exponent == order; }
    std::string describe() const;  // "0", "Z/2", ... for cyclic; else a tag
};

QuotientFingerprint fingerprint(const SmallGroup& Q);
bool isomorphic(const SmallGroup& A, const SmallGroup& B);

// Isomorphism classes of quotients common to G1 and G2, bounded by
// gcd(|G1|,|G2|); fingerprint match must be confirmed by explicit
// isomorphism search, otherwise a hard error is raised.
std::vector<QuotientFingerprint> quo_intersection(const GroupSlice& G1, const GroupSlice& G2);

// ---- characters ----

// A character of G of order 2 or 3, stored extensionally: vals[i] is the
// exponent for the i-th element of G's sorted element list.
struct Character {
    uint32_t order = 2;
    std::shared_ptr<const std::vector<uint64_t>> elems;
    std::vector<uint8_t> vals;

    uint8_t value_of_key(uint64_t key) const;
};

// All surjective characters of order 2 (resp. 3, one per kernel).
std::vector<Character> order2_characters(const GroupSlice& G);
std::vector<Character> order3_characters(const GroupSlice& G);
GroupSlice character_kernel(const Character& chi, const GroupSlice& G);

// Kernels of all index-2 (and index-3, when present) characters, as subgroups.
std::vector<GroupSlice> index2_and_index3_characters(const GroupSlice& G);

// ---- fiber products ----

struct FiberProductSpec {
    GroupSlice g1, g2;             // coprime moduli, both materialized
    uint32_t q = 1;                // cyclic quotient order
    std::vector<uint8_t> psi1_on_gens;  // values in Z/q, one per generator of g1
    std::vector<uint8_t> psi2_on_gens;
};

// { (g1,g2) : psi1(g1) = psi2(g2) } embedded at modulus m1*m2 by CRT.
// Generator assignments are extended to full value maps; failure to extend
// consistently (non-homomorphic psi) or non-surjectivity is a hard error.
// Materialized when the order is within `cap`, order-only otherwise.
GroupSlice fiber_product(const FiberProductSpec& spec, uint64_t cap = kClosureCap);

// Extensional extension of a generator assignment to a full homomorphism
// G -> Z/q; returns values aligned with G's sorted element list.
std::vector<uint8_t> extend_hom_to_cyclic(const GroupSlice& G,
                                          const std::vector<uint8_t>& on_gens, uint32_t q);

// Greedy generating subset of a materialized group (small sets for output).
std::vector<ResidueMatrix> small_generating_set(const GroupSlice& G);

}  // namespace relserre::fingroup
