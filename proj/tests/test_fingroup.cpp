#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "relserre/fingroup.hpp"

using namespace relserre;
using namespace relserre::fingroup;
using modmat::ResidueMatrix;
using modmat::identity;

namespace {

GroupSlice two_b() { return closure({ResidueMatrix(2, 1, 1, 0, 1)}, 2); }
GroupSlice two_cn() { return closure({ResidueMatrix(2, 0, 1, 1, 1)}, 2); }

std::vector<ResidueMatrix> k1_gens() {
    return {ResidueMatrix(4, 3, 0, 0, 1), ResidueMatrix(4, 1, 1, 1, 0)};
}
std::vector<ResidueMatrix> k2_gens() {
    return {ResidueMatrix(4, 3, 0, 0, 1), ResidueMatrix(4, 3, 0, 2, 3),
            ResidueMatrix(4, 1, 2, 0, 1)};
}

}  // namespace

TEST_CASE("closure basics") {
    CHECK(closure({identity(8)}, 8).order() == 1);
    CHECK(two_cn().order() == 3);
    // K2 reduces to the trivial group mod 2
    GroupSlice K2 = closure(k2_gens(), 4);
    CHECK(reduce_mod(K2, 2).order() == 1);
    GroupSlice K1 = closure(k1_gens(), 4);
    CHECK(reduce_mod(K1, 2).same_element_set(two_cn()));
    CHECK_THROWS_AS(closure({ResidueMatrix(4, 2, 0, 0, 1)}, 4), Error);  // non-invertible gen
}

TEST_CASE("closure cap is a hard error, never a truncation") {
    auto gens = gl2(8).generators();
    CHECK_THROWS_AS(closure(gens, 8, 100), Error);
}

TEST_CASE("gl2 and sl2 orders") {
    for (uint32_t n : {2u, 3u, 4u, 8u, 9u, 12u}) {
        CHECK(gl2(n).order() == modmat::gl2_order(n));
        CHECK(sl2(n).order() == modmat::sl2_order(n));
    }
}

TEST_CASE("reduce_mod identity and kernels") {
    GroupSlice G = gl2(4);
    CHECK(reduce_mod(G, 4).same_element_set(G));
    GroupSlice cs_hat8 = preimage_at(closure({identity(2)}, 2), 8);
    CHECK(cs_hat8.order() == 256);
    CHECK(reduce_mod(cs_hat8, 2).order() == 1);
}

TEST_CASE("preimage orders") {
    CHECK(preimage_at(gl2(2), 4).order() == 96);
    CHECK(preimage_at(two_b(), 4).order() == 32);
    CHECK(preimage_at(closure({identity(2)}, 2), 8).order() == 256);
}

TEST_CASE("commutator subgroups") {
    GroupSlice K2 = closure(k2_gens(), 4);  // abelian
    CHECK(commutator_subgroup(K2).order() == 1);
    GroupSlice g9 = gl2(9);
    GroupSlice c9 = commutator_subgroup(g9);
    CHECK(c9.order() == 648);
    CHECK(c9.same_element_set(sl2(9)));
    GroupSlice cs4 = preimage_at(closure({identity(2)}, 2), 4);
    CHECK(commutator_subgroup(cs4).order() == 1);
}

TEST_CASE("index_in") {
    GroupSlice g4 = gl2(4);
    CHECK(index_in(g4, g4) == 1);
    GroupSlice b4 = preimage_at(two_b(), 4);
    CHECK(index_in(b4, g4) == 3);
    GroupSlice cs4 = preimage_at(closure({identity(2)}, 2), 4);
    CHECK(index_in(commutator_subgroup(cs4), sl2(4)) == 48);
    CHECK_THROWS_AS(index_in(gl2(4), b4), Error);
}

TEST_CASE("determinant image") {
    CHECK(det_surjective(gl2(8)));
    auto d = determinant_image(sl2(4));
    CHECK(d == std::vector<uint32_t>{1});
    GroupSlice K1 = closure(k1_gens(), 4);
    CHECK(det_surjective(K1));
}

TEST_CASE("all_subgroups") {
    CHECK(all_subgroups(closure({identity(4)}, 4)).size() == 1);
    CHECK(all_subgroups(gl2(2)).size() == 6);  // S3
}

TEST_CASE("normal subgroups") {
    GroupSlice cn = two_cn();  // cyclic of order 3
    CHECK(normal_subgroups(cn).size() == 2);
    std::vector<uint64_t> orders;
    for (const auto& N : normal_subgroups(gl2(2))) orders.push_back(N.order());
    std::sort(orders.begin(), orders.end());
    CHECK(orders == std::vector<uint64_t>{1, 3, 6});
    // SL2(Z/9) is normal of index 6 in GL2(Z/9)
    bool found = false;
    GroupSlice s9 = sl2(9);
    for (const auto& N : normal_subgroups(gl2(9)))
        if (N.order() == 648 && N.same_element_set(s9)) found = true;
    CHECK(found);
}

TEST_CASE("conjugacy partition") {
    GroupSlice g2 = gl2(2);
    auto subs = all_subgroups(g2);
    auto part = conjugacy_partition(subs, g2);
    // S3: classes are {1}, {three order-2}, {A3}, {S3} -> 4 classes
    CHECK(part.size() == 4);
    size_t order2_class = 0;
    for (const auto& cls : part)
        if (subs[cls[0]].order() == 2) order2_class = cls.size();
    CHECK(order2_class == 3);
}

TEST_CASE("Lagrange on every enumeration") {
    for (const auto& G : {gl2(2), preimage_at(two_b(), 4), closure(k1_gens(), 4)}) {
        for (const auto& H : all_subgroups(G)) CHECK(G.order() % H.order() == 0);
    }
}

TEST_CASE("quotients and fingerprints") {
    GroupSlice g2 = gl2(2);
    auto Q = quotient_group(g2, commutator_subgroup(g2));
    auto fp = fingerprint(Q);
    CHECK(fp.order == 2);
    CHECK(fp.is_cyclic());
    CHECK(fp.describe() == "Z/2");

    auto common = quo_intersection(g2, closure({identity(3)}, 3));
    REQUIRE(common.size() == 1);
    CHECK(common[0].describe() == "0");
}

TEST_CASE("characters and kernels") {
    // GL2(Z/2) = S3 has exactly one index-2 subgroup
    auto kers = index2_and_index3_characters(gl2(2));
    // one order-2 kernel (A3) and one order-3 kernel... S3 has no normal
    // index-3 subgroup with cyclic quotient, so only the sign character.
    REQUIRE(kers.size() == 1);
    CHECK(kers[0].order() == 3);

    auto chis2 = order2_characters(preimage_at(two_b(), 4));
    CHECK(chis2.size() == 7);  // (E:2BMod4): exactly 7 index-2 subgroups
}

TEST_CASE("commutator subgroup lies in every abelian-character kernel") {
    GroupSlice G = preimage_at(two_cn(), 4);
    GroupSlice C = commutator_subgroup(G);
    for (const auto& chi : order2_characters(G))
        for (uint64_t k : C.elements()) CHECK(chi.value_of_key(k) == 0);
    for (const auto& chi : order3_characters(G))
        for (uint64_t k : C.elements()) CHECK(chi.value_of_key(k) == 0);
}

TEST_CASE("fiber product: direct product at q=1 and order formula") {
    GroupSlice G1 = gl2(4), G2 = gl2(3);
    FiberProductSpec spec;
    spec.g1 = G1;
    spec.g2 = G2;
    spec.q = 1;
    spec.psi1_on_gens.assign(G1.generators().size(), 0);
    spec.psi2_on_gens.assign(G2.generators().size(), 0);
    GroupSlice F = fiber_product(spec);
    CHECK(F.order() == G1.order() * G2.order());
    CHECK(F.same_element_set(gl2(12)));
}

TEST_CASE("fiber product surjects onto both factors (Goursat sanity)") {
    GroupSlice G1 = preimage_at(two_b(), 4), G2 = gl2(3);
    auto chi1 = order2_characters(G1);
    auto chi2 = order2_characters(G2);
    REQUIRE(!chi1.empty());
    REQUIRE(!chi2.empty());
    FiberProductSpec spec;
    spec.g1 = G1;
    spec.g2 = G2;
    spec.q = 2;
    for (const auto& g : G1.generators()) spec.psi1_on_gens.push_back(chi1[0].value_of_key(modmat::pack_key(g)));
    for (const auto& g : G2.generators()) spec.psi2_on_gens.push_back(chi2[0].value_of_key(modmat::pack_key(g)));
    GroupSlice F = fiber_product(spec);
    CHECK(F.order() == G1.order() * G2.order() / 2);
    CHECK(reduce_mod(F, 4).same_element_set(G1));
    CHECK(reduce_mod(F, 3).same_element_set(G2));
}

TEST_CASE("cyclic-quotient fiber products have split commutators") {
    // [G1 xpsi G2, -] = [G1,G1] x [G2,G2] for cyclic Q, brute force on
    // >= 20 random small specs
    std::mt19937_64 rng(23);
    std::vector<GroupSlice> pool4;
    for (const auto& H : all_subgroups(preimage_at(two_b(), 4))) {
        if (H.order() >= 4 && H.order() <= 48) pool4.push_back(H);
    }
    std::vector<GroupSlice> pool3;
    for (const auto& H : all_subgroups(gl2(3))) {
        if (H.order() >= 4 && H.order() <= 48) pool3.push_back(H);
    }
    int done = 0;
    for (int attempt = 0; attempt < 4000 && done < 20; ++attempt) {
        const GroupSlice& G1 = pool4[rng() % pool4.size()];
        const GroupSlice& G2 = pool3[rng() % pool3.size()];
        uint32_t q = (rng() % 2) ? 2 : 3;
        auto c1 = (q == 2) ? order2_characters(G1) : order3_characters(G1);
        auto c2 = (q == 2) ? order2_characters(G2) : order3_characters(G2);
        if (c1.empty() || c2.empty()) continue;
        const auto& x1 = c1[rng() % c1.size()];
        const auto& x2 = c2[rng() % c2.size()];
        FiberProductSpec spec;
        spec.g1 = G1;
        spec.g2 = G2;
        spec.q = q;
        for (const auto& g : G1.generators())
            spec.psi1_on_gens.push_back(x1.value_of_key(modmat::pack_key(g)));
        for (const auto& g : G2.generators())
            spec.psi2_on_gens.push_back(x2.value_of_key(modmat::pack_key(g)));
        GroupSlice F = fiber_product(spec);
        CHECK(F.order() == G1.order() * G2.order() / q);

        GroupSlice FC = commutator_subgroup(F);
        // product of the factor commutators, as a q=1 fiber
        FiberProductSpec prod;
        prod.g1 = commutator_subgroup(G1);
        prod.g2 = commutator_subgroup(G2);
        prod.q = 1;
        prod.psi1_on_gens.assign(prod.g1.generators().size(), 0);
        prod.psi2_on_gens.assign(prod.g2.generators().size(), 0);
        GroupSlice P = fiber_product(prod);
        CHECK(FC.same_element_set(P));
        ++done;
    }
    CHECK(done >= 20);
}

TEST_CASE("non-homomorphic psi is a hard error") {
    GroupSlice G1 = gl2(4), G2 = gl2(3);
    FiberProductSpec spec;
    spec.g1 = G1;
    spec.g2 = G2;
    spec.q = 2;
    // assign 1 to every generator; not a homomorphism on GL2(Z/4)
    spec.psi1_on_gens.assign(G1.generators().size(), 1);
    spec.psi2_on_gens.assign(G2.generators().size(), 1);
    CHECK_THROWS_AS(fiber_product(spec), Error);
}
