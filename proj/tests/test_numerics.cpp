// Copyright 2026 The cqdsim Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "cqdsim/numerics.hpp"
#include "test_oracles.hpp"

#include <gtest/gtest.h>

namespace cqdsim {
namespace {

using testing::embed;
using testing::power_norm;
using testing::taylor_evolve;

TEST(Expm, MatchesTaylorSeries) {
    RandomStream rng(11);
    for (std::size_t dim : {2U, 4U, 8U, 16U}) {
        for (int rep = 0; rep < 5; ++rep) {
            const Operator h = testing::random_hermitian_matrix(dim, rng);
            const double t = 3.0 * rng.uniform();
            EXPECT_LT((expm_neg_i_hermitian(h, t) - taylor_evolve(h, t)).norm(), 1e-10) << "dim " << dim;
        }
    }
}

TEST(Expm, GroupLawAndUnitarity) {
    RandomStream rng(12);
    for (int rep = 0; rep < 20; ++rep) {
        const Operator h = testing::random_hermitian_matrix(4, rng);
        const double s = rng.uniform() * 2, t = rng.uniform() * 2;
        const Operator u = expm_neg_i_hermitian(h, s + t);
        EXPECT_LT((u - expm_neg_i_hermitian(h, s) * expm_neg_i_hermitian(h, t)).norm(), 1e-11);
        EXPECT_TRUE(is_unitary(u, 1e-12));
        EXPECT_LT((expm_neg_i_hermitian(h, -t) - expm_neg_i_hermitian(h, t).adjoint()).norm(), 1e-12);
    }
}

TEST(Expm, ZeroTimeIsIdentity) {
    RandomStream rng(13);
    const Operator h = testing::random_hermitian_matrix(8, rng);
    EXPECT_LT((expm_neg_i_hermitian(h, 0.0) - identity(8)).norm(), 1e-13);
}

TEST(Expm, RejectsNonHermitian) {
    Operator a = Operator::Zero(2, 2);
    a(0, 1) = 1.0;
    EXPECT_THROW(expm_neg_i_hermitian(a, 1.0), ContractViolation);
    EXPECT_THROW(HermitianEigensystem{a}, ContractViolation);
}

TEST(Eigensystem, EvolveMatchesOneShotExponential) {
    RandomStream rng(14);
    const Operator h = testing::random_hermitian_matrix(8, rng);
    const HermitianEigensystem eig(h);
    for (double t : {0.0, 0.3, 1.7, -2.2}) EXPECT_LT((eig.evolve(t) - taylor_evolve(h, t)).norm(), 1e-10);
    EXPECT_NEAR(eig.spectral_radius(), power_norm(h), 1e-8);
}

TEST(OperatorNorm, MatchesPowerIteration) {
    RandomStream rng(15);
    for (int rep = 0; rep < 10; ++rep) {
        Operator a(4, 4);
        for (int i = 0; i < 4; ++i)
            for (int j = 0; j < 4; ++j) a(i, j) = Complex(rng.uniform() - 0.5, rng.uniform() - 0.5);
        EXPECT_NEAR(operator_norm(a), power_norm(a), 1e-8);
    }
    EXPECT_EQ(operator_norm(Operator::Zero(4, 4)), 0.0);
}

TEST(Predicates, HermitianAndUnitary) {
    RandomStream rng(16);
    const Operator h = testing::random_hermitian_matrix(4, rng);
    EXPECT_TRUE(is_hermitian(h));
    Operator skew = h;
    skew(0, 1) += 1e-6;
    EXPECT_FALSE(is_hermitian(skew));
    EXPECT_TRUE(is_unitary(testing::random_unitary_matrix(8, rng)));
    EXPECT_FALSE(is_unitary(2.0 * identity(2)));
}

TEST(Kron, FirstFactorOnHighQubits) {
    Operator x = Operator::Zero(2, 2);
    x(0, 1) = x(1, 0) = 1.0;
    // X on qubit 1 of a two-qubit register maps |00> to |10> = index 2.
    const StateVector out = kron(x, identity(2)) * basis_state(4, 0);
    EXPECT_LT((out - basis_state(4, 2)).norm(), 1e-15);
    EXPECT_LT((kron(x, identity(2)) - embed(x, {1}, 2)).norm(), 1e-15);
}

TEST(ApplyToTargets, MatchesExplicitEmbedding) {
    RandomStream rng(17);
    const std::vector<std::vector<std::size_t>> target_sets = {{0}, {3}, {1, 2}, {2, 0}, {3, 1, 0}, {0, 1, 2, 3}};
    for (const auto& targets : target_sets) {
        const Operator g = testing::random_unitary_matrix(std::size_t{1} << targets.size(), rng);
        const StateVector psi = testing::random_unit_state(16, rng);
        const StateVector fast = apply_to_targets(psi, g, std::span<const std::size_t>(targets));
        EXPECT_LT((fast - embed(g, targets, 4) * psi).norm(), 1e-13);
    }
}

TEST(ApplyToTargets, DisjointGatesCommuteAndPreserveNorm) {
    RandomStream rng(18);
    for (int rep = 0; rep < 20; ++rep) {
        const StateVector psi = testing::random_unit_state(8, rng);
        const Operator a = testing::random_unitary_matrix(2, rng);
        const Operator b = testing::random_unitary_matrix(4, rng);
        const StateVector ab = apply_to_targets(apply_to_targets(psi, a, {1}), b, {0, 2});
        const StateVector ba = apply_to_targets(apply_to_targets(psi, b, {0, 2}), a, {1});
        EXPECT_LT((ab - ba).norm(), 1e-13);
        EXPECT_NEAR(ab.norm(), 1.0, 1e-13);
    }
}

TEST(ApplyToTargets, RejectsBadArguments) {
    const StateVector psi = basis_state(8, 0);
    EXPECT_THROW(apply_to_targets(psi, identity(2), {3}), ContractViolation);
    EXPECT_THROW(apply_to_targets(psi, identity(4), {1, 1}), ContractViolation);
    EXPECT_THROW(apply_to_targets(psi, identity(2), {0, 1}), ContractViolation);
    EXPECT_THROW(apply_to_targets(StateVector::Zero(6), identity(2), {0}), ContractViolation);
}

TEST(Fidelity, ModulusOfOverlap) {
    RandomStream rng(19);
    const StateVector u = testing::random_unit_state(4, rng);
    EXPECT_NEAR(fidelity(u, u), 1.0, 1e-14);
    EXPECT_NEAR(fidelity(u, std::exp(Complex(0, 0.7)) * u), 1.0, 1e-14);
    EXPECT_NEAR(fidelity(basis_state(4, 0), basis_state(4, 3)), 0.0, 1e-15);
    EXPECT_THROW(fidelity(u, basis_state(8, 0)), ContractViolation);
    EXPECT_THROW(fidelity(u, 2.0 * u), ContractViolation);
}

TEST(BasisState, RejectsBadIndex) {
    EXPECT_THROW(basis_state(4, 4), ContractViolation);
    EXPECT_EQ(qubit_count(16), 4U);
    EXPECT_THROW(qubit_count(12), ContractViolation);
}

TEST(RandomStream, DeterministicAndIndependentPerTrial) {
    RandomStream a(5), b(5);
    for (int i = 0; i < 100; ++i) {
        const double u = a.uniform();
        EXPECT_EQ(u, b.uniform());
        EXPECT_GE(u, 0.0);
        EXPECT_LT(u, 1.0);
    }
    auto t0 = RandomStream::for_trial(5, 0), t1 = RandomStream::for_trial(5, 1);
    EXPECT_NE(t0.uniform(), t1.uniform());
    ScriptedStream s({0.9, 0.1});
    EXPECT_EQ(s.uniform(), 0.9);
    EXPECT_EQ(s.uniform(), 0.1);
    EXPECT_EQ(s.consumed(), 2U);
    const double fallback = s.uniform();
    EXPECT_GE(fallback, 0.0);
}

}  // namespace
}  // namespace cqdsim
