#include "doctest.h"

#include <cmath>
#include <future>

#include "qitp/propagator.hpp"
#include "oracles.hpp"

using namespace qitp;
using oracles::expm_taylor;
using oracles::rand_hermitian;

namespace {

Hamiltonian diag_hamiltonian(std::initializer_list<double> energies) {
    const long dim = static_cast<long>(energies.size());
    ComplexMatrix m = ComplexMatrix::Zero(dim, dim);
    long k = 0;
    for (double e : energies) m(k, k) = e, ++k;
    return Hamiltonian(m);
}

} // namespace

TEST_CASE("gibbs_oracle") {
    SUBCASE("beta zero is the identity with z = 2^n") {
        Rng rng(11);
        const Hamiltonian h2(rand_hermitian(4, rng));
        const GibbsOracle g2 = gibbs_oracle(h2, 0.0, 0.3);
        CHECK(max_abs_diff(g2.rho, ComplexMatrix::Identity(4, 4)) < 1e-12);
        CHECK(g2.z == doctest::Approx(4.0).epsilon(1e-12));

        const Hamiltonian h3(rand_hermitian(8, rng));
        CHECK(gibbs_oracle(h3, 0.0, -1.0).z == doctest::Approx(8.0).epsilon(1e-12));
    }

    SUBCASE("diagonal case by scalar arithmetic") {
        const Hamiltonian h = diag_hamiltonian({0.0, 1.0});
        const GibbsOracle g = gibbs_oracle(h, std::log(2.0), 0.0);
        ComplexMatrix expected = ComplexMatrix::Zero(2, 2);
        expected(0, 0) = 1.0;
        expected(1, 1) = 0.5;
        CHECK(max_abs_diff(g.rho, expected) < 1e-14);
        CHECK(g.z == doctest::Approx(1.5).epsilon(1e-14));
    }

    SUBCASE("e_trial shifts by an overall factor") {
        const Hamiltonian h = diag_hamiltonian({0.0, 2.0});
        const GibbsOracle a = gibbs_oracle(h, 0.7, 0.0);
        const GibbsOracle b = gibbs_oracle(h, 0.7, 1.3);
        CHECK(b.z == doctest::Approx(a.z * std::exp(0.7 * 1.3)).epsilon(1e-13));
    }

    SUBCASE("matches scaling-and-squaring exponential on random input") {
        Rng rng(321);
        for (int trial = 0; trial < 8; ++trial) {
            const ComplexMatrix m = rand_hermitian(8, rng);
            const Hamiltonian h(m);
            const double beta = rng.next_double() * 2.0;
            const double e_trial = h.ground_energy();
            const GibbsOracle g = gibbs_oracle(h, beta, e_trial);
            const ComplexMatrix ref = expm_taylor(
                -beta * (m - e_trial * ComplexMatrix::Identity(8, 8)));
            CHECK(max_abs_diff(g.rho, ref) < 1e-11);
            CHECK(g.z == doctest::Approx(ref.trace().real()).epsilon(1e-12));
        }
    }

    SUBCASE("group property in beta") {
        Rng rng(9);
        const Hamiltonian h(rand_hermitian(4, rng));
        const GibbsOracle g1 = gibbs_oracle(h, 0.4, 0.1);
        const GibbsOracle g2 = gibbs_oracle(h, 0.6, 0.1);
        const GibbsOracle g3 = gibbs_oracle(h, 1.0, 0.1);
        CHECK(max_abs_diff(ComplexMatrix(g1.rho * g2.rho), g3.rho) < 1e-12);
    }

    SUBCASE("negative beta is rejected") {
        const Hamiltonian h = diag_hamiltonian({0.0, 1.0});
        CHECK_THROWS_AS(gibbs_oracle(h, -0.5, 0.0), DomainError);
    }
}

TEST_CASE("feasibility") {
    const Hamiltonian h = diag_hamiltonian({0.0, 1.0});

    SUBCASE("trial energy above the ground energy is infeasible at p = 1") {
        CHECK_THROWS_AS(check_feasible(h, {2.0, 0.5, 1.0}), InfeasibleParamsError);
    }

    SUBCASE("trial energy at the ground energy is feasible") {
        CHECK_NOTHROW(check_feasible(h, {2.0, 0.0, 1.0}));
    }

    SUBCASE("p below one buys headroom ln(1/p) / (2 tau)") {
        // tau = 0.5: feasible while e_trial - e0 <= ln(1.25) ~ 0.2231
        CHECK_NOTHROW(check_feasible(h, {1.0, 0.2, 0.8}));
        CHECK_THROWS_AS(check_feasible(h, {1.0, 0.3, 0.8}), InfeasibleParamsError);
    }

    SUBCASE("p outside (0, 1] is rejected") {
        CHECK_THROWS_AS(check_feasible(h, {1.0, 0.0, 0.0}), DomainError);
        CHECK_THROWS_AS(check_feasible(h, {1.0, 0.0, 1.5}), DomainError);
    }
}

TEST_CASE("qitp_gs_matrix") {
    SUBCASE("tau zero gives the balanced rotation") {
        const Hamiltonian h = diag_hamiltonian({0.3, 1.7});
        const ComplexMatrix m = qitp_gs_matrix(h, 0.0, 0.0);
        const double r = 1.0 / std::sqrt(2.0);
        ComplexMatrix expected(4, 4);
        expected << r, 0, r, 0,
                    0, r, 0, r,
                    -r, 0, r, 0,
                    0, -r, 0, r;
        CHECK(max_abs_diff(m, expected) < 1e-14);
    }

    SUBCASE("diagonal case by scalar arithmetic, ancilla block first") {
        const Hamiltonian h = diag_hamiltonian({0.0, 1.0});
        const double tau = 0.8, et = 0.0;
        const ComplexMatrix m = qitp_gs_matrix(h, tau, et);
        for (int k = 0; k < 2; ++k) {
            const double e = k == 0 ? 0.0 : 1.0;
            const double d = std::exp(-tau * (e - et)) /
                             std::sqrt(1.0 + std::exp(-2.0 * tau * (e - et)));
            const double s = 1.0 / std::sqrt(1.0 + std::exp(-2.0 * tau * (e - et)));
            CHECK(m(k, k).real() == doctest::Approx(d).epsilon(1e-13));
            CHECK(m(k, k + 2).real() == doctest::Approx(s).epsilon(1e-13));
            CHECK(m(k + 2, k).real() == doctest::Approx(-s).epsilon(1e-13));
            CHECK(m(k + 2, k + 2).real() == doctest::Approx(d).epsilon(1e-13));
        }
    }

    SUBCASE("unitary for random hamiltonians") {
        Rng rng(77);
        for (int trial = 0; trial < 6; ++trial) {
            const Hamiltonian h(rand_hermitian(8, rng));
            const double tau = rng.next_double() * 2.0;
            const ComplexMatrix m = qitp_gs_matrix(h, tau, h.ground_energy());
            CHECK(max_abs_diff(ComplexMatrix(m * m.adjoint()),
                               ComplexMatrix::Identity(16, 16)) < 1e-12);
        }
    }
}

TEST_CASE("qitp_th_matrix") {
    SUBCASE("beta zero at p = 1 is the identity") {
        const Hamiltonian h = diag_hamiltonian({0.4, 2.2});
        const ComplexMatrix m = qitp_th_matrix(h, {0.0, 0.0, 1.0});
        CHECK(max_abs_diff(m, ComplexMatrix::Identity(4, 4)) < 1e-14);
    }

    SUBCASE("beta zero at p = 0.8 mixes sqrt(0.8) and sqrt(0.2)") {
        const Hamiltonian h = diag_hamiltonian({0.4, 2.2});
        const ComplexMatrix m = qitp_th_matrix(h, {0.0, 0.0, 0.8});
        const double c = std::sqrt(0.8), s = std::sqrt(0.2);
        ComplexMatrix expected(4, 4);
        expected << c, 0, s, 0,
                    0, c, 0, s,
                    -s, 0, c, 0,
                    0, -s, 0, c;
        CHECK(max_abs_diff(m, expected) < 1e-14);
    }

    SUBCASE("diagonal case by scalar arithmetic") {
        const Hamiltonian h = diag_hamiltonian({0.0, 1.0});
        const QitpParams params{1.0, 0.0, 0.9}; // tau = 0.5
        const ComplexMatrix m = qitp_th_matrix(h, params);
        for (int k = 0; k < 2; ++k) {
            const double e = k == 0 ? 0.0 : 1.0;
            const double c = std::sqrt(0.9) * std::exp(-0.5 * e);
            const double s = std::sqrt(1.0 - 0.9 * std::exp(-1.0 * e));
            CHECK(m(k, k).real() == doctest::Approx(c).epsilon(1e-13));
            CHECK(m(k, k + 2).real() == doctest::Approx(s).epsilon(1e-13));
            CHECK(m(k + 2, k).real() == doctest::Approx(-s).epsilon(1e-13));
        }
    }

    SUBCASE("unitary for random hamiltonians") {
        Rng rng(44);
        for (int trial = 0; trial < 6; ++trial) {
            const Hamiltonian h(rand_hermitian(8, rng));
            const QitpParams params{0.1 + rng.next_double(), h.ground_energy(),
                                    0.5 + 0.5 * rng.next_double()};
            const ComplexMatrix m = qitp_th_matrix(h, params);
            CHECK(max_abs_diff(ComplexMatrix(m * m.adjoint()),
                               ComplexMatrix::Identity(16, 16)) < 1e-12);
        }
    }

    SUBCASE("infeasible parameters are rejected") {
        const Hamiltonian h = diag_hamiltonian({0.0, 1.0});
        CHECK_THROWS_AS(qitp_th_matrix(h, {2.0, 0.5, 1.0}), InfeasibleParamsError);
    }
}

TEST_CASE("success_probability") {
    const Hamiltonian h = diag_hamiltonian({0.0, 1.0, 2.0, 3.0});

    SUBCASE("beta zero equals p") {
        CHECK(success_probability(h, {0.0, 0.0, 0.8}) ==
              doctest::Approx(0.8).epsilon(1e-14));
        CHECK(success_probability(h, {0.0, 0.0, 1.0}) ==
              doctest::Approx(1.0).epsilon(1e-14));
    }

    SUBCASE("scalar cross-check at beta = 1") {
        const double z = 1.0 + std::exp(-1.0) + std::exp(-2.0) + std::exp(-3.0);
        CHECK(success_probability(h, {1.0, 0.0, 1.0}) ==
              doctest::Approx(z / 4.0).epsilon(1e-13));
    }

    SUBCASE("each additional iteration costs a factor p") {
        const QitpParams params{0.5, 0.0, 0.8};
        const double p1 = success_probability(h, params, 1);
        const double p3 = success_probability(h, params, 3);
        CHECK(p3 == doctest::Approx(p1 * 0.64).epsilon(1e-13));
    }

    SUBCASE("strictly decreasing in beta toward 1 / 2^n") {
        double prev = 1.0 + 1e-9;
        for (double beta : {0.0, 0.5, 1.0, 2.0, 4.0, 8.0, 16.0}) {
            const double ps = success_probability(h, {beta, 0.0, 1.0});
            CHECK(ps < prev);
            CHECK(ps > 0.25);
            prev = ps;
        }
        CHECK(success_probability(h, {200.0, 0.0, 1.0}) ==
              doctest::Approx(0.25).epsilon(1e-9));
    }
}

TEST_CASE("make_trotter_plan") {
    const Hamiltonian h3 = heisenberg_pair_model(3, PairCoupling{1, 1, 1});

    SUBCASE("term-major ordering, one ancilla per entry") {
        const TrotterPlan plan = make_trotter_plan(h3, 0.02, 4);
        CHECK(plan.n_steps == 4);
        CHECK(plan.delta_beta == doctest::Approx(0.005).epsilon(1e-14));
        REQUIRE(plan.entries.size() == 12);
        CHECK(plan.n_qitp_ancillas == 12);
        for (std::size_t k = 0; k < plan.entries.size(); ++k) {
            CHECK(plan.entries[k].term_index == k % 3);
            CHECK(plan.entries[k].tau == doctest::Approx(0.0025).epsilon(1e-14));
        }
        CHECK(plan.beta() == doctest::Approx(0.02).epsilon(1e-14));
    }

    SUBCASE("requires pair terms and a positive step count") {
        const Hamiltonian dense_only(h3.dense());
        CHECK_THROWS_AS(make_trotter_plan(dense_only, 0.1, 1), NoPairTermsError);
        CHECK_THROWS_AS(make_trotter_plan(h3, 0.1, 0), BadSizeError);
    }
}

TEST_CASE("trotterized_gibbs_oracle") {
    SUBCASE("single pair term reproduces the exact propagator") {
        const Hamiltonian h = heisenberg_pair_model(2, PairCoupling{0.7, 0.3, 1.1});
        const double beta = 0.8;
        const TrotterPlan plan = make_trotter_plan(h, beta, 1);
        const GibbsOracle exact = gibbs_oracle(h, beta, h.ground_energy());
        const GibbsOracle trot =
            trotterized_gibbs_oracle(h, plan, h.ground_energy());
        CHECK(max_abs_diff(trot.rho, exact.rho) < 1e-12);
        CHECK(trot.z == doctest::Approx(exact.z).epsilon(1e-12));
    }

    SUBCASE("commuting pair terms are exact for any step count") {
        const Hamiltonian h = heisenberg_pair_model(3, PairCoupling{0, 0, 0.9});
        const double beta = 1.3;
        const GibbsOracle exact = gibbs_oracle(h, beta, 0.25);
        for (int steps : {1, 3}) {
            const GibbsOracle trot =
                trotterized_gibbs_oracle(h, make_trotter_plan(h, beta, steps), 0.25);
            CHECK(max_abs_diff(trot.rho, exact.rho) < 1e-10);
            CHECK(trot.z == doctest::Approx(exact.z).epsilon(1e-10));
        }
    }

    SUBCASE("first-order convergence: doubling steps roughly halves the error") {
        const Hamiltonian h = heisenberg_pair_model(3, PairCoupling{1, 1, 1});
        const double beta = 0.4, et = h.ground_energy();
        const GibbsOracle exact = gibbs_oracle(h, beta, et);
        const ComplexMatrix ref = exact.rho / exact.z;
        const auto err = [&](int steps) {
            const GibbsOracle trot =
                trotterized_gibbs_oracle(h, make_trotter_plan(h, beta, steps), et);
            return max_abs_diff(trot.rho / trot.z, ref);
        };
        const double e2 = err(2), e4 = err(4), e8 = err(8);
        CHECK(e4 < e2);
        CHECK(e8 < e4);
        CHECK(e4 / e2 == doctest::Approx(0.5).epsilon(0.25));
        CHECK(e8 / e4 == doctest::Approx(0.5).epsilon(0.20));
    }
}

TEST_CASE("trotter_success_probability") {
    SUBCASE("single exact term matches the closed form") {
        const Hamiltonian h = heisenberg_pair_model(2, PairCoupling{0.4, 0.6, 0.2});
        const TrotterPlan plan = make_trotter_plan(h, 0.9, 1);
        const double e0 = pair_term_e_trial(h.pair_terms()[0]);
        CHECK(e0 == doctest::Approx(h.ground_energy()).epsilon(1e-12));
        CHECK(trotter_success_probability(h, plan, 0.8) ==
              doctest::Approx(success_probability(h, {0.9, e0, 0.8})).epsilon(1e-12));
    }

    SUBCASE("bounded by p^N and decreasing in beta") {
        const Hamiltonian h = heisenberg_pair_model(3, PairCoupling{1, 0.5, 0.7});
        double prev = 1.0;
        for (double beta : {0.1, 0.4, 0.8}) {
            const TrotterPlan plan = make_trotter_plan(h, beta, 2);
            const double ps = trotter_success_probability(h, plan, 0.9);
            CHECK(ps > 0.0);
            CHECK(ps <= std::pow(0.9, 6) + 1e-12);
            CHECK(ps < prev);
            prev = ps;
        }
    }
}

TEST_CASE("thermal oracle cache is shared and concurrency-safe") {
    Rng rng(5150);
    const Hamiltonian h(rand_hermitian(8, rng));
    ThermalOracleCache cache(h);

    const auto first = cache.get(0.7, 0.1);
    CHECK(cache.get(0.7, 0.1).get() == first.get()); // same entry, no recompute
    CHECK(cache.get(0.8, 0.1).get() != first.get());

    std::vector<std::future<double>> futures;
    for (int t = 0; t < 16; ++t)
        futures.push_back(std::async(std::launch::async, [&cache, t] {
            double acc = 0.0;
            for (int k = 0; k < 50; ++k)
                acc += cache.get(0.1 * ((t + k) % 7), 0.0)->z;
            return acc;
        }));
    for (auto& f : futures) CHECK(f.get() > 0.0);

    const GibbsOracle direct = gibbs_oracle(h, 0.7, 0.1);
    CHECK(max_abs_diff(first->rho, direct.rho) == 0.0);
}
