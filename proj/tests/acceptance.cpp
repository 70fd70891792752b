// Acceptance suite: one test case per criterion, each printing a PASS/FAIL
// line with the measured values. Criteria 2 and 3 share the full-fidelity
// sweep reports; everything runs at the benchmark configuration
// (dt = 10 us, t_end = 50 ms, alpha = 1000, bench plant).

#include <doctest.h>

#include <chrono>
#include <cstdarg>
#include <cmath>
#include <cstdio>
#include <optional>

#include "invsafe/controllers.hpp"
#include "invsafe/experiments.hpp"
#include "invsafe/plant.hpp"
#include "invsafe/rng.hpp"
#include "invsafe/safety_filter.hpp"
#include "invsafe/sim.hpp"
#include "support.hpp"

using namespace invsafe;

namespace {

const PlantParams kBench = PlantParams::bench_defaults();
constexpr std::uint64_t kDefaultSeed = 42;

double seconds_since(std::chrono::steady_clock::time_point start) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

void report(int criterion, bool pass, const char* fmt, ...) {
    std::printf("criterion %d [%s] ", criterion, pass ? "PASS" : "FAIL");
    va_list args;
    va_start(args, fmt);
    std::vprintf(fmt, args);
    va_end(args);
    std::printf("\n");
    std::fflush(stdout);
}

const ExperimentReport& boundary_report() {
    static const ExperimentReport report = [] {
        ExperimentOptions opts;  // benchmark defaults: dt 1e-5, t_end 50 ms, alpha 1000
        return boundary_sweep(kBench, opts);
    }();
    return report;
}

const ExperimentReport& random_report() {
    static const ExperimentReport report = [] {
        ExperimentOptions opts;
        return random_sweep(kBench, 1000, kDefaultSeed, opts);
    }();
    return report;
}

const ControllerAggregate& aggregate_of(const ExperimentReport& rep, const char* controller,
                                        const char* plant = "linear") {
    for (const ControllerAggregate& a : rep.aggregates)
        if (a.controller == controller && a.plant == plant) return a;
    REQUIRE_MESSAGE(false, "missing aggregate");
    std::abort();
}

double round4(double v) { return std::round(v * 1e4) / 1e4; }

}  // namespace

TEST_CASE("criterion 1: synthesized gains match the reported values") {
    const auto start = std::chrono::steady_clock::now();
    const LinearPlant plant = build_linear_plant(kBench);
    const GainMatrix k_lqr = lqr_gain(plant, LqrWeights::benchmark(kBench));
    const Reference ref = solve_linear_reference(kBench.current_limit, kBench);
    const SafeGainCertificate cert = synthesize_safe_gain(plant, ref.x_star);
    const double elapsed = seconds_since(start);

    const bool lqr_ok = std::fabs(round4(k_lqr.row.d) - 0.0009) <= 5e-5 &&
                        std::fabs(round4(k_lqr.row.q) - 0.0099) <= 5e-5;
    const bool safe_ok = std::fabs(cert.gain.row.d - (-0.0111)) <= 1e-3 &&
                         std::fabs(cert.gain.row.q - 0.0111) <= 1e-3;
    const bool fast = elapsed < 1.0;
    report(1, lqr_ok && safe_ok && fast,
           "K_LQR=[%.4f, %.4f] (want [0.0009, 0.0099]), K_safe=[%.4f, %.4f] "
           "(want [-0.0111, 0.0111] within 1e-3), runtime %.3f s (< 1 s)",
           k_lqr.row.d, k_lqr.row.q, cert.gain.row.d, cert.gain.row.q, elapsed);
    CHECK(lqr_ok);
    CHECK(safe_ok);
    CHECK(fast);
}

TEST_CASE("criterion 2: boundary-sweep mean costs within 2% of the reported table") {
    const auto start = std::chrono::steady_clock::now();
    const ExperimentReport& rep = boundary_report();
    const double elapsed = seconds_since(start);

    const double mean_k = aggregate_of(rep, "safe-k").mean_cost;
    const double mean_cbf = aggregate_of(rep, "cbf").mean_cost;
    const double mean_lqr = aggregate_of(rep, "lqr").mean_cost;
    const bool k_ok = std::fabs(mean_k - 82.22) / 82.22 <= 0.02;
    const bool cbf_ok = std::fabs(mean_cbf - 59.16) / 59.16 <= 0.02;
    const bool lqr_ok = std::fabs(mean_lqr - 58.57) / 58.57 <= 0.02;
    const bool fast = elapsed < 30.0;
    report(2, k_ok && cbf_ok && lqr_ok && fast,
           "mean costs K=%.2f (want 82.22), CBF=%.2f (want 59.16), LQR=%.2f "
           "(want 58.57); 300 simulations in %.1f s (< 30 s)",
           mean_k, mean_cbf, mean_lqr, elapsed);
    CHECK(k_ok);
    CHECK(cbf_ok);
    CHECK(lqr_ok);
    CHECK(fast);
}

TEST_CASE("criterion 3: safety counts on both sweeps") {
    const ExperimentReport& boundary = boundary_report();
    const int b_lqr = aggregate_of(boundary, "lqr").unsafe_count;
    const int b_cbf = aggregate_of(boundary, "cbf").unsafe_count;
    const int b_safe = aggregate_of(boundary, "safe-k").unsafe_count;

    const ExperimentReport& random = random_report();
    const int r_lqr = aggregate_of(random, "lqr").unsafe_count;
    const int r_cbf = aggregate_of(random, "cbf").unsafe_count;
    const int r_safe = aggregate_of(random, "safe-k").unsafe_count;

    const bool ok = b_lqr == 100 && b_cbf == 0 && b_safe == 0 && r_lqr > 0 &&
                    r_cbf == 0 && r_safe == 0;
    report(3, ok,
           "boundary unsafe LQR=%d/100 (want 100), CBF=%d (want 0), K=%d (want 0); "
           "random n=1000 seed=%llu unsafe LQR=%d (want > 0), CBF=%d (want 0), K=%d "
           "(want 0)",
           b_lqr, b_cbf, b_safe,
           static_cast<unsigned long long>(kDefaultSeed), r_lqr, r_cbf, r_safe);
    CHECK(b_lqr == 100);
    CHECK(b_cbf == 0);
    CHECK(b_safe == 0);
    CHECK(r_lqr > 0);
    CHECK(r_cbf == 0);
    CHECK(r_safe == 0);
}

TEST_CASE("criterion 4: per-case CBF cost dominates LQR cost in the random sweep") {
    const ExperimentReport& random = random_report();
    std::vector<double> lqr_cost(random.n_cases), cbf_cost(random.n_cases);
    for (const CaseRecord& rec : random.cases) {
        if (rec.controller == "lqr") lqr_cost[rec.case_index] = rec.cost;
        if (rec.controller == "cbf") cbf_cost[rec.case_index] = rec.cost;
    }
    int violations = 0;
    double worst = 0.0;
    for (std::size_t i = 0; i < random.n_cases; ++i) {
        const double slack = cbf_cost[i] - lqr_cost[i];
        worst = std::min(worst, slack);
        if (slack < -1e-9) ++violations;
    }
    report(4, violations == 0,
           "cost_CBF >= cost_LQR - 1e-9 on %zu/%zu cases (worst slack %.3g)",
           random.n_cases - violations, random.n_cases, worst);
    CHECK(violations == 0);
}

TEST_CASE("criterion 5: nonlinear overshoot band") {
    ExperimentOptions opts;
    const ExperimentReport rep = nonlinear_compare(kBench, opts);
    const double over_nl = aggregate_of(rep, "cbf", "nonlinear").max_overshoot;
    const double over_lin = aggregate_of(rep, "cbf", "linear").max_overshoot;

    const bool nl_positive = over_nl > 0.0;
    const bool nl_bounded = over_nl <= 0.005 * kBench.current_limit;
    const bool lin_ok = over_lin <= 1e-4 * kBench.current_limit;
    report(5, nl_positive && nl_bounded && lin_ok,
           "nonlinear max overshoot %.4f A = %.3f%% of I_max (want in (0, 0.5%%]); "
           "linear max overshoot %.2e A (want <= 5e-4 A)",
           over_nl, 100.0 * over_nl / kBench.current_limit, over_lin);
    CHECK(nl_positive);
    CHECK(nl_bounded);
    CHECK(lin_ok);
}

TEST_CASE("criterion 6: property suites") {
    const auto start = std::chrono::steady_clock::now();

    // Safety-inequality oracle sweep: 10 000 instances, zero violations.
    int inequality_failures = 0;
    {
        Xoshiro256pp rng(601);
        for (int i = 0; i < 10000; ++i) {
            const auto inst = testing::safety_inequality_instance(rng);
            if (!check_safety_inequality(inst.m, inst.y, inst.z)) ++inequality_failures;
        }
    }

    // Safe-gain certificate sweep: 100 random valid plants, zero failures.
    int certificate_failures = 0;
    {
        Xoshiro256pp rng(602);
        for (int i = 0; i < 100; ++i) {
            const auto [plant, x_star] = testing::random_safe_plant(rng);
            try {
                const SafeGainCertificate cert = synthesize_safe_gain(plant, x_star);
                const Mat2 n = plant.a - outer(plant.b, cert.gain.row);
                const double scale = std::max(1.0, x_star.norm() * n.max_abs());
                const bool ok =
                    (left_multiply(x_star, n) - x_star * cert.lambda).norm() <= 1e-8 * scale &&
                    sym_eigenvalues(n + n.transpose()).hi <= cert.lambda + 1e-8 &&
                    sym_eigenvalues(n + n.transpose()).hi <= -1e-8;
                if (!ok) ++certificate_failures;
            } catch (const std::exception&) {
                ++certificate_failures;
            }
        }
    }

    // Algorithm 1 against the grid-search projection oracle: 10 000 tuples.
    int filter_mismatches = 0;
    int filter_compared = 0;
    {
        Xoshiro256pp rng(603);
        constexpr int kGridPoints = 40001;
        constexpr double kLo = -20.0, kHi = 20.0;
        constexpr double kResolution = (kHi - kLo) / (kGridPoints - 1);
        for (int i = 0; i < 10000; ++i) {
            FilterCoefficients c{rng.uniform(-3, 3), rng.uniform(-3, 3),
                                 rng.uniform(-3, 3), rng.uniform(-3, 3)};
            if (std::fabs(c.a_cbf) < 0.05) c.a_cbf = 0.05;
            if (std::fabs(c.a_clf) < 0.05) c.a_clf = 0.05;
            const double u_nom = rng.uniform(-5.0, 5.0);
            const auto oracle = testing::grid_projection(u_nom, c, kLo, kHi, kGridPoints);
            if (!oracle) continue;
            ++filter_compared;
            const FilterStep step = closed_form_filter(u_nom, c);
            if (step.infeasible_relaxed || std::fabs(step.u_bar - *oracle) > kResolution)
                ++filter_mismatches;
        }
    }

    // Feasibility of the safe action inside the filter interval: 1e5 states.
    int feasibility_failures = 0;
    {
        const LinearPlant plant = build_linear_plant(kBench);
        const Reference ref = solve_linear_reference(kBench.current_limit, kBench);
        const GainMatrix k_safe = synthesize_safe_gain(plant, ref.x_star).gain;
        const BarrierConfig barrier{kBench.current_limit, 1000.0};
        Xoshiro256pp rng(604);
        for (int i = 0; i < 100000; ++i) {
            const Vec2 x = testing::random_in_disk(rng, kBench.current_limit);
            const FilterCoefficients c = filter_coefficients(x, ref.x_star, plant, barrier);
            const double u_safe = feedback_law(k_safe, ref, x);
            const double s_cbf = std::max({std::fabs(c.a_cbf), std::fabs(c.b_cbf), 1.0});
            const double s_clf = std::max({std::fabs(c.a_clf), std::fabs(c.b_clf), 1.0});
            if (c.a_cbf * u_safe < c.b_cbf - 1e-9 * s_cbf ||
                c.a_clf * u_safe > c.b_clf + 1e-9 * s_clf)
                ++feasibility_failures;
        }
    }

    // RK4 dt-halving convergence at the bench stiffness.
    double halving_diff = 0.0;
    {
        const LinearPlant plant = build_linear_plant(kBench);
        const Reference ref = solve_linear_reference(kBench.current_limit, kBench);
        const GainMatrix k_lqr = lqr_gain(plant, LqrWeights::benchmark(kBench));
        const Trajectory coarse = simulate(kBench, PlantKind::linear, LinearGainLaw{k_lqr},
                                           {-5, 0}, ref, SimConfig{1e-5, 50e-3});
        const Trajectory fine = simulate(kBench, PlantKind::linear, LinearGainLaw{k_lqr},
                                         {-5, 0}, ref, SimConfig{5e-6, 50e-3});
        halving_diff = (coarse.states.back() - fine.states.back()).norm();
    }

    const double elapsed = seconds_since(start);
    const bool ok = inequality_failures == 0 && certificate_failures == 0 &&
                    filter_mismatches == 0 && filter_compared > 5000 &&
                    feasibility_failures == 0 && halving_diff <= 1e-8 && elapsed < 10.0;
    report(6, ok,
           "safety-inequality violations %d/10000; certificate failures %d/100; filter-oracle "
           "mismatches %d/%d; feasibility failures %d/100000; dt-halving diff %.2e A "
           "(<= 1e-8); runtime %.1f s (< 10 s)",
           inequality_failures, certificate_failures, filter_mismatches, filter_compared,
           feasibility_failures, halving_diff, elapsed);
    CHECK(inequality_failures == 0);
    CHECK(certificate_failures == 0);
    CHECK(filter_mismatches == 0);
    CHECK(filter_compared > 5000);
    CHECK(feasibility_failures == 0);
    CHECK(halving_diff <= 1e-8);
    CHECK(elapsed < 10.0);
}

TEST_CASE("criterion 7: reference solvers match the reported operating points") {
    const Reference lin = solve_linear_reference(5.0, kBench);
    const Reference nl = solve_nonlinear_reference(5.0, kBench);
    const bool lin_ok =
        std::fabs(lin.x_star.d - 3.56) <= 0.01 && std::fabs(lin.x_star.q - 3.51) <= 0.01;
    const bool nl_ok =
        std::fabs(nl.x_star.d - 3.42) <= 0.01 && std::fabs(nl.x_star.q - 3.64) <= 0.01;
    report(7, lin_ok && nl_ok,
           "linear x*=(%.4f, %.4f) A (want (3.56, 3.51) +- 0.01); nonlinear "
           "x*=(%.4f, %.4f) A (want (3.42, 3.64) +- 0.01)",
           lin.x_star.d, lin.x_star.q, nl.x_star.d, nl.x_star.q);
    CHECK(lin_ok);
    CHECK(nl_ok);
}
