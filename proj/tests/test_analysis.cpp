#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <complex>
#include <random>
#include <vector>

#include "qfa/analysis.hpp"
#include "support/oracles.hpp"

using namespace qfa;
using Catch::Approx;

TEST_CASE("stability verdicts around the pump threshold") {
    const StabilityVerdict just_stable = stability(build_ndpa(1.0, 0.49, 0.0, 0.0, 0.0));
    CHECK(just_stable.stable);
    CHECK(just_stable.max_real_part == Approx(-0.01).margin(1e-9));

    const StabilityVerdict unstable = stability(build_ndpa(1.0, 0.51, 0.0, 0.0, 0.0));
    CHECK_FALSE(unstable.stable);
    CHECK(unstable.max_real_part == Approx(0.01).margin(1e-9));

    const StabilityVerdict marginal = stability(build_ndpa(1.0, 0.5, 0.0, 0.0, 0.0));
    CHECK_FALSE(marginal.stable);
    CHECK(marginal.marginal);
}

TEST_CASE("controlled detuned plant: stable below the bound, unstable above") {
    const ControllerModel bs = build_beam_splitter(0.1);
    CHECK(stability(close_ideal_feedback(build_detuned_ndpa(1.0, 5.0), bs)).stable);
    CHECK_FALSE(stability(close_ideal_feedback(build_detuned_ndpa(1.0, 5.6), bs)).stable);
}

TEST_CASE("closed-form stability threshold") {
    CHECK(detuned_stability_threshold(1.0, 0.1) == Approx(5.527707983925666).epsilon(1e-12));
    CHECK(detuned_stability_threshold(1.0, 0.05) == Approx(10.513149660756936).epsilon(1e-12));
    CHECK(std::isinf(detuned_stability_threshold(1.0, 0.0)));
    CHECK_THROWS_AS(detuned_stability_threshold(1.0, 1.0), ParameterError);
    CHECK_THROWS_AS(detuned_stability_threshold(0.0, 0.1), ParameterError);
}

TEST_CASE("closed-form verdict agrees with pole signs on random draws") {
    std::mt19937_64 rng(1212);
    std::uniform_real_distribution<double> beta_dist(0.02, 0.9);
    std::uniform_real_distribution<double> frac(0.1, 2.0);
    int checked = 0;
    for (int trial = 0; trial < 200; ++trial) {
        const double beta = beta_dist(rng);
        const double lambda_max = detuned_stability_threshold(1.0, beta);
        const double lambda = frac(rng) * lambda_max;
        if (std::abs(lambda - lambda_max) < 1e-6) continue;  // guard band
        const ClosedLoopSystem sys =
            close_ideal_feedback(build_detuned_ndpa(1.0, lambda), build_beam_splitter(beta));
        CHECK(stability(sys).stable == (lambda < lambda_max));
        ++checked;
    }
    CHECK(checked >= 195);
}

TEST_CASE("gain profile of the detuned plant") {
    const GainCurve curve = gain_profile(build_detuned_ndpa(1.0, 5.0), -2.0, 2.0, 401);
    const auto db = curve.gain_db();
    const std::size_t peak = std::max_element(db.begin(), db.end()) - db.begin();
    CHECK(curve.omegas[peak] == Approx(0.0).margin(1e-12));
    CHECK(db[peak] == Approx(20.0 * std::log10(std::sqrt(401.0))).epsilon(1e-12));
    // monotone decay away from the peak
    for (std::size_t i = peak; i + 1 < db.size(); ++i) CHECK(db[i + 1] <= db[i] + 1e-12);

    const GainCurve flat = gain_profile(build_detuned_ndpa(1.0, 0.0), -2.0, 2.0, 101);
    for (double v : flat.gain_db()) CHECK(v == Approx(0.0).margin(1e-12));
}

TEST_CASE("closed-loop gain profile peaks at the reduced level") {
    const ClosedLoopSystem sys =
        close_ideal_feedback(build_detuned_ndpa(1.0, 5.0), build_beam_splitter(0.1));
    const GainCurve curve = gain_profile(sys, -1.0, 1.0, 201);
    const auto db = curve.gain_db();
    const std::size_t peak = std::max_element(db.begin(), db.end()) - db.begin();
    CHECK(curve.omegas[peak] == Approx(0.0).margin(1e-12));
    CHECK(db[peak] == Approx(18.865340258013376).epsilon(1e-9));
}

TEST_CASE("profile rejects bad grids and axis poles") {
    const PlantModel plant = build_detuned_ndpa(1.0, 1.0);
    CHECK_THROWS_AS(gain_profile(plant, -1.0, 1.0, 1), ParameterError);
    CHECK_THROWS_AS(gain_profile(plant, 1.0, -1.0, 11), ParameterError);
    const PlantModel threshold = build_ndpa(1.0, 0.5, 0.0, 0.0, 0.0);  // pole at s = 0
    CHECK_THROWS_AS(gain_profile(threshold, -1.0, 1.0, 11), PoleEvaluationError);
}

TEST_CASE("effective bandwidth is nearly pump-independent") {
    for (double lambda : {1.0, 3.0, 5.0}) {
        const GainCurve curve = gain_profile(build_detuned_ndpa(1.0, lambda), -2.0, 2.0, 4001);
        const double bw = effective_bandwidth(curve, 3.0);
        const double analytic = qfa_test::detuned_bandwidth_analytic(1.0, lambda, 3.0);
        CHECK(bw == Approx(analytic).margin(1e-3));
    }
}

TEST_CASE("bandwidth error paths") {
    const GainCurve flat = gain_profile(build_detuned_ndpa(1.0, 0.0), -2.0, 2.0, 101);
    CHECK_THROWS_AS(effective_bandwidth(flat, 3.0), RangeError);

    // peak drops by < 3 dB inside a too-narrow window
    const GainCurve narrow = gain_profile(build_detuned_ndpa(1.0, 5.0), -0.1, 0.1, 101);
    CHECK_THROWS_AS(effective_bandwidth(narrow, 3.0), RangeError);
    CHECK_THROWS_AS(effective_bandwidth(narrow, -1.0), ParameterError);
}

TEST_CASE("ideal added noise and the quantum limit") {
    const PlantModel plant = build_ndpa(1.0, 0.4, 0.0, 0.0, 0.0);
    const NoiseReport r = added_noise(plant, 0.0, NoiseFlavor::ideal);
    const double g = 1.64 / 0.36;
    CHECK(r.a_value == Approx((g * g - 1.0) / (2.0 * g * g)).epsilon(1e-12));
    CHECK(r.a_value == Approx(r.half_term + r.gain_term + r.excess_term).margin(1e-12));
    CHECK(r.excess_term == 0.0);

    // near threshold the gain blows up and the added noise approaches 1/2
    const NoiseReport limit = added_noise(build_ndpa(1.0, 0.4999, 0.0, 0.0, 0.0), 0.0,
                                          NoiseFlavor::ideal);
    CHECK(std::abs(limit.a_value - 0.5) < 1e-5);
}

TEST_CASE("plant-flavor noise adds the excess term") {
    const PlantModel plant = build_ndpa(1.0, 5.0, 5.0, 5.0, 0.1);
    const NoiseReport r = added_noise(plant, 0.0, NoiseFlavor::plant);
    const Complex z(0.0);
    const double g_sq = std::norm(plant.matrix.at(0, 0).eval(z));
    const double ex_sq = std::norm(plant.matrix.at(0, 2).eval(z));
    CHECK(r.excess_term == Approx(ex_sq / g_sq).epsilon(1e-12));
    CHECK(r.a_value == Approx(0.5 - 0.5 / g_sq + ex_sq / g_sq).epsilon(1e-12));
    CHECK(r.a_value >= 0.0);
}

TEST_CASE("closed-loop noise equals the ratio-of-sums oracle") {
    // gamma = 0 with lossy lines: excess vanishes but line noises are present
    const PlantModel lossless = build_detuned_ndpa(1.0, 5.0);
    const ClosedLoopSystem sys0 =
        close_lossy_feedback(lossless, build_beam_splitter(0.1), FeedbackLoopConfig{0.5, 0.5});
    const NoiseReport r0 = added_noise(sys0, 0.0, NoiseFlavor::closed_loop);
    CHECK(r0.excess_term == 0.0);
    CHECK(r0.a_value == Approx(qfa_test::noise_ratio_of_sums(sys0, 0.0)).margin(1e-10));

    // gamma > 0, controller noise column, lossy lines: every term is active
    const PlantModel lossy = build_ndpa(1.0, 5.0, 5.0, 5.0, 0.1);
    const ClosedLoopSystem sys1 = close_lossy_feedback(
        lossy, qfa_test::noisy_beam_splitter(0.1, 0.5, false), FeedbackLoopConfig{0.7, 0.9});
    for (double w : {-0.6, 0.0, 1.1}) {
        const NoiseReport r1 = added_noise(sys1, w, NoiseFlavor::closed_loop);
        CHECK(r1.a_value == Approx(qfa_test::noise_ratio_of_sums(sys1, w)).margin(1e-9));
    }
}

TEST_CASE("degenerate gain is reported") {
    std::vector<std::vector<RationalFunction>> entries = {
        {RationalFunction(ComplexPoly::variable(),
                          ComplexPoly::variable() + ComplexPoly(Complex(1.0))),
         RationalFunction()},
        {RationalFunction(), RationalFunction(1.0)}};
    const PlantModel synthetic{1.0, 0.0, 0.0, 0.0, 0.0,
                               RationalMatrix(std::move(entries), {ann("b1"), cre("b2")},
                                              {ann("b1"), cre("b2")}),
                               ComplexPoly({Complex(1.0), Complex(1.0)})};
    CHECK_THROWS_AS(added_noise(synthetic, 0.0, NoiseFlavor::ideal), DegeneracyError);
}

TEST_CASE("sensitivity bound at the reference operating point") {
    const PlantModel plant = build_detuned_ndpa(1.0, 5.0);
    CHECK(sensitivity_bound(plant, build_beam_splitter(0.1), 0.0) ==
          Approx(0.4381079543383235).epsilon(1e-12));
    CHECK(sensitivity_bound(plant, build_beam_splitter(0.0), 0.0) == 1.0);
    // growing loop gain sends the bound to zero
    CHECK(sensitivity_bound(build_detuned_ndpa(1.0, 1000.0), build_beam_splitter(0.1), 0.0) <
          0.01);
}

TEST_CASE("first-order fluctuation matches finite differences") {
    std::mt19937_64 rng(1313);
    std::uniform_real_distribution<double> mag(0.5, 5.0);
    std::uniform_real_distribution<double> angle(0.0, 2.0 * M_PI);
    std::uniform_real_distribution<double> kmag(0.05, 0.9);
    const double eps = 1e-6;
    for (int trial = 0; trial < 100; ++trial) {
        const Complex g22 = mag(rng) * std::exp(Complex(0.0, angle(rng)));
        const Complex k21 = kmag(rng) * std::exp(Complex(0.0, angle(rng)));
        const Complex du = std::exp(Complex(0.0, angle(rng)));
        const Complex dg = eps * du;

        const double f0 = qfa_test::exact_gain_ratio(g22, k21);
        const double f1 = qfa_test::exact_gain_ratio(g22 + dg, k21);
        const double realized = (f1 - f0) / f0;
        const double predicted = first_order_gain_fluctuation(g22, k21, dg);
        CHECK(std::abs(realized - predicted) <= 1e-4 * std::max(std::abs(realized), eps));
    }
}

TEST_CASE("fluctuation formula edge cases") {
    CHECK(first_order_gain_fluctuation(Complex(2.0, 1.0), Complex(0.3), Complex(0.0)) == 0.0);
    // K21 = 0 reduces to Re(G22* dG22)/|G22|^2
    const Complex g22(1.5, -2.0), dg(3e-7, -1e-7);
    const double got = first_order_gain_fluctuation(g22, Complex(0.0), dg);
    const double expect = (std::conj(g22) * dg).real() / std::norm(g22);
    CHECK(got == Approx(expect).epsilon(1e-14));
}

TEST_CASE("loop-gain bode magnitudes") {
    const PlantModel plant = build_detuned_ndpa(1.0, 5.0);
    const GainCurve curve = loop_gain_bode(plant, build_beam_splitter(0.1), {0.0, 0.5, 1.0});
    CHECK(std::abs(curve.values[0]) == Approx(2.0024984394500787).epsilon(1e-12));

    const GainCurve open = loop_gain_bode(plant, build_beam_splitter(0.0), {0.0, 1.0});
    for (const Complex& v : open.values) CHECK(std::abs(v) == 0.0);

    const PlantModel passive = build_ndpa(1.0, 0.0, 0.0, 0.0, 0.0);
    const GainCurve flat = loop_gain_bode(passive, build_beam_splitter(0.3),
                                          {-2.0, -1.0, 0.0, 1.0, 2.0});
    for (const Complex& v : flat.values) CHECK(std::abs(v) == Approx(0.3).margin(1e-12));
}

TEST_CASE("phase unwrapping keeps steps below half a turn") {
    const PlantModel plant = build_detuned_ndpa(1.0, 5.0);
    std::vector<double> grid;
    for (int i = 0; i <= 400; ++i) grid.push_back(-4.0 + 0.02 * i);
    const GainCurve curve = loop_gain_bode(plant, build_beam_splitter(0.1), grid);
    const auto raw = curve.phase_deg_raw();
    const auto unwrapped = curve.phase_deg();
    for (std::size_t i = 1; i < unwrapped.size(); ++i)
        CHECK(std::abs(unwrapped[i] - unwrapped[i - 1]) <= 180.0);
    for (std::size_t i = 0; i < unwrapped.size(); ++i) {
        const double k = (unwrapped[i] - raw[i]) / 360.0;
        CHECK(std::abs(k - std::round(k)) < 1e-9);
    }
}
