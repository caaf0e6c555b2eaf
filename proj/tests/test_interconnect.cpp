#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <complex>
#include <random>
#include <vector>

#include "qfa/analysis.hpp"
#include "qfa/interconnect.hpp"
#include "support/oracles.hpp"

using namespace qfa;
using Catch::Approx;

namespace {

// Direct substitution of s = 0 into the closed-form controlled gain.
constexpr double kGainBeta01 = 8.775401845111492;
constexpr double kGainBeta005 = 13.812098988857645;

PlantModel degenerate_unit_plant() {
    // Synthetic G22 = 1 so that a fully reflective controller makes
    // 1 - K21 G22 vanish identically. Not physical; exercises the error path.
    std::vector<std::vector<RationalFunction>> entries = {
        {RationalFunction(1.0), RationalFunction()},
        {RationalFunction(), RationalFunction(1.0)}};
    return PlantModel{1.0, 0.0, 0.0, 0.0, 0.0,
                      RationalMatrix(std::move(entries), {ann("b1"), cre("b2")},
                                     {ann("b1"), cre("b2")}),
                      ComplexPoly({Complex(0.5), Complex(1.0)})};
}

}  // namespace

TEST_CASE("controlled gain at resonance matches direct substitution") {
    const PlantModel plant = build_detuned_ndpa(1.0, 5.0);
    const ClosedLoopSystem sys = close_ideal_feedback(plant, build_beam_splitter(0.1));
    CHECK(std::abs(sys.b1("b1").eval(Complex(0.0))) == Approx(kGainBeta01).epsilon(1e-12));
    REQUIRE(sys.b1_row.size() == 2);
    REQUIRE(sys.b3_row.size() == 2);
}

TEST_CASE("open controller leaves the plant untouched") {
    const PlantModel plant = build_detuned_ndpa(1.0, 3.0);
    const ClosedLoopSystem sys = close_ideal_feedback(plant, build_beam_splitter(0.0));
    for (double w : {-2.0, -0.3, 0.0, 1.7}) {
        const Complex z(0.0, w);
        CHECK(std::abs(sys.b1("b1").eval(z) - plant.matrix.at(0, 0).eval(z)) < 1e-12);
        CHECK(std::abs(sys.b1("b4").eval(z) - plant.matrix.at(0, 1).eval(z)) < 1e-12);
    }
}

TEST_CASE("large pumping drives the controlled gain to 1/beta") {
    const PlantModel plant = build_ndpa(1.0, 50.0, 50.0, 50.0, 0.0);
    const ClosedLoopSystem sys = close_ideal_feedback(plant, build_beam_splitter(0.1));
    const double gain = std::abs(sys.b1("b1").eval(Complex(0.0)));
    CHECK(std::abs(gain - 10.0) / 10.0 < 0.02);
}

TEST_CASE("asymptotic approach to 1/beta is monotone in the pump") {
    double previous = std::numeric_limits<double>::infinity();
    for (double lambda : {10.0, 20.0, 50.0}) {
        const PlantModel plant = build_ndpa(1.0, lambda, lambda, lambda, 0.0);
        const ClosedLoopSystem sys = close_ideal_feedback(plant, build_beam_splitter(0.1));
        const double gap = std::abs(std::abs(sys.b1("b1").eval(Complex(0.0))) - 10.0);
        CHECK(gap < previous);
        previous = gap;
    }
}

TEST_CASE("closed form matches the constructed closure across the band") {
    for (double beta : {0.05, 0.1}) {
        const PlantModel plant = build_detuned_ndpa(1.0, 5.0);
        const ClosedLoopSystem sys = close_ideal_feedback(plant, build_beam_splitter(beta));
        const RationalFunction closed_form = closed_form_detuned_fb(1.0, 5.0, beta);
        for (int i = 0; i <= 200; ++i) {
            const Complex z(0.0, -5.0 + 0.05 * i);
            const Complex a = sys.b1("b1").eval(z);
            const Complex b = closed_form.eval(z);
            CHECK(std::abs(a - b) <= 1e-9 * std::max(1.0, std::abs(b)));
        }
    }
    CHECK(std::abs(closed_form_detuned_fb(1.0, 5.0, 0.1).eval(Complex(0.0))) ==
          Approx(kGainBeta01).epsilon(1e-12));
    CHECK(std::abs(closed_form_detuned_fb(1.0, 5.0, 0.05).eval(Complex(0.0))) ==
          Approx(kGainBeta005).epsilon(1e-12));
}

TEST_CASE("closed form with beta = 0 reduces to the plant response") {
    const RationalFunction fb = closed_form_detuned_fb(1.0, 5.0, 0.0);
    const PlantModel plant = build_detuned_ndpa(1.0, 5.0);
    for (double w : {-3.0, 0.0, 0.9})
        CHECK(std::abs(fb.eval(Complex(0.0, w)) - plant.matrix.at(0, 0).eval(Complex(0.0, w))) <
              1e-12);
}

TEST_CASE("ideal closure satisfies the symplectic identity") {
    std::mt19937_64 rng(808);
    std::uniform_real_distribution<double> beta_dist(-0.8, 0.8);
    for (int trial = 0; trial < 20; ++trial) {
        const PlantModel plant = qfa_test::random_stable_plant(rng);
        const ClosedLoopSystem sys =
            close_ideal_feedback(plant, build_beam_splitter(beta_dist(rng)));
        for (int i = 0; i <= 200; ++i) {
            const Complex z(0.0, -3.0 + 0.03 * i);
            const double diff =
                std::norm(sys.b1("b1").eval(z)) - std::norm(sys.b1("b4").eval(z));
            CHECK(diff == Approx(1.0).margin(1e-9));
        }
    }
}

TEST_CASE("alternative modulus form of the controlled gain") {
    std::mt19937_64 rng(909);
    std::uniform_real_distribution<double> beta_dist(-0.8, 0.8);
    std::uniform_real_distribution<double> freq(-3.0, 3.0);
    for (int trial = 0; trial < 20; ++trial) {
        const PlantModel plant = qfa_test::random_stable_plant(rng);
        const double beta = beta_dist(rng);
        const ClosedLoopSystem sys = close_ideal_feedback(plant, build_beam_splitter(beta));
        for (int i = 0; i < 10; ++i) {
            const Complex z(0.0, freq(rng));
            const Complex g22 = plant.matrix.at(1, 1).eval(z);
            const double expect = std::abs(std::conj(g22) - beta) / std::abs(1.0 - beta * g22);
            CHECK(std::abs(sys.b1("b1").eval(z)) == Approx(expect).margin(1e-9));
        }
    }
}

TEST_CASE("lossless limit of the lossy closure recovers the ideal one") {
    const PlantModel plant = build_ndpa(1.0, 2.0, 1.5, 2.5, 0.0);
    const ControllerModel bs = build_beam_splitter(0.2);
    const ClosedLoopSystem ideal = close_ideal_feedback(plant, bs);
    const ClosedLoopSystem lossy = close_lossy_feedback(plant, bs, FeedbackLoopConfig{1.0, 1.0});
    REQUIRE(lossy.b1_row.size() == 2);  // d3..d6 all absent
    for (double w : {-1.2, 0.0, 0.8}) {
        const Complex z(0.0, w);
        CHECK(std::abs(ideal.b1("b1").eval(z) - lossy.b1("b1").eval(z)) < 1e-12);
        CHECK(std::abs(ideal.b3("b4").eval(z) - lossy.b3("b4").eval(z)) < 1e-12);
    }
}

TEST_CASE("six-term constraint at the reference lossy operating point") {
    const PlantModel plant = build_ndpa(1.0, 5.0, 5.0, 5.0, 0.1);
    const ClosedLoopSystem sys =
        close_lossy_feedback(plant, build_beam_splitter(0.1), FeedbackLoopConfig{0.5, 0.5});
    const Complex z(0.0);
    double sum = 0.0;
    for (const auto& [port, rf] : sys.b1_row) {
        const double mag_sq = std::norm(rf.eval(z));
        sum += port.is_creation() ? -mag_sq : mag_sq;
    }
    CHECK(sum == Approx(1.0).margin(1e-9));
    CHECK(sys.b1_row.size() == 5);  // b1, b4, d3, d5, d6 (no controller noise column)
}

TEST_CASE("six-term constraint holds across random lossy draws") {
    std::mt19937_64 rng(1010);
    std::uniform_real_distribution<double> alpha(0.3, 1.0);
    std::uniform_real_distribution<double> freq(-3.0, 3.0);
    for (int trial = 0; trial < 25; ++trial) {
        const PlantModel plant = qfa_test::random_lossy_plant(rng);
        const ControllerModel controller = qfa_test::random_passive_controller(rng);
        const FeedbackLoopConfig loop{alpha(rng), alpha(rng)};
        const ClosedLoopSystem sys = close_lossy_feedback(plant, controller, loop);
        const Complex z(0.0, freq(rng));
        double sum = 0.0;
        for (const auto& [port, rf] : sys.b1_row) {
            const double mag_sq = std::norm(rf.eval(z));
            sum += port.is_creation() ? -mag_sq : mag_sq;
        }
        CHECK(sum == Approx(1.0).margin(1e-9));
    }
}

TEST_CASE("line-noise entry equals its closed form") {
    const PlantModel plant = build_ndpa(1.0, 5.0, 5.0, 5.0, 0.1);
    const FeedbackLoopConfig loop{0.5, 0.5};
    const ClosedLoopSystem sys = close_lossy_feedback(plant, build_beam_splitter(0.1), loop);
    const qfa_test::PortEliminationOracle oracle(plant, build_beam_splitter(0.1), loop,
                                                 Complex(0.0));
    CHECK(std::abs(sys.b1("d6").eval(Complex(0.0)) - oracle.b1_row.at("d6")) < 1e-10);
}

TEST_CASE("every formula entry matches the port-elimination oracle") {
    std::mt19937_64 rng(1111);
    std::uniform_real_distribution<double> freq(-3.0, 3.0);
    std::uniform_real_distribution<double> alpha(0.3, 0.999);

    // ideal four entries
    for (int trial = 0; trial < 10; ++trial) {
        const PlantModel plant = qfa_test::random_stable_plant(rng);
        const ControllerModel bs = build_beam_splitter(0.3);
        const FeedbackLoopConfig ideal{1.0, 1.0};
        const ClosedLoopSystem sys = close_ideal_feedback(plant, bs);
        for (int i = 0; i < 20; ++i) {
            const Complex z(0.0, freq(rng));
            const qfa_test::PortEliminationOracle oracle(plant, bs, ideal, z);
            for (const char* input : {"b1", "b4"}) {
                CHECK(std::abs(sys.b1(input).eval(z) - oracle.b1_row.at(input)) < 1e-10);
                CHECK(std::abs(sys.b3(input).eval(z) - oracle.b3_row.at(input)) < 1e-10);
            }
        }
    }

    // lossy six entries, both rows
    for (int trial = 0; trial < 10; ++trial) {
        const PlantModel plant = qfa_test::random_lossy_plant(rng);
        const ControllerModel controller = qfa_test::random_passive_controller(rng);
        const FeedbackLoopConfig loop{alpha(rng), alpha(rng)};
        const ClosedLoopSystem sys = close_lossy_feedback(plant, controller, loop);
        REQUIRE(sys.b1_row.size() == 6);
        for (int i = 0; i < 20; ++i) {
            const Complex z(0.0, freq(rng));
            const qfa_test::PortEliminationOracle oracle(plant, controller, loop, z);
            for (const char* input : {"b1", "b4", "d3", "d4", "d5", "d6"}) {
                CHECK(std::abs(sys.b1(input).eval(z) - oracle.b1_row.at(input)) < 1e-10);
                CHECK(std::abs(sys.b3(input).eval(z) - oracle.b3_row.at(input)) < 1e-10);
            }
        }
    }
}

TEST_CASE("phase-conjugating gain approaches sqrt(1/|K21|^2 - 1)") {
    const PlantModel plant = build_ndpa(1.0, 50.0, 50.0, 50.0, 0.0);
    const ClosedLoopSystem sys = close_ideal_feedback(plant, build_beam_splitter(0.1));
    const double gain = phase_conjugating_gain(sys, 0.0);
    CHECK(std::abs(gain - std::sqrt(99.0)) / std::sqrt(99.0) < 0.02);

    const ClosedLoopSystem balanced =
        close_ideal_feedback(plant, build_beam_splitter(1.0 / std::sqrt(2.0)));
    CHECK(phase_conjugating_gain(balanced, 0.0) == Approx(1.0).epsilon(0.02));

    const PlantModel quiet = build_detuned_ndpa(1.0, 0.0);
    const ClosedLoopSystem no_pump = close_ideal_feedback(quiet, build_beam_splitter(0.1));
    for (double w : {-1.0, 0.0, 2.0}) CHECK(phase_conjugating_gain(no_pump, w) == 0.0);
}

TEST_CASE("closed-loop poles track the stability threshold") {
    const PlantModel plant = build_detuned_ndpa(1.0, 5.0);
    const ClosedLoopSystem sys = close_ideal_feedback(plant, build_beam_splitter(0.1));
    // char poly (1-b)s^2 + s + (1+b)/4 + i b lambda, plus the plant poles at -1/2
    REQUIRE(sys.poles.size() == 4);
    CHECK(stability(sys).stable);

    const PlantModel hot = build_detuned_ndpa(1.0, 5.6);
    CHECK_FALSE(stability(close_ideal_feedback(hot, build_beam_splitter(0.1))).stable);
}

TEST_CASE("degenerate loop is rejected") {
    CHECK_THROWS_AS(close_ideal_feedback(degenerate_unit_plant(), build_beam_splitter(1.0)),
                    DegeneracyError);
}

TEST_CASE("shape preconditions of the ideal closure") {
    const PlantModel lossy = build_ndpa(1.0, 0.4, 0.0, 0.0, 0.1);
    CHECK_THROWS_AS(close_ideal_feedback(lossy, build_beam_splitter(0.1)), ParameterError);
    const PlantModel plant = build_detuned_ndpa(1.0, 1.0);
    CHECK_THROWS_AS(close_ideal_feedback(plant, qfa_test::noisy_beam_splitter(0.1, 0.4)),
                    ParameterError);
    CHECK_THROWS_AS(
        close_lossy_feedback(plant, build_beam_splitter(0.1), FeedbackLoopConfig{0.0, 0.5}),
        ParameterError);
}

TEST_CASE("classical feedback gain") {
    CHECK(classical_feedback_gain(100.0, 0.1) == Approx(100.0 / 11.0).epsilon(1e-15));
    CHECK(classical_feedback_gain(37.5, 0.0) == 37.5);
    CHECK_THROWS_AS(classical_feedback_gain(2.0, -0.5), DegeneracyError);
    // G -> infinity approaches 1/K
    CHECK(classical_feedback_gain(1e9, 0.1) == Approx(10.0).epsilon(1e-7));
}

TEST_CASE("classical sensitivity reduction at first order") {
    const double G = 100.0, K = 0.1, dG = 1e-6;
    const double fd = classical_feedback_gain(G + dG, K) - classical_feedback_gain(G, K);
    const double predicted = dG / ((1.0 + G * K) * (1.0 + G * K));
    CHECK(std::abs(fd - predicted) <= 1e-4 * std::abs(predicted));
}
