#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <optional>
#include <random>

#include "rlmix/dynamics.hpp"
#include "rlmix/errors.hpp"
#include "rlmix/initstate.hpp"
#include "rlmix/kernels.hpp"
#include "rlmix/lattice.hpp"
#include "rlmix/mixing.hpp"
#include "rlmix/spectral.hpp"

using namespace rlmix;
using dynamics::AmplitudeState;
using lattice::CouplingParams;
using lattice::LatticeSpec;
using mixing::MixClass;

namespace {

constexpr double kPi = std::numbers::pi;

CouplingParams sym(double v) { return CouplingParams::make(v, kPi / 4.0, 1.0); }

AmplitudeState equal_pair() {
    const double a = 1.0 / std::sqrt(2.0);
    return AmplitudeState{0.0, {Complex(a, 0.0), Complex(0.0, 0.0), Complex(a, 0.0)}};
}

AmplitudeState e1(std::size_t dim) {
    CVector psi(dim, Complex(0.0, 0.0));
    psi[0] = 1.0;
    return AmplitudeState{0.0, psi};
}

double l1(const RVector& a, const RVector& b) {
    return kernels::l1_distance(a.size(), a.data(), b.data());
}

} // namespace

TEST_CASE("stationary distribution classifier") {
    SUBCASE("first-node excitation mixes conventionally to the dark profile") {
        for (const double r : {0.25, 0.4, 0.8}) {
            const auto sd = spectral::eigensolve(lattice::build_dbs(sym(r)));
            const auto mc = dynamics::decompose(e1(3), sd);
            const auto st = mixing::stationary_distribution(sd, mc);
            CHECK(st.cls == MixClass::conventional);
            REQUIRE(st.p_st.has_value());
            CHECK(l1(*st.p_st, {0.5, 0.0, 0.5}) < 1e-8);
        }
    }

    SUBCASE("dark-orthogonal excitation below the EP mixes unconventionally") {
        const auto sd = spectral::eigensolve(lattice::build_dbs(sym(0.4)));
        const auto mc = dynamics::decompose(equal_pair(), sd);
        const auto st = mixing::stationary_distribution(sd, mc);
        CHECK(st.cls == MixClass::unconventional);
        REQUIRE(st.p_st.has_value());
        REQUIRE(st.slow_modes.size() == 1);
        // the limit is the slow eigenvector's distribution; lambda_- sits
        // at sorted index 1
        CHECK(st.slow_modes[0] == 1);
        RVector expect(3);
        kernels::abs2(3, sd.right[1].data(), expect.data());
        double total = expect[0] + expect[1] + expect[2];
        for (double& x : expect) x /= total;
        CHECK(l1(*st.p_st, expect) < 1e-8);
    }

    SUBCASE("dark-orthogonal excitation beyond the EP does not mix") {
        const auto sd = spectral::eigensolve(lattice::build_dbs(sym(0.6)));
        const auto mc = dynamics::decompose(equal_pair(), sd);
        const auto st = mixing::stationary_distribution(sd, mc);
        CHECK(st.cls == MixClass::non_mixing);
        CHECK(!st.p_st.has_value());
        CHECK(st.slow_modes.size() == 2);
    }

    SUBCASE("a zero state is rejected") {
        const auto sd = spectral::eigensolve(lattice::build_dbs(sym(0.4)));
        dynamics::ModeCoefficients mc;
        mc.c.assign(3, Complex(0.0, 0.0));
        CHECK_THROWS_AS(mixing::stationary_distribution(sd, mc), DegenerateInputError);
    }
}

TEST_CASE("mixing time measurement") {
    SUBCASE("a dark start mixes at time zero") {
        const auto spec = LatticeSpec::linear(sym(0.9), 3);
        const auto rep = mixing::mixing_report(spec, initstate::dark_state(spec), 1e-3);
        REQUIRE(rep.t_mix.has_value());
        CHECK(*rep.t_mix == 0.0);
    }

    SUBCASE("slower mixing further below the exceptional point") {
        const auto t04 = mixing::mixing_report(LatticeSpec::dbs(sym(0.4)), e1(3), 1e-3);
        const auto t02 = mixing::mixing_report(LatticeSpec::dbs(sym(0.2)), e1(3), 1e-3);
        REQUIRE(t04.t_mix.has_value());
        REQUIRE(t02.t_mix.has_value());
        CHECK(*t02.t_mix > *t04.t_mix);
    }

    SUBCASE("minimum sits near the exceptional point") {
        double best_t = 1e300;
        double best_r = 0.0;
        for (double r = 0.15; r < 1.0001; r += 0.05) {
            const auto rep = mixing::mixing_report(LatticeSpec::dbs(sym(r)), e1(3), 1e-3);
            REQUIRE(rep.t_mix.has_value());
            if (*rep.t_mix < best_t) {
                best_t = *rep.t_mix;
                best_r = r;
            }
        }
        CHECK(std::abs(best_r - 0.5) <= 0.1);
    }

    SUBCASE("last-crossing beats a transient dip") {
        // synthetic distance series dipping below epsilon and recovering
        dynamics::Trajectory traj;
        traj.times = {0.0, 1.0, 2.0, 3.0, 4.0, 5.0};
        const RVector p_st = {1.0, 0.0};
        const std::vector<RVector> dists = {{0.5, 0.5},     {0.9995, 0.0005}, {0.7, 0.3},
                                            {0.99, 0.01},   {0.9999, 0.0001}, {0.99995, 0.00005}};
        for (const RVector& row : dists) {
            traj.p_norm.push_back(row);
            traj.p_total.push_back(1.0);
        }
        const auto mt = mixing::mixing_time(traj, p_st, 1e-3);
        REQUIRE(mt.t_mix.has_value());
        REQUIRE(mt.first_crossing.has_value());
        CHECK(*mt.first_crossing < 1.5);
        CHECK(*mt.t_mix > 3.0); // the dip at t=1 does not count
        CHECK_THROWS_AS(mixing::mixing_time(traj, p_st, 0.0), ParameterError);
    }
}

TEST_CASE("full mixing reports") {
    SUBCASE("localized stationary region: distance decides speed") {
        const auto p = CouplingParams::make(1.0, 0.1 * kPi, 1.0);
        const auto spec = LatticeSpec::linear(p, 9);
        // the dark profile piles up at the far edge, so exciting the far
        // node mixes faster than exciting the near one
        const auto near_rep =
            mixing::mixing_report(spec, initstate::basis_excitation(spec, 1), 1e-3);
        const auto far_rep =
            mixing::mixing_report(spec, initstate::basis_excitation(spec, 19), 1e-3);
        REQUIRE(near_rep.t_mix.has_value());
        REQUIRE(far_rep.t_mix.has_value());
        CHECK(*near_rep.t_mix > *far_rep.t_mix);
    }

    SUBCASE("above the symmetric LREP the symmetric chain mixes slower") {
        const std::size_t nl = 9;
        const double r = 3.0; // above the symmetric LREP ~ 2.26
        const auto sym_spec = LatticeSpec::linear(sym(r), nl);
        const auto asym_spec = LatticeSpec::linear(CouplingParams::make(r, 0.21 * kPi, 1.0), nl);
        const auto ts = mixing::mixing_report(sym_spec, e1(sym_spec.dim()), 1e-3);
        const auto ta = mixing::mixing_report(asym_spec, e1(asym_spec.dim()), 1e-3);
        REQUIRE(ts.t_mix.has_value());
        REQUIRE(ta.t_mix.has_value());
        CHECK(*ts.t_mix > *ta.t_mix);
    }

    SUBCASE("the ring mixes faster than the splitter at the same coupling") {
        const double v = 1.0;
        const auto ring = LatticeSpec::ring_balanced(sym(v), 3);
        const auto tr = mixing::mixing_report(ring, e1(ring.dim()), 1e-3);
        const auto td = mixing::mixing_report(LatticeSpec::dbs(sym(v)), e1(3), 1e-3);
        REQUIRE(tr.t_mix.has_value());
        REQUIRE(td.t_mix.has_value());
        CHECK(*tr.t_mix < *td.t_mix);
    }

    SUBCASE("integrator fallback at the exceptional point") {
        const auto rep = mixing::mixing_report(LatticeSpec::dbs(sym(0.5)), e1(3), 1e-3);
        CHECK(!rep.spectral_path);
        CHECK(rep.cls == MixClass::conventional);
        REQUIRE(rep.p_stationary.has_value());
        CHECK(l1(*rep.p_stationary, {0.5, 0.0, 0.5}) < 1e-8);
        REQUIRE(rep.t_mix.has_value());
    }

    SUBCASE("non-mixing input reports no mixing time") {
        const auto rep = mixing::mixing_report(LatticeSpec::dbs(sym(0.6)), equal_pair(), 1e-3);
        CHECK(rep.cls == MixClass::non_mixing);
        CHECK(!rep.t_mix.has_value());
        CHECK(!rep.p_stationary.has_value());
        CHECK(rep.distance_series.empty());
    }
}

TEST_CASE("mixing invariants") {
    SUBCASE("conventional limit is independent of the initial state") {
        const auto spec = LatticeSpec::linear(sym(1.2), 4);
        const auto sd = spectral::eigensolve(lattice::build(spec));
        std::mt19937 rng(31);
        std::uniform_real_distribution<double> dist(-1.0, 1.0);
        std::optional<RVector> reference;
        for (int rep = 0; rep < 12; ++rep) {
            CVector psi(spec.dim());
            for (Complex& z : psi) z = Complex(dist(rng), dist(rng));
            const AmplitudeState state{0.0, psi};
            const auto mc = dynamics::decompose(state, sd);
            const auto st = mixing::stationary_distribution(sd, mc);
            if (st.dark_overlap_abs <= 1e-3 * st.coeff_norm) continue;
            REQUIRE(st.cls == MixClass::conventional);
            if (!reference) {
                reference = st.p_st;
            } else {
                CHECK(l1(*st.p_st, *reference) < 1e-8);
            }
        }
        CHECK(reference.has_value());
    }

    SUBCASE("classifier agrees with the trajectory detector") {
        std::mt19937 rng(77);
        std::uniform_real_distribution<double> vd(0.1, 5.0), amp(-1.0, 1.0);
        std::uniform_int_distribution<int> nd(1, 7);
        int checked = 0;
        for (int rep = 0; rep < 40; ++rep) {
            const std::size_t nl = static_cast<std::size_t>(nd(rng));
            const auto spec = (rep % 2 == 0) ? LatticeSpec::dbs(sym(vd(rng)))
                                             : LatticeSpec::linear(sym(vd(rng)), nl);
            const auto h = lattice::build(spec);
            const auto sd = spectral::eigensolve(h);
            if (sd.eigbasis_condition >= dynamics::kConditionGate) continue;
            CVector psi(spec.dim());
            for (Complex& z : psi) z = Complex(amp(rng), amp(rng));
            AmplitudeState state{0.0, psi};
            if (rep % 3 == 0) {
                // project out the dark component to hit the orthogonal branch
                const auto dark = initstate::dark_state(spec);
                const Complex c = spectral::bilinear(dark.psi, state.psi) /
                                  spectral::bilinear(dark.psi, dark.psi);
                for (std::size_t j = 0; j < psi.size(); ++j) state.psi[j] -= c * dark.psi[j];
            }
            const auto mc = dynamics::decompose(state, sd);
            const auto st = mixing::stationary_distribution(sd, mc);
            const double rel = st.dark_overlap_abs / st.coeff_norm;
            if (rel > 1e-10 && rel < 1e-6) continue; // ambiguous margin excluded

            const auto traj = dynamics::evolve_auto(
                state, h, sd, dynamics::uniform_times(0.0, 200.0, 0.01), {false});
            const auto tc = mixing::classify_from_trajectory(traj, 1e-3);
            CHECK((st.cls != MixClass::non_mixing) == tc.mixes);
            if (tc.mixes && st.p_st) {
                CHECK(l1(tc.p_limit, *st.p_st) < 1e-3);
            }
            ++checked;
        }
        CHECK(checked >= 30);
    }

    SUBCASE("mixing time is monotone in the tolerance") {
        const auto spec = LatticeSpec::linear(sym(0.9), 3);
        const auto state = e1(spec.dim());
        double prev = 1e300;
        for (const double eps : {1e-4, 1e-3, 1e-2}) {
            const auto rep = mixing::mixing_report(spec, state, eps);
            REQUIRE(rep.t_mix.has_value());
            CHECK(*rep.t_mix <= prev);
            prev = *rep.t_mix;
        }
    }

    SUBCASE("mixing time ignores global phase and scale") {
        const auto spec = LatticeSpec::linear(sym(1.1), 3);
        const auto base = mixing::mixing_report(spec, e1(spec.dim()), 1e-3);
        CVector scaled(spec.dim(), Complex(0.0, 0.0));
        scaled[0] = Complex(0.0, -3.7); // 3.7 e^{-i pi/2}
        const auto other = mixing::mixing_report(spec, AmplitudeState{0.0, scaled}, 1e-3);
        REQUIRE(base.t_mix.has_value());
        REQUIRE(other.t_mix.has_value());
        CHECK(std::abs(*base.t_mix - *other.t_mix) < 1e-9);
    }
}

TEST_CASE("scaling study fits") {
    const auto family = LatticeSpec::linear(sym(3.0), 2);
    std::vector<std::size_t> sizes;
    for (std::size_t n = 4; n <= 16; n += 2) sizes.push_back(n);
    const auto study = mixing::scaling_study(family, sizes, mixing::first_node_rule(), 1e-3, {}, 2);
    REQUIRE(study.points.size() == sizes.size());

    // the crossing sits where the slowest mode splits off gamma/2:
    // 1/(2 sqrt(mu_min)) = 3 at N_L ~ 12.3
    for (const auto& p : study.points) {
        CHECK(p.post_lrep == (p.n_lossy >= 13));
        CHECK(p.t_mix > 0.0);
    }
    CHECK(study.pre_fit.available);   // 4..12: five points
    CHECK(!study.post_fit.available); // 14, 16: only two points
    CHECK(study.pre_fit.slope > 0.0);

    CHECK_THROWS_AS(
        mixing::scaling_study(LatticeSpec::dbs(sym(1.0)), sizes, mixing::first_node_rule(), 1e-3),
        ParameterError);
}
