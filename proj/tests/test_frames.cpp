#include <doctest.h>

#include "minlag/catalog.hpp"
#include "minlag/frames.hpp"

using namespace minlag;

namespace {

GridDomain grid_h(double h_target, double half = 1.0) {
    int n = (int)std::lround(2.0 * half / h_target) + 1;
    return GridDomain{-half, half, -half, half, n, n};
}

struct CatalogDev {
    double a, b, ew, phi, psi, rho;
    double max_all() const { return std::max({a, b, ew, phi, psi, rho}); }
};

/// Deviation of the derived invariants from the frozen oracle values
/// (symbolic differentiation of the closed forms; see oracle notes below).
CatalogDev clifford_deviation(const GridDomain& g, const InvariantField& inv,
                              int ring = 2) {
    CatalogDev d{0, 0, 0, 0, 0, 0};
    for (int iy = ring; iy < g.ny - ring; ++iy)
        for (int ix = ring; ix < g.nx - ring; ++ix) {
            int i = g.idx(ix, iy);
            d.a = std::max(d.a, std::abs(inv.a[i] - 1.0));
            d.b = std::max(d.b, std::abs(inv.b[i] - 1.0));
            d.ew = std::max(d.ew, std::abs(inv.ew[i] - catalog::clifford_ew));
            d.phi = std::max(d.phi, std::abs(inv.phi[i]));
            d.psi = std::max(d.psi, std::abs(inv.psi[i] - catalog::clifford_psi));
            d.rho = std::max(d.rho, std::abs(inv.rho[i]));
        }
    return d;
}

CatalogDev geodesic_deviation(const GridDomain& g, const InvariantField& inv,
                              int ring = 2) {
    CatalogDev d{0, 0, 0, 0, 0, 0};
    for (int iy = ring; iy < g.ny - ring; ++iy)
        for (int ix = ring; ix < g.nx - ring; ++ix) {
            int i = g.idx(ix, iy);
            d.a = std::max(d.a, std::abs(inv.a[i] - 1.0));
            d.b = std::max(d.b, std::abs(inv.b[i] - 1.0));
            d.ew = std::max(d.ew,
                            std::abs(inv.ew[i] - catalog::geodesic_ew(g.z(ix, iy))));
            d.phi = std::max(d.phi, std::abs(inv.phi[i]));
            d.psi = std::max(d.psi, std::abs(inv.psi[i]));
            d.rho = std::max(d.rho, std::abs(inv.rho[i]));
        }
    return d;
}

}  // namespace

// Oracle notes. The expected values asserted below come from symbolic
// differentiation of the closed-form lifts (independent of the grid code):
//   torus lift: rho = 0, e^w = 1/2, a = b = 1, phi = 0, psi = i sqrt(2)/4,
//     theta = pi/2;
//   geodesic lift: rho = 0, e^w = 2/(1+|z|^2)^2, a = b = 1, phi = psi = 0.

TEST_CASE("clifford invariants converge to the oracle values") {
    double dev[2];
    int k = 0;
    for (double h : {0.02, 0.01}) {
        GridDomain g = grid_h(h);
        InvariantField inv = derive_invariants(catalog::clifford_lift(g));
        CatalogDev d = clifford_deviation(g, inv);
        CHECK(d.max_all() < 10.0 * sq(g.h()));
        double theta_dev = 0;
        for (int iy = 1; iy < g.ny - 1; ++iy)
            for (int ix = 1; ix < g.nx - 1; ++ix)
                theta_dev = std::max(theta_dev,
                                     std::abs(inv.theta[g.idx(ix, iy)] - 0.5 * kPi));
        CHECK(theta_dev < 10.0 * sq(g.h()));
        dev[k++] = d.max_all();
    }
    CHECK(std::log2(dev[0] / dev[1]) > 1.8);
}

TEST_CASE("geodesic invariants converge to the oracle values") {
    double dev[2];
    int k = 0;
    for (double h : {0.02, 0.01}) {
        GridDomain g = grid_h(h);
        InvariantField inv = derive_invariants(catalog::geodesic_lift(g));
        CatalogDev d = geodesic_deviation(g, inv);
        CHECK(d.max_all() < 10.0 * sq(g.h()));
        dev[k++] = d.max_all();
    }
    CHECK(std::log2(dev[0] / dev[1]) > 1.8);
}

TEST_CASE("holomorphic lift is rejected") {
    GridDomain g{-0.5, 0.5, -0.5, 0.5, 21, 21};
    CHECK_THROWS_AS(derive_invariants(catalog::holomorphic_lift(g)),
                    ComplexPointDetected);
}

TEST_CASE("phase gauge invariance") {
    GridDomain g = grid_h(0.01, 0.5);
    LiftField f = catalog::clifford_lift(g);

    ComplexField one(g, cplx(1, 0));
    GaugeCheckReport r0 = phase_gauge_invariance_check(f, one);
    CHECK(r0.max_deviation() == 0.0);
    CHECK(r0.dev_rho_transport < 1e-14);

    ComplexField hfield(g);
    for (int iy = 0; iy < g.ny; ++iy)
        for (int ix = 0; ix < g.nx; ++ix)
            hfield.at(ix, iy) = std::exp(cplx(0, 0.01 * (g.x(ix) + g.y(iy))));
    GaugeCheckReport r = phase_gauge_invariance_check(f, hfield);
    CHECK(r.max_deviation() < 1e-6);
    CHECK(r.dev_rho_transport < 1e-6);

    // constant cube root of unity: frame determinant unchanged
    ComplexField zeta(g, algebra::epsilon_pow(2));
    LiftField f2(g);
    for (int i = 0; i < g.size(); ++i) f2[i] = zeta[i] * f[i];
    InvariantField i1 = derive_invariants(f);
    InvariantField i2 = derive_invariants(f2);
    FrameField fr1 = build_frame(f, i1);
    FrameField fr2 = build_frame(f2, i2);
    for (int i : {0, g.size() / 2, g.size() - 1})
        CHECK(std::abs(fr1.F[i].determinant() - fr2.F[i].determinant()) < 1e-12);
}

TEST_CASE("phase unwrapping") {
    GridDomain g{-1, 1, -1, 1, 21, 21};
    ComplexField smooth(g);
    for (int iy = 0; iy < g.ny; ++iy)
        for (int ix = 0; ix < g.nx; ++ix)
            smooth.at(ix, iy) = std::exp(cplx(0, 2.5 * g.x(ix) - 1.3 * g.y(iy)));
    RealField th = detail::unwrap_phase(smooth);
    for (int iy = 0; iy < g.ny; ++iy)
        for (int ix = 0; ix < g.nx; ++ix) {
            double want = 2.5 * g.x(ix) - 1.3 * g.y(iy);
            double got = th.at(ix, iy) - th.at(g.nx / 2, g.ny / 2);
            CHECK(std::abs(got - want) < 1e-10);
        }

    // winding around the grid center cannot be unwrapped
    ComplexField winding(g);
    for (int iy = 0; iy < g.ny; ++iy)
        for (int ix = 0; ix < g.nx; ++ix) {
            double x = g.x(ix) + 0.5 * g.h(), y = g.y(iy) + 0.5 * g.h();
            winding.at(ix, iy) = std::exp(cplx(0, std::atan2(y, x)));
        }
    CHECK_THROWS_AS(detail::unwrap_phase(winding), PhaseUnwrapFailure);

    // under-resolution: neighbor jumps beyond pi/2
    ComplexField fast(g);
    for (int iy = 0; iy < g.ny; ++iy)
        for (int ix = 0; ix < g.nx; ++ix)
            fast.at(ix, iy) = std::exp(cplx(0, 40.0 * g.x(ix)));
    CHECK_THROWS_AS(detail::unwrap_phase(fast), PhaseUnwrapFailure);
}

TEST_CASE("special lift") {
    GridDomain g = grid_h(0.02, 0.5);
    LiftField f = catalog::clifford_lift(g);
    InvariantField inv = derive_invariants(f);
    FrameField raw = build_frame(f, inv);

    // raw catalog frame determinant sits at i up to discretization noise
    for (int i : {0, g.size() / 2, g.size() - 1})
        CHECK(std::abs(raw.F[i].determinant() - cplx(0, 1)) < 1e-4);
    CHECK(std::abs(raw.F[g.size() / 2].determinant() - cplx(0, 1)) < 1e-12);

    SpecialFrame sf = make_special_frame(f);
    CHECK(frame_det_defect(sf.frame) < 1e-12);

    // trace of the Maurer-Cartan form vanishes in the special gauge
    double tr = 0;
    for (int iy = 2; iy < g.ny - 2; ++iy)
        for (int ix = 2; ix < g.nx - 2; ++ix)
            tr = std::max(tr, std::abs(sf.frame.U[g.idx(ix, iy)].trace()));
    CHECK(tr < 50 * sq(g.h()));

    // idempotence: re-specializing moves the lift only by the residual
    // discretization of det F
    LiftField sp2 = special_lift(sf.lift);
    double dev = 0;
    for (int i = 0; i < g.size(); ++i) dev = std::max(dev, (sp2[i] - sf.lift[i]).norm());
    CHECK(dev < 1e-6);

    // multiplying by an exact cube root of unity is undone exactly
    LiftField moved(g);
    for (int i = 0; i < g.size(); ++i)
        moved[i] = algebra::epsilon_pow(2) * sf.lift[i];
    LiftField sp3 = special_lift(moved);
    dev = 0;
    for (int i = 0; i < g.size(); ++i)
        dev = std::max(dev, (sp3[i] - sp2[i]).norm());
    CHECK(dev < 1e-12);
}

TEST_CASE("two special lifts differ by a constant cube root of unity") {
    GridDomain g = grid_h(0.02, 0.5);
    LiftField f = catalog::geodesic_lift(g);
    LiftField s1 = special_lift(f);
    std::mt19937_64 rng(17);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (int t = 0; t < 3; ++t) {
        // smooth random phase: low-order trig polynomial
        double c1 = 0.3 * u(rng), c2 = 0.3 * u(rng), c3 = 0.3 * u(rng);
        LiftField moved(g);
        for (int iy = 0; iy < g.ny; ++iy)
            for (int ix = 0; ix < g.nx; ++ix) {
                double x = g.x(ix), y = g.y(iy);
                double del = c1 * std::sin(x + y) + c2 * std::cos(2 * x) + c3 * y;
                moved.at(ix, iy) = std::exp(cplx(0, del)) * f.at(ix, iy);
            }
        LiftField s2 = special_lift(moved);
        // ratio field must be a constant cube root of unity (up to O(h^2))
        cplx base = hdot(s2[g.size() / 2], s1[g.size() / 2]);
        base /= std::abs(base);
        double nearest = 1e9;
        for (int k = 0; k < 3; ++k)
            nearest = std::min(nearest,
                               std::abs(base - std::pow(algebra::epsilon_pow(2), k)));
        CHECK(nearest < 50 * sq(g.h()));
        double spread = 0;
        for (int i = 0; i < g.size(); ++i) {
            cplx r = hdot(s2[i], s1[i]);
            spread = std::max(spread, std::abs(r / std::abs(r) - base));
        }
        CHECK(spread < 100 * sq(g.h()));
    }
}

TEST_CASE("frame structure on the catalog surfaces") {
    GridDomain g = grid_h(0.02, 0.5);
    SpecialFrame sf = make_special_frame(catalog::clifford_lift(g));
    const FrameField& fr = sf.frame;
    const LiftField& sp = sf.lift;

    for (int i : {g.idx(3, 3), g.idx(g.nx / 2, g.ny / 2)}) {
        CHECK(unitary_defect(fr.F[i]) < 1e-13);
        CHECK((fr.F[i].col(2) - sp[i]).norm() < 1e-14);  // F e3 = f
        CHECK(frob(fr.V[i] + fr.U[i].conjugate().transpose()) < 1e-15);
        // frozen entries: u13 = i/sqrt(2), u21 = i sqrt(2)/2, diagonal 0
        CHECK(std::abs(fr.U[i](0, 2) - cplx(0, 1) / std::sqrt(2.0)) < 10 * sq(g.h()));
        CHECK(std::abs(fr.U[i](1, 0) - cplx(0, std::sqrt(2.0) / 2.0)) < 10 * sq(g.h()));
        CHECK(std::abs(fr.U[i](0, 0)) < 10 * sq(g.h()));
        CHECK(std::abs(fr.U[i](0, 1)) < 10 * sq(g.h()));
    }
    CHECK(fr.crosscheck < 50 * sq(g.h()));

    FrameField frg = make_special_frame(catalog::geodesic_lift(g)).frame;
    double psidev = 0, phidev = 0;
    for (int iy = 2; iy < g.ny - 2; ++iy)
        for (int ix = 2; ix < g.nx - 2; ++ix) {
            int i = g.idx(ix, iy);
            psidev = std::max(psidev, std::abs(frg.U[i](1, 0)));
            phidev = std::max(phidev, std::abs(frg.U[i](0, 1)));
        }
    CHECK(psidev < 10 * sq(g.h()));
    CHECK(phidev < 10 * sq(g.h()));
    CHECK(frg.crosscheck < 50 * sq(g.h()));
}

TEST_CASE("numeric vs analytic Maurer-Cartan converges at order >= 1.8") {
    double cc[2];
    int k = 0;
    for (double h : {0.02, 0.01}) {
        GridDomain g = grid_h(h, 0.5);
        cc[k++] = make_special_frame(catalog::geodesic_lift(g)).frame.crosscheck;
    }
    CHECK(std::log2(cc[0] / cc[1]) > 1.8);
}

TEST_CASE("matrix-level integrability of the catalog frames") {
    GridDomain g = grid_h(0.04, 0.5);
    FrameField fr = make_special_frame(catalog::geodesic_lift(g)).frame;
    MatrixField uzb = d_zbar(fr.U), vz = d_z(fr.V);
    double worst = 0;
    for (int iy = 3; iy < g.ny - 3; ++iy)
        for (int ix = 3; ix < g.nx - 3; ++ix) {
            int i = g.idx(ix, iy);
            Mat3 r = uzb[i] - vz[i] - (fr.U[i] * fr.V[i] - fr.V[i] * fr.U[i]);
            worst = std::max(worst, frob(r));
        }
    CHECK(worst < 100 * sq(g.h()));
}

TEST_CASE("compatibility residuals on accepted surfaces") {
    for (auto* name : {"clifford", "geodesic"}) {
        double maxres[2];
        int k = 0;
        for (double h : {0.04, 0.02}) {
            GridDomain g = grid_h(h);
            InvariantField inv = derive_invariants(catalog::build_lift(name, g));
            CompatReport rep = compatibility_residuals(inv);
            maxres[k++] = rep.max_any();
            CHECK(rep.max_any() < 100 * sq(g.h()));
        }
        // O(h^2) convergence (or already at the round-off floor)
        CHECK((maxres[1] < maxres[0] / 2.5 || maxres[1] < 1e-9));
    }
}

TEST_CASE("each compatibility equation detects its own corruption") {
    GridDomain g = grid_h(0.02);
    InvariantField inv = derive_invariants(catalog::clifford_lift(g));
    CompatReport clean = compatibility_residuals(inv);
    CHECK(clean.comp[2].max < 1e-3);

    // psi corruption with zbar dependence -> comp3 fires and stays put
    for (double h : {0.02, 0.01}) {
        GridDomain gh = grid_h(h);
        InvariantField corrupted = derive_invariants(catalog::clifford_lift(gh));
        for (int iy = 0; iy < gh.ny; ++iy)
            for (int ix = 0; ix < gh.nx; ++ix)
                corrupted.psi[gh.idx(ix, iy)] += 0.1 * std::conj(gh.z(ix, iy));
        CompatReport rep = compatibility_residuals(corrupted);
        CHECK(rep.comp[2].max > 0.05);
    }

    // rho corruption -> comp1 fires
    InvariantField bad_rho = derive_invariants(catalog::clifford_lift(g));
    for (int iy = 0; iy < g.ny; ++iy)
        for (int ix = 0; ix < g.nx; ++ix)
            bad_rho.rho[g.idx(ix, iy)] += 0.1 * std::conj(g.z(ix, iy));
    CHECK(compatibility_residuals(bad_rho).comp[0].max > 0.05);

    // a/b corruption -> comp2 and comp4 fire
    InvariantField bad_ab = derive_invariants(catalog::clifford_lift(g));
    for (int iy = 0; iy < g.ny; ++iy)
        for (int ix = 0; ix < g.nx; ++ix) {
            int i = g.idx(ix, iy);
            double x = g.x(ix);
            bad_ab.a[i] *= 1.0 + 0.05 * x * x;
            bad_ab.b[i] = 2.0 - bad_ab.a[i];
        }
    CompatReport rep_ab = compatibility_residuals(bad_ab);
    CHECK(rep_ab.comp[1].max > 0.02);
    CHECK(rep_ab.comp[3].max > 0.02);
}

TEST_CASE("classifier truth table") {
    GridDomain g = grid_h(0.02, 0.5);
    double tolc = 10 * sq(g.h());

    PrimitivityReport rc =
        classify_primitivity(make_special_frame(catalog::clifford_lift(g)).frame, tolc);
    CHECK(rc.sigma);
    CHECK(rc.sigma2);
    CHECK(rc.sigma3);
    CHECK(rc.flat_homogeneous);
    CHECK(rc.label == SurfaceClass::minimal_lagrangian);

    PrimitivityReport rg =
        classify_primitivity(make_special_frame(catalog::geodesic_lift(g)).frame, tolc);
    CHECK(rg.sigma);
    CHECK(rg.sigma2);
    CHECK(rg.sigma3);
    CHECK_FALSE(rg.flat_homogeneous);  // psi = 0
    CHECK(rg.label == SurfaceClass::minimal_lagrangian);

    PrimitivityReport rs = classify_primitivity(catalog::sigma2_synthetic_frame(g));
    CHECK_FALSE(rs.sigma);
    CHECK(rs.sigma2);
    CHECK_FALSE(rs.sigma3);
    CHECK(rs.label == SurfaceClass::minimal_nonlagrangian);
    CHECK(rs.sigma_mass > 1e-2);  // margin: no near-threshold decision

    // non-special gauge is rejected
    InvariantField invr = derive_invariants(catalog::clifford_lift(g));
    FrameField raw = build_frame(catalog::clifford_lift(g), invr);
    CHECK_THROWS_AS(classify_primitivity(raw, tolc), InconsistentGauge);

    // classification is an isometry invariant
    std::mt19937_64 rng(77);
    Mat3 t = random_su3(rng);
    LiftField moved(g);
    LiftField f = catalog::clifford_lift(g);
    for (int i = 0; i < g.size(); ++i) moved[i] = t * f[i];
    PrimitivityReport rm = classify_primitivity(make_special_frame(moved).frame, tolc);
    CHECK(rm.sigma);
    CHECK(rm.flat_homogeneous);
    CHECK(rm.label == SurfaceClass::minimal_lagrangian);
}

TEST_CASE("reconstruction round trip") {
    for (auto* name : {"clifford", "geodesic"}) {
        GridDomain g = grid_h(0.01);
        FrameField fr = make_special_frame(catalog::build_lift(name, g)).frame;
        ReconstructResult rr = reconstruct_surface(fr);
        CHECK(rr.match_error < 1e-5);

        // the reconstructed lift reproduces the frame
        FrameField fr2 = build_frame(rr.lift, rr.rederived);
        double dev = 0;
        for (int iy = 2; iy < g.ny - 2; ++iy)
            for (int ix = 2; ix < g.nx - 2; ++ix) {
                int i = g.idx(ix, iy);
                dev = std::max(dev, frob(fr2.F[i] - fr.F[i]));
            }
        CHECK(dev < 1e-5);

        if (std::string(name) == "geodesic") {
            double psidev = 0, abdev = 0;
            for (int i = 0; i < g.size(); ++i) {
                psidev = std::max(psidev, std::abs(rr.recovered.psi[i]));
                abdev = std::max(abdev, std::abs(rr.recovered.a[i] - 1.0));
            }
            CHECK(psidev < 1e-3);
            CHECK(abdev < 1e-3);
        }
    }
}

TEST_CASE("reconstruction rejects vanishing entries") {
    GridDomain g{-0.5, 0.5, -0.5, 0.5, 11, 11};
    FrameField fr;
    fr.grid = g;
    fr.has_frames = true;
    fr.F = MatrixField(g, Mat3::Identity());
    Mat3 u = Mat3::Zero();
    u(2, 1) = cplx(0, 1);  // u32 fine, u13 = 0
    fr.U = MatrixField(g, u);
    fr.V = MatrixField(g, (-u.conjugate().transpose()).eval());
    CHECK_THROWS_AS(reconstruct_surface(fr), VanishingEntry);
}

TEST_CASE("congruence") {
    GridDomain g = grid_h(0.02, 0.5);
    InvariantField a = derive_invariants(catalog::clifford_lift(g));
    CongruenceReport self = congruence_check(a, a);
    CHECK(self.congruent);
    CHECK(self.dev_psi == 0.0);

    std::mt19937_64 rng(23);
    Mat3 t = random_su3(rng);
    LiftField rotated(g);
    LiftField f = catalog::clifford_lift(g);
    for (int i = 0; i < g.size(); ++i) rotated[i] = t * f[i];
    CongruenceReport rot = congruence_check(a, derive_invariants(rotated));
    CHECK(rot.congruent);

    InvariantField b = derive_invariants(catalog::geodesic_lift(g));
    CongruenceReport diff = congruence_check(a, b);
    CHECK_FALSE(diff.congruent);
    CHECK(diff.dev_psi > 0.3);

    GridDomain g2{-0.5, 0.5, -0.5, 0.5, 31, 31};
    InvariantField c = derive_invariants(catalog::clifford_lift(g2));
    CHECK_THROWS_AS(congruence_check(a, c), GridMismatch);
}
