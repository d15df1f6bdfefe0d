#include <doctest.h>

#include <unsupported/Eigen/MatrixFunctions>

#include "minlag/catalog.hpp"
#include "minlag/gauss.hpp"

using namespace minlag;

namespace {

FrameField identity_frame(const GridDomain& g) {
    FrameField fr;
    fr.grid = g;
    fr.has_frames = true;
    fr.F = MatrixField(g, Mat3::Identity());
    return fr;
}

/// Special Clifford lift left-translated so the frame at the center node is
/// the identity.
LiftField calibrated_clifford(const GridDomain& g) {
    LiftField sp = special_lift(catalog::clifford_lift(g));
    InvariantField inv = derive_invariants(sp);
    FrameField fr = build_frame(sp, inv);
    Mat3 t = fr.F.at(g.nx / 2, g.ny / 2).adjoint();
    LiftField out(g);
    for (int i = 0; i < g.size(); ++i) out[i] = t * sp[i];
    return out;
}

}  // namespace

TEST_CASE("gauss maps at the identity frame") {
    GridDomain g{-0.5, 0.5, -0.5, 0.5, 5, 5};
    FrameField fr = identity_frame(g);
    GaussMaps maps = gauss_map(fr);

    CHECK(frob(maps.g3[0].S - algebra::P()) < 1e-15);
    CHECK((maps.g1[0].v - basis_e(2)).norm() < 1e-15);
    CHECK(frob(maps.g1[0].S - algebra::P3()) < 1e-15);
    CHECK((maps.g1[0].real_frame.col(0) - detail::e1_tilde()).norm() < 1e-15);

    Field<ProjectedPoint> h31 = project_gauss(fr, ProjectionKind::H31);
    Field<ProjectedPoint> h32 = project_gauss(fr, ProjectionKind::H32);
    Mat3 want31;
    want31 << 0, 1, 0, 1, 0, 0, 0, 0, 1;
    CHECK(frob(h31[0].value - want31) < 1e-15);
    Mat3 want32 = Mat3::Zero();
    want32(0, 0) = algebra::epsilon_pow(4);
    want32(1, 1) = algebra::epsilon_pow(2);
    want32(2, 2) = 1.0;
    CHECK(frob(h32[0].value - want32) < 1e-14);
}

TEST_CASE("gauss map rejects non-special frames") {
    GridDomain g{-0.5, 0.5, -0.5, 0.5, 5, 5};
    FrameField fr = identity_frame(g);
    fr.F[3] *= std::exp(cplx(0, 0.3));  // det drifts off 1
    CHECK_THROWS_AS(gauss_map(fr), GaugeError);
}

TEST_CASE("clifford gauss map hits the base point at the center") {
    GridDomain g{-0.4, 0.4, -0.4, 0.4, 41, 41};
    LiftField lift = calibrated_clifford(g);
    InvariantField inv = derive_invariants(lift);
    FrameField fr = build_frame(lift, inv);
    GaussMaps maps = gauss_map(fr);
    int c = g.idx(g.nx / 2, g.ny / 2);
    CHECK((maps.g1[c].v - basis_e(2)).norm() < 1e-12);
    CHECK(frob(maps.g1[c].S - algebra::P3()) < 1e-12);
    CHECK(frob(maps.g3[c].S - algebra::P()) < 1e-12);

    // total reality of the FL1 frame at every node
    double im = 0;
    for (int i = 0; i < g.size(); ++i) {
        const Mat3& rf = maps.g1[i].real_frame;
        for (int r = 0; r < 3; ++r)
            for (int s = 0; s < 3; ++s)
                im = std::max(im, std::abs(std::imag(hdot(rf.col(r), rf.col(s)))));
    }
    CHECK(im < 1e-10);
}

TEST_CASE("projected spectra and gauge invariance") {
    GridDomain g{-0.5, 0.5, -0.5, 0.5, 5, 5};
    std::mt19937_64 rng(31);
    FrameField fr = identity_frame(g);
    for (int i = 0; i < g.size(); ++i) fr.F[i] = random_su3(rng);

    Field<ProjectedPoint> h31 = project_gauss(fr, ProjectionKind::H31);
    Field<ProjectedPoint> h32 = project_gauss(fr, ProjectionKind::H32);

    // the frame route and the flag-value route agree; variant mismatches throw
    GaussMaps maps = gauss_map(fr);
    for (int i = 0; i < g.size(); ++i) {
        CHECK(fl3_defect(maps.g3[i].S) < 1e-12);
        CHECK(frob(project_point(maps.g3[i], ProjectionKind::H31).value -
                   h31[i].value) < 1e-12);
        CHECK(frob(project_point(maps.g3[i], ProjectionKind::H32).value -
                   h32[i].value) < 1e-12);
    }
    CHECK_THROWS_AS(project_gauss(maps.g1, ProjectionKind::H31), VariantMismatch);
    CHECK_THROWS_AS(project_gauss(maps.g2, ProjectionKind::H1), VariantMismatch);
    CHECK_THROWS_AS(project_gauss(maps.g3, ProjectionKind::H2), VariantMismatch);
    for (int i = 0; i < g.size(); ++i) {
        // H31 symmetric unitary
        CHECK(frob(h31[i].value - h31[i].value.transpose().eval()) < 1e-12);
        CHECK(unitary_defect(h31[i].value) < 1e-12);
        // H32 spectrum {eps^4, eps^2, 1}
        Eigen::ComplexEigenSolver<Mat3> es(h32[i].value);
        std::vector<double> args;
        for (int k = 0; k < 3; ++k) args.push_back(std::arg(es.eigenvalues()(k)));
        std::sort(args.begin(), args.end());
        CHECK(std::abs(args[0] - std::arg(algebra::epsilon_pow(4))) < 1e-10);
        CHECK(std::abs(args[1]) < 1e-10);
        CHECK(std::abs(args[2] - std::arg(algebra::epsilon_pow(2))) < 1e-10);
    }

    // right U1 gauge leaves G3, H31, H32 unchanged
    std::uniform_real_distribution<double> u(-kPi, kPi);
    for (int t = 0; t < 5; ++t) {
        cplx a = std::exp(cplx(0, u(rng)));
        Mat3 k = Mat3::Zero();
        k(0, 0) = a;
        k(1, 1) = std::conj(a);
        k(2, 2) = 1.0;
        Mat3 F = random_su3(rng);
        Mat3 Fk = F * k;
        CHECK(frob(F * algebra::P() * F.transpose() -
                   Fk * algebra::P() * Fk.transpose()) < 1e-13);
        CHECK(frob(F * algebra::P3() * F.transpose() -
                   Fk * algebra::P3() * Fk.transpose()) < 1e-13);
        CHECK(frob(F * algebra::P2() * F.inverse() -
                   Fk * algebra::P2() * Fk.inverse()) < 1e-13);
        // D3 fixes the projected values as well
        Mat3 d = Mat3::Zero();
        cplx d1 = std::exp(cplx(0, u(rng))), d2 = std::exp(cplx(0, u(rng)));
        d(0, 0) = d1;
        d(1, 1) = d2;
        d(2, 2) = 1.0 / (d1 * d2);
        Mat3 Fd = F * d;
        CHECK(frob(F * algebra::P2() * F.inverse() -
                   Fd * algebra::P2() * Fd.inverse()) < 1e-13);
    }
}

TEST_CASE("regauged special lifts give identical gauss values") {
    GridDomain g{-0.4, 0.4, -0.4, 0.4, 33, 33};
    LiftField sp = special_lift(catalog::clifford_lift(g));
    GaussMaps maps = gauss_map(make_special_frame(sp).frame);

    LiftField moved(g);
    for (int i = 0; i < g.size(); ++i)
        moved[i] = algebra::epsilon_pow(4) * sp[i];  // constant cube root
    GaussMaps maps2 = gauss_map(make_special_frame(moved).frame);

    double dev = 0;
    for (int i = 0; i < g.size(); ++i) {
        dev = std::max(dev, frob(maps.g3[i].S - maps2.g3[i].S));
        dev = std::max(dev, frob(maps.g1[i].S - maps2.g1[i].S));
        dev = std::max(dev, frob(maps.g2[i].proj2 - maps2.g2[i].proj2));
    }
    CHECK(dev < 1e-12);
}

TEST_CASE("equivariance under SU(3)") {
    GridDomain g{-0.4, 0.4, -0.4, 0.4, 21, 21};
    LiftField sp = special_lift(catalog::clifford_lift(g));

    EquivarianceReport r0 = equivariance_check(sp, Mat3::Identity());
    CHECK(r0.max_deviation() < 1e-14);

    std::mt19937_64 rng(5);
    for (int t = 0; t < 5; ++t) {
        EquivarianceReport r = equivariance_check(sp, random_su3(rng));
        CHECK(r.max_deviation() < 1e-8);
    }
    CHECK_THROWS_AS(equivariance_check(sp, 2.0 * Mat3::Identity()), NotUnitary);

    // U1 stabilizer at a node where F = I
    GridDomain g2{-0.4, 0.4, -0.4, 0.4, 21, 21};
    LiftField cal = calibrated_clifford(g2);
    InvariantField inv = derive_invariants(cal);
    FrameField fr = build_frame(cal, inv);
    int c = g2.idx(g2.nx / 2, g2.ny / 2);
    Mat3 k = Mat3::Zero();
    k(0, 0) = std::exp(cplx(0, 0.7));
    k(1, 1) = std::exp(cplx(0, -0.7));
    k(2, 2) = 1.0;
    LiftField rotated(g2);
    for (int i = 0; i < g2.size(); ++i) rotated[i] = k * cal[i];
    InvariantField inv2 = derive_invariants(rotated);
    FrameField fr2 = build_frame(rotated, inv2);
    CHECK(frob(gauss3_point(fr2.F[c]).S - algebra::P()) < 1e-10);
    CHECK(frob(gauss3_point(fr.F[c]).S - algebra::P()) < 1e-10);
}

TEST_CASE("stabilizer membership") {
    Mat3 u1 = Mat3::Zero();
    u1(0, 0) = cplx(0, 1);
    u1(1, 1) = cplx(0, -1);
    u1(2, 2) = 1.0;
    CHECK(stabilizer_membership(u1, Stabilizer::U1));
    CHECK(stabilizer_membership(u1, Stabilizer::D3));

    Mat3 d3 = Mat3::Zero();
    d3(0, 0) = d3(1, 1) = d3(2, 2) = algebra::epsilon_pow(2);
    CHECK(stabilizer_membership(d3, Stabilizer::D3));
    CHECK_FALSE(stabilizer_membership(d3, Stabilizer::U1));

    // exp of the displayed so(3) generator (a = 0, y = t real)
    Mat3 gen = Mat3::Zero();
    gen(0, 2) = 0.3;
    gen(1, 2) = 0.3;
    gen(2, 0) = -0.3;
    gen(2, 1) = -0.3;
    Mat3 so3 = gen.exp();
    CHECK(stabilizer_membership(so3, Stabilizer::SO3));
    CHECK_THROWS_AS(stabilizer_membership(2.0 * Mat3::Identity(), Stabilizer::U1),
                    NotUnitary);
}

TEST_CASE("ruh-vilms truth table") {
    GridDomain g{-0.5, 0.5, -0.5, 0.5, 41, 41};

    RuhVilmsReport rc = ruh_vilms_report(catalog::clifford_lift(g));
    CHECK(rc.prim.sigma);
    CHECK(rc.prim.sigma2);
    CHECK(rc.prim.sigma3);
    CHECK(rc.g1_g2_g3_primitive);
    CHECK(rc.h2_h32_primitive);
    CHECK(rc.h1_h31_primitive);
    CHECK(rc.all_equivalences_hold);
    CHECK(rc.conditions.minimal_lagrangian);
    CHECK(rc.conditions.flat_homogeneous);

    RuhVilmsReport rg = ruh_vilms_report(catalog::geodesic_lift(g));
    CHECK(rg.prim.sigma);
    CHECK(rg.all_equivalences_hold);
    CHECK(std::abs(rg.conditions.psi_mean) < 1e-4);  // psi = 0 branch

    FrameField synth = catalog::sigma2_synthetic_frame(g);
    RuhVilmsReport rs = ruh_vilms_report_from_frame(synth, nullptr, 1e-6);
    CHECK_FALSE(rs.g1_g2_g3_primitive);
    CHECK(rs.h2_h32_primitive);
    CHECK_FALSE(rs.h1_h31_primitive);
}
