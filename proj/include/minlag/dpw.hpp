#pragma once

#include <functional>
#include <set>

#include "minlag/frames.hpp"

namespace minlag {

/// Holomorphic 1-form eta = sum_{j >= -1} lambda^j eta_j(z) dz with
/// eigenspace-graded coefficients: eta_j in g_{j mod 6}. Coefficient
/// functions are polynomials in z (holomorphic by construction).
struct PotentialTerm {
    int degree = -1;
    std::vector<std::pair<int, Mat3>> poly;  // z^i -> matrix coefficient

    Mat3 eval(cplx z) const {
        Mat3 m = Mat3::Zero();
        for (auto& [i, coeff] : poly) m += std::pow(z, i) * coeff;
        return m;
    }
};

struct Potential {
    std::vector<PotentialTerm> terms;
    int trunc = default_tol().loop_trunc;

    TwistedLoop eval(cplx z) const {
        TwistedLoop l;
        l.N = trunc;
        l.twist = Twist::sigma;
        for (auto& t : terms) {
            Mat3 m = t.eval(z);
            if (frob(m) == 0.0) continue;
            auto it = l.c.find(t.degree);
            if (it == l.c.end())
                l.c[t.degree] = m;
            else
                it->second += m;
        }
        return l;
    }

    int lowest_degree() const {
        int d = std::numeric_limits<int>::max();
        for (auto& t : terms) d = std::min(d, t.degree);
        return d;
    }
};

struct PotentialReport {
    double max_grading_defect = 0.0;
    int lowest_degree = 0;
    bool valid = false;
};

/// Check eigenspace membership of every coefficient function at sampled z
/// and the lowest-degree convention (exactly -1 for surface-producing data).
inline PotentialReport validate_potential(const Potential& p,
                                          bool require_lowest_minus_one = true,
                                          unsigned seed = 20240901) {
    PotentialReport rep;
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (auto& t : p.terms) {
        if (t.degree < -1)
            throw DegreeViolation("potential term of degree " + std::to_string(t.degree));
        int m = ((t.degree % 6) + 6) % 6;
        for (int s = 0; s < 20; ++s) {
            cplx z(u(rng), u(rng));
            Mat3 val = t.eval(z);
            if (!is_finite(val)) throw Error("validate_potential: non-finite coefficient");
            Mat3 tl = traceless_part(val);
            double defect = frob(tl - algebra::eigenspace_project(tl, m)) +
                            std::abs(val.trace());
            rep.max_grading_defect = std::max(rep.max_grading_defect, defect);
        }
    }
    rep.lowest_degree = p.terms.empty() ? 0 : p.lowest_degree();
    if (rep.max_grading_defect > 1e-10)
        throw GradingViolation("coefficient leaves its eigenspace by " +
                               fmt17(rep.max_grading_defect));
    if (require_lowest_minus_one && rep.lowest_degree != -1)
        throw DegreeViolation("lowest degree is " + std::to_string(rep.lowest_degree) +
                              ", expected -1");
    rep.valid = true;
    return rep;
}

// ---------------------------------------------------------------------------
// ODE integration dC = C eta over the grid
// ---------------------------------------------------------------------------

struct HolomorphicFrameField {
    GridDomain grid;
    Field<TwistedLoop> C;
    int z0x = 0, z0y = 0;
    double det_defect = 0.0;     // max |det C(lambda) - 1| on circle samples
    double dzbar_defect = 0.0;   // max coefficient mass of d_zbar C (O(h^4))
};

namespace detail {

inline TwistedLoop rk4_step(const TwistedLoop& c0, cplx z0, cplx dir, double h,
                            const Potential& p, int N, double tail_budget) {
    auto rhs = [&](const TwistedLoop& c, cplx z) {
        return loop_mul(c, p.eval(z), N, tail_budget) * dir;
    };
    TwistedLoop k1 = rhs(c0, z0);
    TwistedLoop k2 = rhs(c0 + k1 * (h / 2), z0 + dir * (h / 2));
    TwistedLoop k3 = rhs(c0 + k2 * (h / 2), z0 + dir * (h / 2));
    TwistedLoop k4 = rhs(c0 + k3 * h, z0 + dir * h);
    TwistedLoop out = c0 + (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0);
    out.prune(1e-17);
    if (out.coeff_norm() > 1e6)
        throw StepDiverged("rk4_step: norm " + fmt17(out.coeff_norm()));
    return out;
}

}  // namespace detail

/// Integrate dC = C eta with C(z0) = I, sweeping the base row first and then
/// every column (fixed step = grid spacing, classical RK4 per coefficient
/// degree). With `columns_first` the two sweep orders swap; the flatness of
/// the connection makes the results agree to the integration error.
inline HolomorphicFrameField integrate_potential(const Potential& p,
                                                 const GridDomain& grid,
                                                 bool columns_first = false,
                                                 const Tolerances& tol = default_tol()) {
    grid.validate();
    const int N = p.trunc;
    const double h = grid.h();
    HolomorphicFrameField out;
    out.grid = grid;
    out.C = Field<TwistedLoop>(grid);
    out.z0x = grid.nx / 2;
    out.z0y = grid.ny / 2;

    auto sweep_x = [&](Field<TwistedLoop>& f, int iy) {
        for (int ix = out.z0x + 1; ix < grid.nx; ++ix)
            f.at(ix, iy) = detail::rk4_step(f.at(ix - 1, iy), grid.z(ix - 1, iy), 1.0,
                                            h, p, N, tol.tail_budget);
        for (int ix = out.z0x - 1; ix >= 0; --ix)
            f.at(ix, iy) = detail::rk4_step(f.at(ix + 1, iy), grid.z(ix + 1, iy), -1.0,
                                            h, p, N, tol.tail_budget);
    };
    auto sweep_y = [&](Field<TwistedLoop>& f, int ix) {
        for (int iy = out.z0y + 1; iy < grid.ny; ++iy)
            f.at(ix, iy) = detail::rk4_step(f.at(ix, iy - 1), grid.z(ix, iy - 1),
                                            cplx(0, 1), h, p, N, tol.tail_budget);
        for (int iy = out.z0y - 1; iy >= 0; --iy)
            f.at(ix, iy) = detail::rk4_step(f.at(ix, iy + 1), grid.z(ix, iy + 1),
                                            cplx(0, -1), h, p, N, tol.tail_budget);
    };

    out.C.at(out.z0x, out.z0y) = TwistedLoop::identity(N, Twist::sigma);
    if (!columns_first) {
        sweep_x(out.C, out.z0y);
        for (int ix = 0; ix < grid.nx; ++ix) sweep_y(out.C, ix);
    } else {
        sweep_y(out.C, out.z0x);
        for (int iy = 0; iy < grid.ny; ++iy) sweep_x(out.C, iy);
    }

    for (const TwistedLoop& c : out.C.v)
        for (cplx lam : unit_circle_samples(8, 0.19))
            out.det_defect = std::max(out.det_defect,
                                      std::abs(loop_eval(c, lam).determinant() - cplx(1, 0)));

    Field<TwistedLoop> czb = d_zbar_o4(out.C);
    for (int iy = 2; iy < grid.ny - 2; ++iy)
        for (int ix = 2; ix < grid.nx - 2; ++ix)
            out.dzbar_defect = std::max(out.dzbar_defect, czb.at(ix, iy).coeff_norm());
    return out;
}

// ---------------------------------------------------------------------------
// Extended frames via nodewise Iwasawa splitting
// ---------------------------------------------------------------------------

struct ExtendedFrameField {
    GridDomain grid;
    Field<TwistedLoop> F;
    Field<TwistedLoop> C;  // retained generator (round-trip provenance)
    Field<TwistedLoop> Uloop, Vloop;  // Maurer-Cartan coefficient loops
    bool has_provenance = false;
    int z0x = 0, z0y = 0;
    double max_unitary_err = 0.0;
    double max_recon_err = 0.0;
    double shape_defect = 0.0;  // MC mass outside {-1,0} (dz) / {0,1} (dzbar)
    double grading_defect = 0.0;  // eigenspace defect of the MC coefficients
};

inline ExtendedFrameField frames_from_potential(const Potential& p,
                                                const GridDomain& grid,
                                                const Tolerances& tol = default_tol()) {
    validate_potential(p);
    HolomorphicFrameField hol = integrate_potential(p, grid, false, tol);
    if (hol.det_defect > 1e-9)
        throw Error("frames_from_potential: det C defect " + fmt17(hol.det_defect) +
                    " (fixed-step integration drift scales as h^4; refine the grid)");

    ExtendedFrameField ef;
    ef.grid = grid;
    ef.z0x = hol.z0x;
    ef.z0y = hol.z0y;
    ef.C = hol.C;
    ef.has_provenance = true;
    ef.F = Field<TwistedLoop>(grid);
    for (int i = 0; i < grid.size(); ++i) {
        IwasawaResult iw = iwasawa_split(hol.C[i], 1e-9, tol);
        ef.F[i] = loop_truncate(iw.F, p.trunc);
        ef.max_unitary_err = std::max(ef.max_unitary_err, iw.unitary_error);
        ef.max_recon_err = std::max(ef.max_recon_err, iw.recon_error);
    }

    // Maurer-Cartan loops: U = F^* F_z, V = F^* F_zbar (F^{-1} = F^* on S^1).
    Field<TwistedLoop> fz = d_z_o4(ef.F), fzb = d_zbar_o4(ef.F);
    ef.Uloop = Field<TwistedLoop>(grid);
    ef.Vloop = Field<TwistedLoop>(grid);
    for (int i = 0; i < grid.size(); ++i) {
        ef.Uloop[i] = loop_mul(loop_star(ef.F[i]), fz[i], 2 * p.trunc, 1e300);
        ef.Vloop[i] = loop_mul(loop_star(ef.F[i]), fzb[i], 2 * p.trunc, 1e300);
        ef.Uloop[i].prune(1e-16);
        ef.Vloop[i].prune(1e-16);
    }
    for (int iy = 2; iy < grid.ny - 2; ++iy)
        for (int ix = 2; ix < grid.nx - 2; ++ix) {
            int i = grid.idx(ix, iy);
            double off = 0.0, grad = 0.0;
            for (auto& [j, m] : ef.Uloop[i].c) {
                if (j != -1 && j != 0) off += frob(m);
                else {
                    Mat3 tl = traceless_part(m);
                    grad = std::max(grad,
                                    frob(tl - algebra::eigenspace_project(tl, j)));
                }
            }
            for (auto& [j, m] : ef.Vloop[i].c) {
                if (j != 0 && j != 1) off += frob(m);
                else {
                    Mat3 tl = traceless_part(m);
                    grad = std::max(grad,
                                    frob(tl - algebra::eigenspace_project(tl, j)));
                }
            }
            ef.shape_defect = std::max(ef.shape_defect, off);
            ef.grading_defect = std::max(ef.grading_defect, grad);
        }
    return ef;
}

// ---------------------------------------------------------------------------
// Surfaces of the associated family
// ---------------------------------------------------------------------------

struct LambdaSurface {
    LiftField lift;
    InvariantField inv;
    PrimitivityReport prim;
    FrameField frame;
    double lift_renorm = 0.0;  // worst |f| - 1 before renormalization
};

inline LambdaSurface surface_at_lambda(const ExtendedFrameField& ef, cplx lam,
                                       const Tolerances& tol = default_tol()) {
    if (std::abs(std::abs(lam) - 1.0) > 1e-12)
        throw Error("surface_at_lambda: lambda must lie on the unit circle");
    const GridDomain& g = ef.grid;
    LambdaSurface s{LiftField(g), {}, {}, {}, 0.0};
    for (int i = 0; i < g.size(); ++i) {
        Vec3 f = loop_eval(ef.F[i], lam).col(2);
        s.lift_renorm = std::max(s.lift_renorm, std::abs(f.norm() - 1.0));
        s.lift[i] = f / f.norm();
    }
    SpecialFrame sf = make_special_frame(s.lift);
    s.lift = sf.lift;
    s.inv = sf.inv;
    s.frame = sf.frame;
    s.prim = classify_primitivity(
        s.frame, std::max(tol.classifier, tol.classifier_fd_factor * sq(g.h())), tol);
    return s;
}

/// Frame-level invariants at one circle parameter, read directly off the
/// Maurer-Cartan loops (exact in lambda, no extra differentiation).
struct FrameLevelInvariants {
    RealField ew, a, b;
    RealField abs_psi, abs_phi;
};

inline FrameLevelInvariants frame_level_invariants(const ExtendedFrameField& ef,
                                                   cplx lam) {
    const GridDomain& g = ef.grid;
    FrameLevelInvariants r{RealField(g), RealField(g), RealField(g), RealField(g),
                           RealField(g)};
    for (int i = 0; i < g.size(); ++i) {
        Mat3 u = loop_eval(ef.Uloop[i], lam);
        double A = std::abs(u(0, 2)), B = std::abs(u(2, 1));
        double ew = 0.5 * (A * A + B * B);
        double a = (ew > 0) ? A * A / ew : 0.0;
        r.ew[i] = ew;
        r.a[i] = a;
        r.b[i] = 2.0 - a;
        r.abs_psi[i] = std::abs(u(1, 0)) * A * B;
        r.abs_phi[i] = std::sqrt(std::max(a * (2.0 - a), 0.0)) * std::abs(u(0, 1));
    }
    return r;
}

struct AssociatedFamilyReport {
    std::vector<cplx> lambdas;
    double dev_w = 0;  // deviation of the log conformal factor
    double dev_ew = 0, dev_a = 0, dev_b = 0, dev_abs_psi = 0, dev_abs_phi = 0;
    std::vector<SurfaceClass> labels;
    bool label_constant = true;
    double max_deviation() const {
        return std::max({dev_w, dev_ew, dev_a, dev_b, dev_abs_psi, dev_abs_phi});
    }
};

/// Scan the associated family: e^w, a, b, |psi|, |phi| must not move with
/// lambda. The scan uses frame-level readings; the per-lambda classification
/// labels come from the full surface extraction.
inline AssociatedFamilyReport associated_family_scan(const ExtendedFrameField& ef,
                                                     int nlambda = 8,
                                                     bool classify_each = true,
                                                     const Tolerances& tol = default_tol()) {
    AssociatedFamilyReport rep;
    rep.lambdas = unit_circle_samples(nlambda);
    const GridDomain& g = ef.grid;
    FrameLevelInvariants ref = frame_level_invariants(ef, rep.lambdas[0]);
    const int ring = 2;
    for (int s = 1; s < nlambda; ++s) {
        FrameLevelInvariants cur = frame_level_invariants(ef, rep.lambdas[s]);
        for (int iy = ring; iy < g.ny - ring; ++iy)
            for (int ix = ring; ix < g.nx - ring; ++ix) {
                int i = g.idx(ix, iy);
                rep.dev_ew = std::max(rep.dev_ew, std::abs(cur.ew[i] - ref.ew[i]));
                rep.dev_w = std::max(rep.dev_w,
                                     std::abs(std::log(cur.ew[i]) - std::log(ref.ew[i])));
                rep.dev_a = std::max(rep.dev_a, std::abs(cur.a[i] - ref.a[i]));
                rep.dev_b = std::max(rep.dev_b, std::abs(cur.b[i] - ref.b[i]));
                rep.dev_abs_psi =
                    std::max(rep.dev_abs_psi, std::abs(cur.abs_psi[i] - ref.abs_psi[i]));
                rep.dev_abs_phi =
                    std::max(rep.dev_abs_phi, std::abs(cur.abs_phi[i] - ref.abs_phi[i]));
            }
    }
    if (classify_each) {
        SurfaceClass first = SurfaceClass::generic;
        for (int s = 0; s < nlambda; ++s) {
            LambdaSurface ls = surface_at_lambda(ef, rep.lambdas[s], tol);
            rep.labels.push_back(ls.prim.label);
            if (s == 0)
                first = ls.prim.label;
            else if (ls.prim.label != first)
                rep.label_constant = false;
        }
    }
    return rep;
}

// ---------------------------------------------------------------------------
// Round trip: frames -> potential
// ---------------------------------------------------------------------------

/// Recompute eta = C^{-1} dC from the retained holomorphic frame by
/// fourth-order differences and circle-sample projection. Returns the
/// sampled coefficient functions as a loop field (degree j -> eta_j(z)).
inline Field<TwistedLoop> potential_from_frame(const ExtendedFrameField& ef,
                                               int max_degree = 6) {
    if (!ef.has_provenance)
        throw MissingProvenance("potential_from_frame: no retained C field");
    const GridDomain& g = ef.grid;
    Field<TwistedLoop> czf = d_z_o4(ef.C);
    Field<TwistedLoop> eta(g);
    const int S = std::max(64, 4 * default_tol().loop_trunc + 4);
    std::vector<cplx> samples = unit_circle_samples(S);
    for (int i = 0; i < g.size(); ++i) {
        std::vector<Mat3> vals(S);
        for (int s = 0; s < S; ++s) {
            Mat3 cl = loop_eval(ef.C[i], samples[s]);
            Mat3 dz = loop_eval(czf[i], samples[s]);
            vals[s] = cl.fullPivLu().solve(dz);
        }
        TwistedLoop l;
        l.N = std::max(max_degree, 1);
        l.twist = Twist::sigma;
        for (int j = -1; j <= max_degree; ++j) {
            Mat3 acc = Mat3::Zero();
            for (int s = 0; s < S; ++s)
                acc += std::pow(samples[s], -j) * vals[s];
            acc /= double(S);
            if (frob(acc) > 1e-13) l.c[j] = acc;
        }
        eta[i] = l;
    }
    return eta;
}

struct RoundTripReport {
    double max_dev = 0.0;                 // worst coefficient deviation (interior)
    std::map<int, double> per_degree;     // degree -> max deviation
};

inline RoundTripReport potential_match_report(const Field<TwistedLoop>& eta,
                                              const Potential& p, int ring = 2) {
    const GridDomain& g = eta.grid;
    RoundTripReport rep;
    for (int iy = ring; iy < g.ny - ring; ++iy)
        for (int ix = ring; ix < g.nx - ring; ++ix) {
            int i = g.idx(ix, iy);
            TwistedLoop truth = p.eval(g.z(ix, iy));
            std::set<int> degrees;
            for (auto& [j, m] : truth.c) degrees.insert(j);
            for (auto& [j, m] : eta[i].c) degrees.insert(j);
            for (int j : degrees) {
                double d = frob(eta[i].coeff(j) - truth.coeff(j));
                auto [it, fresh] = rep.per_degree.try_emplace(j, d);
                if (!fresh) it->second = std::max(it->second, d);
                rep.max_dev = std::max(rep.max_dev, d);
            }
        }
    return rep;
}

// ---------------------------------------------------------------------------
// Potential JSON I/O
// ---------------------------------------------------------------------------

using PotentialResolver = std::function<Potential(const std::string&)>;

inline nlohmann::json potential_to_json(const Potential& p) {
    nlohmann::json j;
    j["terms"] = nlohmann::json::array();
    for (auto& t : p.terms) {
        nlohmann::json e;
        e["degree"] = t.degree;
        e["poly"] = nlohmann::json::array();
        for (auto& [i, m] : t.poly) {
            nlohmann::json pe;
            pe["i"] = i;
            pe["j_unused"] = 0;
            std::vector<double> flat;
            for (int r = 0; r < 3; ++r)
                for (int c = 0; c < 3; ++c) {
                    flat.push_back(m(r, c).real());
                    flat.push_back(m(r, c).imag());
                }
            pe["coeff_matrix"] = flat;
            e["poly"].push_back(pe);
        }
        j["terms"].push_back(e);
    }
    return j;
}

inline Potential potential_from_json(const nlohmann::json& j,
                                     const PotentialResolver& named = {}) {
    auto resolve = [&](const std::string& name) -> Potential {
        if (!named) throw ConfigError("named_catalog potential needs a catalog: " + name);
        return named(name);
    };
    Potential p;
    if (j.contains("named_catalog"))
        return resolve(j.at("named_catalog").get<std::string>());
    for (auto& e : j.at("terms")) {
        if (e.contains("named_catalog")) {
            Potential sub = resolve(e.at("named_catalog").get<std::string>());
            for (auto& t : sub.terms) p.terms.push_back(t);
            continue;
        }
        PotentialTerm t;
        t.degree = e.at("degree").get<int>();
        for (auto& pe : e.at("poly")) {
            auto flat = pe.at("coeff_matrix").get<std::vector<double>>();
            if (flat.size() != 18)
                throw ConfigError("potential coeff_matrix needs 18 floats");
            Mat3 m;
            int q = 0;
            for (int r = 0; r < 3; ++r)
                for (int c = 0; c < 3; ++c) {
                    m(r, c) = cplx(flat[q], flat[q + 1]);
                    q += 2;
                }
            t.poly.emplace_back(pe.at("i").get<int>(), m);
        }
        p.terms.push_back(t);
    }
    return p;
}

}  // namespace minlag
