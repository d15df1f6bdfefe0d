#pragma once

#include <filesystem>

#include "minlag/catalog.hpp"
#include "minlag/config.hpp"
#include "minlag/io.hpp"

namespace minlag {

// ---------------------------------------------------------------------------
// OBJ export
// ---------------------------------------------------------------------------

enum class Chart { affine12, graph_theta };

inline Chart chart_from_string(const std::string& s) {
    if (s == "affine12") return Chart::affine12;
    if (s == "graph_theta") return Chart::graph_theta;
    throw ConfigError("unknown chart: " + s);
}

/// Wavefront OBJ subset: `v x y z` vertices, quads split into two triangles.
/// affine12 maps [z1:z2:z3] -> (Re(z1/z3), Im(z1/z3), Re(z2/z3));
/// graph_theta emits (x, y, theta(x, y)).
inline void export_mesh(const LiftField& lift, const InvariantField& inv,
                        Chart chart, const std::string& path) {
    const GridDomain& g = lift.grid;
    std::ofstream os(path, std::ios::binary);
    if (!os) throw Error("export_mesh: cannot open " + path);
    for (int iy = 0; iy < g.ny; ++iy)
        for (int ix = 0; ix < g.nx; ++ix) {
            int i = g.idx(ix, iy);
            double vx, vy, vz;
            if (chart == Chart::affine12) {
                const Vec3& f = lift[i];
                if (std::abs(f(2)) < 1e-8)
                    throw ChartSingular("affine12: |z3| < 1e-8 at node " +
                                        std::to_string(i));
                cplx w1 = f(0) / f(2), w2 = f(1) / f(2);
                vx = w1.real();
                vy = w1.imag();
                vz = w2.real();
            } else {
                vx = g.x(ix);
                vy = g.y(iy);
                vz = inv.theta[i];
            }
            os << "v " << fmt17(vx) << ' ' << fmt17(vy) << ' ' << fmt17(vz) << '\n';
        }
    for (int iy = 0; iy + 1 < g.ny; ++iy)
        for (int ix = 0; ix + 1 < g.nx; ++ix) {
            int a = g.idx(ix, iy) + 1;  // OBJ indices are 1-based
            int b = g.idx(ix + 1, iy) + 1;
            int c = g.idx(ix + 1, iy + 1) + 1;
            int d = g.idx(ix, iy + 1) + 1;
            os << "f " << a << ' ' << b << ' ' << c << '\n';
            os << "f " << a << ' ' << c << ' ' << d << '\n';
        }
}

// ---------------------------------------------------------------------------
// Report helpers
// ---------------------------------------------------------------------------

inline nlohmann::json residuals_to_json(const CompatReport& rep) {
    nlohmann::json j;
    for (int k = 0; k < 4; ++k) {
        j["comp" + std::to_string(k + 1)] = {{"max", rep.comp[k].max},
                                             {"rms", rep.comp[k].rms}};
    }
    j["boundary_ring_excluded"] = rep.ring;
    return j;
}

inline nlohmann::json primitivity_to_json(const PrimitivityReport& p) {
    nlohmann::json j;
    j["flags"] = nlohmann::json::array();
    if (p.sigma) j["flags"].push_back("sigma");
    if (p.sigma2) j["flags"].push_back("sigma2");
    if (p.sigma3) j["flags"].push_back("sigma3");
    j["flat_homogeneous"] = p.flat_homogeneous;
    j["label"] = to_string(p.label);
    j["tolerance"] = p.tol;
    j["sigma_component_mass"] = p.sigma_mass;
    j["sigma2_component_mass"] = p.sigma2_mass;
    j["psi_mean"] = {p.psi_mean.real(), p.psi_mean.imag()};
    return j;
}

inline nlohmann::json ruh_vilms_to_json(const RuhVilmsReport& r) {
    nlohmann::json j;
    j["primitivity"] = primitivity_to_json(r.prim);
    j["gauss_maps"] = {{"G1_G2_G3_primitive", r.g1_g2_g3_primitive},
                       {"H2_H32_primitive", r.h2_h32_primitive},
                       {"H1_H31_primitive", r.h1_h31_primitive}};
    if (r.has_conditions) {
        j["surface_conditions"] = {
            {"max_phi", r.conditions.max_phi},
            {"max_a_minus_b", r.conditions.max_ab},
            {"max_rho", r.conditions.max_rho},
            {"minimal_lagrangian", r.conditions.minimal_lagrangian},
            {"minimal", r.conditions.minimal},
            {"flat_homogeneous", r.conditions.flat_homogeneous}};
        j["equivalences"] = {{"sigma", r.equivalence_sigma},
                             {"sigma2", r.equivalence_sigma2},
                             {"sigma3", r.equivalence_sigma3},
                             {"all_hold", r.all_equivalences_hold}};
    }
    return j;
}

inline void write_json(const nlohmann::json& j, const std::string& path) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw Error("write_json: cannot open " + path);
    os << j.dump(2) << '\n';
}

// ---------------------------------------------------------------------------
// Commands
// ---------------------------------------------------------------------------

namespace detail {

inline GridDomain grid_of(const RunConfig& cfg) {
    GridDomain g{cfg.x0, cfg.x1, cfg.y0, cfg.y1, cfg.nx, cfg.ny};
    g.validate();
    return g;
}

inline Potential load_potential(const RunConfig& cfg) {
    if (!cfg.potential_file.empty()) {
        std::ifstream in(cfg.potential_file);
        if (!in) throw ConfigError("cannot open potential file " + cfg.potential_file);
        nlohmann::json j;
        try {
            in >> j;
        } catch (const std::exception& e) {
            throw ConfigError("potential file " + cfg.potential_file + ": " + e.what());
        }
        Potential p = potential_from_json(j, [&](const std::string& n) {
            return catalog::named_potential(n, cfg.loop_N);
        });
        p.trunc = cfg.loop_N;
        return p;
    }
    return catalog::named_potential(cfg.catalog.empty() ? "vacuum" : cfg.catalog,
                                    cfg.loop_N);
}

inline int run_analyze(const RunConfig& cfg, const std::filesystem::path& out) {
    GridDomain g = grid_of(cfg);
    LiftField lift = catalog::build_lift(cfg.catalog, g);
    {
        // the complex-point threshold override must gate the pipeline
        DeriveOptions opt;
        opt.complex_point_eps = cfg.complex_point;
        derive_invariants(lift, opt);
    }
    SpecialFrame sf = make_special_frame(lift);
    const LiftField& sp = sf.lift;
    const InvariantField& inv = sf.inv;
    const FrameField& fr = sf.frame;
    CompatReport residuals = compatibility_residuals(inv);

    write_csv(sp, (out / "lift.csv").string());
    write_csv(inv.w, (out / "omega.csv").string());
    write_csv(inv.a, (out / "a.csv").string());
    write_csv(inv.b, (out / "b.csv").string());
    write_csv(inv.theta, (out / "theta.csv").string());
    write_csv(inv.phi, (out / "phi.csv").string());
    write_csv(inv.psi, (out / "psi.csv").string());
    write_csv(inv.rho, (out / "rho.csv").string());

    nlohmann::json j;
    j["catalog"] = catalog::find_entry(cfg.catalog).name;
    j["grid"] = {{"nx", g.nx}, {"ny", g.ny}, {"h", g.h()}};
    j["residuals"] = residuals_to_json(residuals);
    j["det_defect"] = frame_det_defect(fr);
    j["crosscheck"] = fr.crosscheck;
    write_json(j, (out / "analysis.json").string());
    return 0;
}

inline int run_classify(const RunConfig& cfg, const std::filesystem::path& out) {
    GridDomain g = grid_of(cfg);
    const catalog::Entry& e = catalog::find_entry(cfg.catalog);
    RuhVilmsReport rep;
    if (e.kind == catalog::EntryKind::mc_datum) {
        FrameField fr = catalog::sigma2_synthetic_frame(g);
        rep = ruh_vilms_report_from_frame(fr, nullptr, cfg.classifier);
    } else {
        LiftField lift = catalog::build_lift(cfg.catalog, g);
        Tolerances tol = cfg.tolerances();
        SpecialFrame sf = make_special_frame(lift);
        double tol_c = std::max(tol.classifier,
                                tol.classifier_fd_factor * sq(g.h()));
        rep = ruh_vilms_report_from_frame(sf.frame, &sf.inv, tol_c);

        // gauss-map value fields (flattened matrices)
        GaussMaps maps = gauss_map(sf.frame);
        MatrixField g3(g), h31(g), h32(g);
        for (int i = 0; i < g.size(); ++i) {
            g3[i] = maps.g3[i].S;
            h31[i] = maps.g1[i].S;
            h32[i] = sf.frame.F[i] * algebra::P2() * sf.frame.F[i].inverse();
        }
        write_csv(g3, (out / "gauss3.csv").string());
        write_csv(h31, (out / "gauss_h31.csv").string());
        write_csv(h32, (out / "gauss_h32.csv").string());
    }
    nlohmann::json j = ruh_vilms_to_json(rep);
    j["catalog"] = e.name;
    write_json(j, (out / "ruh_vilms.json").string());
    return 0;
}

inline int run_construct(const RunConfig& cfg, const std::filesystem::path& out) {
    GridDomain g = grid_of(cfg);
    Potential p = load_potential(cfg);
    Tolerances tol = cfg.tolerances();
    ExtendedFrameField ef = frames_from_potential(p, g, tol);

    nlohmann::json j;
    j["mc_shape_defect"] = ef.shape_defect;
    j["mc_grading_defect"] = ef.grading_defect;
    j["iwasawa_unitary_error"] = ef.max_unitary_err;
    j["iwasawa_recon_error"] = ef.max_recon_err;
    j["lambda_surfaces"] = nlohmann::json::array();

    // extended frame loops at the base point and at four spot checks
    nlohmann::json frames_json;
    auto frame_at = [&](int ix, int iy) {
        nlohmann::json e;
        e["x"] = g.x(ix);
        e["y"] = g.y(iy);
        e["loop"] = loop_to_json(ef.F.at(ix, iy));
        return e;
    };
    frames_json["base"] = frame_at(ef.z0x, ef.z0y);
    frames_json["samples"] = nlohmann::json::array();
    for (auto [ix, iy] : {std::pair{1, 1}, {g.nx - 2, 1}, {1, g.ny - 2},
                          {g.nx - 2, g.ny - 2}})
        frames_json["samples"].push_back(frame_at(ix, iy));
    write_json(frames_json, (out / "frames.json").string());

    std::vector<cplx> lams = unit_circle_samples(cfg.lambda_samples);
    for (int s = 0; s < cfg.lambda_samples; ++s) {
        LambdaSurface ls = surface_at_lambda(ef, lams[s], tol);
        std::string tag = "lambda" + std::to_string(s);
        write_csv(ls.lift, (out / (tag + "_lift.csv")).string());
        write_csv(ls.inv.theta, (out / (tag + "_theta.csv")).string());
        export_mesh(ls.lift, ls.inv, Chart::affine12, (out / (tag + ".obj")).string());
        nlohmann::json e;
        e["lambda"] = {lams[s].real(), lams[s].imag()};
        e["label"] = to_string(ls.prim.label);
        e["lift_renorm"] = ls.lift_renorm;
        j["lambda_surfaces"].push_back(e);
    }

    AssociatedFamilyReport fam = associated_family_scan(ef, cfg.lambda_samples, false, tol);
    j["associated_family_max_deviation"] = fam.max_deviation();
    write_json(j, (out / "construct.json").string());
    return 0;
}

inline int run_export(const RunConfig& cfg, const std::filesystem::path& out) {
    GridDomain g = grid_of(cfg);
    LiftField lift = catalog::build_lift(cfg.catalog, g);
    LiftField sp = special_lift(lift);
    InvariantField inv = derive_invariants(sp);
    export_mesh(sp, inv, chart_from_string(cfg.chart), (out / "mesh.obj").string());
    return 0;
}

inline int run_roundtrip(const RunConfig& cfg, const std::filesystem::path& out) {
    GridDomain g = grid_of(cfg);
    Potential p = load_potential(cfg);
    Tolerances tol = cfg.tolerances();
    ExtendedFrameField ef = frames_from_potential(p, g, tol);
    Field<TwistedLoop> eta = potential_from_frame(ef);
    RoundTripReport rep = potential_match_report(eta, p);
    nlohmann::json j;
    j["max_deviation"] = rep.max_dev;
    for (auto& [deg, dev] : rep.per_degree)
        j["per_degree"][std::to_string(deg)] = dev;
    write_json(j, (out / "roundtrip.json").string());
    return 0;
}

}  // namespace detail

/// Execute one batch run. Exit codes: 0 success, 2 configuration/validation
/// error, 3 numerical failure.
inline int run(const RunConfig& cfg) {
    try {
        validate_config(cfg);
        if (!cfg.catalog.empty()) {
            catalog::SelfValidation v = catalog::self_validate(cfg.catalog);
            if (!v.ok)
                throw Error("catalog entry failed self-validation: " + v.name +
                            (v.detail.empty() ? "" : " (" + v.detail + ")"));
        }
        std::filesystem::path out(cfg.out_dir);
        std::filesystem::create_directories(out);
        if (cfg.command == "analyze") return detail::run_analyze(cfg, out);
        if (cfg.command == "classify") return detail::run_classify(cfg, out);
        if (cfg.command == "construct") return detail::run_construct(cfg, out);
        if (cfg.command == "export") return detail::run_export(cfg, out);
        return detail::run_roundtrip(cfg, out);
    } catch (const ConfigError& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return 2;
    } catch (const Error& e) {
        std::fprintf(stderr, "numerical failure: %s\n", e.what());
        return 3;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 3;
    }
}

}  // namespace minlag
