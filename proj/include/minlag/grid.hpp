#pragma once

#include <functional>
#include <vector>

#include "minlag/mat3.hpp"

namespace minlag {

/// Uniform sampling of a rectangle with square cells. Node (ix, iy) sits at
/// z = (x0 + ix h) + i (y0 + iy h); storage is row-major with x fastest.
struct GridDomain {
    double x0 = -1.0, x1 = 1.0, y0 = -1.0, y1 = 1.0;
    int nx = 0, ny = 0;

    double h() const { return (x1 - x0) / (nx - 1); }
    int size() const { return nx * ny; }
    int idx(int ix, int iy) const { return iy * nx + ix; }
    double x(int ix) const { return x0 + ix * h(); }
    double y(int iy) const { return y0 + iy * h(); }
    cplx z(int ix, int iy) const { return cplx(x(ix), y(iy)); }

    void validate() const {
        if (nx < 5 || ny < 5) throw Error("GridDomain: nx, ny must be >= 5");
        double hx = (x1 - x0) / (nx - 1);
        double hy = (y1 - y0) / (ny - 1);
        if (!(hx > 0) || !(hy > 0)) throw Error("GridDomain: degenerate bounds");
        if (std::abs(hx - hy) > 1e-12 * std::max(1.0, std::abs(hx)))
            throw Error("GridDomain: cells must be square");
    }

    bool same_as(const GridDomain& o) const {
        return nx == o.nx && ny == o.ny && std::abs(x0 - o.x0) < 1e-14 &&
               std::abs(x1 - o.x1) < 1e-14 && std::abs(y0 - o.y0) < 1e-14 &&
               std::abs(y1 - o.y1) < 1e-14;
    }
};

template <class T>
struct Field {
    GridDomain grid;
    std::vector<T> v;

    Field() = default;
    explicit Field(const GridDomain& g) : grid(g), v(g.size()) {}
    Field(const GridDomain& g, const T& fill) : grid(g), v(g.size(), fill) {}

    T& at(int ix, int iy) { return v[grid.idx(ix, iy)]; }
    const T& at(int ix, int iy) const { return v[grid.idx(ix, iy)]; }
    T& operator[](int i) { return v[i]; }
    const T& operator[](int i) const { return v[i]; }
    int size() const { return static_cast<int>(v.size()); }
};

using RealField = Field<double>;
using ComplexField = Field<cplx>;
using VectorField = Field<Vec3>;
using MatrixField = Field<Mat3>;

/// Maximum over nodes at least `ring` cells away from the boundary.
template <class T, class F>
double max_over_interior(const Field<T>& f, int ring, F&& val) {
    double m = 0.0;
    for (int iy = ring; iy < f.grid.ny - ring; ++iy)
        for (int ix = ring; ix < f.grid.nx - ring; ++ix)
            m = std::max(m, val(f.at(ix, iy)));
    return m;
}

template <class T, class F>
double rms_over_interior(const Field<T>& f, int ring, F&& val) {
    double s = 0.0;
    long n = 0;
    for (int iy = ring; iy < f.grid.ny - ring; ++iy)
        for (int ix = ring; ix < f.grid.nx - ring; ++ix) {
            s += sq(val(f.at(ix, iy)));
            ++n;
        }
    return n ? std::sqrt(s / n) : 0.0;
}

namespace detail {

// 2nd order: central in the interior, 3-point one-sided on the boundary.
template <class T>
T stencil_d1(const Field<T>& f, int ix, int iy, int dx, int dy, double h) {
    const int n = dx ? f.grid.nx : f.grid.ny;
    const int i = dx ? ix : iy;
    auto node = [&](int s) -> const T& {
        return f.at(ix + dx * s, iy + dy * s);
    };
    if (i >= 1 && i <= n - 2) return (node(1) - node(-1)) * (0.5 / h);
    if (i == 0) return (node(0) * -3.0 + node(1) * 4.0 - node(2)) * (0.5 / h);
    return (node(0) * 3.0 - node(-1) * 4.0 + node(-2)) * (0.5 / h);
}

// 4th order central where a 2-ring exists, falling back to the 2nd-order
// stencils near the boundary.
template <class T>
T stencil_d1_o4(const Field<T>& f, int ix, int iy, int dx, int dy, double h) {
    const int n = dx ? f.grid.nx : f.grid.ny;
    const int i = dx ? ix : iy;
    auto node = [&](int s) -> const T& {
        return f.at(ix + dx * s, iy + dy * s);
    };
    if (i >= 2 && i <= n - 3)
        return (node(-2) - node(2) + (node(1) - node(-1)) * 8.0) * (1.0 / (12.0 * h));
    return stencil_d1(f, ix, iy, dx, dy, h);
}

}  // namespace detail

template <class T>
Field<T> d_x(const Field<T>& f) {
    Field<T> out(f.grid);
    const double h = f.grid.h();
    for (int iy = 0; iy < f.grid.ny; ++iy)
        for (int ix = 0; ix < f.grid.nx; ++ix)
            out.at(ix, iy) = detail::stencil_d1(f, ix, iy, 1, 0, h);
    return out;
}

template <class T>
Field<T> d_y(const Field<T>& f) {
    Field<T> out(f.grid);
    const double h = f.grid.h();
    for (int iy = 0; iy < f.grid.ny; ++iy)
        for (int ix = 0; ix < f.grid.nx; ++ix)
            out.at(ix, iy) = detail::stencil_d1(f, ix, iy, 0, 1, h);
    return out;
}

/// Cauchy-Riemann operators: d_z = (d_x - i d_y)/2, d_zbar = (d_x + i d_y)/2.
template <class T>
Field<T> d_z(const Field<T>& f) {
    Field<T> fx = d_x(f), fy = d_y(f);
    Field<T> out(f.grid);
    for (int i = 0; i < out.size(); ++i) out[i] = (fx[i] - fy[i] * cplx(0, 1)) * 0.5;
    return out;
}

template <class T>
Field<T> d_zbar(const Field<T>& f) {
    Field<T> fx = d_x(f), fy = d_y(f);
    Field<T> out(f.grid);
    for (int i = 0; i < out.size(); ++i) out[i] = (fx[i] + fy[i] * cplx(0, 1)) * 0.5;
    return out;
}

template <class T>
Field<T> d_z_o4(const Field<T>& f) {
    Field<T> out(f.grid);
    const double h = f.grid.h();
    for (int iy = 0; iy < f.grid.ny; ++iy)
        for (int ix = 0; ix < f.grid.nx; ++ix) {
            T fx = detail::stencil_d1_o4(f, ix, iy, 1, 0, h);
            T fy = detail::stencil_d1_o4(f, ix, iy, 0, 1, h);
            out.at(ix, iy) = (fx - fy * cplx(0, 1)) * 0.5;
        }
    return out;
}

template <class T>
Field<T> d_zbar_o4(const Field<T>& f) {
    Field<T> out(f.grid);
    const double h = f.grid.h();
    for (int iy = 0; iy < f.grid.ny; ++iy)
        for (int ix = 0; ix < f.grid.nx; ++ix) {
            T fx = detail::stencil_d1_o4(f, ix, iy, 1, 0, h);
            T fy = detail::stencil_d1_o4(f, ix, iy, 0, 1, h);
            out.at(ix, iy) = (fx + fy * cplx(0, 1)) * 0.5;
        }
    return out;
}

}  // namespace minlag
