#pragma once

#include <fstream>
#include <sstream>

#include "minlag/grid.hpp"

namespace minlag {

inline void to_complex_components(std::ostream& os, double v) {
    os << ',' << fmt17(v) << ',' << fmt17(0.0);
}
inline void to_complex_components(std::ostream& os, const cplx& v) {
    os << ',' << fmt17(v.real()) << ',' << fmt17(v.imag());
}
inline void to_complex_components(std::ostream& os, const Vec3& v) {
    for (int k = 0; k < 3; ++k) os << ',' << fmt17(v(k).real()) << ',' << fmt17(v(k).imag());
}
inline void to_complex_components(std::ostream& os, const Mat3& m) {
    for (int r = 0; r < 3; ++r)
        for (int c = 0; c < 3; ++c)
            os << ',' << fmt17(m(r, c).real()) << ',' << fmt17(m(r, c).imag());
}

inline int component_count(const double&) { return 1; }
inline int component_count(const cplx&) { return 1; }
inline int component_count(const Vec3&) { return 3; }
inline int component_count(const Mat3&) { return 9; }

/// CSV layout: header `x,y,re_0,im_0,...`, one node per row, row-major
/// (y outer, x inner), UTF-8, %.17g floats.
template <class T>
void write_csv(const Field<T>& f, const std::string& path) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw Error("write_csv: cannot open " + path);
    os << "x,y";
    const int nc = component_count(T{});
    for (int c = 0; c < nc; ++c) os << ",re_" << c << ",im_" << c;
    os << '\n';
    for (int iy = 0; iy < f.grid.ny; ++iy)
        for (int ix = 0; ix < f.grid.nx; ++ix) {
            os << fmt17(f.grid.x(ix)) << ',' << fmt17(f.grid.y(iy));
            to_complex_components(os, f.at(ix, iy));
            os << '\n';
        }
}

}  // namespace minlag
