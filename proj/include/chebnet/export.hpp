#pragma once

// Geometry exporters: structured grids as OBJ meshes, traced curves as CSV,
// and both as self-describing JSON documents.  All numbers are printed with
// 17 significant digits so that a re-import reproduces the samples exactly.

#include <cstdio>
#include <ostream>
#include <string>
#include <vector>

#include "construction.hpp"
#include "errors.hpp"
#include "vec3.hpp"

namespace chebnet {

inline std::string fmt17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

struct MeshStats {
    int n_vertices = 0;
    int n_faces = 0;
};

// Structured nx x ny grid to a quad mesh.  Masked nodes are omitted and the
// faces re-indexed; a quad is emitted only when all four corners are present.
inline MeshStats write_obj(std::ostream& os, const std::vector<Vec3>& r, int nx,
                           int ny, const std::vector<unsigned char>* mask = nullptr) {
    if (nx < 1 || ny < 1 || r.size() != static_cast<size_t>(nx) * ny)
        throw BadParams("write_obj: vertex count does not match grid shape");
    if (r.empty()) throw EmptyObject("write_obj: no vertices");
    auto on = [&](int i, int j) {
        return !mask || (*mask)[static_cast<size_t>(j) * nx + i] != 0;
    };
    MeshStats st;
    std::vector<int> index(r.size(), 0);
    for (int j = 0; j < ny; ++j)
        for (int i = 0; i < nx; ++i) {
            if (!on(i, j)) continue;
            const Vec3& v = r[static_cast<size_t>(j) * nx + i];
            os << "v " << fmt17(v.x) << ' ' << fmt17(v.y) << ' ' << fmt17(v.z)
               << '\n';
            index[static_cast<size_t>(j) * nx + i] = ++st.n_vertices;
        }
    if (st.n_vertices == 0) throw EmptyObject("write_obj: all nodes masked");
    for (int j = 0; j + 1 < ny; ++j)
        for (int i = 0; i + 1 < nx; ++i) {
            if (!on(i, j) || !on(i + 1, j) || !on(i + 1, j + 1) || !on(i, j + 1))
                continue;
            const size_t b = static_cast<size_t>(j) * nx + i;
            os << "f " << index[b] << ' ' << index[b + 1] << ' '
               << index[b + nx + 1] << ' ' << index[b + nx] << '\n';
            ++st.n_faces;
        }
    return st;
}

// Traced curves to CSV: a header line per curve seed, then one point per row
// as curve_id,s,x,y,z.  Returns the total number of rows written.
inline int write_csv(std::ostream& os, const std::vector<TraceCurve>& curves) {
    if (curves.empty()) throw EmptyObject("write_csv: no curves");
    int rows = 0;
    for (size_t c = 0; c < curves.size(); ++c) {
        const TraceCurve& cv = curves[c];
        os << "# curve " << c << " family " << cv.family << " seed "
           << fmt17(cv.param.front().first) << ' '
           << fmt17(cv.param.front().second) << '\n';
        ++rows;
        for (size_t k = 0; k < cv.r.size(); ++k) {
            os << c << ',' << fmt17(cv.s[k]) << ',' << fmt17(cv.r[k].x) << ','
               << fmt17(cv.r[k].y) << ',' << fmt17(cv.r[k].z) << '\n';
            ++rows;
        }
    }
    return rows;
}

namespace detail {

inline void json_vec3_array(std::ostream& os, const std::vector<Vec3>& r) {
    os << '[';
    for (size_t k = 0; k < r.size(); ++k) {
        if (k) os << ',';
        os << '[' << fmt17(r[k].x) << ',' << fmt17(r[k].y) << ','
           << fmt17(r[k].z) << ']';
    }
    os << ']';
}

}  // namespace detail

// Grid samples as a self-describing JSON document.
inline void write_grid_json(std::ostream& os, const std::vector<Vec3>& r, int nx,
                            int ny, double step,
                            const std::vector<unsigned char>* mask = nullptr) {
    if (r.empty()) throw EmptyObject("write_grid_json: no vertices");
    os << "{\n\"type\":\"grid\",\n\"nx\":" << nx << ",\n\"ny\":" << ny
       << ",\n\"step\":" << fmt17(step) << ",\n\"vertices\":";
    detail::json_vec3_array(os, r);
    os << ",\n\"mask\":[";
    for (size_t k = 0; k < r.size(); ++k) {
        if (k) os << ',';
        os << (mask ? int((*mask)[k]) : 1);
    }
    os << "]\n}\n";
}

// Traced curves as a self-describing JSON document.
inline void write_curves_json(std::ostream& os,
                              const std::vector<TraceCurve>& curves) {
    if (curves.empty()) throw EmptyObject("write_curves_json: no curves");
    os << "{\n\"type\":\"curves\",\n\"curves\":[\n";
    for (size_t c = 0; c < curves.size(); ++c) {
        const TraceCurve& cv = curves[c];
        if (c) os << ",\n";
        os << "{\"id\":" << c << ",\"family\":" << cv.family
           << ",\"truncated\":" << (cv.truncated ? "true" : "false") << ",\"s\":[";
        for (size_t k = 0; k < cv.s.size(); ++k) {
            if (k) os << ',';
            os << fmt17(cv.s[k]);
        }
        os << "],\"points\":";
        detail::json_vec3_array(os, cv.r);
        os << '}';
    }
    os << "\n]\n}\n";
}

}  // namespace chebnet
