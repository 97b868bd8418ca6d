#pragma once

// Conic programs over Hermitian PSD matrix variables and nonnegative scalars.
// Hermitian blocks are realified, [[Re, -Im], [Im, Re]], so the backend only
// sees real symmetric cones.

#include "jtbf/common.hpp"
#include "jtbf/conic/ipm.hpp"

#include <iomanip>
#include <ostream>
#include <vector>

namespace jtbf::conic {

/// scale * L W L^H (L empty means identity).
struct HermitianTerm {
    int var = 0;
    double scale = 1.0;
    CMat left;
};

/// scale * L W r (L empty means identity).
struct VectorTerm {
    int var = 0;
    double scale = 1.0;
    CMat left;
    CVec right;
};

/// sum Re Tr(C W_var) + sum a_j x_j + constant.
struct LinearFunctional {
    std::vector<std::pair<int, CMat>> matrix_terms;
    std::vector<std::pair<int, double>> scalar_terms;
    double constant = 0.0;
};

/// Hermitian-valued affine map of the variables.
struct AffineHermitian {
    Index dim = 0;
    std::vector<HermitianTerm> terms;
    std::vector<std::pair<int, CMat>> scalar_terms;  // x_j * C
    CMat constant;                                   // empty means zero
};

/// Complex-vector-valued affine map of the variables.
struct AffineVector {
    Index dim = 0;
    std::vector<VectorTerm> terms;
    CVec constant;  // empty means zero
};

/// || (matrix parts in Frobenius norm, vector parts in Euclidean norm) || <= bound.
struct SocConstraint {
    LinearFunctional bound;
    std::vector<AffineHermitian> matrix_parts;
    std::vector<AffineVector> vector_parts;
};

struct ConicProgram {
    std::vector<Index> psd_dims;
    int n_scalars = 0;
    LinearFunctional objective;             // minimized
    std::vector<LinearFunctional> linear;   // each >= 0
    std::vector<AffineHermitian> lmis;      // each PSD
    std::vector<SocConstraint> socs;

    int add_psd(Index n) {
        psd_dims.push_back(n);
        return static_cast<int>(psd_dims.size()) - 1;
    }
    int add_scalar() { return n_scalars++; }
};

struct ConicSolution {
    IpmStatus status = IpmStatus::numerical_failure;
    std::vector<CMat> psd_values;
    std::vector<double> scalar_values;
    double objective_value = 0.0;
    double dual_objective = 0.0;
    double primal_residual = 0.0;
    double dual_residual = 0.0;
    double gap = 0.0;
    double relative_gap = 0.0;
    int iterations = 0;

    bool optimal() const { return status == IpmStatus::optimal; }
};

/// Real symmetric image [[Re, -Im], [Im, Re]] of a Hermitian matrix; `half` applies a factor 1/2.
inline Mat realify(const CMat& m, bool half = false) {
    const Index n = m.rows();
    Mat r(2 * n, 2 * n);
    r.topLeftCorner(n, n) = m.real();
    r.bottomRightCorner(n, n) = m.real();
    r.topRightCorner(n, n) = -m.imag();
    r.bottomLeftCorner(n, n) = m.imag();
    return half ? Mat(0.5 * r) : r;
}

/// [Re; Im] of a complex vector times `factor`.
inline Vec realify(const CVec& v, double factor = 1.0) {
    Vec r(2 * v.size());
    r.head(v.size()) = v.real();
    r.tail(v.size()) = v.imag();
    return factor * r;
}

namespace detail {

/// Column layout: per PSD variable n^2 real coordinates (diagonal, then Re/Im of
/// each strictly-lower pair), followed by the scalars.
struct Layout {
    std::vector<Index> offset;
    std::vector<Index> dims;
    Index scalar_offset = 0;
    Index n = 0;

    explicit Layout(const ConicProgram& p) : dims(p.psd_dims) {
        Index o = 0;
        for (Index d : p.psd_dims) {
            offset.push_back(o);
            o += d * d;
        }
        scalar_offset = o;
        n = o + p.n_scalars;
    }

    struct Coord {
        enum Kind { diag, re, im } kind;
        Index i, j;  // i > j for re/im
    };

    std::vector<Coord> coords(Index d) const {
        std::vector<Coord> c;
        for (Index i = 0; i < d; ++i) c.push_back({Coord::diag, i, i});
        for (Index j = 0; j < d; ++j)
            for (Index i = j + 1; i < d; ++i) {
                c.push_back({Coord::re, i, j});
                c.push_back({Coord::im, i, j});
            }
        return c;
    }
};

/// Basis matrix of a coordinate: E_ii, E_ij + E_ji, or i E_ij - i E_ji.
inline CMat basis(Index d, const Layout::Coord& c) {
    CMat b = CMat::Zero(d, d);
    switch (c.kind) {
        case Layout::Coord::diag: b(c.i, c.i) = 1.0; break;
        case Layout::Coord::re:
            b(c.i, c.j) = 1.0;
            b(c.j, c.i) = 1.0;
            break;
        case Layout::Coord::im:
            b(c.i, c.j) = cd(0.0, 1.0);
            b(c.j, c.i) = cd(0.0, -1.0);
            break;
    }
    return b;
}

/// L B L^H for a basis matrix B, using the columns of L.
inline CMat sandwich_basis(const CMat& left, Index d, const Layout::Coord& c) {
    if (left.size() == 0) return basis(d, c);
    const auto li = left.col(c.i);
    const auto lj = left.col(c.j);
    switch (c.kind) {
        case Layout::Coord::diag: return li * li.adjoint();
        case Layout::Coord::re: return li * lj.adjoint() + lj * li.adjoint();
        case Layout::Coord::im: return cd(0.0, 1.0) * (li * lj.adjoint() - lj * li.adjoint());
    }
    return {};
}

inline CVec apply_basis(const CMat& left, const CVec& right, Index d, const Layout::Coord& c) {
    CVec v = basis(d, c) * right;
    return left.size() == 0 ? v : CVec(left * v);
}

/// Real coefficient of a coordinate in Re Tr(C W).
inline double trace_coefficient(const CMat& c, const Layout::Coord& k) {
    switch (k.kind) {
        case Layout::Coord::diag: return c(k.i, k.i).real();
        case Layout::Coord::re: return (c(k.j, k.i) + c(k.i, k.j)).real();
        case Layout::Coord::im: return (cd(0.0, 1.0) * (c(k.j, k.i) - c(k.i, k.j))).real();
    }
    return 0.0;
}

using Triplets = std::vector<Eigen::Triplet<double>>;

/// Appends realified svec rows of -M(coordinate) for every column of an affine Hermitian map.
inline void emit_hermitian(const AffineHermitian& a, const Layout& lay, Index row0, Triplets& g, Vec& h) {
    const Index m = a.dim, m2 = 2 * m;
    auto put_matrix = [&](const CMat& mm, Index col, double sign, bool into_h) {
        const Mat r = realify(mm);
        for (Index jj = 0; jj < m2; ++jj)
            for (Index ii = jj; ii < m2; ++ii) {
                double v = r(ii, jj);
                if (v == 0.0) continue;
                if (ii != jj) v *= kSqrt2;
                const Index row = row0 + svec_index(m2, ii, jj);
                if (into_h) h(row) += v;
                else g.emplace_back(row, col, sign * v);
            }
    };
    for (const auto& t : a.terms) {
        const Index d = lay.dims[static_cast<std::size_t>(t.var)];
        const auto cs = lay.coords(d);
        for (std::size_t q = 0; q < cs.size(); ++q)
            put_matrix(t.scale * sandwich_basis(t.left, d, cs[q]), lay.offset[static_cast<std::size_t>(t.var)] + static_cast<Index>(q), -1.0, false);
    }
    for (const auto& [j, c] : a.scalar_terms) put_matrix(c, lay.scalar_offset + j, -1.0, false);
    if (a.constant.size() != 0) put_matrix(a.constant, 0, 1.0, true);
}

/// Coefficient row of a linear functional.
inline std::vector<std::pair<Index, double>> linear_row(const LinearFunctional& f, const Layout& lay) {
    std::vector<std::pair<Index, double>> out;
    for (const auto& [var, c] : f.matrix_terms) {
        const Index d = lay.dims[static_cast<std::size_t>(var)];
        const auto cs = lay.coords(d);
        for (std::size_t q = 0; q < cs.size(); ++q) {
            const double v = trace_coefficient(c, cs[q]);
            if (v != 0.0) out.emplace_back(lay.offset[static_cast<std::size_t>(var)] + static_cast<Index>(q), v);
        }
    }
    for (const auto& [j, a] : f.scalar_terms)
        if (a != 0.0) out.emplace_back(lay.scalar_offset + j, a);
    return out;
}

inline Index hermitian_rows(Index m) { return m * m; }

/// Frobenius coordinates of -M: diagonal, then sqrt2 Re / sqrt2 Im of each strictly-lower entry.
inline void emit_frobenius(const AffineHermitian& a, const Layout& lay, Index row0, Triplets& g, Vec& h) {
    const Index m = a.dim;
    auto put = [&](const CMat& mm, Index col, bool into_h) {
        Index r = row0;
        auto add = [&](double v) {
            if (v != 0.0) {
                if (into_h) h(r) += v;
                else g.emplace_back(r, col, -v);
            }
            ++r;
        };
        for (Index i = 0; i < m; ++i) add(mm(i, i).real());
        for (Index j = 0; j < m; ++j)
            for (Index i = j + 1; i < m; ++i) {
                add(kSqrt2 * mm(i, j).real());
                add(kSqrt2 * mm(i, j).imag());
            }
    };
    for (const auto& t : a.terms) {
        const Index d = lay.dims[static_cast<std::size_t>(t.var)];
        const auto cs = lay.coords(d);
        for (std::size_t q = 0; q < cs.size(); ++q)
            put(t.scale * sandwich_basis(t.left, d, cs[q]), lay.offset[static_cast<std::size_t>(t.var)] + static_cast<Index>(q), false);
    }
    for (const auto& [j, c] : a.scalar_terms) put(c, lay.scalar_offset + j, false);
    if (a.constant.size() != 0) put(a.constant, 0, true);
}

inline void emit_vector(const AffineVector& a, const Layout& lay, Index row0, Triplets& g, Vec& h) {
    const Index m = a.dim;
    auto put = [&](const CVec& v, Index col, bool into_h) {
        for (Index i = 0; i < m; ++i) {
            const double re = v(i).real(), im = v(i).imag();
            if (into_h) {
                h(row0 + i) += re;
                h(row0 + m + i) += im;
            } else {
                if (re != 0.0) g.emplace_back(row0 + i, col, -re);
                if (im != 0.0) g.emplace_back(row0 + m + i, col, -im);
            }
        }
    };
    for (const auto& t : a.terms) {
        const Index d = lay.dims[static_cast<std::size_t>(t.var)];
        const auto cs = lay.coords(d);
        for (std::size_t q = 0; q < cs.size(); ++q)
            put(t.scale * apply_basis(t.left, t.right, d, cs[q]), lay.offset[static_cast<std::size_t>(t.var)] + static_cast<Index>(q), false);
    }
    if (a.constant.size() != 0) put(a.constant, 0, true);
}

}  // namespace detail

/// Standard form of a Hermitian program plus the constant objective offset.
struct CompiledProgram {
    StandardForm form;
    double objective_constant = 0.0;
};

inline CompiledProgram compile(const ConicProgram& p) {
    const detail::Layout lay(p);
    CompiledProgram out;
    StandardForm& f = out.form;
    f.c = Vec::Zero(lay.n);
    for (const auto& [col, v] : detail::linear_row(p.objective, lay)) f.c(col) += v;
    out.objective_constant = p.objective.constant;

    // Row layout: LP rows (scalars >= 0, linear constraints), SOCs, then PSD blocks
    // (variables first, then LMIs).
    f.cone.n_lp = p.n_scalars + static_cast<Index>(p.linear.size());
    for (const auto& s : p.socs) {
        Index q = 1;
        for (const auto& mpart : s.matrix_parts) q += detail::hermitian_rows(mpart.dim);
        for (const auto& vpart : s.vector_parts) q += 2 * vpart.dim;
        f.cone.soc.push_back(q);
    }
    for (Index d : p.psd_dims) f.cone.psd.push_back(2 * d);
    for (const auto& l : p.lmis) f.cone.psd.push_back(2 * l.dim);
    const Index m = f.cone.size();
    f.h = Vec::Zero(m);
    detail::Triplets g;

    Index row = 0;
    for (int j = 0; j < p.n_scalars; ++j) g.emplace_back(row++, lay.scalar_offset + j, -1.0);
    for (const auto& l : p.linear) {
        for (const auto& [col, v] : detail::linear_row(l, lay)) g.emplace_back(row, col, -v);
        f.h(row) = l.constant;
        ++row;
    }
    for (const auto& s : p.socs) {
        for (const auto& [col, v] : detail::linear_row(s.bound, lay)) g.emplace_back(row, col, -v);
        f.h(row) = s.bound.constant;
        ++row;
        for (const auto& mpart : s.matrix_parts) {
            detail::emit_frobenius(mpart, lay, row, g, f.h);
            row += detail::hermitian_rows(mpart.dim);
        }
        for (const auto& vpart : s.vector_parts) {
            detail::emit_vector(vpart, lay, row, g, f.h);
            row += 2 * vpart.dim;
        }
    }
    for (std::size_t v = 0; v < p.psd_dims.size(); ++v) {
        AffineHermitian a;
        a.dim = p.psd_dims[v];
        a.terms.push_back({static_cast<int>(v), 1.0, {}});
        detail::emit_hermitian(a, lay, row, g, f.h);
        row += svec_size(2 * a.dim);
    }
    for (const auto& l : p.lmis) {
        detail::emit_hermitian(l, lay, row, g, f.h);
        row += svec_size(2 * l.dim);
    }
    f.G.resize(m, lay.n);
    f.G.setFromTriplets(g.begin(), g.end());
    f.G.makeCompressed();
    return out;
}

/// Reads Hermitian variable values from a standard-form solution vector.
inline void unpack(const ConicProgram& p, const Vec& x, std::vector<CMat>& psd, std::vector<double>& scalars) {
    const detail::Layout lay(p);
    psd.clear();
    for (std::size_t v = 0; v < p.psd_dims.size(); ++v) {
        const Index d = p.psd_dims[v];
        const auto cs = lay.coords(d);
        CMat w = CMat::Zero(d, d);
        for (std::size_t q = 0; q < cs.size(); ++q) {
            const double val = x(lay.offset[v] + static_cast<Index>(q));
            const auto& c = cs[q];
            switch (c.kind) {
                case detail::Layout::Coord::diag: w(c.i, c.i) = val; break;
                case detail::Layout::Coord::re:
                    w(c.i, c.j) += val;
                    w(c.j, c.i) += val;
                    break;
                case detail::Layout::Coord::im:
                    w(c.i, c.j) += cd(0.0, val);
                    w(c.j, c.i) -= cd(0.0, val);
                    break;
            }
        }
        psd.push_back(w);
    }
    scalars.assign(static_cast<std::size_t>(p.n_scalars), 0.0);
    for (int j = 0; j < p.n_scalars; ++j) scalars[static_cast<std::size_t>(j)] = x(lay.scalar_offset + j);
}

inline ConicSolution solve(const ConicProgram& p, const IpmOptions& opt = {}) {
    const CompiledProgram cp = compile(p);
    const IpmResult r = solve_standard(cp.form, opt);
    ConicSolution sol;
    sol.status = r.status;
    sol.iterations = r.iterations;
    sol.primal_residual = r.primal_residual;
    sol.dual_residual = r.dual_residual;
    sol.gap = r.gap;
    sol.relative_gap = r.relative_gap;
    if (r.x.size() == cp.form.c.size()) unpack(p, r.x, sol.psd_values, sol.scalar_values);
    sol.objective_value = r.primal_objective + cp.objective_constant;
    sol.dual_objective = r.dual_objective + cp.objective_constant;
    return sol;
}

// Evaluation at fixed variable values.

inline CMat evaluate(const AffineHermitian& a, const std::vector<CMat>& w, const std::vector<double>& x) {
    CMat out = a.constant.size() != 0 ? a.constant : CMat::Zero(a.dim, a.dim);
    for (const auto& t : a.terms) {
        const CMat& wv = w[static_cast<std::size_t>(t.var)];
        out += t.scale * (t.left.size() == 0 ? wv : CMat(t.left * wv * t.left.adjoint()));
    }
    for (const auto& [j, c] : a.scalar_terms) out += x[static_cast<std::size_t>(j)] * c;
    return out;
}

inline CVec evaluate(const AffineVector& a, const std::vector<CMat>& w) {
    CVec out = a.constant.size() != 0 ? a.constant : CVec::Zero(a.dim);
    for (const auto& t : a.terms) {
        const CMat& wv = w[static_cast<std::size_t>(t.var)];
        const CVec v = wv * t.right;
        out += t.scale * (t.left.size() == 0 ? v : CVec(t.left * v));
    }
    return out;
}

inline double evaluate(const LinearFunctional& f, const std::vector<CMat>& w, const std::vector<double>& x) {
    double out = f.constant;
    for (const auto& [v, c] : f.matrix_terms) out += (c * w[static_cast<std::size_t>(v)]).trace().real();
    for (const auto& [j, a] : f.scalar_terms) out += a * x[static_cast<std::size_t>(j)];
    return out;
}

/// bound - ||parts|| at fixed variable values.
inline double soc_slack(const SocConstraint& s, const std::vector<CMat>& w, const std::vector<double>& x) {
    double sq = 0.0;
    for (const auto& mp : s.matrix_parts) sq += evaluate(mp, w, x).squaredNorm();
    for (const auto& vp : s.vector_parts) sq += evaluate(vp, w).squaredNorm();
    return evaluate(s.bound, w, x) - std::sqrt(sq);
}

/// Text dump of the compiled standard form as sparse triplets.
inline void write_triplets(std::ostream& os, const CompiledProgram& cp) {
    const StandardForm& f = cp.form;
    os << std::setprecision(17);
    os << "# minimize c'x + offset  s.t.  G x + s = h,  s in K\n";
    os << "n " << f.G.cols() << "\nm " << f.G.rows() << "\noffset " << cp.objective_constant << "\n";
    os << "lp " << f.cone.n_lp << "\nsoc";
    for (Index q : f.cone.soc) os << ' ' << q;
    os << "\npsd";
    for (Index p : f.cone.psd) os << ' ' << p;
    os << '\n';
    for (Index i = 0; i < f.c.size(); ++i)
        if (f.c(i) != 0.0) os << "c " << i << ' ' << f.c(i) << '\n';
    for (Index col = 0; col < f.G.outerSize(); ++col)
        for (SpMat::InnerIterator it(f.G, col); it; ++it) os << "G " << it.row() << ' ' << col << ' ' << it.value() << '\n';
    for (Index i = 0; i < f.h.size(); ++i)
        if (f.h(i) != 0.0) os << "h " << i << ' ' << f.h(i) << '\n';
}

}  // namespace jtbf::conic
