#pragma once

// Homogeneous self-dual interior-point method for
//     minimize c^T x  subject to  G x + s = h,  s in K
// with Nesterov-Todd scaling and a Mehrotra predictor-corrector. The Newton
// systems are reduced to the dense normal matrix G^T (W^T W)^{-1} G.

#include "jtbf/conic/cone.hpp"

#include <Eigen/SparseCore>

#include <ostream>
#include <string>

namespace jtbf::conic {

using SpMat = Eigen::SparseMatrix<double>;
using SpRowMat = Eigen::SparseMatrix<double, Eigen::RowMajor>;

struct StandardForm {
    Vec c;
    SpMat G;
    Vec h;
    ConeSpec cone;
};

struct IpmOptions {
    double feastol = 1e-8;
    double reltol = 1e-8;
    double abstol = 1e-10;
    int max_iters = 200;
    bool equilibrate = true;
    double step_fraction = 0.99;
    double fallback_tol = 1e-7;  // accepted for the best iterate when progress stalls
    int stall_iters = 5;
    double stall_merit = 1e-5;  // stall detection only once the best iterate is this close
    std::ostream* trace = nullptr;  // per-iteration progress lines when set
};

enum class IpmStatus { optimal, primal_infeasible, dual_infeasible, max_iter, numerical_failure };

inline const char* to_string(IpmStatus s) {
    switch (s) {
        case IpmStatus::optimal: return "optimal";
        case IpmStatus::primal_infeasible: return "infeasible";
        case IpmStatus::dual_infeasible: return "dual_infeasible";
        case IpmStatus::max_iter: return "max_iter";
        case IpmStatus::numerical_failure: return "numerical_failure";
    }
    return "unknown";
}

struct IpmResult {
    IpmStatus status = IpmStatus::numerical_failure;
    Vec x, s, z;
    double primal_objective = 0.0;
    double dual_objective = 0.0;
    // Relative residuals of the unscaled problem at the returned point.
    double primal_residual = 0.0;
    double dual_residual = 0.0;
    double gap = 0.0;
    double relative_gap = 0.0;
    double certificate_residual = 0.0;  // set for infeasibility certificates
    int iterations = 0;
};

namespace detail {

/// Per-block structure of G used to assemble the normal matrix.
class NormalMatrixBuilder {
public:
    NormalMatrixBuilder(const SpMat& g, const ConeSpec& k) : k_(k), n_(g.cols()) {
        const SpRowMat gr = g;
        lp_ = gr.topRows(k.n_lp);
        const auto so = k.soc_offsets();
        for (std::size_t b = 0; b < k.soc.size(); ++b) {
            Soc sb;
            sb.rows = gr.middleRows(so[b], k.soc[b]);
            const SpMat g1 = sb.rows.bottomRows(k.soc[b] - 1);
            sb.g1tg1 = SpMat(g1.transpose() * g1);
            sb.g0 = Vec(sb.rows.row(0).transpose());
            sb.support = support_of(sb.rows);
            soc_.push_back(std::move(sb));
        }
        const auto po = k.psd_offsets();
        for (std::size_t b = 0; b < k.psd.size(); ++b) {
            const Index m = k.psd[b], len = svec_size(m);
            Psd pb;
            pb.order = m;
            // svec position -> (i, j)
            std::vector<std::pair<Index, Index>> pos(static_cast<std::size_t>(len));
            for (Index j = 0; j < m; ++j)
                for (Index i = j; i < m; ++i) pos[static_cast<std::size_t>(svec_index(m, i, j))] = {i, j};
            const SpMat block = SpMat(gr.middleRows(po[b], len));
            for (Index col = 0; col < block.outerSize(); ++col) {
                Column c;
                c.index = col;
                for (SpMat::InnerIterator it(block, col); it; ++it) {
                    if (it.value() == 0.0) continue;
                    const auto [i, j] = pos[static_cast<std::size_t>(it.row())];
                    c.entries.push_back({i, j, it.value() * (i == j ? 0.5 : 1.0 / kSqrt2), it.row(), it.value()});
                }
                if (c.entries.empty()) continue;
                if (static_cast<Index>(c.entries.size()) > 2 * m) pb.heavy.push_back(c);
                else pb.light.push_back(c);
            }
            pb.offset = po[b];
            psd_.push_back(std::move(pb));
        }
    }

    Mat build(const NtScaling& w, const Vec& z_over_s) const {
        Mat h = Mat::Zero(n_, n_);
        // Nonnegative rows.
        for (Index r = 0; r < lp_.outerSize(); ++r) {
            const double d = z_over_s(r);
            for (SpRowMat::InnerIterator a(lp_, r); a; ++a)
                for (SpRowMat::InnerIterator b(lp_, r); b; ++b) h(a.col(), b.col()) += d * a.value() * b.value();
        }
        // Second-order cones: eta^-2 (2 a a^T + G1^T G1 - g0 g0^T), a = G^T J w.
        for (std::size_t b = 0; b < soc_.size(); ++b) {
            const auto& sc = w.soc_blocks()[b];
            const auto& sb = soc_[b];
            const double ie2 = 1.0 / (sc.eta * sc.eta);
            Vec jw = sc.w;
            jw.tail(jw.size() - 1) = -jw.tail(jw.size() - 1);
            const Vec a = sb.rows.transpose() * jw;
            for (Index col = 0; col < sb.g1tg1.outerSize(); ++col)
                for (SpMat::InnerIterator it(sb.g1tg1, col); it; ++it) h(it.row(), col) += ie2 * it.value();
            for (Index p : sb.support)
                for (Index q : sb.support) h(p, q) += ie2 * (2.0 * a(p) * a(q) - sb.g0(p) * sb.g0(q));
        }
        // PSD cones: <G_p, P G_q P>.
        for (std::size_t b = 0; b < psd_.size(); ++b) {
            const auto& pb = psd_[b];
            const Mat& pm = w.psd_blocks()[b].p;
            const std::size_t nl = pb.light.size();
            for (std::size_t a = 0; a < nl; ++a) {
                const Column& ca = pb.light[a];
                for (std::size_t c = a; c < nl; ++c) {
                    const Column& cc = pb.light[c];
                    double acc = 0.0;
                    for (const Entry& ea : ca.entries)
                        for (const Entry& ec : cc.entries)
                            acc += ea.cval * ec.cval * (pm(ea.i, ec.i) * pm(ea.j, ec.j) + pm(ea.i, ec.j) * pm(ea.j, ec.i));
                    acc *= 2.0;
                    h(ca.index, cc.index) += acc;
                    if (c != a) h(cc.index, ca.index) += acc;
                }
            }
            for (const Column& hc : pb.heavy) {
                Mat mq = Mat::Zero(pb.order, pb.order);
                for (const Entry& e : hc.entries) {
                    const double v = (e.i == e.j) ? e.raw : e.raw / kSqrt2;
                    mq(e.i, e.j) += v;
                    if (e.i != e.j) mq(e.j, e.i) += v;
                }
                const Vec y = svec(pm * mq * pm);
                auto dot = [&](const Column& col) {
                    double acc = 0.0;
                    for (const Entry& e : col.entries) acc += e.raw * y(e.svec_row);
                    return acc;
                };
                for (const Column& lc : pb.light) {
                    const double v = dot(lc);
                    h(lc.index, hc.index) += v;
                    h(hc.index, lc.index) += v;
                }
                for (const Column& oc : pb.heavy) h(oc.index, hc.index) += dot(oc);
            }
        }
        return h;
    }

private:
    struct Entry {
        Index i, j;
        double cval;  // matrix entry times 1/2 (diagonal) or 1 (off-diagonal), from svec value
        Index svec_row;
        double raw;  // svec value
    };
    struct Column {
        Index index = 0;
        std::vector<Entry> entries;
    };
    struct Soc {
        SpRowMat rows;
        SpMat g1tg1;
        Vec g0;
        std::vector<Index> support;
    };
    struct Psd {
        Index order = 0, offset = 0;
        std::vector<Column> light, heavy;
    };

    static std::vector<Index> support_of(const SpRowMat& rows) {
        std::vector<char> used(static_cast<std::size_t>(rows.cols()), 0);
        for (Index r = 0; r < rows.outerSize(); ++r)
            for (SpRowMat::InnerIterator it(rows, r); it; ++it) used[static_cast<std::size_t>(it.col())] = 1;
        std::vector<Index> s;
        for (Index c = 0; c < rows.cols(); ++c)
            if (used[static_cast<std::size_t>(c)]) s.push_back(c);
        return s;
    }

    ConeSpec k_;
    Index n_;
    SpRowMat lp_;
    std::vector<Soc> soc_;
    std::vector<Psd> psd_;
};

/// Cholesky of the normal matrix with a diagonal shift fallback and refinement.
class NormalSolver {
public:
    explicit NormalSolver(Mat h) : h_(std::move(h)) {
        const double scale = std::max(h_.diagonal().cwiseAbs().maxCoeff(), 1e-300);
        double shift = 0.0;
        for (int attempt = 0; attempt < 12; ++attempt) {
            Mat hs = h_;
            hs.diagonal().array() += shift;
            llt_.compute(hs);
            if (llt_.info() == Eigen::Success) {
                ok_ = true;
                shifted_ = shift > 0.0;
                return;
            }
            shift = (shift == 0.0) ? 1e-14 * scale : shift * 100.0;
        }
    }
    bool ok() const { return ok_; }
    Vec solve(const Vec& b) const {
        Vec x = llt_.solve(b);
        const int refine = shifted_ ? 5 : 1;
        for (int i = 0; i < refine; ++i) x += llt_.solve(b - h_ * x);
        return x;
    }

private:
    Mat h_;
    Eigen::LLT<Mat> llt_;
    bool ok_ = false;
    bool shifted_ = false;
};

struct Equilibration {
    Vec col;  // x = col .* x_scaled
    Vec row;  // s_scaled = row .* s, z = row .* z_scaled
};

inline Equilibration equilibrate(StandardForm& p, int passes = 8) {
    const ConeSpec& k = p.cone;
    const Index m = p.G.rows(), n = p.G.cols();
    Equilibration eq{Vec::Ones(n), Vec::Ones(m)};
    // Block id per row: LP rows are their own blocks.
    std::vector<Index> block_of(static_cast<std::size_t>(m));
    Index nblocks = 0;
    for (Index r = 0; r < k.n_lp; ++r) block_of[static_cast<std::size_t>(r)] = nblocks++;
    Index o = k.n_lp;
    for (Index q : k.soc) {
        for (Index r = 0; r < q; ++r) block_of[static_cast<std::size_t>(o + r)] = nblocks;
        ++nblocks;
        o += q;
    }
    for (Index d : k.psd) {
        for (Index r = 0; r < svec_size(d); ++r) block_of[static_cast<std::size_t>(o + r)] = nblocks;
        ++nblocks;
        o += svec_size(d);
    }
    for (int pass = 0; pass < passes; ++pass) {
        Vec cmax = Vec::Zero(n), bmax = Vec::Zero(nblocks);
        for (Index c = 0; c < p.G.outerSize(); ++c)
            for (SpMat::InnerIterator it(p.G, c); it; ++it) {
                const double a = std::abs(it.value());
                cmax(c) = std::max(cmax(c), a);
                auto& bm = bmax(block_of[static_cast<std::size_t>(it.row())]);
                bm = std::max(bm, a);
            }
        Vec cs(n), rs(m);
        for (Index c = 0; c < n; ++c) cs(c) = cmax(c) > 0.0 ? 1.0 / std::sqrt(cmax(c)) : 1.0;
        for (Index r = 0; r < m; ++r) {
            const double bm = bmax(block_of[static_cast<std::size_t>(r)]);
            rs(r) = bm > 0.0 ? 1.0 / std::sqrt(bm) : 1.0;
        }
        p.G = rs.asDiagonal() * p.G * cs.asDiagonal();
        eq.col = eq.col.cwiseProduct(cs);
        eq.row = eq.row.cwiseProduct(rs);
    }
    p.c = p.c.cwiseProduct(eq.col);
    p.h = p.h.cwiseProduct(eq.row);
    return eq;
}

}  // namespace detail

/// Solves the standard-form conic program. Deterministic for identical inputs.
inline IpmResult solve_standard(const StandardForm& original, const IpmOptions& opt = {}) {
    StandardForm p = original;
    p.G.makeCompressed();
    const Index n = p.G.cols();
    const Index m = p.G.rows();
    if (m != p.cone.size() || p.h.size() != m || p.c.size() != n) throw std::invalid_argument("inconsistent conic program dimensions");

    detail::Equilibration eq{Vec::Ones(n), Vec::Ones(m)};
    if (opt.equilibrate) eq = detail::equilibrate(p);
    const SpMat gt = p.G.transpose();
    const ConeSpec& k = p.cone;
    const Vec e = cone_unit(k);
    const double nu = static_cast<double>(k.degree());
    const detail::NormalMatrixBuilder builder(p.G, k);

    IpmResult res;
    const double resx0 = std::max(1.0, p.c.norm());
    const double resz0 = std::max(1.0, p.h.norm());

    auto finish = [&](IpmStatus st, const Vec& x, const Vec& s, const Vec& z, double tau) {
        res.status = st;
        const double t = (st == IpmStatus::optimal || st == IpmStatus::max_iter || st == IpmStatus::numerical_failure) ? tau : 1.0;
        res.x = eq.col.cwiseProduct(x) / t;
        res.s = s.cwiseQuotient(eq.row) / t;
        res.z = eq.row.cwiseProduct(z) / t;
        // Residuals on the unscaled data.
        const Vec rz = original.G * res.x + res.s - original.h;
        const Vec rx = original.G.transpose() * res.z + original.c;
        res.primal_objective = original.c.dot(res.x);
        res.dual_objective = -original.h.dot(res.z);
        res.primal_residual = rz.norm() / std::max(1.0, original.h.norm());
        res.dual_residual = rx.norm() / std::max(1.0, original.c.norm());
        res.gap = res.s.dot(res.z);
        res.relative_gap = res.gap / std::max(std::abs(res.primal_objective), 1e-300);
        return res;
    };

    // Initial point from the W = I system.
    Vec x, s, z;
    double tau = 1.0, kappa = 1.0;
    {
        NtScaling ident(k, e, e);
        const detail::NormalSolver ns(builder.build(ident, Vec::Ones(k.n_lp)));
        if (!ns.ok()) return finish(IpmStatus::numerical_failure, Vec::Zero(n), e, e, 1.0);
        x = ns.solve(gt * p.h);
        s = p.h - p.G * x;
        const Vec y = ns.solve(-p.c);
        z = p.G * y;
        const double ts = cone_violation(k, s);
        const double tz = cone_violation(k, z);
        if (ts >= -1e-8 * std::max(s.norm(), 1.0)) s += (1.0 + ts) * e;
        if (tz >= -1e-8 * std::max(z.norm(), 1.0)) z += (1.0 + tz) * e;
    }

    struct Best {
        double merit = std::numeric_limits<double>::infinity();
        Vec x, s, z;
        double tau = 1.0, pres = 0.0, dres = 0.0, relgap = 0.0, gap = 0.0;
    } best;
    int stall = 0;
    // Progress can stall short of the tolerances once the normal matrix loses
    // accuracy; the best iterate is then accepted at the relaxed tolerance.
    auto best_or = [&](IpmStatus st) {
        if (best.merit < std::numeric_limits<double>::infinity() && best.pres <= opt.fallback_tol &&
            best.dres <= opt.fallback_tol && (best.relgap <= opt.fallback_tol || best.gap <= opt.abstol))
            return finish(IpmStatus::optimal, best.x, best.s, best.z, best.tau);
        if (best.merit < std::numeric_limits<double>::infinity()) return finish(st, best.x, best.s, best.z, best.tau);
        return finish(st, x, s, z, tau);
    };

    for (int it = 0; it <= opt.max_iters; ++it) {
        res.iterations = it;
        const Vec rx = gt * z + p.c * tau;
        const Vec rz = s + p.G * x - p.h * tau;
        const double cx = p.c.dot(x), hz = p.h.dot(z);
        const double rt = kappa + cx + hz;
        const double pres = rz.norm() / tau / resz0;
        const double dres = rx.norm() / tau / resx0;
        const double pcost = cx / tau, dcost = -hz / tau;
        const double gap = s.dot(z) / (tau * tau);
        double relgap = std::numeric_limits<double>::infinity();
        if (pcost < 0.0) relgap = gap / -pcost;
        else if (dcost > 0.0) relgap = gap / dcost;

        if (opt.trace)
            *opt.trace << "it " << it << " pcost " << pcost << " dcost " << dcost << " gap " << gap << " pres " << pres
                       << " dres " << dres << " tau " << tau << " kappa " << kappa << '\n';
        if (pres <= opt.feastol && dres <= opt.feastol && (gap <= opt.abstol || relgap <= opt.reltol))
            return finish(IpmStatus::optimal, x, s, z, tau);
        if (hz < 0.0) {
            const double pinf = (gt * z).norm() / resx0 / -hz;
            if (pinf <= opt.feastol) {
                res.certificate_residual = pinf;
                const double sc = -hz;
                return finish(IpmStatus::primal_infeasible, Vec::Zero(n), Vec::Zero(m), z / sc, 1.0);
            }
        }
        if (cx < 0.0) {
            const double dinf = (p.G * x + s).norm() / resz0 / -cx;
            if (dinf <= opt.feastol) {
                res.certificate_residual = dinf;
                return finish(IpmStatus::dual_infeasible, x / -cx, s / -cx, Vec::Zero(m), 1.0);
            }
        }
        const double merit = std::max({pres, dres, std::min(gap / std::max(std::abs(pcost), 1.0), relgap)});
        if (merit < best.merit) {
            best = {merit, x, s, z, tau, pres, dres, relgap, gap};
            stall = 0;
        } else if (best.merit <= opt.stall_merit && ++stall >= opt.stall_iters) {
            break;
        }
        if (it == opt.max_iters) return best_or(IpmStatus::max_iter);

        const NtScaling w(k, s, z);
        const Vec lam = w.lambda();
        const double mu = (s.dot(z) + tau * kappa) / (nu + 1.0);
        const Vec zs = z.head(k.n_lp).cwiseQuotient(s.head(k.n_lp));
        const detail::NormalSolver ns(builder.build(w, zs));
        if (!ns.ok()) return best_or(IpmStatus::numerical_failure);

        // [0 G^T; G -V] [x; z] = [bx; bz]
        auto kkt = [&](const Vec& bx, const Vec& bz, Vec& ox, Vec& oz) {
            ox = ns.solve(bx + gt * w.apply_vinv(bz));
            oz = w.apply_vinv(p.G * ox - bz);
            // Refinement against the unreduced system.
            const double bnorm = std::max(bx.norm() + bz.norm(), 1e-300);
            for (int r = 0; r < 3; ++r) {
                const Vec r1 = bx - gt * oz;
                const Vec r2 = bz - (p.G * ox - w.apply_wt(w.apply_w(oz)));
                if (r1.norm() + r2.norm() <= 1e-15 * bnorm) break;
                const Vec cx1 = ns.solve(r1 + gt * w.apply_vinv(r2));
                ox += cx1;
                oz += w.apply_vinv(p.G * cx1 - r2);
            }
        };
        Vec x1, z1;
        kkt(-p.c, p.h, x1, z1);
        const double denom0 = kappa / tau - p.c.dot(x1) - p.h.dot(z1);

        struct Step {
            Vec dx, dz, ds;
            double dtau = 0.0, dkappa = 0.0;
        };
        auto newton = [&](const Vec& dxr, const Vec& dzr, double dtr, const Vec& dsr, double dkr) {
            Step st;
            const Vec u = w.lambda_divide(dsr);
            Vec x2, z2;
            kkt(dxr, dzr - w.apply_wt(u), x2, z2);
            st.dtau = (dkr / tau - dtr + p.c.dot(x2) + p.h.dot(z2)) / denom0;
            st.dx = x2 + st.dtau * x1;
            st.dz = z2 + st.dtau * z1;
            st.ds = w.apply_wt(u - w.apply_w(st.dz));
            st.dkappa = (dkr - kappa * st.dtau) / tau;
            return st;
        };
        auto step_length = [&](const Step& st) {
            double a = w.max_step(w.apply_winv_t(st.ds), 1e300);
            a = std::min(a, w.max_step(w.apply_w(st.dz), 1e300));
            if (st.dtau < 0.0) a = std::min(a, -tau / st.dtau);
            if (st.dkappa < 0.0) a = std::min(a, -kappa / st.dkappa);
            return a;
        };

        const Vec lam_sq = jordan_product(k, lam, lam);
        const Step aff = newton(-rx, -rz, -rt, -lam_sq, -tau * kappa);
        const double a_aff = std::min(1.0, step_length(aff));
        const double sigma = std::pow(1.0 - a_aff, 3);

        const Vec corr = jordan_product(k, w.apply_winv_t(aff.ds), w.apply_w(aff.dz));
        const Vec dsr = -lam_sq - corr + sigma * mu * e;
        const double dkr = -tau * kappa - aff.dtau * aff.dkappa + sigma * mu;
        const Step st = newton(-(1.0 - sigma) * rx, -(1.0 - sigma) * rz, -(1.0 - sigma) * rt, dsr, dkr);
        const double amax = step_length(st);
        const double alpha = std::min(1.0, opt.step_fraction * amax);
        if (!(alpha > 1e-14) || !st.dx.allFinite()) return best_or(IpmStatus::numerical_failure);

        x += alpha * st.dx;
        s += alpha * st.ds;
        z += alpha * st.dz;
        tau += alpha * st.dtau;
        kappa += alpha * st.dkappa;
    }
    return best_or(IpmStatus::numerical_failure);
}

}  // namespace jtbf::conic
