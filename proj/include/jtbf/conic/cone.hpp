#pragma once

// Symmetric cones in vector form: nonnegative orthant, second-order cones and
// PSD cones stored as svec (column-major lower triangle, off-diagonals times sqrt 2).
// Nesterov-Todd scalings and the Jordan-algebra helpers used by the interior-point method.

#include <Eigen/Cholesky>
#include <Eigen/Dense>
#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

namespace jtbf::conic {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;
using Index = Eigen::Index;

inline constexpr double kSqrt2 = 1.4142135623730951;

inline Index svec_size(Index n) { return n * (n + 1) / 2; }

/// Position of (i, j), i >= j, inside svec of an n x n matrix.
inline Index svec_index(Index n, Index i, Index j) { return j * n - j * (j - 1) / 2 + (i - j); }

inline Vec svec(const Mat& m) {
    const Index n = m.rows();
    Vec v(svec_size(n));
    Index p = 0;
    for (Index j = 0; j < n; ++j)
        for (Index i = j; i < n; ++i) v(p++) = (i == j) ? m(i, j) : kSqrt2 * 0.5 * (m(i, j) + m(j, i));
    return v;
}

template <class V>
Mat smat(const V& v, Index n) {
    Mat m(n, n);
    Index p = 0;
    for (Index j = 0; j < n; ++j)
        for (Index i = j; i < n; ++i) {
            const double x = (i == j) ? v(p) : v(p) / kSqrt2;
            m(i, j) = x;
            m(j, i) = x;
            ++p;
        }
    return m;
}

inline Index psd_order_from_svec(Index len) {
    const auto n = static_cast<Index>(std::llround((std::sqrt(8.0 * static_cast<double>(len) + 1.0) - 1.0) / 2.0));
    return n;
}

/// Cone K = R^l_+ x Q^{q_1} x ... x S^{p_1} x ...
struct ConeSpec {
    Index n_lp = 0;
    std::vector<Index> soc;  // dimensions, each >= 1
    std::vector<Index> psd;  // matrix orders

    Index size() const {
        Index n = n_lp;
        for (Index q : soc) n += q;
        for (Index p : psd) n += svec_size(p);
        return n;
    }
    /// Barrier degree.
    Index degree() const {
        Index d = n_lp + static_cast<Index>(soc.size());
        for (Index p : psd) d += p;
        return d;
    }
    std::vector<Index> soc_offsets() const {
        std::vector<Index> off;
        Index o = n_lp;
        for (Index q : soc) {
            off.push_back(o);
            o += q;
        }
        return off;
    }
    std::vector<Index> psd_offsets() const {
        std::vector<Index> off;
        Index o = n_lp;
        for (Index q : soc) o += q;
        for (Index p : psd) {
            off.push_back(o);
            o += svec_size(p);
        }
        return off;
    }
};

/// Identity element of the cone.
inline Vec cone_unit(const ConeSpec& k) {
    Vec e = Vec::Zero(k.size());
    e.head(k.n_lp).setOnes();
    for (Index o : k.soc_offsets()) e(o) = 1.0;
    const auto po = k.psd_offsets();
    for (std::size_t b = 0; b < k.psd.size(); ++b)
        for (Index i = 0; i < k.psd[b]; ++i) e(po[b] + svec_index(k.psd[b], i, i)) = 1.0;
    return e;
}

/// Smallest t with u + t e in the cone (negative when u is interior).
inline double cone_violation(const ConeSpec& k, const Vec& u) {
    double t = -std::numeric_limits<double>::infinity();
    for (Index i = 0; i < k.n_lp; ++i) t = std::max(t, -u(i));
    const auto so = k.soc_offsets();
    for (std::size_t b = 0; b < k.soc.size(); ++b) {
        const auto seg = u.segment(so[b], k.soc[b]);
        t = std::max(t, seg.tail(k.soc[b] - 1).norm() - seg(0));
    }
    const auto po = k.psd_offsets();
    for (std::size_t b = 0; b < k.psd.size(); ++b) {
        const Mat m = smat(u.segment(po[b], svec_size(k.psd[b])), k.psd[b]);
        Eigen::SelfAdjointEigenSolver<Mat> es(m, Eigen::EigenvaluesOnly);
        t = std::max(t, -es.eigenvalues()(0));
    }
    return t;
}

/// Jordan product u o v.
inline Vec jordan_product(const ConeSpec& k, const Vec& u, const Vec& v) {
    Vec r(u.size());
    r.head(k.n_lp) = u.head(k.n_lp).cwiseProduct(v.head(k.n_lp));
    const auto so = k.soc_offsets();
    for (std::size_t b = 0; b < k.soc.size(); ++b) {
        const Index o = so[b], q = k.soc[b];
        r(o) = u.segment(o, q).dot(v.segment(o, q));
        r.segment(o + 1, q - 1) = u(o) * v.segment(o + 1, q - 1) + v(o) * u.segment(o + 1, q - 1);
    }
    const auto po = k.psd_offsets();
    for (std::size_t b = 0; b < k.psd.size(); ++b) {
        const Index n = k.psd[b], o = po[b], len = svec_size(n);
        const Mat a = smat(u.segment(o, len), n);
        const Mat c = smat(v.segment(o, len), n);
        r.segment(o, len) = svec(0.5 * (a * c + c * a));
    }
    return r;
}

/// Nesterov-Todd scaling W at an interior pair (s, z): W z = W^{-T} s = lambda.
/// PSD parts of lambda are diagonal matrices, stored as their eigenvalues.
class NtScaling {
public:
    NtScaling() = default;

    NtScaling(const ConeSpec& k, const Vec& s, const Vec& z) : k_(k) {
        lp_d_ = (s.head(k.n_lp).array() / z.head(k.n_lp).array()).sqrt();
        lp_lambda_ = (s.head(k.n_lp).array() * z.head(k.n_lp).array()).sqrt();
        soc_off_ = k.soc_offsets();
        psd_off_ = k.psd_offsets();
        for (std::size_t b = 0; b < k.soc.size(); ++b) {
            const Index o = soc_off_[b], q = k.soc[b];
            const Vec sb = s.segment(o, q), zb = z.segment(o, q);
            const double sres = std::max(sb(0) * sb(0) - sb.tail(q - 1).squaredNorm(), 1e-300);
            const double zres = std::max(zb(0) * zb(0) - zb.tail(q - 1).squaredNorm(), 1e-300);
            const double sn = std::sqrt(sres), zn = std::sqrt(zres);
            const Vec sbar = sb / sn, zbar = zb / zn;
            const double gamma = std::sqrt(std::max(0.5 * (1.0 + sbar.dot(zbar)), 1e-300));
            Vec w(q);
            w(0) = (sbar(0) + zbar(0)) / (2.0 * gamma);
            w.tail(q - 1) = (sbar.tail(q - 1) - zbar.tail(q - 1)) / (2.0 * gamma);
            Soc sc;
            sc.eta = std::sqrt(sn / zn);
            sc.w = w;
            // lambda = W z
            sc.lambda = apply_soc(sc, zb, false);
            soc_.push_back(std::move(sc));
        }
        for (std::size_t b = 0; b < k.psd.size(); ++b) {
            const Index n = k.psd[b], len = svec_size(n);
            const Mat sm = smat(s.segment(psd_off_[b], len), n);
            const Mat zm = smat(z.segment(psd_off_[b], len), n);
            const Mat ls = Eigen::LLT<Mat>(sm).matrixL();
            const Mat lz = Eigen::LLT<Mat>(zm).matrixL();
            Eigen::JacobiSVD<Mat> svd(lz.transpose() * ls, Eigen::ComputeFullU | Eigen::ComputeFullV);
            const Vec lam = svd.singularValues();
            const Vec isq = lam.cwiseSqrt().cwiseInverse();
            Psd p;
            p.r = ls * svd.matrixV() * isq.asDiagonal();
            p.rinv = isq.asDiagonal() * svd.matrixU().transpose() * lz.transpose();
            p.lambda = lam;
            p.p = p.rinv.transpose() * p.rinv;
            psd_.push_back(std::move(p));
        }
    }

    /// Scaled point lambda as a cone vector.
    Vec lambda() const {
        Vec l = Vec::Zero(k_.size());
        l.head(k_.n_lp) = lp_lambda_;
        for (std::size_t b = 0; b < soc_.size(); ++b) l.segment(soc_off_[b], k_.soc[b]) = soc_[b].lambda;
        for (std::size_t b = 0; b < psd_.size(); ++b) {
            const Index n = k_.psd[b];
            for (Index i = 0; i < n; ++i) l(psd_off_[b] + svec_index(n, i, i)) = psd_[b].lambda(i);
        }
        return l;
    }

    /// W v.
    Vec apply_w(const Vec& v) const { return apply(v, Mode::w); }
    /// W^T v.
    Vec apply_wt(const Vec& v) const { return apply(v, Mode::wt); }
    /// W^{-T} v.
    Vec apply_winv_t(const Vec& v) const { return apply(v, Mode::winv_t); }
    /// (W^T W)^{-1} v.
    Vec apply_vinv(const Vec& v) const { return apply_w_inv(apply_winv_t(v)); }

    /// lambda \ u: the x solving lambda o x = u.
    Vec lambda_divide(const Vec& u) const {
        Vec x(u.size());
        x.head(k_.n_lp) = u.head(k_.n_lp).cwiseQuotient(lp_lambda_);
        for (std::size_t b = 0; b < soc_.size(); ++b) {
            const Index o = soc_off_[b], q = k_.soc[b];
            const Vec& l = soc_[b].lambda;
            const double l0 = l(0);
            const double rho = l0 * l0 - l.tail(q - 1).squaredNorm();
            const double nu = l.tail(q - 1).dot(u.segment(o + 1, q - 1));
            const double x0 = (l0 * u(o) - nu) / rho;
            x(o) = x0;
            x.segment(o + 1, q - 1) = (u.segment(o + 1, q - 1) - x0 * l.tail(q - 1)) / l0;
        }
        for (std::size_t b = 0; b < psd_.size(); ++b) {
            const Index n = k_.psd[b], o = psd_off_[b], len = svec_size(n);
            const Vec& lam = psd_[b].lambda;
            Mat m = smat(u.segment(o, len), n);
            for (Index j = 0; j < n; ++j)
                for (Index i = 0; i < n; ++i) m(i, j) *= 2.0 / (lam(i) + lam(j));
            x.segment(o, len) = svec(m);
        }
        return x;
    }

    /// Largest step a in (0, amax] keeping lambda + a*d inside the cone.
    double max_step(const Vec& d, double amax) const {
        double a = amax;
        for (Index i = 0; i < k_.n_lp; ++i)
            if (d(i) < 0.0) a = std::min(a, -lp_lambda_(i) / d(i));
        for (std::size_t b = 0; b < soc_.size(); ++b) a = std::min(a, soc_step(soc_[b].lambda, d.segment(soc_off_[b], k_.soc[b]), amax));
        for (std::size_t b = 0; b < psd_.size(); ++b) {
            const Index n = k_.psd[b];
            const Vec isq = psd_[b].lambda.cwiseSqrt().cwiseInverse();
            const Mat m = isq.asDiagonal() * smat(d.segment(psd_off_[b], svec_size(n)), n) * isq.asDiagonal();
            Eigen::SelfAdjointEigenSolver<Mat> es(m, Eigen::EigenvaluesOnly);
            const double emin = es.eigenvalues()(0);
            if (emin < 0.0) a = std::min(a, -1.0 / emin);
        }
        return a;
    }

    const ConeSpec& spec() const { return k_; }

    struct Soc {
        double eta = 1.0;
        Vec w;
        Vec lambda;
    };
    struct Psd {
        Mat r, rinv, p;
        Vec lambda;
    };
    const std::vector<Soc>& soc_blocks() const { return soc_; }
    const std::vector<Psd>& psd_blocks() const { return psd_; }
    const Vec& lp_z_over_s_sqrt() const { return lp_d_; }

private:
    enum class Mode { w, wt, winv_t, winv };

    // W = eta * [[w0, w1^T], [w1, I + w1 w1^T / (1 + w0)]], symmetric; W^{-1} = J W J / eta^2.
    static Vec apply_soc(const Soc& sc, const Vec& v, bool inverse) {
        const Index q = v.size();
        const double w0 = sc.w(0);
        const auto w1 = sc.w.tail(q - 1);
        Vec vv = v;
        if (inverse) vv.tail(q - 1) = -vv.tail(q - 1);
        const double t = w1.dot(vv.tail(q - 1));
        Vec r(q);
        r(0) = w0 * vv(0) + t;
        r.tail(q - 1) = vv.tail(q - 1) + (vv(0) + t / (1.0 + w0)) * w1;
        if (inverse) {
            r.tail(q - 1) = -r.tail(q - 1);
            return r / sc.eta;
        }
        return r * sc.eta;
    }

    static double soc_step(const Vec& l, const Vec& d, double amax) {
        // (l0 + a d0)^2 - |l1 + a d1|^2 >= 0
        const Index q = l.size();
        const double qa = d(0) * d(0) - d.tail(q - 1).squaredNorm();
        const double qb = l(0) * d(0) - l.tail(q - 1).dot(d.tail(q - 1));
        const double qc = std::max(l(0) * l(0) - l.tail(q - 1).squaredNorm(), 0.0);
        // Smallest positive root of qa a^2 + 2 qb a + qc.
        double root = std::numeric_limits<double>::infinity();
        const double disc = qb * qb - qa * qc;
        if (qa < 0.0) {
            const double sq = std::sqrt(std::max(disc, 0.0));
            root = (qb + sq) / (-qa);
            if (qb + sq <= 0.0) root = 0.0;
        } else if (disc >= 0.0 && qb < 0.0) {
            const double sq = std::sqrt(disc);
            root = qc / (-qb + sq);
        } else if (qa == 0.0 && qb < 0.0) {
            root = qc / (-2.0 * qb);
        }
        // Linear part must stay nonnegative as well.
        if (d(0) < 0.0) root = std::min(root, -l(0) / d(0));
        return std::min(root, amax);
    }

    Vec apply(const Vec& v, Mode mode) const {
        Vec r(v.size());
        const Index l = k_.n_lp;
        switch (mode) {
            case Mode::w:
            case Mode::wt: r.head(l) = v.head(l).cwiseProduct(lp_d_); break;
            case Mode::winv_t:
            case Mode::winv: r.head(l) = v.head(l).cwiseQuotient(lp_d_); break;
        }
        const bool inv = (mode == Mode::winv_t || mode == Mode::winv);
        for (std::size_t b = 0; b < soc_.size(); ++b)
            r.segment(soc_off_[b], k_.soc[b]) = apply_soc(soc_[b], v.segment(soc_off_[b], k_.soc[b]), inv);
        for (std::size_t b = 0; b < psd_.size(); ++b) {
            const Index n = k_.psd[b], o = psd_off_[b], len = svec_size(n);
            const Mat m = smat(v.segment(o, len), n);
            const Psd& p = psd_[b];
            Mat out;
            switch (mode) {
                case Mode::w: out = p.r.transpose() * m * p.r; break;
                case Mode::wt: out = p.r * m * p.r.transpose(); break;
                case Mode::winv_t: out = p.rinv * m * p.rinv.transpose(); break;
                case Mode::winv: out = p.rinv.transpose() * m * p.rinv; break;
            }
            r.segment(o, len) = svec(out);
        }
        return r;
    }

    Vec apply_w_inv(const Vec& v) const { return apply(v, Mode::winv); }

    ConeSpec k_;
    Vec lp_d_, lp_lambda_;
    std::vector<Index> soc_off_, psd_off_;
    std::vector<Soc> soc_;
    std::vector<Psd> psd_;
};

}  // namespace jtbf::conic
