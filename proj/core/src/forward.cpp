#include "bdsde/forward.hpp"
#include "bdsde/parallel.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdio>
#include <stdexcept>

namespace bdsde {

namespace {

constexpr int kResync = 16;
constexpr double kDetTiny = 1e-150;
constexpr double kCondMax = 1e12;

std::int64_t g_budget = 120'000'000;

[[noreturn]] void fail_node_path(const char* what, int node, int m) {
    char buf[160];
    std::snprintf(buf, sizeof(buf), "%s at node %d, path %d", what, node, m);
    throw std::runtime_error(buf);
}

void mat_mul(int d, const double* a, const double* b, double* out) {
    if (d == 1) {
        out[0] = a[0] * b[0];
        return;
    }
    for (int r = 0; r < d; ++r)
        for (int c = 0; c < d; ++c) {
            double s = 0.0;
            for (int q = 0; q < d; ++q) s += a[r * d + q] * b[q * d + c];
            out[r * d + c] = s;
        }
}

double mat_det(int d, const double* a) {
    if (d == 1) return a[0];
    if (d == 2) return a[0] * a[3] - a[1] * a[2];
    Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>> A(a, d, d);
    return A.determinant();
}

bool mat_inv(int d, const double* a, double* out) {
    if (d == 1) {
        if (!(std::fabs(a[0]) > kDetTiny)) return false;
        out[0] = 1.0 / a[0];
        return true;
    }
    if (d == 2) {
        const double det = a[0] * a[3] - a[1] * a[2];
        if (!(std::fabs(det) > kDetTiny)) return false;
        const double r = 1.0 / det;
        out[0] = a[3] * r;
        out[1] = -a[1] * r;
        out[2] = -a[2] * r;
        out[3] = a[0] * r;
        return true;
    }
    using Mat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
    Eigen::Map<const Mat> A(a, d, d);
    Eigen::FullPivLU<Mat> lu(A);
    if (!lu.isInvertible()) return false;
    Eigen::Map<Mat>(out, d, d) = lu.inverse();
    return true;
}

double frob(int d, const double* a) {
    double s = 0.0;
    for (int q = 0; q < d * d; ++q) s += a[q] * a[q];
    return std::sqrt(s);
}

bool all_finite(int n, const double* a) {
    for (int q = 0; q < n; ++q)
        if (!std::isfinite(a[q])) return false;
    return true;
}

} // namespace

void set_forward_storage_budget(std::int64_t doubles) {
    if (doubles < 1) throw std::invalid_argument("forward storage budget must be positive");
    g_budget = doubles;
}

std::int64_t forward_storage_budget() { return g_budget; }

int ForwardSolution::segment_of(int i) const { return std::min(i / stride_, n_segments_ - 1); }

void ForwardSolution::step_column(int i, const double* x_cur, double* x_next,
                                  const double* g_cur, double* g_next,
                                  const double* gi_cur, double* gi_next,
                                  std::uint8_t* flags) const {
    const int d = d_;
    const int dd = d * d;
    const double dt = bundle_.grid.dt();
    const int N = bundle_.grid.n_steps;
    const bool flow = g_cur != nullptr;
    const bool resync = flow && (((i + 1) % kResync == 0) || i + 1 == N);

    parallel_for(bundle_.M, [&](int begin, int end) {
        std::vector<double> bx(d), sx(dd), dwv(d);
        std::vector<double> bdx, sdx, A, Ainv;
        if (flow) {
            bdx.resize(dd);
            sdx.resize(static_cast<std::size_t>(dd) * d);
            A.resize(dd);
            Ainv.resize(dd);
        }
        for (int m = begin; m < end; ++m) {
            const double* xm = x_cur + static_cast<std::size_t>(m) * d;
            coeffs_.b(xm, bx.data());
            coeffs_.sigma(xm, sx.data());
            for (int j = 0; j < d; ++j) dwv[j] = bundle_.dw(m, i, j);
            double* xn = x_next + static_cast<std::size_t>(m) * d;
            for (int a = 0; a < d; ++a) {
                double v = xm[a] + bx[a] * dt;
                for (int j = 0; j < d; ++j) v += sx[a * d + j] * dwv[j];
                if (!std::isfinite(v)) fail_node_path("euler_forward: non-finite state", i + 1, m);
                xn[a] = v;
            }
            if (!flow) continue;

            coeffs_.b_dx(xm, bdx.data());
            coeffs_.sigma_dx(xm, sdx.data());
            for (int a = 0; a < d; ++a)
                for (int q = 0; q < d; ++q) {
                    double v = (a == q ? 1.0 : 0.0) + bdx[a * d + q] * dt;
                    for (int j = 0; j < d; ++j) v += sdx[(a * d + j) * d + q] * dwv[j];
                    A[a * d + q] = v;
                }
            const double* gm = g_cur + static_cast<std::size_t>(m) * dd;
            double* gn = g_next + static_cast<std::size_t>(m) * dd;
            mat_mul(d, A.data(), gm, gn);

            double* gin = gi_next + static_cast<std::size_t>(m) * dd;
            bool ok = all_finite(dd, gn);
            if (resync) {
                ok = ok && mat_inv(d, gn, gin);
                if (ok) ok = frob(d, gn) * frob(d, gin) <= kCondMax;
            } else {
                if (mat_inv(d, A.data(), Ainv.data())) {
                    mat_mul(d, gi_cur + static_cast<std::size_t>(m) * dd, Ainv.data(), gin);
                } else {
                    ok = false;
                }
            }
            if (!ok) {
                if (flags) flags[m] = 0;
                // keep a usable value so later columns stay finite
                for (int q = 0; q < dd; ++q) gin[q] = (q % (d + 1) == 0) ? 1.0 : 0.0;
            }
        }
    });
}

void ForwardSolution::build(bool with_flow) {
    const int N = bundle_.grid.n_steps;
    const int M = bundle_.M;
    const int d = d_;
    const std::size_t colx = static_cast<std::size_t>(M) * d;
    const std::size_t colg = colx * d;
    const std::int64_t per_node = static_cast<std::int64_t>(colx + 2 * colg);

    full_ = static_cast<std::int64_t>(N + 1) * per_node <= g_budget;
    if (full_) {
        stride_ = N;
        n_segments_ = 1;
    } else {
        const int root = static_cast<int>(std::lround(std::sqrt(static_cast<double>(N))));
        stride_ = ((std::max(root, kResync) + kResync - 1) / kResync) * kResync;
        n_segments_ = (N + stride_ - 1) / stride_;
    }
    const std::size_t seg_cols = static_cast<std::size_t>(full_ ? N + 1 : stride_ + 1);
    const std::size_t cp_cols = static_cast<std::size_t>(n_segments_) + 1;

    cp_x_.assign(cp_cols * colx, 0.0);
    seg_x_.assign(seg_cols * colx, 0.0);
    has_flow_ = with_flow;
    if (with_flow) {
        cp_g_.assign(cp_cols * colg, 0.0);
        cp_gi_.assign(cp_cols * colg, 0.0);
        seg_g_.assign(seg_cols * colg, 0.0);
        seg_gi_.assign(seg_cols * colg, 0.0);
        ok_.assign(M, 1);
    }

    std::vector<double> xa, xb, ga, gb, gia, gib;
    double *x_cur, *x_nxt, *g_cur = nullptr, *g_nxt = nullptr, *gi_cur = nullptr, *gi_nxt = nullptr;
    if (!full_) {
        xa.resize(colx);
        xb.resize(colx);
        if (with_flow) {
            ga.resize(colg);
            gb.resize(colg);
            gia.resize(colg);
            gib.resize(colg);
        }
    }

    // node 0
    x_cur = full_ ? seg_x_.data() : xa.data();
    x_nxt = full_ ? seg_x_.data() + colx : xb.data();
    std::copy(x0_.begin(), x0_.end(), x_cur);
    std::copy(x0_.begin(), x0_.end(), cp_x_.begin());
    if (with_flow) {
        g_cur = full_ ? seg_g_.data() : ga.data();
        g_nxt = full_ ? seg_g_.data() + colg : gb.data();
        gi_cur = full_ ? seg_gi_.data() : gia.data();
        gi_nxt = full_ ? seg_gi_.data() + colg : gib.data();
        for (int m = 0; m < M; ++m)
            for (int a = 0; a < d; ++a)
                for (int q = 0; q < d; ++q) {
                    const double v = a == q ? 1.0 : 0.0;
                    g_cur[static_cast<std::size_t>(m) * d * d + a * d + q] = v;
                    gi_cur[static_cast<std::size_t>(m) * d * d + a * d + q] = v;
                }
        std::copy(g_cur, g_cur + colg, cp_g_.begin());
        std::copy(gi_cur, gi_cur + colg, cp_gi_.begin());
    }

    for (int i = 0; i < N; ++i) {
        step_column(i, x_cur, x_nxt, g_cur, g_nxt, gi_cur, gi_nxt, with_flow ? ok_.data() : nullptr);
        const int node = i + 1;
        int slot = -1;
        if (node % stride_ == 0) slot = node / stride_;
        if (node == N) slot = n_segments_;
        if (slot >= 0) {
            std::copy(x_nxt, x_nxt + colx, cp_x_.begin() + slot * colx);
            if (with_flow) {
                std::copy(g_nxt, g_nxt + colg, cp_g_.begin() + slot * colg);
                std::copy(gi_nxt, gi_nxt + colg, cp_gi_.begin() + slot * colg);
            }
        }
        if (full_) {
            x_cur = x_nxt;
            x_nxt = seg_x_.data() + static_cast<std::size_t>(node + 1) * colx;
            if (with_flow) {
                g_cur = g_nxt;
                g_nxt = seg_g_.data() + static_cast<std::size_t>(node + 1) * colg;
                gi_cur = gi_nxt;
                gi_nxt = seg_gi_.data() + static_cast<std::size_t>(node + 1) * colg;
            }
        } else {
            std::swap(x_cur, x_nxt);
            if (with_flow) {
                std::swap(g_cur, g_nxt);
                std::swap(gi_cur, gi_nxt);
            }
        }
    }
    seg_ = full_ ? 0 : -1;
}

void ForwardSolution::ensure_segment(int seg) const {
    const std::size_t colx = static_cast<std::size_t>(bundle_.M) * d_;
    const std::size_t colg = colx * d_;
    const int lo = seg * stride_;
    const int hi = std::min(lo + stride_, bundle_.grid.n_steps);

    std::copy(cp_x_.begin() + seg * colx, cp_x_.begin() + (seg + 1) * colx, seg_x_.begin());
    if (has_flow_) {
        std::copy(cp_g_.begin() + seg * colg, cp_g_.begin() + (seg + 1) * colg, seg_g_.begin());
        std::copy(cp_gi_.begin() + seg * colg, cp_gi_.begin() + (seg + 1) * colg, seg_gi_.begin());
    }
    for (int i = lo; i < hi; ++i) {
        const std::size_t s = static_cast<std::size_t>(i - lo);
        step_column(i, seg_x_.data() + s * colx, seg_x_.data() + (s + 1) * colx,
                    has_flow_ ? seg_g_.data() + s * colg : nullptr,
                    has_flow_ ? seg_g_.data() + (s + 1) * colg : nullptr,
                    has_flow_ ? seg_gi_.data() + s * colg : nullptr,
                    has_flow_ ? seg_gi_.data() + (s + 1) * colg : nullptr,
                    nullptr);
    }
    seg_ = seg;
}

const double* ForwardSolution::x_col(int i) const {
    const int N = bundle_.grid.n_steps;
    if (i < 0 || i > N) throw std::out_of_range("x_col: node out of range");
    const std::size_t colx = static_cast<std::size_t>(bundle_.M) * d_;
    if (full_) return seg_x_.data() + static_cast<std::size_t>(i) * colx;
    if (i == N) return cp_x_.data() + static_cast<std::size_t>(n_segments_) * colx;
    const int lo = seg_ * stride_;
    if (seg_ < 0 || i < lo || i > std::min(lo + stride_, N)) ensure_segment(segment_of(i));
    return seg_x_.data() + static_cast<std::size_t>(i - seg_ * stride_) * colx;
}

const double* ForwardSolution::gradx_col(int i) const {
    if (!has_flow_) throw std::logic_error("gradx_col: tangent_flow has not run");
    const int N = bundle_.grid.n_steps;
    if (i < 0 || i > N) throw std::out_of_range("gradx_col: node out of range");
    const std::size_t colg = static_cast<std::size_t>(bundle_.M) * d_ * d_;
    if (full_) return seg_g_.data() + static_cast<std::size_t>(i) * colg;
    if (i == N) return cp_g_.data() + static_cast<std::size_t>(n_segments_) * colg;
    const int lo = seg_ * stride_;
    if (seg_ < 0 || i < lo || i > std::min(lo + stride_, N)) ensure_segment(segment_of(i));
    return seg_g_.data() + static_cast<std::size_t>(i - seg_ * stride_) * colg;
}

const double* ForwardSolution::gradx_inv_col(int i) const {
    if (!has_flow_) throw std::logic_error("gradx_inv_col: tangent_flow has not run");
    const int N = bundle_.grid.n_steps;
    if (i < 0 || i > N) throw std::out_of_range("gradx_inv_col: node out of range");
    const std::size_t colg = static_cast<std::size_t>(bundle_.M) * d_ * d_;
    if (full_) return seg_gi_.data() + static_cast<std::size_t>(i) * colg;
    if (i == N) return cp_gi_.data() + static_cast<std::size_t>(n_segments_) * colg;
    const int lo = seg_ * stride_;
    if (seg_ < 0 || i < lo || i > std::min(lo + stride_, N)) ensure_segment(segment_of(i));
    return seg_gi_.data() + static_cast<std::size_t>(i - seg_ * stride_) * colg;
}

void ForwardSolution::x_pair(int i, const double** left, const double** right) const {
    const int N = bundle_.grid.n_steps;
    if (i < 0 || i >= N) throw std::out_of_range("x_pair: node out of range");
    const std::size_t colx = static_cast<std::size_t>(bundle_.M) * d_;
    if (full_) {
        *left = seg_x_.data() + static_cast<std::size_t>(i) * colx;
        *right = *left + colx;
        return;
    }
    const int seg = segment_of(i);
    if (seg_ != seg) ensure_segment(seg);
    *left = seg_x_.data() + static_cast<std::size_t>(i - seg * stride_) * colx;
    *right = *left + colx;
}

void ForwardSolution::gradx_pair(int i, const double** left, const double** right) const {
    if (!has_flow_) throw std::logic_error("gradx_pair: tangent_flow has not run");
    const int N = bundle_.grid.n_steps;
    if (i < 0 || i >= N) throw std::out_of_range("gradx_pair: node out of range");
    const std::size_t colg = static_cast<std::size_t>(bundle_.M) * d_ * d_;
    if (full_) {
        *left = seg_g_.data() + static_cast<std::size_t>(i) * colg;
        *right = *left + colg;
        return;
    }
    const int seg = segment_of(i);
    if (seg_ != seg) ensure_segment(seg);
    *left = seg_g_.data() + static_cast<std::size_t>(i - seg * stride_) * colg;
    *right = *left + colg;
}

void ForwardSolution::gradx_inv_pair(int i, const double** left, const double** right) const {
    if (!has_flow_) throw std::logic_error("gradx_inv_pair: tangent_flow has not run");
    const int N = bundle_.grid.n_steps;
    if (i < 0 || i >= N) throw std::out_of_range("gradx_inv_pair: node out of range");
    const std::size_t colg = static_cast<std::size_t>(bundle_.M) * d_ * d_;
    if (full_) {
        *left = seg_gi_.data() + static_cast<std::size_t>(i) * colg;
        *right = *left + colg;
        return;
    }
    const int seg = segment_of(i);
    if (seg_ != seg) ensure_segment(seg);
    *left = seg_gi_.data() + static_cast<std::size_t>(i - seg * stride_) * colg;
    *right = *left + colg;
}

ForwardSolution euler_forward(const CoefficientSet& coeffs, const std::vector<double>& x0,
                              const BrownianBundle& bundle) {
    coeffs.validate(false);
    if (bundle.d != coeffs.d) throw std::invalid_argument("euler_forward: bundle dimension differs from coefficients");
    if (bundle.M < 1) throw std::invalid_argument("euler_forward: bundle has no paths");
    const std::size_t want = static_cast<std::size_t>(bundle.M) * coeffs.d;
    ForwardSolution f;
    f.coeffs_ = coeffs;
    f.bundle_ = bundle;
    f.d_ = coeffs.d;
    if (x0.size() == static_cast<std::size_t>(coeffs.d)) {
        f.x0_.resize(want);
        for (int m = 0; m < bundle.M; ++m)
            std::copy(x0.begin(), x0.end(), f.x0_.begin() + static_cast<std::size_t>(m) * coeffs.d);
    } else if (x0.size() == want) {
        f.x0_ = x0;
    } else {
        throw std::invalid_argument("euler_forward: x0 must have size d or M*d");
    }
    f.build(false);
    return f;
}

void tangent_flow(const CoefficientSet& coeffs, ForwardSolution& fwd, const BrownianBundle& bundle) {
    coeffs.validate(true);
    if (!(bundle.grid == fwd.bundle_.grid) || bundle.M != fwd.bundle_.M || bundle.d != fwd.bundle_.d ||
        bundle.seed_w != fwd.bundle_.seed_w || bundle.sub_steps_w != fwd.bundle_.sub_steps_w ||
        bundle.gen_offset_w != fwd.bundle_.gen_offset_w || bundle.from_file != fwd.bundle_.from_file)
        throw std::invalid_argument("tangent_flow: bundle does not match the forward solution");
    fwd.coeffs_ = coeffs;
    fwd.build(true);
}

MalliavinDX malliavin_DX(const ForwardSolution& fwd, int theta_index, const CoefficientSet& coeffs) {
    if (!fwd.has_flow()) throw std::logic_error("malliavin_DX: tangent_flow has not run");
    const int N = fwd.grid().n_steps;
    if (theta_index < 0 || theta_index > N) throw std::out_of_range("malliavin_DX: theta node out of range");
    const int M = fwd.n_paths();
    const int d = fwd.dim();
    const int dd = d * d;

    MalliavinDX D;
    D.theta = theta_index;
    D.M = M;
    D.d = d;
    D.r_theta.resize(static_cast<std::size_t>(M) * dd);

    const double* xc = fwd.x_col(theta_index);
    const double* gc = fwd.gradx_col(theta_index);
    const double* gic = fwd.gradx_inv_col(theta_index);
    parallel_for(M, [&](int begin, int end) {
        std::vector<double> sx(dd);
        for (int m = begin; m < end; ++m) {
            const double* g = gc + static_cast<std::size_t>(m) * dd;
            const double det = mat_det(d, g);
            if (!std::isfinite(det) || std::fabs(det) <= kDetTiny || !fwd.path_ok()[m])
                fail_node_path("malliavin_DX: singular flow gradient", theta_index, m);
            coeffs.sigma(xc + static_cast<std::size_t>(m) * d, sx.data());
            mat_mul(d, gic + static_cast<std::size_t>(m) * dd, sx.data(),
                    D.r_theta.data() + static_cast<std::size_t>(m) * dd);
        }
    });
    return D;
}

void MalliavinDX::column(const ForwardSolution& fwd, int s, double* out) const {
    const int dd = d * d;
    const std::size_t n = static_cast<std::size_t>(M) * dd;
    if (s < theta) {
        std::fill(out, out + n, 0.0);
        return;
    }
    const double* gc = fwd.gradx_col(s);
    parallel_for(M, [&](int begin, int end) {
        for (int m = begin; m < end; ++m)
            mat_mul(d, gc + static_cast<std::size_t>(m) * dd, r_theta.data() + static_cast<std::size_t>(m) * dd,
                    out + static_cast<std::size_t>(m) * dd);
    });
}

} // namespace bdsde
