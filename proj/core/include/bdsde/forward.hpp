#pragma once

#include "bdsde/brownian.hpp"
#include "bdsde/coefficients.hpp"
#include "bdsde/time_grid.hpp"

#include <cstdint>
#include <vector>

namespace bdsde {

// Per-path Euler trajectories X and, after tangent_flow, the flow gradX with
// its inverse. Columns are exposed one time-node at a time. Small runs keep
// every column in memory; past a storage budget the solution keeps only
// checkpoint columns (stride a multiple of the K=16 inverse resync) and
// recomputes the enclosing segment on access. Recomputation replays the
// identical arithmetic from checkpointed state, so values are bit-equal in
// both modes and under any thread count.
class ForwardSolution {
public:
    ForwardSolution() = default;

    const TimeGrid& grid() const { return bundle_.grid; }
    int n_paths() const { return bundle_.M; }
    int dim() const { return d_; }
    bool has_flow() const { return has_flow_; }
    int checkpoint_stride() const { return full_ ? 1 : stride_; } // 1 when every node is stored
    const std::vector<double>& x0() const { return x0_; }
    void sigma_at(const double* x, double* out) const { coeffs_.sigma(x, out); } // d×d

    // pointers remain valid until a column from another segment is requested
    const double* x_col(int i) const;          // M×d
    const double* gradx_col(int i) const;      // M×d×d
    const double* gradx_inv_col(int i) const;  // M×d×d

    // nodes i and i+1 served from one segment, so both stay valid together
    void x_pair(int i, const double** left, const double** right) const;
    void gradx_pair(int i, const double** left, const double** right) const;
    void gradx_inv_pair(int i, const double** left, const double** right) const;

    double x(int m, int i, int a) const { return x_col(i)[static_cast<std::size_t>(m) * d_ + a]; }

    // cleared when the tangent flow hit a near-singular gradX on that path
    const std::vector<std::uint8_t>& path_ok() const { return ok_; }

private:
    friend ForwardSolution euler_forward(const CoefficientSet&, const std::vector<double>&, const BrownianBundle&);
    friend void tangent_flow(const CoefficientSet&, ForwardSolution&, const BrownianBundle&);

    void build(bool with_flow);
    void step_column(int i, const double* x_cur, double* x_next,
                     const double* g_cur, double* g_next,
                     const double* gi_cur, double* gi_next,
                     std::uint8_t* flags) const;
    void ensure_segment(int seg) const;
    int segment_of(int i) const;

    CoefficientSet coeffs_;
    BrownianBundle bundle_;
    std::vector<double> x0_; // M×d
    int d_ = 1;
    bool has_flow_ = false;
    bool full_ = false;
    int stride_ = 1;
    int n_segments_ = 1;
    std::vector<double> cp_x_, cp_g_, cp_gi_; // per segment start + terminal node
    mutable int seg_ = -1;
    mutable std::vector<double> seg_x_, seg_g_, seg_gi_;
    std::vector<std::uint8_t> ok_;
};

// x0 holds either one start point (size d, broadcast to all paths) or one
// start per path (size M×d); the spread form serves field-mode solves
ForwardSolution euler_forward(const CoefficientSet& coeffs, const std::vector<double>& x0,
                              const BrownianBundle& bundle);

// fills gradX / gradX_inv; inverse propagated incrementally and resynced by
// direct inversion every 16 steps
void tangent_flow(const CoefficientSet& coeffs, ForwardSolution& fwd, const BrownianBundle& bundle);

// D_theta X_s = gradX_s (gradX_theta)^{-1} sigma(X_theta), zero for s < theta
struct MalliavinDX {
    int theta = 0;
    int M = 0, d = 1;
    std::vector<double> r_theta; // M×d×d

    void column(const ForwardSolution& fwd, int s, double* out) const; // out M×d×d
};

MalliavinDX malliavin_DX(const ForwardSolution& fwd, int theta_index, const CoefficientSet& coeffs);

// storage budget, in doubles, above which euler_forward switches to
// checkpointed columns (exposed so tests can force both modes)
void set_forward_storage_budget(std::int64_t doubles);
std::int64_t forward_storage_budget();

} // namespace bdsde
