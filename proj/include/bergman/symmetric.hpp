#pragma once
// Symmetric products: dimension counts, sections vanishing on a divisor,
// and the Fubini-Study pullback along divisor -> vanishing subspace.

#include "bergman/cusp_forms.hpp"
#include "bergman/hyperbolic.hpp"

#include <Eigen/Dense>

#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace bergman {

struct Dimensions {
    long n_k;
    long r_k;
};

/// n_k = (2k-1)(g-1) + k - 1 and r_k = n_k - d. Throws HypothesisViolated
/// unless g >= 2, k >= 2, d >= 1 and (k-1)(2g-1) > d.
Dimensions dimensions(long g, long k, long d);

struct DivisorPoint {
    UhpPoint z;
    int multiplicity = 1;
};

struct Divisor {
    std::vector<DivisorPoint> points;
    int degree() const;
    static Divisor from_points(const std::vector<UhpPoint>& pts);
};

struct SubspaceFrame {
    int ambient_dim = 0;
    /// n x r, orthonormal columns, coordinates in the orthonormal basis.
    Eigen::MatrixXcd coefficients;
    int evaluation_rank = 0;
    bool degenerate = false;  ///< rank below the degree of the divisor

    int dim() const { return static_cast<int>(coefficients.cols()); }
    Eigen::MatrixXcd projector() const { return coefficients * coefficients.adjoint(); }
};

/// Rows of the evaluation matrix are (d/dz)^j f_i(z_p) for j below the
/// multiplicity of z_p; rows are normalized and the null space is taken
/// from the SVD with relative rank tolerance 1e-10.
Eigen::MatrixXcd evaluation_matrix(const CuspFormBasis& onb, const Divisor& D);
SubspaceFrame vanishing_subspace(const CuspFormBasis& onb, const Divisor& D);
SubspaceFrame full_frame(const CuspFormBasis& onb);

/// y^{2k} sum over frame columns of |combined form(z)|^2.
double subspace_kernel_diagonal(const SubspaceFrame& frame, const CuspFormBasis& onb, const UhpPoint& z);
double log_subspace_kernel_diagonal(const SubspaceFrame& frame, const CuspFormBasis& onb, const UhpPoint& z);

struct MaRow {
    int k;
    double full;        ///< ||B^k(z)||
    double subspace;    ///< ||B^{k,-D}(z)||
    double scaled_difference;  ///< (subspace - full) / k
};
struct MaTable {
    std::vector<MaRow> rows;
    double fitted_exponent = 0.0;  ///< slope of log|scaled_difference| against log k
    bool bounded = false;
};

/// `basis_for_k` returns an orthonormal basis of weight 2k. Throws
/// InsufficientData for fewer than three k values.
MaTable ma_asymptotic_check(const std::function<CuspFormBasis(int)>& basis_for_k, const Divisor& D,
                            const UhpPoint& z, const std::vector<int>& k_list);

struct FSVolumeSample {
    std::vector<UhpPoint> z;
    int k = 0;
    std::string route;
    /// d x d Hermitian form against the product hyperbolic metric:
    /// M_ab = -(y_a y_b / pi) d_a dbar_b Phi.
    Eigen::MatrixXcd form;
    double fs_volume_ratio = 0.0;  ///< det M
    std::vector<double> per_factor_ratios;  ///< M_aa
    double cross_term_max = 0.0;  ///< max |M_ab|, a != b
};

/// Phi = sum_j log ||B^{k,-D_j}(z_j)|| with D_j = z_1 + ... + z_{j-1}; each
/// slot term is differentiated by finite differences of the whole pipeline
/// (step 1e-3 y, one Richardson step). Throws NearDiagonal when two points
/// are closer than 1e-3.
FSVolumeSample fs_form_formula(const CuspFormBasis& onb, const std::vector<UhpPoint>& z);

/// Slot j carries its own basis and depends on z_j alone.
struct SeparableModel {
    std::vector<CuspFormBasis> slots;
};
FSVolumeSample fs_form_formula(const SeparableModel& model, const std::vector<UhpPoint>& z);

/// M_ab = (k/2pi) delta_ab - (y_a y_b / pi) tr(d_a P dbar_b P), P the
/// projector onto the sections vanishing at z_1..z_d, derivatives of P by
/// finite differences. Throws FrameJumpDetected if the subspace dimension
/// changes across the stencil.
FSVolumeSample fs_form_direct_oracle(const CuspFormBasis& onb, const std::vector<UhpPoint>& z);

struct VolumeRow {
    int k = 0;
    std::vector<UhpPoint> z;
    std::optional<FSVolumeSample> sample;
    double ratio_over_k2d = 0.0;
    std::string error;
    bool skipped = false;  ///< near-diagonal tuple
};
struct VolumeSummary {
    int k = 0;
    int d = 0;
    double sup_ratio_over_k2d = 0.0;
    std::vector<UhpPoint> argmax;
    std::size_t failures = 0;
    std::size_t skipped = 0;
    double limit = 0.0;  ///< (26/pi)^d
    bool within_limit = false;
};
struct VolumeTable {
    std::vector<VolumeRow> rows;
    std::vector<VolumeSummary> summaries;
};

using VolumeEvaluator = std::function<FSVolumeSample(int k, const std::vector<UhpPoint>& z)>;

/// Cartesian tuples of d points drawn from `points`.
std::vector<std::vector<UhpPoint>> product_tuples(const std::vector<UhpPoint>& points, int d);

VolumeTable volume_ratio_scan(const VolumeEvaluator& eval, const std::vector<std::vector<UhpPoint>>& tuples,
                              const std::vector<int>& k_list, int threads = 1);

/// Random q-series treated as an orthonormal family (coordinates are taken
/// to be orthonormal); n forms of weight 2k with M coefficients.
CuspFormBasis random_synthetic_basis(int n, int k, int M, unsigned seed);

}  // namespace bergman
