#pragma once
// The Bergman metric relative to the hyperbolic metric: kernel derivatives,
// the ratio decomposition, explicit bounds, the cusp expansion and scans.

#include "bergman/cusp_forms.hpp"
#include "bergman/fuchsian.hpp"
#include "bergman/hyperbolic.hpp"

#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace bergman {

enum class DerivativeMethod { SeriesTermwise, FiniteDifference };
const char* to_string(DerivativeMethod m);

/// Derivatives of the weight-zero kernel B(z) = ||B_k(z)|| / y^{2k}, stored
/// logarithmically so that large k and large y stay representable.
struct DerivativeBundle {
    int k = 0;
    UhpPoint z{0.0, 1.0};
    double log_norm = 0.0;  ///< log ||B_k(z)||
    cplx d_log;             ///< (dB/dz) / B
    cplx d_log_bar;         ///< (dB/dzbar) / B
    cplx mixed_over_b;      ///< (d^2 B / dz dzbar) / B
    DerivativeMethod method = DerivativeMethod::SeriesTermwise;
    std::optional<double> step;
    /// Finite-difference value before Richardson extrapolation.
    std::optional<cplx> mixed_over_b_raw;

    double kernel_norm() const;
    double B() const;
    cplx dBdz() const { return B() * d_log; }
    cplx dBdzbar() const { return B() * d_log_bar; }
    cplx d2B() const { return B() * mixed_over_b; }
};

/// A kernel evaluator frozen around one point. For the Poincare route the
/// orbit element set is fixed at localization so every stencil point sums
/// the same terms.
class LocalKernel {
public:
    virtual ~LocalKernel() = default;
    virtual double log_norm(const UhpPoint& z) const = 0;
    virtual DerivativeBundle termwise(const UhpPoint& z) const = 0;
};

class KernelSource {
public:
    virtual ~KernelSource() = default;
    virtual int k() const = 0;
    virtual std::string route() const = 0;
    virtual std::unique_ptr<LocalKernel> localize(const UhpPoint& center) const = 0;
};

class PoincareKernelSource final : public KernelSource {
public:
    /// Throws BudgetExceeded at localization when the enumeration is not
    /// exhaustive and `require_exhaustive` is set.
    PoincareKernelSource(FuchsianGroup group, int k, double displacement_bound, std::size_t budget,
                         bool require_exhaustive = true);
    int k() const override { return k_; }
    std::string route() const override { return "poincare"; }
    std::unique_ptr<LocalKernel> localize(const UhpPoint& center) const override;

private:
    FuchsianGroup group_;
    int k_;
    double bound_;
    std::size_t budget_;
    bool require_exhaustive_;
};

class BasisKernelSource final : public KernelSource {
public:
    /// The basis must be orthonormal.
    explicit BasisKernelSource(CuspFormBasis onb);
    int k() const override { return basis_.k(); }
    std::string route() const override { return "basis"; }
    std::unique_ptr<LocalKernel> localize(const UhpPoint& center) const override;
    const CuspFormBasis& basis() const { return basis_; }

private:
    CuspFormBasis basis_;
};

/// Finite differences use central stencils with h = max(1e-5, 1e-4 y) and
/// one Richardson step (h, h/2).
DerivativeBundle kernel_derivatives(const KernelSource& source, const UhpPoint& z, DerivativeMethod method);
DerivativeBundle kernel_derivatives(const LocalKernel& local, int k, const UhpPoint& z, DerivativeMethod method);

struct RatioSample {
    UhpPoint z{0.0, 1.0};
    int k = 0;
    double ratio = 0.0;
    double identity_part = 0.0;  ///< k / 2pi
    double correction = 0.0;     ///< (y^2/pi)(|dB|^2/B^2 - d2B/B)
    RegionTag region{Region::CompactPart, 0.0};
};

/// ratio = k/2pi + (y^2/pi)(dB dBbar / B^2 - d2B / B).
/// Throws KernelVanishes if the kernel underflowed.
RatioSample bergman_metric_ratio(const DerivativeBundle& bundle, double c_gamma = kDefaultCGamma);

/// -(y^2 / 4pi) * Laplacian of log ||B_k||, by the five-point stencil with
/// one Richardson step.
double ratio_by_log_laplacian(const KernelSource& source, const UhpPoint& z);

struct BoundLedger {
    double lemma5 = 0.0;  ///< bound on |dB/dz|
    double lemma6 = 0.0;  ///< bound on |dB/dzbar|
    double lemma7 = 0.0;  ///< bound on |d2B/dz dzbar|
    double prop8 = 0.0;   ///< bound on the ratio over the compact part
    double y = 0.0;
    int k = 0;
    double kernel_lower = 0.0;
    double c_x = 0.0;
    double c_gamma = 0.0;
};

/// The prop8 entry evaluates the y-dependent parenthesis at the region
/// threshold c_gamma log(k) / 2pi.
BoundLedger bound_ledger(double y, int k, double kernel_lower, double c_x, double c_gamma);

/// Cusp expansion with f_j = q g_j and A = sum |a_{j,1}|^2:
///   1 + beta1 = G / A,  G = sum |g_j|^2
///   1 + beta2 = |G + q sum g_j' conj(g_j)|^2 / A^2
///   1 + beta3 = sum |g_j + q g_j'|^2 / A
/// and the correction in Lagrange form beta = -4 pi y^2 |q|^2 W / G^2 with
/// W = sum_{i<l} |g_i g_l' - g_l g_i'|^2 (g' = dg/dq).
struct CuspExpansion {
    RatioSample sample;
    double beta = 0.0;
    double beta1 = 0.0;
    double beta2 = 0.0;
    double beta3 = 0.0;
    double first_coefficient_mass = 0.0;
};

/// Throws FirstCoefficientZero when sum |a_{j,1}|^2 = 0.
CuspExpansion cusp_ratio_expansion(const CuspFormBasis& onb, const UhpPoint& z, double c_gamma = kDefaultCGamma);

struct DecayFit {
    std::vector<double> heights;
    std::vector<double> beta;        ///< |ratio - k/2pi|
    std::vector<double> normalized;  ///< |beta| / (y^2 e^{-2 pi y})
    double K = 0.0;                  ///< max of normalized
    bool decreasing = false;
};
/// Throws InsufficientData for fewer than two heights.
DecayFit fit_cusp_decay(const CuspFormBasis& onb, double x, const std::vector<double>& heights);

struct ScanGrid {
    double x0 = 0.0, x1 = 1.0, y0 = 0.8, y1 = 6.0;
    int nx = 20, ny = 20;
    /// Row-major (y outer, x inner), endpoints included.
    std::vector<UhpPoint> points() const;
    /// Parses "X0,X1,Y0,Y1,NX,NY".
    static ScanGrid parse(const std::string& spec);
};

struct ScanOptions {
    double c_gamma = kDefaultCGamma;
    /// Injectivity radius feeding C_X in the compact-part bound; absent or
    /// non-positive makes that bound infinite.
    std::optional<double> injectivity_radius;
    DerivativeMethod method = DerivativeMethod::SeriesTermwise;
    int threads = 1;
};

struct ScanRow {
    int k = 0;
    UhpPoint z{0.0, 1.0};
    std::string route;
    std::optional<RatioSample> sample;
    double kernel_norm = 0.0;
    double bound = 0.0;
    bool bound_satisfied = false;
    std::string error;  ///< nonempty when the point failed
};

struct ScanSummary {
    int k = 0;
    double sup_ratio_over_k2 = 0.0;
    UhpPoint argmax{0.0, 1.0};
    double kernel_lower = 0.0;  ///< min((2k-1)/8pi, measured min)
    std::size_t failures = 0;
    bool within_limit = false;  ///< sup <= 26/pi and no failures
};

struct ScanTable {
    std::vector<ScanRow> rows;
    std::vector<ScanSummary> summaries;
};

inline constexpr double kRatioLimit = 26.0 / kPi;

using SourceFactory = std::function<std::unique_ptr<KernelSource>(int k)>;

ScanTable ratio_scan(const SourceFactory& make_source, const std::vector<int>& k_list,
                     const std::vector<UhpPoint>& grid, const ScanOptions& opts = {});

}  // namespace bergman
