#pragma once

// Truncated Poincare-series evaluation of the weight-2k Bergman kernel and
// the explicit constants bounding its parabolic and hyperbolic parts.

#include "bergman/fuchsian.hpp"
#include "bergman/hyperbolic.hpp"
#include "bergman/summation.hpp"

#include <cstddef>
#include <vector>

namespace bergman {

struct TruncationReport {
    double displacement_bound = 1.0;
    std::size_t terms_used = 0;
    /// (2k-1)/4pi * N * bound^{2-k}, N = terms within the bound. Infinite
    /// unless the enumeration was exhaustive.
    double tail_estimate = 0.0;
    bool exhaustive = false;
};

struct KernelEvaluation {
    double value_diagonal = 0.0;  ///< ||B_k(z)||, the Petersson norm of the kernel on the diagonal
    double identity_part = 0.0;   ///< (2k-1)/4pi
    cplx parabolic_part;          ///< sum over the cusp stabilizer minus the identity
    cplx rest_part;               ///< sum over elements moving i*infinity
    double imaginary_residual = 0.0;
    bool imaginary_flagged = false;  ///< |Im| of the summed series above 1e-10 * value
    bool underflow = false;          ///< every non-identity term underflowed
    /// Smallest d(z, gz) over enumerated elements outside the stabilizer.
    double min_nonparabolic_distance = 0.0;
    TruncationReport truncation;
};

double identity_term(int k);

/// Gamma(k - 1/2) / Gamma(k), via log-gamma.
double gamma_ratio(int k);

/// y (2k-1)/sqrt(pi) * Gamma(k-1/2)/Gamma(k): bound on the stabilizer block.
double parabolic_term_bound(double y, int k);

struct CXConstant {
    double r_x;
    int k;
    double value;
};

/// Bound on the non-stabilizer block as a function of the injectivity
/// radius r_x. Infinite r_x gives 0. Throws DomainError for r_x <= 0.
CXConstant cx_constant(double r_x, int k);

/// One Poincare-series term (2k-1)/4pi * (2iy/P)^{2k} in log-polar form,
/// where P = c|z|^2 + dz - a conj(z) - b = (z - conj(gz)) conj(cz + d).
LogPolar poincare_term(const MoebiusTransform& g, const UhpPoint& z, int k);

KernelEvaluation bergman_kernel_diagonal(const FuchsianGroup& group, const UhpPoint& z, int k,
                                         double displacement_bound, std::size_t budget);

/// Same evaluation over an already enumerated orbit.
KernelEvaluation bergman_kernel_diagonal(const OrbitEnumeration& orbit, int k);

/// alpha(z) = ||B_k(z)|| - (2k-1)/4pi.
double alpha_decomposition(const KernelEvaluation& eval, int k);

/// (y v)^k B_k(z, w): the off-diagonal kernel scaled to be bounded, summed
/// over elements g with cosh^2(d(z, gw)/2) <= displacement_bound.
cplx bergman_kernel_offdiagonal(const FuchsianGroup& group, const UhpPoint& z, const UhpPoint& w, int k,
                                double displacement_bound, std::size_t budget);

/// Normalized sums over a fixed orbit element list, evaluated at z:
/// the norm ||B_k(z)|| and the logarithmic derivatives of the weight-zero
/// kernel B_k(z) = ||B_k(z)|| / y^{2k}.
struct PoincareSums {
    double norm = 0.0;
    cplx d_log;         ///< (dB/dz) / B
    cplx mixed_over_b;  ///< (d^2 B/dz dzbar) / B
};

PoincareSums poincare_sums(const std::vector<OrbitElement>& elements, const UhpPoint& z, int k);

/// log ||B_k(z)|| over a fixed orbit element list.
double poincare_log_norm(const std::vector<OrbitElement>& elements, const UhpPoint& z, int k);

}  // namespace bergman
