#include "bergman/kernel.hpp"

#include "bergman/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace bergman {

namespace {

cplx p_factor(const MoebiusTransform& g, const UhpPoint& z) {
    const cplx w = z.z();
    return g.c() * std::norm(w) + g.d() * w - g.a() * std::conj(w) - g.b();
}

void require_weight(int k, int min_k) {
    if (k < min_k) throw DomainError("k must be at least " + std::to_string(min_k));
}

}  // namespace

double identity_term(int k) {
    require_weight(k, 2);
    return (2.0 * k - 1.0) / (4.0 * kPi);
}

double gamma_ratio(int k) {
    require_weight(k, 2);
    return std::exp(std::lgamma(k - 0.5) - std::lgamma(static_cast<double>(k)));
}

double parabolic_term_bound(double y, int k) {
    require_weight(k, 3);
    if (!(y > 0.0)) throw DomainError("height must be positive");
    return y * (2.0 * k - 1.0) / std::sqrt(kPi) * gamma_ratio(k);
}

CXConstant cx_constant(double r_x, int k) {
    require_weight(k, 3);
    if (!(r_x > 0.0)) throw DomainError("injectivity radius must be positive");
    if (std::isinf(r_x)) return {r_x, k, 0.0};
    const double two_k = 2.0 * k;
    const double c4 = std::cosh(r_x / 4.0);
    const double c2 = std::cosh(r_x / 2.0);
    const double s4 = std::sinh(r_x / 4.0);
    const double pref = (two_k - 1.0) / (4.0 * kPi);
    const double first = pref * (16.0 / std::pow(c4, two_k - 4.0) + 8.0 / std::pow(c2, two_k - 3.0));
    const double second = (two_k - 1.0) / (2.0 * kPi * s4 * s4) *
                          (1.0 / std::pow(c2, two_k - 3.0) + 1.0 / std::pow(c2, two_k - 4.0));
    return {r_x, k, first + second};
}

LogPolar poincare_term(const MoebiusTransform& g, const UhpPoint& z, int k) {
    const cplx w = cplx(0.0, 2.0 * z.y()) / p_factor(g, z);
    LogPolar t = LogPolar::from(w).pow(2 * k);
    t.log_abs += std::log(identity_term(k));
    return t;
}

KernelEvaluation bergman_kernel_diagonal(const FuchsianGroup& group, const UhpPoint& z, int k,
                                         double displacement_bound, std::size_t budget) {
    require_weight(k, 2);
    return bergman_kernel_diagonal(enumerate_group_elements(group, z, displacement_bound, budget), k);
}

KernelEvaluation bergman_kernel_diagonal(const OrbitEnumeration& orbit, int k) {
    require_weight(k, 2);
    const UhpPoint& z = orbit.base_point;
    KernelEvaluation out;
    out.identity_part = identity_term(k);
    out.min_nonparabolic_distance = std::numeric_limits<double>::infinity();

    CompensatedComplexSum parabolic, rest;
    bool any_nonidentity = false;
    bool all_underflow = true;
    for (const auto& e : orbit.elements) {
        if (e.g.is_identity()) continue;
        any_nonidentity = true;
        const LogPolar t = poincare_term(e.g, z, k);
        const cplx v = t.scaled(0.0);
        if (v != cplx{}) all_underflow = false;
        if (e.g.fixes_cusp()) {
            parabolic.add(v);
        } else {
            rest.add(v);
            out.min_nonparabolic_distance =
                std::min(out.min_nonparabolic_distance, distance_from_cosh2_half(e.cosh2_half_displacement));
        }
    }
    out.parabolic_part = parabolic.value();
    out.rest_part = rest.value();
    out.underflow = any_nonidentity && all_underflow;

    CompensatedSum total;
    total.add(out.identity_part);
    total.add(out.parabolic_part.real());
    total.add(out.rest_part.real());
    out.value_diagonal = total.value();
    out.imaginary_residual = std::abs(out.parabolic_part.imag() + out.rest_part.imag());
    out.imaginary_flagged = out.imaginary_residual > 1e-10 * std::abs(out.value_diagonal);

    auto& tr = out.truncation;
    tr.displacement_bound = orbit.displacement_bound;
    tr.terms_used = orbit.elements.size();
    tr.exhaustive = orbit.exhaustive;
    tr.tail_estimate = orbit.exhaustive
                           ? out.identity_part * static_cast<double>(orbit.elements.size()) *
                                 std::pow(orbit.displacement_bound, 2.0 - k)
                           : std::numeric_limits<double>::infinity();
    return out;
}

double alpha_decomposition(const KernelEvaluation& eval, int k) {
    return eval.value_diagonal - identity_term(k);
}

cplx bergman_kernel_offdiagonal(const FuchsianGroup& group, const UhpPoint& z, const UhpPoint& w, int k,
                                double displacement_bound, std::size_t budget) {
    require_weight(k, 2);
    // d(z, gw) <= R forces d(w, gw) <= R + d(z, w)
    const double sep = hyperbolic_distance(z, w);
    const double widened = cosh2_half_from_distance(distance_from_cosh2_half(displacement_bound) + sep);
    const auto orbit = enumerate_group_elements(group, w, widened, budget);
    if (!orbit.exhaustive) throw BudgetExceeded("off-diagonal kernel enumeration incomplete");

    const double scale = std::sqrt(z.y() * w.y());
    const cplx zz = z.z();
    const cplx wb = std::conj(w.z());
    std::vector<std::pair<MoebiusTransform, LogPolar>> terms;
    for (const auto& e : orbit.elements) {
        const auto& g = e.g;
        const cplx p = zz * (g.c() * wb + g.d()) - (g.a() * wb + g.b());
        if (std::norm(p) / (4.0 * z.y() * w.y()) > displacement_bound) continue;
        LogPolar t = LogPolar::from(cplx(0.0, 2.0 * scale) / p).pow(2 * k);
        t.log_abs += std::log(identity_term(k));
        terms.emplace_back(g, t);
    }
    // order terms by magnitude, then matrix, so the sum does not depend on
    // which point the enumeration started from
    std::sort(terms.begin(), terms.end(), [](const auto& l, const auto& r) {
        if (l.second.log_abs != r.second.log_abs) return l.second.log_abs > r.second.log_abs;
        return l.first < r.first;
    });
    CompensatedComplexSum acc;
    for (const auto& t : terms) acc.add(t.second.scaled(0.0));
    return acc.value();
}

PoincareSums poincare_sums(const std::vector<OrbitElement>& elements, const UhpPoint& z, int k) {
    require_weight(k, 2);
    const cplx zz = z.z();
    const cplx zb = std::conj(zz);
    const double two_k = 2.0 * k;
    CompensatedComplexSum n, d1, d2;
    for (const auto& e : elements) {
        const auto& g = e.g;
        const cplx p = p_factor(g, z);
        LogPolar lp = LogPolar::from(cplx(0.0, 2.0 * z.y()) / p).pow(2 * k);
        lp.log_abs += std::log(identity_term(k));
        const cplx t = lp.scaled(0.0);
        const cplx dz_p = g.c() * zb + g.d();
        const cplx dzb_p = g.c() * zz - g.a();
        n.add(t);
        d1.add(t * (-two_k) * dz_p / p);
        d2.add(t * (two_k * (two_k + 1.0) * dz_p * dzb_p / (p * p) - two_k * g.c() / p));
    }
    const double norm = n.value().real();
    if (!(norm > 0.0)) throw KernelVanishes("Poincare series sum is not positive");
    return {norm, d1.value() / norm, d2.value() / norm};
}

double poincare_log_norm(const std::vector<OrbitElement>& elements, const UhpPoint& z, int k) {
    CompensatedSum n;
    for (const auto& e : elements) n.add(poincare_term(e.g, z, k).scaled(0.0).real());
    const double v = n.value();
    if (!(v > 0.0)) throw KernelVanishes("Poincare series sum is not positive");
    return std::log(v);
}

}  // namespace bergman
