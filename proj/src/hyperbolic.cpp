#include "bergman/hyperbolic.hpp"

#include "bergman/errors.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <string>

namespace bergman {

UhpPoint::UhpPoint(double x, double y) : x_(x), y_(y) {
    if (!std::isfinite(x) || !std::isfinite(y) || !(y > 0.0))
        throw DomainError("point outside the upper half-plane: (" + std::to_string(x) + ", " +
                          std::to_string(y) + ")");
}

std::ostream& operator<<(std::ostream& os, const UhpPoint& p) {
    return os << "(" << p.x() << ", " << p.y() << ")";
}

MoebiusTransform::MoebiusTransform(double a, double b, double c, double d)
    : a_(a), b_(b), c_(c), d_(d) {
    if (!std::isfinite(a) || !std::isfinite(b) || !std::isfinite(c) || !std::isfinite(d))
        throw DomainError("non-finite matrix entry");
    const double scale = std::max({1.0, a * a, b * b, c * c, d * d});
    if (std::abs(a * d - b * c - 1.0) > 1e-12 * scale)
        throw DomainError("matrix is not unimodular (ad - bc = " + std::to_string(a * d - b * c) + ")");
    canonicalize();
}

MoebiusTransform::MoebiusTransform(Unchecked, double a, double b, double c, double d)
    : a_(a), b_(b), c_(c), d_(d) {
    canonicalize();
}

void MoebiusTransform::canonicalize() {
    const double lead = a_ != 0.0 ? a_ : b_;
    if (lead < 0.0) {
        a_ = -a_;
        b_ = -b_;
        c_ = -c_;
        d_ = -d_;
    }
    // normalize signed zeros so equal matrices compare equal
    a_ += 0.0;
    b_ += 0.0;
    c_ += 0.0;
    d_ += 0.0;
}

bool MoebiusTransform::fixes_cusp(double tol) const { return std::abs(c_) <= tol; }

bool MoebiusTransform::is_identity(double tol) const {
    return fixes_cusp(tol) && std::abs(b_) <= tol && std::abs(a_ - 1.0) <= tol && std::abs(d_ - 1.0) <= tol;
}

MoebiusTransform operator*(const MoebiusTransform& l, const MoebiusTransform& r) {
    return {MoebiusTransform::Unchecked{}, l.a_ * r.a_ + l.b_ * r.c_, l.a_ * r.b_ + l.b_ * r.d_,
            l.c_ * r.a_ + l.d_ * r.c_, l.c_ * r.b_ + l.d_ * r.d_};
}

std::ostream& operator<<(std::ostream& os, const MoebiusTransform& g) {
    return os << "[" << g.a() << ", " << g.b() << "; " << g.c() << ", " << g.d() << "]";
}

UhpPoint apply_moebius(const MoebiusTransform& g, const UhpPoint& z) {
    const cplx w = z.z();
    const cplx den = g.c() * w + g.d();
    if (std::abs(den) < 1e-300) throw DomainError("cz + d vanishes");
    const cplx num = g.a() * w + g.b();
    const cplx r = num / den;
    // Im((az+b)/(cz+d)) = y/|cz+d|^2 exactly for unimodular matrices
    return {r.real(), z.y() / std::norm(den)};
}

double transformed_height(const MoebiusTransform& g, const UhpPoint& z) {
    const cplx den = g.c() * z.z() + g.d();
    if (std::abs(den) < 1e-300) throw DomainError("cz + d vanishes");
    return z.y() / std::norm(den);
}

double cosh2_half_distance(const UhpPoint& z, const UhpPoint& w) {
    const double dx = z.x() - w.x();
    const double sy = z.y() + w.y();
    return (dx * dx + sy * sy) / (4.0 * z.y() * w.y());
}

double hyperbolic_distance(const UhpPoint& z, const UhpPoint& w) {
    return distance_from_cosh2_half(cosh2_half_distance(z, w));
}

double cosh2_half_from_distance(double d) {
    const double c = std::cosh(0.5 * d);
    return c * c;
}

double distance_from_cosh2_half(double c2) {
    // 2 arccosh(sqrt(c2)) written via asinh(sqrt(c2 - 1)) to keep accuracy near 0
    return 2.0 * std::asinh(std::sqrt(std::max(0.0, c2 - 1.0)));
}

CuspCoordinate q_coordinate(const UhpPoint& z) {
    return {std::polar(std::exp(-2.0 * kPi * z.y()), 2.0 * kPi * z.x())};
}

}  // namespace bergman
