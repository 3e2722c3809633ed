#include "bergman/metric.hpp"

#include "bergman/errors.hpp"
#include "bergman/kernel.hpp"
#include "bergman/parallel.hpp"
#include "bergman/summation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace bergman {

const char* to_string(DerivativeMethod m) {
    return m == DerivativeMethod::SeriesTermwise ? "termwise" : "finite-difference";
}

double DerivativeBundle::kernel_norm() const { return std::exp(log_norm); }

double DerivativeBundle::B() const { return std::exp(log_norm - 2.0 * k * std::log(z.y())); }

namespace {

class PoincareLocal final : public LocalKernel {
public:
    PoincareLocal(std::vector<OrbitElement> elements, int k) : elements_(std::move(elements)), k_(k) {}

    double log_norm(const UhpPoint& z) const override { return poincare_log_norm(elements_, z, k_); }

    DerivativeBundle termwise(const UhpPoint& z) const override {
        const PoincareSums s = poincare_sums(elements_, z, k_);
        DerivativeBundle b;
        b.k = k_;
        b.z = z;
        b.log_norm = std::log(s.norm);
        b.d_log = s.d_log;
        b.d_log_bar = std::conj(s.d_log);
        b.mixed_over_b = s.mixed_over_b;
        return b;
    }

private:
    std::vector<OrbitElement> elements_;
    int k_;
};

class BasisLocal final : public LocalKernel {
public:
    explicit BasisLocal(const CuspFormBasis& basis) : basis_(basis) {}

    double log_norm(const UhpPoint& z) const override {
        const double v = log_bergman_from_basis(basis_, z);
        if (!std::isfinite(v)) throw KernelVanishes("basis kernel vanishes or underflows");
        return v;
    }

    DerivativeBundle termwise(const UhpPoint& z) const override {
        const Eigen::VectorXcd f = basis_.values(z);
        const Eigen::VectorXcd df = basis_.values(z, 1);
        const double s = f.squaredNorm();
        if (!(s > 0.0)) throw KernelVanishes("basis kernel vanishes or underflows");
        DerivativeBundle b;
        b.k = basis_.k();
        b.z = z;
        b.log_norm = 2.0 * b.k * std::log(z.y()) + std::log(s);
        // d sum |f|^2 = sum f' conj(f), d dbar sum |f|^2 = sum |f'|^2
        b.d_log = f.dot(df) / s;
        b.d_log_bar = std::conj(b.d_log);
        b.mixed_over_b = df.squaredNorm() / s;
        return b;
    }

private:
    const CuspFormBasis& basis_;
};

struct Stencil {
    double lx, ly, lap;
};

Stencil central(const LocalKernel& local, const UhpPoint& z, double h, double l0) {
    const double x = z.x(), y = z.y();
    const double xp = local.log_norm({x + h, y}), xm = local.log_norm({x - h, y});
    const double yp = local.log_norm({x, y + h}), ym = local.log_norm({x, y - h});
    return {(xp - xm) / (2 * h), (yp - ym) / (2 * h), (xp + xm + yp + ym - 4 * l0) / (h * h)};
}

double fd_step(const UhpPoint& z) { return std::max(1e-5, 1e-4 * z.y()); }

DerivativeBundle finite_difference(const LocalKernel& local, int k, const UhpPoint& z) {
    const double h = fd_step(z);
    if (h >= 0.5 * z.y()) throw DomainError("finite-difference stencil leaves the upper half-plane");
    const double l0 = local.log_norm(z);
    const Stencil coarse = central(local, z, h, l0);
    const Stencil fine = central(local, z, 0.5 * h, l0);
    auto extrapolate = [](double c, double f) { return (4.0 * f - c) / 3.0; };
    const double lx = extrapolate(coarse.lx, fine.lx);
    const double ly = extrapolate(coarse.ly, fine.ly);
    const double lap = extrapolate(coarse.lap, fine.lap);

    // L = log ||B|| = log B + 2k log y
    const double y = z.y();
    auto assemble = [&](double ax, double ay, double alap) {
        const cplx d_log = 0.5 * cplx(ax, -ay) + cplx(0.0, k / y);
        const double ddbar_log = 0.25 * alap + k / (2.0 * y * y);
        return std::pair{d_log, ddbar_log + std::norm(d_log)};
    };
    DerivativeBundle b;
    b.k = k;
    b.z = z;
    b.log_norm = l0;
    std::tie(b.d_log, b.mixed_over_b) = assemble(lx, ly, lap);
    b.d_log_bar = std::conj(b.d_log);
    b.method = DerivativeMethod::FiniteDifference;
    b.step = h;
    b.mixed_over_b_raw = assemble(fine.lx, fine.ly, fine.lap).second;
    return b;
}

}  // namespace

PoincareKernelSource::PoincareKernelSource(FuchsianGroup group, int k, double displacement_bound, std::size_t budget,
                                           bool require_exhaustive)
    : group_(std::move(group)), k_(k), bound_(displacement_bound), budget_(budget),
      require_exhaustive_(require_exhaustive) {
    if (k < 2) throw DomainError("kernel weight needs k >= 2");
}

std::unique_ptr<LocalKernel> PoincareKernelSource::localize(const UhpPoint& center) const {
    OrbitEnumeration orbit = enumerate_group_elements(group_, center, bound_, budget_);
    if (require_exhaustive_ && !orbit.exhaustive)
        throw BudgetExceeded("orbit enumeration exceeded its budget at the requested point");
    return std::make_unique<PoincareLocal>(std::move(orbit.elements), k_);
}

BasisKernelSource::BasisKernelSource(CuspFormBasis onb) : basis_(std::move(onb)) {
    if (!basis_.orthonormal) throw DomainError("basis kernel source needs an orthonormal basis");
    if (basis_.forms.empty()) throw DomainError("basis kernel source needs at least one form");
}

std::unique_ptr<LocalKernel> BasisKernelSource::localize(const UhpPoint&) const {
    return std::make_unique<BasisLocal>(basis_);
}

DerivativeBundle kernel_derivatives(const LocalKernel& local, int k, const UhpPoint& z, DerivativeMethod method) {
    if (method == DerivativeMethod::SeriesTermwise) return local.termwise(z);
    return finite_difference(local, k, z);
}

DerivativeBundle kernel_derivatives(const KernelSource& source, const UhpPoint& z, DerivativeMethod method) {
    const auto local = source.localize(z);
    return kernel_derivatives(*local, source.k(), z, method);
}

RatioSample bergman_metric_ratio(const DerivativeBundle& b, double c_gamma) {
    if (!std::isfinite(b.log_norm)) throw KernelVanishes("kernel underflowed at the sample point");
    const double y = b.z.y();
    RatioSample s;
    s.z = b.z;
    s.k = b.k;
    s.identity_part = b.k / (2.0 * kPi);
    s.correction = (y * y / kPi) * (b.d_log * b.d_log_bar - b.mixed_over_b).real();
    s.ratio = s.identity_part + s.correction;
    s.region = classify_region(b.z, std::max(b.k, 2), c_gamma);
    return s;
}

double ratio_by_log_laplacian(const KernelSource& source, const UhpPoint& z) {
    const auto local = source.localize(z);
    const double h = fd_step(z);
    const double l0 = local->log_norm(z);
    const double lap = (4.0 * central(*local, z, 0.5 * h, l0).lap - central(*local, z, h, l0).lap) / 3.0;
    return -(z.y() * z.y() / (4.0 * kPi)) * lap;
}

BoundLedger bound_ledger(double y, int k, double kernel_lower, double c_x, double c_gamma) {
    if (k < 3) throw DomainError("bound ledger needs k >= 3");
    if (!(y > 0.0) || !(kernel_lower > 0.0) || !(c_x >= 0.0) || !(c_gamma > 0.0))
        throw DomainError("bound ledger inputs must be positive");
    auto paren = [&](double yy) { return identity_term(k) + parabolic_term_bound(yy, k) + c_x; };
    BoundLedger l;
    l.y = y;
    l.k = k;
    l.kernel_lower = kernel_lower;
    l.c_x = c_x;
    l.c_gamma = c_gamma;
    const double p = paren(y);
    const double lk = 2.0 * k * std::log(y);
    l.lemma5 = 2.0 * k * p * std::exp(-lk - std::log(y));
    l.lemma6 = l.lemma5;
    l.lemma7 = (10.0 * k * k + k) / 2.0 * p * std::exp(-lk - 2.0 * std::log(y));
    const double pc = paren(c_gamma * std::log(static_cast<double>(k)) / (2.0 * kPi));
    const double kk = static_cast<double>(k) * k;
    l.prop8 = k / (2.0 * kPi) + 4.0 * kk / (kPi * kernel_lower * kernel_lower) * pc * pc +
              kk / (kPi * kernel_lower) * pc * (5.0 + 1.0 / (2.0 * k));
    return l;
}

CuspExpansion cusp_ratio_expansion(const CuspFormBasis& onb, const UhpPoint& z, double c_gamma) {
    if (!onb.orthonormal) throw DomainError("cusp expansion needs an orthonormal basis");
    const FirstCoefficientMass mass = first_coefficient_mass(onb);
    if (!mass.hypothesis_holds) throw FirstCoefficientZero("all first Fourier coefficients vanish");
    const cplx q = q_coordinate(z).q;
    const std::size_t n = onb.size();
    std::vector<CuspFactor> g;
    g.reserve(n);
    for (const auto& f : onb.forms) g.push_back(evaluate_cusp_factor(f, q));

    CompensatedSum big_g, w, s3;
    CompensatedComplexSum cross;
    for (std::size_t i = 0; i < n; ++i) {
        big_g.add(std::norm(g[i].g));
        cross.add(g[i].dg_dq * std::conj(g[i].g));
        s3.add(std::norm(g[i].g + q * g[i].dg_dq));
        for (std::size_t l = i + 1; l < n; ++l) w.add(std::norm(g[i].g * g[l].dg_dq - g[l].g * g[i].dg_dq));
    }
    const double a = mass.mass;
    const double gg = big_g.value();
    if (!(gg > 0.0)) throw KernelVanishes("cusp factor sum vanishes");
    const double y = z.y();

    CuspExpansion e;
    e.first_coefficient_mass = a;
    e.beta1 = gg / a - 1.0;
    e.beta2 = std::norm(gg + q * cross.value()) / (a * a) - 1.0;
    e.beta3 = s3.value() / a - 1.0;
    e.beta = -4.0 * kPi * y * y * std::norm(q) * w.value() / (gg * gg);
    e.sample.z = z;
    e.sample.k = onb.k();
    e.sample.identity_part = e.sample.k / (2.0 * kPi);
    e.sample.correction = e.beta;
    e.sample.ratio = e.sample.identity_part + e.beta;
    e.sample.region = classify_region(z, std::max(e.sample.k, 2), c_gamma);
    return e;
}

DecayFit fit_cusp_decay(const CuspFormBasis& onb, double x, const std::vector<double>& heights) {
    if (heights.size() < 2) throw InsufficientData("decay fit needs at least two heights");
    DecayFit fit;
    fit.heights = heights;
    fit.decreasing = true;
    for (double y : heights) {
        const double b = std::abs(cusp_ratio_expansion(onb, UhpPoint(x, y)).beta);
        const double nb = b / (y * y * std::exp(-2.0 * kPi * y));
        if (!fit.beta.empty() && !(b < fit.beta.back() || (b == 0.0 && fit.beta.back() == 0.0))) fit.decreasing = false;
        fit.beta.push_back(b);
        fit.normalized.push_back(nb);
        fit.K = std::max(fit.K, nb);
    }
    return fit;
}

std::vector<UhpPoint> ScanGrid::points() const {
    if (nx < 1 || ny < 1) throw DomainError("grid needs at least one point per axis");
    std::vector<UhpPoint> pts;
    pts.reserve(static_cast<std::size_t>(nx) * ny);
    auto at = [](double a, double b, int n, int i) { return n == 1 ? a : a + (b - a) * i / (n - 1); };
    for (int j = 0; j < ny; ++j)
        for (int i = 0; i < nx; ++i) pts.emplace_back(at(x0, x1, nx, i), at(y0, y1, ny, j));
    return pts;
}

ScanGrid ScanGrid::parse(const std::string& spec) {
    std::stringstream ss(spec);
    std::vector<std::string> parts;
    for (std::string item; std::getline(ss, item, ',');) parts.push_back(item);
    if (parts.size() != 6) throw ConfigError("grid spec must be X0,X1,Y0,Y1,NX,NY: " + spec);
    ScanGrid g;
    try {
        g.x0 = std::stod(parts[0]);
        g.x1 = std::stod(parts[1]);
        g.y0 = std::stod(parts[2]);
        g.y1 = std::stod(parts[3]);
        g.nx = std::stoi(parts[4]);
        g.ny = std::stoi(parts[5]);
    } catch (const std::exception&) {
        throw ConfigError("grid spec must be X0,X1,Y0,Y1,NX,NY: " + spec);
    }
    if (!(g.y0 > 0.0) || !(g.y1 > 0.0) || g.nx < 1 || g.ny < 1) throw ConfigError("invalid grid spec: " + spec);
    return g;
}

ScanTable ratio_scan(const SourceFactory& make_source, const std::vector<int>& k_list,
                     const std::vector<UhpPoint>& grid, const ScanOptions& opts) {
    ScanTable table;
    for (int k : k_list) {
        const std::unique_ptr<KernelSource> source = make_source(k);
        std::vector<ScanRow> rows(grid.size());
        parallel_for(grid.size(), opts.threads, [&](std::size_t i) {
            ScanRow& row = rows[i];
            row.k = k;
            row.z = grid[i];
            row.route = source->route();
            try {
                const DerivativeBundle b = kernel_derivatives(*source, grid[i], opts.method);
                row.sample = bergman_metric_ratio(b, opts.c_gamma);
                row.kernel_norm = b.kernel_norm();
            } catch (const Error& e) {
                row.error = e.what();
            }
        });

        ScanSummary sum;
        sum.k = k;
        double measured_min = std::numeric_limits<double>::infinity();
        for (const auto& r : rows)
            if (r.sample) measured_min = std::min(measured_min, r.kernel_norm);
        sum.kernel_lower = std::min(identity_term(k) / 2.0, measured_min);

        double compact_bound = std::numeric_limits<double>::infinity();
        if (k >= 3 && opts.injectivity_radius && *opts.injectivity_radius > 0.0) {
            const double cx = cx_constant(*opts.injectivity_radius, k).value;
            compact_bound = bound_ledger(1.0, k, sum.kernel_lower, cx, opts.c_gamma).prop8;
        }
        const double cusp_bound = kRatioLimit * k * k;

        bool have = false;
        for (auto& r : rows) {
            if (!r.sample) {
                ++sum.failures;
                continue;
            }
            r.bound = r.sample->region.tag == Region::CompactPart ? compact_bound : cusp_bound;
            r.bound_satisfied = std::abs(r.sample->ratio) <= r.bound;
            const double v = std::abs(r.sample->ratio) / (static_cast<double>(k) * k);
            if (!have || v > sum.sup_ratio_over_k2) {
                sum.sup_ratio_over_k2 = v;
                sum.argmax = r.z;
                have = true;
            }
        }
        sum.within_limit = have && sum.failures == 0 && sum.sup_ratio_over_k2 <= kRatioLimit;
        table.summaries.push_back(sum);
        table.rows.insert(table.rows.end(), rows.begin(), rows.end());
    }
    return table;
}

}  // namespace bergman
