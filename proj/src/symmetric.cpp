#include "bergman/symmetric.hpp"

#include "bergman/errors.hpp"
#include "bergman/metric.hpp"
#include "bergman/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

namespace bergman {

Dimensions dimensions(long g, long k, long d) {
    if (g < 2 || k < 2 || d < 1) throw HypothesisViolated("dimension count needs g >= 2, k >= 2, d >= 1");
    if ((k - 1) * (2 * g - 1) <= d)
        throw HypothesisViolated("(k-1)(2g-1) = " + std::to_string((k - 1) * (2 * g - 1)) +
                                 " does not exceed d = " + std::to_string(d));
    const long n = (2 * k - 1) * (g - 1) + k - 1;
    return {n, n - d};
}

int Divisor::degree() const {
    int d = 0;
    for (const auto& p : points) d += p.multiplicity;
    return d;
}

Divisor Divisor::from_points(const std::vector<UhpPoint>& pts) {
    Divisor D;
    for (const auto& z : pts) {
        auto it = std::find_if(D.points.begin(), D.points.end(), [&](const DivisorPoint& p) { return p.z == z; });
        if (it != D.points.end())
            ++it->multiplicity;
        else
            D.points.push_back({z, 1});
    }
    return D;
}

Eigen::MatrixXcd evaluation_matrix(const CuspFormBasis& onb, const Divisor& D) {
    const auto n = static_cast<Eigen::Index>(onb.size());
    Eigen::MatrixXcd e(D.degree(), n);
    Eigen::Index row = 0;
    for (const auto& p : D.points) {
        if (p.multiplicity < 1) throw DomainError("divisor multiplicities must be positive");
        for (int j = 0; j < p.multiplicity; ++j, ++row) {
            e.row(row) = onb.values(p.z, j).transpose();
            const double norm = e.row(row).norm();
            if (norm > 0.0) e.row(row) /= norm;
        }
    }
    return e;
}

SubspaceFrame full_frame(const CuspFormBasis& onb) {
    const auto n = static_cast<Eigen::Index>(onb.size());
    return {static_cast<int>(n), Eigen::MatrixXcd::Identity(n, n), 0, false};
}

SubspaceFrame vanishing_subspace(const CuspFormBasis& onb, const Divisor& D) {
    if (D.points.empty()) return full_frame(onb);
    const auto n = static_cast<Eigen::Index>(onb.size());
    const Eigen::MatrixXcd e = evaluation_matrix(onb, D);
    const Eigen::JacobiSVD<Eigen::MatrixXcd> svd(e, Eigen::ComputeFullV);
    const auto& s = svd.singularValues();
    Eigen::Index rank = 0;
    const double smax = s.size() > 0 ? s(0) : 0.0;
    for (Eigen::Index i = 0; i < s.size(); ++i)
        if (s(i) > 1e-10 * smax) ++rank;
    SubspaceFrame f;
    f.ambient_dim = static_cast<int>(n);
    f.evaluation_rank = static_cast<int>(rank);
    f.degenerate = rank < D.degree();
    f.coefficients = svd.matrixV().rightCols(n - rank);
    return f;
}

double log_subspace_kernel_diagonal(const SubspaceFrame& frame, const CuspFormBasis& onb, const UhpPoint& z) {
    if (frame.dim() == 0) return -std::numeric_limits<double>::infinity();
    const Eigen::VectorXcd h = frame.coefficients.transpose() * onb.values(z);
    return 2.0 * onb.k() * std::log(z.y()) + std::log(h.squaredNorm());
}

double subspace_kernel_diagonal(const SubspaceFrame& frame, const CuspFormBasis& onb, const UhpPoint& z) {
    return std::exp(log_subspace_kernel_diagonal(frame, onb, z));
}

MaTable ma_asymptotic_check(const std::function<CuspFormBasis(int)>& basis_for_k, const Divisor& D,
                            const UhpPoint& z, const std::vector<int>& k_list) {
    if (k_list.size() < 3) throw InsufficientData("asymptotic check needs at least three values of k");
    MaTable t;
    std::vector<double> lx, ly;
    for (int k : k_list) {
        const CuspFormBasis onb = basis_for_k(k);
        const SubspaceFrame frame = vanishing_subspace(onb, D);
        MaRow r{k, bergman_from_basis(onb, z), subspace_kernel_diagonal(frame, onb, z), 0.0};
        r.scaled_difference = (r.subspace - r.full) / k;
        if (r.scaled_difference != 0.0) {
            lx.push_back(std::log(static_cast<double>(k)));
            ly.push_back(std::log(std::abs(r.scaled_difference)));
        }
        t.rows.push_back(r);
    }
    if (lx.size() < 2) {
        t.fitted_exponent = 0.0;
        t.bounded = true;
        return t;
    }
    double mx = 0, my = 0;
    for (std::size_t i = 0; i < lx.size(); ++i) mx += lx[i], my += ly[i];
    mx /= lx.size();
    my /= ly.size();
    double sxy = 0, sxx = 0;
    for (std::size_t i = 0; i < lx.size(); ++i) sxy += (lx[i] - mx) * (ly[i] - my), sxx += (lx[i] - mx) * (lx[i] - mx);
    t.fitted_exponent = sxx > 0 ? sxy / sxx : 0.0;
    t.bounded = t.fitted_exponent <= 0.0;
    return t;
}

namespace {

void check_separation(const std::vector<UhpPoint>& z) {
    if (z.empty()) throw DomainError("need at least one point");
    for (std::size_t i = 0; i < z.size(); ++i)
        for (std::size_t j = i + 1; j < z.size(); ++j)
            if (hyperbolic_distance(z[i], z[j]) < 1e-3) throw NearDiagonal("points closer than 1e-3");
}

// Real coordinates (x_0, y_0, x_1, y_1, ...) of a tuple.
std::vector<double> flatten(const std::vector<UhpPoint>& z) {
    std::vector<double> v;
    for (const auto& p : z) v.insert(v.end(), {p.x(), p.y()});
    return v;
}

std::vector<UhpPoint> unflatten(const std::vector<double>& v) {
    std::vector<UhpPoint> z;
    for (std::size_t i = 0; i + 1 < v.size(); i += 2) z.emplace_back(v[i], v[i + 1]);
    return z;
}

double fs_step(const UhpPoint& p) { return 1e-3 * p.y(); }

using SlotTerm = std::function<double(const std::vector<UhpPoint>&)>;

// Real Hessian of f in the coordinates of the slots in `vars`, one Richardson step.
Eigen::MatrixXd real_hessian(const SlotTerm& f, const std::vector<UhpPoint>& z, const std::vector<int>& vars) {
    const std::vector<double> base = flatten(z);
    std::vector<int> coords;
    for (int a : vars) coords.insert(coords.end(), {2 * a, 2 * a + 1});
    const auto m = static_cast<Eigen::Index>(coords.size());
    auto eval = [&](const std::vector<std::pair<int, double>>& shifts) {
        std::vector<double> v = base;
        for (auto [c, s] : shifts) v[static_cast<std::size_t>(c)] += s;
        return f(unflatten(v));
    };
    const double f0 = f(z);
    auto hessian = [&](double scale) {
        Eigen::MatrixXd h(m, m);
        for (Eigen::Index i = 0; i < m; ++i) {
            const int ci = coords[static_cast<std::size_t>(i)];
            const double hi = scale * fs_step(z[static_cast<std::size_t>(ci / 2)]);
            h(i, i) = (eval({{ci, hi}}) - 2.0 * f0 + eval({{ci, -hi}})) / (hi * hi);
            for (Eigen::Index j = i + 1; j < m; ++j) {
                const int cj = coords[static_cast<std::size_t>(j)];
                const double hj = scale * fs_step(z[static_cast<std::size_t>(cj / 2)]);
                h(i, j) = (eval({{ci, hi}, {cj, hj}}) - eval({{ci, hi}, {cj, -hj}}) - eval({{ci, -hi}, {cj, hj}}) +
                           eval({{ci, -hi}, {cj, -hj}})) /
                          (4.0 * hi * hj);
                h(j, i) = h(i, j);
            }
        }
        return h;
    };
    return (4.0 * hessian(0.5) - hessian(1.0)) / 3.0;
}

// Accumulates d_a dbar_b of a slot term into the d x d complex matrix.
void add_complex_hessian(Eigen::MatrixXcd& acc, const Eigen::MatrixXd& h, const std::vector<int>& vars) {
    for (std::size_t a = 0; a < vars.size(); ++a)
        for (std::size_t b = 0; b < vars.size(); ++b) {
            const auto xa = static_cast<Eigen::Index>(2 * a), ya = xa + 1;
            const auto xb = static_cast<Eigen::Index>(2 * b), yb = xb + 1;
            acc(vars[a], vars[b]) += 0.25 * cplx(h(xa, xb) + h(ya, yb), h(xa, yb) - h(ya, xb));
        }
}

FSVolumeSample finish(const std::vector<UhpPoint>& z, int k, std::string route, const Eigen::MatrixXcd& m) {
    FSVolumeSample s;
    s.z = z;
    s.k = k;
    s.route = std::move(route);
    s.form = m;
    s.fs_volume_ratio = m.determinant().real();
    for (Eigen::Index a = 0; a < m.rows(); ++a) {
        s.per_factor_ratios.push_back(m(a, a).real());
        for (Eigen::Index b = 0; b < m.cols(); ++b)
            if (a != b) s.cross_term_max = std::max(s.cross_term_max, std::abs(m(a, b)));
    }
    return s;
}

Eigen::MatrixXcd scale_to_hyperbolic(const Eigen::MatrixXcd& ddbar_phi, const std::vector<UhpPoint>& z) {
    Eigen::MatrixXcd m = ddbar_phi;
    for (Eigen::Index a = 0; a < m.rows(); ++a)
        for (Eigen::Index b = 0; b < m.cols(); ++b)
            m(a, b) *= -z[static_cast<std::size_t>(a)].y() * z[static_cast<std::size_t>(b)].y() / kPi;
    return m;
}

}  // namespace

FSVolumeSample fs_form_formula(const CuspFormBasis& onb, const std::vector<UhpPoint>& z) {
    check_separation(z);
    const auto d = static_cast<Eigen::Index>(z.size());
    Eigen::MatrixXcd acc = Eigen::MatrixXcd::Zero(d, d);
    for (std::size_t j = 0; j < z.size(); ++j) {
        SlotTerm term = [&onb, j](const std::vector<UhpPoint>& w) {
            const Divisor D = Divisor::from_points({w.begin(), w.begin() + static_cast<std::ptrdiff_t>(j)});
            const double v = log_subspace_kernel_diagonal(vanishing_subspace(onb, D), onb, w[j]);
            if (!std::isfinite(v)) throw KernelVanishes("subspace kernel vanishes at a slot point");
            return v;
        };
        std::vector<int> vars(j + 1);
        for (std::size_t a = 0; a <= j; ++a) vars[a] = static_cast<int>(a);
        add_complex_hessian(acc, real_hessian(term, z, vars), vars);
    }
    return finish(z, onb.k(), "formula", scale_to_hyperbolic(acc, z));
}

FSVolumeSample fs_form_formula(const SeparableModel& model, const std::vector<UhpPoint>& z) {
    if (model.slots.size() != z.size()) throw DomainError("separable model needs one basis per point");
    check_separation(z);
    const auto d = static_cast<Eigen::Index>(z.size());
    Eigen::MatrixXcd acc = Eigen::MatrixXcd::Zero(d, d);
    for (std::size_t j = 0; j < z.size(); ++j) {
        const CuspFormBasis& onb = model.slots[j];
        SlotTerm term = [&onb, j](const std::vector<UhpPoint>& w) { return log_bergman_from_basis(onb, w[j]); };
        const std::vector<int> vars{static_cast<int>(j)};
        add_complex_hessian(acc, real_hessian(term, z, vars), vars);
    }
    return finish(z, model.slots.front().k(), "formula", scale_to_hyperbolic(acc, z));
}

FSVolumeSample fs_form_direct_oracle(const CuspFormBasis& onb, const std::vector<UhpPoint>& z) {
    check_separation(z);
    const std::size_t d = z.size();
    const int k = onb.k();
    const SubspaceFrame center = vanishing_subspace(onb, Divisor::from_points(z));
    auto projector_at = [&](const std::vector<UhpPoint>& w) {
        const SubspaceFrame f = vanishing_subspace(onb, Divisor::from_points(w));
        if (f.dim() != center.dim()) throw FrameJumpDetected("subspace dimension changes across the stencil");
        return f.projector();
    };
    // dP along each real coordinate
    std::vector<Eigen::MatrixXcd> dp;
    for (std::size_t c = 0; c < 2 * d; ++c) {
        auto central = [&](double h) {
            std::vector<double> v = flatten(z);
            v[c] += h;
            const Eigen::MatrixXcd plus = projector_at(unflatten(v));
            v[c] -= 2 * h;
            return ((plus - projector_at(unflatten(v))) / (2 * h)).eval();
        };
        const double h = fs_step(z[c / 2]);
        dp.push_back((4.0 * central(0.5 * h) - central(h)) / 3.0);
    }
    Eigen::MatrixXcd m(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(d));
    for (std::size_t a = 0; a < d; ++a)
        for (std::size_t b = 0; b < d; ++b) {
            const Eigen::MatrixXcd da = 0.5 * (dp[2 * a] - cplx(0, 1) * dp[2 * a + 1]);
            const Eigen::MatrixXcd dbbar = 0.5 * (dp[2 * b] + cplx(0, 1) * dp[2 * b + 1]);
            const cplx fs = (da * dbbar).trace();
            m(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)) =
                (a == b ? k / (2.0 * kPi) : 0.0) - z[a].y() * z[b].y() / kPi * fs;
        }
    return finish(z, k, "oracle", m);
}

std::vector<std::vector<UhpPoint>> product_tuples(const std::vector<UhpPoint>& points, int d) {
    if (d < 1) throw DomainError("tuple size must be positive");
    std::vector<std::vector<UhpPoint>> out{{}};
    for (int s = 0; s < d; ++s) {
        std::vector<std::vector<UhpPoint>> next;
        next.reserve(out.size() * points.size());
        for (const auto& t : out)
            for (const auto& p : points) {
                auto u = t;
                u.push_back(p);
                next.push_back(std::move(u));
            }
        out = std::move(next);
    }
    return out;
}

VolumeTable volume_ratio_scan(const VolumeEvaluator& eval, const std::vector<std::vector<UhpPoint>>& tuples,
                              const std::vector<int>& k_list, int threads) {
    VolumeTable table;
    for (int k : k_list) {
        std::vector<VolumeRow> rows(tuples.size());
        parallel_for(tuples.size(), threads, [&](std::size_t i) {
            VolumeRow& r = rows[i];
            r.k = k;
            r.z = tuples[i];
            try {
                r.sample = eval(k, tuples[i]);
                r.ratio_over_k2d = std::abs(r.sample->fs_volume_ratio) / std::pow(static_cast<double>(k), 2.0 * r.z.size());
            } catch (const NearDiagonal& e) {
                r.skipped = true;
                r.error = e.what();
            } catch (const Error& e) {
                r.error = e.what();
            }
        });
        VolumeSummary s;
        s.k = k;
        s.d = tuples.empty() ? 0 : static_cast<int>(tuples.front().size());
        s.limit = std::pow(26.0 / kPi, s.d);
        bool have = false;
        for (const auto& r : rows) {
            if (r.skipped) {
                ++s.skipped;
            } else if (!r.sample) {
                ++s.failures;
            } else if (!have || r.ratio_over_k2d > s.sup_ratio_over_k2d) {
                s.sup_ratio_over_k2d = r.ratio_over_k2d;
                s.argmax = r.z;
                have = true;
            }
        }
        s.within_limit = have && s.failures == 0 && s.sup_ratio_over_k2d <= s.limit;
        table.summaries.push_back(s);
        table.rows.insert(table.rows.end(), rows.begin(), rows.end());
    }
    return table;
}

CuspFormBasis random_synthetic_basis(int n, int k, int M, unsigned seed) {
    if (n < 1 || M < 1) throw DomainError("synthetic basis needs n >= 1 and M >= 1");
    std::mt19937 rng(seed);
    std::normal_distribution<double> normal;
    std::vector<QExpansionForm> forms;
    for (int j = 0; j < n; ++j) {
        std::vector<cplx> c(static_cast<std::size_t>(M));
        for (auto& a : c) a = {normal(rng), normal(rng)};
        forms.push_back(make_form("synthetic[" + std::to_string(j) + "]", 2 * k, std::move(c)));
    }
    CuspFormBasis b = make_basis(std::move(forms));
    b.gram = Eigen::MatrixXcd::Identity(n, n);
    b.orthonormal = true;
    return b;
}

}  // namespace bergman
