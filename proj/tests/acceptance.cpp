// Acceptance run: one PASS/FAIL line per criterion, nonzero exit on any failure.

#include "bergman/cli.hpp"
#include "bergman/cusp_forms.hpp"
#include "bergman/errors.hpp"
#include "bergman/kernel.hpp"
#include "bergman/metric.hpp"
#include "bergman/symmetric.hpp"

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include <chrono>
#include <cmath>
#include <functional>
#include <iostream>
#include <map>
#include <random>
#include <sstream>

using namespace bergman;
using json = nlohmann::json;

namespace {

const std::string kData = BERGMAN_DATA_DIR;

struct Run {
    int code = 0;
    std::string out;
    json report;
    double seconds = 0.0;
};

std::map<std::string, Run> cache;

Run run_cli(const std::vector<std::string>& args) {
    std::ostringstream out, err;
    const auto t0 = std::chrono::steady_clock::now();
    Run r;
    r.code = cli::run(args, out, err);
    r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    r.out = out.str();
    try {
        r.report = json::parse(r.out);
    } catch (const json::exception&) {
        r.report = json::object();
    }
    if (r.code != 0) std::cerr << err.str();
    return r;
}

// verify suite with --threads 1, memoized for the determinism check
const std::map<std::string, std::vector<std::string>> kSuites{
    {"kernel-oracle", {"verify", "--suite", "kernel-oracle", "--group", "modular", "--forms", kData + "/delta.jsonl"}},
    {"lemma4", {"verify", "--suite", "lemma4", "--group", "modular", "--forms", kData + "/delta.jsonl"}},
    {"prop3", {"verify", "--suite", "prop3"}},
    {"prop9", {"verify", "--suite", "prop9", "--forms", kData + "/delta_w24.jsonl"}},
    {"thm10-basis", {"verify", "--suite", "thm10", "--forms", kData + "/delta.jsonl"}},
    {"thm10-monomial", {"verify", "--suite", "thm10", "--source", "monomial", "--k", "2..50"}},
    {"sym", {"verify", "--suite", "sym", "--forms", kData + "/delta_w36.jsonl"}},
};

const Run& suite(const std::string& name) {
    auto it = cache.find(name);
    if (it != cache.end()) return it->second;
    auto args = kSuites.at(name);
    args.insert(args.end(), {"--threads", "1"});
    return cache.emplace(name, run_cli(args)).first->second;
}

bool passed(const Run& r) { return r.code == 0 && r.report.value("pass", false); }

struct Outcome {
    bool pass;
    std::string detail;
};

Outcome kernel_oracle() {
    const auto forms = read_forms_jsonl(kData + "/delta.jsonl");
    if (forms.at(0).length() < 100) return {false, "fewer than 100 coefficients"};
    const Run& r = suite("kernel-oracle");
    double tail = 0.0;
    for (const auto& p : r.report["metrics"]["points"]) tail = std::max(tail, p["tail_estimate"].get<double>() / p["oracle"].get<double>());
    const bool ok = passed(r) && tail < 1e-5 && r.seconds <= 60.0;
    return {ok, fmt::format("max rel dev {:.3g}, rel tail {:.3g}, {:.1f} s",
                            r.report["metrics"].value("max_relative_deviation", NAN), tail, r.seconds)};
}

Outcome term_magnitude() {
    std::mt19937 rng(2024);
    std::uniform_real_distribution<double> u(-6.0, 6.0), ux(-2.0, 2.0), ly(std::log(0.1), std::log(4.0));
    std::uniform_int_distribution<int> uk(2, 30);
    double worst = 0.0;
    for (int t = 0; t < 1000; ++t) {
        double a, b, c, d;
        do {
            a = u(rng), b = u(rng), c = u(rng);
        } while (std::abs(a) < 0.3);
        d = (1.0 + b * c) / a;
        const MoebiusTransform g(a, b, c, d);
        const double x = ux(rng);
        const UhpPoint z(x, std::exp(ly(rng)));
        const int k = uk(rng);
        // cosh d = 1 + |z - w|^2 / (2 y v), with w = gz computed directly
        const cplx zc = z.z();
        const cplx w = (a * zc + b) / (c * zc + d);
        const double cosh_d = 1.0 + std::norm(zc - w) / (2.0 * z.y() * w.imag());
        const double expected_log = -k * std::log((1.0 + cosh_d) / 2.0);
        const double got_log = poincare_term(g, z, k).log_abs - std::log((2.0 * k - 1.0) / (4.0 * kPi));
        worst = std::max(worst, std::abs(std::expm1(got_log - expected_log)));
    }
    return {worst <= 1e-10, fmt::format("max rel dev {:.3g} over 1000 pairs", worst)};
}

Outcome two_routes() {
    const Run& r = suite("lemma4");
    const auto& m = r.report["metrics"];
    const bool both = m.contains("basis") && m.contains("poincare");
    return {passed(r) && both && r.seconds <= 120.0,
            fmt::format("basis {:.3g}, poincare {:.3g}, {:.1f} s", both ? m["basis"]["max_relative_deviation"].get<double>() : NAN,
                        both ? m["poincare"]["max_relative_deviation"].get<double>() : NAN, r.seconds)};
}

Outcome collapse() {
    std::mt19937 rng(7);
    std::uniform_real_distribution<double> ux(-0.5, 0.5), uy(0.6, 3.0);
    const auto w24 = read_forms_jsonl(kData + "/delta_w24.jsonl");
    const std::vector<CuspFormBasis> singles{orthonormal_basis(make_basis(read_forms_jsonl(kData + "/delta.jsonl"))),
                                             orthonormal_basis(make_basis({w24.at(1)})), monomial_model(1, 9)};
    double worst = 0.0;
    for (const auto& b : singles) {
        const BasisKernelSource src(b);
        for (int i = 0; i < 100; ++i) {
            const double x = ux(rng);
            const UhpPoint z(x, uy(rng));
            const double ratio = bergman_metric_ratio(kernel_derivatives(src, z, DerivativeMethod::SeriesTermwise)).ratio;
            worst = std::max(worst, std::abs(ratio - b.k() / (2.0 * kPi)));
        }
    }
    return {worst <= 1e-10, fmt::format("max |ratio - k/2pi| {:.3g} over 3 bases x 100 points", worst)};
}

Outcome parabolic_ledger() {
    const Run& r = suite("prop3");
    double worst = 0.0;
    for (const auto& row : r.report["metrics"]["per_k"]) worst = std::max(worst, row["max_alpha_over_bound"].get<double>());
    return {passed(r) && r.report["metrics"]["points"] == 50, fmt::format("max |alpha|/bound {:.3g} for k = 3, 6, 10", worst)};
}

Outcome cusp_decay() {
    const Run& r = suite("prop9");
    const auto& m = r.report["metrics"];
    const bool collapsed = m.value("collapsed", true);
    return {passed(r) && !collapsed,
            fmt::format("|beta| = {} at y = 4, 6, 8; K = {:.3g}", m.contains("abs_beta") ? m["abs_beta"].dump() : "?",
                        m.value("K", NAN))};
}

Outcome scan_limit() {
    const Run& a = suite("thm10-basis");
    const Run& b = suite("thm10-monomial");
    return {passed(a) && passed(b) && b.report["metrics"]["per_k"].size() == 49,
            fmt::format("weight 12 sup {:.4g}, monomial k=2..50 sup {:.4g}, limit {:.4g}",
                        a.report["metrics"].value("sup_over_all_k", NAN), b.report["metrics"].value("sup_over_all_k", NAN),
                        kRatioLimit)};
}

Outcome dimension_counts() {
    std::mt19937 rng(3);
    std::uniform_int_distribution<long> ug(2, 40), uk(2, 60);
    int checked = 0, bad = 0;
    while (checked < 100) {
        const long g = ug(rng), k = uk(rng);
        std::uniform_int_distribution<long> ud(1, (k - 1) * (2 * g - 1) - 1);
        const long d = ud(rng);
        const Dimensions dim = dimensions(g, k, d);
        const long n = (2 * k - 1) * (g - 1) + k - 1;
        if (dim.n_k != n || dim.r_k != n - d) ++bad;
        ++checked;
    }
    bool rejects = false;
    try {
        dimensions(2, 2, 3);
    } catch (const HypothesisViolated&) {
        rejects = true;
    }
    return {bad == 0 && rejects, fmt::format("{} triples, {} mismatches", checked, bad)};
}

Outcome fs_routes() {
    const Run& r = suite("sym");
    const auto& m = r.report["metrics"];
    const double dev = m.value("two_route_max_relative_deviation", NAN);
    return {r.code != 2 && m.value("instances", 0) == 20 && dev <= 1e-3 && r.seconds <= 300.0,
            fmt::format("max rel dev {:.3g} over 20 instances, {:.1f} s", dev, r.seconds)};
}

Outcome fs_scan() {
    const Run& r = suite("sym");
    const auto& m = r.report["metrics"];
    const double sep = m.value("separable_relative_deviation", NAN);
    const json scan = m.value("basis_scan", json::object());
    const double sup = scan.value("sup_ratio_over_k2d", NAN);
    return {passed(r) && sep <= 1e-8 && sup <= kRatioLimit * kRatioLimit,
            fmt::format("separable rel dev {:.3g}; weight 36 d=2 sup {:.4g} (limit {:.4g})", sep, sup,
                        kRatioLimit * kRatioLimit)};
}

Outcome determinism() {
    std::vector<std::string> differing;
    for (const auto& [name, base] : kSuites) {
        const Run& one = suite(name);
        auto args = base;
        args.insert(args.end(), {"--threads", "8"});
        const Run eight = run_cli(args);
        const Run again = run_cli(base);  // default thread count
        if (one.out != eight.out || one.out != again.out || one.out.empty()) differing.push_back(name);
    }
    const Run csv1 = run_cli({"ratio-scan", "--source", "monomial", "--k", "3,8", "--grid", "0,1,0.8,3,7,7", "--threads", "1"});
    const Run csv8 = run_cli({"ratio-scan", "--source", "monomial", "--k", "3,8", "--grid", "0,1,0.8,3,7,7", "--threads", "8"});
    if (csv1.out != csv8.out || csv1.out.empty()) differing.push_back("ratio-scan");
    std::string list;
    for (const auto& d : differing) list += " " + d;
    return {differing.empty(),
            differing.empty() ? fmt::format("{} suites and a scan byte-identical across thread counts", kSuites.size())
                              : "outputs differ:" + list};
}

}  // namespace

int main() {
    const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
        {"kernel oracle at weight 12", kernel_oracle},
        {"series term magnitude identity", term_magnitude},
        {"analytic vs finite-difference ratio, both routes", two_routes},
        {"single-form collapse to k/2pi", collapse},
        {"parabolic ledger for the translation group", parabolic_ledger},
        {"cusp correction decay", cusp_decay},
        {"ratio/k^2 scan below 26/pi", scan_limit},
        {"symmetric product dimension counts", dimension_counts},
        {"Fubini-Study two-route equality", fs_routes},
        {"separable model and d=2 volume scan", fs_scan},
        {"determinism across thread counts", determinism},
    };
    int failures = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        Outcome o;
        try {
            o = criteria[i].second();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        if (!o.pass) ++failures;
        std::cout << fmt::format("[{}] {:2d}. {}: {}", o.pass ? "PASS" : "FAIL", i + 1, criteria[i].first, o.detail) << std::endl;
    }
    std::cout << fmt::format("{} of {} criteria passed", criteria.size() - failures, criteria.size()) << std::endl;
    return failures == 0 ? 0 : 1;
}
