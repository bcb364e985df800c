#include "fdilab/stats.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace fdilab::stats {
namespace {

constexpr double kEps = std::numeric_limits<double>::epsilon();
const double kFpMin = std::numeric_limits<double>::min() / kEps;

// Series representation of P(a, x), valid for x < a + 1.
double gamma_series(double a, double x) {
    const double gln = std::lgamma(a);
    double ap = a;
    double del = 1.0 / a;
    double sum = del;
    for (int i = 0; i < 10000; ++i) {
        ++ap;
        del *= x / ap;
        sum += del;
        if (std::abs(del) < std::abs(sum) * kEps)
            return sum * std::exp(-x + a * std::log(x) - gln);
    }
    throw std::runtime_error("gamma_series: no convergence");
}

// Continued fraction (modified Lentz) for Q(a, x), valid for x >= a + 1.
double gamma_cf(double a, double x) {
    const double gln = std::lgamma(a);
    double b = x + 1.0 - a;
    double c = 1.0 / kFpMin;
    double d = 1.0 / b;
    double h = d;
    for (int i = 1; i < 10000; ++i) {
        const double an = -static_cast<double>(i) * (static_cast<double>(i) - a);
        b += 2.0;
        d = an * d + b;
        if (std::abs(d) < kFpMin) d = kFpMin;
        c = b + an / c;
        if (std::abs(c) < kFpMin) c = kFpMin;
        d = 1.0 / d;
        const double del = d * c;
        h *= del;
        if (std::abs(del - 1.0) <= kEps) break;
    }
    return std::exp(-x + a * std::log(x) - gln) * h;
}

}  // namespace

double gammp(double a, double x) {
    if (x < 0.0 || a <= 0.0) throw std::invalid_argument("gammp: bad arguments");
    if (x == 0.0) return 0.0;
    if (x < a + 1.0) return gamma_series(a, x);
    return 1.0 - gamma_cf(a, x);
}

double gammq(double a, double x) {
    if (x < 0.0 || a <= 0.0) throw std::invalid_argument("gammq: bad arguments");
    if (x == 0.0) return 1.0;
    if (x < a + 1.0) return 1.0 - gamma_series(a, x);
    return gamma_cf(a, x);
}

// Halley iteration on P(a, x) = p with the Didonato-Morris style starting
// guess used by Numerical Recipes' invgammp.
double inv_gammp(double p, double a) {
    if (a <= 0.0) throw std::invalid_argument("inv_gammp: a must be positive");
    if (p <= 0.0) return 0.0;
    if (p >= 1.0) throw std::invalid_argument("inv_gammp: p must be below 1");

    const double gln = std::lgamma(a);
    const double a1 = a - 1.0;
    double lna1 = 0.0;
    double afac = 0.0;
    double x;
    if (a > 1.0) {
        lna1 = std::log(a1);
        afac = std::exp(a1 * (lna1 - 1.0) - gln);
        const double pp = (p < 0.5) ? p : 1.0 - p;
        const double t = std::sqrt(-2.0 * std::log(pp));
        double guess = (2.30753 + t * 0.27061) / (1.0 + t * (0.99229 + t * 0.04481)) - t;
        if (p < 0.5) guess = -guess;
        x = std::max(1e-3,
                     a * std::pow(1.0 - 1.0 / (9.0 * a) - guess / (3.0 * std::sqrt(a)), 3));
    } else {
        const double t = 1.0 - a * (0.253 + a * 0.12);
        if (p < t)
            x = std::pow(p / t, 1.0 / a);
        else
            x = 1.0 - std::log(1.0 - (p - t) / (1.0 - t));
    }

    for (int j = 0; j < 48; ++j) {
        if (x <= 0.0) return 0.0;
        const double err = gammp(a, x) - p;
        double t;
        if (a > 1.0)
            t = afac * std::exp(-(x - a1) + a1 * (std::log(x) - lna1));
        else
            t = std::exp(-x + a1 * std::log(x) - gln);
        const double u = err / t;
        x -= (t = u / (1.0 - 0.5 * std::min(1.0, u * ((a - 1.0) / x - 1.0))));
        if (x <= 0.0) x = 0.5 * (x + t);
        if (std::abs(t) < kEps * x) break;
    }
    return x;
}

double chi2_cdf(std::size_t dof, double x) {
    if (dof == 0) throw std::invalid_argument("chi2_cdf: dof must be >= 1");
    if (x <= 0.0) return 0.0;
    return gammp(0.5 * static_cast<double>(dof), 0.5 * x);
}

double chi2_quantile(std::size_t dof, double p) {
    if (dof == 0) throw std::invalid_argument("chi2_quantile: dof must be >= 1");
    if (!(p > 0.0 && p < 1.0))
        throw std::invalid_argument("chi2_quantile: p must lie in (0, 1)");
    return 2.0 * inv_gammp(p, 0.5 * static_cast<double>(dof));
}

double empirical_quantile(std::vector<double> samples, double q) {
    if (samples.empty()) throw std::invalid_argument("empirical_quantile: empty sample");
    if (!(q > 0.0 && q <= 1.0))
        throw std::invalid_argument("empirical_quantile: q must lie in (0, 1]");
    std::sort(samples.begin(), samples.end());
    const std::size_t n = samples.size();
    std::size_t k = static_cast<std::size_t>(std::ceil(q * static_cast<double>(n)));
    if (k == 0) k = 1;
    if (k > n) k = n;
    return samples[k - 1];
}

double mean(const std::vector<double>& xs) {
    if (xs.empty()) throw std::invalid_argument("mean: empty sample");
    double s = 0.0;
    for (double v : xs) s += v;
    return s / static_cast<double>(xs.size());
}

double median(std::vector<double> xs) {
    if (xs.empty()) throw std::invalid_argument("median: empty sample");
    std::sort(xs.begin(), xs.end());
    const std::size_t n = xs.size();
    if (n % 2 == 1) return xs[n / 2];
    return 0.5 * (xs[n / 2 - 1] + xs[n / 2]);
}

}  // namespace fdilab::stats
