#include "seqlab/stats_test.hpp"

#include <cmath>
#include <stdexcept>

#include "seqlab/errors.hpp"

namespace seqlab {

namespace {

// continued-fraction evaluation of the regularized incomplete beta I_x(a,b)
double betacf(double a, double b, double x) {
    const int max_iter = 300;
    const double eps = 3e-14;
    const double fpmin = 1e-300;
    const double qab = a + b, qap = a + 1.0, qam = a - 1.0;
    double c = 1.0;
    double d = 1.0 - qab * x / qap;
    if (std::fabs(d) < fpmin) d = fpmin;
    d = 1.0 / d;
    double h = d;
    for (int m = 1; m <= max_iter; ++m) {
        const int m2 = 2 * m;
        double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if (std::fabs(d) < fpmin) d = fpmin;
        c = 1.0 + aa / c;
        if (std::fabs(c) < fpmin) c = fpmin;
        d = 1.0 / d;
        h *= d * c;
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if (std::fabs(d) < fpmin) d = fpmin;
        c = 1.0 + aa / c;
        if (std::fabs(c) < fpmin) c = fpmin;
        d = 1.0 / d;
        const double del = d * c;
        h *= del;
        if (std::fabs(del - 1.0) < eps) break;
    }
    return h;
}

double inc_beta(double a, double b, double x) {
    if (x <= 0.0) return 0.0;
    if (x >= 1.0) return 1.0;
    const double ln_front = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) +
                            a * std::log(x) + b * std::log(1.0 - x);
    const double front = std::exp(ln_front);
    if (x < (a + 1.0) / (a + b + 2.0)) return front * betacf(a, b, x) / a;
    return 1.0 - front * betacf(b, a, 1.0 - x) / b;
}

} // namespace

double student_t_two_tailed_p(double t, double dof) {
    const double x = dof / (dof + t * t);
    return inc_beta(dof / 2.0, 0.5, x);
}

SignificanceResult paired_ttest_bonferroni(const std::vector<double>& a,
                                           const std::vector<double>& b, int num_tests) {
    if (a.size() != b.size())
        throw ContractError("paired_ttest_bonferroni: vectors must have equal length");
    const std::size_t n = a.size();
    if (n < 2) throw ContractError("paired_ttest_bonferroni: need at least 2 pairs");
    if (num_tests < 1) num_tests = 1;

    double mean = 0;
    for (std::size_t i = 0; i < n; ++i) mean += a[i] - b[i];
    mean /= (double)n;
    double var = 0;
    for (std::size_t i = 0; i < n; ++i) {
        const double d = a[i] - b[i] - mean;
        var += d * d;
    }
    var /= (double)(n - 1);

    SignificanceResult r;
    r.num_tests = num_tests;
    if (var == 0.0) {
        r.raw_p = mean == 0.0 ? 1.0 : 0.0; // degenerate convention
    } else {
        const double t = mean / std::sqrt(var / (double)n);
        r.raw_p = student_t_two_tailed_p(t, (double)(n - 1));
    }
    r.corrected_p = std::min(1.0, r.raw_p * num_tests);
    r.significant = r.corrected_p < 0.05;
    return r;
}

ReplicationVerdict replication_check(double observed, double reported) {
    if (reported <= 0.0) throw ContractError("replication_check: reported value must be > 0");
    ReplicationVerdict v;
    v.observed = observed;
    v.reported = reported;
    v.relative_diff = (observed - reported) / reported;
    v.replicated = std::fabs(v.relative_diff) <= 0.05;
    return v;
}

} // namespace seqlab
