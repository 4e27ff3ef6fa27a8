#pragma once

// Paired t-test with Bonferroni correction and the +/-5% replication gate.

#include <string>
#include <vector>

namespace seqlab {

struct SignificanceResult {
    double raw_p = 1.0;
    double corrected_p = 1.0;
    int num_tests = 1;
    bool significant = false; // at alpha = 0.05 after correction
};

struct ReplicationVerdict {
    double observed = 0;
    double reported = 0;
    double relative_diff = 0; // signed, (observed - reported) / reported
    bool replicated = false;  // |relative_diff| <= 0.05
};

// two-tailed p-value of the Student-t distribution via the regularized
// incomplete beta function
double student_t_two_tailed_p(double t, double dof);

SignificanceResult paired_ttest_bonferroni(const std::vector<double>& a,
                                           const std::vector<double>& b, int num_tests);

ReplicationVerdict replication_check(double observed, double reported);

} // namespace seqlab
