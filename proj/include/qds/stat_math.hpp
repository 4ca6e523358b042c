#pragma once

#include <cmath>
#include <stdexcept>
#include <string>

namespace qds {

/// A probability in [0, 1].
class Probability {
public:
    explicit Probability(double value) : value_(value) {
        if (!(value >= 0.0 && value <= 1.0)) {
            throw std::domain_error("probability outside [0,1]: " + std::to_string(value));
        }
    }
    double value() const noexcept { return value_; }

private:
    double value_;
};

/// Failure probability of a bound, in (0, 1]. A value of 1 disables the
/// corresponding fluctuation term.
class FailureProb {
public:
    explicit FailureProb(double value) : value_(value) {
        if (!(value > 0.0 && value <= 1.0)) {
            throw std::domain_error("failure probability outside (0,1]: " + std::to_string(value));
        }
    }
    double value() const noexcept { return value_; }
    /// ln(1/eps), the quantity every concentration bound consumes.
    double log_inverse() const noexcept { return -std::log(value_); }

private:
    double value_;
};

inline double clamp_probability(double x) noexcept {
    return x < 0.0 ? 0.0 : (x > 1.0 ? 1.0 : x);
}

/// h(x) = -x log2 x - (1-x) log2 (1-x), with 0 log 0 = 0.
double binary_entropy(double x);

/// The unique p in [0, 0.5] with h(p) = y, by bisection to 1e-12.
double binary_entropy_inverse(double y);

/// Hoeffding deviation sqrt(n/2 ln(1/eps)).
double hoeffding_delta(double n, FailureProb eps);

/// Serfling upper bound on the error rate of an L-bit block given an observed
/// rate on a k-bit random test sample. Clamped to 1.
double serfling_error_upper(double observed_rate, double block_length, double test_size,
                            FailureProb eps_pe);

/// Finite-size correction for transferring an error rate b measured on a
/// sample of size c to a disjoint sample of size d, failing with probability a.
///
///   gamma(a,b,c,d) = sqrt( (c+d)(1-b)b / (c d ln2) * log2( (c+d)/(c d (1-b) b) * (21/a)^2 ) )
///
/// Symmetric in (c, d). Rejects b in {0, 1}.
double gamma_correction(FailureProb a, double b, double c, double d);

}  // namespace qds
