#include "qds/stat_math.hpp"

#include <numbers>

namespace qds {

double binary_entropy(double x) {
    if (!(x >= 0.0 && x <= 1.0)) {
        throw std::domain_error("binary_entropy: argument outside [0,1]");
    }
    if (x == 0.0 || x == 1.0) return 0.0;
    return -x * std::log2(x) - (1.0 - x) * std::log2(1.0 - x);
}

double binary_entropy_inverse(double y) {
    if (!(y >= 0.0 && y <= 1.0)) {
        throw std::domain_error("binary_entropy_inverse: argument outside [0,1]");
    }
    if (y == 0.0) return 0.0;
    if (y == 1.0) return 0.5;
    double lo = 0.0;
    double hi = 0.5;
    // h is strictly increasing on [0, 0.5]
    while (hi - lo > 1e-13) {
        const double mid = 0.5 * (lo + hi);
        if (binary_entropy(mid) < y) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    return 0.5 * (lo + hi);
}

double hoeffding_delta(double n, FailureProb eps) {
    if (n < 0.0) throw std::invalid_argument("hoeffding_delta: negative sample size");
    if (n == 0.0) return 0.0;
    return std::sqrt(0.5 * n * eps.log_inverse());
}

double serfling_error_upper(double observed_rate, double block_length, double test_size,
                            FailureProb eps_pe) {
    if (test_size < 1.0) throw std::invalid_argument("serfling_error_upper: test size k must be >= 1");
    if (block_length < 2.0) throw std::invalid_argument("serfling_error_upper: block length L must be >= 2");
    const double half = 0.5 * block_length;
    const double spread = (half + 1.0) * (half + test_size) / (2.0 * test_size);
    const double correction = (2.0 / block_length) * std::sqrt(spread * eps_pe.log_inverse());
    return clamp_probability(observed_rate + correction);
}

double gamma_correction(FailureProb a, double b, double c, double d) {
    if (!(b > 0.0 && b < 1.0)) throw std::domain_error("gamma_correction: b must lie in (0,1)");
    if (!(c > 0.0 && d > 0.0)) throw std::domain_error("gamma_correction: sample sizes must be positive");
    const double variance = b * (1.0 - b);
    const double ratio = (c + d) / (c * d);
    const double confidence = 21.0 / a.value();
    const double log_term = std::log2(ratio / variance * confidence * confidence);
    if (log_term <= 0.0) return 0.0;
    return std::sqrt(ratio * variance / std::numbers::ln2 * log_term);
}

}  // namespace qds
