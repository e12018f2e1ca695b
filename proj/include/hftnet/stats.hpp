#pragma once

#include <cmath>
#include <span>

namespace hftnet::stats {

// standard normal CDF
inline double normal_cdf(double z) {
    return 0.5 * std::erfc(-z * 0.7071067811865475244);
}

inline double mean(std::span<const double> v) {
    double s = 0.0;
    for (double x : v) s += x;
    return s / static_cast<double>(v.size());
}

// sample standard deviation, divides by n-1
inline double sample_sd(std::span<const double> v) {
    const double m = mean(v);
    double ss = 0.0;
    for (double x : v) ss += (x - m) * (x - m);
    return std::sqrt(ss / static_cast<double>(v.size() - 1));
}

// population variance, divides by n
inline double population_variance(std::span<const double> v) {
    const double m = mean(v);
    double ss = 0.0;
    for (double x : v) ss += (x - m) * (x - m);
    return ss / static_cast<double>(v.size());
}

// population central moment of order k
inline double central_moment(std::span<const double> v, int k) {
    const double m = mean(v);
    double s = 0.0;
    for (double x : v) s += std::pow(x - m, k);
    return s / static_cast<double>(v.size());
}

}  // namespace hftnet::stats
