#pragma once

#include <array>
#include <span>
#include <string>
#include <vector>

#include "hftnet/bars.hpp"

namespace hftnet::features {

struct FeatureConfig {
    int lookback = 50;  // W
    enum class SigmaMode { global, trailing };
    SigmaMode bvc_sigma_mode = SigmaMode::global;
    double epsilon_sigma = 1e-12;

    void validate() const;
};

inline constexpr int kFeatureCount = 5;
inline const std::array<std::string, kFeatureCount> kFeatureNames = {
    "roll", "roll_impact", "kyle", "amihud", "vpin"};

// Aligned per-bar feature series for one firm; missing cells are NaN. The
// first W bars are always missing (kyle needs one extra bar of history).
struct FeatureFrame {
    std::string symbol;
    std::vector<double> roll;
    std::vector<double> roll_impact;
    std::vector<double> kyle;
    std::vector<double> amihud;
    std::vector<double> vpin;
    int64_t kyle_degenerate_count = 0;  // windows where the order-flow sum was 0

    int64_t size() const { return static_cast<int64_t>(roll.size()); }
    const std::vector<double>& column(int i) const;
    bool row_complete(int64_t t) const;
};

// Roll measure over a window of W+1 closes: 2*sqrt(|lag-1 covariance|) of the
// W price changes (population covariance over the W-1 overlapping pairs,
// both vectors demeaned).
double roll_measure(std::span<const double> closes);

// Roll measure scaled by the bar's own dollar volume; missing when that is 0.
double roll_impact(double roll, double bar_dollar_volume);

// (p_t - p_{t-W}) / sum_{tau=t-W..t} sign(p_tau - p_{tau-1}) * V_tau.
// `closes` spans p_{t-W-1}..p_t (W+2 values, the leading one feeds the first
// sign); `volumes` spans V_{t-W}..V_t (W+1 values). Missing when the
// denominator is 0; `degenerate` reports that case.
double kyle_lambda(std::span<const double> closes, std::span<const double> volumes,
                   bool* degenerate = nullptr);

// (1/W) * sum |r_tau| / dollar_volume_tau; missing when any dollar volume in
// the window is 0.
double amihud_lambda(std::span<const double> abs_returns,
                     std::span<const double> dollar_volumes);

// V * Phi(delta_p / max(sigma, epsilon)); the estimated buyer-initiated
// volume of a bar under bulk volume classification.
double bvc_buy_volume(double delta_p, double sigma, double volume, double epsilon_sigma);

// (1/W) * sum |V_tau - 2*Vbuy_tau| / V_tau over the window; in [0,1].
// Missing when any bar volume is 0.
double vpin(std::span<const double> volumes, std::span<const double> buy_volumes);

// sigma used by BVC: sd of price changes over the whole series (global mode)
// or over the trailing window (per-bar). Sample sd, n-1 denominator.
double global_delta_p_sigma(std::span<const double> closes);

FeatureFrame compute_frame(const bars::BarSeries& series, const FeatureConfig& cfg);
FeatureFrame compute_frame_serial(const bars::BarSeries& series, const FeatureConfig& cfg);

// Feature CSV: symbol,bar_index,roll,roll_impact,kyle,amihud,vpin
void write_features_csv(const std::string& path, const std::vector<FeatureFrame>& frames,
                        const std::string& manifest_id = "");
std::vector<FeatureFrame> read_features_csv(const std::string& path);

}  // namespace hftnet::features
