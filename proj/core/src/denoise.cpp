#include "roadnet/denoise.hpp"

#include <algorithm>
#include <cmath>

#include "roadnet/error.hpp"

namespace roadnet {

namespace {
constexpr double kAnchorEps = 1e-6;

double sample_negative_axis(double lambda, Rng& rng) {
    // Magnitude uniform in (lambda/2, lambda], random sign.
    const double mag = lambda / 2.0 + (lambda / 2.0) * (1.0 - rng.uniform01());
    return rng.uniform01() < 0.5 ? -mag : mag;
}
}  // namespace

double inverse_sigmoid(double p) {
    return std::log(p / (1.0 - p));
}

NoisedSample sample_noise(const Point& gt, int origin_id, Polarity polarity, double lambda,
                          double extent_w, double extent_h, Rng& rng, BandNorm band_norm) {
    if (lambda <= 0.0) throw Error("noise magnitude lambda must be positive");
    if (extent_w <= 0.0 || extent_h <= 0.0) throw Error("extent must be positive");

    NoisedSample s;
    s.origin = origin_id;
    s.polarity = polarity;
    if (polarity == Polarity::positive) {
        s.offset = {rng.uniform(-lambda / 2.0, lambda / 2.0),
                    rng.uniform(-lambda / 2.0, lambda / 2.0)};
    } else if (band_norm == BandNorm::chebyshev) {
        // Rejection sample the square annulus lambda/2 < max-norm <= lambda.
        do {
            s.offset = {rng.uniform(-lambda, lambda), rng.uniform(-lambda, lambda)};
        } while (s.offset.max_norm() <= lambda / 2.0);
    } else {
        s.offset = {sample_negative_axis(lambda, rng), sample_negative_axis(lambda, rng)};
    }

    const double nx = std::clamp((gt.x + s.offset.x) / extent_w, kAnchorEps, 1.0 - kAnchorEps);
    const double ny = std::clamp((gt.y + s.offset.y) / extent_h, kAnchorEps, 1.0 - kAnchorEps);
    s.anchor = {inverse_sigmoid(nx), inverse_sigmoid(ny)};
    return s;
}

BandClass classify_offset(const Point& offset, double lambda, BandNorm band_norm) {
    if (lambda <= 0.0) throw Error("noise magnitude lambda must be positive");
    if (band_norm == BandNorm::chebyshev) {
        const double m = offset.max_norm();
        if (m <= lambda / 2.0) return BandClass::positive;
        if (m <= lambda) return BandClass::negative;
        return BandClass::out_of_band;
    }
    const double ax = std::abs(offset.x);
    const double ay = std::abs(offset.y);
    if (ax <= lambda / 2.0 && ay <= lambda / 2.0) return BandClass::positive;
    if (ax > lambda / 2.0 && ax <= lambda && ay > lambda / 2.0 && ay <= lambda) {
        return BandClass::negative;
    }
    return BandClass::out_of_band;
}

}  // namespace roadnet
