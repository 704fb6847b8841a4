#pragma once

#include "roadnet/geometry.hpp"
#include "roadnet/rng.hpp"

namespace roadnet {

enum class Polarity { positive, negative };
enum class BandNorm { chebyshev, per_axis };
enum class BandClass { positive, negative, out_of_band };

// Ground-truth coordinate perturbed into the positive (max-norm <= lambda/2)
// or negative ((lambda/2, lambda]) band, with the 2D anchor obtained by
// normalizing and inverse-sigmoid transforming the noised coordinate.
struct NoisedSample {
    int origin = 0;  // gt node id
    Point offset;
    Polarity polarity = Polarity::positive;
    Point anchor;
};

double inverse_sigmoid(double p);

NoisedSample sample_noise(const Point& gt, int origin_id, Polarity polarity, double lambda,
                          double extent_w, double extent_h, Rng& rng,
                          BandNorm band_norm = BandNorm::chebyshev);

BandClass classify_offset(const Point& offset, double lambda,
                          BandNorm band_norm = BandNorm::chebyshev);

}  // namespace roadnet
