#pragma once

#include "fusionkit/types.hpp"

namespace fusionkit {

class Rng;

/// Lower-truncated normal: the law of W | W > lower_bound, W ~ N(mean, variance).
struct TruncatedNormalSpec {
  double mean = 0.0;
  double variance = 1.0;
  double lower_bound = 0.0;
};

struct TnMoments {
  double e1;  // E[U]
  double e2;  // E[U^2]
  double variance() const { return e2 - e1 * e1; }
};

/// First two moments of TN(m, c^2, 0), c > 0:
///   e1 = m + c * psi(m/c)
///   e2 = m^2 + c^2 + c * m * psi(m/c)
/// Stable for m/c down to about -40 (see mills_ratio).
TnMoments tn_moments(double m, double c);

/// Moments of a general lower-truncated normal.
TnMoments tn_moments(const TruncatedNormalSpec& spec);

/// One draw from the truncated normal. Inverse-CDF transform when the bound
/// is at most mean + 5 sd; exponential-proposal rejection (Robert 1995) in
/// the far tail where the inverse CDF runs out of precision.
double tn_sample(const TruncatedNormalSpec& spec, Rng& rng);

}  // namespace fusionkit
