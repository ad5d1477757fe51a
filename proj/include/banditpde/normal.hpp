#pragma once

namespace banditpde {

// Standard normal density.
double norm_pdf(double z);

// Standard normal CDF via erfc; relative error is at the level of the
// underlying libm erfc (<= ~1e-15), including the far tails.
double norm_cdf(double z);

// Inverse standard normal CDF (Wichura's AS 241, double precision).
// Requires p in (0, 1).
double norm_quantile(double p);

// E[max(Z, 0)] for Z ~ N(mean, sd^2):  mean*Phi(mean/sd) + sd*phi(mean/sd).
// sd == 0 degenerates to max(mean, 0).
double expected_positive_part(double mean, double sd);

}  // namespace banditpde
