#pragma once

namespace switchmc {

// Regularized lower incomplete gamma P(a,x) = gamma(a,x)/Gamma(a), a > 0,
// x >= 0. Series expansion for x < a+1, Lentz continued fraction otherwise;
// prefactors evaluated in log space so large x underflows to 0/1 instead of
// producing NaNs.
double gamma_p(double a, double x);

// Regularized upper incomplete gamma Q(a,x) = 1 - P(a,x).
double gamma_q(double a, double x);

// Survival function of a chi-square with df degrees of freedom.
double chi_square_sf(double df, double x);

}  // namespace switchmc
