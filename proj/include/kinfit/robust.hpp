#pragma once

#include "kinfit/fitting.hpp"

namespace kinfit {

struct StudentTState {
    double nu = 10.0;
    double sigma = 1.0;
    std::vector<double> z;
};

double digamma(double x);
double trigamma(double x);

// Posterior mean weights z_i = (nu+1)/(nu + d_i^2/sigma).
std::vector<double> e_step(const std::vector<double>& distances, double nu, double sigma);

// sigma = (1/n) sum z_i d_i^2, clamped away from zero.
double m_step_sigma(const std::vector<double>& distances, const std::vector<double>& z);

// Root of the degrees-of-freedom equation
//   -psi(nu/2) + log(nu/2) + 1 + psi((nu+1)/2) - log((nu+1)/2)
//     + (1/n) sum(log z_i - z_i) = 0
// within the bracket; falls back to the endpoint with smaller residual when
// the equation has no sign change (Gaussian limit).
double m_step_nu(const std::vector<double>& z, std::pair<double, double> bracket);

// Residual of the degrees-of-freedom equation; exposed for verification.
double nu_equation(double nu, double mean_logz_minus_z);

FitReport robust_fit(const PointCloud& cloud, const FitConfig& config);

}  // namespace kinfit
