#include "kinfit/robust.hpp"

#include <algorithm>
#include <cmath>

namespace kinfit {

double digamma(double x) {
    if (!(x > 0.0)) throw Error("digamma: requires x > 0");
    double result = 0.0;
    // Shift above 12, then the asymptotic series.
    while (x < 12.0) {
        result -= 1.0 / x;
        x += 1.0;
    }
    const double inv = 1.0 / x, inv2 = inv * inv;
    result += std::log(x) - 0.5 * inv;
    result -= inv2 * (1.0 / 12.0 - inv2 * (1.0 / 120.0 - inv2 * (1.0 / 252.0 -
              inv2 * (1.0 / 240.0 - inv2 * (1.0 / 132.0)))));
    return result;
}

double trigamma(double x) {
    if (!(x > 0.0)) throw Error("trigamma: requires x > 0");
    double result = 0.0;
    while (x < 12.0) {
        result += 1.0 / (x * x);
        x += 1.0;
    }
    const double inv = 1.0 / x, inv2 = inv * inv;
    result += inv * (1.0 + 0.5 * inv);
    result += inv * inv2 * (1.0 / 6.0 - inv2 * (1.0 / 30.0 - inv2 * (1.0 / 42.0 -
              inv2 * (1.0 / 30.0 - inv2 * (5.0 / 66.0)))));
    return result;
}

std::vector<double> e_step(const std::vector<double>& distances, double nu, double sigma) {
    if (!(nu > 0.0) || !(sigma > 0.0)) throw Error("e_step: nu and sigma must be positive");
    std::vector<double> z;
    z.reserve(distances.size());
    for (double d : distances) z.push_back((nu + 1.0) / (nu + d * d / sigma));
    return z;
}

double m_step_sigma(const std::vector<double>& distances, const std::vector<double>& z) {
    if (distances.empty() || distances.size() != z.size())
        throw Error("m_step_sigma: mismatched or empty inputs");
    double sum = 0.0;
    for (std::size_t i = 0; i < z.size(); ++i) sum += z[i] * distances[i] * distances[i];
    return std::max(sum / double(distances.size()), 1e-30);
}

double nu_equation(double nu, double mean_logz_minus_z) {
    return -digamma(0.5 * nu) + std::log(0.5 * nu) + 1.0 + digamma(0.5 * (nu + 1.0)) -
           std::log(0.5 * (nu + 1.0)) + mean_logz_minus_z;
}

double m_step_nu(const std::vector<double>& z, std::pair<double, double> bracket) {
    double s = 0.0;
    for (double zi : z) {
        if (!(zi > 0.0)) throw Error("m_step_nu: z_i must be positive");
        s += std::log(zi) - zi;
    }
    const double mean = s / double(z.size());

    double lo = bracket.first, hi = bracket.second;
    double flo = nu_equation(lo, mean), fhi = nu_equation(hi, mean);
    if (flo * fhi > 0.0) return std::abs(flo) < std::abs(fhi) ? lo : hi;

    // Bisection in log-nu with Newton refinement; the equation is smooth and
    // near-monotone on the bracket.
    double nu = std::sqrt(lo * hi);
    for (int it = 0; it < 100; ++it) {
        const double f = nu_equation(nu, mean);
        if (std::abs(f) < 1e-8) break;
        if (f * flo < 0.0) {
            hi = nu;
        } else {
            lo = nu;
            flo = f;
        }
        const double dfdnu = -0.5 * trigamma(0.5 * nu) + 1.0 / nu +
                             0.5 * trigamma(0.5 * (nu + 1.0)) - 1.0 / (nu + 1.0);
        double next = nu - f / dfdnu;
        if (!(next > lo) || !(next < hi)) next = std::sqrt(lo * hi);
        if (std::abs(next - nu) < 1e-12 * nu) {
            nu = next;
            break;
        }
        nu = next;
    }
    return nu;
}

FitReport robust_fit(const PointCloud& cloud, const FitConfig& config) {
    if (cloud.size() < 10) throw InsufficientPoints("robust_fit: need at least 10 oriented points");

    FitReport report;
    report.transform = compute_normalization(cloud);
    const PointCloud normalized = apply_normalization(cloud, report.transform);
    const auto forms = detail::prepare_forms(normalized, config);
    const std::size_t n = normalized.size();

    // Non-robust warm start.
    Eigen::VectorXd m = detail::initial_guess(forms, config.order);
    double eigenvalue = 0.0;
    m = solve_once(forms, m, {}, &eigenvalue);

    auto distances_at = [&](const Eigen::VectorXd& mv) {
        const FieldParams params = FieldParams::from_flat(mv, config.order);
        std::vector<double> d(n);
        for (std::size_t i = 0; i < n; ++i) d[i] = distance(normalized.points[i], params, config.w_p);
        return d;
    };

    // Trimmed refinement of the warm start: refit on the 70% smallest
    // residuals, re-seeding the eigen iteration from the trimmed pencil each
    // round. A structured outlier cluster can park the contaminated
    // least-squares solution in a basin the soft EM weights never escape;
    // hard trimming reaches the majority structure first.
    std::vector<double> d;
    for (int round = 0; round < 5; ++round) {
        d = distances_at(m);
        std::vector<double> a(n);
        for (std::size_t i = 0; i < n; ++i) a[i] = std::abs(d[i]);
        std::vector<double> sorted = a;
        const std::size_t kth = std::size_t(0.7 * double(n));
        std::nth_element(sorted.begin(), sorted.begin() + kth, sorted.end());
        std::vector<double> w(n);
        for (std::size_t i = 0; i < n; ++i) w[i] = a[i] <= sorted[kth] ? 1.0 : 0.0;
        m = detail::initial_guess(forms, config.order, w);
        for (int k = 0; k < 10; ++k) m = solve_once(forms, m, w, &eigenvalue);
    }

    // Initialize the scale from the median squared distance so the trimmed
    // tail cannot inflate it and flatten the first E-step.
    d = distances_at(m);
    std::vector<double> d2(n);
    for (std::size_t i = 0; i < n; ++i) d2[i] = d[i] * d[i];
    std::nth_element(d2.begin(), d2.begin() + n / 2, d2.end());
    double sigma = std::max(d2[n / 2], 1e-30);
    double nu = 10.0;
    std::vector<double> z(n, 1.0);

    for (int it = 0; it < config.iterations; ++it) {
        d = distances_at(m);
        // Inner EM on (z, sigma, nu) at fixed distances, run to convergence;
        // a single E/M sweep per outer round leaves nu crawling.
        for (int inner = 0; inner < 200; ++inner) {
            z = e_step(d, nu, sigma);
            sigma = m_step_sigma(d, z);
            const double nu_next = m_step_nu(z, config.nu_bracket);
            const bool done = std::abs(nu_next - nu) < 1e-4 * nu;
            nu = nu_next;
            if (done) break;
        }
        z = e_step(d, nu, sigma);
        m = solve_once(forms, m, z, &eigenvalue);
        report.iterations_run = it + 1;
        double obj = 0.0;
        for (std::size_t i = 0; i < n; ++i)
            obj += z[i] * m.dot(forms[i].M * m) / m.dot(forms[i].N * m);
        report.objective_history.push_back(obj);
    }

    report.params = FieldParams::from_flat(m, config.order);
    report.eigenvalue = eigenvalue;
    report.nu = nu;
    report.sigma = sigma;
    report.weights = z;
    report.rmse = detail::rmse_of(normalized, report.params, config.w_p);

    d = distances_at(m);
    double inlier_sum = 0.0;
    std::size_t inlier_count = 0;
    for (std::size_t i = 0; i < n; ++i) {
        if (z[i] > 0.5) {
            inlier_sum += d[i] * d[i];
            ++inlier_count;
        }
    }
    if (inlier_count > 0) report.inlier_rmse = std::sqrt(inlier_sum / double(inlier_count));
    return report;
}

}  // namespace kinfit
