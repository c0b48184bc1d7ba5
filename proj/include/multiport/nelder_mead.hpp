#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <vector>

namespace multiport {

struct NelderMeadResult {
    std::vector<double> x;
    double fx = 0.0;
    int iterations = 0;
    bool converged = false;
};

/// Plain Nelder-Mead downhill simplex with the standard coefficients
/// (reflect 1, expand 2, contract 0.5, shrink 0.5). Terminates when the
/// relative spread 2|f_worst - f_best| / (|f_worst| + |f_best| + 1e-12)
/// drops to ftol, or after max_iters sweeps. No derivatives, no bounds;
/// callers bake constraints into the objective (e.g. by normalizing or
/// taking magnitudes of parameters).
template <typename F>
NelderMeadResult nelder_mead(F&& f, const std::vector<double>& x0, const std::vector<double>& step,
                             int max_iters, double ftol) {
    const std::size_t n = x0.size();
    std::vector<std::vector<double>> pts(n + 1, x0);
    for (std::size_t i = 0; i < n; ++i) pts[i + 1][i] += step.size() == 1 ? step[0] : step[i];
    std::vector<double> fv(n + 1);
    for (std::size_t i = 0; i <= n; ++i) fv[i] = f(pts[i]);

    std::vector<std::size_t> order(n + 1);
    NelderMeadResult res;
    for (res.iterations = 0; res.iterations < max_iters; ++res.iterations) {
        std::iota(order.begin(), order.end(), std::size_t{0});
        std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return fv[a] < fv[b]; });
        const std::size_t best = order[0], worst = order[n], second = order[n - 1];

        double spread = 2.0 * std::abs(fv[worst] - fv[best]) /
                        (std::abs(fv[worst]) + std::abs(fv[best]) + 1e-12);
        if (spread <= ftol) {
            res.converged = true;
            break;
        }

        std::vector<double> centroid(n, 0.0);
        for (std::size_t i = 0; i <= n; ++i) {
            if (i == worst) continue;
            for (std::size_t d = 0; d < n; ++d) centroid[d] += pts[i][d];
        }
        for (double& c : centroid) c /= static_cast<double>(n);

        auto blend = [&](double t) {
            std::vector<double> p(n);
            for (std::size_t d = 0; d < n; ++d) p[d] = centroid[d] + t * (centroid[d] - pts[worst][d]);
            return p;
        };

        std::vector<double> xr = blend(1.0);
        double fr = f(xr);
        if (fr < fv[best]) {
            std::vector<double> xe = blend(2.0);
            double fe = f(xe);
            if (fe < fr) {
                pts[worst] = std::move(xe);
                fv[worst] = fe;
            } else {
                pts[worst] = std::move(xr);
                fv[worst] = fr;
            }
            continue;
        }
        if (fr < fv[second]) {
            pts[worst] = std::move(xr);
            fv[worst] = fr;
            continue;
        }
        // contraction: outside if the reflected point improved on the worst,
        // inside otherwise
        std::vector<double> xc = blend(fr < fv[worst] ? 0.5 : -0.5);
        double fc = f(xc);
        if (fc < std::min(fr, fv[worst])) {
            pts[worst] = std::move(xc);
            fv[worst] = fc;
            continue;
        }
        for (std::size_t i = 0; i <= n; ++i) {  // shrink toward the best vertex
            if (i == best) continue;
            for (std::size_t d = 0; d < n; ++d)
                pts[i][d] = pts[best][d] + 0.5 * (pts[i][d] - pts[best][d]);
            fv[i] = f(pts[i]);
        }
    }

    std::size_t argmin = 0;
    for (std::size_t i = 1; i <= n; ++i)
        if (fv[i] < fv[argmin]) argmin = i;
    res.x = pts[argmin];
    res.fx = fv[argmin];
    return res;
}

}  // namespace multiport
