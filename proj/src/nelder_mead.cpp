#include "nlmvs/nelder_mead.hpp"

#include "nlmvs/errors.hpp"

#include <algorithm>
#include <cmath>

namespace nlmvs {

namespace {

void clamp_to_box(std::vector<double>& x, const std::vector<double>& lo,
                  const std::vector<double>& hi) {
    for (size_t i = 0; i < x.size(); ++i) x[i] = std::min(std::max(x[i], lo[i]), hi[i]);
}

} // namespace

NelderMeadResult nelder_mead(const std::function<double(const std::vector<double>&)>& f,
                             std::vector<double> x0, const std::vector<double>& lower,
                             const std::vector<double>& upper, const NelderMeadOptions& opts) {
    const size_t n = x0.size();
    if (n == 0 || lower.size() != n || upper.size() != n)
        throw Error(ErrorCategory::Config, "nelder-mead: dimension mismatch");
    clamp_to_box(x0, lower, upper);

    NelderMeadResult best;
    best.x = x0;
    best.fx = std::numeric_limits<double>::max();
    int evals = 0;

    auto eval = [&](const std::vector<double>& x) {
        double v = f(x);
        ++evals;
        if (std::isfinite(v) && v < best.fx) {
            best.fx = v;
            best.x = x;
        }
        return std::isfinite(v) ? v : std::numeric_limits<double>::max();
    };

    const double alpha = 1.0, gamma = 2.0, rho = 0.5, sigma = 0.5;

    std::vector<double> start = x0;
    for (int restart = 0; restart <= opts.max_restarts && evals < opts.max_evals; ++restart) {
        // simplex around the start point
        std::vector<std::vector<double>> sx(n + 1, start);
        std::vector<double> sf(n + 1);
        double shrink = 1.0 / (restart + 1);
        for (size_t i = 0; i < n; ++i) {
            double step = opts.initial_step_rel * shrink * (upper[i] - lower[i]);
            sx[i + 1][i] += (sx[i + 1][i] + step <= upper[i]) ? step : -step;
            clamp_to_box(sx[i + 1], lower, upper);
        }
        for (size_t i = 0; i <= n && evals < opts.max_evals; ++i) sf[i] = eval(sx[i]);

        while (evals < opts.max_evals) {
            std::vector<size_t> order(n + 1);
            for (size_t i = 0; i <= n; ++i) order[i] = i;
            std::sort(order.begin(), order.end(), [&](size_t a, size_t b) { return sf[a] < sf[b]; });

            double fbest = sf[order[0]], fworst = sf[order[n]];
            double spread = 0;
            for (size_t i = 0; i < n; ++i)
                spread = std::max(spread, std::abs(sx[order[0]][i] - sx[order[n]][i]));
            if (spread < opts.xtol || std::abs(fworst - fbest) < opts.ftol) break;

            std::vector<double> centroid(n, 0.0);
            for (size_t k = 0; k < n; ++k)
                for (size_t i = 0; i < n; ++i) centroid[i] += sx[order[k]][i] / n;

            size_t wi = order[n];
            auto make_point = [&](double coef) {
                std::vector<double> p(n);
                for (size_t i = 0; i < n; ++i) p[i] = centroid[i] + coef * (centroid[i] - sx[wi][i]);
                clamp_to_box(p, lower, upper);
                return p;
            };

            std::vector<double> xr = make_point(alpha);
            double fr = eval(xr);
            if (fr < fbest) {
                std::vector<double> xe = make_point(gamma);
                double fe = eval(xe);
                if (fe < fr) {
                    sx[wi] = xe;
                    sf[wi] = fe;
                } else {
                    sx[wi] = xr;
                    sf[wi] = fr;
                }
            } else if (fr < sf[order[n - 1]]) {
                sx[wi] = xr;
                sf[wi] = fr;
            } else {
                std::vector<double> xc = make_point(-rho);
                double fc = eval(xc);
                if (fc < sf[wi]) {
                    sx[wi] = xc;
                    sf[wi] = fc;
                } else {
                    for (size_t k = 1; k <= n && evals < opts.max_evals; ++k) {
                        size_t i = order[k];
                        for (size_t j = 0; j < n; ++j)
                            sx[i][j] = sx[order[0]][j] + sigma * (sx[i][j] - sx[order[0]][j]);
                        sf[i] = eval(sx[i]);
                    }
                }
            }
        }
        start = best.x; // restart around the incumbent
    }

    best.evals = evals;
    return best;
}

} // namespace nlmvs
