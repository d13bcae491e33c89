#pragma once

// Embedded Dormand-Prince 5(4) stepper with standard step-size control.  The
// integration lands exactly on every requested grid time by clipping the
// step, so sampled states carry no interpolation error.  Right-hand sides
// are autonomous.

#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

namespace qutrit {

struct StepSizeUnderflow : std::runtime_error {
    explicit StepSizeUnderflow(const std::string& what) : std::runtime_error(what) {}
};

struct IntegrateOptions {
    double rtol = 1e-10;
    double atol = 1e-12;
    double initial_step = 0.0;  // 0 -> t_end / 1e4
    long max_steps = 10'000'000;
};

template <class Vec>
struct OdeResult {
    std::vector<double> times;
    std::vector<Vec> states;
    long accepted = 0;
    long rejected = 0;
};

// Integrates y' = rhs(y) from t = 0 over the ascending grid (grid[0] may be
// 0, which just records the initial state).  Vec must behave like an Eigen
// fixed-size vector.
template <class Vec, class Rhs>
OdeResult<Vec> dopri5(Rhs&& rhs, const Vec& y0, const std::vector<double>& grid,
                      const IntegrateOptions& opts = {}) {
    static const double a21 = 1.0 / 5;
    static const double a31 = 3.0 / 40, a32 = 9.0 / 40;
    static const double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
    static const double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187,
                        a53 = 64448.0 / 6561, a54 = -212.0 / 729;
    static const double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247,
                        a64 = 49.0 / 176, a65 = -5103.0 / 18656;
    static const double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192,
                        b5 = -2187.0 / 6784, b6 = 11.0 / 84;
    static const double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920,
                        e5 = -17253.0 / 339200, e6 = 22.0 / 525, e7 = -1.0 / 40;

    if (grid.empty()) throw std::invalid_argument("dopri5: empty grid");
    for (size_t i = 1; i < grid.size(); ++i)
        if (!(grid[i] > grid[i - 1])) throw std::invalid_argument("dopri5: grid not increasing");

    OdeResult<Vec> out;
    out.times.reserve(grid.size());
    out.states.reserve(grid.size());

    const double t_end = grid.back();
    double t = 0.0;
    Vec y = y0;
    Vec k1 = rhs(y);
    double h = opts.initial_step > 0 ? opts.initial_step : t_end / 1e4;

    size_t gi = 0;
    if (grid[0] == 0.0) {
        out.times.push_back(0.0);
        out.states.push_back(y);
        ++gi;
    }

    long steps = 0;
    while (gi < grid.size()) {
        if (++steps > opts.max_steps)
            throw StepSizeUnderflow("dopri5: step budget exceeded");
        const double target = grid[gi];
        double h_step = h;
        bool clipped = false;
        // stretch slightly so rounding can never leave an ulp-sized sliver
        if (t + 1.01 * h_step >= target) {
            h_step = target - t;
            clipped = true;
        }
        if (h_step < 16.0 * std::numeric_limits<double>::epsilon() * std::max(std::abs(t), 1.0))
            throw StepSizeUnderflow("dopri5: step size underflow at t = " + std::to_string(t));

        const Vec k2 = rhs(y + h_step * (a21 * k1));
        const Vec k3 = rhs(y + h_step * (a31 * k1 + a32 * k2));
        const Vec k4 = rhs(y + h_step * (a41 * k1 + a42 * k2 + a43 * k3));
        const Vec k5 = rhs(y + h_step * (a51 * k1 + a52 * k2 + a53 * k3 + a54 * k4));
        const Vec k6 =
            rhs(y + h_step * (a61 * k1 + a62 * k2 + a63 * k3 + a64 * k4 + a65 * k5));
        const Vec ynew = y + h_step * (b1 * k1 + b3 * k3 + b4 * k4 + b5 * k5 + b6 * k6);
        const Vec k7 = rhs(ynew);
        const Vec err =
            h_step * (e1 * k1 + e3 * k3 + e4 * k4 + e5 * k5 + e6 * k6 + e7 * k7);

        double norm = 0.0;
        for (int i = 0; i < y.size(); ++i) {
            const double sc =
                opts.atol + opts.rtol * std::max(std::abs(y[i]), std::abs(ynew[i]));
            const double q = err[i] / sc;
            norm += q * q;
        }
        norm = std::sqrt(norm / y.size());

        if (norm <= 1.0) {
            t += h_step;
            y = ynew;
            k1 = k7;  // FSAL
            ++out.accepted;
            if (clipped) {
                t = target;
                out.times.push_back(t);
                out.states.push_back(y);
                ++gi;
            } else {
                h = h_step * std::clamp(0.9 * std::pow(std::max(norm, 1e-10), -0.2), 0.2, 5.0);
            }
            // after a clipped step the previous adaptive h is kept
        } else {
            ++out.rejected;
            h = h_step * std::clamp(0.9 * std::pow(norm, -0.2), 0.2, 0.9);
        }
    }
    return out;
}

}  // namespace qutrit
