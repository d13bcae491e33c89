#pragma once

// Trajectory post-processing: Poincare sections through hyperplanes,
// classification of the long-time behavior (stationary / convergent /
// periodic / limit cycle / quasi-periodic), an estimate of the number of
// rationally independent frequencies, and entropy time series.
//
// Classification logic, in order:
//   Stationary               total variation below 1e-8
//   ConvergentToEquilibrium  tail variation below 1e-6 and the tail point
//                            Newton-polishes onto an equilibrium
//   Periodic                 a recurrence time T reproduces the whole
//                            trajectory to 1e-6
//   LimitCycle               T reproduces the tail only, and successive
//                            section returns contract
//   QuasiPeriodic            bounded motion with non-repeating section points

#include <complex>
#include <optional>
#include <vector>

#include "evolution.hpp"
#include "state_space.hpp"
#include "stationary.hpp"

namespace qutrit {

struct DegenerateSection : std::runtime_error {
    explicit DegenerateSection(const std::string& what) : std::runtime_error(what) {}
};
struct InsufficientSpan : std::runtime_error {
    explicit InsufficientSpan(const std::string& what) : std::runtime_error(what) {}
};

enum class CrossingDirection { Positive, Negative, Both };

struct SectionSpec {
    Vec8 normal = unit_vector(0);
    Vec8 point = Vec8::Zero();
    CrossingDirection direction = CrossingDirection::Both;
};

namespace detail {

// cubic Hermite interpolation of the trajectory between two samples,
// s in [0,1], derivatives from the flow field
inline Vec8 hermite_state(const Vec8& y0, const Vec8& y1, const Vec8& k0, const Vec8& k1,
                          double h, double s) {
    const double s2 = s * s, s3 = s2 * s;
    return (2 * s3 - 3 * s2 + 1) * y0 + (s3 - 2 * s2 + s) * h * k0
        + (-2 * s3 + 3 * s2) * y1 + (s3 - s2) * h * k1;
}

// state at arbitrary time within the sampled span
inline Vec8 interp_state(const Trajectory& traj, const EvolutionParams& p, double t) {
    const auto& ts = traj.times;
    if (t <= ts.front()) return traj.states.front();
    if (t >= ts.back()) return traj.states.back();
    size_t hi = std::upper_bound(ts.begin(), ts.end(), t) - ts.begin();
    const size_t lo = hi - 1;
    const double h = ts[hi] - ts[lo];
    const double s = (t - ts[lo]) / h;
    return hermite_state(traj.states[lo], traj.states[hi], riccati_rhs(traj.states[lo], p),
                         riccati_rhs(traj.states[hi], p), h, s);
}

}  // namespace detail

// Transversal intersections of the trajectory with the hyperplane
// n.(xi - point) = 0, located by cubic Hermite interpolation between the
// bracketing samples.
inline std::vector<Vec8> poincare(const Trajectory& traj, const SectionSpec& spec,
                                  const EvolutionParams& p) {
    const double nn = spec.normal.norm();
    if (!(nn > 0.0)) throw std::invalid_argument("poincare: zero section normal");
    const Vec8 n = spec.normal / nn;

    std::vector<double> g(traj.states.size());
    double max_abs = 0.0;
    for (size_t i = 0; i < traj.states.size(); ++i) {
        g[i] = n.dot(traj.states[i] - spec.point);
        max_abs = std::max(max_abs, std::abs(g[i]));
    }
    if (max_abs < 1e-12)
        throw DegenerateSection("poincare: trajectory lies inside the section plane");

    std::vector<Vec8> crossings;
    for (size_t i = 0; i + 1 < traj.states.size(); ++i) {
        const double g0 = g[i], g1 = g[i + 1];
        if (g0 == 0.0) continue;  // counted at the previous interval's endpoint
        const bool upward = g0 < 0.0 && g1 >= 0.0;
        const bool downward = g0 > 0.0 && g1 <= 0.0;
        if (!(upward || downward)) continue;
        if (spec.direction == CrossingDirection::Positive && !upward) continue;
        if (spec.direction == CrossingDirection::Negative && !downward) continue;

        const Vec8& y0 = traj.states[i];
        const Vec8& y1 = traj.states[i + 1];
        const Vec8 k0 = riccati_rhs(y0, p);
        const Vec8 k1 = riccati_rhs(y1, p);
        const double h = traj.times[i + 1] - traj.times[i];
        // root of the scalar cubic Hermite of g by bisection
        double lo = 0.0, hi = 1.0;
        auto gval = [&](double s) {
            return n.dot(detail::hermite_state(y0, y1, k0, k1, h, s) - spec.point);
        };
        double glo = g0;
        for (int it = 0; it < 80; ++it) {
            const double mid = 0.5 * (lo + hi);
            const double gm = gval(mid);
            if ((gm < 0.0) == (glo < 0.0)) {
                lo = mid;
                glo = gm;
            } else {
                hi = mid;
            }
        }
        crossings.push_back(detail::hermite_state(y0, y1, k0, k1, h, 0.5 * (lo + hi)));
    }
    return crossings;
}

enum class TrajectoryLabel { Stationary, ConvergentToEquilibrium, Periodic, LimitCycle,
                             QuasiPeriodic };

inline const char* to_string(TrajectoryLabel l) {
    switch (l) {
        case TrajectoryLabel::Stationary: return "stationary";
        case TrajectoryLabel::ConvergentToEquilibrium: return "convergent-to-equilibrium";
        case TrajectoryLabel::Periodic: return "periodic";
        case TrajectoryLabel::LimitCycle: return "limit-cycle";
        case TrajectoryLabel::QuasiPeriodic: return "quasi-periodic";
    }
    return "?";
}

struct TrajectoryClass {
    TrajectoryLabel label = TrajectoryLabel::QuasiPeriodic;
    std::optional<double> period_estimate;
    std::optional<Vec8> limit_point;
    double total_variation = 0.0;
    double tail_variation = 0.0;
    double recurrence_mismatch = std::numeric_limits<double>::infinity();
    int section_clusters = 0;
    int frequency_count = 0;
};

namespace detail {

// greedy count of rationally independent base frequencies among the peak
// frequencies of a scalar projection of the trajectory
inline int frequency_count_estimate(const Trajectory& traj) {
    const size_t m = traj.states.size();
    if (m < 64) return 0;
    Rng rng(12345);
    Vec8 u = random_vec8(rng);
    u.normalize();
    std::vector<double> x(m);
    double mean = 0.0;
    for (size_t i = 0; i < m; ++i) {
        x[i] = u.dot(traj.states[i]);
        mean += x[i];
    }
    mean /= double(m);
    for (double& v : x) v -= mean;

    const size_t kmax = std::min<size_t>(m / 2, 2048);
    std::vector<double> mag(kmax + 1, 0.0);
    const double t_end = traj.times.back();
    for (size_t k = 1; k <= kmax; ++k) {
        Complex acc(0, 0);
        const double w = -2.0 * M_PI * double(k) / double(m);
        // Goertzel-style accumulation
        const Complex rot(std::cos(w), std::sin(w));
        Complex phase(1, 0);
        for (size_t i = 0; i < m; ++i) {
            acc += x[i] * phase;
            phase *= rot;
        }
        mag[k] = std::abs(acc);
    }
    double peak = 0.0;
    for (double v : mag) peak = std::max(peak, v);
    if (peak <= 0.0) return 0;

    std::vector<double> freqs;  // angular frequencies of the spectral peaks
    for (size_t k = 2; k + 1 < mag.size(); ++k) {
        if (mag[k] < 0.05 * peak) continue;
        if (!(mag[k] >= mag[k - 1] && mag[k] >= mag[k + 1])) continue;
        // parabolic refinement of the bin position
        const double denom = mag[k - 1] - 2.0 * mag[k] + mag[k + 1];
        double shift = 0.0;
        if (std::abs(denom) > 1e-300)
            shift = std::clamp(0.5 * (mag[k - 1] - mag[k + 1]) / denom, -0.5, 0.5);
        freqs.push_back(2.0 * M_PI * (double(k) + shift) / t_end);
        if (freqs.size() >= 12) break;
    }
    const double bin = 2.0 * M_PI / t_end;
    std::vector<double> basis;
    for (double f : freqs) {
        bool representable = false;
        for (size_t i = 0; i < basis.size() && !representable; ++i) {
            for (int n1 = -6; n1 <= 6 && !representable; ++n1) {
                if (std::abs(n1 * basis[i] - f) < 1.2 * bin && n1 != 0) representable = true;
                for (size_t j = i + 1; j < basis.size() && !representable; ++j)
                    for (int n2 = -6; n2 <= 6; ++n2)
                        if ((n1 != 0 || n2 != 0)
                            && std::abs(n1 * basis[i] + n2 * basis[j] - f) < 1.2 * bin) {
                            representable = true;
                            break;
                        }
            }
        }
        if (!representable && basis.size() < 3) basis.push_back(f);
    }
    return static_cast<int>(basis.size());
}

// largest mismatch of the shift-by-T map over probe indices in [begin, end)
inline double recurrence_mismatch(const Trajectory& traj, const EvolutionParams& p, double T,
                                  size_t begin, size_t end, int probes = 64) {
    double worst = 0.0;
    const size_t span = end - begin;
    const size_t stride = std::max<size_t>(1, span / probes);
    for (size_t i = begin; i < end; i += stride) {
        if (traj.times[i] + T > traj.times.back()) break;
        const Vec8 shifted = interp_state(traj, p, traj.times[i] + T);
        worst = std::max(worst, (shifted - traj.states[i]).cwiseAbs().maxCoeff());
    }
    return worst;
}

inline int cluster_count(const std::vector<Vec8>& points, double radius) {
    std::vector<Vec8> centers;
    for (const Vec8& q : points) {
        bool hit = false;
        for (const Vec8& c : centers)
            if ((q - c).norm() < radius) {
                hit = true;
                break;
            }
        if (!hit) centers.push_back(q);
    }
    return static_cast<int>(centers.size());
}

}  // namespace detail

inline TrajectoryClass classify_trajectory(const Trajectory& traj, const EvolutionParams& p) {
    const size_t m = traj.states.size();
    if (m < 16) throw InsufficientSpan("classify_trajectory: too few samples");
    const double scale = std::max({p.a.norm(), p.b.norm(), 1.0});
    const double t_end = traj.times.back();
    if (t_end * scale < 50.0)
        throw InsufficientSpan("classify_trajectory: span below 50 characteristic times");

    TrajectoryClass out;
    for (size_t i = 0; i + 1 < m; ++i)
        out.total_variation += (traj.states[i + 1] - traj.states[i]).norm();
    if (out.total_variation < 1e-8) {
        out.label = TrajectoryLabel::Stationary;
        out.limit_point = traj.states.back();
        return out;
    }

    const size_t tail_begin = 3 * m / 4;
    const Vec8& last = traj.states.back();
    for (size_t i = tail_begin; i < m; ++i)
        out.tail_variation = std::max(out.tail_variation, (traj.states[i] - last).norm());

    if (out.tail_variation < 1e-6) {
        // Newton-polish the tail point onto the equilibrium it approaches
        Vec8 xi = last;
        for (int it = 0; it < 40; ++it) {
            const Vec8 rhs = riccati_rhs(xi, p);
            if (rhs.norm() < 1e-12) break;
            const Vec8 delta =
                riccati_jacobian(xi, p).fullPivLu().solve(-rhs);
            if (!delta.allFinite() || delta.norm() > 1.0) break;
            xi += delta;
        }
        if (riccati_rhs(xi, p).norm() < 1e-9 && (xi - last).norm() < 1e-3) {
            out.label = TrajectoryLabel::ConvergentToEquilibrium;
            out.limit_point = xi;
            return out;
        }
    }

    // recurrence-time search over the trailing half
    const size_t window_begin = m / 2;
    const double dt = traj.times[1] - traj.times[0];
    std::optional<double> period;
    const size_t lag_max = (m - window_begin) - 2;
    double prev = std::numeric_limits<double>::infinity();
    int candidates_tried = 0;
    std::vector<double> coarse(lag_max + 1, std::numeric_limits<double>::infinity());
    for (size_t lag = 1; lag <= lag_max; ++lag)
        coarse[lag] =
            detail::recurrence_mismatch(traj, p, lag * dt, window_begin, m - lag, 48);
    for (size_t lag = 2; lag + 1 <= lag_max && candidates_tried < 24; ++lag) {
        if (coarse[lag] > 1e-2) continue;
        if (!(coarse[lag] <= coarse[lag - 1] && coarse[lag] <= coarse[lag + 1])) continue;
        ++candidates_tried;
        // golden-section refinement of the mismatch around the coarse lag
        double lo = (lag - 1) * dt, hi = (lag + 1) * dt;
        const double gr = 0.5 * (std::sqrt(5.0) - 1.0);
        double x1 = hi - gr * (hi - lo), x2 = lo + gr * (hi - lo);
        double f1 = detail::recurrence_mismatch(traj, p, x1, tail_begin, m, 48);
        double f2 = detail::recurrence_mismatch(traj, p, x2, tail_begin, m, 48);
        for (int it = 0; it < 70; ++it) {
            if (f1 < f2) {
                hi = x2;
                x2 = x1;
                f2 = f1;
                x1 = hi - gr * (hi - lo);
                f1 = detail::recurrence_mismatch(traj, p, x1, tail_begin, m, 48);
            } else {
                lo = x1;
                x1 = x2;
                f1 = f2;
                x2 = lo + gr * (hi - lo);
                f2 = detail::recurrence_mismatch(traj, p, x2, tail_begin, m, 48);
            }
        }
        const double T = 0.5 * (lo + hi);
        const double mismatch = detail::recurrence_mismatch(traj, p, T, tail_begin, m, 96);
        if (mismatch < 1e-6) {
            period = T;
            out.recurrence_mismatch = mismatch;
            break;
        }
        prev = std::min(prev, mismatch);
    }
    out.frequency_count = detail::frequency_count_estimate(traj);

    // auto-section for return statistics: plane through a tail point,
    // transversal by construction
    std::vector<Vec8> crossings;
    {
        const size_t ref = std::min(m - 2, tail_begin + (m - tail_begin) / 3);
        SectionSpec spec;
        spec.point = traj.states[ref];
        spec.normal = riccati_rhs(traj.states[ref], p);
        spec.direction = CrossingDirection::Positive;
        if (spec.normal.norm() > 1e-12) {
            spec.normal.normalize();
            crossings = poincare(traj, spec, p);
        }
    }
    out.section_clusters = detail::cluster_count(crossings, 1e-5);

    if (period) {
        out.period_estimate = period;
        const double global =
            detail::recurrence_mismatch(traj, p, *period, 0, m, 96);
        if (global < 1e-6) {
            out.label = TrajectoryLabel::Periodic;
            return out;
        }
        // limit cycle: gaps between successive same-direction returns die out
        bool contracting = crossings.size() >= 6;
        if (contracting) {
            std::vector<double> gaps;
            for (size_t k = 0; k + 1 < crossings.size(); ++k)
                gaps.push_back((crossings[k + 1] - crossings[k]).norm());
            const size_t q = std::max<size_t>(1, gaps.size() / 3);
            double early = 0.0, late = 0.0;
            for (size_t k = 0; k < q; ++k) early = std::max(early, gaps[k]);
            for (size_t k = gaps.size() - q; k < gaps.size(); ++k)
                late = std::max(late, gaps[k]);
            contracting = late < 0.25 * early || late < 1e-5;
        }
        out.label = contracting ? TrajectoryLabel::LimitCycle : TrajectoryLabel::QuasiPeriodic;
        return out;
    }
    (void)prev;
    out.label = TrajectoryLabel::QuasiPeriodic;
    return out;
}

// entropy at every trajectory sample
inline std::vector<double> entropy_series(const Trajectory& traj) {
    std::vector<double> out;
    out.reserve(traj.states.size());
    for (const Vec8& s : traj.states) out.push_back(entropy(s));
    return out;
}

}  // namespace qutrit
