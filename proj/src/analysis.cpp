#include "fcml/analysis.hpp"

#include "fcml/estimator.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <complex>
#include <functional>
#include <numbers>
#include <set>

namespace fcml {

Matrix system_matrix(const Vector& ds, double alpha) {
    const Eigen::Index n = ds.size();
    return Matrix::Identity(n, n) - alpha * ds * ds.transpose();
}

Vector system_matrix_eigenvalues(const Vector& ds, double alpha) {
    const Eigen::Index n = ds.size();
    Vector ev = Vector::Ones(n);
    if (n > 0) {
        ev[0] = 1.0 - alpha * ds.squaredNorm();
        std::sort(ev.begin(), ev.end());
    }
    return ev;
}

std::vector<Vector> switching_sequence(const DutyVector& d, const SamplingSchedule& schedule) {
    const int levels = schedule.levels();
    require(static_cast<int>(d.size()) == levels - 1, "switching_sequence: duty size != N-1");
    // One tick per half carrier step, so the extremum at grid index g is half-tick 2g.
    const CarrierGrid grid(levels, 1);
    std::vector<Vector> seq;
    seq.reserve(static_cast<std::size_t>(schedule.ndis()));
    SwitchVector s;
    for (int n = 0; n < schedule.ndis(); ++n) {
        const auto inst = schedule.instant(n);
        grid.switch_states(d, 2 * static_cast<std::int64_t>(inst.grid_index), s);
        seq.push_back(s.delta());
    }
    return seq;
}

int stacked_rank(const std::vector<Vector>& rows, double tol) {
    if (rows.empty()) {
        return 0;
    }
    const Eigen::Index cols = rows.front().size();
    Matrix m(static_cast<Eigen::Index>(rows.size()), cols);
    for (std::size_t i = 0; i < rows.size(); ++i) {
        require(rows[i].size() == cols, "stacked_rank: rows have different lengths");
        m.row(static_cast<Eigen::Index>(i)) = rows[i].transpose();
    }
    int rank = 0;
    for (Eigen::Index c = 0; c < cols && rank < m.rows(); ++c) {
        Eigen::Index pivot = rank;
        m.col(c).tail(m.rows() - rank).cwiseAbs().maxCoeff(&pivot);
        pivot += rank;
        if (std::abs(m(pivot, c)) <= tol) {
            continue;
        }
        m.row(pivot).swap(m.row(rank));
        for (Eigen::Index r = rank + 1; r < m.rows(); ++r) {
            m.row(r) -= (m(r, c) / m(rank, c)) * m.row(rank);
        }
        ++rank;
    }
    return rank;
}

PfrResult p_fr_and_beta_max(const std::vector<Vector>& seq, double alpha) {
    require(!seq.empty(), "p_fr_and_beta_max: empty sequence");
    const Eigen::Index n = seq.front().size();
    PfrResult out;
    out.p_fr = Matrix::Identity(n, n);
    for (const auto& ds : seq) {
        out.p_fr = system_matrix(ds, alpha) * out.p_fr;
    }
    if (n == 0) {
        out.beta_max = 0.0;
        return out;
    }
    Eigen::EigenSolver<Matrix> es(out.p_fr, false);
    out.beta_max = es.eigenvalues().cwiseAbs().maxCoeff();
    return out;
}

std::vector<std::pair<double, double>> beta_max_curve(const std::vector<Vector>& seq,
                                                      const std::vector<double>& alphas) {
    std::vector<std::pair<double, double>> curve;
    curve.reserve(alphas.size());
    for (double a : alphas) {
        curve.emplace_back(a, p_fr_and_beta_max(seq, a).beta_max);
    }
    return curve;
}

double alpha_lower_bound_dc(const std::vector<std::pair<double, double>>& curve, int ndis,
                            double taus, double ff_err_rate, double ve_dc) {
    require(!curve.empty(), "alpha_lower_bound_dc: empty beta curve");
    require(ndis > 0 && taus > 0.0, "alpha_lower_bound_dc: ndis and taus must be positive");
    require(ff_err_rate >= 0.0 && ve_dc > 0.0,
            "alpha_lower_bound_dc: ff error must be >= 0 and ve_dc > 0");
    auto sorted = curve;
    std::sort(sorted.begin(), sorted.end());
    for (const auto& [alpha, beta] : sorted) {
        if (ff_err_rate == 0.0 || std::isinf(ve_dc)) {
            return alpha;
        }
        if (beta < 1.0 && ndis * taus * ff_err_rate / (1.0 - beta) <= ve_dc) {
            return alpha;
        }
    }
    throw InfeasibleError("no feasible alpha: DC error budget violated for every sampled alpha");
}

// -----------------------------------------------------------------------------
// Feasibility sweep
// -----------------------------------------------------------------------------

namespace {

constexpr double kEps = 1e-12;

struct Grid {
    int levels;
    double step;
    int points;  ///< interior grid values j = 1..points
    int dm;      ///< dduty_max in grid units
};

Grid make_grid(int levels, double dduty_max, double grid_step) {
    require(levels >= 3, "levels must be >= 3");
    require(grid_step > 0.0 && grid_step < 1.0, "grid_step must be in (0, 1)");
    require(dduty_max >= 0.0, "dduty_max must be >= 0");
    Grid g{levels, grid_step, 0, 0};
    while ((g.points + 1) * grid_step < 1.0 - 1e-9) {
        ++g.points;
    }
    g.dm = static_cast<int>(std::floor(dduty_max / grid_step + 1e-9));
    return g;
}

std::vector<bool> usable_mask(const Grid& g, double margin) {
    const auto dead = dead_duty_set(g.levels);
    std::vector<bool> ok(static_cast<std::size_t>(g.points + 1), false);
    for (int j = 1; j <= g.points; ++j) {
        const double v = j * g.step;
        ok[j] = std::none_of(dead.begin(), dead.end(),
                             [&](double x) { return std::abs(v - x) <= margin + kEps; });
    }
    return ok;
}

/// Distinct carrier values seen at the sampling phases, ascending.
std::vector<double> sampled_levels(int levels) {
    const CarrierGrid grid(levels, 1);
    const int steps = 2 * (levels - 1);
    std::set<double> vals;
    for (int g = 0; g < steps; g += levels % 2 == 0 ? 1 : 2) {
        for (int k = 1; k <= levels - 1; ++k) {
            vals.insert(grid.value(k, 2 * g));
        }
    }
    return {vals.begin(), vals.end()};
}

DutyVector to_duty(const std::vector<int>& v, double step) {
    Vector d(static_cast<Eigen::Index>(v.size()));
    for (std::size_t k = 0; k < v.size(); ++k) {
        d[static_cast<Eigen::Index>(k)] = v[k] * step;
    }
    return DutyVector(std::move(d));
}

/// Number of chains j_1..j_m (values restricted by allowed) with |j_{k+1} - j_k| <= dm.
double count_chains(const std::vector<std::vector<bool>>& allowed, int points, int dm) {
    std::vector<double> cur(static_cast<std::size_t>(points + 1), 0.0);
    std::vector<double> prefix(static_cast<std::size_t>(points + 2), 0.0);
    for (int j = 1; j <= points; ++j) {
        cur[j] = allowed[0][j] ? 1.0 : 0.0;
    }
    for (std::size_t k = 1; k < allowed.size(); ++k) {
        prefix[0] = 0.0;
        for (int j = 0; j <= points; ++j) {
            prefix[j + 1] = prefix[j] + cur[j];
        }
        std::vector<double> next(cur.size(), 0.0);
        for (int j = 1; j <= points; ++j) {
            if (!allowed[k][j]) {
                continue;
            }
            const int lo = std::max(1, j - dm);
            const int hi = std::min(points, j + dm);
            next[j] = prefix[hi + 1] - prefix[lo];
        }
        cur.swap(next);
    }
    double total = 0.0;
    for (double c : cur) {
        total += c;
    }
    return total;
}

double total_chain_count(const Grid& g) {
    std::vector<std::vector<bool>> all(static_cast<std::size_t>(g.levels - 1),
                                       std::vector<bool>(g.points + 1, true));
    for (auto& row : all) {
        row[0] = false;
    }
    return count_chains(all, g.points, g.dm);
}

}  // namespace

RankReport full_rank_feasibility(int levels, double dduty_max, double grid_step,
                                 double dead_margin, std::size_t max_witnesses) {
    require(dead_margin >= 0.0, "dead_margin must be >= 0");
    const Grid g = make_grid(levels, dduty_max, grid_step);
    const auto usable = usable_mask(g, dead_margin);
    const auto carrier_levels = sampled_levels(levels);
    const SamplingSchedule schedule(levels, 1, 1.0);

    // Band b holds duties d with exactly b sampled carrier levels strictly below d.
    const int nbands = static_cast<int>(carrier_levels.size()) + 1;
    std::vector<std::pair<int, int>> band_range(static_cast<std::size_t>(nbands), {0, -1});
    for (int j = 1; j <= g.points; ++j) {
        if (!usable[j]) {
            continue;
        }
        const double v = j * g.step;
        const int b = static_cast<int>(std::count_if(carrier_levels.begin(), carrier_levels.end(),
                                                     [&](double l) { return v > l + kEps; }));
        auto& r = band_range[b];
        if (r.second < r.first) {
            r = {j, j};
        } else {
            r.first = std::min(r.first, j);
            r.second = std::max(r.second, j);
        }
    }
    std::vector<int> bands;
    for (int b = 0; b < nbands; ++b) {
        if (band_range[b].second >= band_range[b].first) {
            bands.push_back(b);
        }
    }

    RankReport rep;
    rep.levels = levels;
    rep.dduty_max = dduty_max;
    rep.grid_step = grid_step;
    rep.dead_margin = dead_margin;

    const int m = levels - 1;
    std::vector<int> pattern(static_cast<std::size_t>(m));
    std::vector<std::pair<int, int>> reach(static_cast<std::size_t>(m));

    std::function<void(int)> dfs = [&](int k) {
        if (k == m) {
            // Backward reconstruction of a concrete grid point inside this pattern.
            std::vector<int> v(static_cast<std::size_t>(m));
            v[m - 1] = (reach[m - 1].first + reach[m - 1].second) / 2;
            for (int i = m - 2; i >= 0; --i) {
                const int lo = std::max(reach[i].first, v[i + 1] - g.dm);
                const int hi = std::min(reach[i].second, v[i + 1] + g.dm);
                v[i] = (lo + hi) / 2;
            }
            const DutyVector d = to_duty(v, g.step);
            std::vector<std::vector<bool>> allowed(static_cast<std::size_t>(m),
                                                   std::vector<bool>(g.points + 1, false));
            for (int i = 0; i < m; ++i) {
                const auto [lo, hi] = band_range[pattern[i]];
                for (int j = lo; j <= hi; ++j) {
                    allowed[i][j] = usable[j];
                }
            }
            const double count = count_chains(allowed, g.points, g.dm);
            rep.evaluated_points += count;
            if (stacked_rank(switching_sequence(d, schedule)) < levels - 2) {
                rep.failing_points += count;
                ++rep.failing_patterns;
                if (rep.failing.size() < max_witnesses) {
                    rep.failing.push_back(d);
                    rep.failing_bands.push_back(pattern);
                }
            }
            return;
        }
        for (int b : bands) {
            auto [lo, hi] = band_range[b];
            if (k > 0) {
                lo = std::max(lo, reach[k - 1].first - g.dm);
                hi = std::min(hi, reach[k - 1].second + g.dm);
            }
            if (lo > hi) {
                continue;
            }
            pattern[k] = b;
            reach[k] = {lo, hi};
            dfs(k + 1);
        }
    };
    dfs(0);

    rep.skipped_points = total_chain_count(g) - rep.evaluated_points;
    rep.feasible = rep.failing_patterns == 0;
    return rep;
}

RankReport full_rank_feasibility_bruteforce(int levels, double dduty_max, double grid_step,
                                            double dead_margin) {
    const Grid g = make_grid(levels, dduty_max, grid_step);
    const auto usable = usable_mask(g, dead_margin);
    const SamplingSchedule schedule(levels, 1, 1.0);
    RankReport rep;
    rep.levels = levels;
    rep.dduty_max = dduty_max;
    rep.grid_step = grid_step;
    rep.dead_margin = dead_margin;
    const int m = levels - 1;
    std::vector<int> v(static_cast<std::size_t>(m));
    bool any_skipped = false;
    std::function<void(int)> walk = [&](int k) {
        if (k == m) {
            if (any_skipped) {
                rep.skipped_points += 1;
                return;
            }
            rep.evaluated_points += 1;
            const DutyVector d = to_duty(v, g.step);
            if (stacked_rank(switching_sequence(d, schedule)) < levels - 2) {
                rep.failing_points += 1;
                if (rep.failing.size() < 64) {
                    rep.failing.push_back(d);
                }
            }
            return;
        }
        const int lo = k == 0 ? 1 : std::max(1, v[k - 1] - g.dm);
        const int hi = k == 0 ? g.points : std::min(g.points, v[k - 1] + g.dm);
        for (int j = lo; j <= hi; ++j) {
            v[k] = j;
            const bool prev = any_skipped;
            any_skipped = any_skipped || !usable[j];
            walk(k + 1);
            any_skipped = prev;
        }
    };
    walk(0);
    rep.feasible = rep.failing_points == 0;
    return rep;
}

FeasibilityBoundary max_feasible_dduty(int levels, double grid_step, double dead_margin,
                                       double upper) {
    require(grid_step > 0.0, "grid_step must be > 0");
    const int top = static_cast<int>(std::floor(upper / grid_step + 1e-9));
    auto feasible = [&](int j) {
        return full_rank_feasibility(levels, j * grid_step, grid_step, dead_margin, 0).feasible;
    };
    FeasibilityBoundary out;
    if (top < 1) {
        return out;
    }
    if (!feasible(1)) {
        out.first_failing = grid_step;
        return out;
    }
    if (feasible(top)) {
        out.max_feasible = top * grid_step;
        return out;
    }
    // feasible(lo) and !feasible(hi); feasibility shrinks as dduty_max grows.
    int lo = 1;
    int hi = top;
    while (hi - lo > 1) {
        const int mid = (lo + hi) / 2;
        (feasible(mid) ? lo : hi) = mid;
    }
    out.max_feasible = lo * grid_step;
    out.first_failing = hi * grid_step;
    return out;
}

// -----------------------------------------------------------------------------
// Frequency response
// -----------------------------------------------------------------------------

std::vector<BodePoint> estimator_frequency_response(const FrequencyResponseConfig& cfg,
                                                    const DutyVector& duty, double alpha,
                                                    double ff_error_ratio,
                                                    const std::vector<double>& freqs) {
    require(cfg.amplitude > 0.0, "amplitude must be > 0");
    require(cfg.settle_periods >= 1 && cfg.measure_periods >= 1,
            "settle/measure periods must be >= 1");
    require(alpha >= 0.0, "alpha must be >= 0");
    const SamplingSchedule schedule(cfg.levels, cfg.ns, cfg.switching_frequency);
    const auto seq = switching_sequence(duty, schedule);
    const double taus = schedule.period();
    const Eigen::Index caps = cfg.levels - 2;
    const double ff_gain = 1.0 - ff_error_ratio;

    std::int64_t conv_samples = 0;
    if (alpha > 0.0) {
        const double beta = p_fr_and_beta_max(seq, alpha).beta_max;
        if (beta > 0.0 && beta < 1.0) {
            conv_samples = static_cast<std::int64_t>(
                std::ceil(schedule.ndis() * std::log(1e-9) / std::log(beta)));
        }
    }

    std::vector<BodePoint> out;
    out.reserve(freqs.size());
    for (double f : freqs) {
        require(f > 0.0, "frequencies must be > 0");
        const double w = 2.0 * std::numbers::pi * f * taus;  // rad per sample
        const auto per = static_cast<std::int64_t>(std::ceil(1.0 / (f * taus)));
        const std::int64_t measure = static_cast<std::int64_t>(
            std::llround(cfg.measure_periods / (f * taus)));
        const std::int64_t settle = std::min(
            std::max<std::int64_t>(cfg.settle_periods * per, conv_samples),
            std::max<std::int64_t>(cfg.max_samples - 2 * measure, 0));

        Vector vhat = Vector::Zero(caps);
        double vc_prev = 0.0;
        // Two consecutive measurement windows; agreement indicates steady state.
        std::complex<double> num[2] = {}, den[2] = {};
        const std::int64_t total = settle + 2 * measure;
        for (std::int64_t n = 1; n <= total; ++n) {
            const double vc = cfg.amplitude * std::sin(w * static_cast<double>(n));
            const Vector& ds = seq[static_cast<std::size_t>(n % schedule.ndis())];
            if (alpha > 0.0) {
                const double vsw = -ds.sum() * vc;  // every capacitor carries vc; vin = 0
                vhat = feedback_update(vhat, ds, vsw, 0, 0.0, alpha);
            }
            vhat.array() += ff_gain * (vc - vc_prev);
            vc_prev = vc;
            const std::int64_t m = n - settle - 1;
            if (m >= 0) {
                const int win = m < measure ? 0 : 1;
                const std::complex<double> ph = std::polar(1.0, -w * static_cast<double>(n));
                num[win] += vhat.mean() * ph;
                den[win] += vc * ph;
            }
        }
        BodePoint p;
        p.freq = f;
        const std::complex<double> h = num[1] / den[1];
        const std::complex<double> h_prev = num[0] / den[0];
        p.gain_db = 20.0 * std::log10(std::abs(h));
        p.phase_deg = std::arg(h) * 180.0 / std::numbers::pi;
        p.converged = std::isfinite(p.gain_db) && std::abs(h - h_prev) <= 1e-3 * std::abs(h) + 1e-12;
        out.push_back(p);
    }
    return out;
}

}  // namespace fcml
