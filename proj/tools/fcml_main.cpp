// fcml: simulation and analysis front end.
//
// Exit codes: 0 success, 1 validation error, 2 numeric divergence, 3 infeasible.

#include "fcml/analysis.hpp"
#include "fcml/config.hpp"
#include "fcml/csv.hpp"
#include "fcml/engine.hpp"
#include "fcml/estimator.hpp"

#include <CLI11.hpp>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <future>
#include <iostream>
#include <numbers>
#include <thread>

namespace fs = std::filesystem;
using namespace fcml;

namespace {

enum Exit { kOk = 0, kValidation = 1, kDivergence = 2, kInfeasible = 3 };

struct CommonOptions {
    std::string config;
    std::vector<std::string> sets;
    std::string out;
};

RunConfig load(const CommonOptions& o) {
    if (o.config.empty()) {
        return parse_run_config("{}", o.sets);
    }
    return load_run_config(o.config, o.sets);
}

/// --out beats FCML_OUT_DIR, which beats the current directory.
fs::path output_dir(const CommonOptions& o) {
    fs::path dir = ".";
    if (const char* env = std::getenv("FCML_OUT_DIR"); env != nullptr && *env != '\0') {
        dir = env;
    }
    if (!o.out.empty()) {
        dir = o.out;
    }
    fs::create_directories(dir);
    return dir;
}

void write_text(const fs::path& path, const std::string& text) {
    fs::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream f(tmp);
        if (!f || !(f << text)) {
            throw ValidationError("cannot write '" + path.string() + "'");
        }
    }
    fs::rename(tmp, path);
}

void add_common(CLI::App* sub, CommonOptions& o, bool config_required) {
    auto* c = sub->add_option("config", o.config, "JSON run configuration");
    if (config_required) {
        c->required()->check(CLI::ExistingFile);
    }
    sub->add_option("--set", o.sets, "override a configuration key, e.g. estimator.alpha=0.1");
    sub->add_option("--out", o.out, "output directory (default: $FCML_OUT_DIR or .)");
}

int cmd_simulate(const CommonOptions& o) {
    const RunConfig cfg = load(o);
    const fs::path dir = output_dir(o);
    const WaveformLog log = run_scenario(cfg.scenario);
    for (const auto& w : log.warnings) {
        std::cerr << "warning: " << w << '\n';
    }
    write_waveforms_csv(log, dir / "waveforms.csv");
    const std::string summary = summary_text(log, cfg.scenario);
    write_text(dir / "summary.txt", summary);
    write_text(dir / "config_used.json", run_config_to_json(cfg) + "\n");
    std::cout << summary;
    return kOk;
}

struct RankOptions {
    CommonOptions common;
    std::vector<int> levels;
    std::optional<double> dduty_max;
    std::optional<double> grid_step;
    std::optional<double> dead_margin;
    bool boundary = false;
};

int cmd_rank_check(const RankOptions& o) {
    const RunConfig cfg = load(o.common);
    const AnalysisConfig& a = cfg.analysis;
    const std::vector<int> levels = o.levels.empty() ? a.rank_levels : o.levels;
    const double dduty = o.dduty_max.value_or(a.rank_dduty_max);
    const double step = o.grid_step.value_or(a.grid_step);
    const double margin = o.dead_margin.value_or(a.rank_dead_margin);
    require(std::isfinite(step) && step > 0.0 && step < 1.0, "--grid-step must be in (0, 1)");
    require(dduty > 0.0 && dduty <= 1.0, "--dduty-max must be in (0, 1]");
    require(margin >= 0.0, "--dead-margin must be >= 0");
    for (int n : levels) {
        require(n >= 3, "levels must be >= 3");
    }

    const fs::path dir = output_dir(o.common);
    CsvWriter csv(dir / "rank_report.csv", {"levels", "witness", "k", "d_k"});
    for (int n : levels) {
        const RankReport r = full_rank_feasibility(n, dduty, step, margin);
        std::cout << "N=" << n << " dDutyMax=" << format_double(dduty)
                  << " gridStep=" << format_double(step) << " margin=" << format_double(margin)
                  << ": " << (r.feasible ? "feasible" : "infeasible")
                  << " (points " << format_double(r.evaluated_points) << ", failing "
                  << format_double(r.failing_points) << ", skipped "
                  << format_double(r.skipped_points) << ")";
        if (o.boundary) {
            const FeasibilityBoundary b = max_feasible_dduty(n, step, margin, dduty);
            std::cout << " max_feasible_dDutyMax="
                      << (b.max_feasible ? format_double(*b.max_feasible) : std::string("none"))
                      << " first_failing="
                      << (b.first_failing ? format_double(*b.first_failing) : std::string("none"));
        }
        std::cout << '\n';
        for (std::size_t w = 0; w < r.failing.size(); ++w) {
            for (Eigen::Index k = 0; k < r.failing[w].d.size(); ++k) {
                csv.row({static_cast<double>(n), static_cast<double>(w), static_cast<double>(k + 1),
                         r.failing[w].d[k]});
            }
        }
    }
    csv.commit();
    return kOk;
}

int cmd_gain_bounds(const CommonOptions& o) {
    const RunConfig cfg = load(o);
    const ConverterParams& p = cfg.scenario.params;
    const AnalysisConfig& a = cfg.analysis;
    require(static_cast<int>(a.duty.size()) == p.levels - 1,
            "analysis.duty must have N-1 = " + std::to_string(p.levels - 1) + " entries");
    const SamplingSchedule schedule(p.levels, cfg.scenario.ns, p.switching_frequency);
    const auto seq = switching_sequence(a.duty, schedule);
    const int rank = stacked_rank(seq);
    const auto curve = beta_max_curve(seq, a.alphas);

    const fs::path dir = output_dir(o);
    CsvWriter csv(dir / "beta_curve.csv", {"alpha", "beta_max"});
    for (const auto& [alpha, beta] : curve) {
        csv.row({alpha, beta});
    }
    csv.commit();

    const double dvin = a.dvin_dt_max.value_or(
        p.dc_input_voltage > 0.0 ? 0.0 : 2.0 * std::numbers::pi * p.grid_frequency * p.input_peak());
    const double alpha_hf = dvin > 0.0
                                ? alpha_upper_bound_hf(a.ve_hf, schedule.period(), p.levels, dvin)
                                : std::numeric_limits<double>::infinity();
    std::cout << "rank: " << rank << " of " << p.levels - 2 << '\n'
              << "alphaMaxStability: " << format_double(alpha_stability_limit(p.levels)) << '\n'
              << "alphaMaxHF: " << format_double(alpha_hf) << '\n';
    if (rank < p.levels - 2) {
        std::cout << "beta_max: 1 (rank-deficient duty pattern)\n"
                  << "alphaMinDC: unavailable\n";
        return kInfeasible;
    }
    const double alpha_dc =
        alpha_lower_bound_dc(curve, schedule.ndis(), schedule.period(), a.ff_err_rate, a.ve_dc);
    std::cout << "alphaMinDC: " << format_double(alpha_dc) << '\n';
    return kOk;
}

int cmd_bode(const CommonOptions& o) {
    const RunConfig cfg = load(o);
    const ConverterParams& p = cfg.scenario.params;
    const AnalysisConfig& a = cfg.analysis;
    const std::vector<double> freqs = a.frequencies.value_or(default_bode_frequencies());
    const fs::path dir = output_dir(o);
    CsvWriter csv(dir / "bode.csv",
                  {"alpha", "ff_error_ratio", "freq", "gain_db", "phase_deg", "converged"});
    FrequencyResponseConfig fr;
    fr.levels = p.levels;
    fr.ns = cfg.scenario.ns;
    fr.switching_frequency = p.switching_frequency;
    fr.amplitude = a.bode_amplitude;
    fr.settle_periods = std::max(a.settle_periods, 1);
    fr.measure_periods = a.measure_periods;
    int unconverged = 0;
    for (double alpha : a.bode_alphas) {
        for (double ratio : a.ff_error_ratios) {
            for (const BodePoint& b : estimator_frequency_response(fr, a.duty, alpha, ratio, freqs)) {
                csv.row({alpha, ratio, b.freq, b.gain_db, b.phase_deg, b.converged ? 1.0 : 0.0});
                if (!b.converged) {
                    ++unconverged;
                    std::cerr << "not converged: alpha=" << format_double(alpha)
                              << " ff_error_ratio=" << format_double(ratio)
                              << " f=" << format_double(b.freq) << " Hz\n";
                }
            }
        }
    }
    csv.commit();
    std::cout << "bode points: " << a.bode_alphas.size() * a.ff_error_ratios.size() * freqs.size()
              << ", not converged: " << unconverged << '\n';
    return kOk;
}

struct SweepOptions {
    CommonOptions common;
    std::string param;
    std::vector<double> values;
    unsigned threads = 0;
};

int cmd_sweep(const SweepOptions& o) {
    require(!o.values.empty(), "--values must list at least one value");
    std::vector<RunConfig> cfgs;
    for (double v : o.values) {
        CommonOptions c = o.common;
        c.sets.push_back(o.param + "=" + format_double(v));
        cfgs.push_back(load(c));
        cfgs.back().scenario.validate();
    }
    const fs::path dir = output_dir(o.common);
    const unsigned hw = std::max(1U, std::thread::hardware_concurrency());
    const unsigned limit = o.threads > 0 ? o.threads : hw;

    struct Row {
        std::vector<double> values;
        std::string error;
    };
    std::vector<Row> rows(cfgs.size());
    auto run_one = [&](std::size_t i) {
        Row r;
        try {
            const WaveformLog log = run_scenario(cfgs[i].scenario);
            const Segment all = log.overall();
            const Segment& first = log.segments.front();
            r.values = {o.values[i], first.max_stress, first.max_est_error, first.max_il,
                        all.max_stress, all.max_est_error, log.vout.back(),
                        log.settling_time.value_or(std::nan(""))};
        } catch (const DivergenceError& e) {
            r.error = e.what();
        }
        rows[i] = std::move(r);
    };
    for (std::size_t start = 0; start < cfgs.size(); start += limit) {
        std::vector<std::future<void>> batch;
        for (std::size_t i = start; i < std::min(cfgs.size(), start + limit); ++i) {
            batch.push_back(std::async(std::launch::async, run_one, i));
        }
        for (auto& f : batch) {
            f.get();
        }
    }

    CsvWriter csv(dir / "sweep.csv",
                  {"value", "first_segment_max_stress", "first_segment_max_est_error",
                   "first_segment_max_iL", "max_stress", "max_est_error", "final_vout",
                   "settling_time", "diverged"});
    bool diverged = false;
    for (std::size_t i = 0; i < rows.size(); ++i) {
        if (rows[i].error.empty()) {
            auto v = rows[i].values;
            v.push_back(0.0);
            csv.row(v);
        } else {
            diverged = true;
            std::cerr << o.param << "=" << format_double(o.values[i]) << ": " << rows[i].error << '\n';
            const double nan = std::nan("");
            csv.row({o.values[i], nan, nan, nan, nan, nan, nan, nan, 1.0});
        }
    }
    csv.commit();
    std::cout << "sweep of " << o.param << " over " << rows.size() << " values written to "
              << (dir / "sweep.csv").string() << '\n';
    return diverged ? kDivergence : kOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Flying-capacitor multilevel converter estimator and control toolkit"};
    app.require_subcommand(1);

    CommonOptions sim;
    auto* s = app.add_subcommand("simulate", "run a time-domain scenario");
    add_common(s, sim, true);

    RankOptions rank;
    auto* r = app.add_subcommand("rank-check", "full-rank feasibility over duty space");
    add_common(r, rank.common, false);
    r->add_option("-N,--levels", rank.levels, "converter levels (repeatable)");
    r->add_option("--dduty-max", rank.dduty_max, "maximum |d_{k+1} - d_k|");
    r->add_option("--grid-step", rank.grid_step, "duty grid resolution");
    r->add_option("--dead-margin", rank.dead_margin, "dead-duty gating margin");
    r->add_flag("--boundary", rank.boundary, "also search the largest feasible dDutyMax");

    CommonOptions gb;
    auto* g = app.add_subcommand("gain-bounds", "estimator gain limits and beta_max curve");
    add_common(g, gb, false);

    CommonOptions bode;
    auto* b = app.add_subcommand("bode", "estimator frequency response");
    add_common(b, bode, false);

    SweepOptions sweep;
    auto* w = app.add_subcommand("sweep", "run one scenario per value of a configuration key");
    add_common(w, sweep.common, true);
    w->add_option("--param", sweep.param, "dotted configuration key")->required();
    w->add_option("--values", sweep.values, "values to assign")->required()->delimiter(',');
    w->add_option("--threads", sweep.threads, "parallel runs (default: hardware threads)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kValidation;
    }

    try {
        if (*s) {
            return cmd_simulate(sim);
        }
        if (*r) {
            return cmd_rank_check(rank);
        }
        if (*g) {
            return cmd_gain_bounds(gb);
        }
        if (*b) {
            return cmd_bode(bode);
        }
        if (*w) {
            return cmd_sweep(sweep);
        }
    } catch (const ValidationError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kValidation;
    } catch (const DivergenceError& e) {
        std::cerr << "diverged: " << e.what() << '\n';
        return kDivergence;
    } catch (const InfeasibleError& e) {
        std::cerr << "infeasible: " << e.what() << '\n';
        return kInfeasible;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kValidation;
    }
    return kValidation;
}
