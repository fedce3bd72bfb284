#pragma once

// JSON run configuration shared by every CLI subcommand.
//
// Top-level objects: converter, cascade, estimator, scenario, analysis, plus an
// integer schema_version. Missing keys take the reference-design defaults and
// unknown keys are rejected with their dotted path. Overrides of the form
// "a.b.c=value" are applied to the document before it is interpreted; the value
// is read as JSON when it parses and as a plain string otherwise.
//
// Units: SI throughout (H, F, Ohm, Hz, V, A, s). Angles in radians.

#include "fcml/engine.hpp"
#include "fcml/modulation.hpp"

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace fcml {

inline constexpr int kSchemaVersion = 1;

struct AnalysisConfig {
    /// Duty pattern for gain-bounds and bode; must give a full-rank sequence.
    DutyVector duty{0.42, 0.37, 0.41, 0.46, 0.5};
    std::vector<double> alphas{0.01, 0.02, 0.05, 0.1, 0.2, 0.4};
    double ff_err_rate = 0.1;  ///< steady feedforward drift [V/s]
    double ve_dc = 1.0;        ///< DC estimation-error budget [V]
    double ve_hf = 1.0;        ///< per-sample slew error budget [V]
    std::optional<double> dvin_dt_max;  ///< [V/s]; defaults to 2 pi f_grid vin_peak

    std::vector<double> bode_alphas{0.02, 0.1};
    std::vector<double> ff_error_ratios{0.0, 1.0};
    /// [Hz]; absent means default_bode_frequencies(), an empty list skips the sweep
    std::optional<std::vector<double>> frequencies;
    double bode_amplitude = 1.0;
    int settle_periods = 20;
    int measure_periods = 10;

    std::vector<int> rank_levels{3, 4, 5, 6, 7};
    double grid_step = 0.01;
    double rank_dduty_max = 1.0;
    double rank_dead_margin = kDefaultDeadMargin;

    void validate() const;
};

struct RunConfig {
    int schema_version = kSchemaVersion;
    Scenario scenario = Scenario::table3();
    AnalysisConfig analysis;
};

/// 31 log-spaced points from 10 Hz to 1 kHz.
[[nodiscard]] std::vector<double> default_bode_frequencies();

/// Throws ValidationError on malformed text, unknown keys, type errors or bad overrides.
[[nodiscard]] RunConfig parse_run_config(const std::string& json_text,
                                         const std::vector<std::string>& overrides = {});

[[nodiscard]] RunConfig load_run_config(const std::filesystem::path& path,
                                        const std::vector<std::string>& overrides = {});

/// Complete document with every key written out; parse_run_config inverts it.
[[nodiscard]] std::string run_config_to_json(const RunConfig& cfg, int indent = 2);

[[nodiscard]] std::string mode_name(ConverterMode mode);
[[nodiscard]] ConverterMode parse_mode(const std::string& name);
[[nodiscard]] std::string psi_name(PsiShape psi);
[[nodiscard]] PsiShape parse_psi(const std::string& name);

}  // namespace fcml
