#include "fcml/config.hpp"

#include <json.hpp>

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

namespace fcml {

using nlohmann::json;

namespace {

/// Typed access to one JSON object that remembers which keys were consumed.
class ObjectReader {
public:
    ObjectReader(const json& j, std::string path) : j_(j), path_(std::move(path)) {
        if (!j_.is_object()) {
            throw ValidationError(where() + " must be an object");
        }
    }

    [[nodiscard]] const json* find(const std::string& key) {
        seen_.insert(key);
        const auto it = j_.find(key);
        return it == j_.end() ? nullptr : &*it;
    }

    void number(const std::string& key, double& out) {
        if (const json* v = find(key)) {
            out = as_number(*v, key);
        }
    }

    void optional_number(const std::string& key, std::optional<double>& out) {
        if (const json* v = find(key)) {
            out = v->is_null() ? std::nullopt : std::optional<double>(as_number(*v, key));
        }
    }

    void integer(const std::string& key, int& out) {
        if (const json* v = find(key)) {
            if (!v->is_number_integer()) {
                throw ValidationError(path(key) + " must be an integer");
            }
            out = v->get<int>();
        }
    }

    void unsigned64(const std::string& key, std::uint64_t& out) {
        if (const json* v = find(key)) {
            if (!v->is_number_unsigned()) {
                throw ValidationError(path(key) + " must be a non-negative integer");
            }
            out = v->get<std::uint64_t>();
        }
    }

    void boolean(const std::string& key, bool& out) {
        if (const json* v = find(key)) {
            if (!v->is_boolean()) {
                throw ValidationError(path(key) + " must be true or false");
            }
            out = v->get<bool>();
        }
    }

    void string(const std::string& key, std::string& out) {
        if (const json* v = find(key)) {
            if (!v->is_string()) {
                throw ValidationError(path(key) + " must be a string");
            }
            out = v->get<std::string>();
        }
    }

    void numbers(const std::string& key, std::vector<double>& out) {
        if (const json* v = find(key)) {
            if (!v->is_array()) {
                throw ValidationError(path(key) + " must be an array of numbers");
            }
            out.clear();
            for (const auto& e : *v) {
                out.push_back(as_number(e, key));
            }
        }
    }

    void integers(const std::string& key, std::vector<int>& out) {
        if (const json* v = find(key)) {
            if (!v->is_array()) {
                throw ValidationError(path(key) + " must be an array of integers");
            }
            out.clear();
            for (const auto& e : *v) {
                if (!e.is_number_integer()) {
                    throw ValidationError(path(key) + " must be an array of integers");
                }
                out.push_back(e.get<int>());
            }
        }
    }

    [[nodiscard]] std::string path(const std::string& key) const {
        return path_.empty() ? key : path_ + "." + key;
    }

    /// Throws for the first key that no accessor asked for.
    void finish() const {
        for (auto it = j_.begin(); it != j_.end(); ++it) {
            if (!seen_.contains(it.key())) {
                throw ValidationError("unknown configuration key '" + path(it.key()) + "'");
            }
        }
    }

private:
    [[nodiscard]] std::string where() const { return path_.empty() ? "document" : path_; }

    double as_number(const json& v, const std::string& key) const {
        if (!v.is_number()) {
            throw ValidationError(path(key) + " must be a number");
        }
        return v.get<double>();
    }

    const json& j_;
    std::string path_;
    std::set<std::string> seen_;
};

void read_converter(ObjectReader& r, ConverterParams& p) {
    r.integer("levels", p.levels);
    r.number("inductance", p.inductance);
    if (const json* cf = r.find("flying_capacitance")) {
        if (cf->is_number()) {
            p.flying_capacitance = Vector::Constant(std::max(p.levels - 2, 0), cf->get<double>());
        } else if (cf->is_array()) {
            p.flying_capacitance.resize(static_cast<Eigen::Index>(cf->size()));
            for (std::size_t k = 0; k < cf->size(); ++k) {
                if (!(*cf)[k].is_number()) {
                    throw ValidationError(r.path("flying_capacitance") + " entries must be numbers");
                }
                p.flying_capacitance[static_cast<Eigen::Index>(k)] = (*cf)[k].get<double>();
            }
        } else {
            throw ValidationError(r.path("flying_capacitance") +
                                  " must be a number or an array of numbers");
        }
    } else if (p.flying_capacitance.size() != p.levels - 2 && p.levels >= 3 &&
               p.flying_capacitance.size() > 0) {
        // A level change without explicit capacitors keeps the first value.
        p.set_uniform_flying_capacitance(p.flying_capacitance[0]);
    }
    r.number("output_capacitance", p.output_capacitance);
    r.number("load_resistance", p.load_resistance);
    r.number("switching_frequency", p.switching_frequency);
    r.number("damping_resistance", p.damping_resistance);
    r.number("grid_vrms", p.grid_vrms);
    r.number("grid_frequency", p.grid_frequency);
    r.number("grid_phase", p.grid_phase);
    r.number("dc_input_voltage", p.dc_input_voltage);
    r.finish();
}

void read_pir_override(ObjectReader& parent, const std::string& key, PirConfig& pir) {
    const json* j = parent.find(key);
    if (j == nullptr) {
        return;
    }
    ObjectReader r(*j, parent.path(key));
    r.number("kp", pir.kp);
    r.number("ki", pir.ki);
    r.number("aw_gain", pir.aw_gain);
    r.number("ad_gain", pir.ad_gain);
    r.boolean("reset_on_enable", pir.reset_on_enable);
    if (const json* res = r.find("resonance_gains")) {
        if (!res->is_array() || res->size() != pir.resonances.size()) {
            throw ValidationError(r.path("resonance_gains") + " must list " +
                                  std::to_string(pir.resonances.size()) + " numbers");
        }
        for (std::size_t h = 0; h < res->size(); ++h) {
            if (!(*res)[h].is_number()) {
                throw ValidationError(r.path("resonance_gains") + " entries must be numbers");
            }
            pir.resonances[h].gain = (*res)[h].get<double>();
        }
    }
    if (const json* g = r.find("gammas")) {
        ObjectReader gr(*g, r.path("gammas"));
        gr.boolean("aw", pir.gammas.aw);
        gr.boolean("r", pir.gammas.r);
        gr.boolean("i", pir.gammas.i);
        gr.boolean("en", pir.gammas.en);
        gr.finish();
    }
    r.finish();
}

void read_cascade(ObjectReader& r, const ConverterParams& params, CascadeConfig& c) {
    std::string mode = mode_name(c.mode);
    std::string psi = psi_name(c.psi);
    r.string("mode", mode);
    r.string("psi", psi);
    double il_max = c.il_max;
    double dduty_max = c.dduty_max;
    r.number("il_max", il_max);
    r.number("dduty_max", dduty_max);
    Bandwidths bw = c.bandwidths;
    if (const json* b = r.find("bandwidths")) {
        ObjectReader br(*b, r.path("bandwidths"));
        br.number("current", bw.current);
        br.number("voltage", bw.voltage);
        br.number("balancing", bw.balancing);
        br.optional_number("estimator", bw.estimator);
        br.finish();
    }

    const CascadeConfig keep = c;
    c = synthesize_cascade(params, parse_mode(mode), bw, il_max, dduty_max, parse_psi(psi));
    c.balance_margin = keep.balance_margin;
    c.dead_margin = keep.dead_margin;
    c.balance_ff_min_current = keep.balance_ff_min_current;
    c.balance_slope_ff = keep.balance_slope_ff;
    c.current_pure_p = keep.current_pure_p;
    c.current_delay_compensation = keep.current_delay_compensation;
    c.phi_gain = keep.phi_gain;

    r.number("balance_margin", c.balance_margin);
    r.number("dead_margin", c.dead_margin);
    r.number("balance_ff_min_current", c.balance_ff_min_current);
    r.boolean("balance_slope_ff", c.balance_slope_ff);
    r.boolean("current_pure_p", c.current_pure_p);
    r.boolean("current_delay_compensation", c.current_delay_compensation);
    r.number("phi_gain", c.phi_gain);
    read_pir_override(r, "voltage", c.voltage);
    read_pir_override(r, "balancing", c.balancing);
    read_pir_override(r, "current", c.current);
    r.finish();
}

void read_estimator(ObjectReader& r, EstimatorSettings& e) {
    r.number("alpha", e.alpha);
    r.boolean("fb_enabled", e.fb_enabled);
    r.boolean("ff_enabled", e.ff_enabled);
    r.boolean("dead_duty_gating", e.dead_duty_gating);
    r.number("noise_vsw", e.noise_vsw);
    r.number("noise_il", e.noise_il);
    r.unsigned64("seed", e.seed);
    r.boolean("allow_unstable_alpha", e.allow_unstable_alpha);
    r.finish();
}

void read_scenario(ObjectReader& r, Scenario& sc) {
    r.integer("ns", sc.ns);
    r.number("duration", sc.duration);
    r.number("vout_ref", sc.vout_ref);
    r.number("vout_initial", sc.vout_initial);
    r.integer("step_divisor", sc.step_divisor);
    r.integer("substep_log_every", sc.substep_log_every);
    if (const json* ev = r.find("events")) {
        if (!ev->is_array()) {
            throw ValidationError(r.path("events") + " must be an array");
        }
        sc.events.clear();
        for (std::size_t i = 0; i < ev->size(); ++i) {
            ObjectReader er((*ev)[i], r.path("events") + "[" + std::to_string(i) + "]");
            Event e;
            er.number("time", e.time);
            er.string("action", e.action);
            er.number("value", e.value);
            er.finish();
            sc.events.push_back(e);
        }
    }
    r.finish();
}

void read_analysis(ObjectReader& r, AnalysisConfig& a) {
    std::vector<double> duty(a.duty.d.data(), a.duty.d.data() + a.duty.d.size());
    r.numbers("duty", duty);
    a.duty = DutyVector(Eigen::Map<const Vector>(duty.data(), static_cast<Eigen::Index>(duty.size())));
    r.numbers("alphas", a.alphas);
    r.number("ff_err_rate", a.ff_err_rate);
    r.number("ve_dc", a.ve_dc);
    r.number("ve_hf", a.ve_hf);
    r.optional_number("dvin_dt_max", a.dvin_dt_max);
    r.numbers("bode_alphas", a.bode_alphas);
    r.numbers("ff_error_ratios", a.ff_error_ratios);
    if (const json* f = r.find("frequencies"); f != nullptr && f->is_null()) {
        a.frequencies.reset();
    } else if (f != nullptr) {
        std::vector<double> freqs;
        r.numbers("frequencies", freqs);
        a.frequencies = std::move(freqs);
    }
    r.number("bode_amplitude", a.bode_amplitude);
    r.integer("settle_periods", a.settle_periods);
    r.integer("measure_periods", a.measure_periods);
    r.integers("rank_levels", a.rank_levels);
    r.number("grid_step", a.grid_step);
    r.number("rank_dduty_max", a.rank_dduty_max);
    r.number("rank_dead_margin", a.rank_dead_margin);
    r.finish();
}

void apply_override(json& doc, const std::string& spec) {
    const auto eq = spec.find('=');
    if (eq == std::string::npos || eq == 0) {
        throw ValidationError("override '" + spec + "' must have the form key.path=value");
    }
    const std::string key = spec.substr(0, eq);
    const std::string text = spec.substr(eq + 1);
    json value = json::parse(text, nullptr, false);
    if (value.is_discarded()) {
        value = text;
    }
    json* node = &doc;
    std::size_t start = 0;
    while (true) {
        const auto dot = key.find('.', start);
        const std::string part = key.substr(start, dot == std::string::npos ? dot : dot - start);
        if (part.empty()) {
            throw ValidationError("override key '" + key + "' has an empty component");
        }
        if (!node->is_object()) {
            throw ValidationError("override key '" + key + "' descends into a non-object");
        }
        if (dot == std::string::npos) {
            (*node)[part] = std::move(value);
            return;
        }
        node = &(*node)[part];
        if (node->is_null()) {
            *node = json::object();
        }
        start = dot + 1;
    }
}

json pir_json(const PirConfig& p) {
    json res = json::array();
    for (const auto& r : p.resonances) {
        res.push_back(r.gain);
    }
    return {{"kp", p.kp},
            {"ki", p.ki},
            {"aw_gain", p.aw_gain},
            {"ad_gain", p.ad_gain},
            {"reset_on_enable", p.reset_on_enable},
            {"resonance_gains", res},
            {"gammas", {{"aw", p.gammas.aw}, {"r", p.gammas.r}, {"i", p.gammas.i}, {"en", p.gammas.en}}}};
}

}  // namespace

void AnalysisConfig::validate() const {
    require(duty.size() >= 2 && duty.valid(), "analysis.duty must hold >= 2 entries in [0, 1]");
    require(!alphas.empty(), "analysis.alphas must not be empty");
    for (double a : alphas) {
        require(std::isfinite(a) && a > 0.0, "analysis.alphas must be > 0");
    }
    require(ff_err_rate >= 0.0, "analysis.ff_err_rate must be >= 0");
    require(ve_dc > 0.0 && ve_hf > 0.0, "analysis.ve_dc and analysis.ve_hf must be > 0");
    require(!dvin_dt_max || *dvin_dt_max > 0.0, "analysis.dvin_dt_max must be > 0");
    for (double f : frequencies.value_or(std::vector<double>{})) {
        require(std::isfinite(f) && f > 0.0, "analysis.frequencies must be > 0");
    }
    require(bode_amplitude > 0.0, "analysis.bode_amplitude must be > 0");
    require(settle_periods >= 0 && measure_periods >= 1,
            "analysis.settle_periods must be >= 0 and measure_periods >= 1");
    for (int n : rank_levels) {
        require(n >= 3, "analysis.rank_levels entries must be >= 3");
    }
    require(std::isfinite(grid_step) && grid_step > 0.0 && grid_step < 1.0,
            "analysis.grid_step must be in (0, 1)");
    require(rank_dduty_max > 0.0 && rank_dduty_max <= 1.0,
            "analysis.rank_dduty_max must be in (0, 1]");
    require(rank_dead_margin >= 0.0, "analysis.rank_dead_margin must be >= 0");
}

std::vector<double> default_bode_frequencies() {
    std::vector<double> f;
    constexpr int points = 31;
    for (int i = 0; i < points; ++i) {
        f.push_back(std::pow(10.0, 1.0 + 2.0 * i / (points - 1)));
    }
    return f;
}

std::string mode_name(ConverterMode mode) {
    switch (mode) {
        case ConverterMode::DcDc:
            return "dcdc";
        case ConverterMode::AcDcBoost:
            return "acdc_boost";
        case ConverterMode::AcDcBuck:
            return "acdc_buck";
    }
    return "acdc_buck";
}

ConverterMode parse_mode(const std::string& name) {
    if (name == "dcdc") {
        return ConverterMode::DcDc;
    }
    if (name == "acdc_boost") {
        return ConverterMode::AcDcBoost;
    }
    if (name == "acdc_buck") {
        return ConverterMode::AcDcBuck;
    }
    throw ValidationError("cascade.mode must be dcdc, acdc_boost or acdc_buck (got '" + name + "')");
}

std::string psi_name(PsiShape psi) { return psi == PsiShape::Dc ? "dc" : "abs_sin"; }

PsiShape parse_psi(const std::string& name) {
    if (name == "dc") {
        return PsiShape::Dc;
    }
    if (name == "abs_sin") {
        return PsiShape::AbsSin;
    }
    throw ValidationError("cascade.psi must be dc or abs_sin (got '" + name + "')");
}

RunConfig parse_run_config(const std::string& json_text, const std::vector<std::string>& overrides) {
    json doc;
    try {
        doc = json::parse(json_text);
    } catch (const json::parse_error& e) {
        throw ValidationError(std::string("configuration is not valid JSON: ") + e.what());
    }
    if (!doc.is_object()) {
        throw ValidationError("configuration document must be a JSON object");
    }
    for (const auto& o : overrides) {
        apply_override(doc, o);
    }

    RunConfig cfg;
    ObjectReader top(doc, "");
    top.integer("schema_version", cfg.schema_version);
    if (cfg.schema_version != kSchemaVersion) {
        throw ValidationError("unsupported schema_version " + std::to_string(cfg.schema_version) +
                              " (expected " + std::to_string(kSchemaVersion) + ")");
    }
    if (const json* j = top.find("converter")) {
        ObjectReader r(*j, "converter");
        read_converter(r, cfg.scenario.params);
    }
    {
        // The cascade is always re-synthesized so that gains follow the converter.
        static const json empty = json::object();
        const json* j = top.find("cascade");
        ObjectReader r(j != nullptr ? *j : empty, "cascade");
        read_cascade(r, cfg.scenario.params, cfg.scenario.cascade);
    }
    if (const json* j = top.find("estimator")) {
        ObjectReader r(*j, "estimator");
        read_estimator(r, cfg.scenario.estimator);
    }
    if (const json* j = top.find("scenario")) {
        ObjectReader r(*j, "scenario");
        read_scenario(r, cfg.scenario);
    }
    if (const json* j = top.find("analysis")) {
        ObjectReader r(*j, "analysis");
        read_analysis(r, cfg.analysis);
    }
    top.finish();
    cfg.analysis.validate();
    return cfg;
}

RunConfig load_run_config(const std::filesystem::path& path, const std::vector<std::string>& overrides) {
    std::ifstream in(path);
    if (!in) {
        throw ValidationError("cannot read configuration file '" + path.string() + "'");
    }
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_run_config(ss.str(), overrides);
}

std::string run_config_to_json(const RunConfig& cfg, int indent) {
    const Scenario& sc = cfg.scenario;
    const ConverterParams& p = sc.params;
    const CascadeConfig& c = sc.cascade;
    json cf = json::array();
    for (Eigen::Index k = 0; k < p.flying_capacitance.size(); ++k) {
        cf.push_back(p.flying_capacitance[k]);
    }
    json events = json::array();
    for (const auto& e : sc.events) {
        events.push_back({{"time", e.time}, {"action", e.action}, {"value", e.value}});
    }
    json bw = {{"current", c.bandwidths.current},
               {"voltage", c.bandwidths.voltage},
               {"balancing", c.bandwidths.balancing},
               {"estimator", c.bandwidths.estimator ? json(*c.bandwidths.estimator) : json(nullptr)}};
    const AnalysisConfig& a = cfg.analysis;
    std::vector<double> duty(a.duty.d.data(), a.duty.d.data() + a.duty.d.size());

    json doc = {
        {"schema_version", cfg.schema_version},
        {"converter",
         {{"levels", p.levels},
          {"inductance", p.inductance},
          {"flying_capacitance", cf},
          {"output_capacitance", p.output_capacitance},
          {"load_resistance", p.load_resistance},
          {"switching_frequency", p.switching_frequency},
          {"damping_resistance", p.damping_resistance},
          {"grid_vrms", p.grid_vrms},
          {"grid_frequency", p.grid_frequency},
          {"grid_phase", p.grid_phase},
          {"dc_input_voltage", p.dc_input_voltage}}},
        {"cascade",
         {{"mode", mode_name(c.mode)},
          {"psi", psi_name(c.psi)},
          {"il_max", c.il_max},
          {"dduty_max", c.dduty_max},
          {"bandwidths", bw},
          {"balance_margin", c.balance_margin},
          {"dead_margin", c.dead_margin},
          {"balance_ff_min_current", c.balance_ff_min_current},
          {"balance_slope_ff", c.balance_slope_ff},
          {"current_pure_p", c.current_pure_p},
          {"current_delay_compensation", c.current_delay_compensation},
          {"phi_gain", c.phi_gain},
          {"voltage", pir_json(c.voltage)},
          {"balancing", pir_json(c.balancing)},
          {"current", pir_json(c.current)}}},
        {"estimator",
         {{"alpha", sc.estimator.alpha},
          {"fb_enabled", sc.estimator.fb_enabled},
          {"ff_enabled", sc.estimator.ff_enabled},
          {"dead_duty_gating", sc.estimator.dead_duty_gating},
          {"noise_vsw", sc.estimator.noise_vsw},
          {"noise_il", sc.estimator.noise_il},
          {"seed", sc.estimator.seed},
          {"allow_unstable_alpha", sc.estimator.allow_unstable_alpha}}},
        {"scenario",
         {{"ns", sc.ns},
          {"duration", sc.duration},
          {"vout_ref", sc.vout_ref},
          {"vout_initial", sc.vout_initial},
          {"step_divisor", sc.step_divisor},
          {"substep_log_every", sc.substep_log_every},
          {"events", events}}},
        {"analysis",
         {{"duty", duty},
          {"alphas", a.alphas},
          {"ff_err_rate", a.ff_err_rate},
          {"ve_dc", a.ve_dc},
          {"ve_hf", a.ve_hf},
          {"dvin_dt_max", a.dvin_dt_max ? json(*a.dvin_dt_max) : json(nullptr)},
          {"bode_alphas", a.bode_alphas},
          {"ff_error_ratios", a.ff_error_ratios},
          {"frequencies", a.frequencies ? json(*a.frequencies) : json(nullptr)},
          {"bode_amplitude", a.bode_amplitude},
          {"settle_periods", a.settle_periods},
          {"measure_periods", a.measure_periods},
          {"rank_levels", a.rank_levels},
          {"grid_step", a.grid_step},
          {"rank_dduty_max", a.rank_dduty_max},
          {"rank_dead_margin", a.rank_dead_margin}}}};
    return doc.dump(indent);
}

}  // namespace fcml
