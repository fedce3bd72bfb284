#include "fcml/csv.hpp"

#include <array>
#include <charconv>
#include <cmath>
#include <sstream>

namespace fcml {

std::string format_double(double v) {
    if (std::isnan(v)) {
        return "nan";
    }
    if (std::isinf(v)) {
        return v > 0 ? "inf" : "-inf";
    }
    std::array<char, 32> buf{};
    const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), v);
    return std::string(buf.data(), res.ptr);
}

CsvWriter::CsvWriter(std::filesystem::path path, const std::vector<std::string>& header)
    : path_(std::move(path)), columns_(header.size()) {
    require(!header.empty(), "CSV header must not be empty");
    tmp_ = path_;
    tmp_ += ".partial";
    out_.open(tmp_, std::ios::out | std::ios::trunc);
    if (!out_) {
        throw ValidationError("cannot open '" + tmp_.string() + "' for writing");
    }
    for (std::size_t i = 0; i < header.size(); ++i) {
        out_ << (i ? "," : "") << header[i];
    }
    out_ << '\n';
}

CsvWriter::~CsvWriter() {
    if (!committed_) {
        out_.close();
        std::error_code ec;
        std::filesystem::remove(tmp_, ec);
    }
}

void CsvWriter::row(const std::vector<double>& values) {
    require(values.size() == columns_, "CSV row has " + std::to_string(values.size()) +
                                           " values, header has " + std::to_string(columns_));
    std::string line;
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (i) {
            line += ',';
        }
        line += format_double(values[i]);
    }
    line += '\n';
    out_ << line;
}

void CsvWriter::commit() {
    out_.close();
    if (!out_) {
        throw std::runtime_error("write to '" + tmp_.string() + "' failed");
    }
    std::filesystem::rename(tmp_, path_);
    committed_ = true;
}

std::size_t CsvTable::column(const std::string& name) const {
    for (std::size_t i = 0; i < header.size(); ++i) {
        if (header[i] == name) {
            return i;
        }
    }
    throw ValidationError("CSV has no column '" + name + "'");
}

namespace {

double parse_cell(std::string_view s) {
    if (s == "nan") {
        return std::nan("");
    }
    if (s == "inf") {
        return INFINITY;
    }
    if (s == "-inf") {
        return -INFINITY;
    }
    double v = 0.0;
    const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc{} || res.ptr != s.data() + s.size()) {
        throw ValidationError("CSV cell '" + std::string(s) + "' is not a number");
    }
    return v;
}

std::vector<std::string_view> split(std::string_view line) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (true) {
        const auto comma = line.find(',', start);
        out.push_back(line.substr(start, comma == std::string_view::npos ? comma : comma - start));
        if (comma == std::string_view::npos) {
            return out;
        }
        start = comma + 1;
    }
}

}  // namespace

CsvTable read_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw ValidationError("cannot read '" + path.string() + "'");
    }
    CsvTable table;
    std::string line;
    if (!std::getline(in, line)) {
        throw ValidationError("'" + path.string() + "' has no header row");
    }
    for (auto h : split(line)) {
        table.header.emplace_back(h);
    }
    while (std::getline(in, line)) {
        if (line.empty()) {
            continue;
        }
        const auto cells = split(line);
        if (cells.size() != table.header.size()) {
            throw ValidationError("'" + path.string() + "' has a row of the wrong width");
        }
        std::vector<double>& row = table.rows.emplace_back();
        row.reserve(cells.size());
        for (auto c : cells) {
            row.push_back(parse_cell(c));
        }
    }
    return table;
}

std::vector<std::string> waveform_columns(int levels) {
    std::vector<std::string> cols{"t"};
    for (int k = 1; k <= levels - 2; ++k) {
        cols.push_back("vc_" + std::to_string(k));
    }
    for (int k = 1; k <= levels - 2; ++k) {
        cols.push_back("vhat_" + std::to_string(k));
    }
    for (const char* c : {"iL", "iL_ref", "vout", "vin"}) {
        cols.emplace_back(c);
    }
    for (int k = 1; k <= levels - 1; ++k) {
        cols.push_back("d_" + std::to_string(k));
    }
    for (int k = 1; k <= levels - 1; ++k) {
        cols.push_back("stress_" + std::to_string(k));
    }
    return cols;
}

void write_waveforms_csv(const WaveformLog& log, const std::filesystem::path& path) {
    const auto cols = waveform_columns(log.levels);
    CsvWriter w(path, cols);
    std::vector<double> row(cols.size());
    for (std::size_t i = 0; i < log.samples(); ++i) {
        std::size_t c = 0;
        row[c++] = log.t[i];
        for (Eigen::Index k = 0; k < log.vc[i].size(); ++k) {
            row[c++] = log.vc[i][k];
        }
        for (Eigen::Index k = 0; k < log.vhat[i].size(); ++k) {
            row[c++] = log.vhat[i][k];
        }
        row[c++] = log.il[i];
        row[c++] = log.il_ref[i];
        row[c++] = log.vout[i];
        row[c++] = log.vin[i];
        for (Eigen::Index k = 0; k < log.duty[i].size(); ++k) {
            row[c++] = log.duty[i][k];
        }
        for (Eigen::Index k = 0; k < log.stress[i].size(); ++k) {
            row[c++] = log.stress[i][k];
        }
        w.row(row);
    }
    w.commit();
}

std::string summary_text(const WaveformLog& log, const Scenario& sc) {
    std::ostringstream os;
    auto seg_lines = [&os](const std::string& name, const Segment& s) {
        os << name << ".t_start_s: " << format_double(s.t_start) << '\n'
           << name << ".t_end_s: " << format_double(s.t_end) << '\n'
           << name << ".max_switch_stress_V: " << format_double(s.max_stress) << '\n'
           << name << ".max_estimation_error_V: " << format_double(s.max_est_error) << '\n'
           << name << ".max_iL_A: " << format_double(s.max_il) << '\n'
           << name << ".max_iL_ref_A: " << format_double(s.max_il_ref) << '\n';
    };
    os << "levels: " << log.levels << '\n'
       << "sampling_period_s: " << format_double(log.taus) << '\n'
       << "integration_step_s: " << format_double(log.dt) << '\n'
       << "samples: " << log.samples() << '\n'
       << "vout_ref_V: " << format_double(sc.vout_ref) << '\n'
       << "final_vout_V: " << (log.vout.empty() ? "nan" : format_double(log.vout.back())) << '\n'
       << "settling_time_s: "
       << (log.settling_time ? format_double(*log.settling_time) : std::string("none")) << '\n'
       << "duty_saturations: " << log.duty_saturations << '\n'
       << "gated_samples: " << log.gated_samples << '\n';
    seg_lines("overall", log.overall());
    for (std::size_t i = 0; i < log.segments.size(); ++i) {
        seg_lines("segment" + std::to_string(i), log.segments[i]);
    }
    for (const auto& w : log.warnings) {
        os << "warning: " << w << '\n';
    }
    return os.str();
}

}  // namespace fcml
