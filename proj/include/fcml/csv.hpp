#pragma once

// CSV emission with shortest round-trip number formatting. Files are written to a
// sibling temporary and renamed on commit, so a failed run leaves no partial file.

#include "fcml/engine.hpp"

#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

namespace fcml {

/// Shortest decimal text that parses back to exactly v ("nan", "inf", "-inf" otherwise).
[[nodiscard]] std::string format_double(double v);

class CsvWriter {
public:
    CsvWriter(std::filesystem::path path, const std::vector<std::string>& header);
    CsvWriter(const CsvWriter&) = delete;
    CsvWriter& operator=(const CsvWriter&) = delete;
    ~CsvWriter();

    void row(const std::vector<double>& values);
    /// Flushes and moves the temporary into place. Without commit the file is discarded.
    void commit();

private:
    std::filesystem::path path_;
    std::filesystem::path tmp_;
    std::ofstream out_;
    std::size_t columns_;
    bool committed_ = false;
};

struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<double>> rows;

    /// Index of a named column; throws ValidationError when absent.
    [[nodiscard]] std::size_t column(const std::string& name) const;
};

[[nodiscard]] CsvTable read_csv(const std::filesystem::path& path);

/// t, vc_1..vc_{N-2}, vhat_1..vhat_{N-2}, iL, iL_ref, vout, vin, d_1..d_{N-1},
/// stress_1..stress_{N-1}
[[nodiscard]] std::vector<std::string> waveform_columns(int levels);

void write_waveforms_csv(const WaveformLog& log, const std::filesystem::path& path);

/// Per-segment and overall maxima, settling time and counters as key: value lines.
[[nodiscard]] std::string summary_text(const WaveformLog& log, const Scenario& sc);

}  // namespace fcml
