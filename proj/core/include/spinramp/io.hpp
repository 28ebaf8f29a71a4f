#pragma once

// CSV emission and loading. Numbers are printed with %.12g so files are
// stable across runs and platforms with the same floating-point results.

#include <map>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

#include "spinramp/adiabaticity.hpp"
#include "spinramp/bloch_sim.hpp"
#include "spinramp/theory.hpp"

namespace spinramp {

std::string format_number(double v); // "inf", "-inf", "nan" for non-finite values

using Metadata = std::vector<std::pair<std::string, std::string>>;

void write_train_csv(std::ostream& out, const EchoTrain& train, const Metadata& meta = {});
void write_profile_csv(std::ostream& out, const AdiabaticityProfile& profile);
/// Theory curves; CP columns are blank outside the phase profile's grid.
void write_theory_csv(std::ostream& out, const AdiabaticPrediction& prediction,
                      const CPPhaseProfile* cp = nullptr);
void write_cp_csv(std::ostream& out, const CPPhaseProfile& cp);
void write_rto_csv(std::ostream& out, const std::vector<RtoPoint>& points);

struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<double>> columns;
    const std::vector<double>& column(const std::string& name) const; // throws InvalidArgument
    bool has(const std::string& name) const;
};

/// Reads a numeric CSV; lines starting with '#' are skipped, blank cells are NaN.
CsvTable read_csv(const std::string& path);

void write_text_file(const std::string& path, const std::string& text);

} // namespace spinramp
