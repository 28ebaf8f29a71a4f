#include "spinramp/io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>

#include "spinramp/errors.hpp"

namespace spinramp {

std::string format_number(double v) {
    if (std::isnan(v)) {
        return "nan";
    }
    if (std::isinf(v)) {
        return v > 0 ? "inf" : "-inf";
    }
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.12g", v == 0.0 ? 0.0 : v);
    return buf;
}

void write_train_csv(std::ostream& out, const EchoTrain& train, const Metadata& meta) {
    out << "# nodes=" << train.n_nodes << '\n'
        << "# relative_sigma=" << format_number(train.relative_sigma) << '\n'
        << "# scheme=" << train.scheme << '\n'
        << "# m_aux=" << format_number(train.m_aux) << '\n';
    for (const auto& [k, v] : meta) {
        out << "# " << k << '=' << v << '\n';
    }
    out << "k,t_s,omega0_norm,S_in,S_out,Mz\n";
    for (const auto& s : train.samples) {
        out << s.k << ',' << format_number(s.t) << ',' << format_number(s.omega0_norm) << ','
            << format_number(s.s_in) << ',' << format_number(s.s_out) << ','
            << format_number(s.m_z) << '\n';
    }
}

void write_profile_csv(std::ostream& out, const AdiabaticityProfile& p) {
    out << "omega0_norm,theta,dtheta,alpha,nu_crit,A\n";
    for (std::size_t i = 0; i < p.size(); ++i) {
        out << format_number(p.grid[i]) << ',' << format_number(p.theta[i]) << ','
            << (p.dtheta_domega.empty() ? "" : format_number(p.dtheta_domega[i])) << ','
            << format_number(p.alpha[i]) << ','
            << (p.nu_crit.empty() ? "" : format_number(p.nu_crit[i])) << ','
            << (p.A.empty() ? "" : format_number(p.A[i])) << '\n';
    }
}

void write_theory_csv(std::ostream& out, const AdiabaticPrediction& pred,
                      const CPPhaseProfile* cp) {
    out << "omega0_norm,S_in0,S_in1,S_out1_abs,phi_cp,sigma_phi_sq,visibility\n";
    std::size_t j = 0;
    for (std::size_t i = 0; i < pred.grid.size(); ++i) {
        const double w = pred.grid[i];
        out << format_number(w) << ',' << format_number(pred.s_in0[i]) << ','
            << (pred.has_first_order() ? format_number(pred.s_in1[i]) : "") << ','
            << (pred.has_first_order() ? format_number(pred.s_out1_abs[i]) : "") << ',';
        // CP grids are subsets of the theory grid starting later; match by value.
        if (cp != nullptr) {
            while (j < cp->grid.size() && cp->grid[j] < w - 1e-12) {
                ++j;
            }
        }
        if (cp != nullptr && j < cp->grid.size() && std::abs(cp->grid[j] - w) <= 1e-12) {
            out << format_number(cp->phi_cp[j]) << ','
                << (cp->sigma_phi_sq.empty() ? "" : format_number(cp->sigma_phi_sq[j])) << ','
                << (cp->visibility.empty() ? "" : format_number(cp->visibility[j])) << '\n';
        } else {
            out << ",,\n";
        }
    }
}

void write_cp_csv(std::ostream& out, const CPPhaseProfile& cp) {
    out << "# omega0_start=" << format_number(cp.omega0_start) << '\n';
    out << "omega0_norm,phi_cp,spread_integral,sigma_phi_sq,visibility\n";
    for (std::size_t i = 0; i < cp.grid.size(); ++i) {
        out << format_number(cp.grid[i]) << ',' << format_number(cp.phi_cp[i]) << ','
            << (cp.spread_integral.empty() ? "" : format_number(cp.spread_integral[i])) << ','
            << (cp.sigma_phi_sq.empty() ? "" : format_number(cp.sigma_phi_sq[i])) << ','
            << (cp.visibility.empty() ? "" : format_number(cp.visibility[i])) << '\n';
    }
}

void write_rto_csv(std::ostream& out, const std::vector<RtoPoint>& points) {
    out << "delta,S_RTO,S_out,n_echoes\n";
    for (const auto& p : points) {
        out << format_number(p.delta) << ',' << format_number(p.s_rto) << ','
            << format_number(p.s_out) << ',' << p.n_echoes << '\n';
    }
}

const std::vector<double>& CsvTable::column(const std::string& name) const {
    const auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) {
        throw InvalidArgument("CSV has no column '" + name + "'");
    }
    return columns[static_cast<std::size_t>(it - header.begin())];
}

bool CsvTable::has(const std::string& name) const {
    return std::find(header.begin(), header.end(), name) != header.end();
}

namespace {

std::vector<std::string> split(const std::string& line) {
    std::vector<std::string> cells;
    std::string cell;
    std::istringstream ss(line);
    while (std::getline(ss, cell, ',')) {
        cells.push_back(cell);
    }
    if (!line.empty() && line.back() == ',') {
        cells.emplace_back();
    }
    return cells;
}

} // namespace

CsvTable read_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw InvalidArgument("cannot open " + path);
    }
    CsvTable t;
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') {
            line.pop_back();
        }
        if (line.empty() || line.front() == '#') {
            continue;
        }
        if (t.header.empty()) {
            t.header = split(line);
            t.columns.resize(t.header.size());
            continue;
        }
        const auto cells = split(line);
        for (std::size_t c = 0; c < t.header.size(); ++c) {
            double v = std::numeric_limits<double>::quiet_NaN();
            if (c < cells.size() && !cells[c].empty()) {
                try {
                    v = std::stod(cells[c]);
                } catch (const std::exception&) {
                    throw InvalidArgument(path + ": non-numeric cell '" + cells[c] + "'");
                }
            }
            t.columns[c].push_back(v);
        }
    }
    if (t.header.empty()) {
        throw InvalidArgument(path + ": empty CSV");
    }
    return t;
}

void write_text_file(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw std::runtime_error("cannot write " + path);
    }
    out << text;
    if (!out) {
        throw std::runtime_error("write failed for " + path);
    }
}

} // namespace spinramp
