#include "ifp/csv.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace ifp::io {

std::string fmt(double v) {
    if (v == kMinusInf) return "-inf";
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.16e", v);
    return buf;
}

namespace {

std::vector<std::string> split_line(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : line) {
        if (c == ',') {
            out.push_back(cur);
            cur.clear();
        } else if (c != '\r') {
            cur += c;
        }
    }
    out.push_back(cur);
    return out;
}

double parse_number(const std::string& tok, const char* what, long row) {
    if (tok == "-inf") return kMinusInf;
    try {
        std::size_t used = 0;
        double v = std::stod(tok, &used);
        if (used != tok.size()) throw std::invalid_argument(tok);
        return v;
    } catch (const std::exception&) {
        throw SolverError(Errc::config_error,
                          std::string("bad ") + what + " value '" + tok + "' at row "
                          + std::to_string(row));
    }
}

std::ifstream open_in(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in)
        throw SolverError(Errc::missing_artifact, "cannot open " + path.string());
    return in;
}

std::ofstream open_out(const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out)
        throw SolverError(Errc::config_error, "cannot write " + path.string());
    return out;
}

} // namespace

SurvivalSamples read_survival_csv(const std::filesystem::path& path) {
    auto in = open_in(path);
    std::string line;
    if (!std::getline(in, line))
        throw SolverError(Errc::config_error, "empty survival file " + path.string());
    auto hdr = split_line(line);
    SurvivalSamples s;
    if (hdr.size() == 2 && hdr[0] == "t" && hdr[1] == "p") {
        s.has_pdot = false;
    } else if (hdr.size() == 3 && hdr[0] == "t" && hdr[1] == "p" && hdr[2] == "pdot") {
        s.has_pdot = true;
    } else {
        throw SolverError(Errc::config_error,
                          "survival header must be 't,p' or 't,p,pdot' (row 1)");
    }
    long row = 1;
    while (std::getline(in, line)) {
        ++row;
        if (line.empty()) continue;
        auto tok = split_line(line);
        if (tok.size() != (s.has_pdot ? 3u : 2u))
            throw SolverError(Errc::config_error,
                              "wrong column count at row " + std::to_string(row));
        double t = parse_number(tok[0], "t", row);
        if (s.t.empty()) {
            if (std::abs(t) > 1e-12)
                throw SolverError(Errc::config_error,
                                  "first sample must be t=0 (row " + std::to_string(row) + ")");
        } else if (t <= s.t.back()) {
            throw SolverError(Errc::config_error,
                              "t must be strictly ascending (row " + std::to_string(row) + ")");
        }
        s.t.push_back(t);
        s.p.push_back(parse_number(tok[1], "p", row));
        if (s.has_pdot) s.pdot.push_back(parse_number(tok[2], "pdot", row));
    }
    if (s.t.size() < 2)
        throw SolverError(Errc::config_error, "need at least 2 samples in " + path.string());
    return s;
}

void write_survival_csv(const std::filesystem::path& path,
                        std::span<const double> t, std::span<const double> p,
                        std::span<const double> se) {
    auto out = open_out(path);
    out << (se.empty() ? "t,p_hat\n" : "t,p_hat,se\n");
    for (std::size_t i = 0; i < t.size(); ++i) {
        out << fmt(t[i]) << ',' << fmt(p[i]);
        if (!se.empty()) out << ',' << fmt(se[i]);
        out << '\n';
    }
}

Boundary read_boundary_csv(const std::filesystem::path& path) {
    auto in = open_in(path);
    std::string line;
    if (!std::getline(in, line) || split_line(line) != std::vector<std::string>{"t", "b"})
        throw SolverError(Errc::config_error, "boundary header must be 't,b' (row 1)");
    Boundary b;
    long row = 1;
    while (std::getline(in, line)) {
        ++row;
        if (line.empty()) continue;
        auto tok = split_line(line);
        if (tok.size() != 2)
            throw SolverError(Errc::config_error,
                              "wrong column count at row " + std::to_string(row));
        double t = parse_number(tok[0], "t", row);
        if (!b.t.empty() && t < b.t.back())
            throw SolverError(Errc::config_error,
                              "t must be nondecreasing (row " + std::to_string(row) + ")");
        b.t.push_back(t);
        b.b.push_back(parse_number(tok[1], "b", row));
    }
    if (b.t.size() < 2)
        throw SolverError(Errc::config_error, "need at least 2 boundary knots");
    return b;
}

void write_boundary_csv(const std::filesystem::path& path, const Boundary& b) {
    auto out = open_out(path);
    out << "t,b\n";
    for (std::size_t i = 0; i < b.t.size(); ++i)
        out << fmt(b.t[i]) << ',' << fmt(b.b[i]) << '\n';
}

void write_field_csv(const std::filesystem::path& path, const Field& f) {
    auto out = open_out(path);
    const SpaceTimeGrid& g = f.grid();
    out << "t";
    for (int j = 0; j <= g.nx; ++j) out << ',' << fmt(g.x(j));
    out << '\n';
    for (int n = 0; n <= g.nt; ++n) {
        out << fmt(g.t(n));
        for (int j = 0; j <= g.nx; ++j) out << ',' << fmt(f.at(j, n));
        out << '\n';
    }
}

void write_hodograph_csv(const std::filesystem::path& path, const HodographField& h) {
    auto out = open_out(path);
    out << "t";
    for (double z : h.z) out << ',' << fmt(z);
    out << '\n';
    for (int ti = 0; ti <= h.nt(); ++ti) {
        out << fmt(h.t[ti]);
        for (int zi = 0; zi <= h.nz(); ++zi) out << ',' << fmt(h.at(zi, ti));
        out << '\n';
    }
}

void write_plotdata_csv(const std::filesystem::path& path,
                        std::span<const PlotSeries> series) {
    auto out = open_out(path);
    out << "series,t,value,se\n";
    for (const auto& s : series)
        for (std::size_t i = 0; i < s.t.size(); ++i) {
            out << s.name << ',' << fmt(s.t[i]) << ',' << fmt(s.value[i]) << ',';
            if (!s.se.empty()) out << fmt(s.se[i]);
            out << '\n';
        }
}

} // namespace ifp::io
