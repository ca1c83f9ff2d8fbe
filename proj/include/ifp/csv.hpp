#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "ifp/grid.hpp"
#include "ifp/hodograph.hpp"
#include "ifp/model.hpp"

namespace ifp::io {

/// Full-precision scientific notation (17 significant digits); all numeric
/// artifacts use this so identical runs produce byte-identical files.
std::string fmt(double v);

struct SurvivalSamples {
    std::vector<double> t, p, pdot;
    bool has_pdot = false;
};

/// Reads `t,p[,pdot]` with strictly ascending t and first row t=0.
/// Malformed input reports the offending row number.
SurvivalSamples read_survival_csv(const std::filesystem::path& path);

void write_survival_csv(const std::filesystem::path& path,
                        std::span<const double> t, std::span<const double> p,
                        std::span<const double> se = {});

/// Boundary CSV `t,b` with literal `-inf` for the sentinel.
Boundary read_boundary_csv(const std::filesystem::path& path);
void write_boundary_csv(const std::filesystem::path& path, const Boundary& b);

/// Matrix dump: x header row, t index column.
void write_field_csv(const std::filesystem::path& path, const Field& f);

/// Strip dump: z header row, t index column.
void write_hodograph_csv(const std::filesystem::path& path, const HodographField& h);

struct PlotSeries {
    std::string name;
    std::vector<double> t, value, se; // se may be empty
};

/// Long-format bundle `series,t,value,se` with deterministic column and
/// row order.
void write_plotdata_csv(const std::filesystem::path& path,
                        std::span<const PlotSeries> series);

} // namespace ifp::io
