#ifndef PERMAFUSE_RELPERM_HPP
#define PERMAFUSE_RELPERM_HPP

#include <string>
#include <vector>

namespace permafuse::ingest {

/// Relative permeability curves for one rock type, tabulated against water
/// saturation. Rows are strictly increasing in s_w; kr_o is non-increasing
/// and kr_w non-decreasing, all within [0, 1].
struct RelPermTable {
    struct Row {
        double s_w;
        double kr_o;
        double kr_w;
    };
    std::string rock_type = "default";
    std::vector<Row> rows;

    void validate() const;
};

struct FluidProps {
    double mu_o = 1.0;   ///< oil viscosity, cP
    double mu_w = 1.0;   ///< water viscosity, cP
    double mu_liq = 1.0; ///< produced-liquid viscosity, cP

    void validate() const;
};

struct KrPair {
    double kr_o;
    double kr_w;
};

/// Piecewise-linear interpolation of both curves at s_w. Values outside the
/// tabulated range raise "saturation out of range" rather than clamping.
KrPair interp_relperm(const RelPermTable& table, double s_w);

/// Converts a well-test effective permeability to absolute permeability by
/// dividing out the total mobility at the test saturation:
///     K_abs = K_wt / (mu_liq * (kr_o/mu_o + kr_w/mu_w)).
double effective_to_absolute(double k_wt_eff, double s_w, const FluidProps& fluids,
                             const RelPermTable& table);

/// Rel-perm CSV: header `s_w,kr_o,kr_w`, one row per knot.
RelPermTable load_relperm(const std::string& path, const std::string& rock_type);
void save_relperm(const RelPermTable& table, const std::string& path);

/// Fluids JSON: `{"mu_o": .., "mu_w": .., "mu_liq": ..}` in cP.
FluidProps load_fluids(const std::string& path);
void save_fluids(const FluidProps& fluids, const std::string& path);

} // namespace permafuse::ingest

#endif
