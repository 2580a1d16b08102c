#ifndef PERMAFUSE_WELLS_HPP
#define PERMAFUSE_WELLS_HPP

#include "permafuse/geometry.hpp"

#include <optional>
#include <string>
#include <vector>

namespace permafuse::ingest {

/// One well with whatever measurements it has. Permeabilities are stored in
/// millidarcy as read; conversion to log10 happens at the point of use.
struct WellRecord {
    std::string id;
    domain::Point2 location;

    std::optional<double> k_wl;           ///< well-log permeability, mD
    std::optional<double> k_wt_effective; ///< well-test effective permeability, mD
    std::optional<double> k_wt_absolute;  ///< well-test absolute permeability, mD
    std::optional<double> k_wl_qq;        ///< quantile-matched well-log value, mD

    std::optional<double> s_w;            ///< water saturation at the test
    std::optional<double> h_wl;           ///< logged interval thickness, m
    std::optional<double> h_wt;           ///< tested interval thickness, m
    std::optional<std::string> date;
    std::optional<std::string> type;
    std::optional<std::string> rock_type;

    bool has_wt() const { return k_wt_absolute || k_wt_effective; }
    bool has_wl() const { return k_wl_qq || k_wl; }

    /// Well-test value used in fusion: absolute when available, else
    /// effective.
    double wt_value() const {
        return k_wt_absolute ? *k_wt_absolute : *k_wt_effective;
    }

    /// Well-log value used in fusion: quantile-matched when available, else
    /// the raw log value.
    double wl_value() const { return k_wl_qq ? *k_wl_qq : *k_wl; }
};

struct WellCounts {
    std::size_t total = 0;
    std::size_t with_wt = 0;
    std::size_t with_wl = 0;
    std::size_t with_both = 0;
};

WellCounts count_sources(const std::vector<WellRecord>& wells);

/// Parse the wells CSV. Required columns: id,x,y,k_wl_mD,k_wt_eff_mD.
/// Any of s_w,h_wl,h_wt,date,type,rock_type,k_wt_abs_mD,k_wl_qq_mD may
/// follow in any order. Empty cells mean "not measured". Throws InputError
/// with the offending line number for malformed rows, duplicate ids,
/// non-positive permeabilities, and saturations outside [0, 1].
std::vector<WellRecord> parse_wells(const std::string& path);

void save_wells(const std::vector<WellRecord>& wells, const std::string& path);

} // namespace permafuse::ingest

#endif
