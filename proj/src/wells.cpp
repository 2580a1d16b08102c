#include "permafuse/wells.hpp"
#include "permafuse/common.hpp"

#include <fstream>
#include <unordered_map>
#include <unordered_set>

namespace permafuse::ingest {

WellCounts count_sources(const std::vector<WellRecord>& wells) {
    WellCounts c;
    c.total = wells.size();
    for (const auto& w : wells) {
        if (w.has_wt()) ++c.with_wt;
        if (w.has_wl()) ++c.with_wl;
        if (w.has_wt() && w.has_wl()) ++c.with_both;
    }
    return c;
}

namespace {

std::optional<double> opt_field(const std::string& s, const std::string& what,
                                std::size_t lineno) {
    if (s.empty()) return std::nullopt;
    try {
        return parse_double(s, what);
    } catch (const InputError& e) {
        throw InputError(std::string(e.what()) + " at line " +
                         std::to_string(lineno));
    }
}

} // namespace

std::vector<WellRecord> parse_wells(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InputError("cannot open: " + path);

    std::string line;
    if (!std::getline(in, line)) throw InputError("empty wells file: " + path);
    const auto header = split_csv_line(line);

    std::unordered_map<std::string, std::size_t> col;
    for (std::size_t i = 0; i < header.size(); ++i) {
        if (col.count(header[i]))
            throw InputError("duplicate column '" + header[i] + "' in " + path);
        col[header[i]] = i;
    }
    for (const char* required : {"id", "x", "y", "k_wl_mD", "k_wt_eff_mD"})
        if (!col.count(required))
            throw InputError("missing column '" + std::string(required) + "' in " +
                             path);

    const auto cell = [&](const std::vector<std::string>& fields,
                          const char* name) -> std::string {
        auto it = col.find(name);
        if (it == col.end() || it->second >= fields.size()) return {};
        return fields[it->second];
    };

    std::vector<WellRecord> wells;
    std::unordered_set<std::string> seen;
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty() || line == "\r") continue;
        auto fields = split_csv_line(line);
        if (fields.size() != header.size())
            throw InputError("wrong field count at line " + std::to_string(lineno) +
                             " in " + path + ": expected " +
                             std::to_string(header.size()) + ", got " +
                             std::to_string(fields.size()));

        WellRecord w;
        w.id = cell(fields, "id");
        if (w.id.empty())
            throw InputError("empty well id at line " + std::to_string(lineno));
        if (!seen.insert(w.id).second)
            throw InputError("duplicate well id '" + w.id + "' at line " +
                             std::to_string(lineno));

        w.location.x = parse_double(cell(fields, "x"), "x");
        w.location.y = parse_double(cell(fields, "y"), "y");
        w.k_wl = opt_field(cell(fields, "k_wl_mD"), "k_wl_mD", lineno);
        w.k_wt_effective = opt_field(cell(fields, "k_wt_eff_mD"), "k_wt_eff_mD", lineno);
        w.k_wt_absolute = opt_field(cell(fields, "k_wt_abs_mD"), "k_wt_abs_mD", lineno);
        w.k_wl_qq = opt_field(cell(fields, "k_wl_qq_mD"), "k_wl_qq_mD", lineno);
        w.s_w = opt_field(cell(fields, "s_w"), "s_w", lineno);
        w.h_wl = opt_field(cell(fields, "h_wl"), "h_wl", lineno);
        w.h_wt = opt_field(cell(fields, "h_wt"), "h_wt", lineno);
        if (auto s = cell(fields, "date"); !s.empty()) w.date = s;
        if (auto s = cell(fields, "type"); !s.empty()) w.type = s;
        if (auto s = cell(fields, "rock_type"); !s.empty()) w.rock_type = s;

        for (const auto* k : {&w.k_wl, &w.k_wt_effective, &w.k_wt_absolute, &w.k_wl_qq})
            if (*k && **k <= 0.0)
                throw InputError("non-positive permeability at line " +
                                 std::to_string(lineno));
        if (w.s_w && (*w.s_w < 0.0 || *w.s_w > 1.0))
            throw InputError("saturation out of range at line " +
                             std::to_string(lineno));

        wells.push_back(std::move(w));
    }
    return wells;
}

void save_wells(const std::vector<WellRecord>& wells, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw InputError("cannot open for writing: " + path);
    out << "id,x,y,k_wl_mD,k_wt_eff_mD,s_w,h_wl,h_wt,date,type,rock_type,"
           "k_wt_abs_mD,k_wl_qq_mD\n";
    const auto opt = [](const std::optional<double>& v) {
        return v ? fmt_double(*v) : std::string{};
    };
    const auto opts = [](const std::optional<std::string>& v) {
        return v ? *v : std::string{};
    };
    for (const auto& w : wells) {
        out << w.id << ',' << fmt_double(w.location.x) << ','
            << fmt_double(w.location.y) << ',' << opt(w.k_wl) << ','
            << opt(w.k_wt_effective) << ',' << opt(w.s_w) << ',' << opt(w.h_wl)
            << ',' << opt(w.h_wt) << ',' << opts(w.date) << ',' << opts(w.type)
            << ',' << opts(w.rock_type) << ',' << opt(w.k_wt_absolute) << ','
            << opt(w.k_wl_qq) << "\n";
    }
    if (!out) throw InputError("write failed: " + path);
}

} // namespace permafuse::ingest
