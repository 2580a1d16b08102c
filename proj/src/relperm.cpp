#include "permafuse/relperm.hpp"
#include "permafuse/common.hpp"

#include <json.hpp>

#include <fstream>

namespace permafuse::ingest {

void RelPermTable::validate() const {
    if (rows.size() < 2) throw InputError("rel-perm table needs at least 2 rows");
    for (std::size_t i = 0; i < rows.size(); ++i) {
        const Row& r = rows[i];
        if (r.s_w < 0.0 || r.s_w > 1.0 || r.kr_o < 0.0 || r.kr_o > 1.0 ||
            r.kr_w < 0.0 || r.kr_w > 1.0)
            throw InputError("rel-perm value out of [0,1] at row " +
                             std::to_string(i));
        if (i > 0) {
            if (rows[i - 1].s_w >= r.s_w)
                throw InputError("rel-perm s_w not strictly increasing at row " +
                                 std::to_string(i));
            if (rows[i - 1].kr_o < r.kr_o)
                throw InputError("rel-perm kr_o not non-increasing at row " +
                                 std::to_string(i));
            if (rows[i - 1].kr_w > r.kr_w)
                throw InputError("rel-perm kr_w not non-decreasing at row " +
                                 std::to_string(i));
        }
    }
}

void FluidProps::validate() const {
    if (!(mu_o > 0.0) || !(mu_w > 0.0) || !(mu_liq > 0.0))
        throw InputError("viscosities must be positive");
}

KrPair interp_relperm(const RelPermTable& table, double s_w) {
    const auto& rows = table.rows;
    if (rows.size() < 2) throw InputError("rel-perm table needs at least 2 rows");
    if (s_w < rows.front().s_w || s_w > rows.back().s_w)
        throw InputError("saturation out of range");
    for (std::size_t i = 1; i < rows.size(); ++i) {
        if (s_w <= rows[i].s_w) {
            const auto& a = rows[i - 1];
            const auto& b = rows[i];
            const double t = (s_w - a.s_w) / (b.s_w - a.s_w);
            return {a.kr_o + t * (b.kr_o - a.kr_o), a.kr_w + t * (b.kr_w - a.kr_w)};
        }
    }
    return {rows.back().kr_o, rows.back().kr_w};
}

double effective_to_absolute(double k_wt_eff, double s_w, const FluidProps& fluids,
                             const RelPermTable& table) {
    if (!(k_wt_eff > 0.0)) throw InputError("non-positive permeability");
    fluids.validate();
    const KrPair kr = interp_relperm(table, s_w);
    const double mobility = kr.kr_o / fluids.mu_o + kr.kr_w / fluids.mu_w;
    if (mobility == 0.0) throw NumericError("zero total mobility");
    return k_wt_eff / (fluids.mu_liq * mobility);
}

RelPermTable load_relperm(const std::string& path, const std::string& rock_type) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InputError("cannot open: " + path);
    std::string line;
    if (!std::getline(in, line) ||
        split_csv_line(line) != std::vector<std::string>{"s_w", "kr_o", "kr_w"})
        throw InputError("bad rel-perm CSV header in " + path);
    RelPermTable table;
    table.rock_type = rock_type;
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty() || line == "\r") continue;
        auto fields = split_csv_line(line);
        if (fields.size() != 3)
            throw InputError("malformed row at line " + std::to_string(lineno) +
                             " in " + path);
        table.rows.push_back({parse_double(fields[0], "s_w"),
                              parse_double(fields[1], "kr_o"),
                              parse_double(fields[2], "kr_w")});
    }
    table.validate();
    return table;
}

FluidProps load_fluids(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InputError("cannot open: " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw InputError("bad fluids JSON in " + path + ": " + e.what());
    }
    FluidProps f;
    f.mu_o = j.at("mu_o").get<double>();
    f.mu_w = j.at("mu_w").get<double>();
    f.mu_liq = j.at("mu_liq").get<double>();
    f.validate();
    return f;
}

void save_relperm(const RelPermTable& table, const std::string& path) {
    table.validate();
    std::ofstream out(path, std::ios::binary);
    if (!out) throw InputError("cannot open for writing: " + path);
    out << "s_w,kr_o,kr_w\n";
    for (const auto& r : table.rows)
        out << fmt_double(r.s_w) << ',' << fmt_double(r.kr_o) << ','
            << fmt_double(r.kr_w) << '\n';
    if (!out) throw InputError("write failed: " + path);
}

void save_fluids(const FluidProps& fluids, const std::string& path) {
    fluids.validate();
    std::ofstream out(path, std::ios::binary);
    if (!out) throw InputError("cannot open for writing: " + path);
    nlohmann::json j = {
        {"mu_o", fluids.mu_o}, {"mu_w", fluids.mu_w}, {"mu_liq", fluids.mu_liq}};
    out << j.dump() << "\n";
    if (!out) throw InputError("write failed: " + path);
}

} // namespace permafuse::ingest
