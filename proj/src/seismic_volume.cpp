#include "permafuse/seismic_volume.hpp"
#include "permafuse/common.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>

namespace permafuse::ingest {

void SeismicVolume::validate() const {
    if (ni == 0 || nx == 0 || nz == 0) throw InputError("empty seismic volume");
    if (!(dx > 0.0) || !(dy > 0.0) || !(dz_ms > 0.0))
        throw InputError("seismic spacings must be positive");
    if (data.size() != ni * nx * nz)
        throw InputError("size mismatch: volume declares " +
                         std::to_string(ni * nx * nz) + " samples, payload has " +
                         std::to_string(data.size()));
    if (horizon.size() != ni * nx)
        throw InputError("size mismatch: horizon has " +
                         std::to_string(horizon.size()) + " entries for " +
                         std::to_string(ni * nx) + " traces");
    for (double z : horizon)
        if (!(z >= 0.0) || !(z < static_cast<double>(nz)))
            throw InputError("horizon outside volume z-range");
}

double SeismicVolume::horizon_at(double x, double y) const {
    const double fi = (x - origin_x) / dx;
    const double fj = (y - origin_y) / dy;
    const double max_i = static_cast<double>(ni - 1);
    const double max_j = static_cast<double>(nx - 1);
    if (fi < 0.0 || fi > max_i || fj < 0.0 || fj > max_j) {
        const auto i = static_cast<std::size_t>(std::clamp(std::round(fi), 0.0, max_i));
        const auto j = static_cast<std::size_t>(std::clamp(std::round(fj), 0.0, max_j));
        return horizon[i * nx + j];
    }
    const auto i0 = static_cast<std::size_t>(fi) == ni - 1
                        ? ni - 2
                        : static_cast<std::size_t>(fi);
    const auto j0 = static_cast<std::size_t>(fj) == nx - 1
                        ? nx - 2
                        : static_cast<std::size_t>(fj);
    const double tx = fi - static_cast<double>(i0);
    const double ty = fj - static_cast<double>(j0);
    const double z00 = horizon[i0 * nx + j0];
    const double z10 = horizon[(i0 + 1) * nx + j0];
    const double z01 = horizon[i0 * nx + j0 + 1];
    const double z11 = horizon[(i0 + 1) * nx + j0 + 1];
    return (1.0 - tx) * (1.0 - ty) * z00 + tx * (1.0 - ty) * z10 +
           (1.0 - tx) * ty * z01 + tx * ty * z11;
}

SeismicVolume load_seismic(const std::string& volume_path,
                           const std::string& horizon_path) {
    std::ifstream in(volume_path, std::ios::binary);
    if (!in) throw InputError("cannot open: " + volume_path);
    std::string line;
    if (!std::getline(in, line))
        throw InputError("empty seismic file: " + volume_path);
    nlohmann::json h;
    try {
        h = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
        throw InputError("bad seismic header in " + volume_path + ": " + e.what());
    }

    SeismicVolume v;
    v.ni = h.at("ni").get<std::size_t>();
    v.nx = h.at("nx").get<std::size_t>();
    v.nz = h.at("nz").get<std::size_t>();
    v.origin_x = h.at("origin_x").get<double>();
    v.origin_y = h.at("origin_y").get<double>();
    v.dx = h.at("dx").get<double>();
    v.dy = h.at("dy").get<double>();
    v.dz_ms = h.at("dz_ms").get<double>();

    const std::size_t count = v.ni * v.nx * v.nz;
    v.data.resize(count);
    in.read(reinterpret_cast<char*>(v.data.data()),
            static_cast<std::streamsize>(count * sizeof(float)));
    if (static_cast<std::size_t>(in.gcount()) != count * sizeof(float))
        throw InputError("size mismatch: payload shorter than header declares in " +
                         volume_path);
    char extra;
    if (in.read(&extra, 1))
        throw InputError("size mismatch: payload longer than header declares in " +
                         volume_path);
    for (float a : v.data)
        if (!std::isfinite(a)) throw InputError("non-finite amplitude in " + volume_path);

    std::ifstream hin(horizon_path, std::ios::binary);
    if (!hin) throw InputError("cannot open: " + horizon_path);
    if (!std::getline(hin, line) ||
        split_csv_line(line) != std::vector<std::string>{"x", "y", "z_index"})
        throw InputError("bad horizon CSV header in " + horizon_path);
    v.horizon.assign(v.ni * v.nx, -1.0);
    std::size_t filled = 0;
    std::size_t lineno = 1;
    while (std::getline(hin, line)) {
        ++lineno;
        if (line.empty() || line == "\r") continue;
        auto fields = split_csv_line(line);
        if (fields.size() != 3)
            throw InputError("malformed row at line " + std::to_string(lineno) +
                             " in " + horizon_path);
        const double x = parse_double(fields[0], "x");
        const double y = parse_double(fields[1], "y");
        const double z = parse_double(fields[2], "z_index");
        const double fi = (x - v.origin_x) / v.dx;
        const double fj = (y - v.origin_y) / v.dy;
        const double ri = std::round(fi);
        const double rj = std::round(fj);
        if (std::abs(fi - ri) > 1e-6 || std::abs(fj - rj) > 1e-6 || ri < 0.0 ||
            rj < 0.0 || ri >= static_cast<double>(v.ni) ||
            rj >= static_cast<double>(v.nx))
            throw InputError("horizon point off the trace lattice at line " +
                             std::to_string(lineno) + " in " + horizon_path);
        const std::size_t idx = static_cast<std::size_t>(ri) * v.nx +
                                static_cast<std::size_t>(rj);
        if (v.horizon[idx] >= 0.0)
            throw InputError("duplicate horizon trace at line " +
                             std::to_string(lineno) + " in " + horizon_path);
        v.horizon[idx] = z;
        ++filled;
    }
    if (filled != v.ni * v.nx)
        throw InputError("size mismatch: horizon covers " + std::to_string(filled) +
                         " of " + std::to_string(v.ni * v.nx) + " traces");
    v.validate();
    return v;
}

void save_seismic(const SeismicVolume& volume, const std::string& volume_path,
                  const std::string& horizon_path) {
    volume.validate();
    std::ofstream out(volume_path, std::ios::binary);
    if (!out) throw InputError("cannot open for writing: " + volume_path);
    nlohmann::json h = {
        {"ni", volume.ni},       {"nx", volume.nx},
        {"nz", volume.nz},       {"origin_x", volume.origin_x},
        {"origin_y", volume.origin_y}, {"dx", volume.dx},
        {"dy", volume.dy},       {"dz_ms", volume.dz_ms},
    };
    out << h.dump() << "\n";
    out.write(reinterpret_cast<const char*>(volume.data.data()),
              static_cast<std::streamsize>(volume.data.size() * sizeof(float)));
    if (!out) throw InputError("write failed: " + volume_path);

    std::ofstream hout(horizon_path, std::ios::binary);
    if (!hout) throw InputError("cannot open for writing: " + horizon_path);
    hout << "x,y,z_index\n";
    for (std::size_t i = 0; i < volume.ni; ++i)
        for (std::size_t j = 0; j < volume.nx; ++j)
            hout << fmt_double(volume.origin_x + static_cast<double>(i) * volume.dx)
                 << ',' << fmt_double(volume.origin_y + static_cast<double>(j) * volume.dy)
                 << ',' << fmt_double(volume.horizon[i * volume.nx + j]) << "\n";
    if (!hout) throw InputError("write failed: " + horizon_path);
}

} // namespace permafuse::ingest
