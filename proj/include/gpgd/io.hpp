#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstddef>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "gpgd/solver.hpp"
#include "gpgd/vector_ops.hpp"

namespace gpgd::io {

class WriteError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// 17 significant digits: enough to round-trip any double.
inline std::string format_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

/// Writes to a sibling temp file and renames it into place.
inline void write_file_atomic(const std::filesystem::path& path, std::string_view content) {
    std::error_code ec;
    if (path.has_parent_path()) {
        std::filesystem::create_directories(path.parent_path(), ec);
        if (ec) throw WriteError("cannot create directory " + path.parent_path().string() + ": " + ec.message());
    }
    std::filesystem::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
        if (!f) throw WriteError("cannot open " + tmp.string() + " for writing");
        f.write(content.data(), static_cast<std::streamsize>(content.size()));
        f.flush();
        if (!f) {
            std::filesystem::remove(tmp, ec);
            throw WriteError("failed writing " + tmp.string());
        }
    }
    std::filesystem::rename(tmp, path, ec);
    if (ec) {
        std::filesystem::remove(tmp, ec);
        throw WriteError("cannot move " + tmp.string() + " to " + path.string());
    }
}

/// Trace as CSV: `iter,rmsd,rmsd_normalized,objective[,bound][,action_index]`.
/// `bound`, when given, is indexed by iteration number. Rows without an
/// action (k = 0) carry -1.
inline std::string trace_csv(const IterateTrace& trace, const std::optional<Vector>& bound, bool with_action) {
    std::ostringstream os;
    os << "iter,rmsd,rmsd_normalized,objective";
    if (bound) os << ",bound";
    if (with_action) os << ",action_index";
    os << '\n';
    for (const auto& r : trace.records) {
        os << r.k << ',' << format_double(r.rmsd) << ',' << format_double(r.rmsd_normalized) << ','
           << format_double(r.objective);
        if (bound) os << ',' << format_double(bound->at(r.k));
        if (with_action) {
            if (r.action_index) os << ',' << *r.action_index;
            else os << ",-1";
        }
        os << '\n';
    }
    return os.str();
}

/// Plain-text portable graymap (P2): width = n_theta, height = n_r, so image
/// row r holds the angular samples of radius r. Values are scaled from [0,1]
/// to 0..255.
inline std::string polar_pgm(std::span<const double> x, std::size_t n_r, std::size_t n_theta) {
    detail::require_dims(x.size(), n_r * n_theta, "polar_pgm");
    std::ostringstream os;
    os << "P2\n" << n_theta << ' ' << n_r << "\n255\n";
    for (std::size_t r = 0; r < n_r; ++r) {
        for (std::size_t t = 0; t < n_theta; ++t) {
            const double v = std::clamp(x[r * n_theta + t], 0.0, 1.0);
            os << static_cast<int>(std::lround(255.0 * v)) << (t + 1 == n_theta ? '\n' : ' ');
        }
    }
    return os.str();
}

/// One line per radius, n_theta comma-separated values.
inline std::string polar_csv(std::span<const double> x, std::size_t n_r, std::size_t n_theta) {
    detail::require_dims(x.size(), n_r * n_theta, "polar_csv");
    std::ostringstream os;
    for (std::size_t r = 0; r < n_r; ++r) {
        for (std::size_t t = 0; t < n_theta; ++t) {
            os << format_double(x[r * n_theta + t]) << (t + 1 == n_theta ? '\n' : ',');
        }
    }
    return os.str();
}

/// Reads back `polar_csv` output in row-major order.
inline Vector read_polar_csv(std::string_view text) {
    Vector out;
    std::size_t pos = 0;
    while (pos < text.size()) {
        const std::size_t end = text.find_first_of(",\n", pos);
        const std::string_view field = text.substr(pos, end == std::string_view::npos ? text.size() - pos : end - pos);
        if (!field.empty()) {
            double v = 0.0;
            const auto res = std::from_chars(field.data(), field.data() + field.size(), v);
            if (res.ec != std::errc{} || res.ptr != field.data() + field.size()) {
                throw std::invalid_argument("read_polar_csv: bad number '" + std::string(field) + "'");
            }
            out.push_back(v);
        }
        if (end == std::string_view::npos) break;
        pos = end + 1;
    }
    return out;
}

} // namespace gpgd::io
