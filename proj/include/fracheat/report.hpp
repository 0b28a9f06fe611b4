#pragma once

#include <cstdint>
#include <cstdio>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "fracheat/version.hpp"

namespace fracheat {

/// Identifies a run; every emitted file records it in a '#' header line so
/// outputs are attributable and reruns are byte-comparable.
struct RunManifest {
    std::string subcommand;
    std::uint64_t seed = 0;
    std::string config_json;  // compact resolved configuration

    std::string line() const {
        return "# fracheat v" + std::string(version) + " subcommand=" + subcommand +
               " seed=" + std::to_string(seed) + " config=" + config_json;
    }
};

/// Full-precision scientific formatting; fixed width keeps reruns byte-identical.
inline std::string format_number(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17e", v);
    return buf;
}

/// Writes one CSV report: manifest comment line, header row, then rows of
/// pre-formatted cells.
inline void write_csv(const std::string& path, const RunManifest& manifest,
                      const std::vector<std::string>& header,
                      const std::vector<std::vector<std::string>>& rows) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("io-error: cannot open '" + path + "' for writing");
    out << manifest.line() << "\n";
    for (std::size_t i = 0; i < header.size(); ++i) {
        if (i) out << ",";
        out << header[i];
    }
    out << "\n";
    for (const auto& row : rows) {
        for (std::size_t i = 0; i < row.size(); ++i) {
            if (i) out << ",";
            out << row[i];
        }
        out << "\n";
    }
    if (!out) throw std::runtime_error("io-error: short write to '" + path + "'");
}

}  // namespace fracheat
