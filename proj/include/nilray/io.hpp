#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace nilray {

// Shortest round-trip decimal representation (std::to_chars), so that equal
// doubles always serialize to equal bytes.
std::string fmt_double(double x);

// std::from_chars-based parse; unlike std::stod it accepts the subnormals
// fmt_double can emit.
double parse_double(std::string_view text);

std::uint64_t fnv1a64(std::string_view data);
std::string fnv1a64_hex(std::string_view data);

// Provenance block embedded in every CLI output file.
struct OutputMeta {
    std::string config_hash;
    std::uint64_t seed = 0;
    std::vector<std::pair<std::string, std::string>> entries;

    void add(std::string key, std::string value) {
        entries.emplace_back(std::move(key), std::move(value));
    }
    void add(std::string key, double value) { add(std::move(key), fmt_double(value)); }
    void add(std::string key, std::int64_t value) {
        add(std::move(key), std::to_string(value));
    }
};

// CSV layout: '#' metadata lines, then the header row, then data rows.
void write_csv(const std::filesystem::path& path, const OutputMeta& meta,
               const std::string& header,
               const std::vector<std::vector<double>>& rows);

// same layout with caller-formatted data lines (for mixed-type columns)
void write_csv_lines(const std::filesystem::path& path, const OutputMeta& meta,
                     const std::string& header, const std::vector<std::string>& lines);

std::string read_text_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, std::string_view content);

}  // namespace nilray
