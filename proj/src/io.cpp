#include "nilray/io.hpp"

#include <charconv>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace nilray {

std::string fmt_double(double x) {
    char buf[40];
    auto res = std::to_chars(buf, buf + sizeof(buf), x);
    return std::string(buf, res.ptr);
}

double parse_double(std::string_view text) {
    double value = 0.0;
    const char* begin = text.data();
    const char* end = begin + text.size();
    while (begin < end && (*begin == ' ' || *begin == '\t')) ++begin;
    auto res = std::from_chars(begin, end, value);
    if (res.ec != std::errc() || res.ptr == begin)
        throw std::invalid_argument("not a number: '" + std::string(text) + "'");
    return value;
}

std::uint64_t fnv1a64(std::string_view data) {
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (unsigned char c : data) {
        h ^= c;
        h *= 0x100000001b3ull;
    }
    return h;
}

std::string fnv1a64_hex(std::string_view data) {
    static const char* digits = "0123456789abcdef";
    std::uint64_t h = fnv1a64(data);
    std::string out(16, '0');
    for (int i = 15; i >= 0; --i) {
        out[i] = digits[h & 0xf];
        h >>= 4;
    }
    return out;
}

void write_csv(const std::filesystem::path& path, const OutputMeta& meta,
               const std::string& header,
               const std::vector<std::vector<double>>& rows) {
    std::ostringstream os;
    os << "# config_hash=" << meta.config_hash << "\n";
    os << "# seed=" << meta.seed << "\n";
    for (const auto& [k, v] : meta.entries) os << "# " << k << "=" << v << "\n";
    os << header << "\n";
    for (const auto& row : rows) {
        for (std::size_t i = 0; i < row.size(); ++i) {
            if (i) os << ",";
            os << fmt_double(row[i]);
        }
        os << "\n";
    }
    write_text_file(path, os.str());
}

void write_csv_lines(const std::filesystem::path& path, const OutputMeta& meta,
                     const std::string& header, const std::vector<std::string>& lines) {
    std::ostringstream os;
    os << "# config_hash=" << meta.config_hash << "\n";
    os << "# seed=" << meta.seed << "\n";
    for (const auto& [k, v] : meta.entries) os << "# " << k << "=" << v << "\n";
    os << header << "\n";
    for (const auto& line : lines) os << line << "\n";
    write_text_file(path, os.str());
}

std::string read_text_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open file: " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_text_file(const std::filesystem::path& path, std::string_view content) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write file: " + path.string());
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
}

}  // namespace nilray
