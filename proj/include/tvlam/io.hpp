#pragma once

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include "tvlam/grid.hpp"
#include "tvlam/spectral.hpp"

namespace tvlam::io {

/// Malformed or unreadable input data (as opposed to invalid arguments).
class ParseError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// 17 significant digits: enough for binary doubles to round-trip exactly.
inline std::string format_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

namespace detail {

inline std::string trimmed(const std::string& s) {
    const auto begin = s.find_first_not_of(" \t\r\f\v");
    if (begin == std::string::npos) return {};
    const auto end = s.find_last_not_of(" \t\r\f\v");
    return s.substr(begin, end - begin + 1);
}

inline double parse_double(const std::string& token, const std::string& where) {
    std::size_t consumed = 0;
    double v = 0.0;
    try {
        v = std::stod(token, &consumed);
    } catch (const std::exception&) {
        throw ParseError(where + ": cannot parse '" + token + "' as a number");
    }
    if (consumed != token.size())
        throw ParseError(where + ": trailing characters in '" + token + "'");
    if (!std::isfinite(v))
        throw ParseError(where + ": non-finite value '" + token + "'");
    return v;
}

} // namespace detail

/// Reads numeric CSV. One value per line gives a 1D signal; comma-separated
/// rows of equal length give a 2D image. Blank lines and lines starting with
/// '#' are skipped.
struct CsvData {
    long rows = 0;
    long cols = 0;
    std::vector<double> values;
};

inline CsvData read_csv(std::istream& in, const std::string& name) {
    CsvData data;
    std::string line;
    long lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const std::string row = detail::trimmed(line);
        if (row.empty() || row.front() == '#') continue;
        long cols = 0;
        std::size_t pos = 0;
        while (pos <= row.size()) {
            const auto comma = row.find(',', pos);
            const auto end = comma == std::string::npos ? row.size() : comma;
            const std::string token = detail::trimmed(row.substr(pos, end - pos));
            const std::string where = name + ":" + std::to_string(lineno);
            if (token.empty()) throw ParseError(where + ": empty field");
            data.values.push_back(detail::parse_double(token, where));
            ++cols;
            if (comma == std::string::npos) break;
            pos = comma + 1;
        }
        if (data.rows > 0 && cols != data.cols)
            throw ParseError(name + ":" + std::to_string(lineno) + ": expected " +
                             std::to_string(data.cols) + " columns, got " + std::to_string(cols));
        data.cols = cols;
        ++data.rows;
    }
    if (data.values.empty()) throw ParseError(name + ": no samples");
    return data;
}

inline CsvData read_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open " + path.string());
    return read_csv(in, path.filename().string());
}

inline void write_csv(std::ostream& out, long rows, long cols, std::span<const double> values) {
    for (long r = 0; r < rows; ++r) {
        for (long c = 0; c < cols; ++c) {
            if (c > 0) out << ',';
            out << format_double(values[static_cast<std::size_t>(r * cols + c)]);
        }
        out << '\n';
    }
}

inline void write_csv(std::ostream& out, const Signal1D& y) { write_csv(out, y.size(), 1, y.values()); }
inline void write_csv(std::ostream& out, const Image2D& y) {
    write_csv(out, y.shape().n1, y.shape().n2, y.values());
}

/// Two-column re,im listing of a complex spectrum, row-major for 2D.
inline void write_spectrum_csv(std::ostream& out, std::span<const Complex> spectrum) {
    out << "re,im\n";
    for (const auto& v : spectrum) out << format_double(v.real()) << ',' << format_double(v.imag()) << '\n';
}

namespace detail {

// Token reader for PGM headers: skips whitespace and '#' comments.
inline std::string next_pgm_token(std::istream& in, const std::string& name) {
    std::string token;
    int c = in.get();
    while (c != EOF) {
        if (c == '#') {
            while (c != EOF && c != '\n') c = in.get();
        } else if (!std::isspace(c)) {
            break;
        }
        c = in.get();
    }
    while (c != EOF && !std::isspace(c) && c != '#') {
        token.push_back(static_cast<char>(c));
        c = in.get();
    }
    if (c != EOF) in.unget();
    if (token.empty()) throw ParseError(name + ": truncated PGM header");
    return token;
}

inline long parse_pgm_int(std::istream& in, const std::string& name, const char* field,
                          long lo, long hi) {
    const std::string token = next_pgm_token(in, name);
    long v = 0;
    try {
        std::size_t consumed = 0;
        v = std::stol(token, &consumed);
        if (consumed != token.size()) throw std::invalid_argument(token);
    } catch (const std::exception&) {
        throw ParseError(name + ": bad PGM " + field + " '" + token + "'");
    }
    if (v < lo || v > hi)
        throw ParseError(name + ": PGM " + field + " " + std::to_string(v) + " out of range [" +
                         std::to_string(lo) + ", " + std::to_string(hi) + "]");
    return v;
}

} // namespace detail

/// Reads plain (P2) or binary (P5) PGM. Samples above 255 use two bytes,
/// most significant first. Values are returned verbatim, not rescaled.
inline Image2D read_pgm(std::istream& in, const std::string& name) {
    char magic[2] = {0, 0};
    in.read(magic, 2);
    if (in.gcount() != 2 || magic[0] != 'P' || (magic[1] != '2' && magic[1] != '5'))
        throw ParseError(name + ": not a P2/P5 PGM file");
    const bool binary = magic[1] == '5';

    const long cols = detail::parse_pgm_int(in, name, "width", 1, 1 << 20);
    const long rows = detail::parse_pgm_int(in, name, "height", 1, 1 << 20);
    const long maxval = detail::parse_pgm_int(in, name, "maxval", 1, 65535);

    std::vector<double> values(static_cast<std::size_t>(rows) * static_cast<std::size_t>(cols));
    if (binary) {
        const int sep = in.get();
        if (sep == EOF || !std::isspace(sep)) throw ParseError(name + ": missing separator after maxval");
        const int bytes = maxval > 255 ? 2 : 1;
        std::vector<unsigned char> raw(values.size() * static_cast<std::size_t>(bytes));
        in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
        if (static_cast<std::size_t>(in.gcount()) != raw.size())
            throw ParseError(name + ": truncated PGM pixel data");
        for (std::size_t i = 0; i < values.size(); ++i) {
            const long v = bytes == 1 ? raw[i] : 256L * raw[2 * i] + raw[2 * i + 1];
            if (v > maxval) throw ParseError(name + ": sample exceeds maxval");
            values[i] = static_cast<double>(v);
        }
    } else {
        for (auto& value : values)
            value = static_cast<double>(detail::parse_pgm_int(in, name, "sample", 0, maxval));
    }
    return Image2D(static_cast<int>(rows), static_cast<int>(cols), std::move(values));
}

inline Image2D read_pgm(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ParseError("cannot open " + path.string());
    return read_pgm(in, path.filename().string());
}

/// Affine map used when quantizing doubles to PGM samples; callers persist
/// it alongside the image so values can be recovered.
struct PgmScale {
    double min = 0.0;
    double max = 0.0;
    long maxval = 255;
};

/// Writes binary (P5) PGM, mapping [min, max] linearly onto [0, maxval].
/// An image whose range is at round-off scale maps to all zeros; rescaling
/// such a range would print amplified noise.
inline PgmScale write_pgm(std::ostream& out, long rows, long cols, std::span<const double> values,
                          long maxval = 255) {
    tvlam::detail::require(maxval >= 1 && maxval <= 65535, "write_pgm: maxval out of range");
    const auto [lo, hi] = std::minmax_element(values.begin(), values.end());
    const PgmScale scale{*lo, *hi, maxval};
    const double span = scale.max - scale.min;
    const bool flat = span <= 1e-12 * std::max(std::abs(scale.min), std::abs(scale.max));
    out << "P5\n" << cols << ' ' << rows << '\n' << maxval << '\n';
    const int bytes = maxval > 255 ? 2 : 1;
    std::string raw;
    raw.reserve(values.size() * static_cast<std::size_t>(bytes));
    for (const double v : values) {
        const double unit = flat ? 0.0 : (v - scale.min) / span;
        const long q = std::lround(unit * static_cast<double>(maxval));
        if (bytes == 2) raw.push_back(static_cast<char>((q >> 8) & 0xff));
        raw.push_back(static_cast<char>(q & 0xff));
    }
    out.write(raw.data(), static_cast<std::streamsize>(raw.size()));
    return scale;
}

inline PgmScale write_pgm(std::ostream& out, const Image2D& y, long maxval = 255) {
    return write_pgm(out, y.shape().n1, y.shape().n2, y.values(), maxval);
}

} // namespace tvlam::io
