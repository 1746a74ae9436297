#ifndef LRCOMP_IO_HPP
#define LRCOMP_IO_HPP

#include <cerrno>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "types.hpp"

/**
 * @file io.hpp
 *
 * @brief Delimited-text reading and writing of count and composition matrices.
 *
 * Input layout: an optional header row (taxon names, detected by a non-numeric field), then one
 * row per sample, either `sample_id,v1,...,vp` or bare `v1,...,vp`. A leading id column is detected
 * from a non-numeric first field in the first data row, and can be forced either way.
 * Output always carries a header and an id column; numbers use 17 significant digits so that
 * doubles survive a write/read cycle exactly.
 */

namespace lrcomp {

class IoError : public Error {
public:
    using Error::Error;
};

struct CsvOptions {
    char delimiter = ',';
    /// Force (true) or forbid (false) a leading sample-id column; autodetected when empty.
    std::optional<bool> id_column;
};

struct LabeledMatrix {
    Matrix values;
    std::vector<std::string> row_names;
    std::vector<std::string> column_names;
};

/// Shortest decimal text for `v` with 17 significant digits.
inline std::string format_number(double v) {
    char buffer[32];
    std::snprintf(buffer, sizeof(buffer), "%.17g", v);
    return buffer;
}

namespace detail {

inline std::string trim(const std::string& s) {
    auto begin = s.find_first_not_of(" \t\r\n");
    if (begin == std::string::npos) {
        return "";
    }
    auto end = s.find_last_not_of(" \t\r\n");
    std::string out = s.substr(begin, end - begin + 1);
    if (out.size() >= 2 && out.front() == '"' && out.back() == '"') {
        out = out.substr(1, out.size() - 2);
    }
    return out;
}

inline std::vector<std::string> split_line(const std::string& line, char delimiter) {
    std::vector<std::string> out;
    std::string field;
    std::istringstream stream(line);
    while (std::getline(stream, field, delimiter)) {
        out.push_back(trim(field));
    }
    if (!line.empty() && line.back() == delimiter) {
        out.emplace_back();
    }
    return out;
}

inline std::optional<double> parse_number(const std::string& s) {
    if (s.empty()) {
        return std::nullopt;
    }
    char* end = nullptr;
    errno = 0;
    double v = std::strtod(s.c_str(), &end);
    if (end != s.c_str() + s.size() || errno == ERANGE) {
        return std::nullopt;
    }
    return v;
}

inline bool all_numeric(const std::vector<std::string>& fields, std::size_t from) {
    for (std::size_t i = from; i < fields.size(); ++i) {
        if (!parse_number(fields[i])) {
            return false;
        }
    }
    return true;
}

}

/**
 * Parses a delimited table. Throws `ValidationError` for ragged rows or non-numeric values.
 */
inline LabeledMatrix read_matrix(std::istream& in, const CsvOptions& options = {}) {
    std::vector<std::vector<std::string>> rows;
    std::string line;
    while (std::getline(in, line)) {
        if (detail::trim(line).empty()) {
            continue;
        }
        rows.push_back(detail::split_line(line, options.delimiter));
    }
    if (rows.empty()) {
        throw ValidationError("input table is empty");
    }

    LabeledMatrix out;
    std::size_t first_data = 0;
    std::vector<std::string> header;
    // A header has at least one non-numeric field beyond a possible id cell.
    if (!detail::all_numeric(rows[0], 1) || (!rows[0].empty() && !detail::parse_number(rows[0][0]) && rows.size() > 1
                                             && detail::parse_number(rows[1][0]))) {
        header = rows[0];
        first_data = 1;
    }
    if (first_data >= rows.size()) {
        throw ValidationError("input table has a header but no data rows");
    }

    bool ids = options.id_column.value_or(!detail::parse_number(rows[first_data][0]).has_value());
    const std::size_t offset = ids ? 1 : 0;
    const std::size_t width = rows[first_data].size();
    if (width <= offset) {
        throw ValidationError("data rows have no value columns");
    }
    const std::size_t p = width - offset;

    out.values.resize(static_cast<Index>(rows.size() - first_data), static_cast<Index>(p));
    for (std::size_t r = first_data; r < rows.size(); ++r) {
        const auto& fields = rows[r];
        const std::size_t line_no = r + 1;
        if (fields.size() != width) {
            throw ValidationError("line " + std::to_string(line_no) + " has " + std::to_string(fields.size())
                + " fields, expected " + std::to_string(width));
        }
        out.row_names.push_back(ids ? fields[0] : "s" + std::to_string(r - first_data + 1));
        for (std::size_t j = 0; j < p; ++j) {
            auto v = detail::parse_number(fields[j + offset]);
            if (!v) {
                throw ValidationError("line " + std::to_string(line_no) + ": '" + fields[j + offset] + "' is not a number");
            }
            out.values(static_cast<Index>(r - first_data), static_cast<Index>(j)) = *v;
        }
    }

    if (!header.empty()) {
        if (header.size() == p + 1) {
            header.erase(header.begin());
        }
        if (header.size() != p) {
            throw ValidationError("header has " + std::to_string(header.size()) + " names for " + std::to_string(p) + " columns");
        }
        out.column_names = header;
    } else {
        for (std::size_t j = 0; j < p; ++j) {
            out.column_names.push_back("t" + std::to_string(j + 1));
        }
    }
    return out;
}

/// Opens and parses `path`. Throws `IoError` if the file cannot be opened.
inline LabeledMatrix read_matrix_file(const std::string& path, const CsvOptions& options = {}) {
    std::ifstream in(path);
    if (!in) {
        throw IoError("cannot open '" + path + "'");
    }
    return read_matrix(in, options);
}

inline void write_matrix(std::ostream& out, const Matrix& values, const std::vector<std::string>& row_names,
                         const std::vector<std::string>& column_names, char delimiter = ',') {
    out << "sample_id";
    for (Index j = 0; j < values.cols(); ++j) {
        out << delimiter << (static_cast<std::size_t>(j) < column_names.size() ? column_names[static_cast<std::size_t>(j)] : "t" + std::to_string(j + 1));
    }
    out << '\n';
    for (Index i = 0; i < values.rows(); ++i) {
        out << (static_cast<std::size_t>(i) < row_names.size() ? row_names[static_cast<std::size_t>(i)] : "s" + std::to_string(i + 1));
        for (Index j = 0; j < values.cols(); ++j) {
            out << delimiter << format_number(values(i, j));
        }
        out << '\n';
    }
}

inline void write_matrix(std::ostream& out, const LabeledMatrix& m, char delimiter = ',') {
    write_matrix(out, m.values, m.row_names, m.column_names, delimiter);
}

/**
 * Writes `content` to `path` through a temporary file and a rename, so a failed run leaves no
 * partial output behind.
 */
template <typename Writer>
void write_file_atomically(const std::string& path, Writer&& writer) {
    const std::string tmp = path + ".tmp";
    {
        std::ofstream out(tmp);
        if (!out) {
            throw IoError("cannot write '" + path + "'");
        }
        try {
            writer(out);
        } catch (...) {
            out.close();
            std::remove(tmp.c_str());
            throw;
        }
        out.flush();
        if (!out) {
            std::remove(tmp.c_str());
            throw IoError("failed while writing '" + path + "'");
        }
    }
    if (std::rename(tmp.c_str(), path.c_str()) != 0) {
        std::remove(tmp.c_str());
        throw IoError("cannot move output into '" + path + "'");
    }
}

}

#endif
