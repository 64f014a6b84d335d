#pragma once

#include <charconv>
#include <fstream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "errors.hpp"

namespace pfbp {

/// Shortest text that reads back to the same double.
inline std::string format_double(double x)
{
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, x);
    return std::string(buf, res.ptr);
}

/// Comma-separated table with a header row.
class CsvWriter {
public:
    CsvWriter(const std::string& path, const std::vector<std::string>& header) : out_(path)
    {
        if (!out_)
            throw Error(ErrorCode::InvalidArgument, "cannot open " + path);
        row_text(header);
        columns_ = header.size();
    }

    void row(const std::vector<double>& values)
    {
        for (std::size_t i = 0; i < values.size(); ++i) {
            if (i)
                out_ << ',';
            out_ << format_double(values[i]);
        }
        out_ << '\n';
    }

    /// Mixed row: preformatted cells, quoted when they contain ',' or '"'.
    void row_text(const std::vector<std::string>& cells)
    {
        for (std::size_t i = 0; i < cells.size(); ++i) {
            if (i)
                out_ << ',';
            const std::string& c = cells[i];
            if (c.find_first_of(",\"\n") == std::string::npos) {
                out_ << c;
                continue;
            }
            out_ << '"';
            for (char ch : c) {
                if (ch == '"')
                    out_ << '"';
                out_ << ch;
            }
            out_ << '"';
        }
        out_ << '\n';
    }

    std::size_t columns() const { return columns_; }

private:
    std::ofstream out_;
    std::size_t columns_ = 0;
};

} // namespace pfbp
