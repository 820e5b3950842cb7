#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace ehc::csv {

struct Document {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;
    // Physical (1-based) line on which each row starts; header is line 1.
    std::vector<std::size_t> row_lines;
};

// RFC 4180 parsing: comma separator, double-quote quoting with "" escapes,
// CRLF or LF line endings, quoted cells may span lines. A leading UTF-8 BOM
// and trailing blank lines are ignored.
//
// Throws CsvMalformed for unbalanced quotes, stray characters after a closing
// quote, rows whose cell count differs from the header, and duplicate or
// empty header names.
Document parse(std::string_view text);

}  // namespace ehc::csv
