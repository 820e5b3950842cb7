#include "ehc/csv.hpp"

#include <set>

#include "ehc/error.hpp"

namespace ehc::csv {
namespace {

struct Record {
    std::vector<std::string> cells;
    std::size_t line = 0;
    bool blank = false;  // a line with no characters at all
};

std::vector<Record> split_records(std::string_view text) {
    std::vector<Record> records;
    std::size_t i = 0;
    std::size_t line = 1;
    const std::size_t n = text.size();

    while (i < n) {
        Record rec;
        rec.line = line;
        std::string cell;
        bool any_char = false;
        for (;;) {
            if (i < n && text[i] == '"') {
                any_char = true;
                const std::size_t quote_line = line;
                ++i;
                bool closed = false;
                while (i < n) {
                    char c = text[i];
                    if (c == '"') {
                        if (i + 1 < n && text[i + 1] == '"') {
                            cell.push_back('"');
                            i += 2;
                            continue;
                        }
                        ++i;
                        closed = true;
                        break;
                    }
                    if (c == '\n') ++line;
                    cell.push_back(c);
                    ++i;
                }
                if (!closed) throw CsvMalformed(quote_line, "unbalanced quote");
                if (i < n && text[i] != ',' && text[i] != '\n' && text[i] != '\r') {
                    throw CsvMalformed(line, "unexpected character after closing quote");
                }
            } else {
                while (i < n && text[i] != ',' && text[i] != '\n' && text[i] != '\r') {
                    if (text[i] == '"') throw CsvMalformed(line, "quote inside unquoted cell");
                    cell.push_back(text[i]);
                    any_char = true;
                    ++i;
                }
            }
            rec.cells.push_back(std::move(cell));
            cell.clear();
            if (i < n && text[i] == ',') {
                any_char = true;
                ++i;
                continue;
            }
            break;
        }
        // end of record
        if (i < n && text[i] == '\r') ++i;
        if (i < n && text[i] == '\n') {
            ++i;
            ++line;
        }
        rec.blank = !any_char;
        records.push_back(std::move(rec));
    }
    return records;
}

}  // namespace

Document parse(std::string_view text) {
    if (text.size() >= 3 && text.substr(0, 3) == "\xEF\xBB\xBF") text.remove_prefix(3);

    std::vector<Record> records = split_records(text);
    while (!records.empty() && records.back().blank) records.pop_back();

    Document doc;
    if (records.empty()) return doc;

    doc.header = std::move(records.front().cells);
    std::set<std::string> seen;
    for (const auto& name : doc.header) {
        if (name.empty()) throw CsvMalformed(1, "empty header name");
        if (!seen.insert(name).second) throw CsvMalformed(1, "duplicate header name '" + name + "'");
    }

    for (std::size_t r = 1; r < records.size(); ++r) {
        auto& rec = records[r];
        if (rec.cells.size() != doc.header.size()) {
            throw CsvMalformed(rec.line, "expected " + std::to_string(doc.header.size()) + " cells, found " +
                                             std::to_string(rec.cells.size()));
        }
        doc.rows.push_back(std::move(rec.cells));
        doc.row_lines.push_back(rec.line);
    }
    return doc;
}

}  // namespace ehc::csv
