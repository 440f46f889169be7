#include "tsv.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

namespace resetfdr {

using reset::DataError;

namespace {

std::vector<std::string> split_tabs(const std::string& line) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (true) {
        const auto tab = line.find('\t', start);
        out.push_back(line.substr(start, tab == std::string::npos ? std::string::npos : tab - start));
        if (tab == std::string::npos) break;
        start = tab + 1;
    }
    return out;
}

std::string where(const std::string& source, std::size_t line) { return source + ":" + std::to_string(line) + ": "; }

double parse_number(const std::string& text, const std::string& column, const std::string& source, std::size_t line) {
    double v = 0.0;
    const char* begin = text.data();
    const char* end = text.data() + text.size();
    if (begin != end && *begin == '+') ++begin;
    const auto [ptr, ec] = std::from_chars(begin, end, v);
    if (ec != std::errc() || ptr != end || text.empty()) {
        throw DataError(where(source, line) + "column '" + column + "': cannot parse '" + text + "' as a number");
    }
    if (!std::isfinite(v)) {
        throw DataError(where(source, line) + "column '" + column + "': value must be finite");
    }
    return v;
}

}  // namespace

reset::PValueTable InputTable::pvalue_table() const { return reset::PValueTable(pvalues, side_info, ids); }

reset::HypothesisTable InputTable::competition_table() const {
    return reset::HypothesisTable(labels, scores, side_info, ids);
}

InputTable parse_tsv(std::istream& in, const std::string& source) {
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (!line.empty()) break;
    }
    if (line.empty()) throw DataError(source + ": empty input (no header)");

    const auto header = split_tabs(line);
    int col_id = -1, col_p = -1, col_label = -1, col_score = -1;
    std::vector<int> col_x;
    InputTable table;
    for (std::size_t c = 0; c < header.size(); ++c) {
        const auto& h = header[c];
        const int ci = static_cast<int>(c);
        auto claim = [&](int& slot) {
            if (slot >= 0) throw DataError(where(source, line_no) + "duplicate column '" + h + "'");
            slot = ci;
        };
        if (h == "id") {
            claim(col_id);
        } else if (h == "pvalue") {
            claim(col_p);
        } else if (h == "label") {
            claim(col_label);
        } else if (h == "score") {
            claim(col_score);
        } else if (h.rfind("x_", 0) == 0 && h.size() > 2) {
            col_x.push_back(ci);
            table.side_names.push_back(h);
        }  // other columns are ignored
    }
    const bool has_p = col_p >= 0;
    const bool has_comp = col_label >= 0 || col_score >= 0;
    if (has_p == has_comp) {
        throw DataError(where(source, line_no) + "header must contain either 'pvalue' or both 'label' and 'score'");
    }
    if (has_comp && (col_label < 0 || col_score < 0)) {
        throw DataError(where(source, line_no) + "competition input needs both 'label' and 'score'");
    }
    table.kind = has_p ? InputKind::pvalue : InputKind::competition;

    std::vector<std::vector<double>> x;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const auto fields = split_tabs(line);
        if (fields.size() != header.size()) {
            throw DataError(where(source, line_no) + "expected " + std::to_string(header.size()) + " fields, found " +
                            std::to_string(fields.size()));
        }
        table.ids.push_back(col_id >= 0 ? fields[static_cast<std::size_t>(col_id)]
                                        : std::to_string(table.ids.size()));
        if (has_p) {
            const double p = parse_number(fields[static_cast<std::size_t>(col_p)], "pvalue", source, line_no);
            if (p < 0.0 || p > 1.0) throw DataError(where(source, line_no) + "pvalue must lie in [0,1]");
            table.pvalues.push_back(p);
        } else {
            const double l = parse_number(fields[static_cast<std::size_t>(col_label)], "label", source, line_no);
            if (l != 1.0 && l != -1.0) throw DataError(where(source, line_no) + "label must be 1 or -1");
            table.labels.push_back(l > 0 ? reset::kTarget : reset::kDecoy);
            table.scores.push_back(parse_number(fields[static_cast<std::size_t>(col_score)], "score", source, line_no));
        }
        std::vector<double> row;
        for (std::size_t k = 0; k < col_x.size(); ++k) {
            row.push_back(parse_number(fields[static_cast<std::size_t>(col_x[k])], table.side_names[k], source, line_no));
        }
        x.push_back(std::move(row));
    }
    table.side_info.resize(static_cast<Eigen::Index>(x.size()), static_cast<Eigen::Index>(col_x.size()));
    for (std::size_t i = 0; i < x.size(); ++i) {
        for (std::size_t j = 0; j < col_x.size(); ++j) {
            table.side_info(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = x[i][j];
        }
    }
    return table;
}

InputTable read_tsv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open input file '" + path + "'");
    return parse_tsv(in, path);
}

std::string format_double(double v) {
    if (std::isnan(v)) return "NA";
    char buf[32];
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, ptr);
}

std::string file_digest(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open input file '" + path + "'");
    std::uint64_t h = 0xcbf29ce484222325ULL;
    char buf[4096];
    while (in.read(buf, sizeof buf) || in.gcount() > 0) {
        for (std::streamsize i = 0; i < in.gcount(); ++i) {
            h ^= static_cast<unsigned char>(buf[i]);
            h *= 0x100000001b3ULL;
        }
    }
    char hex[17];
    std::snprintf(hex, sizeof hex, "%016llx", static_cast<unsigned long long>(h));
    return hex;
}

namespace {

void write_x_header(std::ostream& out, Eigen::Index d) {
    for (Eigen::Index j = 0; j < d; ++j) out << "\tx_" << (j + 1);
    out << '\n';
}

void write_x_row(std::ostream& out, const reset::Matrix& x, std::size_t i) {
    for (Eigen::Index j = 0; j < x.cols(); ++j) out << '\t' << format_double(x(static_cast<Eigen::Index>(i), j));
    out << '\n';
}

}  // namespace

void write_pvalue_tsv(std::ostream& out, const reset::PValueTable& table) {
    out << "id\tpvalue";
    write_x_header(out, table.side_info().cols());
    for (std::size_t i = 0; i < table.size(); ++i) {
        out << table.ids()[i] << '\t' << format_double(table.pvalues()[i]);
        write_x_row(out, table.side_info(), i);
    }
}

void write_competition_tsv(std::ostream& out, const reset::HypothesisTable& table) {
    out << "id\tlabel\tscore";
    write_x_header(out, table.side_info().cols());
    for (std::size_t i = 0; i < table.size(); ++i) {
        out << table.ids()[i] << '\t' << static_cast<int>(table.labels()[i]) << '\t'
            << format_double(table.scores()[i]);
        write_x_row(out, table.side_info(), i);
    }
}

}  // namespace resetfdr
