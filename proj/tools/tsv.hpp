#pragma once

// Tab-separated input and output for the command-line tool.

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "reset/model.hpp"

namespace resetfdr {

enum class InputKind { pvalue, competition };

/// A parsed input file: exactly one of the p-value or competition forms.
struct InputTable {
    InputKind kind = InputKind::competition;
    std::vector<std::string> ids;
    std::vector<double> pvalues;
    std::vector<reset::Label> labels;
    std::vector<double> scores;
    reset::Matrix side_info;
    std::vector<std::string> side_names;  ///< header names of the x_ columns

    std::size_t size() const { return ids.size(); }
    reset::PValueTable pvalue_table() const;
    reset::HypothesisTable competition_table() const;
};

/// Parses TSV text. Throws reset::DataError with a line number on schema or
/// number errors; `source` names the input in messages.
InputTable parse_tsv(std::istream& in, const std::string& source = "input");
InputTable read_tsv(const std::string& path);

/// Shortest decimal that reads back as the same double.
std::string format_double(double v);

/// 64-bit FNV-1a digest of a file's bytes, as 16 hex digits.
std::string file_digest(const std::string& path);

/// Writes `table` in the input schema (id, pvalue or label/score, x_ columns).
void write_pvalue_tsv(std::ostream& out, const reset::PValueTable& table);
void write_competition_tsv(std::ostream& out, const reset::HypothesisTable& table);

}  // namespace resetfdr
