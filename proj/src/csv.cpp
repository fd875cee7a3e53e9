#include "ivbounds/csv.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "ivbounds/error.hpp"

namespace ivb {

namespace {

std::string trim(std::string_view s) {
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string_view::npos) return {};
    const auto last = s.find_last_not_of(" \t\r");
    std::string out(s.substr(first, last - first + 1));
    if (out.size() >= 2 && out.front() == '"' && out.back() == '"') out = out.substr(1, out.size() - 2);
    return out;
}

std::vector<std::string> split(std::string_view line) {
    std::vector<std::string> fields;
    std::size_t start = 0;
    bool quoted = false;
    for (std::size_t i = 0; i <= line.size(); ++i) {
        if (i < line.size() && line[i] == '"') quoted = !quoted;
        if (i == line.size() || (line[i] == ',' && !quoted)) {
            fields.push_back(trim(line.substr(start, i - start)));
            start = i + 1;
        }
    }
    return fields;
}

std::string where(std::size_t row, const std::string& column) {
    return " (row " + std::to_string(row) + ", column '" + column + "')";
}

double parse_value(const std::string& field, std::size_t row, const std::string& column) {
    if (field.empty() || field == "NA" || field == "NaN" || field == "nan")
        throw Error(ErrorCode::missing_value, "missing value" + where(row, column));
    double value = 0.0;
    const char* begin = field.data();
    const char* end = begin + field.size();
    if (*begin == '+') ++begin;
    const auto [ptr, ec] = std::from_chars(begin, end, value);
    if (ec != std::errc() || ptr != end)
        throw Error(ErrorCode::malformed_numeric, "malformed number '" + field + "'" + where(row, column));
    if (!std::isfinite(value)) throw Error(ErrorCode::non_finite_input, "non-finite value" + where(row, column));
    return value;
}

int parse_binary(const std::string& field, std::size_t row, const std::string& column) {
    const double v = parse_value(field, row, column);
    if (v != 0.0 && v != 1.0)
        throw Error(ErrorCode::non_binary_value, "expected 0 or 1, got '" + field + "'" + where(row, column));
    return static_cast<int>(v);
}

std::string shortest(double v) {
    char buf[32];
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, ptr);
}

}  // namespace

Dataset parse_csv(const std::string& text, const ColumnMapping& mapping) {
    std::istringstream in(text);
    std::string line;
    std::vector<std::string> header;
    while (std::getline(in, line)) {
        if (!trim(line).empty()) {
            header = split(line);
            break;
        }
    }
    if (header.empty()) throw Error(ErrorCode::empty_file, "input has no header row");

    auto column = [&](const std::string& name) -> std::size_t {
        const auto it = std::find(header.begin(), header.end(), name);
        if (it == header.end()) throw Error(ErrorCode::missing_column, "column '" + name + "' not found in header");
        return static_cast<std::size_t>(it - header.begin());
    };
    const std::size_t z_col = column(mapping.instrument);
    const std::size_t a_col = column(mapping.exposure);
    const std::size_t y_col = column(mapping.outcome);
    const std::optional<std::size_t> w_col =
        mapping.weight ? std::optional<std::size_t>(column(*mapping.weight)) : std::nullopt;

    std::vector<std::string> names = mapping.covariates;
    if (names.empty()) {
        for (const auto& h : header) {
            if (h == mapping.instrument || h == mapping.exposure || h == mapping.outcome ||
                (mapping.weight && h == *mapping.weight))
                continue;
            names.push_back(h);
        }
    }
    std::vector<std::size_t> x_cols;
    for (const auto& name : names) x_cols.push_back(column(name));

    Dataset data(names.size(), names);
    data.outcome_kind = mapping.outcome_kind;
    std::vector<double> x(names.size());
    std::size_t row = 0;
    while (std::getline(in, line)) {
        if (trim(line).empty()) continue;
        ++row;
        const auto fields = split(line);
        if (fields.size() != header.size())
            throw Error(ErrorCode::malformed_numeric, "row " + std::to_string(row) + " has " +
                                                          std::to_string(fields.size()) + " fields, header has " +
                                                          std::to_string(header.size()));
        for (std::size_t j = 0; j < x_cols.size(); ++j) x[j] = parse_value(fields[x_cols[j]], row, names[j]);
        const int z = parse_binary(fields[z_col], row, mapping.instrument);
        const int a = parse_binary(fields[a_col], row, mapping.exposure);
        const double y = mapping.outcome_kind == OutcomeKind::binary
                             ? parse_binary(fields[y_col], row, mapping.outcome)
                             : parse_value(fields[y_col], row, mapping.outcome);
        double w = 1.0;
        if (w_col) {
            w = parse_value(fields[*w_col], row, *mapping.weight);
            if (!(w > 0.0))
                throw Error(ErrorCode::out_of_range, "weights must be strictly positive" + where(row, *mapping.weight));
        }
        data.add_row(x, z, a, y, w);
    }
    if (data.empty()) throw Error(ErrorCode::empty_file, "input has a header but no data rows");
    return data;
}

Dataset load_csv(const std::string& path, const ColumnMapping& mapping) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::io_failure, "cannot open '" + path + "'");
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return parse_csv(buffer.str(), mapping);
}

std::string to_csv(const Dataset& data) {
    std::ostringstream out;
    for (const auto& name : data.covariate_names) out << name << ',';
    out << "Z,A,Y";
    const bool weighted = data.weighted();
    if (weighted) out << ",W";
    out << '\n';
    for (std::size_t i = 0; i < data.size(); ++i) {
        for (double v : data.row(i)) out << shortest(v) << ',';
        out << data.z[i] << ',' << data.a[i] << ',' << shortest(data.y[i]);
        if (weighted) out << ',' << shortest(data.w[i]);
        out << '\n';
    }
    return out.str();
}

void write_text(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(ErrorCode::io_failure, "cannot write '" + path + "'");
    out << text;
    if (!out) throw Error(ErrorCode::io_failure, "write to '" + path + "' failed");
}

}  // namespace ivb
