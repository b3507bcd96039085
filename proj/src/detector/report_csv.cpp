#include "lmd/detector/report_csv.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace lmd::detector {

std::string format_float(double value) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.6g", value);
    return buf;
}

void write_reports_csv(std::ostream& out, const std::vector<ScoreReport>& reports) {
    const std::size_t attempts = reports.empty() ? 0 : reports.front().distances.size();
    out << "image_index,label,score";
    for (std::size_t i = 1; i <= attempts; ++i) out << ",d_" << i;
    out << '\n';
    for (const auto& r : reports) {
        if (r.distances.size() != attempts) throw std::invalid_argument("report csv: ragged attempt counts");
        out << r.image_index << ',' << to_string(r.label) << ',' << format_float(r.score);
        for (double d : r.distances) out << ',' << format_float(d);
        out << '\n';
    }
}

void write_reports_csv(const std::filesystem::path& path, const std::vector<ScoreReport>& reports) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("report csv: cannot open " + path.string() + " for writing");
    write_reports_csv(out, reports);
    if (!out) throw std::runtime_error("report csv: write failed for " + path.string());
}

namespace {

std::vector<std::string> split_fields(const std::string& line) {
    std::vector<std::string> fields;
    std::string field;
    std::istringstream ss(line);
    while (std::getline(ss, field, ',')) fields.push_back(field);
    if (!line.empty() && line.back() == ',') fields.emplace_back();
    return fields;
}

double parse_number(const std::string& text, std::size_t line, const char* what) {
    try {
        std::size_t used = 0;
        const double v = std::stod(text, &used);
        if (used != text.size() || !std::isfinite(v)) throw std::invalid_argument(text);
        return v;
    } catch (const std::exception&) {
        throw CsvError(line, std::string("bad ") + what + " '" + text + "'");
    }
}

}  // namespace

std::vector<ScoreRow> read_reports_csv(std::istream& in) {
    std::string line;
    if (!std::getline(in, line)) throw CsvError(1, "missing header");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const auto header = split_fields(line);
    if (header.size() < 3 || header[0] != "image_index" || header[1] != "label" || header[2] != "score") {
        throw CsvError(1, "expected header starting with image_index,label,score");
    }
    for (std::size_t i = 3; i < header.size(); ++i) {
        if (header[i] != "d_" + std::to_string(i - 2)) throw CsvError(1, "unexpected column '" + header[i] + "'");
    }

    std::vector<ScoreRow> rows;
    std::size_t number = 1;
    while (std::getline(in, line)) {
        ++number;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const auto fields = split_fields(line);
        if (fields.size() != header.size()) {
            throw CsvError(number, "expected " + std::to_string(header.size()) + " fields, found " +
                                       std::to_string(fields.size()));
        }
        ScoreRow row;
        const double index = parse_number(fields[0], number, "image_index");
        if (index < 0 || std::floor(index) != index) throw CsvError(number, "bad image_index '" + fields[0] + "'");
        row.image_index = static_cast<std::size_t>(index);
        try {
            row.label = parse_label(fields[1]);
        } catch (const std::exception&) {
            throw CsvError(number, "bad label '" + fields[1] + "'");
        }
        row.score = parse_number(fields[2], number, "score");
        for (std::size_t i = 3; i < fields.size(); ++i) row.distances.push_back(parse_number(fields[i], number, "distance"));
        rows.push_back(std::move(row));
    }
    return rows;
}

std::vector<ScoreRow> read_reports_csv(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("report csv: cannot open " + path.string());
    return read_reports_csv(in);
}

}  // namespace lmd::detector
