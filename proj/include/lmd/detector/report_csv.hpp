#pragma once

#include <filesystem>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <vector>

#include "lmd/detector/detector.hpp"

namespace lmd::detector {

// Header `image_index,label,score,d_1,...,d_r`; floats use 6 significant digits.
void write_reports_csv(std::ostream& out, const std::vector<ScoreReport>& reports);
void write_reports_csv(const std::filesystem::path& path, const std::vector<ScoreReport>& reports);

std::string format_float(double value);

class CsvError : public std::runtime_error {
   public:
    CsvError(std::size_t line, const std::string& message)
        : std::runtime_error("line " + std::to_string(line) + ": " + message), line_(line) {}
    std::size_t line() const { return line_; }

   private:
    std::size_t line_;
};

struct ScoreRow {
    std::size_t image_index;
    Label label;
    double score;
    std::vector<double> distances;
};

// Parses a report CSV; CsvError carries the 1-based line number.
std::vector<ScoreRow> read_reports_csv(std::istream& in);
std::vector<ScoreRow> read_reports_csv(const std::filesystem::path& path);

}  // namespace lmd::detector
