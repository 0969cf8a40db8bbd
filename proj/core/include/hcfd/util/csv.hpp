#pragma once

#include <string>
#include <vector>

namespace hcfd {

/// Quotes a field when it holds a comma, quote or line break.
std::string csvField(const std::string& s);
std::string csvLine(const std::vector<std::string>& fields);
/// Parses RFC 4180 style text into rows of fields. Throws Error on an
/// unterminated quote.
std::vector<std::vector<std::string>> parseCsv(const std::string& text);
/// Shortest decimal text that reads back to the same double.
std::string formatDouble(double v);
void writeTextFile(const std::string& path, const std::string& text);
std::string readTextFile(const std::string& path);

}  // namespace hcfd
