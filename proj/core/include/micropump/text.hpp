#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace micropump {

// Shortest decimal text that reads back to the same double.
std::string format_full(double value);

// Parses a complete token as a double; nullopt on trailing garbage.
std::optional<double> parse_double(std::string_view text);

std::vector<std::string_view> split_fields(std::string_view line, char sep = ',');
std::string_view trim(std::string_view text);

}  // namespace micropump
