#include "faacflow/csv.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>

namespace faacflow::csv {

bool read_line(std::istream& in, std::string& line) {
  if (!std::getline(in, line)) return false;
  if (!line.empty() && line.back() == '\r') line.pop_back();
  return true;
}

void split(std::string_view line, std::vector<std::string>& fields) {
  std::size_t used = 0;
  auto slot = [&]() -> std::string& {
    if (used == fields.size()) fields.emplace_back();
    auto& f = fields[used++];
    f.clear();
    return f;
  };

  std::size_t i = 0;
  const std::size_t n = line.size();
  while (true) {
    std::string& field = slot();
    if (i < n && line[i] == '"') {
      ++i;
      while (i < n) {
        if (line[i] == '"') {
          if (i + 1 < n && line[i + 1] == '"') {
            field.push_back('"');
            i += 2;
          } else {
            ++i;
            break;
          }
        } else {
          field.push_back(line[i++]);
        }
      }
      // anything between the closing quote and the comma is kept verbatim
      while (i < n && line[i] != ',') field.push_back(line[i++]);
    } else {
      auto comma = line.find(',', i);
      auto end = comma == std::string_view::npos ? n : comma;
      field.assign(line.substr(i, end - i));
      i = end;
    }
    if (i >= n) break;
    ++i;  // skip comma
    if (i == n) {
      slot();  // trailing empty field
      break;
    }
  }
  fields.resize(used);
}

std::string escape(std::string_view field) {
  if (field.find_first_of(",\"\n\r") == std::string_view::npos) return std::string(field);
  std::string out;
  out.reserve(field.size() + 2);
  out.push_back('"');
  for (char c : field) {
    if (c == '"') out.push_back('"');
    out.push_back(c);
  }
  out.push_back('"');
  return out;
}

std::optional<double> parse_number(std::string_view token) {
  while (!token.empty() && token.front() == ' ') token.remove_prefix(1);
  while (!token.empty() && token.back() == ' ') token.remove_suffix(1);
  if (token.empty()) return std::nullopt;
  if (token.front() == '+') token.remove_prefix(1);
  double value = 0.0;
  auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), value);
  if (ec != std::errc() || ptr != token.data() + token.size()) return std::nullopt;
  if (!std::isfinite(value)) return std::nullopt;
  return value;
}

std::string format_exact(double value) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), value);
  (void)ec;
  return std::string(buf, ptr);
}

std::string format_sig(double value, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*g", digits, value);
  return buf;
}

}  // namespace faacflow::csv
