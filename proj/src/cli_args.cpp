#include "mia/cli_args.hpp"

#include <cmath>
#include <string>

#include "mia/error.hpp"

namespace mia {

namespace {

constexpr double kRangeTolerance = 1e-9;

double to_number(std::string_view s) {
  while (!s.empty() && s.front() == ' ') s.remove_prefix(1);
  while (!s.empty() && s.back() == ' ') s.remove_suffix(1);
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(std::string(s), &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (s.empty() || used != s.size() || !std::isfinite(v)) {
    throw Error(ErrorCode::kValidation, "not a number: '" + std::string(s) + "'");
  }
  return v;
}

std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> out;
  std::size_t pos = 0;
  while (true) {
    const std::size_t next = s.find(sep, pos);
    out.push_back(s.substr(pos, next == std::string_view::npos ? std::string_view::npos : next - pos));
    if (next == std::string_view::npos) break;
    pos = next + 1;
  }
  return out;
}

}  // namespace

std::vector<double> parse_values(std::string_view spec) {
  std::vector<double> out;
  for (std::string_view item : split(spec, ',')) {
    const auto parts = split(item, ':');
    if (parts.size() == 1) {
      out.push_back(to_number(parts[0]));
      continue;
    }
    if (parts.size() != 3) throw Error(ErrorCode::kValidation, "range must be start:stop:step, got '" + std::string(item) + "'");
    const double start = to_number(parts[0]);
    const double stop = to_number(parts[1]);
    const double step = to_number(parts[2]);
    if (!(step > 0.0)) throw Error(ErrorCode::kValidation, "range step must be > 0");
    if (stop < start) throw Error(ErrorCode::kValidation, "range stop is below start");
    const auto n = static_cast<long long>(std::floor((stop - start) / step + kRangeTolerance));
    if (n > 1000000) throw Error(ErrorCode::kValidation, "range has too many values");
    for (long long i = 0; i <= n; ++i) {
      // Snap to 12 decimals so 0:1:0.1 yields 0.3 rather than 0.30000000000000004.
      out.push_back(std::round((start + static_cast<double>(i) * step) * 1e12) / 1e12);
    }
  }
  if (out.empty()) throw Error(ErrorCode::kValidation, "empty value list");
  return out;
}

std::vector<std::size_t> parse_counts(std::string_view spec) {
  std::vector<std::size_t> out;
  for (double v : parse_values(spec)) {
    if (v < 0.0 || v != std::floor(v)) {
      throw Error(ErrorCode::kValidation, "expected a non-negative integer, got " + std::to_string(v));
    }
    out.push_back(static_cast<std::size_t>(v));
  }
  return out;
}

std::vector<Method> parse_methods(std::string_view spec) {
  if (spec == "all") return all_methods();
  std::vector<Method> out;
  for (std::string_view name : split(spec, ',')) out.push_back(parse_method(name));
  return out;
}

}  // namespace mia
