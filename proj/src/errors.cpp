#include "nasbo/errors.hpp"

namespace nasbo {

namespace {

std::string format_location(const std::string& source, std::size_t line, const std::string& what) {
  std::string out = source;
  if (line > 0) out += ":" + std::to_string(line);
  out += ": " + what;
  return out;
}

}  // namespace

ParseError::ParseError(const std::string& source, std::size_t line, const std::string& what)
    : Error(format_location(source, line, what)), line_(line) {}

}  // namespace nasbo
