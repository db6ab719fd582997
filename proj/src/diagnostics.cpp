#include "adpipe/diagnostics.hpp"

#include <cstdio>
#include <sstream>

namespace adpipe {

namespace {

std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string escape(const std::string& s) {
  std::string out;
  out.reserve(s.size());
  for (char c : s) {
    switch (c) {
      case '\\': out += "\\\\"; break;
      case ' ': out += "\\s"; break;
      case '\n': out += "\\n"; break;
      case '\r': out += "\\r"; break;
      case '\t': out += "\\t"; break;
      default: out.push_back(c);
    }
  }
  return out;
}

}  // namespace

DiagRecord& DiagRecord::add(const std::string& key, const std::string& value) {
  fields.emplace_back(key, value);
  return *this;
}

DiagRecord& DiagRecord::add(const std::string& key, const char* value) {
  fields.emplace_back(key, std::string(value));
  return *this;
}

DiagRecord& DiagRecord::add(const std::string& key, double value) {
  fields.emplace_back(key, format_double(value));
  return *this;
}

DiagRecord& DiagRecord::add(const std::string& key, long long value) {
  fields.emplace_back(key, std::to_string(value));
  return *this;
}

DiagRecord& DiagRecord::add(const std::string& key, int value) {
  fields.emplace_back(key, std::to_string(value));
  return *this;
}

DiagRecord& DiagRecord::add(const std::string& key, std::uint64_t value) {
  fields.emplace_back(key, std::to_string(value));
  return *this;
}

DiagRecord& Diagnostics::add(const std::string& kind) {
  records.push_back(DiagRecord{kind, {}});
  return records.back();
}

void Diagnostics::time(const std::string& stage, double ms) {
  timings_ms.emplace_back(stage, ms);
}

std::string Diagnostics::serialize() const {
  std::ostringstream out;
  for (const DiagRecord& r : records) {
    out << r.kind;
    for (const auto& [key, value] : r.fields) out << " " << key << "=" << escape(value);
    out << "\n";
  }
  return out.str();
}

std::string Diagnostics::serialize_timings() const {
  std::ostringstream out;
  for (const auto& [stage, ms] : timings_ms) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.3f", ms);
    out << "timing stage=" << escape(stage) << " ms=" << buf << "\n";
  }
  return out.str();
}

}  // namespace adpipe
