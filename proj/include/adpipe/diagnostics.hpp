#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

namespace adpipe {

/// One diagnostic record: a kind tag plus ordered key=value fields.
struct DiagRecord {
  std::string kind;
  std::vector<std::pair<std::string, std::string>> fields;

  DiagRecord& add(const std::string& key, const std::string& value);
  DiagRecord& add(const std::string& key, const char* value);
  DiagRecord& add(const std::string& key, double value);   // %.17g
  DiagRecord& add(const std::string& key, long long value);
  DiagRecord& add(const std::string& key, int value);
  DiagRecord& add(const std::string& key, std::uint64_t value);
};

/// Run log: a flat record stream plus per-stage timings. Records are fully
/// determined by config + inputs; timings are wall-clock and therefore kept
/// out of the serialized record stream so that identical runs serialize to
/// identical bytes.
struct Diagnostics {
  std::vector<DiagRecord> records;
  std::vector<std::pair<std::string, double>> timings_ms;

  DiagRecord& add(const std::string& kind);
  void time(const std::string& stage, double ms);

  /// Line-delimited form: `kind key=value key=value` per record. Values have
  /// backslash, whitespace, and newlines escaped so one record is one line.
  std::string serialize() const;

  /// Timings in the same line format (separate stream, not deterministic).
  std::string serialize_timings() const;
};

}  // namespace adpipe
