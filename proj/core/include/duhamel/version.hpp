#pragma once

namespace duhamel {

inline constexpr const char* kToolName = "duhamel";
inline constexpr const char* kToolVersion = "0.1.0";

// Version tag of the bundled smooth-cutoff derivative table.  Bump whenever
// the sampling scheme or safety factor in chi_table.cpp changes, so that
// archived outputs can be traced to the table that produced them.
inline constexpr const char* kChiTableVersion = "chi-v1";

}  // namespace duhamel
