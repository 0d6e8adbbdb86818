#pragma once

#define SPLITKIT_VERSION "0.1.0"

namespace splitkit {

inline constexpr const char* kVersion = SPLITKIT_VERSION;

// Format versions of the on-disk artifacts. Bump on incompatible change.
inline constexpr int kDatasetFormatVersion = 1;
inline constexpr int kSplitFormatVersion = 1;
inline constexpr int kModelFormatVersion = 1;
inline constexpr int kReportFormatVersion = 1;

}  // namespace splitkit
