#ifndef COINFER_VERSION_HPP
#define COINFER_VERSION_HPP

namespace coinfer {

inline constexpr const char* kToolName = "coinfer";
inline constexpr const char* kToolVersion = "0.1.0";

}  // namespace coinfer

#endif  // COINFER_VERSION_HPP
