#pragma once

#include <filesystem>
#include <string>

#include "oltc/network.hpp"

namespace oltc::testing {

inline std::filesystem::path data_path(const std::string& name) {
  return std::filesystem::path(OLTC_DATA_DIR) / name;
}

inline NetworkCase data_case(const std::string& name) { return load_case(data_path(name)); }

}  // namespace oltc::testing
