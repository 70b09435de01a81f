#pragma once

#include <filesystem>
#include <string>

namespace wnetgan {

const char* version();

// Write-then-rename so readers never observe a partial file.
void atomic_write_text(const std::filesystem::path& path, const std::string& content);

}  // namespace wnetgan
