#include "wnetgan/runtime.hpp"

#include <fstream>

#include "wnetgan/errors.hpp"

namespace wnetgan {

const char* version() { return "0.1.0"; }

void atomic_write_text(const std::filesystem::path& path, const std::string& content) {
    std::filesystem::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::trunc);
        if (!out) throw IoError("cannot write " + tmp.string());
        out << content;
        if (!out) throw IoError("short write on " + tmp.string());
    }
    std::filesystem::rename(tmp, path);
}

}  // namespace wnetgan
