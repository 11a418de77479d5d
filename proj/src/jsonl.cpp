#include "utilbench/jsonl.hpp"

#include <fstream>
#include <sstream>

#include "utilbench/errors.hpp"

namespace utilbench::jsonl {

namespace fs = std::filesystem;

void read(const fs::path& path,
          const std::function<void(const nlohmann::json&, std::size_t)>& fn) {
    std::ifstream in(path);
    if (!in) {
        throw ParseError("cannot open " + path.string());
    }
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(line);
        } catch (const nlohmann::json::exception& e) {
            throw ParseError(path.string(), line_no, e.what());
        }
        try {
            fn(j, line_no);
        } catch (const nlohmann::json::exception& e) {
            throw ParseError(path.string(), line_no, e.what());
        }
    }
}

void write_file(const fs::path& path, const std::string& contents) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    fs::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw Error("cannot write " + tmp.string());
        out << contents;
        if (!out) throw Error("short write to " + tmp.string());
    }
    fs::rename(tmp, path);
}

void write(const fs::path& path, const std::vector<nlohmann::json>& records) {
    std::ostringstream os;
    for (const auto& r : records) os << r.dump() << '\n';
    write_file(path, os.str());
}

}  // namespace utilbench::jsonl
