#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

// Shared helpers for the test suites.
namespace testutil {

class TempDir {
public:
    explicit TempDir(const std::string& tag) {
        static std::uint64_t counter = 0;
        path_ = std::filesystem::temp_directory_path() /
                ("wase-test-" + tag + "-" + std::to_string(::getpid()) + "-" +
                 std::to_string(counter++));
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    const std::filesystem::path& path() const { return path_; }

private:
    std::filesystem::path path_;
};

inline std::string slurp(const std::filesystem::path& p) {
    std::ifstream is(p, std::ios::binary);
    std::ostringstream ss;
    ss << is.rdbuf();
    return ss.str();
}

inline bool same_bytes(const std::filesystem::path& a, const std::filesystem::path& b) {
    return slurp(a) == slurp(b);
}

inline bool same_dir_bytes(const std::filesystem::path& a, const std::filesystem::path& b) {
    std::size_t count_a = 0;
    for (const auto& entry : std::filesystem::directory_iterator(a)) {
        ++count_a;
        if (!same_bytes(entry.path(), b / entry.path().filename())) return false;
    }
    std::size_t count_b = 0;
    for ([[maybe_unused]] const auto& entry : std::filesystem::directory_iterator(b)) ++count_b;
    return count_a == count_b;
}

}  // namespace testutil
